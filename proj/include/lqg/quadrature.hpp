#ifndef LQG_QUADRATURE_HPP
#define LQG_QUADRATURE_HPP

#include <functional>

namespace lqg::quad {

// Adaptive Gauss-Kronrod on [a,b], absolute tolerance abstol.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abstol = 1e-10);

// Adaptive quadrature on [a, inf).
double integrate_to_inf(const std::function<double(double)>& f, double a,
                        double abstol = 1e-10);

}  // namespace lqg::quad

#endif
