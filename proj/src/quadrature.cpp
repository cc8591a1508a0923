#include "lqg/quadrature.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace lqg::quad {

namespace {

constexpr std::size_t kLimit = 2048;

void disable_gsl_abort() {
  static std::once_flag once;
  std::call_once(once, [] { gsl_set_error_handler_off(); });
}

double callback(double x, void* params) {
  return (*static_cast<const std::function<double(double)>*>(params))(x);
}

// Per-thread workspace pool; integrands may themselves integrate, so each
// nesting depth owns its workspace.
class WorkspaceLease {
 public:
  WorkspaceLease() {
    thread_local std::vector<gsl_integration_workspace*> pool;
    thread_local std::size_t depth = 0;
    pool_ = &pool;
    depth_ = &depth;
    if (depth >= pool.size())
      pool.push_back(gsl_integration_workspace_alloc(kLimit));
    w_ = pool[depth];
    ++depth;
  }
  ~WorkspaceLease() { --(*depth_); }
  gsl_integration_workspace* get() const { return w_; }

 private:
  std::vector<gsl_integration_workspace*>* pool_;
  std::size_t* depth_;
  gsl_integration_workspace* w_;
};

void check(int status, double err, double abstol, const char* what) {
  // Roundoff saturation near machine precision is acceptable as long as the
  // reported error meets a relaxed version of the tolerance.
  if (status == GSL_SUCCESS) return;
  if ((status == GSL_EROUND || status == GSL_EMAXITER) && err < 1e4 * abstol)
    return;
  throw std::runtime_error(std::string(what) + ": quadrature failed, status " +
                           gsl_strerror(status));
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double abstol) {
  disable_gsl_abort();
  WorkspaceLease ws;
  gsl_function gf{&callback, const_cast<std::function<double(double)>*>(&f)};
  double result = 0, err = 0;
  const int status = gsl_integration_qag(&gf, a, b, abstol, 1e-12, kLimit,
                                         GSL_INTEG_GAUSS61, ws.get(), &result,
                                         &err);
  check(status, err, abstol, "integrate");
  return result;
}

double integrate_to_inf(const std::function<double(double)>& f, double a,
                        double abstol) {
  disable_gsl_abort();
  WorkspaceLease ws;
  gsl_function gf{&callback, const_cast<std::function<double(double)>*>(&f)};
  double result = 0, err = 0;
  const int status =
      gsl_integration_qagiu(&gf, a, abstol, 1e-12, kLimit, ws.get(), &result,
                            &err);
  check(status, err, abstol, "integrate_to_inf");
  return result;
}

}  // namespace lqg::quad
