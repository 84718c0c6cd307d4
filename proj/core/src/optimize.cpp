#include "qres/optimize.hpp"

#include <memory>

#include <gsl/gsl_multimin.h>

#include "detail.hpp"

namespace qres {

namespace {

double trampoline(const gsl_vector* v, void* params) {
  const auto& f = *static_cast<const Objective*>(params);
  const auto n = static_cast<Eigen::Index>(v->size);
  if (v->stride == 1) return f(Eigen::Map<const RVector>(v->data, n));
  const Eigen::Map<const RVector, 0, Eigen::InnerStride<>> x(v->data, n,
                                                           Eigen::InnerStride<>(static_cast<Eigen::Index>(v->stride)));
  return f(RVector(x));
}

struct VectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
struct MinimizerDeleter {
  void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};

}  // namespace

NelderMeadResult nelder_mead(const Objective& f, const RVector& x0, const NelderMeadOptions& opt) {
  const auto n = static_cast<std::size_t>(x0.size());
  if (n == 0) throw DomainError("nothing to optimize");
  detail::quiet_gsl();
  gsl_multimin_function fn{&trampoline, n, const_cast<Objective*>(&f)};

  NelderMeadResult res;
  res.x = x0;
  res.value = f(x0);
  if (res.value <= opt.stop_below) {
    res.converged = true;
    return res;
  }
  std::unique_ptr<gsl_vector, VectorDeleter> x(gsl_vector_alloc(n)), step(gsl_vector_alloc(n));
  std::unique_ptr<gsl_multimin_fminimizer, MinimizerDeleter> mm(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n));

  double step_size = opt.initial_step;
  for (int round = 0; round <= opt.restarts; ++round) {
    for (std::size_t i = 0; i < n; ++i) gsl_vector_set(x.get(), i, res.x(static_cast<Eigen::Index>(i)));
    gsl_vector_set_all(step.get(), step_size);
    gsl_multimin_fminimizer_set(mm.get(), &fn, x.get(), step.get());
    bool converged = false, floor = false;
    for (int it = 0; it < opt.max_iter; ++it) {
      ++res.iterations;
      if (gsl_multimin_fminimizer_iterate(mm.get()) != GSL_SUCCESS) break;
      if (gsl_multimin_fminimizer_minimum(mm.get()) <= opt.stop_below) {
        converged = floor = true;
        break;
      }
      if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(mm.get()), opt.size_tol) == GSL_SUCCESS) {
        converged = true;
        break;
      }
    }
    const double v = gsl_multimin_fminimizer_minimum(mm.get());
    if (v <= res.value) {
      res.value = v;
      const gsl_vector* best = gsl_multimin_fminimizer_x(mm.get());
      for (std::size_t i = 0; i < n; ++i) res.x(static_cast<Eigen::Index>(i)) = gsl_vector_get(best, i);
    }
    res.converged = converged;
    if (floor) break;
    step_size *= 0.1;
  }
  return res;
}

}  // namespace qres
