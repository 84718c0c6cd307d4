#pragma once

#include <functional>
#include <limits>

#include "qres/types.hpp"

namespace qres {

struct NelderMeadOptions {
  double initial_step = 0.5;
  double size_tol = 1e-8;  // characteristic simplex size at convergence
  int max_iter = 20000;
  int restarts = 1;        // fresh simplexes around the incumbent after convergence
  // Known lower bound of f: reaching it ends the search, since a flat optimum never shrinks the simplex.
  double stop_below = -std::numeric_limits<double>::infinity();
};

struct NelderMeadResult {
  RVector x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Minimizes f starting from x0 (GSL nmsimplex2).
using Objective = std::function<double(Eigen::Ref<const RVector>)>;

NelderMeadResult nelder_mead(const Objective& f, const RVector& x0,
                             const NelderMeadOptions& opt = {});

}  // namespace qres
