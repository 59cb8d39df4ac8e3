#pragma once

#include "sscfw/types.hpp"

#include <functional>
#include <string>

namespace sscfw {

// Smooth objective with an explicit gradient Lipschitz constant.
struct Objective {
  std::function<double(const Vec&)> eval;
  std::function<Vec(const Vec&)> grad;
  double lipschitz_L = 1.0;
  int dim = 0;
};

// f(x) = ½ xᵀQx − bᵀx. L is the spectral radius of Q from power iteration.
Objective quadratic_objective(const Mat& Q, const Vec& b);

// f(x) = −⟨c, x⟩ with a nominal L (any positive value is valid).
Objective linear_objective(const Vec& c, double nominal_L = 1.0);

// f(x) = Σ cos(x_i) + ½ ρ ‖x‖², nonconvex for ρ < 1, gradient Lipschitz 1 + ρ.
Objective cosine_objective(int dim, double rho = 0.1);

double spectral_radius(const Mat& Q, double tol = 1e-10, int max_iter = 200000);

double finite_difference_grad_check(const Objective& obj, const Vec& x, double h);

}  // namespace sscfw
