#include "sscfw/objective.hpp"

#include <cmath>

namespace sscfw {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::Infeasible: return "infeasibility";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::RetractionUndefined: return "retraction-undefined";
    case ErrorKind::InvalidActiveSet: return "invalid-active-set";
    case ErrorKind::NumericConsistency: return "numeric-consistency";
    case ErrorKind::NonTermination: return "non-termination";
    case ErrorKind::Unsupported: return "unsupported";
  }
  return "unknown";
}

double spectral_radius(const Mat& Q, double tol, int max_iter) {
  const Eigen::Index n = Q.rows();
  if (n == 0) return 0.0;
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = 1.0 + 0.1 * std::sin(1.0 + 7.0 * static_cast<double>(i));
  v.normalize();
  // Power iteration on QᵀQ so that eigenvalues ±ρ do not oscillate.
  double rho = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const Vec w = Q * v;
    const double next = w.norm();
    if (next == 0.0) return 0.0;
    Vec u = Q.transpose() * w;
    const double nu = u.norm();
    if (nu == 0.0) return next;
    v = u / nu;
    if (it > 2 && std::abs(next - rho) <= 1e-4 * tol * next) return std::max(next, (Q * v).norm());
    rho = next;
  }
  return std::max(rho, (Q * v).norm());
}

Objective quadratic_objective(const Mat& Q, const Vec& b) {
  if (Q.rows() != Q.cols() || Q.rows() != b.size())
    fail(ErrorKind::InvalidInput, "quadratic objective dimensions disagree");
  const double scale = std::max(Q.norm(), 1e-300);
  if ((Q - Q.transpose()).norm() > 1e-12 * scale)
    fail(ErrorKind::InvalidInput, "quadratic objective matrix is not symmetric");
  Objective obj;
  obj.dim = static_cast<int>(b.size());
  obj.eval = [Q, b](const Vec& x) { return 0.5 * x.dot(Q * x) - b.dot(x); };
  obj.grad = [Q, b](const Vec& x) -> Vec { return Q * x - b; };
  obj.lipschitz_L = spectral_radius(Q);
  if (obj.lipschitz_L <= 0.0) obj.lipschitz_L = 1.0;
  return obj;
}

Objective linear_objective(const Vec& c, double nominal_L) {
  if (!(nominal_L > 0.0)) fail(ErrorKind::InvalidInput, "linear objective needs a positive L");
  Objective obj;
  obj.dim = static_cast<int>(c.size());
  obj.eval = [c](const Vec& x) { return -c.dot(x); };
  obj.grad = [c](const Vec&) -> Vec { return -c; };
  obj.lipschitz_L = nominal_L;
  return obj;
}

Objective cosine_objective(int dim, double rho) {
  Objective obj;
  obj.dim = dim;
  obj.eval = [rho](const Vec& x) { return x.array().cos().sum() + 0.5 * rho * x.squaredNorm(); };
  obj.grad = [rho](const Vec& x) -> Vec { return (-x.array().sin()).matrix() + rho * x; };
  obj.lipschitz_L = 1.0 + std::abs(rho);
  return obj;
}

double finite_difference_grad_check(const Objective& obj, const Vec& x, double h) {
  if (!(h > 0.0)) fail(ErrorKind::InvalidInput, "finite difference step must be positive");
  const Vec g = obj.grad(x);
  double worst = 0.0;
  Vec probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double fp = obj.eval(probe);
    probe[i] = x[i] - h;
    const double fm = obj.eval(probe);
    probe[i] = x[i];
    worst = std::max(worst, std::abs((fp - fm) / (2.0 * h) - g[i]));
  }
  return worst;
}

}  // namespace sscfw
