#pragma once

#include "sscfw/directions.hpp"
#include "sscfw/trace.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sscfw {

// φ(t) = (M/θ) t^θ.
struct PowerForm {
  double M = 1.0;
  double theta = 0.5;
};

struct GeneralForm {
  std::function<double(double)> phi_prime;
  std::function<double(double)> phi;
};

struct Desingularizer {
  std::variant<PowerForm, GeneralForm> form = PowerForm{};
  double eta = kInf;
  std::optional<double> delta;

  static Desingularizer power(double M, double theta, double eta = kInf);
  double phi(double t) const;
  double phi_prime(double t) const;
  void validate() const;
};

// α(t) = (b/√a) φ′(t).
struct RateConstants {
  double a = 1.0;
  double b = 1.0;

  double alpha(const Desingularizer& desing, double t) const;
};

// a = L/2 and b = 1/K with K = τ/(L(1+τ)).
RateConstants ssc_rate_constants(double L, double tau);

double sigma_alpha(const RateConstants& rc, const Desingularizer& desing, double t);
std::vector<double> sigma_iterates(const RateConstants& rc, const Desingularizer& desing, double f0, int k);

// Geometric ratio for θ = ½, P/(k+1)^r with r = 1/(1−2θ) otherwise.
double holder_envelope(double theta, double M, double a, double b, int k, double f0 = 0.0);

struct RateCertificate {
  std::string name;
  std::vector<bool> pass_at;
  std::vector<double> lhs, rhs;
  int failures = 0;
  double worst_violation = -kInf;
  int worst_k = -1;
  std::vector<std::string> notes;

  bool pass() const { return failures == 0; }
};

// f_k − f* ≤ σ^{(k)}(f_0 − f*) + tol.
RateCertificate certify_objective_rate(const std::vector<double>& f, const Desingularizer& desing,
                                       const RateConstants& rc, double f_star);
RateCertificate certify_objective_rate(const RunTrace& run, const Desingularizer& desing, const RateConstants& rc,
                                       double f_star);

// Σ_{i≥k} ‖x_{i+1} − x_i‖ ≤ (b/a)φ(gap_k) + 2√((gap_k − σ(gap_k))/a) + tol, where tol also absorbs
// objective roundoff through the square root.
RateCertificate certify_tail_length(const std::vector<double>& f, const std::vector<double>& step_len,
                                    const Desingularizer& desing, const RateConstants& rc, double f_star);
RateCertificate certify_tail_length(const RunTrace& run, const Desingularizer& desing, const RateConstants& rc,
                                    double f_star);

// Returns +∞ when no admissible direction exists.
double pyramidal_width_bruteforce(const std::vector<Vec>& atoms, int grid = 6);
// min over proper faces F of dist(conv F, conv(A∖F)).
double facial_distance(const std::vector<Vec>& atoms);
double min_norm_point(const std::vector<Vec>& points);
std::vector<std::vector<int>> face_atom_sets(const std::vector<Vec>& atoms);

// Pyramidal width of the vertex set of a Simplex, L1Ball or Box.
double polytope_pwidth(const AtomPolytope& p);

struct TauOptions {
  std::optional<double> pwidth;  // overrides the closed form for polytope blocks
  std::uint64_t seed = 12345;
  int lp_samples = 20000;
};

double theoretical_tau(const Domain& dom, const MethodSpec& spec, const TauOptions& opts = {});
// Sampled infimum of D_h(x,y)/(‖∇h(x)−∇h(y)‖‖x−y‖) over boundary pairs of an Lp ball.
double lp_boundary_ratio_estimate(int dim, double p, int samples, std::uint64_t seed);

}  // namespace sscfw
