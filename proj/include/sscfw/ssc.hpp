#pragma once

#include "sscfw/directions.hpp"
#include "sscfw/objective.hpp"
#include "sscfw/trace.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sscfw {

// Ω_j = B̄(x̄ + g/2L, ‖g‖/2L) ∩ B(x̄, ⟨g, d̂_j⟩/L).
struct SSCRegion {
  Vec anchor;  // x̄
  Vec g;
  double L = 1.0;

  SSCRegion(Vec anchor_, Vec g_, double L_) : anchor(std::move(anchor_)), g(std::move(g_)), L(L_) {}
  Vec bar_center() const { return anchor + g / (2.0 * L); }
  double bar_radius() const { return g.norm() / (2.0 * L); }
  // L‖y−x̄‖² − ⟨y−x̄, g⟩, nonpositive exactly on B̄.
  double bar_excess(const Vec& y) const;
  bool in_bar(const Vec& y) const;
  bool in_ball(const Vec& y, double j_radius) const;
};

struct BetaPair {
  double bar = 0.0;   // largest step keeping y + βd in B̄
  double ball = 0.0;  // largest step keeping y + βd in B_j
  bool inside = false;
  double beta() const { return inside ? std::min(bar, ball) : 0.0; }
};

BetaPair beta_pair(const SSCRegion& region, const Vec& y, const Vec& d, double j_radius);
double beta_step(const SSCRegion& region, const Vec& y, const Vec& d, double j_radius);

struct InnerStep {
  Vec y;
  Vec d;
  double alpha = 0.0;
  double beta = 0.0;
  double alpha_max = 0.0;
  bool was_maximal = false;
  double slope = 0.0;  // ⟨g, d̂⟩
  DirectionKind kind = DirectionKind::Zero;
};

struct SSCTrace {
  std::vector<InnerStep> inner;  // steps j = 0..T−1
  Vec y_final;                   // y_T
  Termination termination = Termination::Case1;
  int T = 0;
  int tilde_index = 0;

  const Vec& point(int j) const { return j == T ? y_final : inner[j].y; }
};

using DirectionObserver = std::function<void(const Vec& y, const Vec& g, const DirectionChoice& choice)>;

struct SSCOptions {
  long inner_cap = 1000000;
  DirectionObserver observer;
};

struct SSCResult {
  Vec x_tr;
  SSCTrace trace;
};

SSCResult ssc(const Vec& xbar, const Vec& g, Method& method, double L, const SSCOptions& opts = {});

int classify_and_tilde(const SSCTrace& trace, const Vec& g);

struct OuterOptions {
  int max_iter = 1000;
  double eps_stat = 1e-8;
  double tau = 0.5;
  SSCOptions ssc;
  // Optional improvement of x_tr; accepted only when it satisfies the acceptance rule.
  std::function<std::optional<Vec>(const Vec& x_k, const Vec& x_tr)> improve;
  // Called after each SSC with the full inner trace.
  std::function<void(int k, const SSCTrace&)> on_chain;
};

RunTrace outer_solve(const Objective& obj, const Domain& dom, const MethodSpec& spec, const Vec& x0,
                     const OuterOptions& opts);

// Per-iteration scalars sufficient for the descent certificates.
struct DescentSeries {
  std::vector<double> f_k, f_tr, step_len, pi_tilde, f_tilde, tilde_dist;
  double L = 1.0;
  double tau = 1.0;

  double K() const { return tau / (L * (1.0 + tau)); }
  std::size_t size() const { return f_k.size(); }
};

DescentSeries descent_series(const RunTrace& run);

struct InequalityCheck {
  std::string name;
  std::string statement;
  int checked = 0;
  int failures = 0;
  double worst_violation = 0.0;  // largest amount by which the inequality is violated (≤ 0 when it holds)
  int worst_k = -1;
  std::vector<int> failing_k;

  bool pass() const { return failures == 0; }
  void record(int k, double violation, double tol);
};

struct CertificationReport {
  std::vector<InequalityCheck> checks;
  std::vector<std::string> notes;

  bool pass() const;
  const InequalityCheck* find(const std::string& name) const;
  std::string summary() const;
};

namespace check_names {
inline constexpr const char* kSufficientDecrease = "sufficient-decrease";
inline constexpr const char* kStepVsProjectedGradient = "step-vs-projected-gradient";
inline constexpr const char* kAuxiliarySandwich = "auxiliary-point-sandwich";
inline constexpr const char* kRunningMinRate = "running-min-rate";
inline constexpr const char* kDecreaseVsProjectedGradient = "decrease-vs-projected-gradient";
inline constexpr const char* kAuxiliaryCloser = "auxiliary-point-distance";
}  // namespace check_names

CertificationReport verify_descent(const DescentSeries& series);
// Recomputes f and π from obj/dom at the recorded points before checking.
CertificationReport verify_descent(const RunTrace& run, const Objective& obj, const Domain& dom, double tau);

}  // namespace sscfw
