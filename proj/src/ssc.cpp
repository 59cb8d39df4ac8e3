#include "sscfw/ssc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace sscfw {

const char* to_string(Termination t) {
  switch (t) {
    case Termination::Stationary: return "Stationary";
    case Termination::Case1: return "Case1";
    case Termination::Case2: return "Case2";
    case Termination::Case3: return "Case3";
    case Termination::Case4: return "Case4";
  }
  return "?";
}

Termination termination_from_string(const std::string& s) {
  for (auto t : {Termination::Stationary, Termination::Case1, Termination::Case2, Termination::Case3, Termination::Case4})
    if (s == to_string(t)) return t;
  fail(ErrorKind::InvalidInput, "unknown termination case '" + s + "'");
}

namespace {

constexpr double kBallTol = 1e-10;
constexpr double kCaseTol = 1e-9;

// Largest β ≥ 0 with ‖w + βd‖² ≤ ‖w‖² + slack, where w·d = proj and ‖d‖² = dd.
double ball_root(double proj, double dd, double slack) {
  slack = std::max(slack, 0.0);
  const double disc = std::sqrt(proj * proj + dd * slack);
  if (proj <= 0.0) return (-proj + disc) / dd;
  const double denom = proj + disc;
  return denom > 0.0 ? slack / denom : 0.0;
}

}  // namespace

double SSCRegion::bar_excess(const Vec& y) const {
  const Vec e = y - anchor;
  return L * e.squaredNorm() - e.dot(g);
}

bool SSCRegion::in_bar(const Vec& y) const {
  const double r = bar_radius();
  return bar_excess(y) / L <= 2.0 * kBallTol * r * r;
}

bool SSCRegion::in_ball(const Vec& y, double j_radius) const {
  return (y - anchor).norm() <= j_radius * (1.0 + kBallTol);
}

BetaPair beta_pair(const SSCRegion& region, const Vec& y, const Vec& d, double j_radius) {
  const double dd = d.squaredNorm();
  if (dd == 0.0) fail(ErrorKind::InvalidInput, "beta_step needs a nonzero direction");
  BetaPair out;
  out.inside = region.in_bar(y) && region.in_ball(y, j_radius);
  const Vec e = y - region.anchor;
  const double ed = e.dot(d);
  // Shifted to the center x̄ + g/2L: ⟨y−c, d⟩ and r² − ‖y−c‖² = (⟨e,g⟩ − L‖e‖²)/L.
  out.bar = ball_root(ed - region.g.dot(d) / (2.0 * region.L), dd, -region.bar_excess(y) / region.L);
  out.ball = ball_root(ed, dd, j_radius * j_radius - e.squaredNorm());
  return out;
}

double beta_step(const SSCRegion& region, const Vec& y, const Vec& d, double j_radius) {
  return beta_pair(region, y, d, j_radius).beta();
}

SSCResult ssc(const Vec& xbar, const Vec& g, Method& method, double L, const SSCOptions& opts) {
  if (!(L > 0.0)) fail(ErrorKind::InvalidInput, "ssc needs L > 0");
  const SSCRegion region(xbar, g, L);
  SSCResult out;
  auto& tr = out.trace;
  method.begin_chain(g);
  Vec y = xbar;
  for (long j = 0;; ++j) {
    if (j >= opts.inner_cap) fail(ErrorKind::NonTermination, "SSC exceeded the inner iteration cap");
    DirectionChoice choice = method.select(y, g);
    if (opts.observer) opts.observer(y, g, choice);
    if (choice.is_zero()) {
      tr.termination = Termination::Case1;
      break;
    }
    const double dn = choice.d.norm();
    const double slope = g.dot(choice.d) / dn;
    const BetaPair bp = beta_pair(region, y, choice.d, slope / L);
    const double beta = bp.beta();
    const double alpha = std::min(choice.alpha_max, beta);
    if (alpha <= 0.0) {
      tr.termination = Termination::Case2;
      break;
    }
    InnerStep step;
    step.y = y;
    step.d = choice.d;
    step.alpha = alpha;
    step.beta = beta;
    step.alpha_max = choice.alpha_max;
    step.was_maximal = alpha < beta;
    step.slope = slope;
    step.kind = choice.kind;
    y = y + alpha * choice.d;
    method.commit(choice, alpha);
    tr.inner.push_back(std::move(step));
    if (alpha == beta) {
      tr.termination = bp.bar <= bp.ball * (1.0 + kCaseTol) ? Termination::Case4 : Termination::Case3;
      break;
    }
  }
  tr.T = static_cast<int>(tr.inner.size());
  tr.y_final = y;
  tr.tilde_index = classify_and_tilde(tr, g);
  out.x_tr = y;
  return out;
}

int classify_and_tilde(const SSCTrace& trace, const Vec&) {
  switch (trace.termination) {
    case Termination::Stationary:
    case Termination::Case1:
    case Termination::Case2: return trace.T;
    case Termination::Case3: return trace.T - 1;
    case Termination::Case4: {
      int best = 0;
      for (int j = 1; j < trace.T; ++j)
        if (trace.inner[j].slope < trace.inner[best].slope) best = j;
      return best;
    }
  }
  return trace.T;
}

RunTrace outer_solve(const Objective& obj, const Domain& dom, const MethodSpec& spec, const Vec& x0,
                     const OuterOptions& opts) {
  require_feasible(dom, x0, "outer_solve start");
  if (!(opts.tau > 0.0)) fail(ErrorKind::InvalidInput, "outer_solve needs tau > 0");
  const auto start = std::chrono::steady_clock::now();
  const double L = obj.lipschitz_L;
  RunTrace run;
  run.L = L;
  run.tau = opts.tau;
  const double K = run.K();
  Method method(dom, spec);
  method.reset(x0);
  Vec x = x0;
  double fx = obj.eval(x);
  for (int k = 0; k < opts.max_iter; ++k) {
    const Vec g = -obj.grad(x);
    SSCResult res = ssc(x, g, method, L, opts.ssc);
    if (opts.on_chain) opts.on_chain(k, res.trace);
    OuterStepRecord rec;
    rec.k = k;
    rec.x_k = x;
    rec.f_k = fx;
    rec.x_tr = res.x_tr;
    rec.f_tr = obj.eval(res.x_tr);
    rec.x_tilde = res.trace.point(res.trace.tilde_index);
    rec.f_tilde = obj.eval(rec.x_tilde);
    rec.inner_steps = res.trace.T;
    const bool stationary = res.trace.termination == Termination::Case1 && res.trace.T == 0;
    rec.termination_case = stationary ? Termination::Stationary : res.trace.termination;
    rec.proj_grad_at_tilde = tangent_projection(dom, rec.x_tilde, -obj.grad(rec.x_tilde)).pi_norm;
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    const double proxy = (rec.x_tr - x).norm() / K;
    run.records.push_back(rec);
    if (stationary || proxy <= opts.eps_stat) {
      run.converged = true;
      break;
    }
    Vec next = res.x_tr;
    double fnext = rec.f_tr;
    if (opts.improve) {
      if (auto cand = opts.improve(x, res.x_tr)) {
        require_feasible(dom, *cand, "improvement callback");
        const double fc = obj.eval(*cand);
        if (fc <= std::min(rec.f_tr, fx - 0.5 * L * (*cand - x).squaredNorm())) {
          next = *cand;
          fnext = fc;
          method.reset(next);
        }
      }
    }
    x = next;
    fx = fnext;
  }
  run.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

DescentSeries descent_series(const RunTrace& run) {
  DescentSeries s;
  s.L = run.L;
  s.tau = run.tau;
  for (const auto& r : run.records) {
    s.f_k.push_back(r.f_k);
    s.f_tr.push_back(r.f_tr);
    s.step_len.push_back((r.x_tr - r.x_k).norm());
    s.pi_tilde.push_back(r.proj_grad_at_tilde);
    s.f_tilde.push_back(r.f_tilde);
    s.tilde_dist.push_back((r.x_tilde - r.x_k).norm());
  }
  return s;
}

void InequalityCheck::record(int k, double violation, double tol) {
  ++checked;
  if (worst_k < 0 || violation > worst_violation) {
    worst_violation = violation;
    worst_k = k;
  }
  if (!(violation <= tol)) {
    ++failures;
    if (failing_k.size() < 32) failing_k.push_back(k);
  }
}

bool CertificationReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const InequalityCheck& c) { return c.pass(); });
}

const InequalityCheck* CertificationReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

std::string CertificationReport::summary() const {
  std::ostringstream os;
  os.precision(6);
  for (const auto& c : checks) {
    os << (c.pass() ? "PASS " : "FAIL ") << c.name << " [" << c.statement << "] checked=" << c.checked
       << " failures=" << c.failures << " worst_violation=" << c.worst_violation << " at k=" << c.worst_k << "\n";
  }
  for (const auto& n : notes) os << "note: " << n << "\n";
  return os.str();
}

namespace {
InequalityCheck make_check(const char* name, const char* statement) {
  InequalityCheck c;
  c.name = name;
  c.statement = statement;
  return c;
}
}  // namespace

CertificationReport verify_descent(const DescentSeries& s) {
  namespace cn = check_names;
  CertificationReport rep;
  const std::size_t n = s.size();
  if (n == 0) {
    rep.notes.push_back("empty trace");
    return rep;
  }
  const double L = s.L;
  const double K = s.K();
  const double f0 = s.f_k.front();
  const double f_final = s.f_tr.back();
  const double tol = 1e-8 * (1.0 + std::abs(f0));

  InequalityCheck decrease = make_check(cn::kSufficientDecrease, "f(x_k) - f(x_tr) >= L/2 |x_k - x_tr|^2");
  InequalityCheck step = make_check(cn::kStepVsProjectedGradient, "|x_k - x_tr| >= K pi(x~)");
  InequalityCheck sandwich = make_check(cn::kAuxiliarySandwich, "f(x_tr) <= f(x~) <= f(x_k) - L/2 |x_k - x~|^2");
  InequalityCheck rate = make_check(cn::kRunningMinRate, "min_i |x_tr_i - x_i|/K <= sqrt(2(f0 - f_final)/(K^2 L (k+1)))");
  InequalityCheck h2a = make_check(cn::kDecreaseVsProjectedGradient, "f(x_k) - f(x_tr) >= (L/2) K^2 pi(x~)^2");
  InequalityCheck closer = make_check(cn::kAuxiliaryCloser, "|x~ - x_k| <= |x_tr - x_k|");

  double running_min = kInf;
  for (std::size_t k = 0; k < n; ++k) {
    const int kk = static_cast<int>(k);
    const double drop = s.f_k[k] - s.f_tr[k];
    decrease.record(kk, 0.5 * L * s.step_len[k] * s.step_len[k] - drop, tol);
    step.record(kk, K * s.pi_tilde[k] - s.step_len[k], tol);
    sandwich.record(kk,
                    std::max(s.f_tr[k] - s.f_tilde[k],
                             s.f_tilde[k] - (s.f_k[k] - 0.5 * L * s.tilde_dist[k] * s.tilde_dist[k])),
                    tol);
    h2a.record(kk, 0.5 * L * K * K * s.pi_tilde[k] * s.pi_tilde[k] - drop, tol);
    closer.record(kk, s.tilde_dist[k] - s.step_len[k], tol);
    running_min = std::min(running_min, s.step_len[k] / K);
    const double bound = std::sqrt(std::max(0.0, 2.0 * (f0 - f_final)) / (K * K * L * (k + 1.0)));
    rate.record(kk, running_min - bound, 1e-8 * (1.0 + bound));
  }
  rep.checks = {decrease, step, sandwich, rate, h2a, closer};
  return rep;
}

CertificationReport verify_descent(const RunTrace& run, const Objective& obj, const Domain& dom, double tau) {
  DescentSeries s;
  s.L = run.L;
  s.tau = tau;
  for (const auto& r : run.records) {
    s.f_k.push_back(obj.eval(r.x_k));
    s.f_tr.push_back(obj.eval(r.x_tr));
    s.step_len.push_back((r.x_tr - r.x_k).norm());
    s.pi_tilde.push_back(tangent_projection(dom, r.x_tilde, -obj.grad(r.x_tilde)).pi_norm);
    s.f_tilde.push_back(obj.eval(r.x_tilde));
    s.tilde_dist.push_back((r.x_tilde - r.x_k).norm());
  }
  return verify_descent(s);
}

}  // namespace sscfw
