#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sscfw/harness.hpp"
#include "sscfw/kl_rates.hpp"
#include "sscfw/ssc.hpp"

#include <cmath>
#include <random>

using namespace sscfw;
using doctest::Approx;

namespace {

Vec v(std::initializer_list<double> xs) {
  Vec out(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) out[i++] = x;
  return out;
}

bool near(const Vec& a, const Vec& b, double tol = 1e-12) { return (a - b).lpNorm<Eigen::Infinity>() <= tol; }

MethodSpec method_of(MethodKind kind) {
  MethodSpec spec;
  spec.kind = kind;
  return spec;
}

// Smallest β > 0 at which y + βd leaves the closed ball, by bisection.
double bisect_exit(const Vec& y, const Vec& d, const Vec& c, double r) {
  double lo = 0.0, hi = 1.0;
  while ((y + hi * d - c).norm() <= r) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    ((y + mid * d - c).norm() <= r ? lo : hi) = mid;
  }
  return lo;
}

struct InteriorQP {
  Objective obj;
  Vec x_star;
  double f_star;
};

// Q SPD and b = Qx* − λ1 make the interior point x* the simplex minimizer.
InteriorQP interior_qp(int n, std::uint64_t seed) {
  const Mat Q = random_spd(n, seed, 1.0, 10.0);
  Vec x_star = random_vector(n, seed + 1, 1.0).cwiseAbs().array() + 0.2;
  x_star /= x_star.sum();
  const Vec b = Q * x_star - 0.7 * Vec::Ones(n);
  auto obj = quadratic_objective(Q, b);
  const double f_star = obj.eval(x_star);
  return {std::move(obj), x_star, f_star};
}

OuterOptions options_for(const Domain& dom, const MethodSpec& spec, double eps, int max_iter) {
  OuterOptions opts;
  opts.tau = theoretical_tau(dom, spec);
  opts.eps_stat = eps;
  opts.max_iter = max_iter;
  return opts;
}

}  // namespace

TEST_CASE("beta at the anchor is the constant 1/L step") {
  std::mt19937_64 rng(71);
  std::normal_distribution<double> gauss;
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + t % 4;
    Vec xbar(n), g(n), d(n);
    for (int i = 0; i < n; ++i) {
      xbar[i] = gauss(rng);
      g[i] = gauss(rng);
      d[i] = gauss(rng);
    }
    if (g.dot(d) <= 0) d = -d;
    const double L = 0.5 + t % 7;
    const SSCRegion region(xbar, g, L);
    const double slope = g.dot(d.normalized());
    CHECK(beta_step(region, xbar, d, slope / L) == Approx(slope / (L * d.norm())).epsilon(1e-12));
  }
}

TEST_CASE("beta examples") {
  const SSCRegion region(Vec::Zero(2), v({1, 0}), 1.0);
  const auto pair = beta_pair(region, Vec::Zero(2), v({1, 0}), 1.0);
  CHECK(pair.inside);
  CHECK(pair.bar == Approx(1.0));
  CHECK(pair.ball == Approx(1.0));
  CHECK(pair.bar == Approx(bisect_exit(Vec::Zero(2), v({1, 0}), region.bar_center(), region.bar_radius())));
  CHECK(pair.beta() == Approx(1.0));

  CHECK(beta_step(region, v({1.2, 0}), v({1, 0}), 1.0) == 0.0);
  CHECK(beta_step(region, v({0.5, 0.6}), v({1, 0}), 1.0) == 0.0);
}

TEST_CASE("beta agrees with bisection inside both balls") {
  std::mt19937_64 rng(73);
  std::normal_distribution<double> gauss;
  for (int t = 0; t < 200; ++t) {
    const Vec xbar = v({gauss(rng), gauss(rng), gauss(rng)});
    const Vec g = v({gauss(rng), gauss(rng), gauss(rng)});
    const SSCRegion region(xbar, g, 2.0);
    const double r = 0.3 * g.norm() / 2.0;
    const Vec y = xbar + 0.5 * (region.bar_center() - xbar) + 0.1 * r * v({gauss(rng), gauss(rng), gauss(rng)}).normalized();
    if (!region.in_bar(y) || !region.in_ball(y, r)) continue;
    const Vec d = v({gauss(rng), gauss(rng), gauss(rng)});
    const double expect =
        std::min(bisect_exit(y, d, region.bar_center(), region.bar_radius()), bisect_exit(y, d, xbar, r));
    CHECK(beta_step(region, y, d, r) == Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("ssc on a stationary anchor") {
  const Domain s3 = make_simplex(3);
  Method method(s3, method_of(MethodKind::FW));
  method.reset(v({1, 0, 0}));
  const auto res = ssc(v({1, 0, 0}), v({1, 0, 0}), method, 1.0);
  CHECK(res.trace.T == 0);
  CHECK(res.trace.termination == Termination::Case1);
  CHECK(res.trace.tilde_index == 0);
  CHECK(near(res.x_tr, v({1, 0, 0})));
}

TEST_CASE("ssc single step in a large box exits both balls together") {
  const Domain box = make_box(2, 10.0);
  Method method(box, method_of(MethodKind::FW));
  const Vec xbar = v({5, 5});
  method.reset(xbar);
  const auto res = ssc(xbar, v({1, 0}), method, 1.0);
  REQUIRE(res.trace.T == 1);
  const auto& step = res.trace.inner[0];
  CHECK(near(step.d, v({5, -5})));
  CHECK(step.beta == Approx(0.1).epsilon(1e-12));
  CHECK(step.alpha == Approx(0.1).epsilon(1e-12));
  CHECK(res.trace.termination == Termination::Case4);
  CHECK(near(res.x_tr, v({5.5, 4.5}), 1e-12));
  CHECK(res.trace.tilde_index == 0);
}

TEST_CASE("case 4 auxiliary index is the smallest slope") {
  SSCTrace trace;
  trace.termination = Termination::Case4;
  trace.T = 3;
  for (double s : {0.9, 0.4, 0.7}) {
    InnerStep step;
    step.slope = s;
    trace.inner.push_back(step);
  }
  CHECK(classify_and_tilde(trace, Vec::Zero(1)) == 1);
  trace.inner[2].slope = 0.4;
  CHECK(classify_and_tilde(trace, Vec::Zero(1)) == 1);
  trace.termination = Termination::Case3;
  CHECK(classify_and_tilde(trace, Vec::Zero(1)) == 2);
  trace.termination = Termination::Case1;
  CHECK(classify_and_tilde(trace, Vec::Zero(1)) == 3);
  trace.termination = Termination::Case2;
  CHECK(classify_and_tilde(trace, Vec::Zero(1)) == 3);
}

TEST_CASE("AFW maximal steps are bounded by the initial active set") {
  std::mt19937_64 rng(79);
  std::normal_distribution<double> gauss;
  for (int t = 0; t < 100; ++t) {
    const int n = 3 + t % 6;
    const Domain dom = t % 2 ? make_simplex(n) : make_l1_ball(n);
    Method method(dom, method_of(MethodKind::AFW));
    const Vec x0 = sample_point(dom, rng);
    method.reset(x0);
    const std::size_t s0 = method.active_set()->size();
    Vec c(n);
    for (int i = 0; i < n; ++i) c[i] = gauss(rng);
    const auto res = ssc(x0, c, method, 1e-4);
    int maximal = 0;
    for (const auto& step : res.trace.inner) maximal += step.was_maximal;
    CHECK(maximal <= static_cast<int>(s0));
  }
}

TEST_CASE("inner iterates decrease the objective and stay in the descent ball") {
  for (MethodKind kind : {MethodKind::AFW, MethodKind::PFW, MethodKind::FDFW, MethodKind::FW}) {
    const auto qp = interior_qp(8, 100 + static_cast<int>(kind));
    const Domain dom = make_simplex(8);
    const MethodSpec spec = method_of(kind);
    auto opts = options_for(dom, kind == MethodKind::FW ? method_of(MethodKind::AFW) : spec, 1e-9, 200);
    int checked = 0;
    opts.on_chain = [&](int, const SSCTrace& trace) {
      if (trace.T == 0) return;
      const Vec& xbar = trace.inner[0].y;
      const Vec g = -qp.obj.grad(xbar);
      const SSCRegion region(xbar, g, qp.obj.lipschitz_L);
      for (int j = 0; j < trace.T; ++j) {
        const double fj = qp.obj.eval(trace.point(j));
        CHECK(qp.obj.eval(trace.point(j + 1)) <= fj + 1e-12 * (1.0 + std::abs(fj)));
        CHECK(region.bar_excess(trace.point(j + 1)) <= 1e-9);
        ++checked;
      }
    };
    outer_solve(qp.obj, dom, spec, default_start(dom), opts);
    CHECK(checked > 0);
  }
}

TEST_CASE("interior simplex QP converges to the KKT point") {
  for (MethodKind kind : {MethodKind::AFW, MethodKind::PFW, MethodKind::FDFW}) {
    const auto qp = interior_qp(10, 200 + static_cast<int>(kind));
    const Domain dom = make_simplex(10);
    const MethodSpec spec = method_of(kind);
    const auto run = outer_solve(qp.obj, dom, spec, default_start(dom), options_for(dom, spec, 1e-10, 20000));
    CHECK(run.converged);
    for (std::size_t k = 0; k < run.records.size(); ++k) {
      CHECK(run.records[k].f_tr <= run.records[k].f_k + 1e-14);
      if (k > 0) CHECK(run.records[k].f_k == run.records[k - 1].f_tr);
    }
    CHECK(run.f_final() - qp.f_star <= 1e-8);
    CHECK(run.f_final() - qp.f_star >= -1e-12);
    CHECK(verify_descent(run, qp.obj, dom, run.tau).pass());
  }
}

TEST_CASE("stationary start yields a single record") {
  const Domain s3 = make_simplex(3);
  const auto obj = linear_objective(v({1, 0, 0}));
  const auto run = outer_solve(obj, s3, method_of(MethodKind::AFW), v({1, 0, 0}), options_for(s3, method_of(MethodKind::AFW), 1e-8, 100));
  REQUIRE(run.records.size() == 1);
  CHECK(run.records[0].termination_case == Termination::Stationary);
  CHECK(run.converged);
}

TEST_CASE("linear objectives terminate at a vertex minimizer") {
  std::mt19937_64 rng(83);
  std::normal_distribution<double> gauss;
  for (int t = 0; t < 30; ++t) {
    const int n = 3 + t % 5;
    const Domain dom = t % 3 == 0 ? make_simplex(n) : t % 3 == 1 ? make_l1_ball(n) : make_box(n);
    Vec c(n);
    for (int i = 0; i < n; ++i) c[i] = gauss(rng);
    const auto obj = linear_objective(c);
    for (MethodKind kind : {MethodKind::AFW, MethodKind::PFW, MethodKind::FDFW}) {
      const MethodSpec spec = method_of(kind);
      const auto run = outer_solve(obj, dom, spec, default_start(dom), options_for(dom, spec, 0.0, 1000));
      CHECK(run.converged);
      CHECK(run.records.back().termination_case == Termination::Stationary);
      CHECK(run.f_final() == Approx(-lmo(dom, c).dot(c)).epsilon(1e-12));
    }
  }
}

TEST_CASE("descent certificate negative control") {
  const auto qp = interior_qp(6, 300);
  const Domain dom = make_simplex(6);
  const MethodSpec spec = method_of(MethodKind::AFW);
  const auto run = outer_solve(qp.obj, dom, spec, default_start(dom), options_for(dom, spec, 1e-9, 500));
  REQUIRE(run.records.size() > 3);
  DescentSeries series = descent_series(run);
  CHECK(verify_descent(series).pass());
  series.f_tr[2] = series.f_k[2] + 1.0;
  const auto rep = verify_descent(series);
  CHECK_FALSE(rep.pass());
  const auto* check = rep.find(check_names::kSufficientDecrease);
  REQUIRE(check != nullptr);
  CHECK_FALSE(check->pass());
  REQUIRE_FALSE(check->failing_k.empty());
  CHECK(check->failing_k.front() == 2);

  RunTrace bad = run;
  bad.records[1].x_tr = bad.records[1].x_k;
  CHECK_FALSE(verify_descent(bad, qp.obj, dom, run.tau).find(check_names::kStepVsProjectedGradient)->pass());
}

TEST_CASE("single step running-min bound") {
  const auto qp = interior_qp(5, 400);
  const Domain dom = make_simplex(5);
  const MethodSpec spec = method_of(MethodKind::PFW);
  const auto run = outer_solve(qp.obj, dom, spec, default_start(dom), options_for(dom, spec, 0.0, 1));
  REQUIRE(run.records.size() == 1);
  const auto& r = run.records[0];
  CHECK((r.x_tr - r.x_k).squaredNorm() <= 2.0 * (r.f_k - r.f_tr) / run.L + 1e-15);
  const auto rep = verify_descent(run, qp.obj, dom, run.tau);
  CHECK(rep.find(check_names::kRunningMinRate)->pass());
  CHECK(rep.find(check_names::kRunningMinRate)->checked == 1);
}

TEST_CASE("improvement hook obeys the acceptance rule") {
  const auto qp = interior_qp(6, 500);
  const Domain dom = make_simplex(6);
  const MethodSpec spec = method_of(MethodKind::AFW);
  auto opts = options_for(dom, spec, 1e-9, 50);
  const double L = qp.obj.lipschitz_L;
  std::vector<bool> admissible;
  std::vector<Vec> offered;
  opts.improve = [&](const Vec& x, const Vec& x_tr) -> std::optional<Vec> {
    // The plain transition point always satisfies the rule; the minimizer may not.
    const Vec cand = offered.size() % 2 ? Vec(x_tr) : qp.x_star;
    const double fc = qp.obj.eval(cand);
    admissible.push_back(fc <= std::min(qp.obj.eval(x_tr), qp.obj.eval(x) - 0.5 * L * (cand - x).squaredNorm()));
    offered.push_back(cand);
    return cand;
  };
  const auto run = outer_solve(qp.obj, dom, spec, default_start(dom), opts);
  REQUIRE(run.records.size() >= 2);
  bool accepted_any = false;
  for (std::size_t k = 1; k < run.records.size(); ++k) {
    const bool took = near(run.records[k].x_k, offered[k - 1], 0.0);
    CHECK(took == admissible[k - 1]);
    if (!took) CHECK(near(run.records[k].x_k, run.records[k - 1].x_tr, 0.0));
    accepted_any = accepted_any || took;
  }
  CHECK(accepted_any);
}

TEST_CASE("infeasible start is rejected") {
  const auto obj = linear_objective(v({1, 0}));
  try {
    outer_solve(obj, make_simplex(2), method_of(MethodKind::AFW), v({0.7, 0.7}), OuterOptions{});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Infeasible);
  }
}
