#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sscfw/directions.hpp"

#include <algorithm>
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

Vec gaussian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Vec g(n);
  for (int i = 0; i < n; ++i) g[i] = gauss(rng);
  return g;
}

ActiveSet make_set(std::vector<Vec> atoms, std::vector<double> weights) {
  ActiveSet S;
  S.atoms = std::move(atoms);
  S.weights = std::move(weights);
  return S;
}

// Random proper convex combination of distinct vertices.
ActiveSet random_active_set(const Domain& dom, std::mt19937_64& rng) {
  auto verts = explicit_vertices(dom);
  std::shuffle(verts.begin(), verts.end(), rng);
  const int m = 1 + static_cast<int>(rng() % verts.size());
  std::exponential_distribution<double> expo;
  ActiveSet S;
  double sum = 0.0;
  for (int i = 0; i < m; ++i) {
    S.atoms.push_back(verts[i]);
    S.weights.push_back(0.05 + expo(rng));
    sum += S.weights.back();
  }
  for (double& w : S.weights) w /= sum;
  return S;
}

const Vec e1 = v({1, 0, 0}), e2 = v({0, 1, 0});

}  // namespace

TEST_CASE("FW direction examples") {
  auto c = fw_direction(make_simplex(3), Vec::Constant(3, 1.0 / 3.0), v({0, 1, 0}));
  CHECK(c.kind == DirectionKind::FW);
  CHECK(near(c.d, v({-1.0 / 3.0, 2.0 / 3.0, -1.0 / 3.0})));
  CHECK(c.alpha_max == 1.0);

  CHECK(fw_direction(make_simplex(3), e2, v({0, 1, 0})).is_zero());

  c = fw_direction(make_lp_ball(2, 2.0), Vec::Zero(2), v({3, 4}));
  CHECK(near(c.d, v({0.6, 0.8})));
}

TEST_CASE("AFW direction examples") {
  const Domain s3 = make_simplex(3);
  const Vec x = v({0.75, 0.25, 0});
  const ActiveSet S = make_set({e1, e2}, {0.75, 0.25});
  const Vec g = v({1, -2, 0});
  auto c = afw_direction(s3, x, g, S);
  CHECK(c.kind == DirectionKind::Away);
  CHECK(near(c.d, v({0.75, -0.75, 0})));
  CHECK(g.dot(c.d) == Approx(2.25));
  CHECK(c.alpha_max == Approx(1.0 / 3.0));
  CHECK(near(x + c.alpha_max * c.d, e1, 1e-12));

  const ActiveSet apex = make_set({e1}, {1.0});
  CHECK(afw_direction(s3, e1, v({1, 0, 0}), apex).is_zero());

  const Domain s2 = make_simplex(2);
  const ActiveSet both = make_set({v({1, 0}), v({0, 1})}, {0.5, 0.5});
  CHECK(afw_direction(s2, v({0.5, 0.5}), v({1, 0}), both).kind == DirectionKind::FW);

  try {
    afw_direction(s3, v({0.5, 0.5, 0}), g, S);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidActiveSet);
  }
}

TEST_CASE("PFW direction examples") {
  const Domain s3 = make_simplex(3);
  const Vec x = v({0.75, 0.25, 0});
  auto c = pfw_direction(s3, x, v({1, -2, 0}), make_set({e1, e2}, {0.75, 0.25}));
  CHECK(c.kind == DirectionKind::Pairwise);
  CHECK(near(c.d, v({1, -1, 0})));
  CHECK(c.alpha_max == Approx(0.25));
  CHECK(near(x + c.alpha_max * c.d, e1));

  CHECK(pfw_direction(s3, e1, v({1, 0, 0}), make_set({e1}, {1.0})).is_zero());

  c = pfw_direction(make_simplex(2), v({0.5, 0.5}), v({1, 0}), make_set({v({1, 0}), v({0, 1})}, {0.5, 0.5}));
  CHECK(near(c.d, v({1, -1})));
  CHECK(c.alpha_max == Approx(0.5));
}

TEST_CASE("FDFW direction examples") {
  auto c = fdfw_direction(make_simplex(3), v({0.5, 0.5, 0}), v({1, -2, 0}));
  CHECK(c.kind == DirectionKind::FW);
  CHECK(near(c.d, v({0.5, -0.5, 0})));

  const Domain disk = make_lp_ball(2, 2.0);
  c = fdfw_direction(disk, v({0.1, -0.2}), v({3, 4}));
  CHECK(c.kind == DirectionKind::FW);
  CHECK(near(c.d, v({0.5, 1.0})));

  c = fdfw_direction(disk, v({1, 0}), v({0, 1}));
  CHECK(c.kind == DirectionKind::FW);
  CHECK(near(c.d, v({-1, 1})));

  c = fdfw_direction(make_simplex(3), v({0.4, 0.3, 0.3}), v({0.1, 0, -5}));
  CHECK(c.kind == DirectionKind::InFace);
  CHECK(near(c.d, v({0.4, 0.3, -0.7})));
  CHECK(c.alpha_max == Approx(3.0 / 7.0));
}

TEST_CASE("SOR direction examples") {
  const Domain disk = make_lp_ball(2, 2.0);
  auto c = sor_direction(disk, v({1, 0}), v({0, 1}));
  CHECK(c.kind == DirectionKind::SOR);
  CHECK(near(c.d, v({-1, 1}), 1e-7));
  CHECK(v({0, 1}).dot(c.d) / c.d.norm() >= 0.5);
  c = sor_direction(make_sublevel(Mat::Identity(2, 2), Vec::Zero(2), 0.5), v({1, 0}), v({0, 1}));
  CHECK(near(c.d, v({-1, 1}), 1e-12));

  c = sor_direction(disk, v({0.2, 0.1}), v({-1, 2}));
  CHECK(c.kind == DirectionKind::SOR);
  CHECK(near(c.d, v({-1, 2})));
  CHECK(std::isfinite(c.alpha_max));

  CHECK(sor_direction(disk, v({0, 1}), v({0, 2.5})).is_zero());
}

TEST_CASE("SOR slope ratio on random boundary points") {
  std::mt19937_64 rng(43);
  Mat H(2, 2);
  H << 1, 0, 0, 4;
  const std::vector<Domain> doms{make_lp_ball(3, 2.0), make_sublevel(H, Vec::Zero(2), 0.5), make_lp_ball(2, 3.0)};
  for (const Domain& dom : doms) {
    for (int t = 0; t < 200; ++t) {
      const Vec x = sample_boundary_point(dom, rng);
      const Vec g = gaussian(dom.dim(), rng);
      const auto c = sor_direction(dom, x, g);
      if (c.is_zero()) continue;
      const double pi = tangent_projection(dom, x, g).pi_norm;
      CHECK(g.dot(c.d) >= (0.5 - 1e-8) * pi * c.d.norm());
    }
  }
}

TEST_CASE("shrink coefficient bound examples") {
  const Domain unit = make_sublevel(Mat::Identity(2, 2), Vec::Zero(2), 0.5);
  CHECK(shrink_coefficient_bound(unit, v({1, 0}), v({0, 2})) == Approx(0.5));
  CHECK(shrink_coefficient_bound(unit, v({1, 0}), v({0, 1})) == Approx(1.0));
  Mat H(2, 2);
  H << 1, 0, 0, 4;
  const Domain ell = make_sublevel(H, Vec::Zero(2), 0.5);
  const double lambda = shrink_coefficient_bound(ell, v({1, 0}), v({0, 1}));
  CHECK(lambda == Approx(0.25));
  const Vec step = orthographic_retraction(ell, v({1, 0}), lambda * v({0, 1})) - v({1, 0});
  CHECK(v({0, 1}).dot(step) >= 0.5 * step.norm());
  CHECK_THROWS_AS(shrink_coefficient_bound(unit, v({1, 0}), v({3, 0})), Error);
}

TEST_CASE("product direction examples") {
  const Domain seg = make_box(1);
  const Domain prod = make_product({seg, seg});
  const Vec x = Vec::Zero(2), g = v({3, 4});
  const auto blocks = [&] {
    return std::vector<DirectionChoice>{fw_direction(seg, x.head(1), g.head(1)),
                                        fw_direction(seg, x.tail(1), g.tail(1))};
  };
  auto c = product_direction(prod.product(), g, blocks(), ProductMode::Case1);
  CHECK(c.kind == DirectionKind::ProductComposite);
  CHECK(near(c.d, v({3, 4})));

  c = product_direction(prod.product(), g, blocks(), ProductMode::Case2);
  CHECK(near(c.d, v({0, 4})));

  c = product_direction(prod.product(), Vec::Zero(2),
                        {fw_direction(seg, x.head(1), Vec::Zero(1)), fw_direction(seg, x.tail(1), Vec::Zero(1))},
                        ProductMode::Case1);
  CHECK(c.is_zero());
}

TEST_CASE("bookkeeping examples") {
  const Domain s3 = make_simplex(3);
  const ActiveSet S = make_set({e1, e2}, {0.75, 0.25});
  const Vec x = v({0.75, 0.25, 0});

  const auto fw = fw_direction(s3, x, v({0, 0, 1}));
  const ActiveSet full = apply_bookkeeping(S, fw, 1.0);
  REQUIRE(full.size() == 1);
  CHECK(near(full.atoms[0], v({0, 0, 1})));
  CHECK(full.weights[0] == Approx(1.0));

  const auto away = afw_direction(s3, x, v({1, -2, 0}), S);
  const ActiveSet dropped = apply_bookkeeping(S, away, away.alpha_max);
  REQUIRE(dropped.size() == 1);
  CHECK(near(dropped.atoms[0], e1));

  const ActiveSet same = apply_bookkeeping(S, away, 0.0);
  CHECK(same.size() == 2);
  CHECK(same.weights[0] == Approx(0.75));
  CHECK(same.weights[1] == Approx(0.25));
}

TEST_CASE("AFW slope dominates half the PFW slope") {
  std::mt19937_64 rng(47);
  for (int t = 0; t < 1000; ++t) {
    const int n = 2 + t % 5;
    const Domain dom = t % 3 == 0 ? make_simplex(n) : t % 3 == 1 ? make_l1_ball(n) : make_box(n);
    const ActiveSet S = random_active_set(dom, rng);
    const Vec x = S.point();
    const Vec g = gaussian(n, rng);
    const auto afw = afw_direction(dom, x, g, S);
    const auto pfw = pfw_direction(dom, x, g, S);
    CHECK(g.dot(afw.d) >= 0.5 * g.dot(pfw.d) - 1e-12);
  }
}

TEST_CASE("FDFW criteria dominate the PFW slope") {
  std::mt19937_64 rng(53);
  for (int t = 0; t < 1000; ++t) {
    const int n = 2 + t % 5;
    const Domain dom = t % 3 == 0 ? make_simplex(n) : t % 3 == 1 ? make_l1_ball(n) : make_box(n);
    const ActiveSet S = random_active_set(dom, rng);
    const Vec x = S.point();
    const Vec g = gaussian(n, rng);
    const Vec dfw = lmo(dom, g) - x;
    const Vec da = x - face_lmo(dom, minimal_face(dom, x), g);
    CHECK(g.dot(dfw + da) >= g.dot(pfw_direction(dom, x, g, S).d) - 1e-12);
  }
}

TEST_CASE("active set stays consistent under many updates") {
  std::mt19937_64 rng(59);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (MethodKind kind : {MethodKind::AFW, MethodKind::PFW}) {
    for (const Domain& dom : {make_simplex(5), make_l1_ball(4), make_box(3)}) {
      MethodSpec spec;
      spec.kind = kind;
      Method method(dom, spec);
      Vec y = default_start(dom);
      method.reset(y);
      for (int t = 0; t < 10000; ++t) {
        const Vec g = gaussian(dom.dim(), rng);
        method.begin_chain(g);
        const auto c = method.select(y, g);
        if (c.is_zero()) continue;
        const double cap = std::min(c.alpha_max, 1.0);
        const double alpha = unit(rng) < 0.3 ? cap : cap * unit(rng);
        method.commit(c, alpha);
        y += alpha * c.d;
      }
      REQUIRE(method.active_set() != nullptr);
      CHECK_NOTHROW(method.active_set()->validate(y, 1e-9));
      CHECK(contains(dom, y));
    }
  }
}

TEST_CASE("every non-zero choice is a feasible ascent direction for g") {
  std::mt19937_64 rng(61);
  struct Case {
    Domain dom;
    MethodKind kind;
  };
  const std::vector<Case> cases{{make_simplex(4), MethodKind::FW},  {make_simplex(4), MethodKind::AFW},
                                {make_l1_ball(3), MethodKind::PFW}, {make_box(3), MethodKind::FDFW},
                                {make_l1_ball(3), MethodKind::FDFW}, {make_lp_ball(3, 2.0), MethodKind::SOR},
                                {make_lp_ball(3, 3.0), MethodKind::FDFW}};
  for (const auto& cs : cases) {
    MethodSpec spec;
    spec.kind = cs.kind;
    Method method(cs.dom, spec);
    for (int t = 0; t < 300; ++t) {
      const Vec x = (t % 2 && cs.dom.is_smooth()) ? sample_boundary_point(cs.dom, rng) : sample_point(cs.dom, rng);
      method.reset(x);
      const Vec g = gaussian(cs.dom.dim(), rng);
      method.begin_chain(g);
      const auto c = method.select(x, g);
      if (c.is_zero()) continue;
      CHECK(g.dot(c.d) > 0.0);
      CHECK(max_feasible_step(cs.dom, x, c.d) > 0.0);
    }
  }
}

TEST_CASE("product methods") {
  std::mt19937_64 rng(67);
  const Domain prod = make_product({make_simplex(3), make_lp_ball(2, 2.0)});
  for (ProductMode mode : {ProductMode::Case1, ProductMode::Case2}) {
    MethodSpec spec;
    spec.kind = MethodKind::Product;
    spec.mode = mode;
    MethodSpec a, b;
    a.kind = MethodKind::AFW;
    b.kind = MethodKind::SOR;
    spec.blocks = {a, b};
    Method method(prod, spec);
    for (int t = 0; t < 200; ++t) {
      const Vec x = sample_point(prod, rng);
      method.reset(x);
      const Vec g = gaussian(prod.dim(), rng);
      method.begin_chain(g);
      const auto c = method.select(x, g);
      if (c.is_zero()) continue;
      CHECK(g.dot(c.d) > 0.0);
      CHECK(max_feasible_step(prod, x, c.d) >= c.alpha_max * (1 - 1e-12));
    }
  }
}

TEST_CASE("method validation") {
  MethodSpec spec;
  spec.kind = MethodKind::AFW;
  CHECK_THROWS_AS(validate_method(make_lp_ball(2, 2.0), spec), Error);
  spec.kind = MethodKind::SOR;
  CHECK_THROWS_AS(validate_method(make_simplex(3), spec), Error);
  spec.sor.tau_bar = 1.5;
  CHECK_THROWS_AS(validate_method(make_lp_ball(2, 2.0), spec), Error);
  CHECK(method_kind_from_string("pfw") == MethodKind::PFW);
}
