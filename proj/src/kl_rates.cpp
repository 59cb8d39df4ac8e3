#include "sscfw/kl_rates.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace sscfw {

Desingularizer Desingularizer::power(double M, double theta, double eta) {
  Desingularizer d;
  d.form = PowerForm{M, theta};
  d.eta = eta;
  d.validate();
  return d;
}

void Desingularizer::validate() const {
  if (!(eta > 0.0)) fail(ErrorKind::InvalidInput, "desingularizer range must be positive");
  if (auto* pf = std::get_if<PowerForm>(&form)) {
    if (!(pf->M > 0.0)) fail(ErrorKind::InvalidInput, "desingularizer M must be positive");
    if (!(pf->theta > 0.0 && pf->theta <= 0.5)) fail(ErrorKind::Domain, "desingularizer exponent must lie in (0, 1/2]");
  } else {
    const auto& gf = std::get<GeneralForm>(form);
    if (!gf.phi_prime) fail(ErrorKind::InvalidInput, "general desingularizer needs phi_prime");
  }
}

double Desingularizer::phi(double t) const {
  if (auto* pf = std::get_if<PowerForm>(&form)) return pf->M / pf->theta * std::pow(std::max(t, 0.0), pf->theta);
  const auto& gf = std::get<GeneralForm>(form);
  if (!gf.phi) fail(ErrorKind::Unsupported, "desingularizer has no phi evaluator");
  return gf.phi(t);
}

double Desingularizer::phi_prime(double t) const {
  if (auto* pf = std::get_if<PowerForm>(&form)) {
    if (t <= 0.0) return pf->theta < 1.0 ? kInf : pf->M;
    return pf->M * std::pow(t, pf->theta - 1.0);
  }
  return std::get<GeneralForm>(form).phi_prime(t);
}

double RateConstants::alpha(const Desingularizer& desing, double t) const {
  return b / std::sqrt(a) * desing.phi_prime(t);
}

RateConstants ssc_rate_constants(double L, double tau) {
  if (!(L > 0.0 && tau > 0.0)) fail(ErrorKind::InvalidInput, "rate constants need L > 0 and tau > 0");
  const double K = tau / (L * (1.0 + tau));
  return RateConstants{0.5 * L, 1.0 / K};
}

namespace {

// s + 1/α(s)²; 1/α² is taken as 0 where φ′ is infinite.
double sigma_map(const RateConstants& rc, const Desingularizer& desing, double s) {
  const double al = rc.alpha(desing, s);
  if (std::isinf(al)) return s;
  return s + 1.0 / (al * al);
}

}  // namespace

double sigma_alpha(const RateConstants& rc, const Desingularizer& desing, double t) {
  if (!(rc.a > 0.0 && rc.b > 0.0)) fail(ErrorKind::InvalidInput, "rate constants must be positive");
  if (!(t >= 0.0 && t < desing.eta)) fail(ErrorKind::Domain, "sigma_alpha argument outside [0, eta)");
  if (t == 0.0) return 0.0;
  if (sigma_map(rc, desing, 0.0) > t) return 0.0;
  double lo = 0.0, hi = t;
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sigma_map(rc, desing, mid) <= t)
      lo = mid;
    else
      hi = mid;
  }
  const double rlo = std::abs(sigma_map(rc, desing, lo) - t);
  const double rhi = std::abs(sigma_map(rc, desing, hi) - t);
  const double s = rhi < rlo && hi < t ? hi : lo;
  return std::min(s, std::nextafter(t, 0.0));
}

std::vector<double> sigma_iterates(const RateConstants& rc, const Desingularizer& desing, double f0, int k) {
  std::vector<double> out{f0};
  for (int i = 0; i < k; ++i) out.push_back(sigma_alpha(rc, desing, out.back()));
  if (f0 == 0.0) return std::vector<double>(k + 1, 0.0);
  return out;
}

double holder_envelope(double theta, double M, double a, double b, int k, double f0) {
  if (!(theta > 0.0 && theta <= 0.5)) fail(ErrorKind::Domain, "holder exponent must lie in (0, 1/2]");
  if (k < 0) fail(ErrorKind::InvalidInput, "iteration index must be nonnegative");
  if (theta == 0.5) return f0 > 0.0 ? f0 * std::pow(1.0 + a / (b * b * M * M), -k) : std::pow(1.0 + a / (b * b * M * M), -k);
  const double r = 1.0 / (1.0 - 2.0 * theta);
  const double P = std::max(f0, std::pow(std::pow(2.0, r + 2.0) * r * b * b * M * M / a, r));
  return P / std::pow(k + 1.0, r);
}

namespace {

RateCertificate make_certificate(const char* name) {
  RateCertificate c;
  c.name = name;
  c.notes.push_back("KL neighbourhood condition on delta and eta is assumed, not checked");
  return c;
}

void record(RateCertificate& c, int k, double lhs, double rhs, double tol) {
  const bool ok = lhs <= rhs + tol;
  c.pass_at.push_back(ok);
  c.lhs.push_back(lhs);
  c.rhs.push_back(rhs);
  if (!ok) ++c.failures;
  if (lhs - rhs > c.worst_violation) {
    c.worst_violation = lhs - rhs;
    c.worst_k = k;
  }
}

std::vector<double> run_objectives(const RunTrace& run) {
  std::vector<double> f;
  for (const auto& r : run.records) f.push_back(r.f_k);
  return f;
}

std::vector<double> run_steps(const RunTrace& run) {
  std::vector<double> s;
  for (std::size_t i = 0; i < run.records.size(); ++i) {
    const auto& r = run.records[i];
    const Vec& next = i + 1 < run.records.size() ? run.records[i + 1].x_k : r.x_tr;
    s.push_back((next - r.x_k).norm());
  }
  return s;
}

}  // namespace

RateCertificate certify_objective_rate(const std::vector<double>& f, const Desingularizer& desing,
                                       const RateConstants& rc, double f_star) {
  RateCertificate c = make_certificate("kl-objective-rate");
  if (f.empty()) return c;
  const double tol = 1e-9 * (1.0 + std::abs(f.front()));
  double sigma = std::max(0.0, f.front() - f_star);
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (k > 0) sigma = sigma_alpha(rc, desing, sigma);
    record(c, static_cast<int>(k), f[k] - f_star, sigma, tol);
  }
  return c;
}

RateCertificate certify_objective_rate(const RunTrace& run, const Desingularizer& desing, const RateConstants& rc,
                                       double f_star) {
  return certify_objective_rate(run_objectives(run), desing, rc, f_star);
}

RateCertificate certify_tail_length(const std::vector<double>& f, const std::vector<double>& step_len,
                                    const Desingularizer& desing, const RateConstants& rc, double f_star) {
  RateCertificate c = make_certificate("kl-tail-length");
  if (f.size() != step_len.size()) fail(ErrorKind::InvalidInput, "objective and step series differ in length");
  if (f.empty()) return c;
  // Objective roundoff carried through the square-root term, in length units.
  const double f_round = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(f.front()));
  const double tol = 1e-9 * (1.0 + std::abs(f.front())) + 2.0 * std::sqrt(f_round / rc.a);
  std::vector<double> tail(f.size() + 1, 0.0);
  for (std::size_t i = f.size(); i-- > 0;) tail[i] = tail[i + 1] + step_len[i];
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double gap = std::max(0.0, f[k] - f_star);
    const double rhs =
        rc.b / rc.a * desing.phi(gap) + 2.0 * std::sqrt(std::max(0.0, gap - sigma_alpha(rc, desing, gap)) / rc.a);
    // The last recorded step is the final one, so the tail from the last k is that step alone.
    record(c, static_cast<int>(k), tail[k], rhs, tol);
  }
  return c;
}

RateCertificate certify_tail_length(const RunTrace& run, const Desingularizer& desing, const RateConstants& rc,
                                    double f_star) {
  return certify_tail_length(run_objectives(run), run_steps(run), desing, rc, f_star);
}

// ---------------------------------------------------------------------------
// Pyramidal width

namespace {

void check_atom_limits(const std::vector<Vec>& atoms, std::size_t max_atoms) {
  if (atoms.empty()) fail(ErrorKind::InvalidInput, "atom set is empty");
  if (atoms.size() > max_atoms) fail(ErrorKind::Unsupported, "too many atoms for enumeration");
  const auto d = atoms.front().size();
  if (d > 4) fail(ErrorKind::Unsupported, "atom dimension above 4");
  for (const auto& a : atoms)
    if (a.size() != d) fail(ErrorKind::InvalidInput, "atoms differ in dimension");
}

// Minimum of ‖Σλp‖ over λ in the simplex restricted to the given subset, or +∞ when the
// affine minimizer leaves the simplex or the subset is affinely dependent.
double subset_min_norm(const std::vector<Vec>& pts, const std::vector<int>& idx) {
  const int m = static_cast<int>(idx.size());
  Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(m + 1, m + 1);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) sys(i, j) = pts[idx[i]].dot(pts[idx[j]]);
    sys(i, m) = sys(m, i) = 1.0;
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
  rhs[m] = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(sys);
  if (!lu.isInvertible()) return kInf;
  const Eigen::VectorXd sol = lu.solve(rhs);
  if ((sys * sol - rhs).norm() > 1e-9 * (1.0 + sys.norm())) return kInf;
  Vec z = Vec::Zero(pts.front().size());
  for (int i = 0; i < m; ++i) {
    if (sol[i] < -1e-12) return kInf;
    z += sol[i] * pts[idx[i]];
  }
  return z.norm();
}

void for_each_subset(int n, int max_size, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> cur;
  std::function<void(int)> rec = [&](int start) {
    if (!cur.empty()) fn(cur);
    if (static_cast<int>(cur.size()) == max_size) return;
    for (int i = start; i < n; ++i) {
      cur.push_back(i);
      rec(i + 1);
      cur.pop_back();
    }
  };
  rec(0);
}

// Compositions of total into parts ≥ min_part.
void for_each_composition(int parts, int total, int min_part, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> cur(parts, 0);
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == parts - 1) {
      if (left < min_part) return;
      cur[i] = left;
      fn(cur);
      return;
    }
    for (int v = min_part; v <= left - min_part * (parts - 1 - i); ++v) {
      cur[i] = v;
      rec(i + 1, left - v);
    }
  };
  if (parts > 0) rec(0, total);
}

}  // namespace

double min_norm_point(const std::vector<Vec>& points) {
  if (points.empty()) fail(ErrorKind::InvalidInput, "min_norm_point needs points");
  const int d = static_cast<int>(points.front().size());
  double best = kInf;
  for_each_subset(static_cast<int>(points.size()), d + 1,
                  [&](const std::vector<int>& idx) { best = std::min(best, subset_min_norm(points, idx)); });
  return best;
}

std::vector<std::vector<int>> face_atom_sets(const std::vector<Vec>& atoms) {
  check_atom_limits(atoms, 12);
  const int n = static_cast<int>(atoms.size());
  const int d = static_cast<int>(atoms.front().size());
  double scale = 0.0;
  for (const auto& a : atoms) scale = std::max(scale, a.norm());
  const double tol = 1e-9 * (1.0 + scale);
  std::vector<std::vector<int>> faces;
  for_each_subset(n, n, [&](const std::vector<int>& F) {
    std::vector<int> rest;
    for (int i = 0; i < n; ++i)
      if (std::find(F.begin(), F.end(), i) == F.end()) rest.push_back(i);
    if (rest.empty()) {
      faces.push_back(F);
      return;
    }
    // Distance from conv(rest) to aff(F), via projection onto the complement of aff(F)'s directions.
    Eigen::MatrixXd dirs(d, std::max<int>(1, static_cast<int>(F.size()) - 1));
    dirs.setZero();
    for (std::size_t j = 1; j < F.size(); ++j) dirs.col(j - 1) = atoms[F[j]] - atoms[F[0]];
    Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(d, d);
    if (F.size() > 1) {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(dirs, Eigen::ComputeThinU);
      const auto& sv = svd.singularValues();
      for (int j = 0; j < sv.size(); ++j)
        if (sv[j] > 1e-12 * (1.0 + sv[0])) proj -= svd.matrixU().col(j) * svd.matrixU().col(j).transpose();
    }
    std::vector<Vec> shifted;
    for (int i : rest) shifted.push_back(proj * (atoms[i] - atoms[F[0]]));
    if (min_norm_point(shifted) > tol) faces.push_back(F);
  });
  return faces;
}

double pyramidal_width_bruteforce(const std::vector<Vec>& atoms, int grid) {
  check_atom_limits(atoms, 8);
  if (grid < 1) fail(ErrorKind::InvalidInput, "grid resolution must be positive");
  double best = kInf;
  for (const auto& F : face_atom_sets(atoms)) {
    if (F.size() < 2) continue;
    const int nf = static_cast<int>(F.size());
    for_each_subset(nf, nf, [&](const std::vector<int>& S) {
      const int ns = static_cast<int>(S.size());
      const int lam_total = std::max(grid, ns);
      for_each_composition(ns, lam_total, 1, [&](const std::vector<int>& lam) {
        Vec x = Vec::Zero(atoms.front().size());
        for (int i = 0; i < ns; ++i) x += double(lam[i]) / lam_total * atoms[F[S[i]]];
        auto evaluate = [&](const Vec& r) {
          const double rn = r.norm();
          if (rn <= 1e-12) return;
          const Vec rh = r / rn;
          double hi = -kInf, lo = kInf;
          for (int a : F) hi = std::max(hi, rh.dot(atoms[a]));
          for (int s : S) lo = std::min(lo, rh.dot(atoms[F[s]]));
          best = std::min(best, hi - lo);
        };
        for_each_composition(nf, grid, 0, [&](const std::vector<int>& mu) {
          Vec r = Vec::Zero(x.size());
          for (int a = 0; a < nf; ++a) r += double(mu[a]) * (atoms[F[a]] - x);
          evaluate(r);
        });
      });
    });
  }
  return best;
}

double facial_distance(const std::vector<Vec>& atoms) {
  check_atom_limits(atoms, 8);
  const int n = static_cast<int>(atoms.size());
  double best = kInf;
  for (const auto& F : face_atom_sets(atoms)) {
    if (static_cast<int>(F.size()) == n) continue;
    std::vector<Vec> diffs;
    for (int i = 0; i < n; ++i) {
      if (std::find(F.begin(), F.end(), i) != F.end()) continue;
      for (int f : F) diffs.push_back(atoms[f] - atoms[i]);
    }
    best = std::min(best, min_norm_point(diffs));
  }
  return best;
}

double polytope_pwidth(const AtomPolytope& p) {
  const double n = p.dim;
  switch (p.family) {
    case PolytopeFamily::Simplex: {
      if (p.dim < 2) return kInf;
      const double k = std::floor(n / 2.0);
      return p.scale * std::sqrt(1.0 / k + 1.0 / (n - k));
    }
    case PolytopeFamily::L1Ball: return p.dim == 1 ? 2.0 * p.scale : p.scale / std::sqrt(n - 1.0);
    case PolytopeFamily::Box: return p.scale / std::sqrt(n);
  }
  return kInf;
}

double lp_boundary_ratio_estimate(int dim, double p, int samples, std::uint64_t seed) {
  if (dim < 1 || !(p > 1.0)) fail(ErrorKind::InvalidInput, "invalid Lp ball for ratio estimate");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto to_sphere = [&](Vec z) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += std::pow(std::abs(z[i]), p);
    return Vec(z / std::pow(s, 1.0 / p));
  };
  auto grad = [&](const Vec& x) {
    Vec g(dim);
    for (int i = 0; i < dim; ++i) g[i] = std::copysign(std::pow(std::abs(x[i]), p - 1.0), x[i]);
    return g;
  };
  // Σ_i |x_i|^p/p − |y_i|^p/p − sgn(y_i)|y_i|^{p−1}(x_i − y_i), per coordinate in relative form.
  auto bregman = [&](const Vec& x, const Vec& y) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) {
      const double yi = std::abs(y[i]);
      if (yi > 0.0 && x[i] * y[i] > 0.0) {
        const double r = (std::abs(x[i]) - yi) / yi;
        s += std::pow(yi, p) / p * (std::expm1(p * std::log1p(r)) - p * r);
      } else {
        s += std::pow(std::abs(x[i]), p) / p - std::pow(yi, p) / p - std::copysign(std::pow(yi, p - 1.0), y[i]) * (x[i] - y[i]);
      }
    }
    return std::max(s, 0.0);
  };
  auto random_point = [&]() {
    Vec z(dim);
    const double sparsity = unif(rng);
    for (int i = 0; i < dim; ++i) z[i] = unif(rng) < sparsity ? gauss(rng) : 1e-6 * gauss(rng);
    if (z.norm() == 0.0) z[0] = 1.0;
    return to_sphere(z);
  };
  double best = kInf;
  for (int it = 0; it < samples; ++it) {
    const Vec x = random_point();
    Vec y;
    if (it % 2 == 0) {
      y = random_point();
    } else {
      Vec pert(dim);
      for (int i = 0; i < dim; ++i) pert[i] = gauss(rng);
      y = to_sphere(x + std::pow(10.0, -4.0 * unif(rng)) * pert);
    }
    const double dist = (x - y).norm();
    if (dist < 1e-5) continue;
    const Vec gx = grad(x), gy = grad(y);
    const double denom = (gx - gy).norm() * dist;
    if (denom <= 0.0) continue;
    const double bxy = bregman(x, y);
    const double byx = bregman(y, x);
    best = std::min(best, std::min(bxy, byx) / denom);
  }
  return best;
}

double theoretical_tau(const Domain& dom, const MethodSpec& spec, const TauOptions& opts) {
  validate_method(dom, spec);
  switch (spec.kind) {
    case MethodKind::SOR: return spec.sor.tau_bar;
    case MethodKind::PFW:
    case MethodKind::AFW: {
      const double pw = opts.pwidth ? *opts.pwidth : polytope_pwidth(dom.polytope());
      const double D = diameter(dom);
      if (!std::isfinite(pw) || D <= 0.0) fail(ErrorKind::Unsupported, "degenerate polytope has no slope constant");
      return spec.kind == MethodKind::PFW ? pw / D : pw / (2.0 * D);
    }
    case MethodKind::FW:
    case MethodKind::FDFW: {
      if (dom.is_polytope()) {
        if (spec.kind == MethodKind::FW) fail(ErrorKind::Unsupported, "plain FW on a polytope has no positive slope constant");
        const double pw = opts.pwidth ? *opts.pwidth : polytope_pwidth(dom.polytope());
        const double D = diameter(dom);
        if (!std::isfinite(pw) || D <= 0.0) fail(ErrorKind::Unsupported, "degenerate polytope has no slope constant");
        return pw / (2.0 * D);
      }
      if (std::holds_alternative<SublevelSet>(dom.variant())) {
        const auto& s = dom.sublevel();
        return s.mu_h / (2.0 * s.L_h);
      }
      const auto& b = dom.lp_ball();
      if (b.p == 2.0) return 0.5;
      const double interior = 0.5 / std::pow(double(b.dim), std::abs(0.5 - 1.0 / b.p));
      const double boundary = lp_boundary_ratio_estimate(b.dim, b.p, opts.lp_samples, opts.seed);
      return 0.5 * std::min(interior, boundary);
    }
    case MethodKind::Product: {
      const auto& p = dom.product();
      double t = kInf;
      for (std::size_t i = 0; i < p.blocks.size(); ++i) {
        TauOptions sub = opts;
        sub.pwidth.reset();
        t = std::min(t, theoretical_tau(p.blocks[i], spec.blocks[i], sub));
      }
      return spec.mode == ProductMode::Case1 ? t : t / double(p.blocks.size());
    }
  }
  fail(ErrorKind::Unsupported, "unsupported domain and method pair");
}

}  // namespace sscfw
