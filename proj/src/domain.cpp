#include "sscfw/domain.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numeric>
#include <sstream>

namespace sscfw {

namespace {

constexpr double kPinTol = 1e-12;
constexpr double kBoundaryTol = 1e-10;

template <class... Fs>
struct Overload : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overload(Fs...) -> Overload<Fs...>;

double lp_norm(const Vec& x, double p) {
  const double m = x.cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += std::pow(std::abs(x[i]) / m, p);
  return m * std::pow(s, 1.0 / p);
}

// Gradient of ‖·‖_p at z ≠ 0.
Vec lp_norm_gradient(const Vec& z, double p) {
  const double nz = lp_norm(z, p);
  Vec out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double r = std::abs(z[i]) / nz;
    out[i] = (z[i] > 0 ? 1.0 : (z[i] < 0 ? -1.0 : 0.0)) * std::pow(r, p - 1.0);
  }
  return out;
}

// Largest root of Aα² + 2Bα + C = 0 when C ≤ 0 and A > 0.
double largest_root(double A, double B, double C) {
  C = std::min(C, 0.0);
  const double disc = std::max(B * B - A * C, 0.0);
  const double sq = std::sqrt(disc);
  if (B <= 0.0) return (-B + sq) / A;
  const double denom = B + sq;
  return denom > 0.0 ? -C / denom : 0.0;
}

Vec block(const Vec& v, const ProductDomain& p, std::size_t i) {
  return v.segment(p.offsets[i], p.offsets[i + 1] - p.offsets[i]);
}

double sublevel_radius_ratio(const SublevelSet& s, const Vec& x) {
  return std::sqrt(std::max(s.h(x), 0.0) / s.level);
}

// Projection of g onto {d : Σd = 0, d_i ≥ 0 for pinned i}.
Vec project_simplex_cone(const Vec& g, const std::vector<CoordStatus>& status) {
  const Eigen::Index n = g.size();
  double free_sum = 0.0;
  int free_count = 0;
  std::vector<double> pinned;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (status[i] == CoordStatus::Free) {
      free_sum += g[i];
      ++free_count;
    } else {
      pinned.push_back(g[i]);
    }
  }
  if (free_count == 0) return Vec::Zero(n);
  std::sort(pinned.begin(), pinned.end(), std::greater<>());
  double nu = free_sum / free_count;
  double sum = free_sum;
  for (std::size_t k = 0; k < pinned.size(); ++k) {
    if (pinned[k] <= nu) break;
    sum += pinned[k];
    nu = sum / (free_count + static_cast<double>(k) + 1.0);
  }
  Vec d(n);
  for (Eigen::Index i = 0; i < n; ++i)
    d[i] = status[i] == CoordStatus::Free ? g[i] - nu : std::max(g[i] - nu, 0.0);
  return d;
}

// Projection of g onto {d : Σ_S s_i d_i + Σ_Z |d_i| ≤ 0}.
Vec project_l1_cone(const Vec& g, const std::vector<std::int8_t>& sign) {
  const Eigen::Index n = g.size();
  double support_sum = 0.0;
  int support_count = 0;
  std::vector<double> zeros;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (sign[i] != 0) {
      support_sum += sign[i] * g[i];
      ++support_count;
    } else {
      zeros.push_back(std::abs(g[i]));
    }
  }
  double level = support_sum;
  for (double z : zeros) level += z;
  if (level <= 0.0) return g;
  std::sort(zeros.begin(), zeros.end(), std::greater<>());
  double sum = support_sum;
  double nu = sum / support_count;
  for (std::size_t k = 0; k < zeros.size(); ++k) {
    if (zeros[k] <= nu) break;
    sum += zeros[k];
    nu = sum / (support_count + static_cast<double>(k) + 1.0);
  }
  nu = std::max(nu, 0.0);
  Vec d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (sign[i] != 0) {
      d[i] = g[i] - nu * sign[i];
    } else {
      const double mag = std::max(std::abs(g[i]) - nu, 0.0);
      d[i] = g[i] >= 0 ? mag : -mag;
    }
  }
  return d;
}

Vec dirichlet(int k, std::mt19937_64& rng) {
  std::exponential_distribution<double> ex(1.0);
  Vec w(k);
  for (int i = 0; i < k; ++i) w[i] = ex(rng);
  return w / w.sum();
}

std::vector<int> random_subset(int n, std::mt19937_64& rng) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::uniform_int_distribution<int> size_dist(1, n);
  idx.resize(size_dist(rng));
  return idx;
}

}  // namespace

Domain::Domain(AtomPolytope p) : v_(p), dim_(p.dim) {
  if (p.dim < 1 || !(p.scale > 0.0)) fail(ErrorKind::InvalidInput, "polytope needs dim ≥ 1 and scale > 0");
}

Domain::Domain(SublevelSet s) : v_(std::move(s)) { dim_ = static_cast<int>(std::get<SublevelSet>(v_).center.size()); }

Domain::Domain(LpBall b) : v_(b), dim_(b.dim) {
  if (b.dim < 1 || !(b.p > 1.0) || !std::isfinite(b.p) || !(b.radius > 0.0))
    fail(ErrorKind::InvalidInput, "Lp ball needs dim ≥ 1, 1 < p < ∞ and radius > 0");
}

Domain::Domain(ProductDomain p) : v_(std::move(p)) {
  auto& prod = std::get<ProductDomain>(v_);
  if (prod.blocks.empty()) fail(ErrorKind::InvalidInput, "product domain needs at least one block");
  prod.offsets.assign(1, 0);
  for (const auto& b : prod.blocks) prod.offsets.push_back(prod.offsets.back() + b.dim());
  dim_ = prod.offsets.back();
}

Domain make_simplex(int n, double scale) { return Domain(AtomPolytope{PolytopeFamily::Simplex, scale, n}); }
Domain make_l1_ball(int n, double scale) { return Domain(AtomPolytope{PolytopeFamily::L1Ball, scale, n}); }
Domain make_box(int n, double scale) { return Domain(AtomPolytope{PolytopeFamily::Box, scale, n}); }
Domain make_lp_ball(int n, double p, double radius) { return Domain(LpBall{p, radius, n}); }

Domain make_sublevel(const Mat& H, const Vec& center, double level, double mu_h, double L_h) {
  if (H.rows() != H.cols() || H.rows() != center.size())
    fail(ErrorKind::InvalidInput, "sublevel set dimensions disagree");
  if ((H - H.transpose()).norm() > 1e-12 * std::max(H.norm(), 1e-300))
    fail(ErrorKind::InvalidInput, "sublevel set matrix is not symmetric");
  if (!(level > 0.0)) fail(ErrorKind::InvalidInput, "sublevel set level must exceed min h = 0");
  Eigen::SelfAdjointEigenSolver<Mat> eig(H);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) fail(ErrorKind::InvalidInput, "sublevel set matrix must be positive definite");
  if (mu_h <= 0.0) mu_h = lo;
  if (L_h <= 0.0) L_h = hi;
  if (mu_h > lo * (1 + 1e-12) || L_h < hi * (1 - 1e-12) || mu_h > L_h)
    fail(ErrorKind::InvalidInput, "sublevel set constants must bracket the spectrum of H");
  SublevelSet s;
  s.H = H;
  s.center = center;
  s.level = level;
  s.mu_h = mu_h;
  s.L_h = L_h;
  s.H_inv = H.inverse();
  Eigen::LLT<Mat> llt(H);
  const Mat Lc = llt.matrixL();
  s.half_inv = Lc.transpose().triangularView<Eigen::Upper>().solve(Mat::Identity(H.rows(), H.cols()));
  return Domain(std::move(s));
}

Domain make_product(std::vector<Domain> blocks) { return Domain(ProductDomain{std::move(blocks), {}}); }

std::string describe(const Domain& dom) {
  std::ostringstream os;
  std::visit(Overload{
                 [&](const AtomPolytope& p) {
                   const char* fam = p.family == PolytopeFamily::Simplex ? "simplex"
                                     : p.family == PolytopeFamily::L1Ball ? "l1ball"
                                                                          : "box";
                   os << fam << "(n=" << p.dim << ",scale=" << p.scale << ")";
                 },
                 [&](const SublevelSet& s) { os << "sublevel(n=" << s.center.size() << ",a=" << s.level << ")"; },
                 [&](const LpBall& b) { os << "lpball(n=" << b.dim << ",p=" << b.p << ",r=" << b.radius << ")"; },
                 [&](const ProductDomain& p) {
                   os << "product(";
                   for (std::size_t i = 0; i < p.blocks.size(); ++i) os << (i ? "," : "") << describe(p.blocks[i]);
                   os << ")";
                 },
             },
             dom.variant());
  return os.str();
}

double feasibility_tolerance(const Domain& dom) {
  return std::visit(Overload{
                        [](const AtomPolytope& p) { return 1e-10 * p.scale; },
                        [](const SublevelSet&) { return 1e-10; },
                        [](const LpBall& b) { return 1e-10 * b.radius; },
                        [](const ProductDomain&) { return 1e-10; },
                    },
                    dom.variant());
}

bool contains(const Domain& dom, const Vec& x, double tol) {
  if (x.size() != dom.dim() || !x.allFinite()) return false;
  return std::visit(
      Overload{
          [&](const AtomPolytope& p) {
            const double t = tol >= 0 ? tol : 1e-10 * p.scale;
            switch (p.family) {
              case PolytopeFamily::Simplex:
                return x.minCoeff() >= -t &&
                       std::abs(x.sum() - p.scale) <= t * std::max(1.0, std::sqrt(double(p.dim)));
              case PolytopeFamily::L1Ball: return x.lpNorm<1>() <= p.scale + t;
              case PolytopeFamily::Box: return x.minCoeff() >= -t && x.maxCoeff() <= p.scale + t;
            }
            return false;
          },
          [&](const SublevelSet& s) { return sublevel_radius_ratio(s, x) <= 1.0 + (tol >= 0 ? tol : 1e-10); },
          [&](const LpBall& b) { return lp_norm(x, b.p) <= b.radius + (tol >= 0 ? tol : 1e-10 * b.radius); },
          [&](const ProductDomain& p) {
            for (std::size_t i = 0; i < p.blocks.size(); ++i)
              if (!contains(p.blocks[i], block(x, p, i), tol)) return false;
            return true;
          },
      },
      dom.variant());
}

void require_feasible(const Domain& dom, const Vec& x, const char* where) {
  if (x.size() != dom.dim()) fail(ErrorKind::InvalidInput, std::string(where) + ": dimension mismatch");
  if (!contains(dom, x)) fail(ErrorKind::Infeasible, std::string(where) + ": point outside " + describe(dom));
}

Vec lmo(const Domain& dom, const Vec& g) {
  if (g.size() != dom.dim()) fail(ErrorKind::InvalidInput, "lmo: dimension mismatch");
  return std::visit(
      Overload{
          [&](const AtomPolytope& p) -> Vec {
            Vec s = Vec::Zero(p.dim);
            switch (p.family) {
              case PolytopeFamily::Simplex: {
                Eigen::Index i = 0;
                g.maxCoeff(&i);
                s[i] = p.scale;
                break;
              }
              case PolytopeFamily::L1Ball: {
                Eigen::Index i = 0;
                g.cwiseAbs().maxCoeff(&i);
                s[i] = g[i] >= 0 ? p.scale : -p.scale;
                break;
              }
              case PolytopeFamily::Box:
                for (int i = 0; i < p.dim; ++i) s[i] = g[i] > 0 ? p.scale : 0.0;
                break;
            }
            return s;
          },
          [&](const SublevelSet& s) -> Vec {
            const Vec w = s.H_inv * g;
            const double q = g.dot(w);
            if (!(q > 0.0)) {
              Vec e = Vec::Zero(g.size());
              e[0] = std::sqrt(2.0 * s.level / s.H(0, 0));
              return s.center + e;
            }
            return s.center + std::sqrt(2.0 * s.level / q) * w;
          },
          [&](const LpBall& b) -> Vec {
            const double m = g.cwiseAbs().maxCoeff();
            Vec s = Vec::Zero(b.dim);
            if (m == 0.0) {
              s[0] = b.radius;
              return s;
            }
            const double q = b.p / (b.p - 1.0);
            for (int i = 0; i < b.dim; ++i) {
              const double r = std::abs(g[i]) / m;
              s[i] = (g[i] > 0 ? 1.0 : (g[i] < 0 ? -1.0 : 0.0)) * std::pow(r, q - 1.0);
            }
            return b.radius * s / lp_norm(s, b.p);
          },
          [&](const ProductDomain& p) -> Vec {
            Vec s(dom.dim());
            for (std::size_t i = 0; i < p.blocks.size(); ++i)
              s.segment(p.offsets[i], p.blocks[i].dim()) = lmo(p.blocks[i], block(g, p, i));
            return s;
          },
      },
      dom.variant());
}

bool on_boundary(const Domain& dom, const Vec& x) {
  return std::visit(Overload{
                        [&](const SublevelSet& s) { return sublevel_radius_ratio(s, x) >= 1.0 - kBoundaryTol; },
                        [&](const LpBall& b) { return lp_norm(x, b.p) >= b.radius * (1.0 - kBoundaryTol); },
                        [&](const auto&) -> bool { fail(ErrorKind::Domain, "on_boundary is defined for smooth bodies"); },
                    },
                    dom.variant());
}

FaceDescriptor minimal_face(const Domain& dom, const Vec& x) {
  require_feasible(dom, x, "minimal_face");
  FaceDescriptor face;
  std::visit(Overload{
                 [&](const AtomPolytope& p) {
                   face.kind = FaceDescriptor::Kind::Polytope;
                   face.status.assign(p.dim, CoordStatus::Free);
                   const double pin = kPinTol * p.scale;
                   switch (p.family) {
                     case PolytopeFamily::Simplex:
                       for (int i = 0; i < p.dim; ++i)
                         if (x[i] <= pin) face.status[i] = CoordStatus::Lower;
                       break;
                     case PolytopeFamily::Box:
                       for (int i = 0; i < p.dim; ++i) {
                         if (x[i] <= pin) face.status[i] = CoordStatus::Lower;
                         else if (x[i] >= p.scale - pin) face.status[i] = CoordStatus::Upper;
                       }
                       break;
                     case PolytopeFamily::L1Ball:
                       if (x.lpNorm<1>() < p.scale * (1.0 - kPinTol)) {
                         face.whole = true;
                         break;
                       }
                       face.sign.assign(p.dim, 0);
                       for (int i = 0; i < p.dim; ++i) {
                         if (std::abs(x[i]) <= pin) face.status[i] = CoordStatus::Lower;
                         else face.sign[i] = x[i] > 0 ? 1 : -1;
                       }
                       break;
                   }
                   if (p.family != PolytopeFamily::L1Ball)
                     face.whole = std::all_of(face.status.begin(), face.status.end(),
                                              [](CoordStatus s) { return s == CoordStatus::Free; });
                 },
                 [&](const ProductDomain& p) {
                   face.kind = FaceDescriptor::Kind::Product;
                   face.whole = true;
                   for (std::size_t i = 0; i < p.blocks.size(); ++i) {
                     face.blocks.push_back(minimal_face(p.blocks[i], block(x, p, i)));
                     face.whole = face.whole && face.blocks.back().whole;
                   }
                 },
                 [&](const auto&) {
                   face.kind = FaceDescriptor::Kind::Smooth;
                   face.whole = !on_boundary(dom, x);
                   if (!face.whole) face.point = x;
                 },
             },
             dom.variant());
  return face;
}

Vec face_lmo(const Domain& dom, const FaceDescriptor& face, const Vec& g) {
  if (face.whole && !dom.is_product()) return lmo(dom, Vec(-g));
  return std::visit(
      Overload{
          [&](const AtomPolytope& p) -> Vec {
            Vec y = Vec::Zero(p.dim);
            switch (p.family) {
              case PolytopeFamily::Simplex: {
                int best = -1;
                for (int i = 0; i < p.dim; ++i)
                  if (face.status[i] == CoordStatus::Free && (best < 0 || g[i] < g[best])) best = i;
                if (best < 0) fail(ErrorKind::Domain, "simplex face without free coordinates");
                y[best] = p.scale;
                break;
              }
              case PolytopeFamily::Box:
                for (int i = 0; i < p.dim; ++i) {
                  if (face.status[i] == CoordStatus::Upper) y[i] = p.scale;
                  else if (face.status[i] == CoordStatus::Free) y[i] = g[i] < 0 ? p.scale : 0.0;
                }
                break;
              case PolytopeFamily::L1Ball: {
                int best = -1;
                for (int i = 0; i < p.dim; ++i)
                  if (face.sign[i] != 0 && (best < 0 || face.sign[i] * g[i] < face.sign[best] * g[best])) best = i;
                if (best < 0) fail(ErrorKind::Domain, "l1 face without support");
                y[best] = face.sign[best] * p.scale;
                break;
              }
            }
            return y;
          },
          [&](const ProductDomain& p) -> Vec {
            Vec y(dom.dim());
            for (std::size_t i = 0; i < p.blocks.size(); ++i)
              y.segment(p.offsets[i], p.blocks[i].dim()) = face_lmo(p.blocks[i], face.blocks[i], block(g, p, i));
            return y;
          },
          [&](const auto&) -> Vec { return face.point; },
      },
      dom.variant());
}

double max_feasible_step(const Domain& dom, const Vec& x, const Vec& d) {
  if (d.size() != dom.dim() || x.size() != dom.dim()) fail(ErrorKind::InvalidInput, "max_feasible_step: dimension mismatch");
  if (d.cwiseAbs().maxCoeff() == 0.0) return kInf;
  return std::visit(
      Overload{
          [&](const AtomPolytope& p) -> double {
            double alpha = kInf;
            switch (p.family) {
              case PolytopeFamily::Simplex:
              case PolytopeFamily::Box: {
                if (p.family == PolytopeFamily::Simplex && std::abs(d.sum()) > 1e-10 * d.lpNorm<1>()) return 0.0;
                // A pinned coordinate whose component is roundoff relative to d does not block the step.
                const double pin = 1e-12 * p.scale;
                const double noise = 1e-12 * d.lpNorm<Eigen::Infinity>();
                for (int i = 0; i < p.dim; ++i) {
                  if (d[i] < 0) {
                    if (x[i] <= pin && -d[i] <= noise) continue;
                    alpha = std::min(alpha, std::max(x[i], 0.0) / -d[i]);
                  } else if (d[i] > 0 && p.family == PolytopeFamily::Box) {
                    if (p.scale - x[i] <= pin && d[i] <= noise) continue;
                    alpha = std::min(alpha, std::max(p.scale - x[i], 0.0) / d[i]);
                  }
                }
                return alpha;
              }
              case PolytopeFamily::L1Ball: {
                // ‖x + αd‖₁ is convex piecewise linear; walk its breakpoints.
                std::vector<std::pair<double, double>> kinks;
                double value = std::min(x.lpNorm<1>(), p.scale);
                const double flat = 1e-12 * d.lpNorm<1>();
                double slope = 0.0;
                for (int i = 0; i < p.dim; ++i) {
                  if (d[i] == 0.0) continue;
                  if (x[i] == 0.0) {
                    slope += std::abs(d[i]);
                  } else {
                    const bool toward_zero = (x[i] > 0) != (d[i] > 0);
                    slope += toward_zero ? -std::abs(d[i]) : std::abs(d[i]);
                    if (toward_zero) kinks.emplace_back(-x[i] / d[i], 2.0 * std::abs(d[i]));
                  }
                }
                std::sort(kinks.begin(), kinks.end());
                double at = 0.0;
                for (const auto& [kink, jump] : kinks) {
                  const double next = value + slope * (kink - at);
                  if (slope > flat && next > p.scale) return std::max(0.0, at + (p.scale - value) / slope);
                  value = std::min(next, p.scale);
                  at = kink;
                  slope += jump;
                }
                if (slope <= flat) return kInf;
                return std::max(0.0, at + (p.scale - value) / slope);
              }
            }
            return alpha;
          },
          [&](const SublevelSet& s) -> double {
            const Vec Hd = s.H * d;
            const double A = 0.5 * d.dot(Hd);
            const double B = 0.5 * Hd.dot(x - s.center);
            return std::max(0.0, largest_root(A, B, s.h(x) - s.level));
          },
          [&](const LpBall& b) -> double {
            if (b.p == 2.0)
              return std::max(0.0, largest_root(d.squaredNorm(), x.dot(d), x.squaredNorm() - b.radius * b.radius));
            const double dn = lp_norm(d, b.p);
            double alpha = (b.radius + lp_norm(x, b.p)) / dn;
            // Newton from the right converges monotonically to the largest root of a convex function.
            for (int it = 0; it < 200; ++it) {
              const Vec z = x + alpha * d;
              const double psi = lp_norm(z, b.p) - b.radius;
              if (psi <= 1e-15 * b.radius) break;
              const double dpsi = lp_norm_gradient(z, b.p).dot(d);
              if (!(dpsi > 0.0)) break;
              const double next = alpha - psi / dpsi;
              if (!(next < alpha)) break;
              alpha = std::max(next, 0.0);
              if (alpha == 0.0) break;
            }
            return alpha;
          },
          [&](const ProductDomain& p) -> double {
            double alpha = kInf;
            for (std::size_t i = 0; i < p.blocks.size(); ++i)
              alpha = std::min(alpha, max_feasible_step(p.blocks[i], block(x, p, i), block(d, p, i)));
            return alpha;
          },
      },
      dom.variant());
}

Vec outward_normal(const Domain& dom, const Vec& x) {
  if (!dom.is_smooth()) fail(ErrorKind::Domain, "outward_normal needs a smooth body");
  if (!on_boundary(dom, x)) fail(ErrorKind::Domain, "outward_normal: point is interior");
  if (!contains(dom, x)) fail(ErrorKind::Infeasible, "outward_normal: point outside the body");
  if (dom.is_product()) fail(ErrorKind::Domain, "outward_normal needs a smooth body");
  const Vec n = std::holds_alternative<LpBall>(dom.variant()) ? lp_norm_gradient(x, dom.lp_ball().p)
                                                              : dom.sublevel().grad_h(x);
  return n.normalized();
}

TangentProjection tangent_projection(const Domain& dom, const Vec& x, const Vec& g) {
  if (g.size() != dom.dim()) fail(ErrorKind::InvalidInput, "tangent_projection: dimension mismatch");
  const FaceDescriptor face = minimal_face(dom, x);
  TangentProjection out;
  std::visit(Overload{
                 [&](const AtomPolytope& p) {
                   if (face.whole && p.family != PolytopeFamily::Simplex) {
                     out.tangent = g;
                     return;
                   }
                   switch (p.family) {
                     case PolytopeFamily::Simplex: out.tangent = project_simplex_cone(g, face.status); break;
                     case PolytopeFamily::Box:
                       out.tangent = g;
                       for (int i = 0; i < p.dim; ++i) {
                         if (face.status[i] == CoordStatus::Lower) out.tangent[i] = std::max(g[i], 0.0);
                         else if (face.status[i] == CoordStatus::Upper) out.tangent[i] = std::min(g[i], 0.0);
                       }
                       break;
                     case PolytopeFamily::L1Ball: out.tangent = project_l1_cone(g, face.sign); break;
                   }
                 },
                 [&](const ProductDomain& p) {
                   out.tangent.resize(dom.dim());
                   for (std::size_t i = 0; i < p.blocks.size(); ++i)
                     out.tangent.segment(p.offsets[i], p.blocks[i].dim()) =
                         tangent_projection(p.blocks[i], block(x, p, i), block(g, p, i)).tangent;
                 },
                 [&](const auto&) {
                   if (face.whole) {
                     out.tangent = g;
                     return;
                   }
                   const Vec J = outward_normal(dom, x);
                   out.tangent = g - std::max(0.0, g.dot(J)) * J;
                 },
             },
             dom.variant());
  out.pi_norm = out.tangent.norm();
  return out;
}

double level_value(const Domain& dom, const Vec& x) {
  if (std::holds_alternative<SublevelSet>(dom.variant())) return dom.sublevel().h(x);
  if (std::holds_alternative<LpBall>(dom.variant())) {
    const double p = dom.lp_ball().p;
    return std::pow(lp_norm(x, p), p) / p;
  }
  fail(ErrorKind::Domain, "level_value needs a smooth body");
}

Vec level_gradient(const Domain& dom, const Vec& x) {
  if (std::holds_alternative<SublevelSet>(dom.variant())) return dom.sublevel().grad_h(x);
  if (std::holds_alternative<LpBall>(dom.variant())) {
    const double p = dom.lp_ball().p;
    Vec out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
      out[i] = (x[i] > 0 ? 1.0 : (x[i] < 0 ? -1.0 : 0.0)) * std::pow(std::abs(x[i]), p - 1.0);
    return out;
  }
  fail(ErrorKind::Domain, "level_gradient needs a smooth body");
}

double boundary_level(const Domain& dom) {
  if (std::holds_alternative<SublevelSet>(dom.variant())) return dom.sublevel().level;
  if (std::holds_alternative<LpBall>(dom.variant())) {
    const auto& b = dom.lp_ball();
    return std::pow(b.radius, b.p) / b.p;
  }
  fail(ErrorKind::Domain, "boundary_level needs a smooth body");
}

namespace {

// Level excess beyond roundoff, pulled back by the retraction.
double overshoot(double excess, double level) {
  return excess > 64.0 * std::numeric_limits<double>::epsilon() * level ? excess : 0.0;
}

// |x + δ|^p − |x|^p without cancellation for small δ.
double power_increment(double x, double delta, double p) {
  if (x != 0.0 && std::abs(delta) < 0.5 * std::abs(x))
    return std::pow(std::abs(x), p) * std::expm1(p * std::log1p(delta / x));
  return std::pow(std::abs(x + delta), p) - std::pow(std::abs(x), p);
}

}  // namespace

Vec retraction_step(const Domain& dom, const Vec& x, const Vec& u) {
  if (!dom.is_smooth()) fail(ErrorKind::Domain, "orthographic_retraction needs a smooth body");
  if (u.size() != dom.dim()) fail(ErrorKind::InvalidInput, "orthographic_retraction: dimension mismatch");
  const Vec J = outward_normal(dom, x);
  if (std::abs(u.dot(J)) > 1e-10 * std::max(1.0, u.norm()))
    fail(ErrorKind::InvalidInput, "orthographic_retraction: u is not tangent");
  if (u.cwiseAbs().maxCoeff() == 0.0) return Vec::Zero(x.size());
  if (std::holds_alternative<SublevelSet>(dom.variant())) {
    const auto& s = dom.sublevel();
    // h(x + u − tJ) − h(x) = A t² − B t + C, with the excess of x over the level added when positive.
    const Vec gh = s.grad_h(x);
    const Vec HJ = s.H * J;
    const double A = 0.5 * J.dot(HJ);
    const double B = gh.dot(J) + u.dot(HJ);
    const double C = std::max(0.0, gh.dot(u) + 0.5 * u.dot(s.H * u) + overshoot(s.h(x) - s.level, s.level));
    const double disc = B * B - 4.0 * A * C;
    if (disc < 0.0 || (B <= 0.0 && C > 0.0))
      fail(ErrorKind::RetractionUndefined, "the normal line through x+u misses the body");
    const double t = C > 0.0 ? 2.0 * C / (B + std::sqrt(disc)) : 0.0;
    return u - t * J;
  }
  const auto& b = dom.lp_ball();
  double excess = 0.0;
  for (int i = 0; i < x.size(); ++i) excess += std::pow(std::abs(x[i]), b.p);
  excess -= std::pow(b.radius, b.p);
  if (excess <= 64.0 * std::numeric_limits<double>::epsilon() * std::pow(b.radius, b.p)) excess = 0.0;
  // F(t) = Σ(|x_i + u_i − tJ_i|^p − |x_i|^p) + excess is convex; Newton from t = 0 increases to its first root.
  auto F = [&](double t) {
    double acc = excess;
    for (int i = 0; i < x.size(); ++i) acc += power_increment(x[i], u[i] - t * J[i], b.p);
    return acc;
  };
  double t = 0.0;
  const double limit = 4.0 * ((x + u).norm() + b.radius * std::sqrt(double(b.dim)));
  for (int it = 0; it < 500; ++it) {
    const double val = F(t);
    if (val <= 0.0) return u - t * J;
    double dF = 0.0;
    for (int i = 0; i < x.size(); ++i) {
      const double zi = x[i] + u[i] - t * J[i];
      dF -= b.p * std::copysign(std::pow(std::abs(zi), b.p - 1.0), zi) * J[i];
    }
    if (!(dF < 0.0)) fail(ErrorKind::RetractionUndefined, "the normal line through x+u misses the body");
    const double next = t - val / dF;
    if (next <= t) return u - t * J;
    t = next;
    if (t > limit) fail(ErrorKind::RetractionUndefined, "retraction bracket expansion limit reached");
  }
  fail(ErrorKind::RetractionUndefined, "retraction did not converge");
}

Vec orthographic_retraction(const Domain& dom, const Vec& x, const Vec& u) {
  return x + retraction_step(dom, x, u);
}

double diameter(const Domain& dom) {
  return std::visit(Overload{
                        [](const AtomPolytope& p) {
                          switch (p.family) {
                            case PolytopeFamily::Simplex: return p.dim == 1 ? 0.0 : std::sqrt(2.0) * p.scale;
                            case PolytopeFamily::L1Ball: return 2.0 * p.scale;
                            case PolytopeFamily::Box: return std::sqrt(double(p.dim)) * p.scale;
                          }
                          return 0.0;
                        },
                        [](const SublevelSet& s) { return 2.0 * std::sqrt(2.0 * s.level / s.mu_h); },
                        [](const LpBall& b) {
                          return 2.0 * b.radius * std::pow(double(b.dim), std::max(0.0, 0.5 - 1.0 / b.p));
                        },
                        [](const ProductDomain& p) {
                          double sq = 0.0;
                          for (const auto& blk : p.blocks) sq += std::pow(diameter(blk), 2);
                          return std::sqrt(sq);
                        },
                    },
                    dom.variant());
}

Vec default_start(const Domain& dom) {
  return std::visit(Overload{
                        [](const AtomPolytope& p) -> Vec {
                          switch (p.family) {
                            case PolytopeFamily::Simplex: return Vec::Constant(p.dim, p.scale / p.dim);
                            case PolytopeFamily::Box: return Vec::Constant(p.dim, 0.5 * p.scale);
                            case PolytopeFamily::L1Ball: {
                              Vec x(p.dim);
                              for (int i = 0; i < p.dim; ++i) x[i] = (i % 2 ? -0.25 : 0.25) * p.scale / p.dim;
                              return x;
                            }
                          }
                          return Vec();
                        },
                        [](const SublevelSet& s) -> Vec {
                          const Vec one = Vec::Ones(s.center.size());
                          return s.center + 0.25 * std::sqrt(2.0 * s.level / one.dot(s.H * one)) * one;
                        },
                        [](const LpBall& b) -> Vec {
                          Vec x(b.dim);
                          for (int i = 0; i < b.dim; ++i) x[i] = (i % 2 ? -0.25 : 0.25);
                          return b.radius * x / std::pow(double(b.dim), 1.0 / b.p);
                        },
                        [&](const ProductDomain& p) -> Vec {
                          Vec x(dom.dim());
                          for (std::size_t i = 0; i < p.blocks.size(); ++i)
                            x.segment(p.offsets[i], p.blocks[i].dim()) = default_start(p.blocks[i]);
                          return x;
                        },
                    },
                    dom.variant());
}

Vec sample_point(const Domain& dom, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  return std::visit(
      Overload{
          [&](const AtomPolytope& p) -> Vec {
            Vec x = Vec::Zero(p.dim);
            switch (p.family) {
              case PolytopeFamily::Simplex: {
                if (unif(rng) < 0.5) return p.scale * dirichlet(p.dim, rng);
                const auto idx = random_subset(p.dim, rng);
                const Vec w = dirichlet(static_cast<int>(idx.size()), rng);
                for (std::size_t k = 0; k < idx.size(); ++k) x[idx[k]] = p.scale * w[k];
                return x;
              }
              case PolytopeFamily::Box:
                for (int i = 0; i < p.dim; ++i) {
                  const double u = unif(rng);
                  x[i] = u < 1.0 / 3 ? 0.0 : (u < 2.0 / 3 ? p.scale : p.scale * unif(rng));
                }
                return x;
              case PolytopeFamily::L1Ball: {
                const auto idx = random_subset(p.dim, rng);
                const bool interior = unif(rng) < 0.5;
                const Vec w = dirichlet(static_cast<int>(idx.size()) + (interior ? 1 : 0), rng);
                for (std::size_t k = 0; k < idx.size(); ++k) x[idx[k]] = (unif(rng) < 0.5 ? -1 : 1) * p.scale * w[k];
                return x;
              }
            }
            return x;
          },
          [&](const ProductDomain& p) -> Vec {
            Vec x(dom.dim());
            for (std::size_t i = 0; i < p.blocks.size(); ++i)
              x.segment(p.offsets[i], p.blocks[i].dim()) = sample_point(p.blocks[i], rng);
            return x;
          },
          [&](const auto&) -> Vec {
            const Vec y = sample_boundary_point(dom, rng);
            if (unif(rng) < 0.5) return y;
            const Vec c = std::holds_alternative<SublevelSet>(dom.variant()) ? dom.sublevel().center
                                                                              : Vec(Vec::Zero(dom.dim()));
            return c + std::pow(unif(rng), 1.0 / dom.dim()) * (y - c);
          },
      },
      dom.variant());
}

Vec sample_boundary_point(const Domain& dom, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec z(dom.dim());
  for (int i = 0; i < dom.dim(); ++i) z[i] = gauss(rng);
  if (std::holds_alternative<SublevelSet>(dom.variant())) {
    const auto& s = dom.sublevel();
    return s.center + std::sqrt(2.0 * s.level) * s.half_inv * z.normalized();
  }
  if (std::holds_alternative<LpBall>(dom.variant())) {
    const auto& b = dom.lp_ball();
    return b.radius * z / lp_norm(z, b.p);
  }
  fail(ErrorKind::Domain, "sample_boundary_point needs a smooth body");
}

double slope_oracle(const Domain& dom, const Vec& x, const Vec& g, long samples, std::uint64_t seed) {
  if (samples < 1) fail(ErrorKind::InvalidInput, "slope_oracle needs at least one sample");
  if (g.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const bool smooth_boundary = dom.is_smooth() && on_boundary(dom, x);
  double best = 0.0;
  for (long s = 0; s < samples; ++s) {
    Vec h;
    if (smooth_boundary && s % 2 == 1) {
      // Boundary points close to x approach tangent directions.
      Vec u(dom.dim());
      for (int i = 0; i < dom.dim(); ++i) u[i] = gauss(rng);
      const double step = std::pow(10.0, -6.0 * unif(rng));
      Vec z = x + step * u.normalized();
      if (std::holds_alternative<SublevelSet>(dom.variant())) {
        const auto& sl = dom.sublevel();
        h = sl.center + (z - sl.center) * std::sqrt(sl.level / sl.h(z));
      } else {
        const auto& b = dom.lp_ball();
        h = z * (b.radius / lp_norm(z, b.p));
      }
    } else if (dom.is_product()) {
      const auto& p = dom.product();
      h = x;
      for (std::size_t i = 0; i < p.blocks.size(); ++i) {
        if (unif(rng) < 0.3) continue;
        const Vec xb = block(x, p, i);
        const double t = std::pow(unif(rng), 2.0);
        h.segment(p.offsets[i], p.blocks[i].dim()) = xb + t * (sample_point(p.blocks[i], rng) - xb);
      }
    } else {
      h = sample_point(dom, rng);
      if (dom.is_polytope() && dom.polytope().family == PolytopeFamily::Box) {
        for (int i = 0; i < dom.dim(); ++i)
          if (unif(rng) < 1.0 / 3) h[i] = x[i];
      }
    }
    const Vec diff = h - x;
    const double n = diff.norm();
    if (n <= 1e-300) continue;
    best = std::max(best, g.dot(diff) / n);
  }
  return best;
}

std::vector<Vec> explicit_vertices(const Domain& dom) {
  if (!dom.is_polytope()) fail(ErrorKind::Domain, "explicit_vertices needs an atom polytope");
  const auto& p = dom.polytope();
  std::vector<Vec> out;
  switch (p.family) {
    case PolytopeFamily::Simplex:
      for (int i = 0; i < p.dim; ++i) out.push_back(p.scale * Vec::Unit(p.dim, i));
      break;
    case PolytopeFamily::L1Ball:
      for (int i = 0; i < p.dim; ++i) {
        out.push_back(p.scale * Vec::Unit(p.dim, i));
        out.push_back(-p.scale * Vec::Unit(p.dim, i));
      }
      break;
    case PolytopeFamily::Box:
      if (p.dim > 16) fail(ErrorKind::Unsupported, "explicit box vertices limited to n ≤ 16");
      for (long mask = 0; mask < (1L << p.dim); ++mask) {
        Vec v(p.dim);
        for (int i = 0; i < p.dim; ++i) v[i] = (mask >> i) & 1 ? p.scale : 0.0;
        out.push_back(v);
      }
      break;
  }
  return out;
}

}  // namespace sscfw
