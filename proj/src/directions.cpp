#include "sscfw/directions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace sscfw {

namespace {

bool negligible_slope(const Vec& g, const Vec& d) {
  const double dn = d.norm();
  if (dn == 0.0) return true;
  return g.dot(d) <= kZeroSlopeTol * g.norm() * dn;
}

double active_set_tolerance(const Domain& dom) {
  return dom.is_polytope() ? 1e-9 * std::max(1.0, dom.polytope().scale) : 1e-9;
}

int argmin_atom(const ActiveSet& S, const Vec& g) {
  int best = -1;
  double best_val = kInf;
  for (std::size_t i = 0; i < S.atoms.size(); ++i) {
    const double v = S.atoms[i].dot(g);
    if (v < best_val) {
      best_val = v;
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace

const char* to_string(DirectionKind k) {
  switch (k) {
    case DirectionKind::FW: return "FW";
    case DirectionKind::Away: return "Away";
    case DirectionKind::Pairwise: return "Pairwise";
    case DirectionKind::InFace: return "InFace";
    case DirectionKind::SOR: return "SOR";
    case DirectionKind::Zero: return "Zero";
    case DirectionKind::ProductComposite: return "ProductComposite";
  }
  return "?";
}

const char* to_string(MethodKind k) {
  switch (k) {
    case MethodKind::FW: return "fw";
    case MethodKind::AFW: return "afw";
    case MethodKind::PFW: return "pfw";
    case MethodKind::FDFW: return "fdfw";
    case MethodKind::SOR: return "sor";
    case MethodKind::Product: return "product";
  }
  return "?";
}

MethodKind method_kind_from_string(const std::string& s) {
  if (s == "fw") return MethodKind::FW;
  if (s == "afw") return MethodKind::AFW;
  if (s == "pfw") return MethodKind::PFW;
  if (s == "fdfw") return MethodKind::FDFW;
  if (s == "sor") return MethodKind::SOR;
  if (s == "product") return MethodKind::Product;
  fail(ErrorKind::InvalidInput, "unknown method '" + s + "'");
}

std::string MethodSpec::describe() const {
  if (kind != MethodKind::Product) return to_string(kind);
  std::ostringstream os;
  os << "product-" << (mode == ProductMode::Case1 ? "case1" : "case2") << "(";
  for (std::size_t i = 0; i < blocks.size(); ++i) os << (i ? "," : "") << blocks[i].describe();
  os << ")";
  return os.str();
}

Vec ActiveSet::point() const {
  if (atoms.empty()) return Vec();
  Vec x = Vec::Zero(atoms.front().size());
  for (std::size_t i = 0; i < atoms.size(); ++i) x += weights[i] * atoms[i];
  return x;
}

int ActiveSet::find(const Vec& atom) const {
  for (std::size_t i = 0; i < atoms.size(); ++i)
    if (atoms[i] == atom) return static_cast<int>(i);
  return -1;
}

void ActiveSet::validate(const Vec& x, double tol) const {
  if (atoms.empty() || atoms.size() != weights.size()) fail(ErrorKind::InvalidActiveSet, "empty or ragged active set");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) fail(ErrorKind::InvalidActiveSet, "non-positive active-set weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-10) fail(ErrorKind::InvalidActiveSet, "active-set weights do not sum to 1");
  if (atoms.front().size() != x.size()) fail(ErrorKind::InvalidActiveSet, "active-set dimension mismatch");
  if ((point() - x).norm() > tol) fail(ErrorKind::InvalidActiveSet, "active set does not reconstruct the iterate");
}

ActiveSet initial_active_set(const Domain& dom, const Vec& x) {
  if (!dom.is_polytope()) fail(ErrorKind::Domain, "active sets need an atom polytope");
  require_feasible(dom, x, "initial_active_set");
  const auto& p = dom.polytope();
  const int n = p.dim;
  ActiveSet S;
  const auto add = [&](Vec atom, double w) {
    if (w <= 0.0) return;
    const int at = S.find(atom);
    if (at >= 0) {
      S.weights[at] += w;
    } else {
      S.atoms.push_back(std::move(atom));
      S.weights.push_back(w);
    }
  };
  switch (p.family) {
    case PolytopeFamily::Simplex:
      for (int i = 0; i < n; ++i) add(p.scale * Vec::Unit(n, i), std::max(x[i], 0.0) / p.scale);
      break;
    case PolytopeFamily::L1Ball: {
      double used = 0.0;
      for (int i = 0; i < n; ++i) {
        const double w = std::abs(x[i]) / p.scale;
        add((x[i] >= 0 ? p.scale : -p.scale) * Vec::Unit(n, i), w);
        used += w;
      }
      const double rest = std::max(0.0, 1.0 - used);
      add(p.scale * Vec::Unit(n, 0), 0.5 * rest);
      add(-p.scale * Vec::Unit(n, 0), 0.5 * rest);
      break;
    }
    case PolytopeFamily::Box: {
      // Staircase decomposition: sort coordinates in decreasing order.
      std::vector<int> order(n);
      std::iota(order.begin(), order.end(), 0);
      const Vec y = (x / p.scale).cwiseMax(0.0).cwiseMin(1.0);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return y[a] > y[b]; });
      Vec v = Vec::Zero(n);
      add(v, 1.0 - y[order[0]]);
      for (int k = 0; k < n; ++k) {
        v[order[k]] = p.scale;
        const double next = k + 1 < n ? y[order[k + 1]] : 0.0;
        add(v, y[order[k]] - next);
      }
      break;
    }
  }
  double sum = 0.0;
  for (double w : S.weights) sum += w;
  for (double& w : S.weights) w /= sum;
  return S;
}

DirectionChoice zero_choice(int dim) {
  DirectionChoice c;
  c.d = Vec::Zero(dim);
  c.alpha_max = 0.0;
  c.kind = DirectionKind::Zero;
  return c;
}

DirectionChoice fw_direction(const Domain& dom, const Vec& x, const Vec& g, const Vec* cached_s) {
  const Vec s = cached_s ? *cached_s : lmo(dom, g);
  DirectionChoice c;
  c.d = s - x;
  if (negligible_slope(g, c.d)) return zero_choice(dom.dim());
  c.alpha_max = 1.0;
  c.kind = DirectionKind::FW;
  c.add_atom = s;
  return c;
}

DirectionChoice afw_direction(const Domain& dom, const Vec& x, const Vec& g, const ActiveSet& S, const Vec* cached_s) {
  S.validate(x, active_set_tolerance(dom));
  DirectionChoice fw = fw_direction(dom, x, g, cached_s);
  if (fw.is_zero()) return fw;
  const int q = argmin_atom(S, g);
  const Vec away = x - S.atoms[q];
  if (fw.d.dot(g) >= away.dot(g)) return fw;
  DirectionChoice c;
  c.d = away;
  c.kind = DirectionKind::Away;
  c.drop_index = q;
  const double lam = S.weights[q];
  c.alpha_max = lam < 1.0 ? lam / (1.0 - lam) : max_feasible_step(dom, x, away);
  return c;
}

DirectionChoice pfw_direction(const Domain& dom, const Vec& x, const Vec& g, const ActiveSet& S, const Vec* cached_s) {
  S.validate(x, active_set_tolerance(dom));
  const Vec s = cached_s ? *cached_s : lmo(dom, g);
  const int q = argmin_atom(S, g);
  DirectionChoice c;
  c.d = s - S.atoms[q];
  if (S.atoms[q] == s || negligible_slope(g, c.d)) return zero_choice(dom.dim());
  c.kind = DirectionKind::Pairwise;
  c.alpha_max = S.weights[q];
  c.add_atom = s;
  c.drop_index = q;
  return c;
}

DirectionChoice fdfw_direction(const Domain& dom, const Vec& x, const Vec& g, const Vec* cached_s) {
  DirectionChoice fw = fw_direction(dom, x, g, cached_s);
  if (fw.is_zero()) return fw;
  const FaceDescriptor face = minimal_face(dom, x);
  const Vec in_face = x - face_lmo(dom, face, g);
  if (fw.d.dot(g) >= in_face.dot(g)) return fw;
  DirectionChoice c;
  c.d = in_face;
  c.kind = DirectionKind::InFace;
  c.alpha_max = max_feasible_step(dom, x, in_face);
  return c;
}

double shrink_coefficient_bound(const Domain& dom, const Vec& x, const Vec& g) {
  if (!dom.is_smooth()) fail(ErrorKind::Domain, "shrink_coefficient_bound needs a smooth body");
  const Vec J = outward_normal(dom, x);
  const Vec tangential = g - g.dot(J) * J;
  const double gn = g.norm();
  if (gn == 0.0 || tangential.norm() <= kZeroSlopeTol * gn)
    fail(ErrorKind::Domain, "shrink_coefficient_bound: g has no tangential component");
  if (std::holds_alternative<SublevelSet>(dom.variant())) {
    const auto& s = dom.sublevel();
    return s.grad_h(x).norm() / (gn * s.L_h);
  }
  const auto& b = dom.lp_ball();
  const Vec grad = level_gradient(dom, x);
  double curvature = 0.0;
  if (b.p >= 2.0) {
    curvature = (b.p - 1.0) * std::pow(b.radius, b.p - 2.0);
  } else {
    const double floor = std::max(x.cwiseAbs().minCoeff(), 1e-3 * b.radius);
    curvature = (b.p - 1.0) * std::pow(floor, b.p - 2.0);
  }
  return grad.norm() / (gn * curvature);
}

DirectionChoice sor_direction(const Domain& dom, const Vec& x, const Vec& g, const SorParams& params) {
  if (!dom.is_smooth()) fail(ErrorKind::Domain, "sor_direction needs a smooth body");
  if (!(params.tau_bar > 0.0 && params.tau_bar < 1.0) || !(params.nu_hat > 0.0 && params.nu_hat <= 1.0))
    fail(ErrorKind::InvalidInput, "SOR parameters out of range");
  const double gn = g.norm();
  if (gn == 0.0) return zero_choice(dom.dim());
  DirectionChoice c;
  c.kind = DirectionKind::SOR;
  if (!on_boundary(dom, x)) {
    c.d = g;
    c.alpha_max = max_feasible_step(dom, x, g);
    return c;
  }
  const Vec J = outward_normal(dom, x);
  const double gJ = g.dot(J);
  if (gJ < -kZeroSlopeTol * gn) {
    c.d = g;
    c.alpha_max = max_feasible_step(dom, x, g);
    return c;
  }
  const Vec tangential = g - gJ * J;
  if (tangential.norm() <= kZeroSlopeTol * gn) return zero_choice(dom.dim());
  const double pi = (g - std::max(0.0, gJ) * J).norm();

  struct Trial {
    bool ok = false;
    Vec step;
  };
  const auto trial = [&](double lambda) {
    Trial t;
    try {
      t.step = retraction_step(dom, x, lambda * tangential);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::RetractionUndefined) throw;
      return t;
    }
    const double sn = t.step.norm();
    t.ok = sn > 0.0 && g.dot(t.step) >= params.tau_bar * pi * sn;
    return t;
  };

  double lambda = shrink_coefficient_bound(dom, x, g);
  Trial best = trial(lambda);
  for (int i = 0; i < 80 && !best.ok; ++i) {
    lambda *= 0.5;
    best = trial(lambda);
  }
  if (!best.ok) {
    // Below this level the tangential part is indistinguishable from retraction roundoff.
    if (tangential.norm() <= 1e-7 * gn) return zero_choice(dom.dim());
    fail(ErrorKind::NumericConsistency, "SOR could not certify a tangential step");
  }
  const double floor = lambda * params.nu_hat;
  for (int i = 0; i < 30; ++i) {
    Trial next = trial(2.0 * lambda);
    if (!next.ok) break;
    lambda *= 2.0;
    best = std::move(next);
  }
  if (lambda < floor) fail(ErrorKind::NumericConsistency, "SOR shrink coefficient fell below its floor");
  c.d = best.step;
  c.alpha_max = max_feasible_step(dom, x, c.d);
  if (!(c.alpha_max > 0.0)) c.alpha_max = 1.0;
  return c;
}

ActiveSet apply_bookkeeping(ActiveSet S, const DirectionChoice& choice, double alpha) {
  if (alpha < 0.0 || alpha > choice.alpha_max * (1.0 + 1e-12))
    fail(ErrorKind::InvalidInput, "apply_bookkeeping: stepsize outside [0, alpha_max]");
  if (alpha == 0.0) return S;
  const bool maximal = std::abs(alpha - choice.alpha_max) <= 1e-12 * std::max(1.0, choice.alpha_max);
  const auto add_weight = [&](const Vec& atom, double w) {
    const int at = S.find(atom);
    if (at >= 0) {
      S.weights[at] += w;
    } else {
      S.atoms.push_back(atom);
      S.weights.push_back(w);
    }
  };
  switch (choice.kind) {
    case DirectionKind::FW:
      for (double& w : S.weights) w *= (1.0 - alpha);
      add_weight(*choice.add_atom, alpha);
      break;
    case DirectionKind::Away: {
      for (double& w : S.weights) w *= (1.0 + alpha);
      double& wq = S.weights[choice.drop_index];
      wq -= alpha;
      if (wq < -1e-12) fail(ErrorKind::NumericConsistency, "away step drives a weight negative");
      if (maximal) wq = 0.0;
      break;
    }
    case DirectionKind::Pairwise: {
      double& wq = S.weights[choice.drop_index];
      wq -= alpha;
      if (wq < -1e-12) fail(ErrorKind::NumericConsistency, "pairwise step drives a weight negative");
      if (maximal) wq = 0.0;
      add_weight(*choice.add_atom, alpha);
      break;
    }
    default:
      return S;
  }
  ActiveSet out;
  double sum = 0.0;
  for (std::size_t i = 0; i < S.atoms.size(); ++i) {
    if (S.weights[i] > 0.0) {
      out.atoms.push_back(std::move(S.atoms[i]));
      out.weights.push_back(S.weights[i]);
      sum += S.weights[i];
    }
  }
  if (out.atoms.empty()) fail(ErrorKind::NumericConsistency, "active set became empty");
  for (double& w : out.weights) w /= sum;
  return out;
}

DirectionChoice product_direction(const ProductDomain& prod, const Vec& g, std::vector<DirectionChoice> block_choices,
                                  ProductMode mode, const std::vector<double>& case2_weights) {
  const std::size_t m = prod.blocks.size();
  const int n = prod.offsets.back();
  std::vector<double> slope(m, 0.0);
  double best = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& c = block_choices[i];
    if (c.is_zero()) continue;
    const double cn = c.d.norm();
    if (cn == 0.0) continue;
    slope[i] = g.segment(prod.offsets[i], prod.blocks[i].dim()).dot(c.d) / cn;
    best = std::max(best, slope[i]);
  }
  if (!(best > 0.0)) return zero_choice(n);

  std::vector<double> w(m, 0.0);
  if (mode == ProductMode::Case1) {
    for (std::size_t i = 0; i < m; ++i) w[i] = std::max(slope[i], 0.0);
  } else if (case2_weights.empty()) {
    const auto top = std::max_element(slope.begin(), slope.end()) - slope.begin();
    w[top] = slope[top];
  } else {
    if (case2_weights.size() != m) fail(ErrorKind::InvalidInput, "case2 weights need one entry per block");
    const double wmax = *std::max_element(case2_weights.begin(), case2_weights.end());
    bool meets = false;
    for (std::size_t i = 0; i < m; ++i) {
      if (case2_weights[i] < 0.0) fail(ErrorKind::InvalidInput, "case2 weights must be nonnegative");
      if (case2_weights[i] == wmax && slope[i] == best) meets = true;
    }
    if (!(wmax > 0.0) || !meets)
      fail(ErrorKind::InvalidInput, "case2 weights must peak on a steepest block");
    for (std::size_t i = 0; i < m; ++i) w[i] = slope[i] > 0.0 ? case2_weights[i] : 0.0;
  }

  DirectionChoice c;
  c.kind = DirectionKind::ProductComposite;
  c.d = Vec::Zero(n);
  c.alpha_max = kInf;
  c.block_rate.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (w[i] <= 0.0) continue;
    const auto& bc = block_choices[i];
    const double rate = w[i] / bc.d.norm();
    c.block_rate[i] = rate;
    c.d.segment(prod.offsets[i], prod.blocks[i].dim()) = rate * bc.d;
    c.alpha_max = std::min(c.alpha_max, bc.alpha_max / rate);
  }
  c.blocks = std::move(block_choices);
  return c;
}

void validate_method(const Domain& dom, const MethodSpec& spec) {
  switch (spec.kind) {
    case MethodKind::AFW:
    case MethodKind::PFW:
      if (!dom.is_polytope()) fail(ErrorKind::InvalidInput, std::string(to_string(spec.kind)) + " needs an atom polytope");
      break;
    case MethodKind::SOR:
      if (!dom.is_smooth()) fail(ErrorKind::InvalidInput, "sor needs a smooth body");
      if (!(spec.sor.tau_bar > 0.0 && spec.sor.tau_bar < 1.0) || !(spec.sor.nu_hat > 0.0 && spec.sor.nu_hat <= 1.0))
        fail(ErrorKind::InvalidInput, "SOR parameters out of range");
      break;
    case MethodKind::FW:
    case MethodKind::FDFW:
      if (dom.is_product()) fail(ErrorKind::InvalidInput, "use a product method on product domains");
      break;
    case MethodKind::Product: {
      if (!dom.is_product()) fail(ErrorKind::InvalidInput, "product method needs a product domain");
      const auto& p = dom.product();
      if (spec.blocks.size() != p.blocks.size()) fail(ErrorKind::InvalidInput, "one block method per product block");
      for (std::size_t i = 0; i < p.blocks.size(); ++i) validate_method(p.blocks[i], spec.blocks[i]);
      break;
    }
  }
}

Method::Method(const Domain& dom, MethodSpec spec) : dom_(dom), spec_(std::move(spec)) {
  validate_method(dom_, spec_);
  if (spec_.kind == MethodKind::Product) {
    const auto& p = dom_.product();
    for (std::size_t i = 0; i < p.blocks.size(); ++i) blocks_.emplace_back(p.blocks[i], spec_.blocks[i]);
  }
}

void Method::reset(const Vec& x) {
  require_feasible(dom_, x, "method reset");
  cached_s_.reset();
  has_active_set_ = spec_.kind == MethodKind::AFW || spec_.kind == MethodKind::PFW;
  if (has_active_set_) active_ = initial_active_set(dom_, x);
  if (spec_.kind == MethodKind::Product) {
    const auto& p = dom_.product();
    for (std::size_t i = 0; i < blocks_.size(); ++i)
      blocks_[i].reset(x.segment(p.offsets[i], p.blocks[i].dim()));
  }
}

void Method::begin_chain(const Vec& g) {
  if (spec_.kind == MethodKind::Product) {
    const auto& p = dom_.product();
    for (std::size_t i = 0; i < blocks_.size(); ++i)
      blocks_[i].begin_chain(g.segment(p.offsets[i], p.blocks[i].dim()));
    return;
  }
  if (spec_.kind == MethodKind::SOR) return;
  cached_s_ = lmo(dom_, g);
}

DirectionChoice Method::select(const Vec& y, const Vec& g) {
  const Vec* s = cached_s_ ? &*cached_s_ : nullptr;
  switch (spec_.kind) {
    case MethodKind::FW: return fw_direction(dom_, y, g, s);
    case MethodKind::AFW: return afw_direction(dom_, y, g, active_, s);
    case MethodKind::PFW: return pfw_direction(dom_, y, g, active_, s);
    case MethodKind::FDFW: return fdfw_direction(dom_, y, g, s);
    case MethodKind::SOR: return sor_direction(dom_, y, g, spec_.sor);
    case MethodKind::Product: {
      const auto& p = dom_.product();
      std::vector<DirectionChoice> choices;
      for (std::size_t i = 0; i < blocks_.size(); ++i) {
        const auto n = p.blocks[i].dim();
        choices.push_back(blocks_[i].select(y.segment(p.offsets[i], n), g.segment(p.offsets[i], n)));
      }
      return product_direction(p, g, std::move(choices), spec_.mode, spec_.case2_weights);
    }
  }
  return zero_choice(dom_.dim());
}

void Method::commit(const DirectionChoice& choice, double alpha) {
  if (choice.is_zero() || alpha == 0.0) return;
  if (has_active_set_) {
    active_ = apply_bookkeeping(std::move(active_), choice, alpha);
    return;
  }
  if (choice.kind == DirectionKind::ProductComposite) {
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      if (choice.block_rate[i] <= 0.0) continue;
      const auto& bc = choice.blocks[i];
      blocks_[i].commit(bc, std::min(alpha * choice.block_rate[i], bc.alpha_max));
    }
  }
}

}  // namespace sscfw
