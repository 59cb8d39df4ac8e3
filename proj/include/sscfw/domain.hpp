#pragma once

#include "sscfw/types.hpp"

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace sscfw {

enum class PolytopeFamily { Simplex, L1Ball, Box };

// Simplex = {x ≥ 0, Σx = scale}; L1Ball = {‖x‖₁ ≤ scale}; Box = [0, scale]ⁿ.
struct AtomPolytope {
  PolytopeFamily family = PolytopeFamily::Simplex;
  double scale = 1.0;
  int dim = 1;
};

// Ω = {x : ½(x−c)ᵀH(x−c) ≤ a}.
struct SublevelSet {
  Mat H;
  Vec center;
  double level = 0.5;
  double mu_h = 1.0;
  double L_h = 1.0;
  Mat H_inv;
  Mat half_inv;  // L⁻ᵀ from H = LLᵀ, maps the unit ball onto {½ yᵀHy ≤ ½}

  double h(const Vec& x) const {
    const Vec z = x - center;
    return 0.5 * z.dot(H * z);
  }
  Vec grad_h(const Vec& x) const { return H * (x - center); }
};

// Ω = {‖x‖_p ≤ radius}, 1 < p < ∞.
struct LpBall {
  double p = 2.0;
  double radius = 1.0;
  int dim = 1;
};

class Domain;

struct ProductDomain {
  std::vector<Domain> blocks;
  std::vector<int> offsets;  // offsets[i] is the first coordinate of block i; offsets.back() = total dim
};

class Domain {
 public:
  using Variant = std::variant<AtomPolytope, SublevelSet, LpBall, ProductDomain>;

  Domain() : v_(AtomPolytope{}) {}
  Domain(AtomPolytope p);
  Domain(SublevelSet s);
  Domain(LpBall b);
  Domain(ProductDomain p);

  const Variant& variant() const { return v_; }
  int dim() const { return dim_; }
  bool is_polytope() const { return std::holds_alternative<AtomPolytope>(v_); }
  bool is_smooth() const {
    return std::holds_alternative<SublevelSet>(v_) || std::holds_alternative<LpBall>(v_);
  }
  bool is_product() const { return std::holds_alternative<ProductDomain>(v_); }
  const AtomPolytope& polytope() const { return std::get<AtomPolytope>(v_); }
  const SublevelSet& sublevel() const { return std::get<SublevelSet>(v_); }
  const LpBall& lp_ball() const { return std::get<LpBall>(v_); }
  const ProductDomain& product() const { return std::get<ProductDomain>(v_); }

 private:
  Variant v_;
  int dim_ = 0;
};

Domain make_simplex(int n, double scale = 1.0);
Domain make_l1_ball(int n, double scale = 1.0);
Domain make_box(int n, double scale = 1.0);
Domain make_lp_ball(int n, double p, double radius = 1.0);
// mu_h / L_h default to the extreme eigenvalues of H; explicit values are validated against them.
Domain make_sublevel(const Mat& H, const Vec& center, double level, double mu_h = 0.0, double L_h = 0.0);
Domain make_product(std::vector<Domain> blocks);

std::string describe(const Domain& dom);

enum class CoordStatus : std::int8_t { Free, Lower, Upper };

struct FaceDescriptor {
  enum class Kind { Polytope, Smooth, Product };
  Kind kind = Kind::Polytope;
  bool whole = false;               // the face is Ω itself
  std::vector<CoordStatus> status;  // polytopes: Lower = pinned at 0, Upper = pinned at scale
  std::vector<std::int8_t> sign;    // L1Ball boundary faces: sign pattern, 0 on pinned coordinates
  Vec point;                        // smooth boundary faces: the single point
  std::vector<FaceDescriptor> blocks;

  bool interior() const { return whole; }
};

struct TangentProjection {
  Vec tangent;
  double pi_norm = 0.0;
};

double feasibility_tolerance(const Domain& dom);
bool contains(const Domain& dom, const Vec& x, double tol = -1.0);
void require_feasible(const Domain& dom, const Vec& x, const char* where);

Vec lmo(const Domain& dom, const Vec& g);
FaceDescriptor minimal_face(const Domain& dom, const Vec& x);
Vec face_lmo(const Domain& dom, const FaceDescriptor& face, const Vec& g);
double max_feasible_step(const Domain& dom, const Vec& x, const Vec& d);
TangentProjection tangent_projection(const Domain& dom, const Vec& x, const Vec& g);
double slope_oracle(const Domain& dom, const Vec& x, const Vec& g, long samples, std::uint64_t seed = 1);

bool on_boundary(const Domain& dom, const Vec& x);
Vec outward_normal(const Domain& dom, const Vec& x);
Vec orthographic_retraction(const Domain& dom, const Vec& x, const Vec& u);
// P(x, u) − x, computed without cancellation.
Vec retraction_step(const Domain& dom, const Vec& x, const Vec& u);
double diameter(const Domain& dom);

// Value of the defining function and its gradient for smooth bodies: h for sublevel sets,
// ‖x‖_p^p / p for Lp balls, together with the level at which the boundary sits.
double level_value(const Domain& dom, const Vec& x);
Vec level_gradient(const Domain& dom, const Vec& x);
double boundary_level(const Domain& dom);

Vec default_start(const Domain& dom);
Vec sample_point(const Domain& dom, std::mt19937_64& rng);
Vec sample_boundary_point(const Domain& dom, std::mt19937_64& rng);
std::vector<Vec> explicit_vertices(const Domain& dom);

}  // namespace sscfw
