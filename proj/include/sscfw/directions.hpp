#pragma once

#include "sscfw/domain.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace sscfw {

enum class DirectionKind { FW, Away, Pairwise, InFace, SOR, Zero, ProductComposite };
const char* to_string(DirectionKind k);

inline constexpr double kZeroSlopeTol = 1e-12;

struct ActiveSet {
  std::vector<Vec> atoms;
  std::vector<double> weights;

  Vec point() const;
  int find(const Vec& atom) const;
  std::size_t size() const { return atoms.size(); }
  // Throws invalid-active-set when the weights or the reconstruction disagree with x.
  void validate(const Vec& x, double tol) const;
};

// Vertex decomposition of a feasible point of an atom polytope.
ActiveSet initial_active_set(const Domain& dom, const Vec& x);

struct DirectionChoice {
  Vec d;
  double alpha_max = kInf;
  DirectionKind kind = DirectionKind::Zero;
  std::optional<Vec> add_atom;  // s, added or merged on FW and pairwise steps
  int drop_index = -1;          // q within the active set
  // Product domains: per-block choices and the factor mapping the composite stepsize to each block's.
  std::vector<DirectionChoice> blocks;
  std::vector<double> block_rate;

  bool is_zero() const { return kind == DirectionKind::Zero; }
};

DirectionChoice zero_choice(int dim);

DirectionChoice fw_direction(const Domain& dom, const Vec& x, const Vec& g, const Vec* cached_s = nullptr);
DirectionChoice afw_direction(const Domain& dom, const Vec& x, const Vec& g, const ActiveSet& S,
                              const Vec* cached_s = nullptr);
DirectionChoice pfw_direction(const Domain& dom, const Vec& x, const Vec& g, const ActiveSet& S,
                              const Vec* cached_s = nullptr);
DirectionChoice fdfw_direction(const Domain& dom, const Vec& x, const Vec& g, const Vec* cached_s = nullptr);

struct SorParams {
  double tau_bar = 0.5;
  double nu_hat = 1.0;
};
DirectionChoice sor_direction(const Domain& dom, const Vec& x, const Vec& g, const SorParams& params = {});
double shrink_coefficient_bound(const Domain& dom, const Vec& x, const Vec& g);

ActiveSet apply_bookkeeping(ActiveSet S, const DirectionChoice& choice, double alpha);

enum class MethodKind { FW, AFW, PFW, FDFW, SOR, Product };
enum class ProductMode { Case1, Case2 };

const char* to_string(MethodKind k);
MethodKind method_kind_from_string(const std::string& s);

struct MethodSpec {
  MethodKind kind = MethodKind::AFW;
  SorParams sor;
  ProductMode mode = ProductMode::Case1;
  std::vector<MethodSpec> blocks;
  std::vector<double> case2_weights;  // empty: one-hot on the steepest block

  std::string describe() const;
};

// Combines per-block choices at (x, g) into a composite product direction.
DirectionChoice product_direction(const ProductDomain& prod, const Vec& g, std::vector<DirectionChoice> block_choices,
                                  ProductMode mode, const std::vector<double>& case2_weights = {});

// A direction oracle together with its per-run state (active sets, cached linear minimizers).
class Method {
 public:
  Method(const Domain& dom, MethodSpec spec);

  void reset(const Vec& x);
  void begin_chain(const Vec& g);
  DirectionChoice select(const Vec& y, const Vec& g);
  void commit(const DirectionChoice& choice, double alpha);

  const MethodSpec& spec() const { return spec_; }
  const Domain& domain() const { return dom_; }
  const ActiveSet* active_set() const { return has_active_set_ ? &active_ : nullptr; }

 private:
  Domain dom_;
  MethodSpec spec_;
  ActiveSet active_;
  bool has_active_set_ = false;
  std::optional<Vec> cached_s_;
  std::vector<Method> blocks_;
};

void validate_method(const Domain& dom, const MethodSpec& spec);

}  // namespace sscfw
