#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lipm/types.hpp"

namespace lipm {

enum class FamilyTag { QpRhs, QpAll, QcqpRhs, QcqpAll, NonconvexSin, External };
enum class PerturbMode { Rhs, All };

std::string_view to_string(FamilyTag tag);
FamilyTag family_tag_from_string(std::string_view name);
std::string_view to_string(PerturbMode mode);

/// True for the QP_* and QCQP_* families, whose quadratic blocks are PSD.
bool is_convex_family(FamilyTag tag);

/// g(x) = xᵀQx + pᵀx − q ≤ 0; Q absent means a linear constraint.
struct InequalityConstraint {
  std::optional<Matrix> Q;
  Vector p;
  double q = 0.0;
};

/// h(x) = pᵀx − q = 0.
struct EqualityConstraint {
  Vector p;
  double q = 0.0;
};

/// One problem of the form
///
///   min  ½xᵀQ₀x + p₀ᵀx        (or p₀ᵀsin(x) when sin_term is set)
///   s.t. xᵀQⱼx + pⱼᵀx − qⱼ ≤ 0,  j ∈ ineq
///        pⱼᵀx − qⱼ = 0,          j ∈ eq
///        lower ≤ x ≤ upper       (entries may be ∓∞)
///
/// Immutable after construction. Quadratic blocks are symmetrized on entry and
/// the constraint rows are cached as dense matrices for evaluation.
class NlpInstance {
 public:
  NlpInstance(Matrix Q0, Vector p0, bool sin_term,
              std::vector<InequalityConstraint> ineq,
              std::vector<EqualityConstraint> eq, Vector lower, Vector upper,
              FamilyTag family_tag);

  /// Bound-free instance.
  NlpInstance(Matrix Q0, Vector p0, bool sin_term,
              std::vector<InequalityConstraint> ineq,
              std::vector<EqualityConstraint> eq, FamilyTag family_tag);

  Index n() const { return p0_.size(); }
  Index m_ineq() const { return static_cast<Index>(ineq_.size()); }
  Index m_eq() const { return static_cast<Index>(eq_.size()); }
  Index n_lower() const { return static_cast<Index>(lower_idx_.size()); }
  Index n_upper() const { return static_cast<Index>(upper_idx_.size()); }

  const Matrix& Q0() const { return Q0_; }
  const Vector& p0() const { return p0_; }
  bool sin_term() const { return sin_term_; }
  const std::vector<InequalityConstraint>& ineq() const { return ineq_; }
  const std::vector<EqualityConstraint>& eq() const { return eq_; }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  FamilyTag family_tag() const { return family_tag_; }

  /// Rows are pⱼᵀ of the inequality constraints.
  const Matrix& ineq_matrix() const { return A_ineq_; }
  const Vector& ineq_rhs() const { return b_ineq_; }
  const Matrix& eq_matrix() const { return A_eq_; }
  const Vector& eq_rhs() const { return b_eq_; }

  /// I^L and I^U in increasing order.
  const std::vector<Index>& lower_indices() const { return lower_idx_; }
  const std::vector<Index>& upper_indices() const { return upper_idx_; }

  bool has_quadratic_ineq() const { return has_quadratic_ineq_; }

  double objective(const Vector& x) const;
  Vector objective_gradient(const Vector& x) const;
  Matrix objective_hessian(const Vector& x) const;
  Vector ineq_values(const Vector& x) const;
  Matrix ineq_jacobian(const Vector& x) const;
  Vector eq_values(const Vector& x) const;

  /// ∇²f(x) + Σⱼ ηⱼ∇²gⱼ(x). Equalities are linear and contribute nothing.
  Matrix lagrangian_hessian(const Vector& x, const Vector& eta) const;

  friend bool operator==(const NlpInstance& a, const NlpInstance& b);

 private:
  void check_dims(const Vector& x) const;

  Matrix Q0_;
  Vector p0_;
  bool sin_term_;
  std::vector<InequalityConstraint> ineq_;
  std::vector<EqualityConstraint> eq_;
  Vector lower_;
  Vector upper_;
  FamilyTag family_tag_;

  Matrix A_ineq_;
  Vector b_ineq_;
  Matrix A_eq_;
  Vector b_eq_;
  std::vector<Index> lower_idx_;
  std::vector<Index> upper_idx_;
  bool has_quadratic_ineq_ = false;
};

/// Analytic values at a point. `hess_g[j]` is 2Qⱼ for quadratic constraints
/// and an empty 0×0 matrix (meaning zero) for linear ones.
struct Evaluation {
  double f = 0.0;
  Vector grad_f;
  Matrix hess_f;
  Vector g;
  Matrix jac_g;
  std::vector<Matrix> hess_g;
  Vector h;
  Matrix jac_h;
};

Evaluation evaluate(const NlpInstance& instance, const Vector& x);

struct Violations {
  double max_ineq = 0.0;
  double mean_ineq = 0.0;
  double max_eq = 0.0;
  double mean_eq = 0.0;
};

/// Bound violations count as inequality terms.
Violations violations(const NlpInstance& instance, const Vector& x);

struct FamilyConfig {
  Index n = 0;
  Index m_ineq = 0;
  Index m_eq = 0;
  FamilyTag family_tag = FamilyTag::QpRhs;
  PerturbMode perturb_mode = PerturbMode::Rhs;
  Index sample_count = 1;
  std::uint64_t seed = 0;
};

/// Instances plus the 10:1:1 train/validation/test boundaries.
struct Dataset {
  std::vector<NlpInstance> instances;
  std::size_t train_end = 0;
  std::size_t val_end = 0;

  std::span<const NlpInstance> train() const;
  std::span<const NlpInstance> validation() const;
  std::span<const NlpInstance> test() const;

  /// (train_end, val_end) for a 10:1:1 partition of `count` items.
  static std::pair<std::size_t, std::size_t> split_for(std::size_t count);

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// A generated dataset together with each instance's strictly interior point.
struct CertifiedDataset {
  Dataset dataset;
  std::vector<Vector> planted;
};

CertifiedDataset generate_certified(const FamilyConfig& config);
Dataset generate(const FamilyConfig& config);

enum class ParamBlock { Q0, p0, Q_ineq, p_ineq, q_ineq, p_eq, q_eq, x_L, x_U };
/// p: scale by U[0.8, 1.2]; r: scale then round; c: keep.
enum class PerturbRule { Scale, ScaleRound, Keep };
using PerturbRules = std::map<ParamBlock, PerturbRule>;

std::string_view to_string(ParamBlock block);
ParamBlock param_block_from_string(std::string_view name);
PerturbRule perturb_rule_from_char(char c);

double apply_perturb_rule(double value, PerturbRule rule, double draw);

/// Blocks present in an instance (the domain of a rule set).
std::vector<ParamBlock> present_blocks(const NlpInstance& instance);

NlpInstance perturb(const NlpInstance& base, const PerturbRules& rules,
                    std::uint64_t seed);

}  // namespace lipm
