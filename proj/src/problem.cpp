#include "lipm/problem.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace lipm {

namespace {

constexpr double kConvexEigTol = 1e-10;
constexpr double kPlantMargin = 0.05;

bool all_finite(const Matrix& m) { return m.allFinite(); }

void symmetrize(Matrix& m) { m = 0.5 * (m + m.transpose()).eval(); }

bool vec_equal(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) return false;
  for (Index i = 0; i < a.size(); ++i) {
    // Bitwise-equal semantics that also treat matching infinities as equal.
    if (!(a[i] == b[i])) return false;
  }
  return true;
}

bool mat_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

}  // namespace

std::string_view to_string(FamilyTag tag) {
  switch (tag) {
    case FamilyTag::QpRhs: return "QP_RHS";
    case FamilyTag::QpAll: return "QP_ALL";
    case FamilyTag::QcqpRhs: return "QCQP_RHS";
    case FamilyTag::QcqpAll: return "QCQP_ALL";
    case FamilyTag::NonconvexSin: return "NONCONVEX_SIN";
    case FamilyTag::External: return "EXTERNAL";
  }
  return "EXTERNAL";
}

FamilyTag family_tag_from_string(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (auto tag : {FamilyTag::QpRhs, FamilyTag::QpAll, FamilyTag::QcqpRhs,
                   FamilyTag::QcqpAll, FamilyTag::NonconvexSin, FamilyTag::External}) {
    if (to_string(tag) == upper) return tag;
  }
  throw std::invalid_argument("unknown family tag: " + std::string(name));
}

std::string_view to_string(PerturbMode mode) {
  return mode == PerturbMode::Rhs ? "RHS" : "ALL";
}

bool is_convex_family(FamilyTag tag) {
  return tag == FamilyTag::QpRhs || tag == FamilyTag::QpAll ||
         tag == FamilyTag::QcqpRhs || tag == FamilyTag::QcqpAll;
}

// ---------------------------------------------------------------------------
// NlpInstance

NlpInstance::NlpInstance(Matrix Q0, Vector p0, bool sin_term,
                         std::vector<InequalityConstraint> ineq,
                         std::vector<EqualityConstraint> eq, Vector lower,
                         Vector upper, FamilyTag family_tag)
    : Q0_(std::move(Q0)),
      p0_(std::move(p0)),
      sin_term_(sin_term),
      ineq_(std::move(ineq)),
      eq_(std::move(eq)),
      lower_(std::move(lower)),
      upper_(std::move(upper)),
      family_tag_(family_tag) {
  const Index n = p0_.size();
  if (n < 1) throw std::invalid_argument("instance needs at least one variable");
  if (Q0_.rows() != n || Q0_.cols() != n)
    throw std::invalid_argument("Q0 must be n x n");
  if (lower_.size() != n || upper_.size() != n)
    throw std::invalid_argument("bound vectors must have length n");
  if (!all_finite(Q0_) || !p0_.allFinite())
    throw std::invalid_argument("objective data must be finite");
  symmetrize(Q0_);

  A_ineq_.resize(m_ineq(), n);
  b_ineq_.resize(m_ineq());
  for (Index j = 0; j < m_ineq(); ++j) {
    auto& c = ineq_[static_cast<std::size_t>(j)];
    if (c.p.size() != n) throw std::invalid_argument("inequality p must have length n");
    if (!c.p.allFinite() || !std::isfinite(c.q))
      throw std::invalid_argument("inequality data must be finite");
    if (c.Q) {
      if (c.Q->rows() != n || c.Q->cols() != n)
        throw std::invalid_argument("inequality Q must be n x n");
      if (!all_finite(*c.Q)) throw std::invalid_argument("inequality Q must be finite");
      symmetrize(*c.Q);
      has_quadratic_ineq_ = true;
    }
    A_ineq_.row(j) = c.p.transpose();
    b_ineq_[j] = c.q;
  }

  A_eq_.resize(m_eq(), n);
  b_eq_.resize(m_eq());
  for (Index j = 0; j < m_eq(); ++j) {
    const auto& c = eq_[static_cast<std::size_t>(j)];
    if (c.p.size() != n) throw std::invalid_argument("equality p must have length n");
    if (!c.p.allFinite() || !std::isfinite(c.q))
      throw std::invalid_argument("equality data must be finite");
    A_eq_.row(j) = c.p.transpose();
    b_eq_[j] = c.q;
  }

  for (Index i = 0; i < n; ++i) {
    const double lo = lower_[i];
    const double hi = upper_[i];
    if (std::isnan(lo) || std::isnan(hi) || lo == kInf || hi == -kInf)
      throw std::invalid_argument("invalid bound value");
    if (lo > hi) throw std::invalid_argument("lower bound exceeds upper bound");
    if (lo > -kInf) lower_idx_.push_back(i);
    if (hi < kInf) upper_idx_.push_back(i);
  }
}

NlpInstance::NlpInstance(Matrix Q0, Vector p0, bool sin_term,
                         std::vector<InequalityConstraint> ineq,
                         std::vector<EqualityConstraint> eq, FamilyTag family_tag)
    : NlpInstance(Q0, p0, sin_term, std::move(ineq), std::move(eq),
                  Vector::Constant(p0.size(), -kInf),
                  Vector::Constant(p0.size(), kInf), family_tag) {}

void NlpInstance::check_dims(const Vector& x) const {
  if (x.size() != n()) throw std::invalid_argument("point dimension mismatch");
}

double NlpInstance::objective(const Vector& x) const {
  check_dims(x);
  const double quad = 0.5 * x.dot(Q0_ * x);
  if (sin_term_) return quad + p0_.dot(x.array().sin().matrix());
  return quad + p0_.dot(x);
}

Vector NlpInstance::objective_gradient(const Vector& x) const {
  check_dims(x);
  Vector g = Q0_ * x;
  if (sin_term_)
    g.array() += p0_.array() * x.array().cos();
  else
    g += p0_;
  return g;
}

Matrix NlpInstance::objective_hessian(const Vector& x) const {
  check_dims(x);
  Matrix H = Q0_;
  if (sin_term_) H.diagonal().array() -= p0_.array() * x.array().sin();
  return H;
}

Vector NlpInstance::ineq_values(const Vector& x) const {
  check_dims(x);
  Vector g = A_ineq_ * x - b_ineq_;
  if (has_quadratic_ineq_) {
    for (Index j = 0; j < m_ineq(); ++j) {
      const auto& Q = ineq_[static_cast<std::size_t>(j)].Q;
      if (Q) g[j] += x.dot(*Q * x);
    }
  }
  return g;
}

Matrix NlpInstance::ineq_jacobian(const Vector& x) const {
  check_dims(x);
  Matrix Jg = A_ineq_;
  if (has_quadratic_ineq_) {
    for (Index j = 0; j < m_ineq(); ++j) {
      const auto& Q = ineq_[static_cast<std::size_t>(j)].Q;
      if (Q) Jg.row(j) += 2.0 * (*Q * x).transpose();
    }
  }
  return Jg;
}

Vector NlpInstance::eq_values(const Vector& x) const {
  check_dims(x);
  return A_eq_ * x - b_eq_;
}

Matrix NlpInstance::lagrangian_hessian(const Vector& x, const Vector& eta) const {
  if (eta.size() != m_ineq()) throw std::invalid_argument("eta dimension mismatch");
  Matrix H = objective_hessian(x);
  if (has_quadratic_ineq_) {
    for (Index j = 0; j < m_ineq(); ++j) {
      const auto& Q = ineq_[static_cast<std::size_t>(j)].Q;
      if (Q) H.noalias() += (2.0 * eta[j]) * *Q;
    }
  }
  return H;
}

bool operator==(const NlpInstance& a, const NlpInstance& b) {
  if (a.family_tag_ != b.family_tag_ || a.sin_term_ != b.sin_term_) return false;
  if (!mat_equal(a.Q0_, b.Q0_) || !vec_equal(a.p0_, b.p0_)) return false;
  if (!vec_equal(a.lower_, b.lower_) || !vec_equal(a.upper_, b.upper_)) return false;
  if (a.ineq_.size() != b.ineq_.size() || a.eq_.size() != b.eq_.size()) return false;
  for (std::size_t j = 0; j < a.ineq_.size(); ++j) {
    const auto& ca = a.ineq_[j];
    const auto& cb = b.ineq_[j];
    if (ca.Q.has_value() != cb.Q.has_value()) return false;
    if (ca.Q && !mat_equal(*ca.Q, *cb.Q)) return false;
    if (!vec_equal(ca.p, cb.p) || ca.q != cb.q) return false;
  }
  for (std::size_t j = 0; j < a.eq_.size(); ++j) {
    if (!vec_equal(a.eq_[j].p, b.eq_[j].p) || a.eq_[j].q != b.eq_[j].q) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Evaluation and violations

Evaluation evaluate(const NlpInstance& instance, const Vector& x) {
  if (!x.allFinite()) throw NonFiniteError("evaluate: non-finite point");
  Evaluation e;
  e.f = instance.objective(x);
  e.grad_f = instance.objective_gradient(x);
  e.hess_f = instance.objective_hessian(x);
  e.g = instance.ineq_values(x);
  e.jac_g = instance.ineq_jacobian(x);
  e.hess_g.reserve(instance.ineq().size());
  for (const auto& c : instance.ineq()) {
    e.hess_g.push_back(c.Q ? Matrix(2.0 * *c.Q) : Matrix());
  }
  e.h = instance.eq_values(x);
  e.jac_h = instance.eq_matrix();
  return e;
}

Violations violations(const NlpInstance& instance, const Vector& x) {
  Violations v;
  const Vector g = instance.ineq_values(x);
  double sum = 0.0;
  std::size_t count = 0;
  auto add_ineq = [&](double term) {
    term = std::max(0.0, term);
    v.max_ineq = std::max(v.max_ineq, term);
    sum += term;
    ++count;
  };
  for (Index j = 0; j < g.size(); ++j) add_ineq(g[j]);
  for (Index i : instance.lower_indices()) add_ineq(instance.lower()[i] - x[i]);
  for (Index i : instance.upper_indices()) add_ineq(x[i] - instance.upper()[i]);
  if (count > 0) v.mean_ineq = sum / static_cast<double>(count);

  const Vector h = instance.eq_values(x);
  if (h.size() > 0) {
    v.max_eq = h.cwiseAbs().maxCoeff();
    v.mean_eq = h.cwiseAbs().mean();
  }
  return v;
}

// ---------------------------------------------------------------------------
// Dataset

std::pair<std::size_t, std::size_t> Dataset::split_for(std::size_t count) {
  const auto train = static_cast<std::size_t>(std::llround(count * 10.0 / 12.0));
  const auto val = static_cast<std::size_t>(std::llround(count / 12.0));
  const std::size_t train_end = std::min(train, count);
  return {train_end, std::min(train_end + val, count)};
}

std::span<const NlpInstance> Dataset::train() const {
  return std::span(instances).subspan(0, train_end);
}

std::span<const NlpInstance> Dataset::validation() const {
  return std::span(instances).subspan(train_end, val_end - train_end);
}

std::span<const NlpInstance> Dataset::test() const {
  return std::span(instances).subspan(val_end);
}

// ---------------------------------------------------------------------------
// Generation

namespace {

using Rng = std::mt19937_64;

Matrix normal_matrix(Rng& rng, Index rows, Index cols) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

Vector uniform_vector(Rng& rng, Index size, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Vector v(size);
  for (Index i = 0; i < size; ++i) v[i] = dist(rng);
  return v;
}

/// Entrywise multipliers U[0.8, 1.2].
Matrix multipliers(Rng& rng, Index rows, Index cols) {
  std::uniform_real_distribution<double> dist(0.8, 1.2);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

/// Raw (unsampled) family data: Gram factors and constraint rows.
struct FamilyFactors {
  Matrix G;               // Q0 = GGᵀ/n + 1e-2 I
  Vector p0;
  Matrix A_ineq;          // rows pⱼᵀ
  std::vector<Matrix> H;  // Qⱼ = HⱼHⱼᵀ/n (QCQP only)
  Matrix A_eq;
};

bool is_qcqp(FamilyTag tag) {
  return tag == FamilyTag::QcqpRhs || tag == FamilyTag::QcqpAll;
}

FamilyFactors draw_factors(Rng& rng, const FamilyConfig& c) {
  FamilyFactors f;
  f.G = normal_matrix(rng, c.n, c.n);
  f.p0 = normal_matrix(rng, c.n, 1);
  f.A_ineq = normal_matrix(rng, c.m_ineq, c.n);
  if (is_qcqp(c.family_tag)) {
    for (Index j = 0; j < c.m_ineq; ++j) f.H.push_back(normal_matrix(rng, c.n, c.n));
  }
  f.A_eq = normal_matrix(rng, c.m_eq, c.n);
  return f;
}

FamilyFactors scale_factors(Rng& rng, const FamilyFactors& base) {
  FamilyFactors f;
  f.G = base.G.cwiseProduct(multipliers(rng, base.G.rows(), base.G.cols()));
  f.p0 = base.p0.cwiseProduct(multipliers(rng, base.p0.size(), 1));
  f.A_ineq = base.A_ineq.cwiseProduct(multipliers(rng, base.A_ineq.rows(), base.A_ineq.cols()));
  for (const auto& H : base.H)
    f.H.push_back(H.cwiseProduct(multipliers(rng, H.rows(), H.cols())));
  f.A_eq = base.A_eq.cwiseProduct(multipliers(rng, base.A_eq.rows(), base.A_eq.cols()));
  return f;
}

struct Quadratics {
  Matrix Q0;
  std::vector<Matrix> Q;
};

Quadratics build_quadratics(const FamilyFactors& f, FamilyTag tag) {
  const auto n = static_cast<double>(f.G.rows());
  Quadratics q;
  q.Q0 = f.G * f.G.transpose() / n;
  q.Q0.diagonal().array() += 1e-2;
  for (const auto& H : f.H) q.Q.push_back(H * H.transpose() / n);

  if (is_convex_family(tag)) {
    auto check = [](const Matrix& Q) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (Q + Q.transpose()),
                                               Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -kConvexEigTol)
        throw std::logic_error("generator produced an indefinite quadratic block");
    };
    check(q.Q0);
    for (const auto& Q : q.Q) check(Q);
  }
  return q;
}

/// g̃ⱼ(x) = xᵀQⱼx + pⱼᵀx (inequality body without right-hand side).
Vector ineq_body(const FamilyFactors& f, const Quadratics& q, const Vector& x) {
  Vector body = f.A_ineq * x;
  for (std::size_t j = 0; j < q.Q.size(); ++j)
    body[static_cast<Index>(j)] += x.dot(q.Q[j] * x);
  return body;
}

NlpInstance assemble(const FamilyConfig& c, const FamilyFactors& f,
                     const Quadratics& q, const Vector& q_ineq, const Vector& q_eq) {
  std::vector<InequalityConstraint> ineq;
  ineq.reserve(static_cast<std::size_t>(c.m_ineq));
  for (Index j = 0; j < c.m_ineq; ++j) {
    InequalityConstraint con;
    if (!q.Q.empty()) con.Q = q.Q[static_cast<std::size_t>(j)];
    con.p = f.A_ineq.row(j).transpose();
    con.q = q_ineq[j];
    ineq.push_back(std::move(con));
  }
  std::vector<EqualityConstraint> eq;
  eq.reserve(static_cast<std::size_t>(c.m_eq));
  for (Index j = 0; j < c.m_eq; ++j) eq.push_back({f.A_eq.row(j).transpose(), q_eq[j]});
  return NlpInstance(q.Q0, f.p0, c.family_tag == FamilyTag::NonconvexSin,
                     std::move(ineq), std::move(eq), c.family_tag);
}

void validate(const FamilyConfig& c) {
  if (c.n < 1) throw std::invalid_argument("n must be positive");
  if (c.m_ineq < 0 || c.m_eq < 0) throw std::invalid_argument("constraint counts must be >= 0");
  if (c.sample_count < 1) throw std::invalid_argument("sample_count must be >= 1");
  switch (c.family_tag) {
    case FamilyTag::QpRhs:
    case FamilyTag::QcqpRhs:
      if (c.perturb_mode != PerturbMode::Rhs)
        throw std::invalid_argument("RHS family requires RHS perturbation mode");
      break;
    case FamilyTag::QpAll:
    case FamilyTag::QcqpAll:
      if (c.perturb_mode != PerturbMode::All)
        throw std::invalid_argument("ALL family requires ALL perturbation mode");
      break;
    case FamilyTag::NonconvexSin:
      break;
    case FamilyTag::External:
      throw std::invalid_argument("EXTERNAL instances are loaded, not generated");
  }
}

}  // namespace

CertifiedDataset generate_certified(const FamilyConfig& config) {
  validate(config);
  const Index n = config.n;

  Rng base_rng(mix_seed(config.seed, 0));
  const FamilyFactors base = draw_factors(base_rng, config);
  const Quadratics base_quad = build_quadratics(base, config.family_tag);
  const Vector x_base = uniform_vector(base_rng, n, -1.0, 1.0);
  const Vector u_base = uniform_vector(base_rng, config.m_ineq, 0.1, 1.1);
  const Vector q_ineq_base = ineq_body(base, base_quad, x_base) + u_base;

  CertifiedDataset out;
  const auto count = static_cast<std::size_t>(config.sample_count);
  out.dataset.instances.reserve(count);
  out.planted.reserve(count);

  for (std::size_t s = 0; s < count; ++s) {
    Rng rng(mix_seed(config.seed, s + 1));
    if (config.perturb_mode == PerturbMode::Rhs) {
      // Move the planted point inside the shared inequality region; only the
      // equality right-hand side follows it.
      const Vector delta = uniform_vector(rng, n, -1.0, 1.0);
      Vector x = x_base;
      double t = 1.0;
      for (int k = 0; k < 60; ++k, t *= 0.5) {
        const Vector trial = x_base + t * delta;
        const Vector slack = q_ineq_base - ineq_body(base, base_quad, trial);
        if (slack.size() == 0 || slack.minCoeff() >= kPlantMargin) {
          x = trial;
          break;
        }
      }
      const Vector q_eq = base.A_eq * x;
      out.dataset.instances.push_back(assemble(config, base, base_quad, q_ineq_base, q_eq));
      out.planted.push_back(x);
    } else {
      const FamilyFactors f = scale_factors(rng, base);
      const Quadratics quad = build_quadratics(f, config.family_tag);
      const Vector x = uniform_vector(rng, n, -1.0, 1.0);
      const Vector u = uniform_vector(rng, config.m_ineq, 0.1, 1.1);
      const Vector q_ineq = ineq_body(f, quad, x) + u;
      const Vector q_eq = f.A_eq * x;
      out.dataset.instances.push_back(assemble(config, f, quad, q_ineq, q_eq));
      out.planted.push_back(x);
    }
  }

  std::tie(out.dataset.train_end, out.dataset.val_end) = Dataset::split_for(count);
  return out;
}

Dataset generate(const FamilyConfig& config) {
  return generate_certified(config).dataset;
}

// ---------------------------------------------------------------------------
// Perturbation

std::string_view to_string(ParamBlock block) {
  switch (block) {
    case ParamBlock::Q0: return "Q0";
    case ParamBlock::p0: return "p0";
    case ParamBlock::Q_ineq: return "Q_ineq";
    case ParamBlock::p_ineq: return "p_ineq";
    case ParamBlock::q_ineq: return "q_ineq";
    case ParamBlock::p_eq: return "p_eq";
    case ParamBlock::q_eq: return "q_eq";
    case ParamBlock::x_L: return "x_L";
    case ParamBlock::x_U: return "x_U";
  }
  return "";
}

ParamBlock param_block_from_string(std::string_view name) {
  for (auto b : {ParamBlock::Q0, ParamBlock::p0, ParamBlock::Q_ineq, ParamBlock::p_ineq,
                 ParamBlock::q_ineq, ParamBlock::p_eq, ParamBlock::q_eq, ParamBlock::x_L,
                 ParamBlock::x_U}) {
    if (to_string(b) == name) return b;
  }
  throw std::invalid_argument("unknown parameter block: " + std::string(name));
}

PerturbRule perturb_rule_from_char(char c) {
  switch (c) {
    case 'p': return PerturbRule::Scale;
    case 'r': return PerturbRule::ScaleRound;
    case 'c': return PerturbRule::Keep;
    default: throw std::invalid_argument(std::string("unknown perturbation rule: ") + c);
  }
}

double apply_perturb_rule(double value, PerturbRule rule, double draw) {
  switch (rule) {
    case PerturbRule::Keep: return value;
    case PerturbRule::Scale: return value * draw;
    case PerturbRule::ScaleRound: return std::round(value * draw);
  }
  return value;
}

std::vector<ParamBlock> present_blocks(const NlpInstance& instance) {
  std::vector<ParamBlock> blocks{ParamBlock::Q0, ParamBlock::p0};
  if (instance.has_quadratic_ineq()) blocks.push_back(ParamBlock::Q_ineq);
  if (instance.m_ineq() > 0) {
    blocks.push_back(ParamBlock::p_ineq);
    blocks.push_back(ParamBlock::q_ineq);
  }
  if (instance.m_eq() > 0) {
    blocks.push_back(ParamBlock::p_eq);
    blocks.push_back(ParamBlock::q_eq);
  }
  if (instance.n_lower() > 0) blocks.push_back(ParamBlock::x_L);
  if (instance.n_upper() > 0) blocks.push_back(ParamBlock::x_U);
  return blocks;
}

NlpInstance perturb(const NlpInstance& base, const PerturbRules& rules,
                    std::uint64_t seed) {
  const auto present = present_blocks(base);
  for (const auto& [block, rule] : rules) {
    if (std::find(present.begin(), present.end(), block) == present.end())
      throw std::invalid_argument("perturbation rule for absent block " +
                                  std::string(to_string(block)));
  }
  for (auto block : present) {
    if (!rules.contains(block))
      throw std::invalid_argument("missing perturbation rule for block " +
                                  std::string(to_string(block)));
  }

  Rng rng(mix_seed(seed, 0x7e57));
  std::uniform_real_distribution<double> dist(0.8, 1.2);
  auto perturb_value = [&](double v, PerturbRule rule) {
    if (rule == PerturbRule::Keep || v == 0.0 || !std::isfinite(v)) return v;
    return apply_perturb_rule(v, rule, dist(rng));
  };
  // Symmetric blocks draw once per unordered entry and mirror it.
  auto perturb_symmetric = [&](Matrix m, PerturbRule rule) {
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = i; j < m.cols(); ++j) {
        m(i, j) = perturb_value(m(i, j), rule);
        m(j, i) = m(i, j);
      }
    }
    return m;
  };
  auto rule_of = [&](ParamBlock b) {
    auto it = rules.find(b);
    return it == rules.end() ? PerturbRule::Keep : it->second;
  };

  Matrix Q0 = perturb_symmetric(base.Q0(), rule_of(ParamBlock::Q0));
  Vector p0 = base.p0();
  for (Index i = 0; i < p0.size(); ++i) p0[i] = perturb_value(p0[i], rule_of(ParamBlock::p0));

  std::vector<InequalityConstraint> ineq = base.ineq();
  for (auto& c : ineq) {
    if (c.Q) c.Q = perturb_symmetric(*c.Q, rule_of(ParamBlock::Q_ineq));
  }
  for (auto& c : ineq) {
    for (Index i = 0; i < c.p.size(); ++i) c.p[i] = perturb_value(c.p[i], rule_of(ParamBlock::p_ineq));
  }
  for (auto& c : ineq) c.q = perturb_value(c.q, rule_of(ParamBlock::q_ineq));

  std::vector<EqualityConstraint> eq = base.eq();
  for (auto& c : eq) {
    for (Index i = 0; i < c.p.size(); ++i) c.p[i] = perturb_value(c.p[i], rule_of(ParamBlock::p_eq));
  }
  for (auto& c : eq) c.q = perturb_value(c.q, rule_of(ParamBlock::q_eq));

  Vector lower = base.lower();
  Vector upper = base.upper();
  for (Index i = 0; i < lower.size(); ++i) lower[i] = perturb_value(lower[i], rule_of(ParamBlock::x_L));
  for (Index i = 0; i < upper.size(); ++i) upper[i] = perturb_value(upper[i], rule_of(ParamBlock::x_U));

  return NlpInstance(std::move(Q0), std::move(p0), base.sin_term(), std::move(ineq),
                     std::move(eq), std::move(lower), std::move(upper), base.family_tag());
}

}  // namespace lipm
