#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "lipm/linalg.hpp"
#include "lipm/types.hpp"

namespace lipm {

enum class Gate : Index { Input = 0, Forget = 1, Cell = 2, Output = 3 };

/// Single-layer coordinate-wise LSTM. Every coordinate of the unknown runs the
/// same cell on the input [ŷᵢ, ∇ᵢφ(ŷ)] with its own hidden and cell state; a
/// linear head maps the hidden state to the coordinate's new estimate.
///
/// Gate weights are stacked in the order (input, forget, cell, output): W is
/// 4H × (2 + H), where the first two columns act on the input and the rest on
/// the previous hidden state.
struct LstmParams {
  Matrix W;
  Vector b;
  Vector w_out;
  double b_out = 0.0;

  LstmParams() = default;
  /// All-zero parameters.
  explicit LstmParams(Index hidden_dim);

  /// Gate weights U[−0.08, 0.08], forget bias 1, everything else 0.
  static LstmParams initialized(Index hidden_dim, std::uint64_t seed);

  Index hidden_dim() const { return w_out.size(); }
  Index parameter_count() const { return W.size() + b.size() + w_out.size() + 1; }

  auto gate_weights(Gate g) { return W.middleRows(static_cast<Index>(g) * hidden_dim(), hidden_dim()); }
  auto gate_weights(Gate g) const { return W.middleRows(static_cast<Index>(g) * hidden_dim(), hidden_dim()); }
  auto gate_bias(Gate g) { return b.segment(static_cast<Index>(g) * hidden_dim(), hidden_dim()); }
  auto gate_bias(Gate g) const { return b.segment(static_cast<Index>(g) * hidden_dim(), hidden_dim()); }

  Vector flatten() const;
  static LstmParams unflatten(Index hidden_dim, const Vector& flat);

  bool all_finite() const;

  friend bool operator==(const LstmParams& a, const LstmParams& b);
};

/// Cached forward quantities of one unroll, enough for exact backpropagation.
/// Index t of the per-step arrays refers to step t + 1.
struct UnrollTrace {
  Matrix A;  // J·D
  Vector F;
  ScalingDiag D;
  Index steps = 0;

  std::vector<Vector> y_hat;   // ŷ₀ … ŷ_T (scaled coordinates)
  std::vector<Matrix> inputs;  // 2 × N per step
  std::vector<Matrix> hidden;  // H × N, h₀ … h_T
  std::vector<Matrix> cell;    // H × N, c₀ … c_T
  std::vector<Matrix> gate_i;
  std::vector<Matrix> gate_f;
  std::vector<Matrix> gate_g;
  std::vector<Matrix> gate_o;
  std::vector<Matrix> tanh_cell;
};

struct UnrollResult {
  std::vector<Vector> y;  // y₁ … y_T in original coordinates
  UnrollTrace trace;
};

/// Runs T cells on min ½‖JDŷ + F‖² starting from y0 (zero when empty) and
/// returns yₜ = Dŷₜ. Throws NonFiniteError if an estimate blows up.
UnrollResult forward_unroll(const LstmParams& theta, const Matrix& J, const Vector& F,
                            const ScalingDiag& D, Index T, const Vector& y0 = Vector());

/// (1/T) Σₜ ½‖Jyₜ + F‖².
double inner_loss(const Matrix& J, const Vector& F, const std::vector<Vector>& ys);

/// Gradient of inner_loss with respect to every parameter, with J, F, D and
/// y0 held constant.
LstmParams backward(const UnrollTrace& trace, const LstmParams& theta);

struct AdamState {
  Vector m;
  Vector v;
  std::int64_t step = 0;

  static AdamState for_params(const LstmParams& theta);
};

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

void adam_step(LstmParams& theta, const LstmParams& grad, AdamState& state,
               const AdamOptions& options);

nlohmann::json params_to_json(const LstmParams& theta);
LstmParams params_from_json(const nlohmann::json& j,
                            std::optional<Index> expected_hidden = std::nullopt);

void save_params(const LstmParams& theta, const std::filesystem::path& path);
/// Throws if the file's hidden_dim differs from `expected_hidden` when given.
LstmParams load_params(const std::filesystem::path& path,
                       std::optional<Index> expected_hidden = std::nullopt);

}  // namespace lipm
