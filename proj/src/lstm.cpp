#include "lipm/lstm.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "lipm/problem_io.hpp"

namespace lipm {

namespace {

Matrix sigmoid(const Matrix& z) {
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

const char* kGateWeightKeys[] = {"W_i", "W_f", "W_g", "W_o"};
const char* kGateBiasKeys[] = {"b_i", "b_f", "b_g", "b_o"};

}  // namespace

LstmParams::LstmParams(Index hidden_dim)
    : W(Matrix::Zero(4 * hidden_dim, 2 + hidden_dim)),
      b(Vector::Zero(4 * hidden_dim)),
      w_out(Vector::Zero(hidden_dim)) {
  if (hidden_dim < 1) throw std::invalid_argument("hidden_dim must be positive");
}

LstmParams LstmParams::initialized(Index hidden_dim, std::uint64_t seed) {
  LstmParams p(hidden_dim);
  std::mt19937_64 rng(mix_seed(seed, 0x1a57));
  std::uniform_real_distribution<double> dist(-0.08, 0.08);
  for (Index i = 0; i < p.W.rows(); ++i)
    for (Index j = 0; j < p.W.cols(); ++j) p.W(i, j) = dist(rng);
  p.gate_bias(Gate::Forget).setOnes();
  return p;
}

Vector LstmParams::flatten() const {
  Vector flat(parameter_count());
  Index k = 0;
  flat.segment(k, W.size()) = W.reshaped();
  k += W.size();
  flat.segment(k, b.size()) = b;
  k += b.size();
  flat.segment(k, w_out.size()) = w_out;
  k += w_out.size();
  flat[k] = b_out;
  return flat;
}

LstmParams LstmParams::unflatten(Index hidden_dim, const Vector& flat) {
  LstmParams p(hidden_dim);
  if (flat.size() != p.parameter_count()) throw std::invalid_argument("flat parameter length mismatch");
  Index k = 0;
  p.W.reshaped() = flat.segment(k, p.W.size());
  k += p.W.size();
  p.b = flat.segment(k, p.b.size());
  k += p.b.size();
  p.w_out = flat.segment(k, p.w_out.size());
  k += p.w_out.size();
  p.b_out = flat[k];
  return p;
}

bool LstmParams::all_finite() const {
  return W.allFinite() && b.allFinite() && w_out.allFinite() && std::isfinite(b_out);
}

bool operator==(const LstmParams& a, const LstmParams& b) {
  return a.hidden_dim() == b.hidden_dim() && (a.W.array() == b.W.array()).all() &&
         (a.b.array() == b.b.array()).all() && (a.w_out.array() == b.w_out.array()).all() &&
         a.b_out == b.b_out;
}

UnrollResult forward_unroll(const LstmParams& theta, const Matrix& J, const Vector& F,
                            const ScalingDiag& D, Index T, const Vector& y0) {
  if (T < 1) throw std::invalid_argument("forward_unroll: T must be >= 1");
  const Index N = J.cols();
  if (J.rows() != F.size() || D.size() != N)
    throw std::invalid_argument("forward_unroll: dimension mismatch");
  if (y0.size() != 0 && y0.size() != N)
    throw std::invalid_argument("forward_unroll: y0 dimension mismatch");
  if (y0.size() != 0 && !y0.allFinite()) throw NonFiniteError("forward_unroll: non-finite y0");
  const Index H = theta.hidden_dim();

  UnrollResult out;
  UnrollTrace& tr = out.trace;
  tr.A = J * D.d.asDiagonal();
  tr.F = F;
  tr.D = D;
  tr.steps = T;
  const auto uT = static_cast<std::size_t>(T);
  tr.y_hat.reserve(uT + 1);
  tr.inputs.reserve(uT);
  tr.hidden.reserve(uT + 1);
  tr.cell.reserve(uT + 1);
  for (auto* v : {&tr.gate_i, &tr.gate_f, &tr.gate_g, &tr.gate_o, &tr.tanh_cell}) v->reserve(uT);
  out.y.reserve(uT);

  tr.y_hat.push_back(y0.size() == 0 ? Vector::Zero(N) : Vector(y0.cwiseQuotient(D.d)));
  tr.hidden.push_back(Matrix::Zero(H, N));
  tr.cell.push_back(Matrix::Zero(H, N));

  const auto Wx = theta.W.leftCols(2);
  const auto Wh = theta.W.rightCols(H);

  for (Index t = 0; t < T; ++t) {
    const Vector& y_prev = tr.y_hat.back();
    const Vector grad = tr.A.transpose() * (tr.A * y_prev + F);

    Matrix X(2, N);
    X.row(0) = y_prev.transpose();
    X.row(1) = grad.transpose();

    Matrix Z = Wx * X;
    Z.noalias() += Wh * tr.hidden.back();
    Z.colwise() += theta.b;

    Matrix gi = sigmoid(Z.middleRows(0, H));
    Matrix gf = sigmoid(Z.middleRows(H, H));
    Matrix gg = Z.middleRows(2 * H, H).array().tanh().matrix();
    Matrix go = sigmoid(Z.middleRows(3 * H, H));

    Matrix c = gf.cwiseProduct(tr.cell.back()) + gi.cwiseProduct(gg);
    Matrix tc = c.array().tanh().matrix();
    Matrix h = go.cwiseProduct(tc);

    Vector y_hat = h.transpose() * theta.w_out;
    y_hat.array() += theta.b_out;
    if (!y_hat.allFinite())
      throw NonFiniteError("forward_unroll: non-finite estimate at step " + std::to_string(t + 1));

    out.y.push_back(D.d.cwiseProduct(y_hat));
    tr.inputs.push_back(std::move(X));
    tr.gate_i.push_back(std::move(gi));
    tr.gate_f.push_back(std::move(gf));
    tr.gate_g.push_back(std::move(gg));
    tr.gate_o.push_back(std::move(go));
    tr.tanh_cell.push_back(std::move(tc));
    tr.cell.push_back(std::move(c));
    tr.hidden.push_back(std::move(h));
    tr.y_hat.push_back(std::move(y_hat));
  }
  return out;
}

double inner_loss(const Matrix& J, const Vector& F, const std::vector<Vector>& ys) {
  if (ys.empty()) throw std::invalid_argument("inner_loss: empty sequence");
  double total = 0.0;
  for (const auto& y : ys) total += 0.5 * (J * y + F).squaredNorm();
  return total / static_cast<double>(ys.size());
}

LstmParams backward(const UnrollTrace& tr, const LstmParams& theta) {
  const Index H = theta.hidden_dim();
  const Index N = tr.A.cols();
  const Index T = tr.steps;
  const double inv_T = 1.0 / static_cast<double>(T);

  LstmParams grad(H);
  Matrix dH_next = Matrix::Zero(H, N);
  Matrix dC_next = Matrix::Zero(H, N);
  Vector carry = Vector::Zero(N);  // ∂L/∂ŷₜ through step t+1's inputs
  Matrix dZ(4 * H, N);

  for (Index t = T; t >= 1; --t) {
    const auto k = static_cast<std::size_t>(t - 1);
    const Vector& y_hat = tr.y_hat[k + 1];
    const Matrix& gi = tr.gate_i[k];
    const Matrix& gf = tr.gate_f[k];
    const Matrix& gg = tr.gate_g[k];
    const Matrix& go = tr.gate_o[k];
    const Matrix& tc = tr.tanh_cell[k];
    const Matrix& c_prev = tr.cell[k];
    const Matrix& h_prev = tr.hidden[k];
    const Matrix& h = tr.hidden[k + 1];

    Vector dy = inv_T * (tr.A.transpose() * (tr.A * y_hat + tr.F));
    dy += carry;

    grad.w_out.noalias() += h * dy;
    grad.b_out += dy.sum();

    Matrix dH = theta.w_out * dy.transpose();
    dH += dH_next;

    const Matrix dO = dH.cwiseProduct(tc);
    Matrix dC = dH.cwiseProduct(go).cwiseProduct((1.0 - tc.array().square()).matrix());
    dC += dC_next;

    dZ.middleRows(0, H) = (dC.array() * gg.array() * gi.array() * (1.0 - gi.array())).matrix();
    dZ.middleRows(H, H) = (dC.array() * c_prev.array() * gf.array() * (1.0 - gf.array())).matrix();
    dZ.middleRows(2 * H, H) = (dC.array() * gi.array() * (1.0 - gg.array().square())).matrix();
    dZ.middleRows(3 * H, H) = (dO.array() * go.array() * (1.0 - go.array())).matrix();
    dC_next = dC.cwiseProduct(gf);

    grad.W.leftCols(2).noalias() += dZ * tr.inputs[k].transpose();
    grad.W.rightCols(H).noalias() += dZ * h_prev.transpose();
    grad.b += dZ.rowwise().sum();

    const Matrix d_in = theta.W.transpose() * dZ;  // (2 + H) × N
    dH_next = d_in.bottomRows(H);
    const Vector d_y_in = d_in.row(0).transpose();
    const Vector d_grad_in = d_in.row(1).transpose();
    // Input gradient is Aᵀ(Aŷ + F), so its adjoint maps through AᵀA.
    carry = d_y_in + tr.A.transpose() * (tr.A * d_grad_in);
  }
  return grad;
}

AdamState AdamState::for_params(const LstmParams& theta) {
  return {Vector::Zero(theta.parameter_count()), Vector::Zero(theta.parameter_count()), 0};
}

void adam_step(LstmParams& theta, const LstmParams& grad, AdamState& st,
               const AdamOptions& opt) {
  const Vector g = grad.flatten();
  if (st.m.size() != g.size()) throw std::invalid_argument("adam_step: state shape mismatch");
  Vector p = theta.flatten();
  ++st.step;
  st.m = opt.beta1 * st.m + (1.0 - opt.beta1) * g;
  st.v = opt.beta2 * st.v + (1.0 - opt.beta2) * g.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(st.step));
  p.array() -= opt.lr * (st.m.array() / bc1) / ((st.v.array() / bc2).sqrt() + opt.eps);
  theta = LstmParams::unflatten(theta.hidden_dim(), p);
}

nlohmann::json params_to_json(const LstmParams& theta) {
  nlohmann::json j;
  j["hidden_dim"] = theta.hidden_dim();
  for (Index g = 0; g < 4; ++g) {
    j[kGateWeightKeys[g]] = matrix_to_json(theta.gate_weights(static_cast<Gate>(g)));
    j[kGateBiasKeys[g]] = vector_to_json(theta.gate_bias(static_cast<Gate>(g)));
  }
  j["w_out"] = vector_to_json(theta.w_out);
  j["b_out"] = theta.b_out;
  return j;
}

LstmParams params_from_json(const nlohmann::json& j, std::optional<Index> expected_hidden) {
  const auto H = j.at("hidden_dim").get<Index>();
  if (expected_hidden && *expected_hidden != H)
    throw std::invalid_argument("model hidden_dim " + std::to_string(H) + " does not match expected " +
                                std::to_string(*expected_hidden));
  LstmParams p(H);
  for (Index g = 0; g < 4; ++g) {
    const Matrix Wg = matrix_from_json(j.at(kGateWeightKeys[g]));
    const Vector bg = vector_from_json(j.at(kGateBiasKeys[g]));
    if (Wg.rows() != H || Wg.cols() != 2 + H || bg.size() != H)
      throw std::invalid_argument("gate block has wrong shape");
    p.gate_weights(static_cast<Gate>(g)) = Wg;
    p.gate_bias(static_cast<Gate>(g)) = bg;
  }
  p.w_out = vector_from_json(j.at("w_out"));
  if (p.w_out.size() != H) throw std::invalid_argument("w_out has wrong length");
  p.b_out = j.at("b_out").get<double>();
  if (!p.all_finite()) throw NonFiniteError("model contains non-finite parameters");
  return p;
}

void save_params(const LstmParams& theta, const std::filesystem::path& path) {
  write_json_file(params_to_json(theta), path);
}

LstmParams load_params(const std::filesystem::path& path, std::optional<Index> expected_hidden) {
  return params_from_json(read_json_file(path), expected_hidden);
}

}  // namespace lipm
