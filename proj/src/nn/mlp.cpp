#include "lfd/nn/mlp.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "lfd/errors.hpp"

namespace lfd::nn {

std::string_view to_string(Head h) {
  switch (h) {
    case Head::kLinear: return "linear";
    case Head::kSoftmax: return "softmax";
    case Head::kSigmoid: return "sigmoid";
  }
  return "linear";
}

Head head_from_string(std::string_view s) {
  if (s == "linear") return Head::kLinear;
  if (s == "softmax") return Head::kSoftmax;
  if (s == "sigmoid") return Head::kSigmoid;
  throw FormatError("unknown head type `" + std::string(s) + "`");
}

Gradients& Gradients::operator+=(const Gradients& o) {
  for (std::size_t i = 0; i < dw.size(); ++i) {
    dw[i] += o.dw[i];
    db[i] += o.db[i];
  }
  return *this;
}

Gradients& Gradients::operator*=(double s) {
  for (std::size_t i = 0; i < dw.size(); ++i) {
    dw[i] *= s;
    db[i] *= s;
  }
  return *this;
}

bool Gradients::all_finite() const {
  for (std::size_t i = 0; i < dw.size(); ++i)
    if (!dw[i].allFinite() || !db[i].allFinite()) return false;
  return true;
}

double Gradients::squared_norm() const {
  double s = 0.0;
  for (std::size_t i = 0; i < dw.size(); ++i) s += dw[i].squaredNorm() + db[i].squaredNorm();
  return s;
}

std::vector<double> Gradients::flat() const {
  std::vector<double> out;
  for (std::size_t i = 0; i < dw.size(); ++i) {
    for (Eigen::Index c = 0; c < dw[i].cols(); ++c)
      for (Eigen::Index r = 0; r < dw[i].rows(); ++r) out.push_back(dw[i](r, c));
    for (Eigen::Index r = 0; r < db[i].size(); ++r) out.push_back(db[i](r));
  }
  return out;
}

Mlp::Mlp(std::vector<int> widths, Head head, int branches)
    : widths_(std::move(widths)), head_(head), branches_(branches) {
  if (widths_.size() < 2) throw std::invalid_argument("Mlp needs at least input and output widths");
  for (const int w : widths_)
    if (w < 1) throw std::invalid_argument("Mlp layer widths must be positive");
  if (branches_ < 1 || widths_.back() % branches_ != 0)
    throw std::invalid_argument("Mlp output width must divide evenly into branches");
  for (std::size_t i = 0; i + 1 < widths_.size(); ++i)
    layers_.push_back({Eigen::MatrixXd::Zero(widths_[i + 1], widths_[i]),
                       Eigen::VectorXd::Zero(widths_[i + 1])});
}

Mlp Mlp::orthogonal(std::vector<int> widths, Head head, int branches, std::uint64_t seed,
                    double hidden_gain, double head_gain) {
  Mlp net(std::move(widths), head, branches);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t l = 0; l < net.layers_.size(); ++l) {
    auto& w = net.layers_[l].w;
    const Eigen::Index rows = w.rows();
    const Eigen::Index cols = w.cols();
    const Eigen::Index big = std::max(rows, cols);
    const Eigen::Index small = std::min(rows, cols);
    Eigen::MatrixXd a(big, small);
    for (Eigen::Index c = 0; c < small; ++c)
      for (Eigen::Index r = 0; r < big; ++r) a(r, c) = normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
    // Sign fix makes the factorization unique.
    const Eigen::MatrixXd r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
    for (Eigen::Index c = 0; c < small; ++c)
      if (r(c, c) < 0) q.col(c) *= -1.0;
    const double gain = (l + 1 == net.layers_.size()) ? head_gain : hidden_gain;
    w = (rows >= cols ? q : Eigen::MatrixXd(q.transpose())) * gain;
  }
  return net;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < widths_.size(); ++i)
    n += static_cast<std::size_t>(widths_[i] * widths_[i + 1] + widths_[i + 1]);
  return n;
}

void Mlp::apply_head(Eigen::MatrixXd& z) const {
  switch (head_) {
    case Head::kLinear: break;
    case Head::kSigmoid: z = (1.0 / (1.0 + (-z.array()).exp())).matrix(); break;
    case Head::kSoftmax: {
      const Eigen::Index k = z.rows() / branches_;
      for (int b = 0; b < branches_; ++b) {
        auto block = z.middleRows(b * k, k);
        const Eigen::RowVectorXd mx = block.colwise().maxCoeff();
        block.rowwise() -= mx;
        block = block.array().exp().matrix();
        const Eigen::RowVectorXd s = block.colwise().sum();
        block.array().rowwise() /= s.array();
      }
      break;
    }
  }
}

Eigen::VectorXd Mlp::forward(std::span<const double> input) const {
  if (static_cast<int>(input.size()) != input_size())
    throw std::invalid_argument("Mlp::forward: expected input of length " +
                                std::to_string(input_size()) + ", got " +
                                std::to_string(input.size()));
  Eigen::MatrixXd x = Eigen::Map<const Eigen::VectorXd>(input.data(), input_size());
  return forward_batch(x).col(0);
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& inputs) const {
  if (inputs.rows() != input_size())
    throw std::invalid_argument("Mlp::forward: input rows " + std::to_string(inputs.rows()) +
                                " != " + std::to_string(input_size()));
  Eigen::MatrixXd a = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = layers_[l].w * a;
    z.colwise() += layers_[l].b;
    if (l + 1 < layers_.size()) {
      a = z.array().tanh().matrix();
    } else {
      apply_head(z);
      a = std::move(z);
    }
  }
  return a;
}

const Eigen::MatrixXd& Mlp::forward(const Eigen::MatrixXd& inputs, Tape& tape) const {
  if (inputs.rows() != input_size())
    throw std::invalid_argument("Mlp::forward: input rows " + std::to_string(inputs.rows()) +
                                " != " + std::to_string(input_size()));
  tape.activations.clear();
  tape.activations.push_back(inputs);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = layers_[l].w * tape.activations.back();
    z.colwise() += layers_[l].b;
    if (l + 1 < layers_.size()) {
      tape.activations.push_back(z.array().tanh().matrix());
    } else {
      tape.logits = z;
      apply_head(z);
      tape.output = std::move(z);
    }
  }
  tape.owner = this;
  tape.version = version_;
  return tape.output;
}

Gradients Mlp::zero_gradients() const {
  Gradients g;
  for (const auto& layer : layers_) {
    g.dw.push_back(Eigen::MatrixXd::Zero(layer.w.rows(), layer.w.cols()));
    g.db.push_back(Eigen::VectorXd::Zero(layer.b.size()));
  }
  return g;
}

Gradients Mlp::backward(const Tape& tape, const Eigen::MatrixXd& grad, GradientAt at) const {
  if (tape.owner != this || tape.version != version_)
    throw ContractViolation("Mlp::backward: tape does not belong to the current parameters");
  if (grad.rows() != tape.output.rows() || grad.cols() != tape.output.cols())
    throw std::invalid_argument("Mlp::backward: gradient shape does not match output");

  Eigen::MatrixXd dz;
  if (at == GradientAt::kLogits) {
    dz = grad;
  } else {
    switch (head_) {
      case Head::kLinear: dz = grad; break;
      case Head::kSigmoid:
        dz = (grad.array() * tape.output.array() * (1.0 - tape.output.array())).matrix();
        break;
      case Head::kSoftmax: {
        dz.resize(grad.rows(), grad.cols());
        const Eigen::Index k = grad.rows() / branches_;
        for (int b = 0; b < branches_; ++b) {
          const auto p = tape.output.middleRows(b * k, k).array();
          const auto g = grad.middleRows(b * k, k).array();
          const Eigen::RowVectorXd inner = (p * g).colwise().sum();
          dz.middleRows(b * k, k) = (p * (g.rowwise() - inner.array())).matrix();
        }
        break;
      }
    }
  }

  Gradients out = zero_gradients();
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& a_in = tape.activations[l];
    out.dw[l].noalias() = dz * a_in.transpose();
    out.db[l] = dz.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd da = layers_[l].w.transpose() * dz;
      dz = (da.array() * (1.0 - a_in.array().square())).matrix();
    }
  }
  return out;
}

std::vector<double> Mlp::flat_parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& layer : layers_) {
    for (Eigen::Index c = 0; c < layer.w.cols(); ++c)
      for (Eigen::Index r = 0; r < layer.w.rows(); ++r) out.push_back(layer.w(r, c));
    for (Eigen::Index r = 0; r < layer.b.size(); ++r) out.push_back(layer.b(r));
  }
  return out;
}

void Mlp::set_flat_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count())
    throw std::invalid_argument("set_flat_parameters: expected " + std::to_string(parameter_count()) +
                                " values, got " + std::to_string(flat.size()));
  std::size_t k = 0;
  for (auto& layer : mutable_layers()) {
    for (Eigen::Index c = 0; c < layer.w.cols(); ++c)
      for (Eigen::Index r = 0; r < layer.w.rows(); ++r) layer.w(r, c) = flat[k++];
    for (Eigen::Index r = 0; r < layer.b.size(); ++r) layer.b(r) = flat[k++];
  }
}

bool Mlp::all_finite() const {
  for (const auto& layer : layers_)
    if (!layer.w.allFinite() || !layer.b.allFinite()) return false;
  return true;
}

nlohmann::json Mlp::to_json() const {
  nlohmann::json j;
  j["widths"] = widths_;
  j["head"] = std::string(to_string(head_));
  j["branches"] = branches_;
  j["params"] = flat_parameters();
  return j;
}

Mlp Mlp::from_json(const nlohmann::json& j) {
  try {
    Mlp net(j.at("widths").get<std::vector<int>>(), head_from_string(j.at("head").get<std::string>()),
            j.at("branches").get<int>());
    net.set_flat_parameters(j.at("params").get<std::vector<double>>());
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("network checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("network checkpoint: ") + e.what());
  }
}

bool operator==(const Mlp& a, const Mlp& b) {
  return a.widths_ == b.widths_ && a.head_ == b.head_ && a.branches_ == b.branches_ &&
         a.flat_parameters() == b.flat_parameters();
}

}  // namespace lfd::nn
