#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace lfd::nn {

enum class Head { kLinear, kSoftmax, kSigmoid };

std::string_view to_string(Head h);
Head head_from_string(std::string_view s);

struct Layer {
  Eigen::MatrixXd w;  // out x in
  Eigen::VectorXd b;
};

// Parameter-shaped gradient container.
struct Gradients {
  std::vector<Eigen::MatrixXd> dw;
  std::vector<Eigen::VectorXd> db;

  Gradients& operator+=(const Gradients& o);
  Gradients& operator*=(double s);
  bool all_finite() const;
  double squared_norm() const;
  std::vector<double> flat() const;
};

class Mlp;

// Forward intermediates for one batch: activations[0] is the input,
// activations[i] the tanh output of hidden layer i, logits the final affine
// output and output the head applied to it. Columns are samples.
struct Tape {
  std::vector<Eigen::MatrixXd> activations;
  Eigen::MatrixXd logits;
  Eigen::MatrixXd output;
  const Mlp* owner = nullptr;
  std::uint64_t version = 0;
};

enum class GradientAt { kOutput, kLogits };

// Dense network, tanh on hidden layers. Softmax heads normalize each of
// `branches` equal-sized blocks of the output independently.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<int> widths, Head head, int branches = 1);

  // Orthogonal init scaled by `hidden_gain` on hidden layers and `head_gain`
  // on the last layer; zero biases.
  static Mlp orthogonal(std::vector<int> widths, Head head, int branches, std::uint64_t seed,
                        double hidden_gain = 1.0, double head_gain = 1.0);

  int input_size() const { return widths_.front(); }
  int output_size() const { return widths_.back(); }
  const std::vector<int>& widths() const { return widths_; }
  Head head() const { return head_; }
  int branches() const { return branches_; }
  std::size_t parameter_count() const;

  // Throws std::invalid_argument on input length mismatch.
  Eigen::VectorXd forward(std::span<const double> input) const;
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const;
  const Eigen::MatrixXd& forward(const Eigen::MatrixXd& inputs, Tape& tape) const;

  // Exact gradients of sum over columns of L(column) where `grad` holds
  // dL/d(output) or dL/d(logits). Throws ContractViolation on a stale tape.
  Gradients backward(const Tape& tape, const Eigen::MatrixXd& grad,
                     GradientAt at = GradientAt::kOutput) const;

  Gradients zero_gradients() const;

  const std::vector<Layer>& layers() const { return layers_; }
  // Mutating access invalidates outstanding tapes.
  std::vector<Layer>& mutable_layers() {
    ++version_;
    return layers_;
  }
  std::uint64_t version() const { return version_; }

  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> flat);
  bool all_finite() const;

  nlohmann::json to_json() const;
  static Mlp from_json(const nlohmann::json& j);

  friend bool operator==(const Mlp& a, const Mlp& b);

 private:
  void apply_head(Eigen::MatrixXd& z) const;

  std::vector<int> widths_;
  Head head_ = Head::kLinear;
  int branches_ = 1;
  std::vector<Layer> layers_;
  std::uint64_t version_ = 1;
};

}  // namespace lfd::nn
