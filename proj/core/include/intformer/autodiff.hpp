#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "intformer/tensor.hpp"

namespace intformer {

enum class Mode { kTrain, kEval };

enum class ActivationKind { kRelu, kSigmoid, kTanh };
ActivationKind activation_kind_from_string(const std::string& name);

// Handle into a Tape. Only valid for the tape that created it.
struct Var {
  int id = -1;
};

// Reverse-mode tape. Ops record their inputs and a backward closure at call
// time; backward() seeds the scalar loss with 1 and replays the closures in
// reverse creation order, accumulating gradients for every node. A tape is
// confined to one logical thread.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var param(Tensor value);

  // Elementwise; shapes must match exactly.
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);

  // [m x n] + row vector [n] (or [1 x n]) broadcast over rows.
  Var add_rowvec(Var a, Var b);

  Var scale(Var a, double c);
  Var add_const(Var a, double c);
  Var neg(Var a) { return scale(a, -1.0); }

  Var matmul(Var a, Var b);
  Var transpose(Var a);

  Var relu(Var a);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var sin(Var a);
  Var log(Var a);
  Var clamp(Var a, double lo, double hi);
  Var activation(Var a, ActivationKind kind);

  // Softmax over the last axis (each row of a rank-2 tensor, or the whole
  // rank-1 vector). Shift-invariant by construction.
  Var softmax(Var a);

  // Row-wise standardization to mean 0 / variance 1 followed by affine
  // gain/bias. The variance is floored at eps, so degenerate rows stay
  // finite and non-degenerate rows are standardized exactly.
  Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);

  // Inverted dropout: eval mode is the identity; train mode zeroes entries
  // with probability rate and scales survivors by 1/(1-rate).
  Var dropout(Var x, double rate, Mode mode, std::uint64_t seed);

  Var concat_cols(const std::vector<Var>& parts);
  Var slice_cols(Var a, std::size_t c0, std::size_t c1);
  Var slice_rows(Var a, std::size_t r0, std::size_t r1);
  Var reshape(Var a, std::vector<std::size_t> shape);

  Var mean_rows(Var a);      // [m x n] -> [1 x n]
  Var max_over_rows(Var a);  // [m x n] -> [1 x n], per-column max
  Var sum_all(Var a);        // -> [1]

  // Unfold sliding windows of `kernel` consecutive rows:
  // [t x f] -> [(t-kernel+1) x (kernel*f)].
  Var im2row(Var a, std::size_t kernel);

  void backward(Var loss);

  const Tensor& value(Var v) const;
  const Tensor& grad(Var v) const;
  double scalar_value(Var v) const;
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(Tape&)> back;
  };

  Var emplace(Tensor value, std::function<void(Tape&)> back = nullptr);
  Tensor& grad_ref(Var v) { return nodes_[static_cast<std::size_t>(v.id)].grad; }
  const Tensor& val(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
  void check_finite(Var v, const char* op) const;

  std::vector<Node> nodes_;
  bool grads_ready_ = false;
};

// Max over all parameter elements of
// |analytic - central difference| / max(1, |analytic|).
// `build` must construct the same scalar graph for any parameter values.
using ScalarGraphFn = std::function<Var(Tape&, const std::vector<Var>&)>;
double grad_check(const ScalarGraphFn& build, const std::vector<Tensor>& params,
                  double step = 1e-5);

}  // namespace intformer
