#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "intformer/autodiff.hpp"
#include "intformer/tensor.hpp"

namespace intformer {

struct InTformerConfig {
  int timesteps = 2;
  int input_features = 1;
  int time_k = 8;  // periodic components; output width is time_k + 1
  int d_model = 64;
  int heads = 4;
  int encoders = 3;
  int d_ff = 128;
  double dropout = 0.1;

  int head_dim() const { return d_model / heads; }
  void validate() const;
};

struct LstmConfig {
  int timesteps = 2;
  int input_features = 1;
  int hidden = 32;
  void validate() const;
};

struct Cnn1dConfig {
  int timesteps = 2;
  int input_features = 1;
  int kernel = 2;
  int channels = 16;
  void validate() const;
};

enum class HybridTopology { kSequential, kParallel };

// Named parameter tensors bound onto a tape for one forward/backward pass.
using ParamVars = std::map<std::string, Var>;

// ---- Tape-level building blocks ---------------------------------------------

struct Time2VecVars {
  Var omega;  // [k+1]; index 0 is the linear slope
  Var phi;    // [k+1]; index 0 is the linear intercept
  int k = 0;
};

// t2v(tau): element 0 = omega_0*tau + phi_0, elements 1..k = sin(omega_i*tau
// + phi_i). Returns [len(taus) x (k+1)].
Var time2vec(Tape& tape, const std::vector<double>& taus, const Time2VecVars& params);

// Per timestep t: concat(x_t, t2v(t)), then a learned projection to d_model.
Var embed_sequence(Tape& tape, Var window, const Time2VecVars& t2v, Var projection,
                   Var projection_bias);

struct AttentionVars {
  std::vector<Var> w_query;  // per head, [d_model x d_k]
  std::vector<Var> w_key;
  std::vector<Var> w_value;
  Var w_out;  // [heads*d_k x d_model]
  Var b_out;  // [d_model]
  int head_dim = 0;
};

struct MhaResult {
  Var output;                  // [T x d_model]
  std::vector<Var> attention;  // per head, [T x T]; rows sum to 1
};

// Unmasked bidirectional attention: S = Q K^T, A = softmax(S / sqrt(d_k))
// row-wise, O = A V, heads concatenated and linearly projected.
MhaResult multi_head_attention(Tape& tape, Var x, const AttentionVars& params);

// Same two-layer map at every position: expand, ReLU, contract.
Var position_wise_ffn(Tape& tape, Var x, Var w1, Var b1, Var w2, Var b2);

struct EncoderVars {
  AttentionVars attention;
  Var ffn_w1, ffn_b1, ffn_w2, ffn_b2;
  Var ln1_gain, ln1_bias, ln2_gain, ln2_bias;
  double dropout = 0.0;
};

// Post-norm ordering: LN(x + Dropout(MHA(x))), then LN(y + Dropout(FFN(y))).
Var encoder_block(Tape& tape, Var x, const EncoderVars& params, Mode mode,
                  std::uint64_t dropout_seed);

// ---- Model families ----------------------------------------------------------

class Model {
 public:
  virtual ~Model() = default;

  virtual const std::string& family() const = 0;
  virtual int timesteps() const = 0;
  virtual int input_features() const = 0;

  std::map<std::string, Tensor>& params() { return params_; }
  const std::map<std::string, Tensor>& params() const { return params_; }

  ParamVars bind(Tape& tape) const;

  // Builds the probability node for one window.
  virtual Var forward(Tape& tape, const ParamVars& vars, const Tensor& window,
                      Mode mode, std::uint64_t dropout_seed) const = 0;

  // Eval-mode probability on a fresh tape.
  double predict(const Tensor& window) const;

 protected:
  std::map<std::string, Tensor> params_;
};

std::unique_ptr<Model> make_intformer(const InTformerConfig& config,
                                      std::uint64_t init_seed);
std::unique_ptr<Model> make_lstm(const LstmConfig& config, std::uint64_t init_seed);
std::unique_ptr<Model> make_cnn1d(const Cnn1dConfig& config, std::uint64_t init_seed);
std::unique_ptr<Model> make_hybrid(const LstmConfig& lstm, const Cnn1dConfig& cnn,
                                   HybridTopology topology, std::uint64_t init_seed);

// Families: intformer, lstm, cnn, lstm_cnn_seq, lstm_cnn_par.
const std::vector<std::string>& model_families();

struct ModelHyper {
  int time_k = 8;
  int d_model = 64;
  int heads = 4;
  int encoders = 3;
  int d_ff = 128;
  double dropout = 0.1;
  int lstm_hidden = 32;
  int cnn_kernel = 2;
  int cnn_channels = 16;
};

std::unique_ptr<Model> make_model(const std::string& family, int timesteps,
                                  int input_features, const ModelHyper& hyper,
                                  std::uint64_t init_seed);

}  // namespace intformer
