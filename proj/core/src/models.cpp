#include "intformer/models.hpp"

#include <cmath>

#include "intformer/errors.hpp"
#include "intformer/rng.hpp"
#include "intformer/util.hpp"

namespace intformer {

void InTformerConfig::validate() const {
  if (timesteps < 1) throw ConfigError("timesteps must be >= 1");
  if (input_features < 1) throw ConfigError("input_features must be >= 1");
  if (time_k < 0) throw ConfigError("time_k must be >= 0");
  if (d_model < 1 || d_ff < 1) throw ConfigError("model widths must be >= 1");
  if (heads < 1 || d_model % heads != 0) {
    throw ConfigError("heads must divide d_model exactly");
  }
  if (encoders < 1) throw ConfigError("encoder count must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0, 1)");
}

void LstmConfig::validate() const {
  if (timesteps < 1 || input_features < 1 || hidden < 1) {
    throw ConfigError("LSTM dimensions must be positive");
  }
}

void Cnn1dConfig::validate() const {
  if (timesteps < 1 || input_features < 1 || channels < 1) {
    throw ConfigError("CNN dimensions must be positive");
  }
  if (kernel < 1 || kernel > timesteps) {
    throw ConfigError("CNN kernel must lie in [1, timesteps]");
  }
}

Var time2vec(Tape& tape, const std::vector<double>& taus, const Time2VecVars& params) {
  const std::size_t n = taus.size();
  if (n == 0) throw DimensionError("time2vec requires at least one tau");
  const std::size_t width = static_cast<std::size_t>(params.k) + 1;
  Var tau_col = tape.constant(Tensor({n, 1}, taus));
  Var omega_row = tape.reshape(params.omega, {1, width});
  Var affine = tape.add_rowvec(tape.matmul(tau_col, omega_row), params.phi);
  if (params.k == 0) return affine;
  Var linear = tape.slice_cols(affine, 0, 1);
  Var periodic = tape.sin(tape.slice_cols(affine, 1, width));
  return tape.concat_cols({linear, periodic});
}

Var embed_sequence(Tape& tape, Var window, const Time2VecVars& t2v, Var projection,
                   Var projection_bias) {
  const std::size_t T = tape.value(window).rows();
  std::vector<double> taus(T);
  for (std::size_t t = 0; t < T; ++t) taus[t] = static_cast<double>(t);
  Var time_embedding = time2vec(tape, taus, t2v);
  Var combined = tape.concat_cols({window, time_embedding});
  return tape.add_rowvec(tape.matmul(combined, projection), projection_bias);
}

MhaResult multi_head_attention(Tape& tape, Var x, const AttentionVars& params) {
  if (params.w_query.empty() || params.w_query.size() != params.w_key.size() ||
      params.w_query.size() != params.w_value.size()) {
    throw ConfigError("attention params must carry one W_q/W_k/W_v per head");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(params.head_dim));
  MhaResult result;
  std::vector<Var> head_outputs;
  head_outputs.reserve(params.w_query.size());
  for (std::size_t h = 0; h < params.w_query.size(); ++h) {
    Var q = tape.matmul(x, params.w_query[h]);
    Var k = tape.matmul(x, params.w_key[h]);
    Var v = tape.matmul(x, params.w_value[h]);
    Var scores = tape.matmul(q, tape.transpose(k));
    Var weights = tape.softmax(tape.scale(scores, scale));
    result.attention.push_back(weights);
    head_outputs.push_back(tape.matmul(weights, v));
  }
  Var concat = head_outputs.size() == 1 ? head_outputs[0] : tape.concat_cols(head_outputs);
  result.output = tape.add_rowvec(tape.matmul(concat, params.w_out), params.b_out);
  return result;
}

Var position_wise_ffn(Tape& tape, Var x, Var w1, Var b1, Var w2, Var b2) {
  Var hidden = tape.relu(tape.add_rowvec(tape.matmul(x, w1), b1));
  return tape.add_rowvec(tape.matmul(hidden, w2), b2);
}

Var encoder_block(Tape& tape, Var x, const EncoderVars& params, Mode mode,
                  std::uint64_t dropout_seed) {
  MhaResult mha = multi_head_attention(tape, x, params.attention);
  Var attended = tape.dropout(mha.output, params.dropout, mode,
                              derive_seed(dropout_seed, 0));
  Var y = tape.layer_norm(tape.add(x, attended), params.ln1_gain, params.ln1_bias);
  Var ffn = position_wise_ffn(tape, y, params.ffn_w1, params.ffn_b1, params.ffn_w2,
                              params.ffn_b2);
  Var transformed = tape.dropout(ffn, params.dropout, mode, derive_seed(dropout_seed, 1));
  return tape.layer_norm(tape.add(y, transformed), params.ln2_gain, params.ln2_bias);
}

ParamVars Model::bind(Tape& tape) const {
  ParamVars vars;
  for (const auto& [name, tensor] : params_) {
    vars.emplace(name, tape.param(tensor));
  }
  return vars;
}

double Model::predict(const Tensor& window) const {
  Tape tape;
  const ParamVars vars = bind(tape);
  const Var p = forward(tape, vars, window, Mode::kEval, 0);
  return tape.scalar_value(p);
}

namespace {

Var lookup(const ParamVars& vars, const std::string& name) {
  auto it = vars.find(name);
  if (it == vars.end()) throw ConfigError("missing parameter: " + name);
  return it->second;
}

void check_stage_finite(Tape& tape, Var v, const char* stage) {
  if (!tape.value(v).all_finite()) {
    throw NumericError(std::string("non-finite activations in ") + stage);
  }
}

class ParamInit {
 public:
  explicit ParamInit(std::uint64_t seed) : rng_(seed) {}

  // Scaled-uniform in +-sqrt(6/(fan_in+fan_out)).
  Tensor glorot(std::size_t fan_in, std::size_t fan_out) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t({fan_in, fan_out});
    for (double& x : t.data()) x = rng_.uniform(-bound, bound);
    return t;
  }

  Tensor uniform_vector(std::size_t n, double bound) {
    Tensor t({n});
    for (double& x : t.data()) x = rng_.uniform(-bound, bound);
    return t;
  }

 private:
  DetRng rng_;
};

// ---- inTformer ---------------------------------------------------------------

class InTformerModel final : public Model {
 public:
  InTformerModel(const InTformerConfig& config, std::uint64_t init_seed)
      : config_(config) {
    config_.validate();
    ParamInit init(init_seed);
    const std::size_t k1 = static_cast<std::size_t>(config_.time_k) + 1;
    const std::size_t d = static_cast<std::size_t>(config_.d_model);
    const std::size_t dff = static_cast<std::size_t>(config_.d_ff);
    const std::size_t dk = static_cast<std::size_t>(config_.head_dim());
    const std::size_t f_in = static_cast<std::size_t>(config_.input_features);

    params_["t2v.omega"] = init.uniform_vector(k1, 1.0);
    params_["t2v.phi"] = init.uniform_vector(k1, 1.0);
    params_["embed.w"] = init.glorot(f_in + k1, d);
    params_["embed.b"] = Tensor({d});
    for (int e = 0; e < config_.encoders; ++e) {
      const std::string prefix = "enc" + std::to_string(e) + ".";
      for (int h = 0; h < config_.heads; ++h) {
        const std::string head = prefix + "attn.h" + std::to_string(h) + ".";
        params_[head + "wq"] = init.glorot(d, dk);
        params_[head + "wk"] = init.glorot(d, dk);
        params_[head + "wv"] = init.glorot(d, dk);
      }
      params_[prefix + "attn.wo"] =
          init.glorot(static_cast<std::size_t>(config_.heads) * dk, d);
      params_[prefix + "attn.bo"] = Tensor({d});
      params_[prefix + "ffn.w1"] = init.glorot(d, dff);
      params_[prefix + "ffn.b1"] = Tensor({dff});
      params_[prefix + "ffn.w2"] = init.glorot(dff, d);
      params_[prefix + "ffn.b2"] = Tensor({d});
      params_[prefix + "ln1.g"] = Tensor::full({d}, 1.0);
      params_[prefix + "ln1.b"] = Tensor({d});
      params_[prefix + "ln2.g"] = Tensor::full({d}, 1.0);
      params_[prefix + "ln2.b"] = Tensor({d});
    }
    params_["head.w"] = init.glorot(d, 1);
    params_["head.b"] = Tensor({1});
  }

  const std::string& family() const override {
    static const std::string name = "intformer";
    return name;
  }
  int timesteps() const override { return config_.timesteps; }
  int input_features() const override { return config_.input_features; }
  const InTformerConfig& config() const { return config_; }

  Var forward(Tape& tape, const ParamVars& vars, const Tensor& window, Mode mode,
              std::uint64_t dropout_seed) const override {
    if (window.rows() != static_cast<std::size_t>(config_.timesteps) ||
        window.cols() != static_cast<std::size_t>(config_.input_features)) {
      throw DimensionError("window shape " + window.shape_string() +
                           " does not match model config");
    }
    Var x = tape.constant(window);
    Time2VecVars t2v{lookup(vars, "t2v.omega"), lookup(vars, "t2v.phi"), config_.time_k};
    Var embedded =
        embed_sequence(tape, x, t2v, lookup(vars, "embed.w"), lookup(vars, "embed.b"));
    check_stage_finite(tape, embedded, "time embedding");
    Var state = embedded;
    for (int e = 0; e < config_.encoders; ++e) {
      const std::string prefix = "enc" + std::to_string(e) + ".";
      EncoderVars enc;
      for (int h = 0; h < config_.heads; ++h) {
        const std::string head = prefix + "attn.h" + std::to_string(h) + ".";
        enc.attention.w_query.push_back(lookup(vars, head + "wq"));
        enc.attention.w_key.push_back(lookup(vars, head + "wk"));
        enc.attention.w_value.push_back(lookup(vars, head + "wv"));
      }
      enc.attention.w_out = lookup(vars, prefix + "attn.wo");
      enc.attention.b_out = lookup(vars, prefix + "attn.bo");
      enc.attention.head_dim = config_.head_dim();
      enc.ffn_w1 = lookup(vars, prefix + "ffn.w1");
      enc.ffn_b1 = lookup(vars, prefix + "ffn.b1");
      enc.ffn_w2 = lookup(vars, prefix + "ffn.w2");
      enc.ffn_b2 = lookup(vars, prefix + "ffn.b2");
      enc.ln1_gain = lookup(vars, prefix + "ln1.g");
      enc.ln1_bias = lookup(vars, prefix + "ln1.b");
      enc.ln2_gain = lookup(vars, prefix + "ln2.g");
      enc.ln2_bias = lookup(vars, prefix + "ln2.b");
      enc.dropout = config_.dropout;
      state = encoder_block(tape, state, enc, mode,
                            derive_seed(dropout_seed, static_cast<std::uint64_t>(e)));
      check_stage_finite(tape, state,
                         ("encoder block " + std::to_string(e)).c_str());
    }
    Var pooled = tape.mean_rows(state);
    Var logit = tape.add_rowvec(tape.matmul(pooled, lookup(vars, "head.w")),
                                lookup(vars, "head.b"));
    Var p = tape.sigmoid(logit);
    check_stage_finite(tape, p, "classification head");
    return p;
  }

 private:
  InTformerConfig config_;
};

// ---- LSTM ---------------------------------------------------------------------

struct LstmCellVars {
  Var w_ix, w_ih, w_ic, b_i;
  Var w_fx, w_fh, w_fc, b_f;
  Var w_ox, w_oh, w_oc, b_o;
  Var w_cx, w_ch, b_c;
};

LstmCellVars lstm_cell_vars(const ParamVars& vars, const std::string& prefix) {
  return LstmCellVars{
      lookup(vars, prefix + "w_ix"), lookup(vars, prefix + "w_ih"),
      lookup(vars, prefix + "w_ic"), lookup(vars, prefix + "b_i"),
      lookup(vars, prefix + "w_fx"), lookup(vars, prefix + "w_fh"),
      lookup(vars, prefix + "w_fc"), lookup(vars, prefix + "b_f"),
      lookup(vars, prefix + "w_ox"), lookup(vars, prefix + "w_oh"),
      lookup(vars, prefix + "w_oc"), lookup(vars, prefix + "b_o"),
      lookup(vars, prefix + "w_cx"), lookup(vars, prefix + "w_ch"),
      lookup(vars, prefix + "b_c")};
}

// Runs the peephole cell over the rows of `sequence` and returns the final
// hidden state. Gates read the previous cell state, as specified.
Var lstm_run(Tape& tape, Var sequence, const LstmCellVars& cell, std::size_t hidden) {
  const std::size_t T = tape.value(sequence).rows();
  Var h = tape.constant(Tensor({1, hidden}));
  Var c = tape.constant(Tensor({1, hidden}));
  for (std::size_t t = 0; t < T; ++t) {
    Var x_t = tape.slice_rows(sequence, t, t + 1);
    auto gate = [&](Var wx, Var wh, Var wc, Var b) {
      Var pre = tape.add(tape.add(tape.matmul(x_t, wx), tape.matmul(h, wh)),
                         tape.matmul(c, wc));
      return tape.sigmoid(tape.add_rowvec(pre, b));
    };
    Var i_gate = gate(cell.w_ix, cell.w_ih, cell.w_ic, cell.b_i);
    Var f_gate = gate(cell.w_fx, cell.w_fh, cell.w_fc, cell.b_f);
    Var o_gate = gate(cell.w_ox, cell.w_oh, cell.w_oc, cell.b_o);
    Var candidate = tape.tanh(tape.add_rowvec(
        tape.add(tape.matmul(x_t, cell.w_cx), tape.matmul(h, cell.w_ch)), cell.b_c));
    c = tape.add(tape.mul(f_gate, c), tape.mul(i_gate, candidate));
    h = tape.mul(o_gate, tape.tanh(c));
  }
  return h;
}

void init_lstm_params(std::map<std::string, Tensor>& params, const std::string& prefix,
                      std::size_t input, std::size_t hidden, ParamInit& init) {
  static const char* gates[3] = {"i", "f", "o"};
  for (const char* g : gates) {
    params[prefix + "w_" + g + "x"] = init.glorot(input, hidden);
    params[prefix + "w_" + g + "h"] = init.glorot(hidden, hidden);
    params[prefix + "w_" + g + "c"] = init.glorot(hidden, hidden);
    params[prefix + "b_" + g] = Tensor({hidden});
  }
  params[prefix + "w_cx"] = init.glorot(input, hidden);
  params[prefix + "w_ch"] = init.glorot(hidden, hidden);
  params[prefix + "b_c"] = Tensor({hidden});
}

class LstmModel final : public Model {
 public:
  LstmModel(const LstmConfig& config, std::uint64_t init_seed) : config_(config) {
    config_.validate();
    ParamInit init(init_seed);
    init_lstm_params(params_, "lstm.", static_cast<std::size_t>(config_.input_features),
                     static_cast<std::size_t>(config_.hidden), init);
    params_["head.w"] = init.glorot(static_cast<std::size_t>(config_.hidden), 1);
    params_["head.b"] = Tensor({1});
  }

  const std::string& family() const override {
    static const std::string name = "lstm";
    return name;
  }
  int timesteps() const override { return config_.timesteps; }
  int input_features() const override { return config_.input_features; }

  Var forward(Tape& tape, const ParamVars& vars, const Tensor& window, Mode,
              std::uint64_t) const override {
    Var x = tape.constant(window);
    Var h = lstm_run(tape, x, lstm_cell_vars(vars, "lstm."),
                     static_cast<std::size_t>(config_.hidden));
    Var logit = tape.add_rowvec(tape.matmul(h, lookup(vars, "head.w")),
                                lookup(vars, "head.b"));
    return tape.sigmoid(logit);
  }

 private:
  LstmConfig config_;
};

// ---- 1D CNN --------------------------------------------------------------------

Var conv_feature_maps(Tape& tape, Var window, const ParamVars& vars,
                      const Cnn1dConfig& config) {
  Var unfolded = tape.im2row(window, static_cast<std::size_t>(config.kernel));
  Var pre = tape.add_rowvec(tape.matmul(unfolded, lookup(vars, "conv.w")),
                            lookup(vars, "conv.b"));
  return tape.relu(pre);
}

class Cnn1dModel final : public Model {
 public:
  Cnn1dModel(const Cnn1dConfig& config, std::uint64_t init_seed) : config_(config) {
    config_.validate();
    ParamInit init(init_seed);
    params_["conv.w"] = init.glorot(
        static_cast<std::size_t>(config_.kernel * config_.input_features),
        static_cast<std::size_t>(config_.channels));
    params_["conv.b"] = Tensor({static_cast<std::size_t>(config_.channels)});
    params_["head.w"] = init.glorot(static_cast<std::size_t>(config_.channels), 1);
    params_["head.b"] = Tensor({1});
  }

  const std::string& family() const override {
    static const std::string name = "cnn";
    return name;
  }
  int timesteps() const override { return config_.timesteps; }
  int input_features() const override { return config_.input_features; }

  Var forward(Tape& tape, const ParamVars& vars, const Tensor& window, Mode,
              std::uint64_t) const override {
    Var x = tape.constant(window);
    Var maps = conv_feature_maps(tape, x, vars, config_);
    Var pooled = tape.max_over_rows(maps);
    Var logit = tape.add_rowvec(tape.matmul(pooled, lookup(vars, "head.w")),
                                lookup(vars, "head.b"));
    return tape.sigmoid(logit);
  }

 private:
  Cnn1dConfig config_;
};

// ---- LSTM-CNN hybrids -----------------------------------------------------------

class HybridModel final : public Model {
 public:
  HybridModel(const LstmConfig& lstm, const Cnn1dConfig& cnn, HybridTopology topology,
              std::uint64_t init_seed)
      : lstm_(lstm), cnn_(cnn), topology_(topology) {
    lstm_.validate();
    cnn_.validate();
    if (lstm_.timesteps != cnn_.timesteps ||
        lstm_.input_features != cnn_.input_features) {
      throw ConfigError("hybrid branches must share the window shape");
    }
    if (topology_ == HybridTopology::kSequential &&
        cnn_.timesteps - cnn_.kernel + 1 < 1) {
      throw ConfigError("sequential hybrid leaves no timesteps after convolution");
    }
    ParamInit init(init_seed);
    params_["conv.w"] =
        init.glorot(static_cast<std::size_t>(cnn_.kernel * cnn_.input_features),
                    static_cast<std::size_t>(cnn_.channels));
    params_["conv.b"] = Tensor({static_cast<std::size_t>(cnn_.channels)});
    const std::size_t lstm_input =
        topology_ == HybridTopology::kSequential
            ? static_cast<std::size_t>(cnn_.channels)
            : static_cast<std::size_t>(lstm_.input_features);
    init_lstm_params(params_, "lstm.", lstm_input,
                     static_cast<std::size_t>(lstm_.hidden), init);
    const std::size_t head_in =
        topology_ == HybridTopology::kSequential
            ? static_cast<std::size_t>(lstm_.hidden)
            : static_cast<std::size_t>(lstm_.hidden + cnn_.channels);
    params_["head.w"] = init.glorot(head_in, 1);
    params_["head.b"] = Tensor({1});
  }

  const std::string& family() const override {
    static const std::string seq = "lstm_cnn_seq";
    static const std::string par = "lstm_cnn_par";
    return topology_ == HybridTopology::kSequential ? seq : par;
  }
  int timesteps() const override { return lstm_.timesteps; }
  int input_features() const override { return lstm_.input_features; }

  Var forward(Tape& tape, const ParamVars& vars, const Tensor& window, Mode,
              std::uint64_t) const override {
    Var x = tape.constant(window);
    Var maps = conv_feature_maps(tape, x, vars, cnn_);
    Var features;
    if (topology_ == HybridTopology::kSequential) {
      // Convolution feature maps become the LSTM's input sequence.
      features = lstm_run(tape, maps, lstm_cell_vars(vars, "lstm."),
                          static_cast<std::size_t>(lstm_.hidden));
    } else {
      Var h = lstm_run(tape, x, lstm_cell_vars(vars, "lstm."),
                       static_cast<std::size_t>(lstm_.hidden));
      Var pooled = tape.max_over_rows(maps);
      features = tape.concat_cols({h, pooled});
    }
    Var logit = tape.add_rowvec(tape.matmul(features, lookup(vars, "head.w")),
                                lookup(vars, "head.b"));
    return tape.sigmoid(logit);
  }

 private:
  LstmConfig lstm_;
  Cnn1dConfig cnn_;
  HybridTopology topology_;
};

}  // namespace

std::unique_ptr<Model> make_intformer(const InTformerConfig& config,
                                      std::uint64_t init_seed) {
  return std::make_unique<InTformerModel>(config, init_seed);
}

std::unique_ptr<Model> make_lstm(const LstmConfig& config, std::uint64_t init_seed) {
  return std::make_unique<LstmModel>(config, init_seed);
}

std::unique_ptr<Model> make_cnn1d(const Cnn1dConfig& config, std::uint64_t init_seed) {
  return std::make_unique<Cnn1dModel>(config, init_seed);
}

std::unique_ptr<Model> make_hybrid(const LstmConfig& lstm, const Cnn1dConfig& cnn,
                                   HybridTopology topology, std::uint64_t init_seed) {
  return std::make_unique<HybridModel>(lstm, cnn, topology, init_seed);
}

const std::vector<std::string>& model_families() {
  static const std::vector<std::string> families = {"intformer", "lstm", "cnn",
                                                    "lstm_cnn_seq", "lstm_cnn_par"};
  return families;
}

std::unique_ptr<Model> make_model(const std::string& family, int timesteps,
                                  int input_features, const ModelHyper& hyper,
                                  std::uint64_t init_seed) {
  if (family == "intformer") {
    InTformerConfig config;
    config.timesteps = timesteps;
    config.input_features = input_features;
    config.time_k = hyper.time_k;
    config.d_model = hyper.d_model;
    config.heads = hyper.heads;
    config.encoders = hyper.encoders;
    config.d_ff = hyper.d_ff;
    config.dropout = hyper.dropout;
    return make_intformer(config, init_seed);
  }
  LstmConfig lstm{timesteps, input_features, hyper.lstm_hidden};
  Cnn1dConfig cnn{timesteps, input_features, hyper.cnn_kernel, hyper.cnn_channels};
  if (family == "lstm") return make_lstm(lstm, init_seed);
  if (family == "cnn") return make_cnn1d(cnn, init_seed);
  if (family == "lstm_cnn_seq") {
    return make_hybrid(lstm, cnn, HybridTopology::kSequential, init_seed);
  }
  if (family == "lstm_cnn_par") {
    return make_hybrid(lstm, cnn, HybridTopology::kParallel, init_seed);
  }
  throw ConfigError("unknown model family: " + family);
}

}  // namespace intformer
