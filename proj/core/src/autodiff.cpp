#include "intformer/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "intformer/errors.hpp"
#include "intformer/rng.hpp"

namespace intformer {

ActivationKind activation_kind_from_string(const std::string& name) {
  if (name == "relu") return ActivationKind::kRelu;
  if (name == "sigmoid") return ActivationKind::kSigmoid;
  if (name == "tanh") return ActivationKind::kTanh;
  throw ConfigError("unknown activation kind: " + name);
}

Var Tape::emplace(Tensor value, std::function<void(Tape&)> back) {
  nodes_.push_back(Node{std::move(value), Tensor{}, std::move(back)});
  return Var{static_cast<int>(nodes_.size() - 1)};
}

void Tape::check_finite(Var v, const char* op) const {
  if (!val(v).all_finite()) {
    throw NumericError(std::string("non-finite values produced by ") + op);
  }
}

Var Tape::constant(Tensor value) { return emplace(std::move(value)); }
Var Tape::param(Tensor value) { return emplace(std::move(value)); }

Var Tape::add(Var a, Var b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  if (!ta.same_shape(tb)) {
    throw DimensionError("add shape mismatch: " + ta.shape_string() + " vs " +
                         tb.shape_string());
  }
  Tensor out = ta;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += tb[i];
  return emplace(std::move(out), [a, b, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.grad_ref(Var{self});
    Tensor& ga = t.grad_ref(a);
    Tensor& gb = t.grad_ref(b);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i];
      gb[i] += g[i];
    }
  });
}

Var Tape::sub(Var a, Var b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  if (!ta.same_shape(tb)) {
    throw DimensionError("sub shape mismatch: " + ta.shape_string() + " vs " +
                         tb.shape_string());
  }
  Tensor out = ta;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= tb[i];
  return emplace(std::move(out), [a, b, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.grad_ref(Var{self});
    Tensor& ga = t.grad_ref(a);
    Tensor& gb = t.grad_ref(b);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i];
      gb[i] -= g[i];
    }
  });
}

Var Tape::mul(Var a, Var b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  if (!ta.same_shape(tb)) {
    throw DimensionError("mul shape mismatch: " + ta.shape_string() + " vs " +
                         tb.shape_string());
  }
  Tensor out = ta;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= tb[i];
  return emplace(std::move(out), [a, b, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.grad_ref(Var{self});
    const Tensor& va = t.val(a);
    const Tensor& vb = t.val(b);
    Tensor& ga = t.grad_ref(a);
    Tensor& gb = t.grad_ref(b);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i] * vb[i];
      gb[i] += g[i] * va[i];
    }
  });
}

Var Tape::add_rowvec(Var a, Var b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  const std::size_t n = ta.cols();
  if (tb.size() != n || (tb.rank() == 2 && tb.shape()[0] != 1)) {
    throw DimensionError("add_rowvec: vector " + tb.shape_string() +
                         " does not broadcast over " + ta.shape_string());
  }
  Tensor out = ta;
  const std::size_t m = ta.rows();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += tb[j];
  }
  return emplace(std::move(out),
                 [a, b, m, n, self = static_cast<int>(nodes_.size())](Tape& t) {
                   const Tensor& g = t.grad_ref(Var{self});
                   Tensor& ga = t.grad_ref(a);
                   Tensor& gb = t.grad_ref(b);
                   for (std::size_t i = 0; i < m; ++i) {
                     for (std::size_t j = 0; j < n; ++j) {
                       ga[i * n + j] += g[i * n + j];
                       gb[j] += g[i * n + j];
                     }
                   }
                 });
}

Var Tape::scale(Var a, double c) {
  Tensor out = val(a);
  for (double& x : out.data()) x *= c;
  return emplace(std::move(out), [a, c, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.grad_ref(Var{self});
    Tensor& ga = t.grad_ref(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
  });
}

Var Tape::add_const(Var a, double c) {
  Tensor out = val(a);
  for (double& x : out.data()) x += c;
  return emplace(std::move(out), [a, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.grad_ref(Var{self});
    Tensor& ga = t.grad_ref(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var Tape::matmul(Var a, Var b) {
  Tensor out = matmul_value(val(a), val(b));
  Var v = emplace(std::move(out), [a, b, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.grad_ref(Var{self});
    // d a = g . b^T ; d b = a^T . g
    const Tensor da = matmul_value(g, transpose_value(t.val(b)));
    const Tensor db = matmul_value(transpose_value(t.val(a)), g);
    Tensor& ga = t.grad_ref(a);
    Tensor& gb = t.grad_ref(b);
    for (std::size_t i = 0; i < da.size(); ++i) ga[i] += da[i];
    for (std::size_t i = 0; i < db.size(); ++i) gb[i] += db[i];
  });
  check_finite(v, "matmul");
  return v;
}

Var Tape::transpose(Var a) {
  Tensor out = transpose_value(val(a));
  return emplace(std::move(out), [a, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor gt = transpose_value(t.grad_ref(Var{self}));
    Tensor& ga = t.grad_ref(a);
    for (std::size_t i = 0; i < gt.size(); ++i) ga[i] += gt[i];
  });
}

Var Tape::relu(Var a) {
  Tensor out = val(a);
  for (double& x : out.data()) x = x > 0.0 ? x : 0.0;
  return emplace(std::move(out), [a, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.grad_ref(Var{self});
    const Tensor& v = t.val(a);
    Tensor& ga = t.grad_ref(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (v[i] > 0.0) ga[i] += g[i];
    }
  });
}

Var Tape::sigmoid(Var a) {
  Tensor out = val(a);
  for (double& x : out.data()) {
    // Split on sign so exp never overflows.
    x = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  Var v = emplace(std::move(out), [a, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.grad_ref(Var{self});
    const Tensor& y = t.val(Var{self});
    Tensor& ga = t.grad_ref(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
  return v;
}

Var Tape::tanh(Var a) {
  Tensor out = val(a);
  for (double& x : out.data()) x = std::tanh(x);
  return emplace(std::move(out), [a, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.grad_ref(Var{self});
    const Tensor& y = t.val(Var{self});
    Tensor& ga = t.grad_ref(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var Tape::sin(Var a) {
  Tensor out = val(a);
  for (double& x : out.data()) x = std::sin(x);
  return emplace(std::move(out), [a, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.grad_ref(Var{self});
    const Tensor& v = t.val(a);
    Tensor& ga = t.grad_ref(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * std::cos(v[i]);
  });
}

Var Tape::log(Var a) {
  const Tensor& ta = val(a);
  for (double x : ta.data()) {
    if (x <= 0.0) throw NumericError("log requires strictly positive input");
  }
  Tensor out = ta;
  for (double& x : out.data()) x = std::log(x);
  return emplace(std::move(out), [a, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.grad_ref(Var{self});
    const Tensor& v = t.val(a);
    Tensor& ga = t.grad_ref(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / v[i];
  });
}

Var Tape::clamp(Var a, double lo, double hi) {
  if (!(lo < hi)) throw ConfigError("clamp requires lo < hi");
  Tensor out = val(a);
  for (double& x : out.data()) x = std::min(hi, std::max(lo, x));
  return emplace(std::move(out),
                 [a, lo, hi, self = static_cast<int>(nodes_.size())](Tape& t) {
                   const Tensor& g = t.grad_ref(Var{self});
                   const Tensor& v = t.val(a);
                   Tensor& ga = t.grad_ref(a);
                   for (std::size_t i = 0; i < g.size(); ++i) {
                     if (v[i] > lo && v[i] < hi) ga[i] += g[i];
                   }
                 });
}

Var Tape::activation(Var a, ActivationKind kind) {
  switch (kind) {
    case ActivationKind::kRelu:
      return relu(a);
    case ActivationKind::kSigmoid:
      return sigmoid(a);
    case ActivationKind::kTanh:
      return tanh(a);
  }
  throw ConfigError("unknown activation kind");
}

Var Tape::softmax(Var a) {
  Tensor out = softmax_value(val(a), -1);
  const std::size_t n = out.cols();
  const std::size_t m = out.rows();
  return emplace(std::move(out),
                 [a, m, n, self = static_cast<int>(nodes_.size())](Tape& t) {
                   const Tensor& g = t.grad_ref(Var{self});
                   const Tensor& y = t.val(Var{self});
                   Tensor& ga = t.grad_ref(a);
                   for (std::size_t i = 0; i < m; ++i) {
                     double dot = 0.0;
                     for (std::size_t j = 0; j < n; ++j) {
                       dot += g[i * n + j] * y[i * n + j];
                     }
                     for (std::size_t j = 0; j < n; ++j) {
                       ga[i * n + j] += y[i * n + j] * (g[i * n + j] - dot);
                     }
                   }
                 });
}

Var Tape::layer_norm(Var x, Var gain, Var bias, double eps) {
  const Tensor& tx = val(x);
  const Tensor& tg = val(gain);
  const Tensor& tb = val(bias);
  const std::size_t m = tx.rows();
  const std::size_t d = tx.cols();
  if (d < 1) throw DimensionError("layer_norm requires d >= 1");
  if (tg.size() != d || tb.size() != d) {
    throw DimensionError("layer_norm gain/bias must have length " + std::to_string(d));
  }
  if (eps <= 0.0) throw ConfigError("layer_norm eps must be positive");

  Tensor out = tx;
  std::vector<double> rstd(m), centered(m * d);
  std::vector<char> floored(m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += tx[i * d + j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = tx[i * d + j] - mean;
      centered[i * d + j] = c;
      var += c * c;
    }
    var /= static_cast<double>(d);
    floored[i] = var <= eps ? 1 : 0;
    rstd[i] = 1.0 / std::sqrt(std::max(var, eps));
    for (std::size_t j = 0; j < d; ++j) {
      out[i * d + j] = centered[i * d + j] * rstd[i] * tg[j] + tb[j];
    }
  }
  return emplace(
      std::move(out),
      [x, gain, bias, m, d, rstd = std::move(rstd), centered = std::move(centered),
       floored = std::move(floored), self = static_cast<int>(nodes_.size())](Tape& t) {
        const Tensor& g = t.grad_ref(Var{self});
        const Tensor& tg = t.val(gain);
        Tensor& gx = t.grad_ref(x);
        Tensor& gg = t.grad_ref(gain);
        Tensor& gb = t.grad_ref(bias);
        for (std::size_t i = 0; i < m; ++i) {
          // dy = upstream grad through the affine; y = centered * rstd.
          double mean_dy = 0.0, mean_dyy = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            const double y = centered[i * d + j] * rstd[i];
            const double dy = g[i * d + j] * tg[j];
            gg[j] += g[i * d + j] * y;
            gb[j] += g[i * d + j];
            mean_dy += dy;
            mean_dyy += dy * y;
          }
          mean_dy /= static_cast<double>(d);
          mean_dyy /= static_cast<double>(d);
          for (std::size_t j = 0; j < d; ++j) {
            const double y = centered[i * d + j] * rstd[i];
            const double dy = g[i * d + j] * tg[j];
            // On a variance-floored row rstd is locally constant, so the
            // variance term of the gradient vanishes.
            const double var_term = floored[i] ? 0.0 : y * mean_dyy;
            gx[i * d + j] += rstd[i] * (dy - mean_dy - var_term);
          }
        }
      });
}

Var Tape::dropout(Var x, double rate, Mode mode, std::uint64_t seed) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ConfigError("dropout rate must be in [0, 1)");
  }
  if (mode == Mode::kEval || rate == 0.0) {
    Tensor out = val(x);
    return emplace(std::move(out), [x, self = static_cast<int>(nodes_.size())](Tape& t) {
      const Tensor& g = t.grad_ref(Var{self});
      Tensor& gx = t.grad_ref(x);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
  }
  DetRng rng(seed);
  const double keep_scale = 1.0 / (1.0 - rate);
  Tensor out = val(x);
  std::vector<double> mask(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    mask[i] = rng.uniform() < rate ? 0.0 : keep_scale;
    out[i] *= mask[i];
  }
  return emplace(std::move(out), [x, mask = std::move(mask),
                                  self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.grad_ref(Var{self});
    Tensor& gx = t.grad_ref(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
  });
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols of zero parts");
  const std::size_t m = val(parts[0]).rows();
  std::size_t total = 0;
  for (Var p : parts) {
    if (val(p).rows() != m) {
      throw DimensionError("concat_cols row-count mismatch");
    }
    total += val(p).cols();
  }
  Tensor out({m, total});
  std::size_t offset = 0;
  std::vector<std::pair<std::size_t, std::size_t>> spans;  // (offset, width)
  for (Var p : parts) {
    const Tensor& tp = val(p);
    const std::size_t w = tp.cols();
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        out[i * total + offset + j] = tp[i * w + j];
      }
    }
    spans.emplace_back(offset, w);
    offset += w;
  }
  return emplace(std::move(out),
                 [parts, spans = std::move(spans), m, total,
                  self = static_cast<int>(nodes_.size())](Tape& t) {
                   const Tensor& g = t.grad_ref(Var{self});
                   for (std::size_t p = 0; p < parts.size(); ++p) {
                     Tensor& gp = t.grad_ref(parts[p]);
                     const auto [off, w] = spans[p];
                     for (std::size_t i = 0; i < m; ++i) {
                       for (std::size_t j = 0; j < w; ++j) {
                         gp[i * w + j] += g[i * total + off + j];
                       }
                     }
                   }
                 });
}

Var Tape::slice_cols(Var a, std::size_t c0, std::size_t c1) {
  const Tensor& ta = val(a);
  const std::size_t m = ta.rows(), n = ta.cols();
  if (c0 >= c1 || c1 > n) throw DimensionError("slice_cols range out of bounds");
  const std::size_t w = c1 - c0;
  Tensor out({m, w});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = ta[i * n + c0 + j];
  }
  return emplace(std::move(out),
                 [a, m, n, c0, w, self = static_cast<int>(nodes_.size())](Tape& t) {
                   const Tensor& g = t.grad_ref(Var{self});
                   Tensor& ga = t.grad_ref(a);
                   for (std::size_t i = 0; i < m; ++i) {
                     for (std::size_t j = 0; j < w; ++j) {
                       ga[i * n + c0 + j] += g[i * w + j];
                     }
                   }
                 });
}

Var Tape::slice_rows(Var a, std::size_t r0, std::size_t r1) {
  const Tensor& ta = val(a);
  const std::size_t m = ta.rows(), n = ta.cols();
  if (r0 >= r1 || r1 > m) throw DimensionError("slice_rows range out of bounds");
  const std::size_t h = r1 - r0;
  Tensor out({h, n});
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = ta[(r0 + i) * n + j];
  }
  return emplace(std::move(out),
                 [a, n, r0, h, self = static_cast<int>(nodes_.size())](Tape& t) {
                   const Tensor& g = t.grad_ref(Var{self});
                   Tensor& ga = t.grad_ref(a);
                   for (std::size_t i = 0; i < h; ++i) {
                     for (std::size_t j = 0; j < n; ++j) {
                       ga[(r0 + i) * n + j] += g[i * n + j];
                     }
                   }
                 });
}

Var Tape::reshape(Var a, std::vector<std::size_t> shape) {
  Tensor out(std::move(shape), val(a).data());
  return emplace(std::move(out), [a, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Tensor& g = t.grad_ref(Var{self});
    Tensor& ga = t.grad_ref(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var Tape::mean_rows(Var a) {
  const Tensor& ta = val(a);
  const std::size_t m = ta.rows(), n = ta.cols();
  Tensor out({1, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[j] += ta[i * n + j];
  }
  for (std::size_t j = 0; j < n; ++j) out[j] /= static_cast<double>(m);
  return emplace(std::move(out),
                 [a, m, n, self = static_cast<int>(nodes_.size())](Tape& t) {
                   const Tensor& g = t.grad_ref(Var{self});
                   Tensor& ga = t.grad_ref(a);
                   const double inv = 1.0 / static_cast<double>(m);
                   for (std::size_t i = 0; i < m; ++i) {
                     for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[j] * inv;
                   }
                 });
}

Var Tape::max_over_rows(Var a) {
  const Tensor& ta = val(a);
  const std::size_t m = ta.rows(), n = ta.cols();
  Tensor out({1, n});
  std::vector<std::size_t> argmax(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    double best = ta[j];
    for (std::size_t i = 1; i < m; ++i) {
      if (ta[i * n + j] > best) {
        best = ta[i * n + j];
        argmax[j] = i;
      }
    }
    out[j] = best;
  }
  return emplace(std::move(out),
                 [a, n, argmax = std::move(argmax),
                  self = static_cast<int>(nodes_.size())](Tape& t) {
                   const Tensor& g = t.grad_ref(Var{self});
                   Tensor& ga = t.grad_ref(a);
                   for (std::size_t j = 0; j < n; ++j) {
                     ga[argmax[j] * n + j] += g[j];
                   }
                 });
}

Var Tape::sum_all(Var a) {
  const Tensor& ta = val(a);
  double s = 0.0;
  for (double x : ta.data()) s += x;
  return emplace(Tensor::scalar(s), [a, self = static_cast<int>(nodes_.size())](Tape& t) {
    const double g = t.grad_ref(Var{self})[0];
    Tensor& ga = t.grad_ref(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
  });
}

Var Tape::im2row(Var a, std::size_t kernel) {
  const Tensor& ta = val(a);
  const std::size_t T = ta.rows(), f = ta.cols();
  if (kernel < 1 || kernel > T) {
    throw ConfigError("im2row kernel must be in [1, rows]");
  }
  const std::size_t out_rows = T - kernel + 1;
  const std::size_t out_cols = kernel * f;
  Tensor out({out_rows, out_cols});
  for (std::size_t i = 0; i < out_rows; ++i) {
    for (std::size_t k = 0; k < kernel; ++k) {
      for (std::size_t j = 0; j < f; ++j) {
        out[i * out_cols + k * f + j] = ta[(i + k) * f + j];
      }
    }
  }
  return emplace(std::move(out),
                 [a, out_rows, out_cols, kernel, f,
                  self = static_cast<int>(nodes_.size())](Tape& t) {
                   const Tensor& g = t.grad_ref(Var{self});
                   Tensor& ga = t.grad_ref(a);
                   for (std::size_t i = 0; i < out_rows; ++i) {
                     for (std::size_t k = 0; k < kernel; ++k) {
                       for (std::size_t j = 0; j < f; ++j) {
                         ga[(i + k) * f + j] += g[i * out_cols + k * f + j];
                       }
                     }
                   }
                 });
}

void Tape::backward(Var loss) {
  if (loss.id < 0 || static_cast<std::size_t>(loss.id) >= nodes_.size()) {
    throw DimensionError("backward on invalid var");
  }
  if (val(loss).size() != 1) {
    throw DimensionError("backward requires a scalar loss, got " +
                         val(loss).shape_string());
  }
  if (!val(loss).all_finite()) throw NumericError("backward on non-finite loss");
  for (Node& node : nodes_) {
    node.grad = Tensor::zeros(node.value.shape());
  }
  nodes_[static_cast<std::size_t>(loss.id)].grad[0] = 1.0;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    if (nodes_[i].back) nodes_[i].back(*this);
  }
  grads_ready_ = true;
}

const Tensor& Tape::value(Var v) const { return val(v); }

const Tensor& Tape::grad(Var v) const {
  if (!grads_ready_) throw NumericError("gradient requested before backward()");
  return nodes_[static_cast<std::size_t>(v.id)].grad;
}

double Tape::scalar_value(Var v) const {
  const Tensor& t = val(v);
  if (t.size() != 1) throw DimensionError("scalar_value on non-scalar " + t.shape_string());
  return t[0];
}

double grad_check(const ScalarGraphFn& build, const std::vector<Tensor>& params,
                  double step) {
  auto evaluate = [&](const std::vector<Tensor>& p) {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(p.size());
    for (const Tensor& t : p) vars.push_back(tape.param(t));
    const Var loss = build(tape, vars);
    const double v = tape.scalar_value(loss);
    if (!std::isfinite(v)) throw NumericError("grad_check: non-finite objective");
    return v;
  };

  // Analytic gradients in one reverse sweep.
  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(params.size());
    for (const Tensor& t : params) vars.push_back(tape.param(t));
    const Var loss = build(tape, vars);
    if (!std::isfinite(tape.scalar_value(loss))) {
      throw NumericError("grad_check: non-finite objective");
    }
    tape.backward(loss);
    for (Var v : vars) analytic.push_back(tape.grad(v));
  }

  double max_rel_err = 0.0;
  std::vector<Tensor> perturbed = params;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      const double original = perturbed[p][i];
      perturbed[p][i] = original + step;
      const double up = evaluate(perturbed);
      perturbed[p][i] = original - step;
      const double down = evaluate(perturbed);
      perturbed[p][i] = original;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[p][i];
      const double rel = std::abs(a - numeric) / std::max(1.0, std::abs(a));
      max_rel_err = std::max(max_rel_err, rel);
    }
  }
  return max_rel_err;
}

}  // namespace intformer
