#include "intformer/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "intformer/errors.hpp"

namespace intformer {

namespace {
std::size_t product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}
}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(product(shape_), 0.0) {
  for (std::size_t e : shape_) {
    if (e == 0) throw DimensionError("tensor extents must be positive");
  }
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (product(shape_) != data_.size()) {
    throw DimensionError("tensor data length does not match shape");
  }
}

Tensor::Tensor(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r > 0 ? rows.begin()->size() : 0;
  shape_ = {r, c};
  data_.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged initializer for tensor");
    data_.insert(data_.end(), row.begin(), row.end());
  }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
  Tensor t(std::move(shape));
  for (double& x : t.data_) x = value;
  return t;
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

std::size_t Tensor::rows() const {
  if (rank() == 2) return shape_[0];
  if (rank() == 1) return 1;
  throw DimensionError("rows() requires rank 1 or 2, got " + shape_string());
}

std::size_t Tensor::cols() const {
  if (rank() == 2) return shape_[1];
  if (rank() == 1) return shape_[0];
  throw DimensionError("cols() requires rank 1 or 2, got " + shape_string());
}

double& Tensor::at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
double Tensor::at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

bool Tensor::all_finite() const {
  for (double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::string Tensor::shape_string() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << 'x';
    os << shape_[i];
  }
  os << ']';
  return os.str();
}

Tensor matmul_value(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw DimensionError("matmul requires rank-2 tensors, got " + a.shape_string() +
                         " and " + b.shape_string());
  }
  const std::size_t m = a.shape()[0], k = a.shape()[1];
  const std::size_t k2 = b.shape()[0], n = b.shape()[1];
  if (k != k2) {
    throw DimensionError("matmul inner extents differ: " + a.shape_string() + " vs " +
                         b.shape_string());
  }
  Tensor out({m, n});
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double aik = pa[i * k + kk];
      if (aik == 0.0) continue;
      const double* brow = pb + kk * n;
      double* orow = po + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Tensor transpose_value(const Tensor& a) {
  if (a.rank() != 2) throw DimensionError("transpose requires rank 2");
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  Tensor out({n, m});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out.at(j, i) = a.at(i, j);
  }
  return out;
}

Tensor softmax_value(const Tensor& v, int axis) {
  if (!v.all_finite()) throw NumericError("softmax on non-finite input");
  if (v.rank() == 1) {
    if (axis != 0 && axis != -1) throw DimensionError("softmax axis out of range");
    Tensor out = v;
    double mx = out[0];
    for (double x : out.data()) mx = std::max(mx, x);
    double sum = 0.0;
    for (double& x : out.data()) {
      x = std::exp(x - mx);
      sum += x;
    }
    for (double& x : out.data()) x /= sum;
    return out;
  }
  if (v.rank() != 2) throw DimensionError("softmax requires rank 1 or 2");
  if (axis == -1) axis = 1;
  if (axis != 0 && axis != 1) throw DimensionError("softmax axis out of range");
  Tensor out = v;
  const std::size_t m = v.shape()[0], n = v.shape()[1];
  const std::size_t outer = (axis == 1) ? m : n;
  const std::size_t inner = (axis == 1) ? n : m;
  for (std::size_t i = 0; i < outer; ++i) {
    auto idx = [&](std::size_t j) { return axis == 1 ? i * n + j : j * n + i; };
    double mx = out[idx(0)];
    for (std::size_t j = 1; j < inner; ++j) mx = std::max(mx, out[idx(j)]);
    double sum = 0.0;
    for (std::size_t j = 0; j < inner; ++j) {
      const double e = std::exp(out[idx(j)] - mx);
      out[idx(j)] = e;
      sum += e;
    }
    for (std::size_t j = 0; j < inner; ++j) out[idx(j)] /= sum;
  }
  return out;
}

}  // namespace intformer
