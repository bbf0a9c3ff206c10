// Copyright 2026 the compass-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "compasslab/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace compasslab {

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (std::int64_t e : shape) {
    if (e <= 0) fail_validation("shape extent must be positive, got %lld", static_cast<long long>(e));
    n *= e;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

namespace {

thread_local Tape* g_current_tape = nullptr;

void check_finite(const std::vector<float>& values, const char* op_name) {
  for (float v : values) {
    if (!std::isfinite(v)) {
      fail_validation("non-finite value produced by op '%s'", op_name);
    }
  }
}

bool wants_grad(std::initializer_list<const Tensor*> inputs) {
  if (g_current_tape == nullptr) return false;
  for (const Tensor* t : inputs) {
    if (t->defined() && t->requires_grad()) return true;
  }
  return false;
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor make_op_output(Shape shape, std::vector<float> values, bool requires_grad) {
  auto data = std::make_shared<TensorData>();
  data->shape = std::move(shape);
  data->values = std::move(values);
  data->requires_grad = requires_grad;
  return Tensor(std::move(data));
}

Tensor Tensor::zeros(Shape shape) {
  const auto n = shape_numel(shape);
  return make_op_output(std::move(shape), std::vector<float>(static_cast<std::size_t>(n), 0.0f), false);
}

Tensor Tensor::full(Shape shape, float value) {
  const auto n = shape_numel(shape);
  return make_op_output(std::move(shape), std::vector<float>(static_cast<std::size_t>(n), value), false);
}

Tensor Tensor::from_values(Shape shape, std::vector<float> values) {
  const auto n = shape_numel(shape);
  if (n != static_cast<std::int64_t>(values.size())) {
    fail_validation("tensor data length %zu does not match shape %s", values.size(),
                    shape_str(shape).c_str());
  }
  check_finite(values, "from_values");
  return make_op_output(std::move(shape), std::move(values), false);
}

Tensor Tensor::param(Shape shape, std::vector<float> values) {
  Tensor t = from_values(std::move(shape), std::move(values));
  t.data_->requires_grad = true;
  return t;
}

Tensor Tensor::randn(Shape shape, Prng& rng, float stddev) {
  const auto n = shape_numel(shape);
  std::vector<float> values(static_cast<std::size_t>(n));
  for (auto& v : values) v = rng.next_normal_f(0.0f, stddev);
  return make_op_output(std::move(shape), std::move(values), false);
}

std::int64_t Tensor::rows() const {
  const Shape& s = data_->shape;
  if (s.size() == 2) return s[0];
  if (s.size() == 1) return 1;
  fail_validation("rows() needs a rank-1 or rank-2 tensor, got %s", shape_str(s).c_str());
}

std::int64_t Tensor::cols() const {
  const Shape& s = data_->shape;
  if (s.size() == 2) return s[1];
  if (s.size() == 1) return s[0];
  fail_validation("cols() needs a rank-1 or rank-2 tensor, got %s", shape_str(s).c_str());
}

float Tensor::scalar() const {
  if (!is_scalar()) fail_validation("scalar() on tensor of shape %s", shape_str(shape()).c_str());
  return data_->values[0];
}

const std::vector<float>& Tensor::grad() const {
  if (data_->grad.empty()) {
    data_->grad.assign(data_->values.size(), 0.0f);
  }
  return data_->grad;
}

void Tensor::zero_grad() { data_->grad.clear(); }

std::vector<float>& ensure_grad(const std::shared_ptr<TensorData>& data) {
  if (data->grad.empty()) data->grad.assign(data->values.size(), 0.0f);
  return data->grad;
}

Tape::Scope::Scope(Tape& tape) : previous_(g_current_tape) { g_current_tape = &tape; }
Tape::Scope::~Scope() { g_current_tape = previous_; }

Tape* Tape::current() { return g_current_tape; }

void Tape::record(const char* op_name, std::function<void()> backward_fn) {
  nodes_.push_back(Node{op_name, std::move(backward_fn)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || !loss.is_scalar()) {
    fail_validation("backward requires a scalar loss");
  }
  ensure_grad(loss.data())[0] = 1.0f;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    it->backward_fn();
  }
}

namespace ops {

namespace {

// C[m x n] = A[m x k] * B[k x n], double accumulation.
std::vector<float> gemm_nn(const float* a, const float* b, std::int64_t m, std::int64_t k,
                           std::int64_t n) {
  std::vector<float> out(static_cast<std::size_t>(m * n));
  std::vector<double> row(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < m; ++i) {
    std::fill(row.begin(), row.end(), 0.0);
    const float* ai = a + i * k;
    for (std::int64_t l = 0; l < k; ++l) {
      const double av = ai[l];
      const float* bl = b + l * n;
      for (std::int64_t j = 0; j < n; ++j) row[static_cast<std::size_t>(j)] += av * bl[j];
    }
    float* oi = out.data() + i * n;
    for (std::int64_t j = 0; j < n; ++j) oi[j] = static_cast<float>(row[static_cast<std::size_t>(j)]);
  }
  return out;
}

// C[m x k] = A[m x n] * B^T where B is [k x n].
std::vector<float> gemm_nt(const float* a, const float* b, std::int64_t m, std::int64_t n,
                           std::int64_t k) {
  std::vector<float> out(static_cast<std::size_t>(m * k));
  for (std::int64_t i = 0; i < m; ++i) {
    const float* ai = a + i * n;
    for (std::int64_t l = 0; l < k; ++l) {
      const float* bl = b + l * n;
      double acc = 0.0;
      for (std::int64_t j = 0; j < n; ++j) acc += static_cast<double>(ai[j]) * bl[j];
      out[static_cast<std::size_t>(i * k + l)] = static_cast<float>(acc);
    }
  }
  return out;
}

// C[k x n] = A^T * B where A is [m x k], B is [m x n].
std::vector<float> gemm_tn(const float* a, const float* b, std::int64_t m, std::int64_t k,
                           std::int64_t n) {
  std::vector<double> acc(static_cast<std::size_t>(k * n), 0.0);
  for (std::int64_t i = 0; i < m; ++i) {
    const float* ai = a + i * k;
    const float* bi = b + i * n;
    for (std::int64_t l = 0; l < k; ++l) {
      const double av = ai[l];
      double* al = acc.data() + l * n;
      for (std::int64_t j = 0; j < n; ++j) al[j] += av * bi[j];
    }
  }
  std::vector<float> out(static_cast<std::size_t>(k * n));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(acc[i]);
  return out;
}

void add_into(std::vector<float>& dst, const std::vector<float>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

Tensor finish(const char* op_name, Shape shape, std::vector<float> values,
              std::initializer_list<const Tensor*> inputs) {
  check_finite(values, op_name);
  return make_op_output(std::move(shape), std::move(values), wants_grad(inputs));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op_name) {
  if (a.shape() != b.shape()) {
    fail_validation("%s: shape mismatch %s vs %s", op_name, shape_str(a.shape()).c_str(),
                    shape_str(b.shape()).c_str());
  }
}

// Elementwise op with out[i] = f(a[i]) and da[i] = g[i] * dfd(a[i], out[i]).
template <typename Fwd, typename Bwd>
Tensor unary_op(const char* name, const Tensor& a, Fwd fwd, Bwd dfd) {
  std::vector<float> out(a.values().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(fwd(a.values()[i]));
  Tensor result = finish(name, a.shape(), std::move(out), {&a});
  if (result.requires_grad()) {
    auto ad = a.data();
    auto rd = result.data();
    Tape::current()->record(name, [ad, rd, dfd]() {
      if (rd->grad.empty() || !ad->requires_grad) return;
      auto& ga = ensure_grad(ad);
      for (std::size_t i = 0; i < ga.size(); ++i) {
        ga[i] += rd->grad[i] * static_cast<float>(dfd(ad->values[i], rd->values[i]));
      }
    });
  }
  return result;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<float> out(a.values().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  Tensor result = finish("add", a.shape(), std::move(out), {&a, &b});
  if (result.requires_grad()) {
    auto ad = a.data(), bd = b.data(), rd = result.data();
    Tape::current()->record("add", [ad, bd, rd]() {
      if (rd->grad.empty()) return;
      if (ad->requires_grad) add_into(ensure_grad(ad), rd->grad);
      if (bd->requires_grad) add_into(ensure_grad(bd), rd->grad);
    });
  }
  return result;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<float> out(a.values().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
  Tensor result = finish("sub", a.shape(), std::move(out), {&a, &b});
  if (result.requires_grad()) {
    auto ad = a.data(), bd = b.data(), rd = result.data();
    Tape::current()->record("sub", [ad, bd, rd]() {
      if (rd->grad.empty()) return;
      if (ad->requires_grad) add_into(ensure_grad(ad), rd->grad);
      if (bd->requires_grad) {
        auto& gb = ensure_grad(bd);
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= rd->grad[i];
      }
    });
  }
  return result;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<float> out(a.values().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  Tensor result = finish("mul", a.shape(), std::move(out), {&a, &b});
  if (result.requires_grad()) {
    auto ad = a.data(), bd = b.data(), rd = result.data();
    Tape::current()->record("mul", [ad, bd, rd]() {
      if (rd->grad.empty()) return;
      if (ad->requires_grad) {
        auto& ga = ensure_grad(ad);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += rd->grad[i] * bd->values[i];
      }
      if (bd->requires_grad) {
        auto& gb = ensure_grad(bd);
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += rd->grad[i] * ad->values[i];
      }
    });
  }
  return result;
}

Tensor scale(const Tensor& a, float c) {
  return unary_op(
      "scale", a, [c](float x) { return x * c; }, [c](float, float) { return c; });
}

Tensor add_scalar(const Tensor& a, float c) {
  return unary_op(
      "add_scalar", a, [c](float x) { return x + c; }, [](float, float) { return 1.0f; });
}

Tensor silu(const Tensor& a) {
  return unary_op(
      "silu", a, [](float x) { return x * stable_sigmoid(x); },
      [](float x, float) {
        const double s = stable_sigmoid(x);
        return s * (1.0 + x * (1.0 - s));
      });
}

Tensor sigmoid(const Tensor& a) {
  return unary_op(
      "sigmoid", a, [](float x) { return stable_sigmoid(x); },
      [](float, float y) { return y * (1.0 - y); });
}

Tensor logsigmoid(const Tensor& a) {
  return unary_op(
      "logsigmoid", a,
      [](float x) { return x >= 0.0f ? -std::log1p(std::exp(-static_cast<double>(x)))
                                     : x - std::log1p(std::exp(static_cast<double>(x))); },
      [](float x, float) { return stable_sigmoid(-x); });
}

Tensor log(const Tensor& a) {
  return unary_op(
      "log", a, [](float x) { return std::log(static_cast<double>(x)); },
      [](float x, float) { return 1.0 / x; });
}

Tensor recip(const Tensor& a) {
  return unary_op(
      "recip", a, [](float x) { return 1.0 / static_cast<double>(x); },
      [](float x, float) { return -1.0 / (static_cast<double>(x) * x); });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2) {
    fail_validation("matmul needs rank-2 tensors, got %s and %s", shape_str(a.shape()).c_str(),
                    shape_str(b.shape()).c_str());
  }
  const std::int64_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    fail_validation("matmul: inner extents differ, %s vs %s", shape_str(a.shape()).c_str(),
                    shape_str(b.shape()).c_str());
  }
  Tensor result = finish("matmul", {m, n}, gemm_nn(a.values().data(), b.values().data(), m, k, n),
                         {&a, &b});
  if (result.requires_grad()) {
    auto ad = a.data(), bd = b.data(), rd = result.data();
    Tape::current()->record("matmul", [ad, bd, rd, m, k, n]() {
      if (rd->grad.empty()) return;
      if (ad->requires_grad) {
        add_into(ensure_grad(ad), gemm_nt(rd->grad.data(), bd->values.data(), m, n, k));
      }
      if (bd->requires_grad) {
        add_into(ensure_grad(bd), gemm_tn(ad->values.data(), rd->grad.data(), m, k, n));
      }
    });
  }
  return result;
}

Tensor transpose(const Tensor& a) {
  const std::int64_t r = a.rows(), c = a.cols();
  std::vector<float> out(a.values().size());
  for (std::int64_t i = 0; i < r; ++i)
    for (std::int64_t j = 0; j < c; ++j)
      out[static_cast<std::size_t>(j * r + i)] = a.values()[static_cast<std::size_t>(i * c + j)];
  Tensor result = finish("transpose", {c, r}, std::move(out), {&a});
  if (result.requires_grad()) {
    auto ad = a.data();
    auto rd = result.data();
    Tape::current()->record("transpose", [ad, rd, r, c]() {
      if (rd->grad.empty() || !ad->requires_grad) return;
      auto& ga = ensure_grad(ad);
      for (std::int64_t i = 0; i < r; ++i)
        for (std::int64_t j = 0; j < c; ++j)
          ga[static_cast<std::size_t>(i * c + j)] += rd->grad[static_cast<std::size_t>(j * r + i)];
    });
  }
  return result;
}

Tensor slice_cols(const Tensor& a, std::int64_t c0, std::int64_t c1) {
  const std::int64_t r = a.rows(), c = a.cols();
  if (c0 < 0 || c1 > c || c0 >= c1) fail_validation("slice_cols: bad range [%lld, %lld) for %lld cols",
                                                    (long long)c0, (long long)c1, (long long)c);
  const std::int64_t w = c1 - c0;
  std::vector<float> out(static_cast<std::size_t>(r * w));
  for (std::int64_t i = 0; i < r; ++i)
    for (std::int64_t j = 0; j < w; ++j)
      out[static_cast<std::size_t>(i * w + j)] = a.values()[static_cast<std::size_t>(i * c + c0 + j)];
  Tensor result = finish("slice_cols", {r, w}, std::move(out), {&a});
  if (result.requires_grad()) {
    auto ad = a.data();
    auto rd = result.data();
    Tape::current()->record("slice_cols", [ad, rd, r, c, c0, w]() {
      if (rd->grad.empty() || !ad->requires_grad) return;
      auto& ga = ensure_grad(ad);
      for (std::int64_t i = 0; i < r; ++i)
        for (std::int64_t j = 0; j < w; ++j)
          ga[static_cast<std::size_t>(i * c + c0 + j)] += rd->grad[static_cast<std::size_t>(i * w + j)];
    });
  }
  return result;
}

Tensor slice_rows(const Tensor& a, std::int64_t r0, std::int64_t r1) {
  const std::int64_t r = a.rows(), c = a.cols();
  if (r0 < 0 || r1 > r || r0 >= r1) fail_validation("slice_rows: bad range [%lld, %lld) for %lld rows",
                                                    (long long)r0, (long long)r1, (long long)r);
  const std::int64_t h = r1 - r0;
  std::vector<float> out(a.values().begin() + r0 * c, a.values().begin() + r1 * c);
  Tensor result = finish("slice_rows", {h, c}, std::move(out), {&a});
  if (result.requires_grad()) {
    auto ad = a.data();
    auto rd = result.data();
    Tape::current()->record("slice_rows", [ad, rd, r0, c, h]() {
      if (rd->grad.empty() || !ad->requires_grad) return;
      auto& ga = ensure_grad(ad);
      for (std::int64_t i = 0; i < h * c; ++i) ga[static_cast<std::size_t>(r0 * c + i)] += rd->grad[static_cast<std::size_t>(i)];
    });
  }
  return result;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) fail_validation("concat_cols: no parts");
  const std::int64_t r = parts[0].rows();
  std::int64_t total = 0;
  for (const Tensor& p : parts) {
    if (p.rows() != r) fail_validation("concat_cols: row mismatch");
    total += p.cols();
  }
  std::vector<float> out(static_cast<std::size_t>(r * total));
  std::int64_t off = 0;
  for (const Tensor& p : parts) {
    const std::int64_t w = p.cols();
    for (std::int64_t i = 0; i < r; ++i)
      for (std::int64_t j = 0; j < w; ++j)
        out[static_cast<std::size_t>(i * total + off + j)] = p.values()[static_cast<std::size_t>(i * w + j)];
    off += w;
  }
  bool needs = false;
  for (const Tensor& p : parts) {
    if (g_current_tape && p.requires_grad()) needs = true;
  }
  check_finite(out, "concat_cols");
  Tensor result = make_op_output({r, total}, std::move(out), needs);
  if (needs) {
    std::vector<std::shared_ptr<TensorData>> datas;
    datas.reserve(parts.size());
    for (const Tensor& p : parts) datas.push_back(p.data());
    auto rd = result.data();
    Tape::current()->record("concat_cols", [datas, rd, r, total]() {
      if (rd->grad.empty()) return;
      std::int64_t off = 0;
      for (const auto& pd : datas) {
        const std::int64_t w = pd->shape[1];
        if (pd->requires_grad) {
          auto& gp = ensure_grad(pd);
          for (std::int64_t i = 0; i < r; ++i)
            for (std::int64_t j = 0; j < w; ++j)
              gp[static_cast<std::size_t>(i * w + j)] +=
                  rd->grad[static_cast<std::size_t>(i * total + off + j)];
        }
        off += w;
      }
    });
  }
  return result;
}

Tensor sum_all(const Tensor& a) {
  double acc = 0.0;
  for (float v : a.values()) acc += v;
  Tensor result = finish("sum_all", {1}, {static_cast<float>(acc)}, {&a});
  if (result.requires_grad()) {
    auto ad = a.data();
    auto rd = result.data();
    Tape::current()->record("sum_all", [ad, rd]() {
      if (rd->grad.empty() || !ad->requires_grad) return;
      auto& ga = ensure_grad(ad);
      for (auto& g : ga) g += rd->grad[0];
    });
  }
  return result;
}

Tensor mean_all(const Tensor& a) {
  double acc = 0.0;
  for (float v : a.values()) acc += v;
  const double n = static_cast<double>(a.values().size());
  Tensor result = finish("mean_all", {1}, {static_cast<float>(acc / n)}, {&a});
  if (result.requires_grad()) {
    auto ad = a.data();
    auto rd = result.data();
    Tape::current()->record("mean_all", [ad, rd, n]() {
      if (rd->grad.empty() || !ad->requires_grad) return;
      auto& ga = ensure_grad(ad);
      const float g = static_cast<float>(rd->grad[0] / n);
      for (auto& v : ga) v += g;
    });
  }
  return result;
}

Tensor row_sums(const Tensor& a) {
  const std::int64_t r = a.rows(), c = a.cols();
  std::vector<float> out(static_cast<std::size_t>(r));
  for (std::int64_t i = 0; i < r; ++i) {
    double acc = 0.0;
    for (std::int64_t j = 0; j < c; ++j) acc += a.values()[static_cast<std::size_t>(i * c + j)];
    out[static_cast<std::size_t>(i)] = static_cast<float>(acc);
  }
  Tensor result = finish("row_sums", {r, 1}, std::move(out), {&a});
  if (result.requires_grad()) {
    auto ad = a.data();
    auto rd = result.data();
    Tape::current()->record("row_sums", [ad, rd, r, c]() {
      if (rd->grad.empty() || !ad->requires_grad) return;
      auto& ga = ensure_grad(ad);
      for (std::int64_t i = 0; i < r; ++i)
        for (std::int64_t j = 0; j < c; ++j)
          ga[static_cast<std::size_t>(i * c + j)] += rd->grad[static_cast<std::size_t>(i)];
    });
  }
  return result;
}

Tensor col_sums(const Tensor& a) {
  const std::int64_t r = a.rows(), c = a.cols();
  std::vector<double> acc(static_cast<std::size_t>(c), 0.0);
  for (std::int64_t i = 0; i < r; ++i)
    for (std::int64_t j = 0; j < c; ++j) acc[static_cast<std::size_t>(j)] += a.values()[static_cast<std::size_t>(i * c + j)];
  std::vector<float> out(static_cast<std::size_t>(c));
  for (std::int64_t j = 0; j < c; ++j) out[static_cast<std::size_t>(j)] = static_cast<float>(acc[static_cast<std::size_t>(j)]);
  Tensor result = finish("col_sums", {1, c}, std::move(out), {&a});
  if (result.requires_grad()) {
    auto ad = a.data();
    auto rd = result.data();
    Tape::current()->record("col_sums", [ad, rd, r, c]() {
      if (rd->grad.empty() || !ad->requires_grad) return;
      auto& ga = ensure_grad(ad);
      for (std::int64_t i = 0; i < r; ++i)
        for (std::int64_t j = 0; j < c; ++j)
          ga[static_cast<std::size_t>(i * c + j)] += rd->grad[static_cast<std::size_t>(j)];
    });
  }
  return result;
}

Tensor mean_rows(const Tensor& a) {
  const float inv = 1.0f / static_cast<float>(a.rows());
  return scale(col_sums(a), inv);
}

Tensor mul_rowwise(const Tensor& a, const Tensor& col) {
  const std::int64_t r = a.rows(), c = a.cols();
  if (col.rows() != r || col.cols() != 1) {
    fail_validation("mul_rowwise: column tensor must be [%lld x 1], got %s", (long long)r,
                    shape_str(col.shape()).c_str());
  }
  std::vector<float> out(a.values().size());
  for (std::int64_t i = 0; i < r; ++i) {
    const float w = col.values()[static_cast<std::size_t>(i)];
    for (std::int64_t j = 0; j < c; ++j)
      out[static_cast<std::size_t>(i * c + j)] = a.values()[static_cast<std::size_t>(i * c + j)] * w;
  }
  Tensor result = finish("mul_rowwise", a.shape(), std::move(out), {&a, &col});
  if (result.requires_grad()) {
    auto ad = a.data(), cd = col.data(), rd = result.data();
    Tape::current()->record("mul_rowwise", [ad, cd, rd, r, c]() {
      if (rd->grad.empty()) return;
      if (ad->requires_grad) {
        auto& ga = ensure_grad(ad);
        for (std::int64_t i = 0; i < r; ++i) {
          const float w = cd->values[static_cast<std::size_t>(i)];
          for (std::int64_t j = 0; j < c; ++j)
            ga[static_cast<std::size_t>(i * c + j)] += rd->grad[static_cast<std::size_t>(i * c + j)] * w;
        }
      }
      if (cd->requires_grad) {
        auto& gc = ensure_grad(cd);
        for (std::int64_t i = 0; i < r; ++i) {
          double acc = 0.0;
          for (std::int64_t j = 0; j < c; ++j)
            acc += static_cast<double>(rd->grad[static_cast<std::size_t>(i * c + j)]) *
                   ad->values[static_cast<std::size_t>(i * c + j)];
          gc[static_cast<std::size_t>(i)] += static_cast<float>(acc);
        }
      }
    });
  }
  return result;
}

namespace {

void softmax_row(const float* x, std::int64_t n, float* out) {
  double mx = x[0];
  for (std::int64_t j = 1; j < n; ++j) mx = std::max(mx, static_cast<double>(x[j]));
  double denom = 0.0;
  for (std::int64_t j = 0; j < n; ++j) denom += std::exp(static_cast<double>(x[j]) - mx);
  for (std::int64_t j = 0; j < n; ++j)
    out[j] = static_cast<float>(std::exp(static_cast<double>(x[j]) - mx) / denom);
}

double row_logsumexp(const float* x, std::int64_t n) {
  double mx = x[0];
  for (std::int64_t j = 1; j < n; ++j) mx = std::max(mx, static_cast<double>(x[j]));
  double denom = 0.0;
  for (std::int64_t j = 0; j < n; ++j) denom += std::exp(static_cast<double>(x[j]) - mx);
  return mx + std::log(denom);
}

}  // namespace

Tensor softmax_rows(const Tensor& a) {
  const std::int64_t r = a.rows(), c = a.cols();
  std::vector<float> out(a.values().size());
  for (std::int64_t i = 0; i < r; ++i) softmax_row(a.values().data() + i * c, c, out.data() + i * c);
  Tensor result = finish("softmax_rows", a.shape(), std::move(out), {&a});
  if (result.requires_grad()) {
    auto ad = a.data();
    auto rd = result.data();
    Tape::current()->record("softmax_rows", [ad, rd, r, c]() {
      if (rd->grad.empty() || !ad->requires_grad) return;
      auto& ga = ensure_grad(ad);
      for (std::int64_t i = 0; i < r; ++i) {
        const float* y = rd->values.data() + i * c;
        const float* g = rd->grad.data() + i * c;
        double dot = 0.0;
        for (std::int64_t j = 0; j < c; ++j) dot += static_cast<double>(g[j]) * y[j];
        for (std::int64_t j = 0; j < c; ++j)
          ga[static_cast<std::size_t>(i * c + j)] += static_cast<float>(y[j] * (g[j] - dot));
      }
    });
  }
  return result;
}

Tensor masked_softmax_rows(const Tensor& a, const std::vector<std::uint8_t>& mask) {
  const std::int64_t r = a.rows(), c = a.cols();
  if (static_cast<std::int64_t>(mask.size()) != r * c) {
    fail_validation("masked_softmax_rows: mask size %zu != %lld", mask.size(), (long long)(r * c));
  }
  std::vector<float> out(a.values().size(), 0.0f);
  for (std::int64_t i = 0; i < r; ++i) {
    const float* x = a.values().data() + i * c;
    const std::uint8_t* m = mask.data() + i * c;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::int64_t j = 0; j < c; ++j)
      if (m[j]) mx = std::max(mx, static_cast<double>(x[j]));
    if (!std::isfinite(mx)) continue;  // fully masked row stays zero
    double denom = 0.0;
    for (std::int64_t j = 0; j < c; ++j)
      if (m[j]) denom += std::exp(static_cast<double>(x[j]) - mx);
    for (std::int64_t j = 0; j < c; ++j)
      if (m[j])
        out[static_cast<std::size_t>(i * c + j)] =
            static_cast<float>(std::exp(static_cast<double>(x[j]) - mx) / denom);
  }
  Tensor result = finish("masked_softmax_rows", a.shape(), std::move(out), {&a});
  if (result.requires_grad()) {
    auto ad = a.data();
    auto rd = result.data();
    auto mask_copy = std::make_shared<std::vector<std::uint8_t>>(mask);
    Tape::current()->record("masked_softmax_rows", [ad, rd, mask_copy, r, c]() {
      if (rd->grad.empty() || !ad->requires_grad) return;
      auto& ga = ensure_grad(ad);
      const auto& m = *mask_copy;
      for (std::int64_t i = 0; i < r; ++i) {
        const float* y = rd->values.data() + i * c;
        const float* g = rd->grad.data() + i * c;
        double dot = 0.0;
        for (std::int64_t j = 0; j < c; ++j)
          if (m[static_cast<std::size_t>(i * c + j)]) dot += static_cast<double>(g[j]) * y[j];
        for (std::int64_t j = 0; j < c; ++j)
          if (m[static_cast<std::size_t>(i * c + j)])
            ga[static_cast<std::size_t>(i * c + j)] += static_cast<float>(y[j] * (g[j] - dot));
      }
    });
  }
  return result;
}

Tensor rms_norm(const Tensor& x, const Tensor& gain, float eps) {
  if (eps <= 0.0f) fail_validation("rms_norm: eps must be > 0");
  const std::int64_t r = x.rows(), d = x.cols();
  if (gain.numel() != d) {
    fail_validation("rms_norm: gain has %lld values, expected %lld", (long long)gain.numel(),
                    (long long)d);
  }
  std::vector<float> out(x.values().size());
  std::vector<float> inv_rms(static_cast<std::size_t>(r));
  for (std::int64_t i = 0; i < r; ++i) {
    const float* xi = x.values().data() + i * d;
    double ms = 0.0;
    for (std::int64_t j = 0; j < d; ++j) ms += static_cast<double>(xi[j]) * xi[j];
    ms = ms / static_cast<double>(d) + eps;
    const double s = 1.0 / std::sqrt(ms);
    inv_rms[static_cast<std::size_t>(i)] = static_cast<float>(s);
    for (std::int64_t j = 0; j < d; ++j)
      out[static_cast<std::size_t>(i * d + j)] =
          static_cast<float>(xi[j] * s * gain.values()[static_cast<std::size_t>(j)]);
  }
  Tensor result = finish("rms_norm", x.shape(), std::move(out), {&x, &gain});
  if (result.requires_grad()) {
    auto xd = x.data(), gd = gain.data(), rd = result.data();
    auto inv = std::make_shared<std::vector<float>>(std::move(inv_rms));
    Tape::current()->record("rms_norm", [xd, gd, rd, inv, r, d]() {
      if (rd->grad.empty()) return;
      for (std::int64_t i = 0; i < r; ++i) {
        const float* xi = xd->values.data() + i * d;
        const float* gi = rd->grad.data() + i * d;
        const double s = (*inv)[static_cast<std::size_t>(i)];
        if (xd->requires_grad) {
          auto& gx = ensure_grad(xd);
          double proj = 0.0;  // sum_k g_ik * x_ik * gain_k
          for (std::int64_t j = 0; j < d; ++j)
            proj += static_cast<double>(gi[j]) * xi[j] * gd->values[static_cast<std::size_t>(j)];
          const double s3_over_d = s * s * s / static_cast<double>(d);
          for (std::int64_t j = 0; j < d; ++j) {
            gx[static_cast<std::size_t>(i * d + j)] += static_cast<float>(
                s * gd->values[static_cast<std::size_t>(j)] * gi[j] - xi[j] * s3_over_d * proj);
          }
        }
        if (gd->requires_grad) {
          auto& gg = ensure_grad(gd);
          for (std::int64_t j = 0; j < d; ++j)
            gg[static_cast<std::size_t>(j)] += static_cast<float>(static_cast<double>(gi[j]) * xi[j] * s);
        }
      }
    });
  }
  return result;
}

Tensor embedding(const Tensor& table, const std::vector<std::int32_t>& ids) {
  const std::int64_t v = table.rows(), d = table.cols();
  const std::int64_t n = static_cast<std::int64_t>(ids.size());
  std::vector<float> out(static_cast<std::size_t>(n * d));
  for (std::int64_t i = 0; i < n; ++i) {
    if (ids[static_cast<std::size_t>(i)] < 0 || ids[static_cast<std::size_t>(i)] >= v) {
      fail_validation("embedding: id %d out of range [0, %lld)", ids[static_cast<std::size_t>(i)],
                      (long long)v);
    }
    const float* row = table.values().data() + static_cast<std::int64_t>(ids[static_cast<std::size_t>(i)]) * d;
    std::copy(row, row + d, out.data() + i * d);
  }
  Tensor result = finish("embedding", {n, d}, std::move(out), {&table});
  if (result.requires_grad()) {
    auto td = table.data();
    auto rd = result.data();
    auto ids_copy = std::make_shared<std::vector<std::int32_t>>(ids);
    Tape::current()->record("embedding", [td, rd, ids_copy, d]() {
      if (rd->grad.empty() || !td->requires_grad) return;
      auto& gt = ensure_grad(td);
      for (std::size_t i = 0; i < ids_copy->size(); ++i) {
        const std::int64_t row = (*ids_copy)[i];
        for (std::int64_t j = 0; j < d; ++j)
          gt[static_cast<std::size_t>(row * d + j)] += rd->grad[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)];
      }
    });
  }
  return result;
}

Tensor gather_rows(const Tensor& a, const std::vector<std::int64_t>& idx) {
  const std::int64_t r = a.rows(), c = a.cols();
  const std::int64_t n = static_cast<std::int64_t>(idx.size());
  std::vector<float> out(static_cast<std::size_t>(n * c));
  for (std::int64_t i = 0; i < n; ++i) {
    if (idx[static_cast<std::size_t>(i)] < 0 || idx[static_cast<std::size_t>(i)] >= r) {
      fail_validation("gather_rows: index %lld out of range [0, %lld)",
                      (long long)idx[static_cast<std::size_t>(i)], (long long)r);
    }
    const float* row = a.values().data() + idx[static_cast<std::size_t>(i)] * c;
    std::copy(row, row + c, out.data() + i * c);
  }
  Tensor result = finish("gather_rows", {n, c}, std::move(out), {&a});
  if (result.requires_grad()) {
    auto ad = a.data();
    auto rd = result.data();
    auto idx_copy = std::make_shared<std::vector<std::int64_t>>(idx);
    Tape::current()->record("gather_rows", [ad, rd, idx_copy, c]() {
      if (rd->grad.empty() || !ad->requires_grad) return;
      auto& ga = ensure_grad(ad);
      for (std::size_t i = 0; i < idx_copy->size(); ++i) {
        const std::int64_t row = (*idx_copy)[i];
        for (std::int64_t j = 0; j < c; ++j)
          ga[static_cast<std::size_t>(row * c + j)] += rd->grad[i * static_cast<std::size_t>(c) + static_cast<std::size_t>(j)];
      }
    });
  }
  return result;
}

Tensor scatter_add_rows(std::int64_t out_rows, const Tensor& contrib,
                        const std::vector<std::int64_t>& idx) {
  const std::int64_t n = contrib.rows(), c = contrib.cols();
  if (static_cast<std::int64_t>(idx.size()) != n) {
    fail_validation("scatter_add_rows: %zu indices for %lld rows", idx.size(), (long long)n);
  }
  std::vector<float> out(static_cast<std::size_t>(out_rows * c), 0.0f);
  for (std::int64_t i = 0; i < n; ++i) {
    if (idx[static_cast<std::size_t>(i)] < 0 || idx[static_cast<std::size_t>(i)] >= out_rows) {
      fail_validation("scatter_add_rows: index out of range");
    }
    float* row = out.data() + idx[static_cast<std::size_t>(i)] * c;
    const float* src = contrib.values().data() + i * c;
    for (std::int64_t j = 0; j < c; ++j) row[j] += src[j];
  }
  Tensor result = finish("scatter_add_rows", {out_rows, c}, std::move(out), {&contrib});
  if (result.requires_grad()) {
    auto cd = contrib.data();
    auto rd = result.data();
    auto idx_copy = std::make_shared<std::vector<std::int64_t>>(idx);
    Tape::current()->record("scatter_add_rows", [cd, rd, idx_copy, c]() {
      if (rd->grad.empty() || !cd->requires_grad) return;
      auto& gc = ensure_grad(cd);
      for (std::size_t i = 0; i < idx_copy->size(); ++i) {
        const float* g = rd->grad.data() + (*idx_copy)[i] * c;
        for (std::int64_t j = 0; j < c; ++j)
          gc[i * static_cast<std::size_t>(c) + static_cast<std::size_t>(j)] += g[j];
      }
    });
  }
  return result;
}

Tensor gather_cols_per_row(const Tensor& a, const std::vector<std::int64_t>& idx, std::int64_t k) {
  const std::int64_t r = a.rows(), c = a.cols();
  if (static_cast<std::int64_t>(idx.size()) != r * k) {
    fail_validation("gather_cols_per_row: need %lld indices, got %zu", (long long)(r * k), idx.size());
  }
  std::vector<float> out(static_cast<std::size_t>(r * k));
  for (std::int64_t i = 0; i < r; ++i)
    for (std::int64_t j = 0; j < k; ++j) {
      const std::int64_t col = idx[static_cast<std::size_t>(i * k + j)];
      if (col < 0 || col >= c) fail_validation("gather_cols_per_row: column out of range");
      out[static_cast<std::size_t>(i * k + j)] = a.values()[static_cast<std::size_t>(i * c + col)];
    }
  Tensor result = finish("gather_cols_per_row", {r, k}, std::move(out), {&a});
  if (result.requires_grad()) {
    auto ad = a.data();
    auto rd = result.data();
    auto idx_copy = std::make_shared<std::vector<std::int64_t>>(idx);
    Tape::current()->record("gather_cols_per_row", [ad, rd, idx_copy, r, c, k]() {
      if (rd->grad.empty() || !ad->requires_grad) return;
      auto& ga = ensure_grad(ad);
      for (std::int64_t i = 0; i < r; ++i)
        for (std::int64_t j = 0; j < k; ++j)
          ga[static_cast<std::size_t>(i * c + (*idx_copy)[static_cast<std::size_t>(i * k + j)])] +=
              rd->grad[static_cast<std::size_t>(i * k + j)];
    });
  }
  return result;
}

Tensor gather_elems_col(const Tensor& a,
                        const std::vector<std::pair<std::int64_t, std::int64_t>>& coords) {
  const std::int64_t r = a.rows(), c = a.cols();
  const std::int64_t n = static_cast<std::int64_t>(coords.size());
  std::vector<float> out(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& [row, col] = coords[static_cast<std::size_t>(i)];
    if (row < 0 || row >= r || col < 0 || col >= c) fail_validation("gather_elems_col: out of range");
    out[static_cast<std::size_t>(i)] = a.values()[static_cast<std::size_t>(row * c + col)];
  }
  Tensor result = finish("gather_elems_col", {n, 1}, std::move(out), {&a});
  if (result.requires_grad()) {
    auto ad = a.data();
    auto rd = result.data();
    auto coords_copy = std::make_shared<std::vector<std::pair<std::int64_t, std::int64_t>>>(coords);
    Tape::current()->record("gather_elems_col", [ad, rd, coords_copy, c]() {
      if (rd->grad.empty() || !ad->requires_grad) return;
      auto& ga = ensure_grad(ad);
      for (std::size_t i = 0; i < coords_copy->size(); ++i) {
        const auto& [row, col] = (*coords_copy)[i];
        ga[static_cast<std::size_t>(row * c + col)] += rd->grad[i];
      }
    });
  }
  return result;
}

Tensor cross_entropy_mean(const Tensor& logits, const std::vector<std::int32_t>& targets) {
  const std::int64_t t = logits.rows(), v = logits.cols();
  if (static_cast<std::int64_t>(targets.size()) != t) {
    fail_validation("cross_entropy_mean: %zu targets for %lld rows", targets.size(), (long long)t);
  }
  std::int64_t supervised = 0;
  double acc = 0.0;
  for (std::int64_t i = 0; i < t; ++i) {
    const std::int32_t y = targets[static_cast<std::size_t>(i)];
    if (y < 0) continue;
    if (y >= v) fail_validation("cross_entropy_mean: target %d out of range", y);
    const float* row = logits.values().data() + i * v;
    acc += row_logsumexp(row, v) - static_cast<double>(row[y]);
    ++supervised;
  }
  if (supervised == 0) fail_validation("cross_entropy_mean: no supervised positions (all-zero mask)");
  Tensor result = finish("cross_entropy_mean", {1},
                         {static_cast<float>(acc / static_cast<double>(supervised))}, {&logits});
  if (result.requires_grad()) {
    auto ld = logits.data();
    auto rd = result.data();
    auto targets_copy = std::make_shared<std::vector<std::int32_t>>(targets);
    Tape::current()->record("cross_entropy_mean", [ld, rd, targets_copy, t, v, supervised]() {
      if (rd->grad.empty() || !ld->requires_grad) return;
      auto& gl = ensure_grad(ld);
      const float g = rd->grad[0] / static_cast<float>(supervised);
      std::vector<float> probs(static_cast<std::size_t>(v));
      for (std::int64_t i = 0; i < t; ++i) {
        const std::int32_t y = (*targets_copy)[static_cast<std::size_t>(i)];
        if (y < 0) continue;
        softmax_row(ld->values.data() + i * v, v, probs.data());
        for (std::int64_t j = 0; j < v; ++j) {
          const float delta = (j == y) ? 1.0f : 0.0f;
          gl[static_cast<std::size_t>(i * v + j)] += g * (probs[static_cast<std::size_t>(j)] - delta);
        }
      }
    });
  }
  return result;
}

Tensor token_log_probs(const Tensor& logits, const std::vector<std::int32_t>& targets) {
  const std::int64_t t = logits.rows(), v = logits.cols();
  if (static_cast<std::int64_t>(targets.size()) != t) {
    fail_validation("token_log_probs: %zu targets for %lld rows", targets.size(), (long long)t);
  }
  std::vector<float> out(static_cast<std::size_t>(t));
  for (std::int64_t i = 0; i < t; ++i) {
    const std::int32_t y = targets[static_cast<std::size_t>(i)];
    if (y < 0 || y >= v) fail_validation("token_log_probs: target %d out of range", y);
    const float* row = logits.values().data() + i * v;
    out[static_cast<std::size_t>(i)] = static_cast<float>(static_cast<double>(row[y]) - row_logsumexp(row, v));
  }
  Tensor result = finish("token_log_probs", {t, 1}, std::move(out), {&logits});
  if (result.requires_grad()) {
    auto ld = logits.data();
    auto rd = result.data();
    auto targets_copy = std::make_shared<std::vector<std::int32_t>>(targets);
    Tape::current()->record("token_log_probs", [ld, rd, targets_copy, t, v]() {
      if (rd->grad.empty() || !ld->requires_grad) return;
      auto& gl = ensure_grad(ld);
      std::vector<float> probs(static_cast<std::size_t>(v));
      for (std::int64_t i = 0; i < t; ++i) {
        const float g = rd->grad[static_cast<std::size_t>(i)];
        if (g == 0.0f) continue;
        const std::int32_t y = (*targets_copy)[static_cast<std::size_t>(i)];
        softmax_row(ld->values.data() + i * v, v, probs.data());
        for (std::int64_t j = 0; j < v; ++j) {
          const float delta = (j == y) ? 1.0f : 0.0f;
          gl[static_cast<std::size_t>(i * v + j)] += g * (delta - probs[static_cast<std::size_t>(j)]);
        }
      }
    });
  }
  return result;
}

Tensor moe_aux_loss(const Tensor& probs, const std::vector<std::int64_t>& counts, std::int64_t k) {
  const std::int64_t b = probs.rows(), n = probs.cols();
  if (b == 0) fail_validation("moe_aux_loss: empty batch");
  if (static_cast<std::int64_t>(counts.size()) != n) {
    fail_validation("moe_aux_loss: %zu counts for %lld experts", counts.size(), (long long)n);
  }
  const double coef = static_cast<double>(n) / (static_cast<double>(b) * b * static_cast<double>(k));
  double acc = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    double p = 0.0;
    for (std::int64_t j = 0; j < b; ++j) p += probs.values()[static_cast<std::size_t>(j * n + i)];
    acc += p * static_cast<double>(counts[static_cast<std::size_t>(i)]);
  }
  Tensor result = finish("moe_aux_loss", {1}, {static_cast<float>(coef * acc)}, {&probs});
  if (result.requires_grad()) {
    auto pd = probs.data();
    auto rd = result.data();
    auto counts_copy = std::make_shared<std::vector<std::int64_t>>(counts);
    Tape::current()->record("moe_aux_loss", [pd, rd, counts_copy, b, n, coef]() {
      if (rd->grad.empty() || !pd->requires_grad) return;
      auto& gp = ensure_grad(pd);
      const double g = rd->grad[0];
      for (std::int64_t j = 0; j < b; ++j)
        for (std::int64_t i = 0; i < n; ++i)
          gp[static_cast<std::size_t>(j * n + i)] +=
              static_cast<float>(g * coef * static_cast<double>((*counts_copy)[static_cast<std::size_t>(i)]));
    });
  }
  return result;
}

Tensor z_loss(const Tensor& logits) {
  const std::int64_t b = logits.rows(), n = logits.cols();
  if (b == 0) fail_validation("z_loss: empty batch");
  double acc = 0.0;
  std::vector<float> lse(static_cast<std::size_t>(b));
  for (std::int64_t j = 0; j < b; ++j) {
    const double l = row_logsumexp(logits.values().data() + j * n, n);
    lse[static_cast<std::size_t>(j)] = static_cast<float>(l);
    acc += l * l;
  }
  Tensor result = finish("z_loss", {1}, {static_cast<float>(acc / static_cast<double>(b))}, {&logits});
  if (result.requires_grad()) {
    auto ld = logits.data();
    auto rd = result.data();
    auto lse_copy = std::make_shared<std::vector<float>>(std::move(lse));
    Tape::current()->record("z_loss", [ld, rd, lse_copy, b, n]() {
      if (rd->grad.empty() || !ld->requires_grad) return;
      auto& gl = ensure_grad(ld);
      const double g = rd->grad[0];
      std::vector<float> probs(static_cast<std::size_t>(n));
      for (std::int64_t j = 0; j < b; ++j) {
        softmax_row(ld->values.data() + j * n, n, probs.data());
        const double c = g * 2.0 * (*lse_copy)[static_cast<std::size_t>(j)] / static_cast<double>(b);
        for (std::int64_t i = 0; i < n; ++i)
          gl[static_cast<std::size_t>(j * n + i)] += static_cast<float>(c * probs[static_cast<std::size_t>(i)]);
      }
    });
  }
  return result;
}

Tensor stop_grad(const Tensor& a) {
  return make_op_output(a.shape(), a.values(), false);
}

void top_k(const float* x, std::int64_t n, std::int64_t k, std::int64_t* out_idx, float* out_val) {
  if (k < 1 || k > n) {
    fail_validation("top_k: k=%lld out of range [1, %lld]", (long long)k, (long long)n);
  }
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), std::int64_t{0});
  std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
    if (x[a] != x[b]) return x[a] > x[b];
    return a < b;  // ties: lowest index first
  });
  for (std::int64_t i = 0; i < k; ++i) {
    out_idx[i] = order[static_cast<std::size_t>(i)];
    out_val[i] = x[order[static_cast<std::size_t>(i)]];
  }
}

}  // namespace ops

void AdamW::step(const std::vector<Tensor>& params) {
  if (slots_.empty()) {
    slots_.resize(params.size());
    keys_.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      keys_.push_back(params[i].data().get());
      slots_[i].m.assign(params[i].values().size(), 0.0);
      slots_[i].v.assign(params[i].values().size(), 0.0);
    }
  }
  if (params.size() != slots_.size()) fail_validation("adamw: parameter list changed size");
  ++step_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (params[p].data().get() != keys_[p]) fail_validation("adamw: parameter identity changed");
    auto& data = *params[p].data();
    auto& slot = slots_[p];
    const bool has_grad = !data.grad.empty();
    for (std::size_t i = 0; i < data.values.size(); ++i) {
      const double g = has_grad ? static_cast<double>(data.grad[i]) : 0.0;
      slot.m[i] = b1 * slot.m[i] + (1.0 - b1) * g;
      slot.v[i] = b2 * slot.v[i] + (1.0 - b2) * g * g;
      const double mhat = slot.m[i] / bc1;
      const double vhat = slot.v[i] / bc2;
      const double theta = static_cast<double>(data.values[i]);
      data.values[i] = static_cast<float>(
          theta - config_.lr * (mhat / (std::sqrt(vhat) + config_.eps) + config_.weight_decay * theta));
    }
  }
}

}  // namespace compasslab
