// Copyright 2026 the compass-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "compasslab/gradcheck.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "compasslab/prng.hpp"
#include "compasslab/tensor.hpp"

namespace compasslab {

namespace {

// The oracle side never touches compasslab ops: each case carries a direct
// double-precision implementation of the same mathematical function, and the
// central difference is taken on that. Leaves are perturbed at their float32
// values, so oracle and implementation evaluate the same function.

using DVec = std::vector<double>;

struct Case {
  std::vector<Tensor> leaves;  // float32 leaves for the analytic path
  std::function<Tensor(const std::vector<Tensor>&)> loss;
  std::function<double(const std::vector<DVec>&)> ref_loss;
};

struct OpSpec {
  const char* name;
  std::function<Case(Prng&)> make;
};

std::vector<float> rand_values(Prng& rng, std::size_t n, float lo, float hi) {
  std::vector<float> v(n);
  for (auto& x : v) x = lo + (hi - lo) * rng.next_float();
  return v;
}

DVec widen(const std::vector<float>& v) { return DVec(v.begin(), v.end()); }

double ref_dot(const DVec& a, const DVec& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

DVec ref_matmul(const DVec& a, const DVec& b, std::int64_t m, std::int64_t k, std::int64_t n) {
  DVec c(static_cast<std::size_t>(m * n), 0.0);
  for (std::int64_t i = 0; i < m; ++i)
    for (std::int64_t l = 0; l < k; ++l)
      for (std::int64_t j = 0; j < n; ++j)
        c[static_cast<std::size_t>(i * n + j)] +=
            a[static_cast<std::size_t>(i * k + l)] * b[static_cast<std::size_t>(l * n + j)];
  return c;
}

DVec ref_softmax_rows(const DVec& x, std::int64_t r, std::int64_t c) {
  DVec y(x.size());
  for (std::int64_t i = 0; i < r; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::int64_t j = 0; j < c; ++j) mx = std::max(mx, x[static_cast<std::size_t>(i * c + j)]);
    double denom = 0.0;
    for (std::int64_t j = 0; j < c; ++j) denom += std::exp(x[static_cast<std::size_t>(i * c + j)] - mx);
    for (std::int64_t j = 0; j < c; ++j)
      y[static_cast<std::size_t>(i * c + j)] = std::exp(x[static_cast<std::size_t>(i * c + j)] - mx) / denom;
  }
  return y;
}

double ref_logsumexp(const DVec& x, std::size_t begin, std::size_t n) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, x[begin + j]);
  double denom = 0.0;
  for (std::size_t j = 0; j < n; ++j) denom += std::exp(x[begin + j] - mx);
  return mx + std::log(denom);
}

double ref_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<OpSpec> build_registry() {
  std::vector<OpSpec> specs;
  auto add_spec = [&](const char* name, std::function<Case(Prng&)> make) {
    specs.push_back(OpSpec{name, std::move(make)});
  };

  // Elementwise binary ops on two [3x4] leaves with a weighted readout.
  auto binary_case = [](Prng& rng, Tensor (*op)(const Tensor&, const Tensor&),
                        double (*ref)(double, double)) {
    Case c;
    c.leaves = {Tensor::param({3, 4}, rand_values(rng, 12, -1.5f, 1.5f)),
                Tensor::param({3, 4}, rand_values(rng, 12, -1.5f, 1.5f))};
    const auto w = rand_values(rng, 12, -1.0f, 1.0f);
    Tensor wt = Tensor::from_values({3, 4}, w);
    c.loss = [op, wt](const std::vector<Tensor>& l) {
      return ops::sum_all(ops::mul(op(l[0], l[1]), wt));
    };
    const DVec wd = widen(w);
    c.ref_loss = [ref, wd](const std::vector<DVec>& l) {
      double acc = 0.0;
      for (std::size_t i = 0; i < wd.size(); ++i) acc += ref(l[0][i], l[1][i]) * wd[i];
      return acc;
    };
    return c;
  };
  add_spec("add", [binary_case](Prng& rng) {
    return binary_case(rng, &ops::add, [](double a, double b) { return a + b; });
  });
  add_spec("sub", [binary_case](Prng& rng) {
    return binary_case(rng, &ops::sub, [](double a, double b) { return a - b; });
  });
  add_spec("mul", [binary_case](Prng& rng) {
    return binary_case(rng, &ops::mul, [](double a, double b) { return a * b; });
  });

  // Elementwise unary ops on a [3x4] leaf with a weighted readout.
  auto unary_case = [](Prng& rng, std::function<Tensor(const Tensor&)> op,
                       std::function<double(double)> ref, float lo, float hi) {
    Case c;
    c.leaves = {Tensor::param({3, 4}, rand_values(rng, 12, lo, hi))};
    const auto w = rand_values(rng, 12, -1.0f, 1.0f);
    Tensor wt = Tensor::from_values({3, 4}, w);
    c.loss = [op, wt](const std::vector<Tensor>& l) { return ops::sum_all(ops::mul(op(l[0]), wt)); };
    const DVec wd = widen(w);
    c.ref_loss = [ref, wd](const std::vector<DVec>& l) {
      double acc = 0.0;
      for (std::size_t i = 0; i < wd.size(); ++i) acc += ref(l[0][i]) * wd[i];
      return acc;
    };
    return c;
  };
  add_spec("scale", [unary_case](Prng& rng) {
    const float k = -0.5f + 2.0f * rng.next_float();
    return unary_case(
        rng, [k](const Tensor& t) { return ops::scale(t, k); },
        [k](double x) { return x * static_cast<double>(k); }, -1.5f, 1.5f);
  });
  add_spec("add_scalar", [unary_case](Prng& rng) {
    const float k = -1.0f + 2.0f * rng.next_float();
    return unary_case(
        rng, [k](const Tensor& t) { return ops::add_scalar(t, k); },
        [k](double x) { return x + static_cast<double>(k); }, -1.5f, 1.5f);
  });
  add_spec("silu", [unary_case](Prng& rng) {
    return unary_case(
        rng, [](const Tensor& t) { return ops::silu(t); },
        [](double x) { return x * ref_sigmoid(x); }, -2.0f, 2.0f);
  });
  add_spec("sigmoid", [unary_case](Prng& rng) {
    return unary_case(
        rng, [](const Tensor& t) { return ops::sigmoid(t); },
        [](double x) { return ref_sigmoid(x); }, -2.0f, 2.0f);
  });
  add_spec("logsigmoid", [unary_case](Prng& rng) {
    return unary_case(
        rng, [](const Tensor& t) { return ops::logsigmoid(t); },
        [](double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); },
        -2.0f, 2.0f);
  });
  add_spec("log", [unary_case](Prng& rng) {
    return unary_case(
        rng, [](const Tensor& t) { return ops::log(t); }, [](double x) { return std::log(x); },
        0.4f, 2.5f);
  });
  add_spec("recip", [unary_case](Prng& rng) {
    return unary_case(
        rng, [](const Tensor& t) { return ops::recip(t); }, [](double x) { return 1.0 / x; },
        0.4f, 2.5f);
  });

  add_spec("matmul", [](Prng& rng) {
    Case c;
    c.leaves = {Tensor::param({3, 4}, rand_values(rng, 12, -1.5f, 1.5f)),
                Tensor::param({4, 2}, rand_values(rng, 8, -1.5f, 1.5f))};
    const auto w = rand_values(rng, 6, -1.0f, 1.0f);
    Tensor wt = Tensor::from_values({3, 2}, w);
    c.loss = [wt](const std::vector<Tensor>& l) {
      return ops::sum_all(ops::mul(ops::matmul(l[0], l[1]), wt));
    };
    const DVec wd = widen(w);
    c.ref_loss = [wd](const std::vector<DVec>& l) {
      return ref_dot(ref_matmul(l[0], l[1], 3, 4, 2), wd);
    };
    return c;
  });

  add_spec("transpose", [](Prng& rng) {
    Case c;
    c.leaves = {Tensor::param({3, 5}, rand_values(rng, 15, -1.5f, 1.5f))};
    const auto w = rand_values(rng, 15, -1.0f, 1.0f);
    Tensor wt = Tensor::from_values({5, 3}, w);
    c.loss = [wt](const std::vector<Tensor>& l) {
      return ops::sum_all(ops::mul(ops::transpose(l[0]), wt));
    };
    const DVec wd = widen(w);
    c.ref_loss = [wd](const std::vector<DVec>& l) {
      double acc = 0.0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 5; ++j) acc += l[0][static_cast<std::size_t>(i * 5 + j)] * wd[static_cast<std::size_t>(j * 3 + i)];
      return acc;
    };
    return c;
  });

  add_spec("slice_cols", [](Prng& rng) {
    Case c;
    c.leaves = {Tensor::param({3, 6}, rand_values(rng, 18, -1.5f, 1.5f))};
    const auto w = rand_values(rng, 9, -1.0f, 1.0f);
    Tensor wt = Tensor::from_values({3, 3}, w);
    c.loss = [wt](const std::vector<Tensor>& l) {
      return ops::sum_all(ops::mul(ops::slice_cols(l[0], 1, 4), wt));
    };
    const DVec wd = widen(w);
    c.ref_loss = [wd](const std::vector<DVec>& l) {
      double acc = 0.0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) acc += l[0][static_cast<std::size_t>(i * 6 + 1 + j)] * wd[static_cast<std::size_t>(i * 3 + j)];
      return acc;
    };
    return c;
  });

  add_spec("slice_rows", [](Prng& rng) {
    Case c;
    c.leaves = {Tensor::param({5, 3}, rand_values(rng, 15, -1.5f, 1.5f))};
    const auto w = rand_values(rng, 6, -1.0f, 1.0f);
    Tensor wt = Tensor::from_values({2, 3}, w);
    c.loss = [wt](const std::vector<Tensor>& l) {
      return ops::sum_all(ops::mul(ops::slice_rows(l[0], 1, 3), wt));
    };
    const DVec wd = widen(w);
    c.ref_loss = [wd](const std::vector<DVec>& l) {
      double acc = 0.0;
      for (int i = 0; i < 6; ++i) acc += l[0][static_cast<std::size_t>(3 + i)] * wd[static_cast<std::size_t>(i)];
      return acc;
    };
    return c;
  });

  add_spec("concat_cols", [](Prng& rng) {
    Case c;
    c.leaves = {Tensor::param({3, 2}, rand_values(rng, 6, -1.5f, 1.5f)),
                Tensor::param({3, 3}, rand_values(rng, 9, -1.5f, 1.5f))};
    const auto w = rand_values(rng, 15, -1.0f, 1.0f);
    Tensor wt = Tensor::from_values({3, 5}, w);
    c.loss = [wt](const std::vector<Tensor>& l) {
      return ops::sum_all(ops::mul(ops::concat_cols({l[0], l[1]}), wt));
    };
    const DVec wd = widen(w);
    c.ref_loss = [wd](const std::vector<DVec>& l) {
      double acc = 0.0;
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 2; ++j) acc += l[0][static_cast<std::size_t>(i * 2 + j)] * wd[static_cast<std::size_t>(i * 5 + j)];
        for (int j = 0; j < 3; ++j) acc += l[1][static_cast<std::size_t>(i * 3 + j)] * wd[static_cast<std::size_t>(i * 5 + 2 + j)];
      }
      return acc;
    };
    return c;
  });

  add_spec("sum_all", [](Prng& rng) {
    Case c;
    c.leaves = {Tensor::param({3, 4}, rand_values(rng, 12, -1.5f, 1.5f))};
    c.loss = [](const std::vector<Tensor>& l) { return ops::sum_all(l[0]); };
    c.ref_loss = [](const std::vector<DVec>& l) {
      double acc = 0.0;
      for (double v : l[0]) acc += v;
      return acc;
    };
    return c;
  });

  add_spec("mean_all", [](Prng& rng) {
    Case c;
    c.leaves = {Tensor::param({3, 4}, rand_values(rng, 12, -1.5f, 1.5f))};
    c.loss = [](const std::vector<Tensor>& l) { return ops::mean_all(l[0]); };
    c.ref_loss = [](const std::vector<DVec>& l) {
      double acc = 0.0;
      for (double v : l[0]) acc += v;
      return acc / static_cast<double>(l[0].size());
    };
    return c;
  });

  auto reduction_case = [](Prng& rng, bool by_row, bool mean) {
    Case c;
    c.leaves = {Tensor::param({4, 3}, rand_values(rng, 12, -1.5f, 1.5f))};
    const std::size_t out_n = by_row ? 4 : 3;
    const auto w = rand_values(rng, out_n, -1.0f, 1.0f);
    Tensor wt = Tensor::from_values(by_row ? Shape{4, 1} : Shape{1, 3}, w);
    c.loss = [wt, by_row, mean](const std::vector<Tensor>& l) {
      Tensor red = by_row ? ops::row_sums(l[0]) : (mean ? ops::mean_rows(l[0]) : ops::col_sums(l[0]));
      return ops::sum_all(ops::mul(red, wt));
    };
    const DVec wd = widen(w);
    c.ref_loss = [wd, by_row, mean](const std::vector<DVec>& l) {
      double acc = 0.0;
      if (by_row) {
        for (int i = 0; i < 4; ++i) {
          double s = 0.0;
          for (int j = 0; j < 3; ++j) s += l[0][static_cast<std::size_t>(i * 3 + j)];
          acc += s * wd[static_cast<std::size_t>(i)];
        }
      } else {
        for (int j = 0; j < 3; ++j) {
          double s = 0.0;
          for (int i = 0; i < 4; ++i) s += l[0][static_cast<std::size_t>(i * 3 + j)];
          if (mean) s /= 4.0;
          acc += s * wd[static_cast<std::size_t>(j)];
        }
      }
      return acc;
    };
    return c;
  };
  add_spec("row_sums", [reduction_case](Prng& rng) { return reduction_case(rng, true, false); });
  add_spec("col_sums", [reduction_case](Prng& rng) { return reduction_case(rng, false, false); });
  add_spec("mean_rows", [reduction_case](Prng& rng) { return reduction_case(rng, false, true); });

  add_spec("mul_rowwise", [](Prng& rng) {
    Case c;
    c.leaves = {Tensor::param({3, 4}, rand_values(rng, 12, -1.5f, 1.5f)),
                Tensor::param({3, 1}, rand_values(rng, 3, -1.5f, 1.5f))};
    const auto w = rand_values(rng, 12, -1.0f, 1.0f);
    Tensor wt = Tensor::from_values({3, 4}, w);
    c.loss = [wt](const std::vector<Tensor>& l) {
      return ops::sum_all(ops::mul(ops::mul_rowwise(l[0], l[1]), wt));
    };
    const DVec wd = widen(w);
    c.ref_loss = [wd](const std::vector<DVec>& l) {
      double acc = 0.0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j)
          acc += l[0][static_cast<std::size_t>(i * 4 + j)] * l[1][static_cast<std::size_t>(i)] * wd[static_cast<std::size_t>(i * 4 + j)];
      return acc;
    };
    return c;
  });

  add_spec("softmax_rows", [](Prng& rng) {
    Case c;
    c.leaves = {Tensor::param({3, 5}, rand_values(rng, 15, -2.0f, 2.0f))};
    const auto w = rand_values(rng, 15, -1.0f, 1.0f);
    Tensor wt = Tensor::from_values({3, 5}, w);
    c.loss = [wt](const std::vector<Tensor>& l) {
      return ops::sum_all(ops::mul(ops::softmax_rows(l[0]), wt));
    };
    const DVec wd = widen(w);
    c.ref_loss = [wd](const std::vector<DVec>& l) {
      return ref_dot(ref_softmax_rows(l[0], 3, 5), wd);
    };
    return c;
  });

  add_spec("masked_softmax_rows", [](Prng& rng) {
    std::vector<std::uint8_t> mask(15);
    for (auto& m : mask) m = rng.next_float() < 0.6f ? 1 : 0;
    mask[2] = mask[7] = mask[12] = 1;  // at least one allowed entry per row
    Case c;
    c.leaves = {Tensor::param({3, 5}, rand_values(rng, 15, -2.0f, 2.0f))};
    const auto w = rand_values(rng, 15, -1.0f, 1.0f);
    Tensor wt = Tensor::from_values({3, 5}, w);
    c.loss = [wt, mask](const std::vector<Tensor>& l) {
      return ops::sum_all(ops::mul(ops::masked_softmax_rows(l[0], mask), wt));
    };
    const DVec wd = widen(w);
    c.ref_loss = [wd, mask](const std::vector<DVec>& l) {
      double acc = 0.0;
      for (int i = 0; i < 3; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < 5; ++j)
          if (mask[static_cast<std::size_t>(i * 5 + j)]) mx = std::max(mx, l[0][static_cast<std::size_t>(i * 5 + j)]);
        double denom = 0.0;
        for (int j = 0; j < 5; ++j)
          if (mask[static_cast<std::size_t>(i * 5 + j)]) denom += std::exp(l[0][static_cast<std::size_t>(i * 5 + j)] - mx);
        for (int j = 0; j < 5; ++j)
          if (mask[static_cast<std::size_t>(i * 5 + j)])
            acc += std::exp(l[0][static_cast<std::size_t>(i * 5 + j)] - mx) / denom * wd[static_cast<std::size_t>(i * 5 + j)];
      }
      return acc;
    };
    return c;
  });

  add_spec("rms_norm", [](Prng& rng) {
    Case c;
    c.leaves = {Tensor::param({3, 4}, rand_values(rng, 12, -2.0f, 2.0f)),
                Tensor::param({4}, rand_values(rng, 4, 0.5f, 1.5f))};
    const float eps = 0.01f;
    const auto w = rand_values(rng, 12, -1.0f, 1.0f);
    Tensor wt = Tensor::from_values({3, 4}, w);
    c.loss = [wt, eps](const std::vector<Tensor>& l) {
      return ops::sum_all(ops::mul(ops::rms_norm(l[0], l[1], eps), wt));
    };
    const DVec wd = widen(w);
    c.ref_loss = [wd, eps](const std::vector<DVec>& l) {
      double acc = 0.0;
      for (int i = 0; i < 3; ++i) {
        double ms = 0.0;
        for (int j = 0; j < 4; ++j) ms += l[0][static_cast<std::size_t>(i * 4 + j)] * l[0][static_cast<std::size_t>(i * 4 + j)];
        const double s = 1.0 / std::sqrt(ms / 4.0 + static_cast<double>(eps));
        for (int j = 0; j < 4; ++j)
          acc += l[0][static_cast<std::size_t>(i * 4 + j)] * s * l[1][static_cast<std::size_t>(j)] * wd[static_cast<std::size_t>(i * 4 + j)];
      }
      return acc;
    };
    return c;
  });

  add_spec("embedding", [](Prng& rng) {
    std::vector<std::int32_t> ids(5);
    for (auto& id : ids) id = static_cast<std::int32_t>(rng.next_below(6));
    Case c;
    c.leaves = {Tensor::param({6, 3}, rand_values(rng, 18, -1.5f, 1.5f))};
    const auto w = rand_values(rng, 15, -1.0f, 1.0f);
    Tensor wt = Tensor::from_values({5, 3}, w);
    c.loss = [wt, ids](const std::vector<Tensor>& l) {
      return ops::sum_all(ops::mul(ops::embedding(l[0], ids), wt));
    };
    const DVec wd = widen(w);
    c.ref_loss = [wd, ids](const std::vector<DVec>& l) {
      double acc = 0.0;
      for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 3; ++j)
          acc += l[0][static_cast<std::size_t>(ids[static_cast<std::size_t>(i)] * 3 + j)] * wd[static_cast<std::size_t>(i * 3 + j)];
      return acc;
    };
    return c;
  });

  add_spec("gather_rows", [](Prng& rng) {
    std::vector<std::int64_t> idx(5);
    for (auto& i : idx) i = static_cast<std::int64_t>(rng.next_below(4));
    Case c;
    c.leaves = {Tensor::param({4, 3}, rand_values(rng, 12, -1.5f, 1.5f))};
    const auto w = rand_values(rng, 15, -1.0f, 1.0f);
    Tensor wt = Tensor::from_values({5, 3}, w);
    c.loss = [wt, idx](const std::vector<Tensor>& l) {
      return ops::sum_all(ops::mul(ops::gather_rows(l[0], idx), wt));
    };
    const DVec wd = widen(w);
    c.ref_loss = [wd, idx](const std::vector<DVec>& l) {
      double acc = 0.0;
      for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 3; ++j) acc += l[0][static_cast<std::size_t>(idx[static_cast<std::size_t>(i)] * 3 + j)] * wd[static_cast<std::size_t>(i * 3 + j)];
      return acc;
    };
    return c;
  });

  add_spec("scatter_add_rows", [](Prng& rng) {
    std::vector<std::int64_t> idx(5);
    for (auto& i : idx) i = static_cast<std::int64_t>(rng.next_below(4));
    Case c;
    c.leaves = {Tensor::param({5, 3}, rand_values(rng, 15, -1.5f, 1.5f))};
    const auto w = rand_values(rng, 12, -1.0f, 1.0f);
    Tensor wt = Tensor::from_values({4, 3}, w);
    c.loss = [wt, idx](const std::vector<Tensor>& l) {
      return ops::sum_all(ops::mul(ops::scatter_add_rows(4, l[0], idx), wt));
    };
    const DVec wd = widen(w);
    c.ref_loss = [wd, idx](const std::vector<DVec>& l) {
      double acc = 0.0;
      for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 3; ++j) acc += l[0][static_cast<std::size_t>(i * 3 + j)] * wd[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)] * 3 + j)];
      return acc;
    };
    return c;
  });

  add_spec("gather_cols_per_row", [](Prng& rng) {
    std::vector<std::int64_t> idx(6);
    for (auto& i : idx) i = static_cast<std::int64_t>(rng.next_below(5));
    Case c;
    c.leaves = {Tensor::param({3, 5}, rand_values(rng, 15, -1.5f, 1.5f))};
    const auto w = rand_values(rng, 6, -1.0f, 1.0f);
    Tensor wt = Tensor::from_values({3, 2}, w);
    c.loss = [wt, idx](const std::vector<Tensor>& l) {
      return ops::sum_all(ops::mul(ops::gather_cols_per_row(l[0], idx, 2), wt));
    };
    const DVec wd = widen(w);
    c.ref_loss = [wd, idx](const std::vector<DVec>& l) {
      double acc = 0.0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j)
          acc += l[0][static_cast<std::size_t>(i * 5 + idx[static_cast<std::size_t>(i * 2 + j)])] * wd[static_cast<std::size_t>(i * 2 + j)];
      return acc;
    };
    return c;
  });

  add_spec("gather_elems_col", [](Prng& rng) {
    std::vector<std::pair<std::int64_t, std::int64_t>> coords(4);
    for (auto& [r, cc] : coords) {
      r = static_cast<std::int64_t>(rng.next_below(3));
      cc = static_cast<std::int64_t>(rng.next_below(5));
    }
    Case c;
    c.leaves = {Tensor::param({3, 5}, rand_values(rng, 15, -1.5f, 1.5f))};
    const auto w = rand_values(rng, 4, -1.0f, 1.0f);
    Tensor wt = Tensor::from_values({4, 1}, w);
    c.loss = [wt, coords](const std::vector<Tensor>& l) {
      return ops::sum_all(ops::mul(ops::gather_elems_col(l[0], coords), wt));
    };
    const DVec wd = widen(w);
    c.ref_loss = [wd, coords](const std::vector<DVec>& l) {
      double acc = 0.0;
      for (std::size_t i = 0; i < coords.size(); ++i)
        acc += l[0][static_cast<std::size_t>(coords[i].first * 5 + coords[i].second)] * wd[i];
      return acc;
    };
    return c;
  });

  add_spec("cross_entropy_mean", [](Prng& rng) {
    std::vector<std::int32_t> targets(4);
    for (auto& y : targets) {
      y = rng.next_float() < 0.25f ? -1 : static_cast<std::int32_t>(rng.next_below(6));
    }
    targets[0] = static_cast<std::int32_t>(rng.next_below(6));
    Case c;
    c.leaves = {Tensor::param({4, 6}, rand_values(rng, 24, -2.0f, 2.0f))};
    c.loss = [targets](const std::vector<Tensor>& l) {
      return ops::cross_entropy_mean(l[0], targets);
    };
    c.ref_loss = [targets](const std::vector<DVec>& l) {
      double acc = 0.0;
      int supervised = 0;
      for (int i = 0; i < 4; ++i) {
        if (targets[static_cast<std::size_t>(i)] < 0) continue;
        acc += ref_logsumexp(l[0], static_cast<std::size_t>(i * 6), 6) -
               l[0][static_cast<std::size_t>(i * 6 + targets[static_cast<std::size_t>(i)])];
        ++supervised;
      }
      return acc / supervised;
    };
    return c;
  });

  add_spec("token_log_probs", [](Prng& rng) {
    std::vector<std::int32_t> targets(4);
    for (auto& y : targets) y = static_cast<std::int32_t>(rng.next_below(6));
    Case c;
    c.leaves = {Tensor::param({4, 6}, rand_values(rng, 24, -2.0f, 2.0f))};
    const auto w = rand_values(rng, 4, -1.0f, 1.0f);
    Tensor wt = Tensor::from_values({4, 1}, w);
    c.loss = [wt, targets](const std::vector<Tensor>& l) {
      return ops::sum_all(ops::mul(ops::token_log_probs(l[0], targets), wt));
    };
    const DVec wd = widen(w);
    c.ref_loss = [wd, targets](const std::vector<DVec>& l) {
      double acc = 0.0;
      for (int i = 0; i < 4; ++i)
        acc += (l[0][static_cast<std::size_t>(i * 6 + targets[static_cast<std::size_t>(i)])] -
                ref_logsumexp(l[0], static_cast<std::size_t>(i * 6), 6)) * wd[static_cast<std::size_t>(i)];
      return acc;
    };
    return c;
  });

  add_spec("moe_aux_loss", [](Prng& rng) {
    std::vector<std::int64_t> counts(4);
    std::int64_t total = 0;
    for (auto& v : counts) {
      v = static_cast<std::int64_t>(rng.next_below(5));
      total += v;
    }
    if (total == 0) counts[0] = 1;
    Case c;
    c.leaves = {Tensor::param({3, 4}, rand_values(rng, 12, 0.05f, 1.0f))};
    c.loss = [counts](const std::vector<Tensor>& l) { return ops::moe_aux_loss(l[0], counts, 2); };
    c.ref_loss = [counts](const std::vector<DVec>& l) {
      const double b = 3.0, n = 4.0, k = 2.0;
      double acc = 0.0;
      for (int i = 0; i < 4; ++i) {
        double p = 0.0;
        for (int j = 0; j < 3; ++j) p += l[0][static_cast<std::size_t>(j * 4 + i)];
        acc += (p / b) * (static_cast<double>(counts[static_cast<std::size_t>(i)]) / (b * k));
      }
      return n * acc;
    };
    return c;
  });

  add_spec("z_loss", [](Prng& rng) {
    Case c;
    c.leaves = {Tensor::param({3, 4}, rand_values(rng, 12, -2.0f, 2.0f))};
    c.loss = [](const std::vector<Tensor>& l) { return ops::z_loss(l[0]); };
    c.ref_loss = [](const std::vector<DVec>& l) {
      double acc = 0.0;
      for (int j = 0; j < 3; ++j) {
        const double lse = ref_logsumexp(l[0], static_cast<std::size_t>(j * 4), 4);
        acc += lse * lse;
      }
      return acc / 3.0;
    };
    return c;
  });

  return specs;
}

}  // namespace

std::vector<GradCheckResult> run_gradcheck(std::uint64_t seed, int cases_per_op, double tolerance) {
  const double h = 1e-3;
  std::vector<GradCheckResult> results;
  Prng root(seed);
  std::uint64_t stream = 0;
  for (const OpSpec& spec : build_registry()) {
    GradCheckResult res;
    res.op = spec.name;
    for (int trial = 0; trial < cases_per_op; ++trial) {
      Prng rng = root.split(++stream);
      Case c = spec.make(rng);

      std::vector<std::vector<float>> analytic(c.leaves.size());
      {
        Tape tape;
        Tape::Scope scope(tape);
        Tensor loss = c.loss(c.leaves);
        tape.backward(loss);
        for (std::size_t i = 0; i < c.leaves.size(); ++i) analytic[i] = c.leaves[i].grad();
        for (auto& leaf : c.leaves) leaf.zero_grad();
      }

      std::vector<DVec> wide;
      wide.reserve(c.leaves.size());
      for (const auto& leaf : c.leaves) wide.push_back(widen(leaf.values()));

      for (std::size_t i = 0; i < wide.size(); ++i) {
        for (std::size_t e = 0; e < wide[i].size(); ++e) {
          const double orig = wide[i][e];
          wide[i][e] = orig + h;
          const double lp = c.ref_loss(wide);
          wide[i][e] = orig - h;
          const double lm = c.ref_loss(wide);
          wide[i][e] = orig;
          const double fd = (lp - lm) / (2.0 * h);
          const double a = analytic[i][e];
          const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1.0});
          res.max_rel_err = std::max(res.max_rel_err, rel);
        }
      }
      ++res.cases;
    }
    res.pass = res.max_rel_err <= tolerance;
    results.push_back(std::move(res));
  }
  return results;
}

bool gradcheck_all_pass(const std::vector<GradCheckResult>& results) {
  for (const auto& r : results) {
    if (!r.pass) return false;
  }
  return !results.empty();
}

}  // namespace compasslab
