// Copyright 2026 the compass-lab authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>

#include "compasslab/checkpoint.hpp"
#include "compasslab/common.hpp"
#include "compasslab/gradcheck.hpp"
#include "compasslab/prng.hpp"
#include "compasslab/tensor.hpp"

using namespace compasslab;

namespace {

// Triple-loop reference, independent of the gemm used by ops::matmul.
std::vector<float> matmul_oracle(const std::vector<float>& a, const std::vector<float>& b,
                                 int m, int k, int n) {
  std::vector<float> c(static_cast<std::size_t>(m) * n, 0.0f);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int l = 0; l < k; ++l)
        acc += static_cast<double>(a[i * k + l]) * b[l * n + j];
      c[static_cast<std::size_t>(i) * n + j] = static_cast<float>(acc);
    }
  return c;
}

}  // namespace

TEST_CASE("prng: identical (seed, counter) replays identically") {
  Prng a(1234);
  std::vector<std::uint64_t> first;
  for (int i = 0; i < 16; ++i) first.push_back(a.next_u64());
  Prng b(1234);
  for (int i = 0; i < 16; ++i) CHECK(b.next_u64() == first[static_cast<std::size_t>(i)]);
  // Jump straight to a counter.
  Prng c(1234, 7);
  CHECK(c.next_u64() == first[7]);
}

TEST_CASE("prng: split streams differ from parent and from each other") {
  Prng root(99);
  Prng s1 = root.split(1);
  Prng s2 = root.split(2);
  CHECK(s1.next_u64() != s2.next_u64());
  CHECK(root.split(1).next_u64() == Prng(99).split(1).next_u64());
}

TEST_CASE("prng: uniform doubles stay in [0,1)") {
  Prng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.next_double();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("matmul: identity and scalar cases") {
  Tensor eye = Tensor::from_values({2, 2}, {1, 0, 0, 1});
  Tensor m = Tensor::from_values({2, 2}, {1, 2, 3, 4});
  Tensor out = ops::matmul(eye, m);
  for (int i = 0; i < 4; ++i) CHECK(out.values()[static_cast<std::size_t>(i)] == m.values()[static_cast<std::size_t>(i)]);

  Tensor a = Tensor::from_values({1, 1}, {2});
  Tensor b = Tensor::from_values({1, 1}, {3});
  CHECK(ops::matmul(a, b).scalar() == doctest::Approx(6.0).epsilon(0));
}

TEST_CASE("matmul: random 5x4 * 4x3 matches triple-loop oracle") {
  Prng rng(42);
  std::vector<float> av(20), bv(12);
  for (auto& v : av) v = rng.next_normal_f();
  for (auto& v : bv) v = rng.next_normal_f();
  Tensor a = Tensor::from_values({5, 4}, av);
  Tensor b = Tensor::from_values({4, 3}, bv);
  Tensor c = ops::matmul(a, b);
  const auto ref = matmul_oracle(av, bv, 5, 4, 3);
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double denom = std::max(1e-12, static_cast<double>(std::abs(ref[i])));
    CHECK(std::abs(c.values()[i] - ref[i]) / denom <= 1e-6);
  }
}

TEST_CASE("matmul: shape mismatch throws") {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({2, 3});
  CHECK_THROWS_AS(ops::matmul(a, b), ValidationError);
}

TEST_CASE("softmax_rows: uniform row, shift invariance, analytic row") {
  Tensor z = Tensor::zeros({1, 4});
  Tensor s = ops::softmax_rows(z);
  for (float v : s.values()) CHECK(v == doctest::Approx(0.25).epsilon(1e-7));

  Prng rng(7);
  std::vector<float> xv(8);
  for (auto& v : xv) v = rng.next_normal_f();
  Tensor x = Tensor::from_values({2, 4}, xv);
  std::vector<float> shifted = xv;
  for (std::size_t i = 0; i < 4; ++i) shifted[i] += 3.25f;
  for (std::size_t i = 4; i < 8; ++i) shifted[i] -= 1.5f;
  Tensor y1 = ops::softmax_rows(x);
  Tensor y2 = ops::softmax_rows(Tensor::from_values({2, 4}, shifted));
  for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(y1.values()[i] - y2.values()[i]) <= 1e-6f);

  Tensor logs = Tensor::from_values({1, 3}, {std::log(1.0f), std::log(2.0f), std::log(3.0f)});
  Tensor p = ops::softmax_rows(logs);
  CHECK(p.values()[0] == doctest::Approx(1.0 / 6).epsilon(1e-6));
  CHECK(p.values()[1] == doctest::Approx(2.0 / 6).epsilon(1e-6));
  CHECK(p.values()[2] == doctest::Approx(3.0 / 6).epsilon(1e-6));
}

TEST_CASE("softmax_rows: rows sum to one on random input") {
  Prng rng(11);
  std::vector<float> xv(60);
  for (auto& v : xv) v = rng.next_normal_f(0.0f, 3.0f);
  Tensor y = ops::softmax_rows(Tensor::from_values({10, 6}, xv));
  for (int i = 0; i < 10; ++i) {
    double sum = 0.0;
    for (int j = 0; j < 6; ++j) sum += y.values()[static_cast<std::size_t>(i * 6 + j)];
    CHECK(std::abs(sum - 1.0) <= 1e-6);
  }
}

TEST_CASE("rms_norm: unit rms, hand case, zero vector") {
  Tensor gain = Tensor::from_values({4}, {1, 1, 1, 1});
  Tensor x = Tensor::from_values({1, 4}, {1, 1, 1, 1});
  Tensor y = ops::rms_norm(x, gain, 1e-12f);
  for (float v : y.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-6));

  Tensor gain2 = Tensor::from_values({2}, {1, 1});
  Tensor x2 = Tensor::from_values({1, 2}, {2, 0});
  Tensor y2 = ops::rms_norm(x2, gain2, 1e-12f);
  CHECK(y2.values()[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
  CHECK(y2.values()[1] == doctest::Approx(0.0).epsilon(1e-6));

  Tensor zero = Tensor::zeros({1, 4});
  Tensor yz = ops::rms_norm(zero, gain, 0.5f);
  for (float v : yz.values()) CHECK(v == 0.0f);

  CHECK_THROWS_AS(ops::rms_norm(x, gain, 0.0f), ValidationError);
}

TEST_CASE("top_k: full sort, ties by lowest index, exhaustive oracle") {
  {
    const float x[4] = {0.3f, 0.1f, 0.9f, 0.5f};
    std::int64_t idx[4];
    float val[4];
    ops::top_k(x, 4, 4, idx, val);
    CHECK(idx[0] == 2);
    CHECK(idx[1] == 3);
    CHECK(idx[2] == 0);
    CHECK(idx[3] == 1);
  }
  {
    const float x[3] = {5, 5, 1};
    std::int64_t idx[1];
    float val[1];
    ops::top_k(x, 3, 1, idx, val);
    CHECK(idx[0] == 0);
  }
  {
    const float x[4] = {0.1f, 0.9f, 0.4f, 0.6f};
    std::int64_t idx[2];
    float val[2];
    ops::top_k(x, 4, 2, idx, val);
    CHECK(idx[0] == 1);
    CHECK(idx[1] == 3);
  }
  // Random cases against a full stable-sort oracle.
  Prng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_below(8));
    const int k = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
    std::vector<float> x(static_cast<std::size_t>(n));
    for (auto& v : x) v = static_cast<float>(rng.next_below(4));  // force ties
    std::vector<std::int64_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
      return x[static_cast<std::size_t>(a)] > x[static_cast<std::size_t>(b)];
    });
    std::vector<std::int64_t> idx(static_cast<std::size_t>(k));
    std::vector<float> val(static_cast<std::size_t>(k));
    ops::top_k(x.data(), n, k, idx.data(), val.data());
    for (int i = 0; i < k; ++i) CHECK(idx[static_cast<std::size_t>(i)] == order[static_cast<std::size_t>(i)]);
  }
  const float x[2] = {0, 1};
  std::int64_t idx[3];
  float val[3];
  CHECK_THROWS_AS(ops::top_k(x, 2, 3, idx, val), ValidationError);
}

TEST_CASE("backward: loss independent of leaf gives exactly zero grad") {
  Tensor a = Tensor::param({2, 2}, {1, 2, 3, 4});
  Tensor b = Tensor::param({2, 2}, {5, 6, 7, 8});
  Tape tape;
  Tape::Scope scope(tape);
  Tensor loss = ops::sum_all(ops::mul(a, a));
  tape.backward(loss);
  for (float g : b.grad()) CHECK(g == 0.0f);
}

TEST_CASE("backward: loss = sum(x) gives all-ones grad") {
  Tensor x = Tensor::param({3, 2}, {1, 2, 3, 4, 5, 6});
  Tape tape;
  Tape::Scope scope(tape);
  tape.backward(ops::sum_all(x));
  for (float g : x.grad()) CHECK(g == 1.0f);
}

TEST_CASE("backward: rejects non-scalar loss") {
  Tensor x = Tensor::param({2, 2}, {1, 2, 3, 4});
  Tape tape;
  Tape::Scope scope(tape);
  Tensor y = ops::scale(x, 2.0f);
  CHECK_THROWS_AS(tape.backward(y), ValidationError);
}

TEST_CASE("backward: grads accumulate across reuse of a tensor") {
  Tensor x = Tensor::param({1}, {3.0f});
  Tape tape;
  Tape::Scope scope(tape);
  Tensor loss = ops::sum_all(ops::mul(x, x));  // d/dx x^2 = 2x
  tape.backward(loss);
  CHECK(x.grad()[0] == doctest::Approx(6.0f));
}

TEST_CASE("stop_grad blocks gradient flow exactly") {
  Tensor x = Tensor::param({2, 2}, {1, 2, 3, 4});
  Tape tape;
  Tape::Scope scope(tape);
  Tensor loss = ops::sum_all(ops::mul(ops::stop_grad(x), x));
  tape.backward(loss);
  // Only the non-detached operand contributes: grad = stop_grad(x) values.
  CHECK(x.grad()[0] == doctest::Approx(1.0f));
  CHECK(x.grad()[3] == doctest::Approx(4.0f));
}

TEST_CASE("gradcheck: every differentiable op matches central finite differences") {
  const auto results = run_gradcheck(20260809, 100, 1e-4);
  CHECK(results.size() >= 30);
  for (const auto& r : results) {
    INFO(r.op, " max_rel_err=", r.max_rel_err);
    CHECK(r.cases == 100);
    CHECK(r.pass);
  }
}

TEST_CASE("non-finite op outputs raise errors") {
  Tensor x = Tensor::from_values({1, 2}, {0.0f, 1.0f});
  CHECK_THROWS_AS(ops::log(x), ValidationError);
  CHECK_THROWS_AS(ops::recip(Tensor::zeros({1, 1})), ValidationError);
  CHECK_THROWS_AS(Tensor::from_values({1}, {std::numeric_limits<float>::infinity()}),
                  ValidationError);
}

TEST_CASE("adamw: lr=0 leaves parameters unchanged") {
  Tensor p = Tensor::param({2}, {1.0f, -2.0f});
  ensure_grad(p.data())[0] = 0.5f;
  ensure_grad(p.data())[1] = -0.25f;
  AdamWConfig cfg;
  cfg.lr = 0.0;
  cfg.weight_decay = 0.1;
  AdamW opt(cfg);
  opt.step({p});
  CHECK(p.values()[0] == 1.0f);
  CHECK(p.values()[1] == -2.0f);
}

TEST_CASE("adamw: zero grad with weight decay is a pure shrink") {
  Tensor p = Tensor::param({1}, {2.0f});
  AdamWConfig cfg;
  cfg.lr = 0.01;
  cfg.weight_decay = 0.5;
  AdamW opt(cfg);
  opt.step({p});
  CHECK(p.values()[0] == doctest::Approx(2.0f * (1.0f - 0.01f * 0.5f)).epsilon(1e-7));
}

TEST_CASE("adamw: one step on a scalar matches the hand-executed update") {
  Tensor p = Tensor::param({1}, {1.0f});
  ensure_grad(p.data())[0] = 1.0f;
  AdamWConfig cfg;  // defaults: lr=1e-3, b1=.9, b2=.999, eps=1e-8, wd=0
  cfg.weight_decay = 0.01;
  AdamW opt(cfg);
  opt.step({p});
  // Hand execution in double precision:
  const double m = 0.1, v = 0.001;
  const double mhat = m / (1.0 - 0.9);
  const double vhat = v / (1.0 - 0.999);
  const double expected = 1.0 - 1e-3 * (mhat / (std::sqrt(vhat) + 1e-8) + 0.01 * 1.0);
  CHECK(std::abs(static_cast<double>(p.values()[0]) - static_cast<double>(static_cast<float>(expected))) <= 1e-8);
}

TEST_CASE("determinism: identical seed gives bit-identical tensors") {
  auto run = [](std::uint64_t seed) {
    Prng rng(seed);
    Tensor a = Tensor::randn({8, 8}, rng, 0.7f);
    Tensor b = Tensor::randn({8, 8}, rng, 0.7f);
    Tensor c = ops::matmul(a, b);
    return c.values();
  };
  const auto v1 = run(555);
  const auto v2 = run(555);
  CHECK(std::memcmp(v1.data(), v2.data(), v1.size() * sizeof(float)) == 0);
}

TEST_CASE("checkpoint: byte-exact round trip") {
  Prng rng(2024);
  std::map<std::string, Tensor> tensors;
  tensors.emplace("embed", Tensor::randn({6, 4}, rng, 1.0f));
  tensors.emplace("layers.0.w", Tensor::randn({4, 4}, rng, 0.5f));
  tensors.emplace("head", Tensor::randn({4, 6}, rng, 0.2f));

  const auto dir = std::filesystem::temp_directory_path() / "compasslab_ckpt_test";
  std::filesystem::create_directories(dir);
  const auto p1 = dir / "a.ckpt";
  const auto p2 = dir / "b.ckpt";
  save_checkpoint(p1, tensors);
  auto loaded = load_checkpoint(p1);
  CHECK(loaded.size() == tensors.size());
  for (const auto& [name, t] : tensors) {
    REQUIRE(loaded.count(name) == 1);
    CHECK(loaded.at(name).shape() == t.shape());
    CHECK(std::memcmp(loaded.at(name).values().data(), t.values().data(),
                      t.values().size() * sizeof(float)) == 0);
  }
  save_checkpoint(p2, loaded);
  const auto b1 = read_binary_file(p1);
  const auto b2 = read_binary_file(p2);
  REQUIRE(b1.size() == b2.size());
  CHECK(std::memcmp(b1.data(), b2.data(), b1.size()) == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("sparse building blocks: gather/scatter round trip") {
  Tensor x = Tensor::from_values({4, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
  Tensor g = ops::gather_rows(x, {2, 0, 2});
  CHECK(g.values()[0] == 5.0f);
  CHECK(g.values()[2] == 1.0f);
  Tensor s = ops::scatter_add_rows(4, g, {2, 0, 2});
  CHECK(s.values()[0] == 1.0f);       // row 0 <- x[0]
  CHECK(s.values()[4] == 10.0f);      // row 2 <- x[2] + x[2]
  CHECK(s.values()[2] == 0.0f);       // row 1 untouched
}
