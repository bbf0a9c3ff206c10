// Copyright 2026 the compass-lab authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal dense float32 tensors with reverse-mode automatic differentiation.
// Ops record onto the active Tape (see Tape::Scope); without an active tape
// they run in inference mode and keep no history.

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "compasslab/common.hpp"
#include "compasslab/prng.hpp"

namespace compasslab {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TensorData {
  Shape shape;
  std::vector<float> values;
  std::vector<float> grad;  // empty until backward writes into it
  bool requires_grad = false;
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, float value);
  static Tensor from_values(Shape shape, std::vector<float> values);
  // Trainable leaf; gradients accumulate into it across backward calls until
  // zero_grad.
  static Tensor param(Shape shape, std::vector<float> values);
  static Tensor randn(Shape shape, Prng& rng, float stddev);

  bool defined() const { return data_ != nullptr; }
  const Shape& shape() const { return data_->shape; }
  std::int64_t numel() const { return static_cast<std::int64_t>(data_->values.size()); }
  bool is_scalar() const { return numel() == 1; }

  // 2-D views: rank-1 tensors count as a single row.
  std::int64_t rows() const;
  std::int64_t cols() const;

  const std::vector<float>& values() const { return data_->values; }
  std::vector<float>& mutable_values() { return data_->values; }
  float value_at(std::int64_t i) const { return data_->values[static_cast<std::size_t>(i)]; }
  float scalar() const;

  bool requires_grad() const { return data_->requires_grad; }
  const std::vector<float>& grad() const;
  void zero_grad();

  std::shared_ptr<TensorData> data() const { return data_; }

 private:
  explicit Tensor(std::shared_ptr<TensorData> data) : data_(std::move(data)) {}
  std::shared_ptr<TensorData> data_;

  friend class Tape;
  friend Tensor make_op_output(Shape shape, std::vector<float> values, bool requires_grad);
};

// Reverse-mode tape. Nodes are appended in execution order, which is a
// topological order of the DAG by construction; backward replays them in
// reverse. The tape only records while a Scope for it is alive.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  class Scope {
   public:
    explicit Scope(Tape& tape);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape* previous_;
  };

  static Tape* current();

  void record(const char* op_name, std::function<void()> backward_fn);
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1 and accumulates gradients into every
  // requires_grad tensor reachable from the recorded nodes.
  void backward(const Tensor& loss);

  void clear() { nodes_.clear(); }

 private:
  struct Node {
    const char* op_name;
    std::function<void()> backward_fn;
  };
  std::vector<Node> nodes_;
};

// Ensures grad storage exists (zero-filled) and returns it.
std::vector<float>& ensure_grad(const std::shared_ptr<TensorData>& data);

namespace ops {

// Elementwise & scalar.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float c);
Tensor add_scalar(const Tensor& a, float c);
Tensor silu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor logsigmoid(const Tensor& a);
Tensor log(const Tensor& a);
Tensor recip(const Tensor& a);

// Linear algebra.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// Shape surgery (2-D).
Tensor slice_cols(const Tensor& a, std::int64_t c0, std::int64_t c1);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& a, std::int64_t r0, std::int64_t r1);

// Reductions / broadcasts.
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);
Tensor row_sums(const Tensor& a);   // [r x c] -> [r x 1]
Tensor col_sums(const Tensor& a);   // [r x c] -> [1 x c]
Tensor mean_rows(const Tensor& a);  // [r x c] -> [1 x c]
Tensor mul_rowwise(const Tensor& a, const Tensor& col);  // col is [r x 1]

// Normalization & attention building blocks.
Tensor softmax_rows(const Tensor& a);
// mask[i*cols+j] != 0 marks an allowed entry; fully masked rows yield zeros.
Tensor masked_softmax_rows(const Tensor& a, const std::vector<std::uint8_t>& mask);
Tensor rms_norm(const Tensor& x, const Tensor& gain, float eps);

// Indexed data movement.
Tensor embedding(const Tensor& table, const std::vector<std::int32_t>& ids);
Tensor gather_rows(const Tensor& a, const std::vector<std::int64_t>& idx);
Tensor scatter_add_rows(std::int64_t out_rows, const Tensor& contrib,
                        const std::vector<std::int64_t>& idx);
Tensor gather_cols_per_row(const Tensor& a, const std::vector<std::int64_t>& idx,
                           std::int64_t k);
// coords are (row, col) pairs; output is [n x 1].
Tensor gather_elems_col(const Tensor& a,
                        const std::vector<std::pair<std::int64_t, std::int64_t>>& coords);

// Losses.
// targets[i] < 0 means position i is unsupervised. Mean over supervised
// positions; throws if none.
Tensor cross_entropy_mean(const Tensor& logits, const std::vector<std::int32_t>& targets);
// Per-position log-probability of the given target ids, as an [n x 1] tensor.
Tensor token_log_probs(const Tensor& logits, const std::vector<std::int32_t>& targets);
// Load-balancing loss N * sum_i (p_i/B) * (c_i/(B*K)); counts are constants.
Tensor moe_aux_loss(const Tensor& probs, const std::vector<std::int64_t>& counts, std::int64_t k);
// (1/B) * sum_j (logsumexp_i z_ij)^2.
Tensor z_loss(const Tensor& logits);

// Detached copy sharing no history; never requires grad.
Tensor stop_grad(const Tensor& a);

// k largest values of x; ties broken by lowest index, output sorted by
// descending value. Not differentiable.
void top_k(const float* x, std::int64_t n, std::int64_t k, std::int64_t* out_idx,
           float* out_val);

}  // namespace ops

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

// Decoupled weight decay: theta <- theta - lr * (mhat/(sqrt(vhat)+eps) + wd*theta).
// Moment state is kept in double so updates match a hand-executed rule to the
// final float32 rounding.
class AdamW {
 public:
  explicit AdamW(AdamWConfig config) : config_(config) {}

  const AdamWConfig& config() const { return config_; }
  std::int64_t step_count() const { return step_; }

  void step(const std::vector<Tensor>& params);

 private:
  struct Slot {
    std::vector<double> m;
    std::vector<double> v;
  };
  AdamWConfig config_;
  std::int64_t step_ = 0;
  std::vector<Slot> slots_;
  std::vector<const TensorData*> keys_;
};

}  // namespace compasslab
