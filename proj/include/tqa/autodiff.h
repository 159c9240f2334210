// Copyright 2026 The TableQA-Adv Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TQA_AUTODIFF_H_
#define TQA_AUTODIFF_H_

// Reverse-mode automatic differentiation over dense double vectors and
// matrices. A Tape records operations in creation order (which is a
// topological order), and Backward() replays them in reverse.
//
// Parameters enter the tape through Param(). If the tape was created with a
// GradSink bound to the parameter's store, gradients accumulate directly into
// the sink; parameters from any other store are treated as constants.

#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "tqa/params.h"

namespace tqa::ad {

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Tape;
using BackwardFn = std::function<void(Tape&, int self)>;

class Tape {
 public:
  explicit Tape(GradSink* sink = nullptr);

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaves.
  Var Constant(std::vector<double> value, int rows, int cols = 1);
  Var Constant(std::vector<double> value);
  Var Scalar(double value);
  // A leaf whose gradient is recorded (readable with grad() after Backward).
  Var Input(std::vector<double> value, int rows, int cols = 1);
  Var Input(std::vector<double> value);
  Var Param(const ParamStore& store, int index);

  // Accessors.
  std::span<const double> value(Var v) const { return ValueOf(v.id); }
  double scalar(Var v) const { return ValueOf(v.id)[0]; }
  int rows(Var v) const { return nodes_[v.id].rows; }
  int cols(Var v) const { return nodes_[v.id].cols; }
  int size(Var v) const { return static_cast<int>(ValueOf(v.id).size()); }
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }
  // Gradient of the last Backward() root with respect to `v`; all zeros if no
  // gradient reached it.
  std::vector<double> grad(Var v) const;
  int num_nodes() const { return static_cast<int>(nodes_.size()); }

  // Seeds d(root)/d(root) = 1 and propagates. `root` must be a scalar.
  void Backward(Var root);

  // Elementwise.
  Var Add(Var a, Var b);
  Var Sub(Var a, Var b);
  Var Mul(Var a, Var b);
  Var Scale(Var a, double c);
  Var AddScalar(Var a, double c);
  Var OneMinus(Var a);
  Var Sigmoid(Var a);
  Var Tanh(Var a);
  Var Exp(Var a);
  Var Log(Var a);
  // Values outside [lo, hi] are clamped and receive zero gradient.
  Var Clamp(Var a, double lo, double hi);
  // log(1 - min(p, 1 - eps)) elementwise; each clamped entry increments
  // saturations().
  Var Log1mClamped(Var p, double eps);

  // Reductions and products.
  Var Sum(Var a);
  Var AddN(std::span<const Var> terms);
  Var Dot(Var a, Var b);
  Var Pick(Var a, int index);
  Var ScaleBy(Var scalar, Var v);
  Var MatVec(Var m, Var x);
  Var MatTVec(Var m, Var x);
  Var Affine(Var w, Var b, Var x);

  // Shape manipulation.
  Var Concat(std::span<const Var> parts);
  Var Concat(std::initializer_list<Var> parts);
  Var Slice(Var a, int offset, int length);
  Var Row(Var m, int row);
  Var Stack(std::span<const Var> rows);
  Var Pad(Var a, int size);
  // out[index[j]] += src[j], out has `size` entries.
  Var ScatterAdd(Var src, std::span<const int> index, int size);

  // Normalizers.
  Var Softmax(Var a);
  Var LogSoftmax(Var a);

  // Fused GRU cell with PyTorch gate layout (reset, update, new):
  //   r = s(Wx_r x + bx_r + Wh_r h + bh_r), u = s(... update ...),
  //   n = tanh(Wx_n x + bx_n + r * (Wh_n h + bh_n)), h' = (1-u) n + u h.
  Var Gru(Var wx, Var wh, Var bx, Var bh, Var x, Var h);

  // Straight-through embedding of a categorical choice. The forward value is
  //   table[map[hard]] + sum_v [map[v] >= 0] (soft_v - anchor_v) table[map[v]]
  // where `anchor` defaults to the current soft value (so the forward value
  // is exactly the hard row). Gradients reach `soft` through the linear term;
  // entries with map[v] < 0 are blocked. A non-empty anchor fixes the
  // linearization point, which makes the op a smooth function of `soft` for
  // finite-difference checks.
  Var EmbedST(Var table, Var soft, int hard, std::span<const int> map,
              std::span<const double> anchor = {});

  // Escape hatch for fused ops defined elsewhere. `fn` must accumulate into
  // the parents' gradients via MutableGrad().
  Var Custom(std::span<const Var> parents, std::vector<double> value, int rows,
             int cols, BackwardFn fn);
  std::span<double> MutableGrad(int id);
  std::span<const double> GradOut(int id) const;
  std::span<const double> ValueOf(int id) const {
    const Node& n = nodes_[id];
    return n.view.empty() ? std::span<const double>(n.value) : n.view;
  }

  int saturations() const { return saturations_; }

 private:
  struct Node {
    int rows = 0;
    int cols = 1;
    std::vector<double> value;
    std::span<const double> view;  // parameter leaves alias the store
    std::vector<double> own_grad;  // empty until first written
    std::span<double> external_grad;  // parameter leaves bound to the sink
    bool needs_grad = false;
    BackwardFn backward;
  };

  Var Push(std::vector<double> value, int rows, int cols, bool needs_grad,
           BackwardFn fn);
  bool AnyNeedsGrad(std::span<const Var> vars) const;
  bool NG(Var v) const { return nodes_[v.id].needs_grad; }

  GradSink* sink_;
  std::vector<Node> nodes_;
  std::vector<std::pair<const ParamStore*, int>> param_keys_;
  std::vector<int> param_nodes_;
  int saturations_ = 0;
};

// Numerically stable softmax of a plain vector.
std::vector<double> SoftmaxOf(std::span<const double> logits);

}  // namespace tqa::ad

#endif  // TQA_AUTODIFF_H_
