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

#include "tqa/autodiff.h"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <string>

#include "tqa/kernels.h"

namespace tqa::ad {

namespace {

void CheckSameSize(const Tape& t, Var a, Var b, const char* op) {
  if (t.size(a) != t.size(b)) {
    throw Error(std::string("size mismatch in ") + op + ": " +
                std::to_string(t.size(a)) + " vs " + std::to_string(t.size(b)));
  }
}

}  // namespace

std::vector<double> SoftmaxOf(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    z += out[i];
  }
  for (double& x : out) x /= z;
  return out;
}

Tape::Tape(GradSink* sink) : sink_(sink) { nodes_.reserve(256); }

Var Tape::Push(std::vector<double> value, int rows, int cols, bool needs_grad,
               BackwardFn fn) {
  Node n;
  n.rows = rows;
  n.cols = cols;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

bool Tape::AnyNeedsGrad(std::span<const Var> vars) const {
  for (Var v : vars) {
    if (nodes_[v.id].needs_grad) return true;
  }
  return false;
}

std::span<double> Tape::MutableGrad(int id) {
  Node& n = nodes_[id];
  if (!n.external_grad.empty()) return n.external_grad;
  if (n.own_grad.empty()) n.own_grad.assign(ValueOf(id).size(), 0.0);
  return n.own_grad;
}

std::span<const double> Tape::GradOut(int id) const {
  const Node& n = nodes_[id];
  if (!n.external_grad.empty()) return n.external_grad;
  return n.own_grad;
}

std::vector<double> Tape::grad(Var v) const {
  auto g = GradOut(v.id);
  if (g.empty()) return std::vector<double>(ValueOf(v.id).size(), 0.0);
  return {g.begin(), g.end()};
}

Var Tape::Constant(std::vector<double> value, int rows, int cols) {
  return Push(std::move(value), rows, cols, false, nullptr);
}

Var Tape::Constant(std::vector<double> value) {
  const int n = static_cast<int>(value.size());
  return Constant(std::move(value), n, 1);
}

Var Tape::Scalar(double value) { return Constant({value}, 1, 1); }

Var Tape::Input(std::vector<double> value, int rows, int cols) {
  return Push(std::move(value), rows, cols, true, BackwardFn([](Tape&, int) {}));
}

Var Tape::Input(std::vector<double> value) {
  const int n = static_cast<int>(value.size());
  return Input(std::move(value), n, 1);
}

Var Tape::Param(const ParamStore& store, int index) {
  for (std::size_t i = 0; i < param_keys_.size(); ++i) {
    if (param_keys_[i].first == &store && param_keys_[i].second == index) {
      return Var{param_nodes_[i]};
    }
  }
  const Parameter& p = store.at(index);
  const bool bound = sink_ != nullptr && sink_->store() == &store;
  Var v = Push({}, p.rows, p.cols, bound,
               bound ? BackwardFn([](Tape&, int) {}) : BackwardFn());
  nodes_[v.id].view = p.value;
  if (bound) nodes_[v.id].external_grad = sink_->Grad(index);
  param_keys_.emplace_back(&store, index);
  param_nodes_.push_back(v.id);
  return v;
}

void Tape::Backward(Var root) {
  if (size(root) != 1) throw Error("Backward root must be a scalar");
  if (!nodes_[root.id].needs_grad) return;
  MutableGrad(root.id)[0] += 1.0;
  for (int i = root.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.needs_grad || !n.backward) continue;
    if (n.own_grad.empty() && n.external_grad.empty()) continue;
    n.backward(*this, i);
  }
}

// ---------------------------------------------------------------------------
// Elementwise.

Var Tape::Add(Var a, Var b) {
  CheckSameSize(*this, a, b, "Add");
  std::vector<double> out(value(a).begin(), value(a).end());
  auto vb = value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += vb[i];
  return Push(std::move(out), rows(a), cols(a), NG(a) || NG(b),
              [a, b](Tape& t, int self) {
                auto g = t.GradOut(self);
                if (t.needs_grad(a)) {
                  auto ga = t.MutableGrad(a.id);
                  for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                }
                if (t.needs_grad(b)) {
                  auto gb = t.MutableGrad(b.id);
                  for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
                }
              });
}

Var Tape::Sub(Var a, Var b) {
  CheckSameSize(*this, a, b, "Sub");
  std::vector<double> out(value(a).begin(), value(a).end());
  auto vb = value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= vb[i];
  return Push(std::move(out), rows(a), cols(a), NG(a) || NG(b),
              [a, b](Tape& t, int self) {
                auto g = t.GradOut(self);
                if (t.needs_grad(a)) {
                  auto ga = t.MutableGrad(a.id);
                  for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                }
                if (t.needs_grad(b)) {
                  auto gb = t.MutableGrad(b.id);
                  for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
                }
              });
}

Var Tape::Mul(Var a, Var b) {
  CheckSameSize(*this, a, b, "Mul");
  std::vector<double> out(value(a).begin(), value(a).end());
  auto vb = value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= vb[i];
  return Push(std::move(out), rows(a), cols(a), NG(a) || NG(b),
              [a, b](Tape& t, int self) {
                auto g = t.GradOut(self);
                if (t.needs_grad(a)) {
                  auto ga = t.MutableGrad(a.id);
                  auto vb = t.value(b);
                  for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
                }
                if (t.needs_grad(b)) {
                  auto gb = t.MutableGrad(b.id);
                  auto va = t.value(a);
                  for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
                }
              });
}

Var Tape::Scale(Var a, double c) {
  std::vector<double> out(value(a).begin(), value(a).end());
  for (double& x : out) x *= c;
  return Push(std::move(out), rows(a), cols(a), NG(a), [a, c](Tape& t, int self) {
    auto g = t.GradOut(self);
    auto ga = t.MutableGrad(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
  });
}

Var Tape::AddScalar(Var a, double c) {
  std::vector<double> out(value(a).begin(), value(a).end());
  for (double& x : out) x += c;
  return Push(std::move(out), rows(a), cols(a), NG(a), [a](Tape& t, int self) {
    auto g = t.GradOut(self);
    auto ga = t.MutableGrad(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var Tape::OneMinus(Var a) {
  std::vector<double> out(value(a).begin(), value(a).end());
  for (double& x : out) x = 1.0 - x;
  return Push(std::move(out), rows(a), cols(a), NG(a), [a](Tape& t, int self) {
    auto g = t.GradOut(self);
    auto ga = t.MutableGrad(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] -= g[i];
  });
}

Var Tape::Sigmoid(Var a) {
  std::vector<double> out(value(a).begin(), value(a).end());
  for (double& x : out) x = 1.0 / (1.0 + std::exp(-x));
  return Push(std::move(out), rows(a), cols(a), NG(a), [a](Tape& t, int self) {
    auto g = t.GradOut(self);
    auto y = t.ValueOf(self);
    auto ga = t.MutableGrad(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var Tape::Tanh(Var a) {
  std::vector<double> out(value(a).begin(), value(a).end());
  for (double& x : out) x = std::tanh(x);
  return Push(std::move(out), rows(a), cols(a), NG(a), [a](Tape& t, int self) {
    auto g = t.GradOut(self);
    auto y = t.ValueOf(self);
    auto ga = t.MutableGrad(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var Tape::Exp(Var a) {
  std::vector<double> out(value(a).begin(), value(a).end());
  for (double& x : out) x = std::exp(x);
  return Push(std::move(out), rows(a), cols(a), NG(a), [a](Tape& t, int self) {
    auto g = t.GradOut(self);
    auto y = t.ValueOf(self);
    auto ga = t.MutableGrad(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
  });
}

Var Tape::Log(Var a) {
  std::vector<double> out(value(a).begin(), value(a).end());
  for (double& x : out) x = std::log(x);
  return Push(std::move(out), rows(a), cols(a), NG(a), [a](Tape& t, int self) {
    auto g = t.GradOut(self);
    auto x = t.value(a);
    auto ga = t.MutableGrad(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / x[i];
  });
}

Var Tape::Clamp(Var a, double lo, double hi) {
  std::vector<double> out(value(a).begin(), value(a).end());
  for (double& x : out) x = std::clamp(x, lo, hi);
  return Push(std::move(out), rows(a), cols(a), NG(a),
              [a, lo, hi](Tape& t, int self) {
                auto g = t.GradOut(self);
                auto x = t.value(a);
                auto ga = t.MutableGrad(a.id);
                for (std::size_t i = 0; i < g.size(); ++i) {
                  if (x[i] >= lo && x[i] <= hi) ga[i] += g[i];
                }
              });
}

Var Tape::Log1mClamped(Var p, double eps) {
  std::vector<double> out(value(p).begin(), value(p).end());
  std::vector<char> clamped(out.size(), 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] > 1.0 - eps) {
      out[i] = 1.0 - eps;
      clamped[i] = 1;
      ++saturations_;
    }
    out[i] = std::log(1.0 - out[i]);
  }
  return Push(std::move(out), rows(p), cols(p), NG(p),
              [p, clamped = std::move(clamped)](Tape& t, int self) {
                auto g = t.GradOut(self);
                auto x = t.value(p);
                auto gp = t.MutableGrad(p.id);
                for (std::size_t i = 0; i < g.size(); ++i) {
                  if (!clamped[i]) gp[i] -= g[i] / (1.0 - x[i]);
                }
              });
}

// ---------------------------------------------------------------------------
// Reductions and products.

Var Tape::Sum(Var a) {
  double s = 0.0;
  for (double x : value(a)) s += x;
  return Push({s}, 1, 1, NG(a), [a](Tape& t, int self) {
    const double g = t.GradOut(self)[0];
    for (double& x : t.MutableGrad(a.id)) x += g;
  });
}

Var Tape::AddN(std::span<const Var> terms) {
  if (terms.empty()) return Scalar(0.0);
  const int n = size(terms[0]);
  std::vector<double> out(n, 0.0);
  for (Var v : terms) {
    if (size(v) != n) throw Error("size mismatch in AddN");
    auto x = value(v);
    for (int i = 0; i < n; ++i) out[i] += x[i];
  }
  std::vector<Var> parents(terms.begin(), terms.end());
  return Push(std::move(out), rows(terms[0]), cols(terms[0]), AnyNeedsGrad(terms),
              [parents = std::move(parents)](Tape& t, int self) {
                auto g = t.GradOut(self);
                for (Var v : parents) {
                  if (!t.needs_grad(v)) continue;
                  auto gv = t.MutableGrad(v.id);
                  for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
                }
              });
}

Var Tape::Dot(Var a, Var b) {
  CheckSameSize(*this, a, b, "Dot");
  auto va = value(a);
  auto vb = value(b);
  double s = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) s += va[i] * vb[i];
  return Push({s}, 1, 1, NG(a) || NG(b), [a, b](Tape& t, int self) {
    const double g = t.GradOut(self)[0];
    if (t.needs_grad(a)) {
      auto ga = t.MutableGrad(a.id);
      auto vb = t.value(b);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g * vb[i];
    }
    if (t.needs_grad(b)) {
      auto gb = t.MutableGrad(b.id);
      auto va = t.value(a);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g * va[i];
    }
  });
}

Var Tape::Pick(Var a, int index) {
  if (index < 0 || index >= size(a)) throw Error("Pick index out of range");
  return Push({value(a)[index]}, 1, 1, NG(a), [a, index](Tape& t, int self) {
    t.MutableGrad(a.id)[index] += t.GradOut(self)[0];
  });
}

Var Tape::ScaleBy(Var scalar, Var v) {
  if (size(scalar) != 1) throw Error("ScaleBy expects a scalar");
  const double s = value(scalar)[0];
  std::vector<double> out(value(v).begin(), value(v).end());
  for (double& x : out) x *= s;
  return Push(std::move(out), rows(v), cols(v), NG(scalar) || NG(v),
              [scalar, v](Tape& t, int self) {
                auto g = t.GradOut(self);
                if (t.needs_grad(scalar)) {
                  auto x = t.value(v);
                  double s = 0.0;
                  for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * x[i];
                  t.MutableGrad(scalar.id)[0] += s;
                }
                if (t.needs_grad(v)) {
                  const double s = t.value(scalar)[0];
                  auto gv = t.MutableGrad(v.id);
                  for (std::size_t i = 0; i < g.size(); ++i) gv[i] += s * g[i];
                }
              });
}

Var Tape::MatVec(Var m, Var x) {
  const int r = rows(m);
  const int c = cols(m);
  if (size(x) != c) {
    throw Error("MatVec shape mismatch: " + std::to_string(r) + "x" +
                std::to_string(c) + " * " + std::to_string(size(x)));
  }
  std::vector<double> out(r);
  kernels::MatVec(value(m), r, c, value(x), out);
  return Push(std::move(out), r, 1, NG(m) || NG(x), [m, x, r, c](Tape& t, int self) {
    auto g = t.GradOut(self);
    if (t.needs_grad(m)) kernels::OuterAccum(t.MutableGrad(m.id), r, c, g, t.value(x));
    if (t.needs_grad(x)) kernels::MatTVecAccum(t.value(m), r, c, g, t.MutableGrad(x.id));
  });
}

Var Tape::MatTVec(Var m, Var x) {
  const int r = rows(m);
  const int c = cols(m);
  if (size(x) != r) throw Error("MatTVec shape mismatch");
  std::vector<double> out(c, 0.0);
  kernels::MatTVecAccum(value(m), r, c, value(x), out);
  return Push(std::move(out), c, 1, NG(m) || NG(x), [m, x, r, c](Tape& t, int self) {
    auto g = t.GradOut(self);
    if (t.needs_grad(m)) kernels::OuterAccum(t.MutableGrad(m.id), r, c, t.value(x), g);
    if (t.needs_grad(x)) {
      std::vector<double> tmp(r);
      kernels::MatVec(t.value(m), r, c, g, tmp);
      auto gx = t.MutableGrad(x.id);
      for (int i = 0; i < r; ++i) gx[i] += tmp[i];
    }
  });
}

Var Tape::Affine(Var w, Var b, Var x) {
  const int r = rows(w);
  const int c = cols(w);
  if (size(x) != c || size(b) != r) throw Error("Affine shape mismatch");
  std::vector<double> out(r);
  kernels::MatVec(value(w), r, c, value(x), out);
  auto vb = value(b);
  for (int i = 0; i < r; ++i) out[i] += vb[i];
  return Push(std::move(out), r, 1, NG(w) || NG(b) || NG(x),
              [w, b, x, r, c](Tape& t, int self) {
                auto g = t.GradOut(self);
                if (t.needs_grad(w)) kernels::OuterAccum(t.MutableGrad(w.id), r, c, g, t.value(x));
                if (t.needs_grad(b)) {
                  auto gb = t.MutableGrad(b.id);
                  for (int i = 0; i < r; ++i) gb[i] += g[i];
                }
                if (t.needs_grad(x)) kernels::MatTVecAccum(t.value(w), r, c, g, t.MutableGrad(x.id));
              });
}

// ---------------------------------------------------------------------------
// Shape manipulation.

Var Tape::Concat(std::span<const Var> parts) {
  std::vector<double> out;
  std::vector<int> offsets;
  for (Var v : parts) {
    offsets.push_back(static_cast<int>(out.size()));
    auto x = value(v);
    out.insert(out.end(), x.begin(), x.end());
  }
  const int n = static_cast<int>(out.size());
  std::vector<Var> ps(parts.begin(), parts.end());
  return Push(std::move(out), n, 1, AnyNeedsGrad(parts),
              [ps = std::move(ps), offsets = std::move(offsets)](Tape& t, int self) {
                auto g = t.GradOut(self);
                for (std::size_t k = 0; k < ps.size(); ++k) {
                  if (!t.needs_grad(ps[k])) continue;
                  auto gp = t.MutableGrad(ps[k].id);
                  for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[offsets[k] + i];
                }
              });
}

Var Tape::Concat(std::initializer_list<Var> parts) {
  return Concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var Tape::Slice(Var a, int offset, int length) {
  if (offset < 0 || length < 0 || offset + length > size(a)) {
    throw Error("Slice out of range");
  }
  auto x = value(a);
  std::vector<double> out(x.begin() + offset, x.begin() + offset + length);
  return Push(std::move(out), length, 1, NG(a), [a, offset](Tape& t, int self) {
    auto g = t.GradOut(self);
    auto ga = t.MutableGrad(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[offset + i] += g[i];
  });
}

Var Tape::Row(Var m, int row) {
  const int c = cols(m);
  if (row < 0 || row >= rows(m)) throw Error("Row index out of range");
  auto x = value(m);
  std::vector<double> out(x.begin() + static_cast<std::size_t>(row) * c,
                          x.begin() + static_cast<std::size_t>(row + 1) * c);
  return Push(std::move(out), c, 1, NG(m), [m, row, c](Tape& t, int self) {
    auto g = t.GradOut(self);
    auto gm = t.MutableGrad(m.id);
    for (int i = 0; i < c; ++i) gm[static_cast<std::size_t>(row) * c + i] += g[i];
  });
}

Var Tape::Stack(std::span<const Var> row_vars) {
  if (row_vars.empty()) throw Error("Stack of nothing");
  const int c = size(row_vars[0]);
  std::vector<double> out;
  out.reserve(row_vars.size() * c);
  for (Var v : row_vars) {
    if (size(v) != c) throw Error("Stack rows differ in size");
    auto x = value(v);
    out.insert(out.end(), x.begin(), x.end());
  }
  std::vector<Var> ps(row_vars.begin(), row_vars.end());
  const int r = static_cast<int>(ps.size());
  return Push(std::move(out), r, c, AnyNeedsGrad(row_vars),
              [ps = std::move(ps), c](Tape& t, int self) {
                auto g = t.GradOut(self);
                for (std::size_t k = 0; k < ps.size(); ++k) {
                  if (!t.needs_grad(ps[k])) continue;
                  auto gp = t.MutableGrad(ps[k].id);
                  for (int i = 0; i < c; ++i) gp[i] += g[k * c + i];
                }
              });
}

Var Tape::Pad(Var a, int n) {
  if (n < size(a)) throw Error("Pad to a smaller size");
  std::vector<double> out(n, 0.0);
  auto x = value(a);
  std::copy(x.begin(), x.end(), out.begin());
  return Push(std::move(out), n, 1, NG(a), [a](Tape& t, int self) {
    auto g = t.GradOut(self);
    auto ga = t.MutableGrad(a.id);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
  });
}

Var Tape::ScatterAdd(Var src, std::span<const int> index, int n) {
  if (static_cast<int>(index.size()) != size(src)) throw Error("ScatterAdd size mismatch");
  std::vector<double> out(n, 0.0);
  auto x = value(src);
  for (std::size_t j = 0; j < index.size(); ++j) {
    if (index[j] < 0 || index[j] >= n) throw Error("ScatterAdd index out of range");
    out[index[j]] += x[j];
  }
  std::vector<int> idx(index.begin(), index.end());
  return Push(std::move(out), n, 1, NG(src), [src, idx = std::move(idx)](Tape& t, int self) {
    auto g = t.GradOut(self);
    auto gs = t.MutableGrad(src.id);
    for (std::size_t j = 0; j < idx.size(); ++j) gs[j] += g[idx[j]];
  });
}

// ---------------------------------------------------------------------------
// Normalizers.

Var Tape::Softmax(Var a) {
  std::vector<double> out = SoftmaxOf(value(a));
  return Push(std::move(out), size(a), 1, NG(a), [a](Tape& t, int self) {
    auto g = t.GradOut(self);
    auto y = t.ValueOf(self);
    double dot = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * y[i];
    auto ga = t.MutableGrad(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += y[i] * (g[i] - dot);
  });
}

Var Tape::LogSoftmax(Var a) {
  auto x = value(a);
  const double mx = *std::max_element(x.begin(), x.end());
  double z = 0.0;
  for (double v : x) z += std::exp(v - mx);
  const double lse = mx + std::log(z);
  std::vector<double> out(x.begin(), x.end());
  for (double& v : out) v -= lse;
  return Push(std::move(out), size(a), 1, NG(a), [a](Tape& t, int self) {
    auto g = t.GradOut(self);
    auto y = t.ValueOf(self);
    double gs = 0.0;
    for (double v : g) gs += v;
    auto ga = t.MutableGrad(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] - std::exp(y[i]) * gs;
  });
}

// ---------------------------------------------------------------------------
// Fused recurrent cell.

Var Tape::Gru(Var wx, Var wh, Var bx, Var bh, Var x, Var h) {
  const int hid = size(h);
  const int in = size(x);
  if (rows(wx) != 3 * hid || cols(wx) != in || rows(wh) != 3 * hid ||
      cols(wh) != hid || size(bx) != 3 * hid || size(bh) != 3 * hid) {
    throw Error("Gru parameter shape mismatch");
  }
  std::vector<double> gx(3 * hid), gh(3 * hid);
  kernels::MatVec(value(wx), 3 * hid, in, value(x), gx);
  kernels::MatVec(value(wh), 3 * hid, hid, value(h), gh);
  auto vbx = value(bx);
  auto vbh = value(bh);
  for (int i = 0; i < 3 * hid; ++i) {
    gx[i] += vbx[i];
    gh[i] += vbh[i];
  }
  // cache layout: r | u | n | (Wh_n h + bh_n)
  std::vector<double> cache(4 * hid);
  std::vector<double> out(hid);
  auto vh = value(h);
  for (int i = 0; i < hid; ++i) {
    const double r = 1.0 / (1.0 + std::exp(-(gx[i] + gh[i])));
    const double u = 1.0 / (1.0 + std::exp(-(gx[hid + i] + gh[hid + i])));
    const double n = std::tanh(gx[2 * hid + i] + r * gh[2 * hid + i]);
    cache[i] = r;
    cache[hid + i] = u;
    cache[2 * hid + i] = n;
    cache[3 * hid + i] = gh[2 * hid + i];
    out[i] = (1.0 - u) * n + u * vh[i];
  }
  const Var parents[] = {wx, wh, bx, bh, x, h};
  return Push(std::move(out), hid, 1, AnyNeedsGrad(parents),
              [wx, wh, bx, bh, x, h, hid, in, cache = std::move(cache)](Tape& t, int self) {
                auto g = t.GradOut(self);
                auto vh = t.value(h);
                std::vector<double> dgx(3 * hid), dgh(3 * hid);
                std::vector<double> dh_direct(hid);
                for (int i = 0; i < hid; ++i) {
                  const double r = cache[i], u = cache[hid + i], n = cache[2 * hid + i];
                  const double ghn = cache[3 * hid + i];
                  const double du = g[i] * (vh[i] - n);
                  const double dn = g[i] * (1.0 - u);
                  dh_direct[i] = g[i] * u;
                  const double dn_pre = dn * (1.0 - n * n);
                  const double dr = dn_pre * ghn;
                  const double dr_pre = dr * r * (1.0 - r);
                  const double du_pre = du * u * (1.0 - u);
                  dgx[i] = dr_pre;
                  dgx[hid + i] = du_pre;
                  dgx[2 * hid + i] = dn_pre;
                  dgh[i] = dr_pre;
                  dgh[hid + i] = du_pre;
                  dgh[2 * hid + i] = dn_pre * r;
                }
                if (t.needs_grad(wx)) kernels::OuterAccum(t.MutableGrad(wx.id), 3 * hid, in, dgx, t.value(x));
                if (t.needs_grad(wh)) kernels::OuterAccum(t.MutableGrad(wh.id), 3 * hid, hid, dgh, vh);
                if (t.needs_grad(bx)) {
                  auto gb = t.MutableGrad(bx.id);
                  for (int i = 0; i < 3 * hid; ++i) gb[i] += dgx[i];
                }
                if (t.needs_grad(bh)) {
                  auto gb = t.MutableGrad(bh.id);
                  for (int i = 0; i < 3 * hid; ++i) gb[i] += dgh[i];
                }
                if (t.needs_grad(x)) kernels::MatTVecAccum(t.value(wx), 3 * hid, in, dgx, t.MutableGrad(x.id));
                if (t.needs_grad(h)) {
                  auto ghv = t.MutableGrad(h.id);
                  for (int i = 0; i < hid; ++i) ghv[i] += dh_direct[i];
                  kernels::MatTVecAccum(t.value(wh), 3 * hid, hid, dgh, ghv);
                }
              });
}

// ---------------------------------------------------------------------------
// Straight-through categorical embedding.

Var Tape::EmbedST(Var table, Var soft, int hard, std::span<const int> map,
                  std::span<const double> anchor) {
  const int n = size(soft);
  const int dim = cols(table);
  if (static_cast<int>(map.size()) != n) throw Error("EmbedST map size mismatch");
  if (hard < 0 || hard >= n || map[hard] < 0) throw Error("EmbedST hard index not embeddable");
  if (!anchor.empty() && static_cast<int>(anchor.size()) != n) {
    throw Error("EmbedST anchor size mismatch");
  }
  auto e = value(table);
  auto s = value(soft);
  std::vector<double> out(e.begin() + static_cast<std::size_t>(map[hard]) * dim,
                          e.begin() + static_cast<std::size_t>(map[hard] + 1) * dim);
  std::vector<double> delta(n, 0.0);
  if (!anchor.empty()) {
    for (int v = 0; v < n; ++v) {
      if (map[v] < 0) continue;
      delta[v] = s[v] - anchor[v];
      if (delta[v] == 0.0) continue;
      const double* row = e.data() + static_cast<std::size_t>(map[v]) * dim;
      for (int k = 0; k < dim; ++k) out[k] += delta[v] * row[k];
    }
  }
  std::vector<int> m(map.begin(), map.end());
  return Push(std::move(out), dim, 1, NG(table) || NG(soft),
              [table, soft, hard, dim, m = std::move(m), delta = std::move(delta)](Tape& t, int self) {
                auto g = t.GradOut(self);
                if (t.needs_grad(soft)) {
                  auto e = t.value(table);
                  auto gs = t.MutableGrad(soft.id);
                  for (std::size_t v = 0; v < m.size(); ++v) {
                    if (m[v] < 0) continue;
                    const double* row = e.data() + static_cast<std::size_t>(m[v]) * dim;
                    double d = 0.0;
                    for (int k = 0; k < dim; ++k) d += row[k] * g[k];
                    gs[v] += d;
                  }
                }
                if (t.needs_grad(table)) {
                  auto ge = t.MutableGrad(table.id);
                  auto add_row = [&](int row, double w) {
                    double* dst = ge.data() + static_cast<std::size_t>(row) * dim;
                    for (int k = 0; k < dim; ++k) dst[k] += w * g[k];
                  };
                  add_row(m[hard], 1.0);
                  for (std::size_t v = 0; v < m.size(); ++v) {
                    if (m[v] >= 0 && delta[v] != 0.0) add_row(m[v], delta[v]);
                  }
                }
              });
}

Var Tape::Custom(std::span<const Var> parents, std::vector<double> value, int r,
                 int c, BackwardFn fn) {
  return Push(std::move(value), r, c, AnyNeedsGrad(parents), std::move(fn));
}

}  // namespace tqa::ad
