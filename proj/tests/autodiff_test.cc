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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "test_util.h"

namespace tqa::ad {
namespace {

using testing::MaxGradError;
using testing::RandomVector;
using Vars = std::vector<Var>;

constexpr double kTol = 1e-6;

// Weighted sum so every output entry contributes a distinct gradient.
Var Probe(Tape& t, Var v) {
  std::vector<double> w(t.size(v));
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.3 + 0.17 * static_cast<double>(i);
  return t.Dot(v, t.Constant(w));
}

TEST(AutodiffTest, ElementwiseOps) {
  const auto a = RandomVector(5, 1), b = RandomVector(5, 2);
  EXPECT_LT(MaxGradError({a, b}, [](Tape& t, const Vars& v) {
              Var x = t.Add(t.Mul(v[0], v[1]), t.Sub(t.Tanh(v[0]), t.Sigmoid(v[1])));
              x = t.Add(x, t.Exp(t.Scale(v[0], 0.5)));
              return Probe(t, t.AddScalar(t.OneMinus(x), 2.0));
            }),
            kTol);
  const auto p = std::vector<double>{0.2, 0.4, 0.9, 0.05};
  EXPECT_LT(MaxGradError({p}, [](Tape& t, const Vars& v) {
              return Probe(t, t.Add(t.Log(v[0]), t.Log1mClamped(v[0], 1e-6)));
            }),
            kTol);
}

TEST(AutodiffTest, ClampBlocksOutsideRange) {
  Tape t;
  Var x = t.Input({-3.0, 0.5, 4.0});
  Var y = t.Clamp(x, -1.0, 1.0);
  EXPECT_EQ(std::vector<double>(t.value(y).begin(), t.value(y).end()), (std::vector<double>{-1, 0.5, 1}));
  t.Backward(t.Sum(y));
  EXPECT_EQ(t.grad(x), (std::vector<double>{0, 1, 0}));
}

TEST(AutodiffTest, SaturatedLogCountsAndStaysFinite) {
  Tape t;
  Var p = t.Input({1.0, 0.3});
  Var y = t.Log1mClamped(p, 1e-6);
  EXPECT_EQ(t.saturations(), 1);
  EXPECT_EQ(t.value(y)[0], std::log(1.0 - (1.0 - 1e-6)));
  t.Backward(t.Sum(y));
  EXPECT_EQ(t.grad(p)[0], 0.0);
}

TEST(AutodiffTest, ReductionsAndProducts) {
  const auto m = RandomVector(12, 3), x = RandomVector(4, 4), y = RandomVector(3, 5), s = RandomVector(1, 6);
  EXPECT_LT(MaxGradError({m, x, y, s}, [](Tape& t, const Vars& v) {
              Var a = t.MatVec(v[0], v[1]);
              Var b = t.MatTVec(v[0], v[2]);
              Var c = t.Affine(v[0], v[2], v[1]);
              Var terms[] = {t.Dot(a, c), t.Sum(b), t.Pick(a, 1), t.Sum(t.ScaleBy(v[3], v[1]))};
              return t.AddN(terms);
            }, {3, 0, 0, 0}),
            kTol);
}

TEST(AutodiffTest, ShapeOps) {
  const auto m = RandomVector(6, 7), x = RandomVector(3, 8);
  EXPECT_LT(MaxGradError({m, x}, [](Tape& t, const Vars& v) {
              Var r0 = t.Row(v[0], 0), r1 = t.Row(v[0], 1);
              Var st = t.Stack(std::vector<Var>{r1, v[1], r0});
              Var cat = t.Concat({t.Slice(v[1], 1, 2), r0, t.Pad(r1, 5)});
              const int idx[] = {0, 2, 0};
              Var sc = t.ScatterAdd(v[1], idx, 4);
              return t.Add(t.Add(Probe(t, st), Probe(t, cat)), Probe(t, sc));
            }, {2, 0}),
            kTol);
}

TEST(AutodiffTest, Normalizers) {
  const auto a = RandomVector(6, 9, 3.0);
  EXPECT_LT(MaxGradError({a}, [](Tape& t, const Vars& v) {
              return t.Add(Probe(t, t.Softmax(v[0])), Probe(t, t.LogSoftmax(v[0])));
            }),
            kTol);
  Tape t;
  Var s = t.Softmax(t.Constant({1000.0, 0.0, -1000.0}));
  EXPECT_NEAR(t.value(s)[0], 1.0, 1e-15);
}

TEST(AutodiffTest, GruCell) {
  const int in = 3, hid = 2;
  const auto wx = RandomVector(3 * hid * in, 10), wh = RandomVector(3 * hid * hid, 11);
  const auto bx = RandomVector(3 * hid, 12), bh = RandomVector(3 * hid, 13);
  const auto x = RandomVector(in, 14), h = RandomVector(hid, 15);
  EXPECT_LT(MaxGradError({wx, wh, bx, bh, x, h}, [](Tape& t, const Vars& v) {
              Var h1 = t.Gru(v[0], v[1], v[2], v[3], v[4], v[5]);
              return Probe(t, t.Gru(v[0], v[1], v[2], v[3], v[4], h1));
            }, {3 * hid, 3 * hid, 0, 0, 0, 0}),
            kTol);
}

TEST(AutodiffTest, GruMatchesScalarFormula) {
  // One input, one hidden unit: gate rows are r, u, n.
  const double wx[] = {0.3, -0.2, 0.5}, wh[] = {0.1, 0.4, -0.6}, bx[] = {0.05, 0.0, -0.1},
               bh[] = {0.2, -0.3, 0.15};
  const double x = 0.7, h = -0.4;
  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  const double r = sig(wx[0] * x + bx[0] + wh[0] * h + bh[0]);
  const double u = sig(wx[1] * x + bx[1] + wh[1] * h + bh[1]);
  const double n = std::tanh(wx[2] * x + bx[2] + r * (wh[2] * h + bh[2]));
  Tape t;
  Var out = t.Gru(t.Constant({wx[0], wx[1], wx[2]}, 3, 1), t.Constant({wh[0], wh[1], wh[2]}, 3, 1),
                  t.Constant({bx[0], bx[1], bx[2]}), t.Constant({bh[0], bh[1], bh[2]}), t.Constant({x}),
                  t.Constant({h}));
  EXPECT_NEAR(t.scalar(out), (1 - u) * n + u * h, 1e-15);
}

TEST(AutodiffTest, StraightThroughForwardIsHardRow) {
  Tape t;
  const auto table = RandomVector(8, 16);
  Var e = t.Constant(table, 4, 2);
  Var soft = t.Input({0.1, 0.6, 0.2, 0.1});
  const int map[] = {0, 1, 2, 3};
  Var y = t.EmbedST(e, soft, 2, map);
  EXPECT_EQ(t.value(y)[0], table[4]);
  EXPECT_EQ(t.value(y)[1], table[5]);
  t.Backward(Probe(t, y));
  // d/dsoft_v = table[v] . w
  const auto g = t.grad(soft);
  for (int v = 0; v < 4; ++v) EXPECT_NEAR(g[v], table[2 * v] * 0.3 + table[2 * v + 1] * 0.47, 1e-14);
}

TEST(AutodiffTest, StraightThroughWithAnchorAndBlockedEntries) {
  const auto table = RandomVector(10, 17);
  const std::vector<double> anchor = {0.2, 0.3, 0.1, 0.25, 0.15};
  const int map[] = {0, 1, -1, 3, 4};
  EXPECT_LT(MaxGradError({table, {0.21, 0.28, 0.12, 0.24, 0.15}}, [&](Tape& t, const Vars& v) {
              return Probe(t, t.EmbedST(v[0], v[1], 1, map, anchor));
            }, {5, 0}),
            kTol);
  Tape t;
  Var soft = t.Input(anchor);
  t.Backward(Probe(t, t.EmbedST(t.Constant(table, 5, 2), soft, 1, map, anchor)));
  EXPECT_EQ(t.grad(soft)[2], 0.0);
  EXPECT_THROW(t.EmbedST(t.Constant(table, 5, 2), soft, 2, map), Error);
}

TEST(AutodiffTest, ParamsBindOnlyToTheirOwnStore) {
  ParamStore a, b;
  a.Add("w", 2, 1);
  b.Add("w", 2, 1);
  a.at(0).value = {1.0, 2.0};
  b.at(0).value = {3.0, 4.0};
  GradSink sink(a);
  Tape t(&sink);
  Var pa = t.Param(a, 0), pb = t.Param(b, 0);
  EXPECT_TRUE(t.needs_grad(pa));
  EXPECT_FALSE(t.needs_grad(pb));
  t.Backward(t.Dot(pa, pb));
  EXPECT_EQ(sink.Grad(0)[0], 3.0);
  EXPECT_EQ(sink.Grad(0)[1], 4.0);
  // The same leaf is shared across repeated lookups.
  Tape t2(&sink);
  sink.Zero();
  Var p1 = t2.Param(a, 0), p2 = t2.Param(a, 0);
  EXPECT_EQ(p1.id, p2.id);
  t2.Backward(t2.Sum(t2.Add(p1, p2)));
  EXPECT_EQ(sink.Grad(0)[0], 2.0);
}

TEST(AutodiffTest, CustomOpPropagates) {
  Tape t;
  Var x = t.Input({2.0, 3.0});
  Var sq = t.Custom(std::vector<Var>{x}, {13.0}, 1, 1, [x](Tape& tp, int self) {
    auto g = tp.GradOut(self)[0];
    auto v = tp.value(x);
    tp.MutableGrad(x.id)[0] += 2 * v[0] * g;
    tp.MutableGrad(x.id)[1] += 2 * v[1] * g;
  });
  t.Backward(t.Scale(sq, 3.0));
  EXPECT_EQ(t.grad(x), (std::vector<double>{12.0, 18.0}));
}

TEST(AdamTest, FirstStepMovesByLearningRate) {
  ParamStore s;
  s.Add("w", 2, 1);
  s.at(0).value = {1.0, -1.0};
  GradSink g(s);
  g.Grad(0)[0] = 5.0;
  g.Grad(0)[1] = -0.01;
  Adam adam(s, 0.1);
  adam.Step(g);
  EXPECT_NEAR(s.at(0).value[0], 0.9, 1e-6);
  EXPECT_NEAR(s.at(0).value[1], -0.9, 1e-5);
}

TEST(CheckpointTest, RoundTripAndVocabHash) {
  ParamStore s;
  s.Add("w", 2, 3);
  s.at(0).value = RandomVector(6, 18);
  CheckpointHeader h;
  h.kind = "demo";
  h.dims = {2, 3};
  h.vocabs = {{"a", "b"}};
  const auto path = (testing::TempDir("ckpt") / "c.bin").string();
  WriteCheckpoint(path, h, s);
  ParamStore back;
  back.Add("w", 2, 3);
  const auto hb = ReadCheckpoint(path, back);
  EXPECT_EQ(hb.kind, "demo");
  EXPECT_EQ(hb.vocabs, h.vocabs);
  EXPECT_EQ(back.Flatten(), s.Flatten());
  ParamStore wrong;
  wrong.Add("w", 3, 3);
  EXPECT_THROW(ReadCheckpoint(path, wrong), Error);
}

}  // namespace
}  // namespace tqa::ad
