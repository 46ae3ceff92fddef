// Copyright 2026 The QR Codec Authors.
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

// Acceptance gate: prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qrc/checkpoint.h"
#include "qrc/codec.h"
#include "qrc/entropy_model.h"
#include "qrc/grad_check.h"
#include "qrc/layers.h"
#include "qrc/losses.h"
#include "qrc/metrics.h"
#include "qrc/ops.h"
#include "qrc/range_coder.h"
#include "qrc/synthetic.h"
#include "qrc/training.h"
#include "coding_oracle.h"
#include "oracles.h"
#include "test_util.h"

namespace qrc {
namespace {

using testing::RandomTensor;

struct Outcome {
  bool pass = true;
  std::string detail;

  void Require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void Note(const std::string& what) {
    detail += (detail.empty() ? "" : "; ") + what;
  }
};

std::string Fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

// ---------------------------------------------------------------------------
// Gradient suite.

enum class Domain { kAny, kPositive, kAwayFromKinks };

Tensor Draw(const Shape& shape, Domain domain, Rng& rng) {
  Tensor t(shape);
  for (Real& v : t.mutable_data()) {
    switch (domain) {
      case Domain::kAny:
        v = rng.Uniform(-2, 2);
        break;
      case Domain::kPositive:
        v = rng.Uniform(0.5, 2);
        break;
      case Domain::kAwayFromKinks: {
        const Real m = rng.Uniform01() < 0.5 ? rng.Uniform(0.1, 0.9)
                                             : rng.Uniform(1.1, 2.0);
        v = rng.Uniform01() < 0.5 ? -m : m;
        break;
      }
    }
  }
  return t;
}

using CaseGraph = std::function<Tensor(std::span<const Tensor>, int)>;

struct Primitive {
  std::string name;
  std::vector<std::vector<Shape>> cases;
  CaseGraph f;
  Domain domain = Domain::kAny;
};

// Weighted sum so every output element carries a distinct gradient.
Tensor Project(const Tensor& out, uint64_t seed) {
  Tensor w;
  {
    NoGradScope no_grad;
    w = RandomTensor(out.shape(), seed, -1, 1);
  }
  return Sum(Mul(out, w));
}

std::vector<std::vector<Shape>> Unary(std::vector<Shape> shapes) {
  std::vector<std::vector<Shape>> out;
  for (Shape& s : shapes) out.push_back({s});
  return out;
}

std::vector<Primitive> Primitives() {
  const auto unary = Unary({{5}, {2, 3}, {2, 2, 3}});
  const std::vector<std::vector<Shape>> binary = {
      {{3, 4}, {3, 4}}, {{2, 3, 2}, {3, 2}}, {{1, 2, 2, 2}, {2, 2}}};
  auto one = [](Tensor (*op)(const Tensor&)) -> CaseGraph {
    return [op](std::span<const Tensor> in, int) { return op(in[0]); };
  };
  auto two = [](Tensor (*op)(const Tensor&, const Tensor&)) -> CaseGraph {
    return [op](std::span<const Tensor> in, int) { return op(in[0], in[1]); };
  };
  std::vector<Primitive> p;
  p.push_back({"conv2d",
               {{{1, 2, 5, 5}, {3, 2, 3, 3}, {3}},
                {{2, 3, 6, 7}, {2, 3, 5, 5}, {2}},
                {{1, 1, 4, 4}, {2, 1, 1, 1}, {2}}},
               [](std::span<const Tensor> in, int c) {
                 const Conv2dOptions o[] = {{1, 1}, {2, 2}, {1, 0}};
                 return Conv2d(in[0], in[1], in[2], o[c]);
               }});
  p.push_back({"conv_transpose2d",
               {{{1, 2, 3, 3}, {2, 3, 3, 3}, {3}},
                {{2, 3, 3, 4}, {3, 2, 5, 5}, {2}},
                {{1, 1, 2, 2}, {1, 2, 4, 4}, {2}}},
               [](std::span<const Tensor> in, int c) {
                 const ConvTranspose2dOptions o[] = {{1, 1, 0}, {2, 2, 1},
                                                     {2, 1, 0}};
                 return ConvTranspose2d(in[0], in[1], in[2], o[c]);
               }});
  p.push_back({"matmul",
               {{{3, 4}, {4, 2}}, {{2, 3, 4}, {4, 5}}, {{2, 2, 3}, {2, 3, 2}}},
               two(MatMul)});
  p.push_back({"add", binary, two(Add)});
  p.push_back({"sub", binary, two(Sub)});
  p.push_back({"mul", binary, two(Mul)});
  p.push_back({"div", binary, two(Div), Domain::kPositive});
  p.push_back({"scale", unary, [](std::span<const Tensor> in, int) {
                 return Scale(in[0], 1.7);
               }});
  p.push_back({"add_scalar", unary, [](std::span<const Tensor> in, int) {
                 return AddScalar(in[0], -0.3);
               }});
  p.push_back({"leaky_relu", unary,
               [](std::span<const Tensor> in, int) {
                 return LeakyRelu(in[0], kLeakySlope);
               },
               Domain::kAwayFromKinks});
  p.push_back({"sigmoid", unary, one(Sigmoid)});
  p.push_back({"exp", unary, one(Exp)});
  p.push_back({"log", unary, one(Log), Domain::kPositive});
  p.push_back({"square", unary, one(Square)});
  p.push_back({"abs", unary, one(Abs), Domain::kAwayFromKinks});
  p.push_back({"smooth_l1", unary, one(SmoothL1), Domain::kAwayFromKinks});
  p.push_back({"pow", unary,
               [](std::span<const Tensor> in, int) { return Pow(in[0], 0.7); },
               Domain::kPositive});
  p.push_back({"clamp_min", unary,
               [](std::span<const Tensor> in, int) {
                 return ClampMin(in[0], 0.0);
               },
               Domain::kAwayFromKinks});
  p.push_back({"sum", unary, one(Sum)});
  p.push_back({"mean", unary, one(Mean)});
  p.push_back({"sum_last_axis", unary, one(SumLastAxis)});
  p.push_back({"mean_last_axis", unary, one(MeanLastAxis)});
  p.push_back({"l2_norm", unary, one(L2Norm)});
  p.push_back({"reshape", Unary({{2, 3}, {2, 2, 3}, {1, 2, 2, 2}}),
               [](std::span<const Tensor> in, int c) {
                 const Shape to[] = {{3, 2}, {4, 3}, {8}};
                 return Reshape(in[0], to[c]);
               }});
  p.push_back({"permute", Unary({{2, 3}, {2, 3, 4}, {1, 2, 3, 2}}),
               [](std::span<const Tensor> in, int c) {
                 const std::vector<int> order[] = {{1, 0}, {2, 0, 1},
                                                   {0, 2, 3, 1}};
                 return Permute(in[0], order[c]);
               }});
  p.push_back({"concat_channels",
               {{{1, 2, 2}, {1, 3, 2}},
                {{2, 1, 3, 3}, {2, 2, 3, 3}},
                {{1, 1, 2, 2}, {1, 1, 2, 2}}},
               [](std::span<const Tensor> in, int) {
                 return ConcatChannels(in.subspan(0, 2));
               }});
  p.push_back({"slice_channels", Unary({{1, 4, 2}, {2, 3, 2, 2}, {1, 5, 1, 3}}),
               [](std::span<const Tensor> in, int c) {
                 const int64_t begin[] = {1, 0, 2}, count[] = {2, 1, 3};
                 return SliceChannels(in[0], begin[c], count[c]);
               }});
  p.push_back({"layer_norm",
               {{{3, 4}, {4}, {4}}, {{2, 2, 5}, {5}, {5}}, {{1, 3, 2, 3}, {3}, {3}}},
               [](std::span<const Tensor> in, int) {
                 return LayerNorm(in[0], in[1], in[2]);
               }});
  p.push_back({"softmax", Unary({{4}, {2, 5}, {2, 2, 3}}), one(Softmax)});
  p.push_back({"add_uniform_noise", unary,
               [](std::span<const Tensor> in, int) {
                 Rng rng(5);
                 return AddUniformNoise(in[0], rng);
               }});
  p.push_back({"logistic_bin_mass",
               {{{1, 2, 3, 3}, {2}, {2}},
                {{2, 3, 2, 1}, {3}, {3}},
                {{1, 1, 4, 4}, {1}, {1}}},
               [](std::span<const Tensor> in, int) {
                 return LogisticBinMass(in[0], in[1], Scale(in[2], 0.5));
               }});
  return p;
}

struct GradRow {
  std::string name;
  int cases = 0;
  Real worst = 0;
};

Real CheckGraph(const std::function<Tensor()>& f, std::vector<Tensor> inputs,
                int64_t max_entries, uint64_t seed) {
  for (Tensor& t : inputs) t.set_requires_grad(true);
  GradCheckOptions opts;
  opts.max_entries_per_input = max_entries;
  opts.seed = seed;
  return GradCheck([&](std::span<const Tensor>) { return f(); }, inputs, opts)
      .max_rel_error;
}

std::vector<Tensor> WithParams(std::vector<Tensor> inputs,
                               const ParameterList& params) {
  for (const NamedParameter& p : params) inputs.push_back(p.tensor);
  return inputs;
}

void Perturb(const ParameterList& params, uint64_t seed, Real amount) {
  Rng rng(seed);
  for (const NamedParameter& p : params) {
    for (Real& v : p.tensor.impl()->data) v += rng.Uniform(-amount, amount);
  }
}

std::vector<GradRow> CompositeRows() {
  std::vector<GradRow> rows;
  auto add = [&rows](const std::string& name, Real err) {
    if (rows.empty() || rows.back().name != name) rows.push_back({name});
    ++rows.back().cases;
    rows.back().worst = std::max(rows.back().worst, err);
  };
  const int64_t kEntries = 10;

  const int res_channels[] = {2, 4, 3};
  const Shape res_shapes[] = {{1, 2, 3, 3}, {1, 4, 2, 5}, {2, 3, 4, 4}};
  for (int c = 0; c < 3; ++c) {
    Rng rng(100 + c);
    ResBlock block(res_channels[c], rng);
    ParameterList params;
    block.CollectParameters("res", params);
    const Tensor x = RandomTensor(res_shapes[c], 110 + c);
    add("res_block",
        CheckGraph([&] { return Project(block.Forward(x), 120 + c); },
                   WithParams({x}, params), kEntries, c));
  }

  const int groups[][2] = {{2, 2}, {3, 2}, {2, 3}};
  const Shape grouped_shapes[] = {{1, 4, 3, 3}, {1, 6, 2, 2}, {2, 6, 3, 2}};
  for (int c = 0; c < 3; ++c) {
    Rng rng(200 + c);
    GroupedResBlocks g(groups[c][0], groups[c][1], rng);
    ParameterList params;
    g.CollectParameters("grouped", params);
    const Tensor x = RandomTensor(grouped_shapes[c], 210 + c);
    add("grouped_res_blocks",
        CheckGraph([&] { return Project(g.Forward(x), 220 + c); },
                   WithParams({x}, params), kEntries, c));
  }

  const int heads[][3] = {{4, 2, 2}, {6, 3, 2}, {8, 2, 4}};
  const Shape attention_shapes[] = {{1, 4, 3, 3}, {1, 6, 2, 4}, {2, 8, 2, 2}};
  for (int c = 0; c < 3; ++c) {
    Rng rng(300 + c);
    MultiHeadAttention mha(heads[c][0], heads[c][1], heads[c][2], rng);
    ParameterList params;
    mha.CollectParameters("attention", params);
    const Tensor x = RandomTensor(attention_shapes[c], 310 + c);
    add("attention",
        CheckGraph([&] { return Project(mha.Forward(x), 320 + c); },
                   WithParams({x}, params), kEntries, c));
  }

  ArchitectureConfig tiny = ArchitectureConfig::Tiny();
  const Shape latent_shapes[] = {{1, 8, 3, 3}, {2, 8, 2, 4}, {1, 8, 4, 1}};
  for (int c = 0; c < 3; ++c) {
    Rng rng(400 + c);
    QRBlock block(tiny, rng);
    ParameterList params;
    block.CollectParameters("qr", params);
    Perturb(params, 405 + c, 0.3);
    const Tensor y = RandomTensor(latent_shapes[c], 410 + c, -3, 3);
    add("qr_block",
        CheckGraph([&] { return Project(block.Forward(y), 420 + c); },
                   WithParams({y}, params), kEntries, c));
  }

  const Shape image_shapes[] = {{1, 3, 8, 8}, {1, 3, 16, 8}, {2, 3, 8, 16}};
  const Shape decoder_shapes[] = {{1, 8, 1, 1}, {1, 8, 2, 1}, {2, 8, 1, 2}};
  for (int c = 0; c < 3; ++c) {
    Rng rng(500 + c);
    CodecModel model(tiny, rng);
    const Tensor x = RandomTensor(image_shapes[c], 510 + c, 0, 1);
    add("encoder", CheckGraph(
                       [&] { return Project(model.EncodeAnalysis(x), 520 + c); },
                       WithParams({x}, model.AnalysisParameters()), kEntries, c));
  }
  for (int c = 0; c < 3; ++c) {
    Rng rng(600 + c);
    CodecModel model(tiny, rng);
    const Tensor z = RandomTensor(decoder_shapes[c], 610 + c, -2, 2);
    add("decoder",
        CheckGraph([&] { return Project(model.DecodeSynthesis(z), 620 + c); },
                   WithParams({z}, model.DecoderParameters()), kEntries, c));
  }

  struct LossShape {
    Shape image, latent;
    DistortionKind kind;
  };
  const LossShape loss_shapes[] = {
      {{1, 3, 8, 8}, {1, 2, 1, 1}, DistortionKind::kMse},
      {{2, 3, 16, 8}, {2, 4, 2, 1}, DistortionKind::kMse},
      {{1, 2, 44, 46}, {1, 3, 2, 2}, DistortionKind::kMsSsim}};
  for (int c = 0; c < 3; ++c) {
    const LossShape& s = loss_shapes[c];
    FactorizedEntropyModel entropy(static_cast<int>(s.latent[1]));
    for (int k = 0; k < entropy.channels(); ++k) {
      entropy.SetChannel(k, 0.2 * k - 0.3, 0.8 + k);
    }
    ParameterList params;
    entropy.CollectParameters("entropy", params);
    const Tensor x = RandomTensor(s.image, 700 + c, 0.1, 0.9);
    const Tensor y = RandomTensor(s.latent, 710 + c, -2, 2);
    const Tensor x_hat = RandomTensor(s.image, 720 + c, 0.1, 0.9);
    const Tensor y_noisy = RandomTensor(s.latent, 730 + c, -2, 2);
    const Tensor y_tilde = RandomTensor(s.latent, 740 + c, -2, 2);
    LossWeights w;
    w.lambda = s.kind == DistortionKind::kMse ? 0.0067 : 8.73;
    w.alpha = 0.05;
    w.distortion = s.kind;
    add("soft_loss", CheckGraph(
                         [&] {
                           return SoftLoss(x, x_hat, y_noisy, y, y_tilde,
                                           entropy, w)
                               .total;
                         },
                         WithParams({x_hat, y_noisy, y_tilde}, params),
                         kEntries, c));
  }
  for (int c = 0; c < 3; ++c) {
    const LossShape& s = loss_shapes[c];
    const Tensor x = RandomTensor(s.image, 800 + c, 0.1, 0.9);
    const Tensor y = RandomTensor(s.latent, 810 + c, -2, 2);
    const Tensor x_hat = RandomTensor(s.image, 820 + c, 0.1, 0.9);
    const Tensor y_tilde = RandomTensor(s.latent, 830 + c, -2, 2);
    LossWeights w;
    w.alpha = 0.05;
    w.distortion = s.kind;
    add("predictive_loss",
        CheckGraph([&] { return PredictiveLoss(x, x_hat, y, y_tilde, w).total; },
                   {x_hat, y_tilde}, kEntries, c));
  }
  return rows;
}

Outcome GradientSuite() {
  const auto start = std::chrono::steady_clock::now();
  std::vector<GradRow> rows;
  for (const Primitive& p : Primitives()) {
    GradRow row{p.name};
    for (size_t c = 0; c < p.cases.size(); ++c) {
      Rng rng(1000 + c);
      std::vector<Tensor> inputs;
      for (const Shape& s : p.cases[c]) inputs.push_back(Draw(s, p.domain, rng));
      const int ci = static_cast<int>(c);
      const Real err = CheckGraph(
          [&] { return Project(p.f(inputs, ci), 2000 + c); }, inputs, 0, c);
      row.worst = std::max(row.worst, err);
      ++row.cases;
    }
    rows.push_back(row);
  }
  for (const GradRow& r : CompositeRows()) rows.push_back(r);

  Outcome o;
  Real worst = 0;
  std::string worst_name;
  for (const GradRow& r : rows) {
    o.Require(r.cases >= 3, r.name + " has fewer than 3 shapes");
    o.Require(r.worst <= 1e-4, r.name + " relative error " + Fmt("%.3g", r.worst));
    if (r.worst >= worst) {
      worst = r.worst;
      worst_name = r.name;
    }
  }
  const double secs = Seconds(start);
  o.Require(secs < 120, "runtime " + Fmt("%.1f", secs) + " s");
  o.Note(std::to_string(rows.size()) + " ops/blocks x 3 shapes, worst " +
         Fmt("%.2e", worst) + " (" + worst_name + "), " + Fmt("%.1f", secs) +
         " s");
  return o;
}

// ---------------------------------------------------------------------------
// Range coder.

// Ideal cost in bits: -log2 of the table frequency, plus 16 raw bits for
// escaped values.
double IdealBits(const testing::Case& c) {
  double bits = 0;
  for (size_t i = 0; i < c.symbols.size(); ++i) {
    const CdfTable& t = c.tables[c.channels[i]];
    const int32_t s = c.symbols[i];
    const bool inside = s >= t.lo && s <= t.hi();
    const int32_t slot = inside ? s - t.lo : t.escape_slot();
    bits -= std::log2(static_cast<double>(t.cdf[slot + 1] - t.cdf[slot]) /
                      kProbabilityTotal);
    if (!inside) bits += 16;
  }
  return bits;
}

Outcome RangeCoder() {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  Rng rng(77);
  int mismatches = 0;
  for (int i = 0; i < 10000; ++i) {
    const testing::Case c = testing::RandomCase(rng, 300);
    const std::vector<uint8_t> bytes =
        RangeEncodeSymbols(c.symbols, c.channels, c.tables);
    if (RangeDecodeSymbols(bytes, c.tables, c.channels) != c.symbols) {
      ++mismatches;
    }
  }
  o.Require(mismatches == 0, std::to_string(mismatches) + " fuzz mismatches");

  int oracle_bad = 0;
  for (int i = 0; i < 500; ++i) {
    const testing::Case c = testing::RandomCase(rng, 64);
    const std::vector<uint8_t> bytes =
        RangeEncodeSymbols(c.symbols, c.channels, c.tables);
    try {
      if (testing::OracleDecode(bytes, c) != c.symbols) ++oracle_bad;
    } catch (const std::exception&) {
      ++oracle_bad;
    }
  }
  o.Require(oracle_bad == 0,
            std::to_string(oracle_bad) + " oracle decode mismatches");

  double worst_gap = 0;
  int streams = 0;
  while (streams < 300) {
    const testing::Case c = testing::RandomCase(rng, 2000);
    if (c.symbols.size() < 100) continue;
    ++streams;
    const std::vector<uint8_t> bytes =
        RangeEncodeSymbols(c.symbols, c.channels, c.tables);
    worst_gap =
        std::max(worst_gap, std::abs(8.0 * bytes.size() - IdealBits(c)));
  }
  o.Require(worst_gap <= 64, "rate gap " + Fmt("%.1f", worst_gap) + " bits");
  const double secs = Seconds(start);
  o.Require(secs < 60, "runtime " + Fmt("%.1f", secs) + " s");
  o.Note("10000 fuzz roundtrips, 500 oracle decodes, worst rate gap " +
         Fmt("%.1f", worst_gap) + " bits over " + std::to_string(streams) +
         " streams, " + Fmt("%.1f", secs) + " s");
  return o;
}

// ---------------------------------------------------------------------------
// Entropy model.

Outcome EntropyModel() {
  Outcome o;
  FactorizedEntropyModel e(1);
  e.SetChannel(0, 0.0, 1.0);
  const Real pmf0 = e.Pmf(0, 0);
  const Real expected = 1.0 / (1.0 + std::exp(-0.5)) - 1.0 / (1.0 + std::exp(0.5));
  o.Require(std::abs(pmf0 - 0.24492) <= 1e-5,
            "pmf(0; 0, 1) = " + Fmt("%.8f", pmf0));
  o.Require(std::abs(pmf0 - expected) <= 1e-12, "closed form mismatch");
  o.Require(std::abs(e.Pmf(1, 0) - (1 / (1 + std::exp(-1.5)) -
                                    1 / (1 + std::exp(-0.5)))) <= 1e-12,
            "pmf(1; 0, 1)");

  Rng rng(9);
  const int kChannels = 64;
  FactorizedEntropyModel m(kChannels);
  for (int c = 0; c < kChannels; ++c) {
    m.SetChannel(c, rng.Uniform(-20, 20), std::exp(rng.Uniform(-3, 4)));
  }
  Real worst = 0;
  int tables_ok = 0;
  for (int c = 0; c < kChannels; ++c) {
    const SymbolRange r = m.Range(c);
    Real inside = 0;
    for (int64_t k = r.lo; k <= r.hi; ++k) inside += m.Pmf(k, c);
    worst = std::max(worst, std::abs(inside + m.EscapeMass(c) - 1.0));
    // the same sum over a window wide enough to hold every tail
    const int64_t pad = 64 * static_cast<int64_t>(
                                 std::ceil(std::exp(m.log_scale()[c]))) + 64;
    Real all = 0;
    for (int64_t k = r.lo - pad; k <= r.hi + pad; ++k) all += m.Pmf(k, c);
    worst = std::max(worst, std::abs(all - 1.0));
    const CdfTable t = m.QuantizedCdfTable(c);
    tables_ok += t.cdf.back() == kProbabilityTotal;
  }
  o.Require(worst <= 1e-6, "normalization error " + Fmt("%.3g", worst));
  o.Require(tables_ok == kChannels, "quantized table totals");
  o.Note("pmf(0; 0, 1) = " + Fmt("%.6f", pmf0) + ", worst normalization error " +
         Fmt("%.2e", worst) + " over " + std::to_string(kChannels) +
         " channels");
  return o;
}

// ---------------------------------------------------------------------------
// Toy training shared by several criteria.

struct StpRun {
  CodecModel soft;   // after the soft phase
  CodecModel final;  // after the predictive phase
  uint64_t frozen_before = 0;
  uint64_t frozen_after = 0;
  int soft_epochs = 0;
  int predictive_epochs = 0;
  double seconds = 0;
};

TrainingConfig ToyConfig(int rectifiers) {
  TrainingConfig c;
  c.profile = Profile::kDesk;
  c.num_rectifiers = rectifiers;
  c.quality = 1;
  c.alpha = 1e-3;
  c.soft_epochs = 30;
  c.predictive_epochs = 30;
  c.batch_size = 4;
  c.learning_rate = 1e-3;
  c.predictive_learning_rate = 1e-3;
  c.seed = 1;
  c.patch_size = 64;
  return c;
}

const std::vector<ImageBuffer>& TrainImages() {
  static const std::vector<ImageBuffer> images =
      SyntheticImages(16, 64, 64, 1000);
  return images;
}

const std::vector<ImageBuffer>& HeldOutImages() {
  static const std::vector<ImageBuffer> images =
      SyntheticImages(16, 64, 64, 2000);
  return images;
}

std::vector<Tensor> Tensors(const std::vector<ImageBuffer>& images) {
  std::vector<Tensor> out;
  for (const ImageBuffer& img : images) out.push_back(ImageToTensor(img));
  return out;
}

StpRun TrainStp(int rectifiers) {
  const auto start = std::chrono::steady_clock::now();
  const TrainingConfig cfg = ToyConfig(rectifiers);
  const PatchDataset data(TrainImages(), cfg.patch_size);
  Rng rng(cfg.seed);
  StpRun run;
  CodecModel model(cfg.Architecture(), rng);
  Trainer soft(model, cfg, Phase::kSoft);
  run.soft_epochs =
      static_cast<int>(soft.Run(data, cfg.soft_epochs, true).size());
  model.Freeze();
  run.soft = model.Clone();
  run.frozen_before = HashParameters(model.AnalysisParameters());
  Trainer predictive(model, cfg, Phase::kPredictive);
  run.predictive_epochs =
      static_cast<int>(predictive.Run(data, cfg.predictive_epochs, true).size());
  run.frozen_after = HashParameters(model.AnalysisParameters());
  run.final = std::move(model);
  run.seconds = Seconds(start);
  return run;
}

const StpRun& Toy(int rectifiers) {
  static std::optional<StpRun> runs[3];
  if (!runs[rectifiers]) runs[rectifiers] = TrainStp(rectifiers);
  return *runs[rectifiers];
}

CodecModel WithoutRectifier(const CodecModel& model) {
  CodecModel copy = model.Clone();
  copy.TruncateRectifiers(0);
  return copy;
}

Real MeanPsnr(const CodecModel& model, const std::vector<Tensor>& images) {
  Real total = 0;
  for (const Tensor& x : images) {
    total += Psnr(x, Decompress(model, Compress(model, x).bytes).image);
  }
  return total / images.size();
}

Outcome BitstreamInvariance() {
  Outcome o;
  const StpRun& run = Toy(1);
  const CodecModel baseline = WithoutRectifier(run.soft);
  int identical = 0, total = 0;
  size_t bytes = 0;
  for (const Tensor& x : Tensors(HeldOutImages())) {
    const std::vector<uint8_t> a = Compress(baseline, x).bytes;
    const std::vector<uint8_t> b = Compress(run.final, x).bytes;
    identical += a == b;
    ++total;
    bytes += a.size();
  }
  o.Require(identical == total, std::to_string(total - identical) +
                                    " of 16 bitstreams differ");
  o.Require(baseline.num_rectifiers() == 0 && run.final.num_rectifiers() == 1,
            "rectifier counts");
  o.Note(std::to_string(identical) + "/" + std::to_string(total) +
         " held-out bitstreams byte-identical (N=0 soft vs N=1 predictive, " +
         std::to_string(bytes) + " bytes)");
  return o;
}

Outcome ToyStp() {
  Outcome o;
  const StpRun& run = Toy(1);
  const std::vector<Tensor> train = Tensors(TrainImages());
  const Real eps_without = MeanQuantizationError(run.final, train, 0);
  const Real eps_with = MeanQuantizationError(run.final, train);
  const Real reduction = 1.0 - eps_with / eps_without;
  o.Require(reduction >= 0.05, "eps_Q reduction " + Fmt("%.1f%%", 100 * reduction));
  const Real psnr_soft_qr = MeanPsnr(run.soft, train);
  const Real psnr_soft_base = MeanPsnr(WithoutRectifier(run.soft), train);
  const Real psnr_after = MeanPsnr(run.final, train);
  o.Require(psnr_after >= psnr_soft_qr - 0.01 &&
                psnr_after >= psnr_soft_base - 0.01,
            "PSNR dropped");
  o.Require(run.frozen_before == run.frozen_after, "frozen hash changed");
  o.Require(run.soft_epochs <= 30 && run.predictive_epochs <= 30,
            "epoch budget");
  o.Require(run.seconds < 1800, "runtime");
  o.Note("eps_Q " + Fmt("%.3f", eps_without) + " -> " + Fmt("%.3f", eps_with) +
         " (-" + Fmt("%.1f%%", 100 * reduction) + "), PSNR " +
         Fmt("%.2f", psnr_soft_base) + "/" + Fmt("%.2f", psnr_soft_qr) +
         " dB before -> " + Fmt("%.2f", psnr_after) + " dB after, frozen hash " +
         (run.frozen_before == run.frozen_after ? "unchanged" : "changed") +
         ", " + std::to_string(run.soft_epochs) + "+" +
         std::to_string(run.predictive_epochs) + " epochs in " +
         Fmt("%.1f", run.seconds) + " s");
  return o;
}

// ---------------------------------------------------------------------------
// Exploration.

Outcome Exploration() {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  // Unimodal in log10(alpha) with its minimum at 1e-3.
  auto loss = [](Real alpha) {
    const Real d = std::log10(alpha) + 3;
    return 0.5 + 0.01 * d * d + 0.001 * d;
  };
  std::vector<Real> visited;
  const ExplorationResult r = ExploreAlpha({}, [&](Real alpha, int) {
    visited.push_back(alpha);
    return AlphaTrial{alpha, loss(alpha), loss(alpha), 15};
  });
  const std::vector<Real> ladder = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
  o.Require(visited == ladder, "visited ladder");
  o.Require(r.best_alpha == 1e-3, "returned " + Fmt("%g", r.best_alpha));
  Real brute = ladder[0];
  for (Real a : ladder) {
    if (loss(a) < loss(brute)) brute = a;
  }
  o.Require(r.best_alpha == brute, "brute-force argmin " + Fmt("%g", brute));
  const double secs = Seconds(start);
  o.Require(secs < 10, "runtime");
  o.Note("visited 1e-1..1e-5, returned " + Fmt("%g", r.best_alpha) +
         ", brute-force argmin " + Fmt("%g", brute));
  return o;
}

// ---------------------------------------------------------------------------
// Metrics.

Outcome Metrics() {
  Outcome o;
  o.Require(std::abs(MsSsimDb(0.9) - 10.0) <= 1e-9, "msssim_db(0.9)");
  o.Require(std::abs(MsSsimDb(0.99) - 20.0) <= 1e-9, "msssim_db(0.99)");
  const Tensor x = RandomTensor({1, 3, 32, 32}, 1, 0.2, 0.8);
  Tensor y = x.Clone();
  Rng signs(2);
  for (Real& v : y.mutable_data()) v += signs.Uniform01() < 0.5 ? 0.1 : -0.1;
  const Real psnr = Psnr(x, y);
  o.Require(std::abs(psnr - 20.0) <= 1e-9, "psnr " + Fmt("%.12f", psnr));

  const Shape shapes[] = {{1, 3, 64, 64}, {2, 1, 48, 52}, {1, 2, 44, 70},
                          {1, 3, 23, 30}, {1, 1, 90, 46}};
  Real worst = 0;
  for (int k = 0; k < 5; ++k) {
    const Tensor a = RandomTensor(shapes[k], 10 + k, 0, 1);
    Tensor b = a.Clone();
    Rng rng(20 + k);
    for (Real& v : b.mutable_data()) {
      v = std::clamp(v + rng.Uniform(-0.2, 0.2) * (k + 1) / 5, 0.0, 1.0);
    }
    const int scales =
        std::min(kMsSsimDefaultScales, MaxMsSsimScales(a.dim(2), a.dim(3)));
    worst = std::max(worst, std::abs(MsSsimValue(a, b, scales) -
                                     testing::OracleMsSsim(a, b, scales)));
  }
  o.Require(worst <= 1e-6, "ms-ssim oracle gap " + Fmt("%.3g", worst));

  Rng rng(3);
  int violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const Shape s = {1, rng.UniformInt(1, 8), rng.UniformInt(1, 6),
                     rng.UniformInt(1, 6)};
    const Tensor v = RandomTensor(s, rng, -50, 50);
    const Real bound = 0.5 * std::sqrt(static_cast<Real>(v.numel()));
    violations += QuantizationError(v, Round(v)) > bound;
  }
  o.Require(violations == 0, std::to_string(violations) + " eps_Q bound violations");
  o.Note("msssim_db exact, psnr " + Fmt("%.12g", psnr) +
         " dB, ms-ssim oracle gap " + Fmt("%.1e", worst) +
         ", eps_Q bound held on 1000 tensors");
  return o;
}

// ---------------------------------------------------------------------------
// Multiple rectifiers.

Outcome MultiRectifier() {
  Outcome o;
  const std::vector<Tensor> held_out = Tensors(HeldOutImages());
  const std::vector<Tensor> train = Tensors(TrainImages());
  Real eps[3];
  for (int n = 0; n < 3; ++n) {
    const CodecModel& model = Toy(n).final;
    for (size_t i = 0; i < 4; ++i) {
      const Tensor& x = held_out[i];
      const DecompressedImage d = Decompress(model, Compress(model, x).bytes);
      o.Require(d.image.shape() == x.shape(),
                "decode shape for N=" + std::to_string(n));
    }
    eps[n] = MeanQuantizationError(model, train);
  }

  // N = 0 against a hand-built baseline pipeline.
  const CodecModel& base = Toy(0).final;
  int exact = 0;
  for (const Tensor& x : held_out) {
    const Tensor y_hat = Round(base.EncodeAnalysis(ReflectPadToMultiple(x)));
    const Tensor direct = CropSpatial(ClampUnit(base.DecodeSynthesis(y_hat)),
                                      x.dim(2), x.dim(3));
    const Tensor coded = Decompress(base, Compress(base, x).bytes).image;
    exact += testing::MaxAbsDiff(direct.data(), coded.data()) == 0.0;
  }
  o.Require(exact == static_cast<int>(held_out.size()),
            "N=0 decode differs from baseline");

  const Real gain01 = eps[0] - eps[1];
  const Real gain12 = eps[1] - eps[2];
  o.Require(eps[2] <= eps[1], "eps_Q(N=2) > eps_Q(N=1)");
  o.Require(gain12 < gain01, "second rectifier gained more than the first");
  o.Note("eps_Q N=0/1/2 " + Fmt("%.3f", eps[0]) + "/" + Fmt("%.3f", eps[1]) +
         "/" + Fmt("%.3f", eps[2]) + ", gains " + Fmt("%.3f", gain01) +
         " then " + Fmt("%.3f", gain12) + ", N=0 decode bit-exact on " +
         std::to_string(exact) + " images");
  return o;
}

// ---------------------------------------------------------------------------
// Fresh rectifier identity.

Outcome ZeroInitIdentity() {
  Outcome o;
  int checked = 0;
  for (Profile p : {Profile::kTiny, Profile::kDesk, Profile::kFull}) {
    const ArchitectureConfig arch = ArchitectureConfig::ForProfile(p);
    for (uint64_t seed : {1, 2}) {
      Rng rng(seed);
      QRBlock block(arch, rng);
      const Tensor y_hat =
          Round(RandomTensor({1, arch.latent_channels, 3, 2}, seed, -20, 20));
      const Tensor out = block.Forward(y_hat);
      o.Require(out.shape() == y_hat.shape() &&
                    testing::MaxAbsDiff(out.data(), y_hat.data()) == 0.0,
                ProfileName(p) + " block is not the identity");
      ++checked;
    }
  }
  o.Note(std::to_string(checked) + " fresh blocks across 3 profiles return their input exactly");
  return o;
}

}  // namespace
}  // namespace qrc

int main() {
  using qrc::Outcome;
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, qrc::GradientSuite},       {2, qrc::RangeCoder},
      {3, qrc::EntropyModel},        {4, qrc::BitstreamInvariance},
      {5, qrc::ToyStp},              {6, qrc::Exploration},
      {7, qrc::Metrics},             {8, qrc::MultiRectifier},
      {9, qrc::ZeroInitIdentity}};
  int failed = 0;
  for (const auto& [id, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::printf("criterion %d: %s  %s\n", id, o.pass ? "PASS" : "FAIL",
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
