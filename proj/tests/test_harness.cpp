// Copyright 2026 The mdma-kit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "doctest.h"
#include "fixtures.hpp"
#include "json.hpp"
#include "mdma/metrics.hpp"
#include "mdma/scenario.hpp"
#include "mdma/simulate.hpp"

using namespace mdma;

namespace {

using Vecs = std::vector<std::pair<double, double>>;

FlowField uniform_field(std::size_t h, std::size_t w, double dx, double dy) {
  FlowField f(h, w);
  std::fill(f.dx.begin(), f.dx.end(), dx);
  std::fill(f.dy.begin(), f.dy.end(), dy);
  return f;
}

Vecs inside(const FlowField& f, const BinaryMatrix& m) {
  Vecs v;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m.data()[i]) v.emplace_back(f.dx[i], f.dy[i]);
  return v;
}

FlowField random_field(Rng& rng, std::size_t h, std::size_t w) {
  FlowField f(h, w);
  for (std::size_t i = 0; i < h * w; ++i) {
    // Mix of still cells, small and large vectors.
    const double u = rng.uniform();
    const double scale = u < 0.15 ? 0.0 : u < 0.5 ? 0.5 : 4.0;
    f.dx[i] = scale * rng.normal();
    f.dy[i] = scale * rng.normal();
  }
  return f;
}

ScenarioConfig single(MotionSpec s, std::size_t frames, std::size_t h, std::size_t w) {
  ScenarioConfig c;
  c.objects = 1;
  c.frames = frames;
  c.grid_h = h;
  c.grid_w = w;
  c.steps = 2;
  c.motions = {s};
  return c;
}

}  // namespace

TEST_CASE("mask iou") {
  BinaryMatrix a(1, 3), b(1, 3);
  CHECK(mask_iou(a, b) == 1.0);
  a.set(0, 0, true);
  a.set(0, 1, true);
  CHECK(mask_iou(a, a) == 1.0);
  b.set(0, 1, true);
  b.set(0, 2, true);
  CHECK(mask_iou(a, b) == doctest::Approx(1.0 / 3.0));
  BinaryMatrix c(1, 3);
  c.set(0, 2, true);
  CHECK(mask_iou(a, c) == 0.0);
  CHECK_THROWS_AS(mask_iou(a, BinaryMatrix(3, 1)), std::invalid_argument);
}

TEST_CASE("flow fidelity of a field with itself is one") {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto f = random_field(rng, 4, 5);
    auto m = fixtures::random_grid(rng, 4, 5, 0.5);
    m.set(0, 0, true);
    const auto ff = flow_fidelity(f, f, m, m);
    CHECK(ff.score == 1.0);
    CHECK(ff.magnitude == 1.0);
    CHECK(ff.direction == 1.0);
  }
}

TEST_CASE("reversed uniform flow scores one half") {
  for (auto [dx, dy] : {std::pair{1.0, 0.0}, {0.3, -2.0}, {-1.5, 0.7}}) {
    const auto f = uniform_field(3, 3, dx, dy);
    const auto g = uniform_field(3, 3, -dx, -dy);
    const auto m = BinaryMatrix::ones(3, 3);
    const auto ff = flow_fidelity(f, g, m, m);
    CHECK(ff.magnitude == 1.0);
    CHECK(ff.direction == 0.0);
    CHECK(ff.score == 0.5);
  }
}

TEST_CASE("still fields") {
  const auto zero = uniform_field(2, 2, 0, 0);
  const auto move = uniform_field(2, 2, 1, 0);
  const auto m = BinaryMatrix::ones(2, 2);
  CHECK(flow_fidelity(zero, zero, m, m).direction == 1.0);
  CHECK(flow_fidelity(zero, move, m, m).direction == 0.0);
  CHECK(flow_fidelity(move, zero, m, m).direction == 0.0);
}

TEST_CASE("flow fidelity is bounded, symmetric and matches the oracle") {
  Rng rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t h = 1 + rng.below(6), w = 1 + rng.below(6);
    const auto f = random_field(rng, h, w), g = random_field(rng, h, w);
    auto mf = fixtures::random_grid(rng, h, w, 0.6), mg = fixtures::random_grid(rng, h, w, 0.6);
    mf.set(0, 0, true);
    mg.set(h - 1, w - 1, true);
    const auto ab = flow_fidelity(f, g, mf, mg);
    const auto ba = flow_fidelity(g, f, mg, mf);
    CHECK(ab.score >= 0.0);
    CHECK(ab.score <= 1.0);
    CHECK(ab.score == ba.score);
    CHECK(ab.magnitude == ba.magnitude);
    CHECK(ab.direction == ba.direction);
    const auto o = oracle::flow_fidelity(inside(f, mf), inside(g, mg));
    CHECK(std::fabs(ab.magnitude - o.magnitude) < 1e-12L);
    CHECK(std::fabs(ab.direction - o.direction) < 1e-12L);
    CHECK(std::fabs(ab.score - o.score) < 1e-12L);
  }
}

TEST_CASE("direction bins split the circle evenly") {
  // One vector per bin centre, reference rotated by exactly one bin.
  const double step = 2 * std::numbers::pi / 16;
  FlowField a(1, 16), b(1, 16);
  for (std::size_t i = 0; i < 16; ++i) {
    const double t = -std::numbers::pi + (i + 0.5) * step;
    a.dx[i] = std::cos(t);
    a.dy[i] = std::sin(t);
    b.dx[i] = std::cos(t + step);
    b.dy[i] = std::sin(t + step);
  }
  const auto m = BinaryMatrix::ones(1, 16);
  CHECK(flow_fidelity(a, b, m, m).direction == 1.0);
  BinaryMatrix half(1, 16);
  for (std::size_t i = 0; i < 8; ++i) half.set(0, i, true);
  CHECK(flow_fidelity(a, a, half, m).direction == 0.5);
}

TEST_CASE("flow fidelity errors") {
  const auto f = uniform_field(2, 2, 1, 1);
  CHECK_THROWS_AS(flow_fidelity(f, f, BinaryMatrix(2, 2), BinaryMatrix::ones(2, 2)), std::invalid_argument);
  CHECK_THROWS_AS(flow_fidelity(f, f, BinaryMatrix::ones(3, 2), BinaryMatrix::ones(2, 2)), std::invalid_argument);
  auto bad = f;
  bad.dx[0] = std::nan("");
  CHECK_THROWS_AS(flow_fidelity(bad, f, BinaryMatrix::ones(2, 2), BinaryMatrix::ones(2, 2)), std::invalid_argument);
  const std::vector<FlowField> two{f, f};
  const std::vector<SpatialMask> one{{0, BinaryMatrix::ones(2, 2)}};
  CHECK_THROWS_AS(flow_fidelity(two, two, one, one), std::invalid_argument);
}

TEST_CASE("static spec has constant masks and zero flow") {
  MotionSpec s;
  s.x = 1;
  s.y = 2;
  s.w = 2;
  s.h = 1;
  const auto sc = generate_scenario(single(s, 4, 5, 5));
  REQUIRE(sc.flows.size() == 3);
  for (const auto& m : sc.gt_masks[0].masks) CHECK(m.grid == sc.gt_masks[0].masks[0].grid);
  CHECK(sc.gt_masks[0].masks[0].grid.count() == 2);
  CHECK(sc.gt_masks[0].masks[0].grid(2, 1) == 1);
  for (const auto& f : sc.flows)
    for (std::size_t i = 0; i < 25; ++i) CHECK((f.dx[i] == 0.0 && f.dy[i] == 0.0));
  CHECK(sc.motion_labels == std::vector<std::string>{"static"});
}

TEST_CASE("translating unit blob") {
  MotionSpec s;
  s.kind = MotionSpec::Kind::kTranslate;
  s.dx = 1;
  const auto sc = generate_scenario(single(s, 3, 4, 4));
  for (std::size_t l = 0; l < 3; ++l) {
    CHECK(sc.gt_masks[0].masks[l].grid.count() == 1);
    CHECK(sc.gt_masks[0].masks[l].grid(0, l) == 1);
  }
  CHECK(sc.flows[0].dx[0] == 1.0);
  CHECK(sc.flows[0].dy[0] == 0.0);
  CHECK(sc.flows[1].dx[1] == 1.0);
  CHECK(sc.flows[1].dx[0] == 0.0);
  CHECK(sc.motion_labels[0] == "translate(1,0)");
}

TEST_CASE("rotating blob keeps its area near the centre") {
  MotionSpec s;
  s.kind = MotionSpec::Kind::kRotate;
  s.x = 3;
  s.y = 3;
  s.w = 2;
  s.h = 2;
  s.degrees = 90;
  const auto sc = generate_scenario(single(s, 3, 8, 8));
  for (const auto& m : sc.gt_masks[0].masks) CHECK(m.grid == sc.gt_masks[0].masks[0].grid);
  // A quarter turn about the blob centre moves (3.5, 3.5) to (4.5, 3.5) or (3.5, 4.5).
  const double len = std::hypot(sc.flows[0].dx[3 * 8 + 3], sc.flows[0].dy[3 * 8 + 3]);
  CHECK(len == doctest::Approx(std::sqrt(2.0) * 0.5 * std::sqrt(2.0)));
}

TEST_CASE("scenario errors") {
  MotionSpec s;
  s.kind = MotionSpec::Kind::kTranslate;
  s.dx = 1;
  CHECK_THROWS_AS(generate_scenario(single(s, 6, 4, 4)), std::invalid_argument);
  MotionSpec big;
  big.w = 3;
  CHECK_THROWS_AS(generate_scenario(single(big, 1, 2, 2)), std::invalid_argument);
  ScenarioConfig two;
  two.motions = {MotionSpec{}, MotionSpec{}};
  CHECK_THROWS_AS(generate_scenario(two), std::invalid_argument);
  two.disjoint = false;
  CHECK_NOTHROW(generate_scenario(two));
  ScenarioConfig narrow;
  narrow.channels = 2;
  CHECK_THROWS_AS(generate_scenario(narrow), std::invalid_argument);
  ScenarioConfig mismatch;
  mismatch.motions = {MotionSpec{}};
  CHECK_THROWS_AS(generate_scenario(mismatch), std::invalid_argument);
  CHECK_THROWS_AS(scenario_config_from_json(R"({"objects": [{"kind": "spin", "x": 0, "y": 0}]})", {}),
                  std::invalid_argument);
  CHECK_THROWS_AS(scenario_config_from_json("{", {}), std::invalid_argument);
}

TEST_CASE("scenario json") {
  const auto c = scenario_config_from_json(
      R"({"seed": 5, "frames": 4, "objects": [{"kind": "translate", "x": 0, "y": 0, "w": 2, "h": 2, "dx": 1},
                                              {"kind": "rotate", "x": 5, "y": 5, "w": 2, "h": 2, "degrees": 30}]})",
      {});
  CHECK(c.seed == 5);
  CHECK(c.objects == 2);
  CHECK(c.motions[1].kind == MotionSpec::Kind::kRotate);
  CHECK(c.motions[1].degrees == 30.0);
  CHECK(generate_scenario(c).motion_labels == std::vector<std::string>{"translate(1,0)", "rotate(30)"});
}

TEST_CASE("noise schedule") {
  ScenarioConfig c;
  CHECK(noise_level(c, 0) == 1.5);
  CHECK(noise_level(c, 1) == 0.75);
  CHECK(noise_level(c, 2) == 0.0);
  CHECK(noise_level(c, 9) == 0.0);
  c.convergence_step = 1;
  CHECK(noise_level(c, 0) == 0.0);
  const auto sc = generate_scenario(ScenarioConfig{});
  CHECK(sc.features_per_step.size() == 10);
  CHECK(sc.features_per_step[2] == sc.features_per_step[9]);
  CHECK_FALSE(sc.features_per_step[0] == sc.features_per_step[2]);
}

TEST_CASE("scenario generation is deterministic") {
  const auto a = generate_scenario(ScenarioConfig{});
  const auto b = generate_scenario(ScenarioConfig{});
  CHECK(a.features_per_step == b.features_per_step);
  CHECK(a.gt_masks == b.gt_masks);
  ScenarioConfig other;
  other.seed = 12;
  CHECK_FALSE(generate_scenario(other).features_per_step[0] == a.features_per_step[0]);
}

TEST_CASE("flow tensors round trip") {
  const auto sc = generate_scenario(ScenarioConfig{});
  const auto t = flows_to_tensor(sc.flows);
  CHECK(t.shape == std::vector<std::size_t>{7, 16, 16, 2});
  const auto back = flows_from_tensor(t);
  REQUIRE(back.size() == 7);
  CHECK(back[3].dx == sc.flows[3].dx);
  CHECK_THROWS_AS(flows_from_tensor(Tensor({2, 2, 2, 3})), FormatError);
}

TEST_CASE("leak probe") {
  const auto fx = fixtures::two_object_fixture();
  const auto mask = assemble(fx.layout, fx.masks, AssemblyMode::kInference);
  CHECK(leak_probe(fx.tokens, mask, 0, 5, 1, MaskMode::kNegInf) == 0.0);
  // Renormalizing after a full softmax changes summation order; only rounding remains.
  CHECK(leak_probe(fx.tokens, mask, 1, 5, 1, MaskMode::kMulProbs) < 1e-12);
  CHECK(leak_probe(fx.tokens, mask, 0, 5, 1, MaskMode::kMulLogits) > 0.0);

  std::array<BinaryMatrix, kBlockCount> ones;
  const auto& lay = fx.layout;
  const std::size_t sizes[3] = {lay.n_text(), lay.n_motion(), lay.n_video()};
  for (std::size_t b = 0; b < kBlockCount; ++b) ones[b] = BinaryMatrix::ones(sizes[b / 3], sizes[b % 3]);
  const AttentionMask open(lay, AssemblyMode::kInference, ones);
  CHECK(leak_probe(fx.tokens, open, 0, 1, 1, MaskMode::kNegInf) > 0.0);

  CHECK_THROWS_AS(leak_probe(fx.tokens, mask, 2, 1, 1), std::invalid_argument);
}

TEST_CASE("overlapping masks leak through shared cells") {
  auto fx = fixtures::two_object_fixture();
  fx.masks[1][0].grid.set(0, 0, true);
  const auto mask = assemble(fx.layout, fx.masks, AssemblyMode::kInference);
  CHECK(leak_probe(fx.tokens, mask, 0, 3, 2, MaskMode::kNegInf) > 0.0);
}

TEST_CASE("static scene tracks perfectly") {
  ScenarioConfig c;
  c.objects = 2;
  c.frames = 5;
  c.grid_h = c.grid_w = 8;
  c.steps = 3;
  MotionSpec a, b;
  a.x = 1;
  a.y = 1;
  a.w = a.h = 2;
  b.x = 5;
  b.y = 4;
  b.w = 2;
  b.h = 3;
  c.motions = {a, b};
  const auto r = simulate(generate_scenario(c), {}, {});
  for (const auto& row : r.steps.back().iou)
    for (double v : row) CHECK(v == 1.0);
}

TEST_CASE("seed-11 simulation") {
  const auto sc = generate_scenario(ScenarioConfig{});
  const auto r = simulate(sc, {}, {});
  CHECK(r.frozen_step.has_value());
  CHECK(*r.frozen_step < 10);
  CHECK(r.propagation_calls < 10);
  CHECK(r.steps.size() == 10);
  CHECK_FALSE(r.steps.front().difference.has_value());
  for (const auto& s : r.steps) {
    if (s.step > *r.frozen_step) CHECK_FALSE(s.propagated);
  }
  // Flow Fidelity of the final tracks against an independent histogram oracle.
  for (std::size_t k = 0; k < 2; ++k) {
    Vecs gen, ref;
    for (std::size_t l = 0; l + 1 < 8; ++l) {
      const auto g = inside(sc.flows[l], r.final_tracks[k].masks[l].grid);
      const auto t = inside(sc.flows[l], sc.gt_masks[k].masks[l].grid);
      gen.insert(gen.end(), g.begin(), g.end());
      ref.insert(ref.end(), t.begin(), t.end());
    }
    REQUIRE(r.flow_fidelity[k].has_value());
    CHECK(std::fabs(*r.flow_fidelity[k] - oracle::flow_fidelity(gen, ref).score) < 1e-12L);
  }
  const auto j = nlohmann::json::parse(report_to_json(r));
  CHECK(j["tool"] == "mdma");
  CHECK(j["config"]["window"] == 2);
  CHECK(j["config"]["rng"] == "mt19937_64-v1");
  CHECK(j["steps"].size() == 10);
  CHECK(j["final_iou"].size() == 2);
  CHECK(report_to_json(simulate(sc, {}, {})) == report_to_json(r));
}

TEST_CASE("full propagation ends where the frozen run ends") {
  const auto sc = generate_scenario(ScenarioConfig{});
  RpmConfig full;
  full.dynamic = false;
  const auto a = simulate(sc, {}, {});
  const auto b = simulate(sc, full, {});
  CHECK(b.propagation_calls == 10);
  CHECK_FALSE(b.frozen_step.has_value());
  CHECK(a.final_tracks == b.final_tracks);
}

TEST_CASE("job count does not change the report") {
  const auto sc = generate_scenario(ScenarioConfig{});
  RpmConfig threaded;
  threaded.jobs = 4;
  CHECK(report_to_json(simulate(sc, threaded, {})) == report_to_json(simulate(sc, {}, {})));
}
