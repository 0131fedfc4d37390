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

#include "mdma/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "mdma/metrics.hpp"
#include "mdma/rng.hpp"
#include "mdma/version.hpp"

namespace mdma {
namespace {

using ojson = nlohmann::ordered_json;

std::vector<std::size_t> object_rows(const AttentionMask& mask, std::size_t k) {
  const auto& l = mask.layout();
  std::vector<std::size_t> rows;
  for (std::size_t p = l.text_motion_spans()[k].begin; p < l.text_motion_spans()[k].end; ++p)
    rows.push_back(p);
  const auto ms = l.motion_spans()[k];
  for (std::size_t p = ms.begin; p < ms.end; ++p) rows.push_back(l.motion_offset() + p);
  // T_v^k is the support of any motion row of object k in the m->v block.
  auto support = mask.block(Block::kMV).row(ms.begin);
  for (std::size_t q = 0; q < support.size(); ++q)
    if (support[q]) rows.push_back(l.video_offset() + q);
  return rows;
}

ojson optional_number(const std::optional<double>& v) {
  return v ? ojson(*v) : ojson(nullptr);
}

}  // namespace

double leak_probe(const ProjectedTokens& tokens, const AttentionMask& mask, std::size_t object,
                  std::size_t trials, std::uint64_t seed, MaskMode mode) {
  const auto& layout = mask.layout();
  if (object >= layout.n_objects()) throw std::invalid_argument("leak_probe: object out of range");
  if (tokens.tokens() != layout.total())
    throw std::invalid_argument("leak_probe: token count does not match layout");

  std::vector<std::size_t> watched;
  for (std::size_t k = 0; k < layout.n_objects(); ++k) {
    if (k == object) continue;
    auto r = object_rows(mask, k);
    watched.insert(watched.end(), r.begin(), r.end());
  }
  std::sort(watched.begin(), watched.end());
  watched.erase(std::unique(watched.begin(), watched.end()), watched.end());
  if (watched.empty()) return 0.0;

  std::vector<std::size_t> perturbed;
  const auto ts = layout.text_motion_spans()[object];
  for (std::size_t p = ts.begin; p < ts.end; ++p) perturbed.push_back(p);
  const auto ms = layout.motion_spans()[object];
  for (std::size_t p = ms.begin; p < ms.end; ++p) perturbed.push_back(layout.motion_offset() + p);

  const BinaryMatrix dense = mask.dense();
  const Array3 base = masked_attention_rows(tokens, dense, mode, watched);

  Rng rng(seed);
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    ProjectedTokens changed = tokens;
    for (std::size_t h = 0; h < tokens.heads(); ++h)
      for (auto row : perturbed) {
        for (double& x : changed.k.row(h, row)) x = 3.0 * rng.normal();
        for (double& x : changed.v.row(h, row)) x = 3.0 * rng.normal();
      }
    const Array3 out = masked_attention_rows(changed, dense, mode, watched);
    for (std::size_t i = 0; i < out.data.size(); ++i)
      worst = std::max(worst, std::abs(out.data[i] - base.data[i]));
  }
  return worst;
}

ProjectedTokens random_tokens(const TokenLayout& layout, std::size_t heads, std::size_t head_dim,
                              std::uint64_t seed) {
  Rng rng(seed);
  ProjectedTokens t{Array3(heads, layout.total(), head_dim), Array3(heads, layout.total(), head_dim),
                    Array3(heads, layout.total(), head_dim)};
  for (auto* a : {&t.q, &t.k, &t.v})
    for (double& x : a->data) x = rng.normal();
  return t;
}

Report simulate(const Scenario& scenario, const RpmConfig& rpm, const SimulateOptions& options) {
  const auto& cfg = scenario.config;
  const auto& layout = scenario.layout;
  const std::size_t K = layout.n_objects(), L = layout.frames();
  if (scenario.features_per_step.empty()) throw std::invalid_argument("simulate: no steps");

  std::vector<SpatialMask> first;
  for (const auto& gt : scenario.gt_masks) first.push_back(gt.masks.at(0));

  // Token seed is derived from the scenario seed so a run is fixed by it.
  const ProjectedTokens tokens =
      random_tokens(layout, options.heads, options.head_dim, cfg.seed + 1);

  Report report;
  report.tool_version = kVersion;
  {
    ojson motions = ojson::array();
    for (const auto& m : cfg.motions) motions.push_back(m.label());
    ojson echo = {{"seed", cfg.seed},
                  {"objects", K},
                  {"frames", L},
                  {"grid_h", cfg.grid_h},
                  {"grid_w", cfg.grid_w},
                  {"steps", cfg.steps},
                  {"channels", cfg.channels},
                  {"motion_per_object", cfg.motion_per_object},
                  {"noise", cfg.noise},
                  {"convergence_step", cfg.convergence_step},
                  {"jitter", cfg.jitter},
                  {"disjoint", cfg.disjoint},
                  {"motions", motions},
                  {"window", rpm.window},
                  {"alpha", rpm.alpha},
                  {"dynamic", rpm.dynamic},
                  {"mode", std::string(mask_mode_name(options.mode))},
                  {"literal_identity_v2v", options.mask_options.literal_identity_v2v},
                  {"literal_t2v", options.mask_options.literal_t2v},
                  {"heads", options.heads},
                  {"head_dim", options.head_dim},
                  {"leak_trials", options.leak_trials},
                  {"rng", std::string(Rng::kAlgorithm)}};
    report.config_json = echo.dump();
  }

  DynamicState state(rpm.dynamic ? rpm.alpha : 0.0);
  for (std::size_t s = 0; s < scenario.features_per_step.size(); ++s) {
    const auto& feats = scenario.features_per_step[s];
    StepRecord rec;
    rec.step = s;
    const std::size_t before = state.propagation_calls;
    const std::size_t diffs_before = state.differences.size();
    const auto& tracks = dynamic_update(state, s, feats, first, rpm.window, rpm.jobs);
    rec.propagated = state.propagation_calls > before;
    if (state.differences.size() > diffs_before) rec.difference = state.differences.back();

    ObjectMasks om;
    for (std::size_t k = 0; k < K; ++k) {
      om.push_back(tracks[k].masks);
      std::vector<double> row;
      double sum = 0.0;
      for (std::size_t l = 0; l < L; ++l) {
        row.push_back(mask_iou(tracks[k].masks[l], scenario.gt_masks[k].masks[l]));
        sum += row.back();
      }
      rec.iou.push_back(std::move(row));
      rec.mean_iou.push_back(sum / static_cast<double>(L));
    }
    const auto mask = assemble(layout, om, AssemblyMode::kInference, options.mask_options);
    for (std::size_t j = 0; j < K; ++j)
      rec.leak = std::max(rec.leak, leak_probe(tokens, mask, j, options.leak_trials,
                                               cfg.seed * 1000003 + s * K + j, options.mode));
    report.leak_max = std::max(report.leak_max, rec.leak);
    report.steps.push_back(std::move(rec));
  }
  report.frozen_step = state.frozen_step;
  report.propagation_calls = state.propagation_calls;
  report.final_tracks = state.last_tracks;

  for (std::size_t k = 0; k < K; ++k) {
    if (L < 2) {
      report.flow_fidelity.push_back(std::nullopt);
      continue;
    }
    std::span<const SpatialMask> tracked(report.final_tracks[k].masks.data(), L - 1);
    std::span<const SpatialMask> truth(scenario.gt_masks[k].masks.data(), L - 1);
    try {
      report.flow_fidelity.push_back(flow_fidelity(scenario.flows, scenario.flows, tracked, truth).score);
    } catch (const std::invalid_argument&) {
      // An empty tracked mask leaves nothing to compare.
      report.flow_fidelity.push_back(std::nullopt);
    }
  }
  return report;
}

std::string report_to_json(const Report& r) {
  ojson steps = ojson::array();
  for (const auto& s : r.steps)
    steps.push_back({{"step", s.step},
                     {"propagated", s.propagated},
                     {"difference", optional_number(s.difference)},
                     {"mean_iou", s.mean_iou},
                     {"iou", s.iou},
                     {"leak", s.leak}});
  ojson ff = ojson::array();
  for (const auto& v : r.flow_fidelity) ff.push_back(optional_number(v));
  ojson final_iou = r.steps.empty() ? ojson::array() : ojson(r.steps.back().iou);
  ojson j = {{"tool", "mdma"},
             {"version", r.tool_version},
             {"config", ojson::parse(r.config_json)},
             {"frozen_step", r.frozen_step ? ojson(*r.frozen_step) : ojson(nullptr)},
             {"propagation_calls", r.propagation_calls},
             {"leak_max", r.leak_max},
             {"flow_fidelity", ff},
             {"final_iou", final_iou},
             {"steps", steps}};
  return j.dump(2) + "\n";
}

}  // namespace mdma
