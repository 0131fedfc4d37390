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

#include "mdma/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "mdma/rng.hpp"

namespace mdma {
namespace {

using nlohmann::json;

struct Point {
  double x, y;
};

Point centre(const MotionSpec& s) { return {s.x + s.w / 2.0, s.y + s.h / 2.0}; }

double radians(const MotionSpec& s, double frame) {
  return s.degrees * frame * std::numbers::pi / 180.0;
}

Point rotate_about(Point p, Point c, double theta) {
  const double ct = std::cos(theta), st = std::sin(theta);
  return {c.x + ct * (p.x - c.x) - st * (p.y - c.y), c.y + st * (p.x - c.x) + ct * (p.y - c.y)};
}

// Position inside the frame-0 rectangle that lands on cell (r, c) at frame
// l, or false when the cell is not covered.
bool source_cell(const MotionSpec& s, std::size_t frame, std::size_t r, std::size_t c, int& rel_r,
                 int& rel_c) {
  const auto l = static_cast<int>(frame);
  switch (s.kind) {
    case MotionSpec::Kind::kStatic:
    case MotionSpec::Kind::kTranslate: {
      const int ox = s.kind == MotionSpec::Kind::kTranslate ? s.x + s.dx * l : s.x;
      const int oy = s.kind == MotionSpec::Kind::kTranslate ? s.y + s.dy * l : s.y;
      rel_c = static_cast<int>(c) - ox;
      rel_r = static_cast<int>(r) - oy;
      return rel_c >= 0 && rel_c < s.w && rel_r >= 0 && rel_r < s.h;
    }
    case MotionSpec::Kind::kRotate: {
      const Point p = rotate_about({c + 0.5, r + 0.5}, centre(s), -radians(s, frame));
      const double fx = std::floor(p.x - s.x), fy = std::floor(p.y - s.y);
      if (fx < 0 || fy < 0 || fx >= s.w || fy >= s.h) return false;
      rel_c = static_cast<int>(fx);
      rel_r = static_cast<int>(fy);
      return true;
    }
  }
  return false;
}

void check_in_grid(const MotionSpec& s, std::size_t k, std::size_t frames, std::size_t gh,
                   std::size_t gw) {
  auto fail = [&] {
    std::ostringstream os;
    os << "scenario: object " << k << " leaves the grid";
    throw std::invalid_argument(os.str());
  };
  if (s.w < 1 || s.h < 1) throw std::invalid_argument("scenario: blob size must be >= 1");
  for (std::size_t l = 0; l < frames; ++l) {
    if (s.kind == MotionSpec::Kind::kRotate) {
      const Point c = centre(s);
      for (Point p : {Point{double(s.x), double(s.y)}, Point{double(s.x + s.w), double(s.y)},
                      Point{double(s.x), double(s.y + s.h)},
                      Point{double(s.x + s.w), double(s.y + s.h)}}) {
        const Point q = rotate_about(p, c, radians(s, double(l)));
        if (q.x < -1e-9 || q.y < -1e-9 || q.x > gw + 1e-9 || q.y > gh + 1e-9) fail();
      }
    } else {
      const int li = static_cast<int>(l);
      const int ox = s.kind == MotionSpec::Kind::kTranslate ? s.x + s.dx * li : s.x;
      const int oy = s.kind == MotionSpec::Kind::kTranslate ? s.y + s.dy * li : s.y;
      if (ox < 0 || oy < 0 || ox + s.w > static_cast<int>(gw) || oy + s.h > static_cast<int>(gh))
        fail();
    }
  }
}

// Displacement of the point at cell centre p over one frame.
Point flow_at(const MotionSpec& s, Point p) {
  switch (s.kind) {
    case MotionSpec::Kind::kStatic: return {0.0, 0.0};
    case MotionSpec::Kind::kTranslate: return {double(s.dx), double(s.dy)};
    case MotionSpec::Kind::kRotate: {
      const Point q = rotate_about(p, centre(s), radians(s, 1.0));
      return {q.x - p.x, q.y - p.y};
    }
  }
  return {0.0, 0.0};
}

}  // namespace

std::string MotionSpec::label() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::kStatic: os << "static"; break;
    case Kind::kTranslate: os << "translate(" << dx << "," << dy << ")"; break;
    case Kind::kRotate: os << "rotate(" << degrees << ")"; break;
  }
  return os.str();
}

std::vector<MotionSpec> default_motion_specs(std::size_t objects, std::size_t frames,
                                             std::size_t grid_h, std::size_t grid_w) {
  if (objects == 0) return {};
  const std::size_t band = grid_h / objects;
  if (band == 0) throw std::invalid_argument("scenario: grid too short for the object count");
  const std::size_t size = std::max<std::size_t>(1, std::min(band > 1 ? band - 1 : 1, grid_w / 4));
  const std::size_t travel = frames - 1;

  std::vector<MotionSpec> specs;
  for (std::size_t k = 0; k < objects; ++k) {
    MotionSpec s;
    s.w = s.h = static_cast<int>(size);
    s.y = static_cast<int>(k * band + (band - size) / 2);
    if (size + travel <= grid_w) {
      const int margin = size + travel + 1 <= grid_w ? 1 : 0;
      s.kind = MotionSpec::Kind::kTranslate;
      if (k % 2 == 0) {
        s.x = margin;
        s.dx = 1;
      } else {
        s.x = static_cast<int>(grid_w - size) - margin;
        s.dx = -1;
      }
    } else {
      s.kind = MotionSpec::Kind::kStatic;
      s.x = static_cast<int>((grid_w - size) / 2);
    }
    specs.push_back(s);
  }
  return specs;
}

BinaryMatrix blob_mask(const MotionSpec& spec, std::size_t frame, std::size_t grid_h,
                       std::size_t grid_w) {
  BinaryMatrix m(grid_h, grid_w);
  int rr = 0, rc = 0;
  for (std::size_t r = 0; r < grid_h; ++r)
    for (std::size_t c = 0; c < grid_w; ++c)
      if (source_cell(spec, frame, r, c, rr, rc)) m.set(r, c, true);
  return m;
}

double noise_level(const ScenarioConfig& config, std::size_t step) {
  if (config.convergence_step <= 1 || config.noise == 0.0) return 0.0;
  const double span = static_cast<double>(config.convergence_step - 1);
  const double left = span - static_cast<double>(step);
  return left <= 0.0 ? 0.0 : config.noise * left / span;
}

Scenario generate_scenario(const ScenarioConfig& config) {
  if (config.objects < 1 || config.frames < 1 || config.grid_h < 1 || config.grid_w < 1 ||
      config.steps < 1 || config.channels < 1 || config.motion_per_object < 1)
    throw std::invalid_argument("scenario: counts must be >= 1");

  Scenario sc;
  sc.config = config;
  if (sc.config.motions.empty())
    sc.config.motions =
        default_motion_specs(config.objects, config.frames, config.grid_h, config.grid_w);
  const auto& specs = sc.config.motions;
  if (specs.size() != config.objects)
    throw std::invalid_argument("scenario: one motion spec per object required");

  const std::size_t K = config.objects, L = config.frames, H = config.grid_h, W = config.grid_w;
  const std::size_t C = config.channels, cells = H * W;
  for (std::size_t k = 0; k < K; ++k) check_in_grid(specs[k], k, L, H, W);

  for (std::size_t k = 0; k < K; ++k) {
    MaskTrack tr{k, {}};
    for (std::size_t l = 0; l < L; ++l) tr.masks.push_back({l, blob_mask(specs[k], l, H, W)});
    sc.gt_masks.push_back(std::move(tr));
    sc.motion_labels.push_back(specs[k].label());
  }
  if (config.disjoint)
    for (std::size_t a = 0; a < K; ++a)
      for (std::size_t b = a + 1; b < K; ++b) {
        const auto& ma = sc.gt_masks[a].masks[0].grid;
        const auto& mb = sc.gt_masks[b].masks[0].grid;
        for (std::size_t i = 0; i < cells; ++i)
          if (ma.data()[i] && mb.data()[i])
            throw std::invalid_argument("scenario: overlapping initial blobs");
      }

  // Text layout: [start, (appearance, motion) per object, end]; the motion
  // word of object k sits at 2 + 2k.
  std::vector<IndexSpan> spans;
  for (std::size_t k = 0; k < K; ++k) spans.push_back({2 + 2 * k, 3 + 2 * k});
  sc.layout = build_layout(2 * K + 2, config.motion_per_object, K, L, H, W, spans);

  // Object embeddings: orthonormal (Gram-Schmidt on random draws), scaled
  // to norm sqrt(C). Object cells add a small per-cell signature. Background
  // cells are random vectors with every object direction projected out, so
  // they are mutually uncorrelated and orthogonal to all objects. Needs C > K.
  if (C <= K) throw std::invalid_argument("scenario: channels must exceed the object count");
  Rng rng(config.seed);
  std::vector<std::vector<double>> unit(K, std::vector<double>(C));
  auto project_out = [&](std::vector<double>& v, std::size_t upto) {
    for (std::size_t a = 0; a < upto; ++a) {
      double d = 0.0;
      for (std::size_t ch = 0; ch < C; ++ch) d += v[ch] * unit[a][ch];
      for (std::size_t ch = 0; ch < C; ++ch) v[ch] -= d * unit[a][ch];
    }
  };
  for (std::size_t k = 0; k < K; ++k) {
    auto& v = unit[k];
    for (auto& x : v) x = rng.normal();
    project_out(v, k);
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    for (auto& x : v) x /= n;
  }
  const double norm = std::sqrt(static_cast<double>(C));
  std::vector<std::vector<double>> embedding = unit;
  for (auto& v : embedding)
    for (auto& x : v) x *= norm;

  std::vector<std::vector<double>> signature(K);
  for (std::size_t k = 0; k < K; ++k) {
    signature[k].resize(static_cast<std::size_t>(specs[k].w * specs[k].h) * C);
    for (auto& v : signature[k]) v = config.jitter * rng.normal();
  }
  std::vector<double> background(cells * C);
  for (std::size_t i = 0; i < cells; ++i) {
    std::vector<double> v(C);
    for (auto& x : v) x = rng.normal();
    project_out(v, K);
    std::copy(v.begin(), v.end(), background.begin() + static_cast<std::ptrdiff_t>(i * C));
  }

  FeatureSequence clean(L, H, W, C);
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t r = 0; r < H; ++r)
      for (std::size_t c = 0; c < W; ++c) {
        const std::size_t i = r * W + c;
        auto dst = clean.cell(l, i);
        for (std::size_t ch = 0; ch < C; ++ch) dst[ch] = background[i * C + ch];
        // Later objects are drawn on top.
        for (std::size_t k = 0; k < K; ++k) {
          int rr = 0, rc = 0;
          if (!source_cell(specs[k], l, r, c, rr, rc)) continue;
          const std::size_t rel = static_cast<std::size_t>(rr * specs[k].w + rc);
          for (std::size_t ch = 0; ch < C; ++ch)
            dst[ch] = embedding[k][ch] + signature[k][rel * C + ch];
        }
      }

  for (std::size_t s = 0; s < config.steps; ++s) {
    FeatureSequence f = clean;
    const double sigma = noise_level(config, s);
    if (sigma > 0.0)
      for (std::size_t l = 0; l < L; ++l)
        for (auto& v : f.frame(l)) v += sigma * rng.normal();
    sc.features_per_step.push_back(std::move(f));
  }

  for (std::size_t l = 0; l + 1 < L; ++l) {
    FlowField ff(H, W);
    for (std::size_t k = 0; k < K; ++k) {
      const auto& m = sc.gt_masks[k].masks[l].grid;
      for (std::size_t r = 0; r < H; ++r)
        for (std::size_t c = 0; c < W; ++c) {
          if (!m(r, c)) continue;
          const Point d = flow_at(specs[k], {c + 0.5, r + 0.5});
          ff.dx[r * W + c] = d.x;
          ff.dy[r * W + c] = d.y;
        }
    }
    sc.flows.push_back(std::move(ff));
  }
  return sc;
}

ScenarioConfig scenario_config_from_json(const std::string& text, ScenarioConfig base) {
  json j;
  try {
    j = json::parse(text);
    if (j.contains("seed")) base.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("frames")) base.frames = j["frames"].get<std::size_t>();
    if (j.contains("grid_h")) base.grid_h = j["grid_h"].get<std::size_t>();
    if (j.contains("grid_w")) base.grid_w = j["grid_w"].get<std::size_t>();
    if (j.contains("steps")) base.steps = j["steps"].get<std::size_t>();
    if (j.contains("channels")) base.channels = j["channels"].get<std::size_t>();
    if (j.contains("motion_per_object")) base.motion_per_object = j["motion_per_object"].get<std::size_t>();
    if (j.contains("noise")) base.noise = j["noise"].get<double>();
    if (j.contains("convergence_step")) base.convergence_step = j["convergence_step"].get<std::size_t>();
    if (j.contains("jitter")) base.jitter = j["jitter"].get<double>();
    if (j.contains("disjoint")) base.disjoint = j["disjoint"].get<bool>();
    if (j.contains("objects")) {
      base.motions.clear();
      for (const auto& o : j["objects"]) {
        MotionSpec s;
        const auto kind = o.at("kind").get<std::string>();
        if (kind == "static") s.kind = MotionSpec::Kind::kStatic;
        else if (kind == "translate") s.kind = MotionSpec::Kind::kTranslate;
        else if (kind == "rotate") s.kind = MotionSpec::Kind::kRotate;
        else throw std::invalid_argument("scenario json: unknown motion kind " + kind);
        s.x = o.at("x").get<int>();
        s.y = o.at("y").get<int>();
        s.w = o.value("w", 1);
        s.h = o.value("h", 1);
        s.dx = o.value("dx", 0);
        s.dy = o.value("dy", 0);
        s.degrees = o.value("degrees", 0.0);
        base.motions.push_back(s);
      }
      base.objects = base.motions.size();
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("scenario json: ") + e.what());
  }
  return base;
}

Tensor flows_to_tensor(const std::vector<FlowField>& flows) {
  if (flows.empty()) throw std::invalid_argument("flows_to_tensor: no flow fields");
  const std::size_t H = flows[0].grid_h, W = flows[0].grid_w;
  Tensor t({flows.size(), H, W, 2});
  for (std::size_t l = 0; l < flows.size(); ++l) {
    if (flows[l].grid_h != H || flows[l].grid_w != W)
      throw std::invalid_argument("flows_to_tensor: ragged flows");
    for (std::size_t i = 0; i < H * W; ++i) {
      t.data[(l * H * W + i) * 2] = static_cast<float>(flows[l].dx[i]);
      t.data[(l * H * W + i) * 2 + 1] = static_cast<float>(flows[l].dy[i]);
    }
  }
  return t;
}

std::vector<FlowField> flows_from_tensor(const Tensor& t) {
  require_rank(t, 4, "flows");
  if (t.dim(3) != 2) throw FormatError("flows: last dim must be 2 (dx, dy)");
  const std::size_t H = t.dim(1), W = t.dim(2);
  std::vector<FlowField> out;
  for (std::size_t l = 0; l < t.dim(0); ++l) {
    FlowField f(H, W);
    for (std::size_t i = 0; i < H * W; ++i) {
      f.dx[i] = t.data[(l * H * W + i) * 2];
      f.dy[i] = t.data[(l * H * W + i) * 2 + 1];
      if (!std::isfinite(f.dx[i]) || !std::isfinite(f.dy[i]))
        throw FormatError("flows: non-finite entry");
    }
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace mdma
