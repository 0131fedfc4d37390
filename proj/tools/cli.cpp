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

#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mdma/attention.hpp"
#include "mdma/dmem.hpp"
#include "mdma/mdma_mask.hpp"
#include "mdma/metrics.hpp"
#include "mdma/pgm.hpp"
#include "mdma/rmpm.hpp"
#include "mdma/run_config.hpp"
#include "mdma/scenario.hpp"
#include "mdma/simulate.hpp"
#include "mdma/tensor_io.hpp"
#include "mdma/token_layout.hpp"
#include "mdma/version.hpp"

namespace mdma::cli {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Options common to every data subcommand.
struct Common {
  std::optional<std::string> config;
  std::optional<unsigned> jobs;

  void add(CLI::App* app, bool with_jobs) {
    app->add_option("--config", config, "JSON run configuration; flags override its values");
    if (with_jobs) app->add_option("--jobs", jobs, "Worker threads over independent objects/heads");
  }

  RunConfig resolve() const {
    RunConfig c;
    if (const char* env = std::getenv("MDMA_SEED"); env && *env) {
      try {
        c.seed = std::stoull(env);
      } catch (const std::exception&) {
        throw std::invalid_argument("MDMA_SEED is not an unsigned integer");
      }
    }
    if (config) c = load_run_config(*config, c);
    return c;
  }
  unsigned threads() const { return jobs.value_or(1); }
};

ObjectMasks object_masks_from_tensor(const Tensor& t) {
  ObjectMasks out;
  for (auto& tr : tracks_from_tensor(t)) out.push_back(std::move(tr.masks));
  return out;
}

std::vector<std::size_t> parse_index_list(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    if (item.empty()) continue;
    if (!std::all_of(item.begin(), item.end(), ::isdigit))
      throw std::invalid_argument("--select: not an index list: " + s);
    out.push_back(std::stoull(item));
  }
  return out;
}

std::pair<std::size_t, std::size_t> parse_grid(const std::string& s) {
  const auto x = s.find('x');
  std::size_t h = 0, w = 0;
  try {
    if (x == std::string::npos) throw std::invalid_argument("");
    std::size_t used = 0;
    h = std::stoull(s.substr(0, x), &used);
    if (used != x) throw std::invalid_argument("");
    w = std::stoull(s.substr(x + 1), &used);
    if (used != s.size() - x - 1) throw std::invalid_argument("");
  } catch (const std::exception&) {
    throw std::invalid_argument("--grid must look like 16x16, got " + s);
  }
  return {h, w};
}

void apply_mask_flags(RunConfig& c, bool v2v, bool t2v) {
  if (v2v) c.literal_identity_v2v = true;
  if (t2v) c.literal_t2v = true;
}

// ---------------------------------------------------------------- build-mask

struct BuildMask {
  Common common;
  std::string layout, masks, out;
  std::string mode = "inference";
  std::optional<std::string> render;
  bool literal_v2v = false, literal_t2v = false;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("build-mask", "Assemble the dense MDMA attention mask");
    sub->add_option("--layout", layout, "layout.json")->required();
    sub->add_option("--masks", masks, "Object masks tensor (K, L, H, W)")->required();
    sub->add_option("--mode", mode, "inference | training")
        ->check(CLI::IsMember({"inference", "training"}));
    sub->add_option("--out", out, "Dense mask tensor (N, N)")->required();
    sub->add_option("--render", render, "Also write the mask as a PGM heatmap");
    sub->add_flag("--literal-identity-v2v", literal_v2v, "Video->video block as identity");
    sub->add_flag("--literal-t2v", literal_t2v, "Non-motion text rows of text->video closed");
    common.add(sub, false);
  }

  int run() const {
    auto cfg = common.resolve();
    apply_mask_flags(cfg, literal_v2v, literal_t2v);
    const auto lay = layout_from_json(read_text(layout));
    const auto om = object_masks_from_tensor(read_tensor(masks));
    const auto am = assemble(lay, om, mode == "training" ? AssemblyMode::kTraining : AssemblyMode::kInference,
                             {cfg.literal_identity_v2v, cfg.literal_t2v});
    const auto dense = am.dense();
    Tensor t({dense.rows(), dense.cols()});
    for (std::size_t i = 0; i < dense.size(); ++i) t.data[i] = dense.data()[i] ? 1.0f : 0.0f;
    write_tensor(out, t);
    if (render) write_pgm(*render, render_binary(dense));
    return kExitOk;
  }
};

// -------------------------------------------------------------------- attend

struct Attend {
  Common common;
  std::string tokens, mask, out;
  std::optional<std::string> mode;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("attend", "Masked multi-head attention");
    sub->add_option("--tokens", tokens, "Q/K/V tensor (3, heads, N, head_dim)")->required();
    sub->add_option("--mask", mask, "Dense mask tensor (N, N)")->required();
    sub->add_option("--mode", mode, "neg_inf | mul_probs | mul_logits (default neg_inf)")
        ->check(CLI::IsMember({"neg_inf", "mul_probs", "mul_logits"}));
    sub->add_option("--out", out, "Output tensor (heads, N, head_dim)")->required();
    common.add(sub, true);
  }

  int run() const {
    auto cfg = common.resolve();
    if (mode) cfg.mode = *mode;
    const auto qkv = tokens_from_tensor(read_tensor(tokens));
    const auto mt = read_tensor(mask);
    require_rank(mt, 2, "mask");
    require_binary(mt);
    BinaryMatrix m(mt.dim(0), mt.dim(1));
    for (std::size_t i = 0; i < mt.numel(); ++i) m.mutable_data()[i] = mt.data[i] != 0.0f;
    write_tensor(out, array_to_tensor(masked_attention(qkv, m, parse_mask_mode(cfg.mode), common.threads())));
    return kExitOk;
  }
};

// -------------------------------------------------------- extract-train-mask

struct ExtractTrainMask {
  Common common;
  std::string tokens, select, layout, out;
  std::size_t object = 0;
  std::optional<int> layer;
  std::optional<double> timestep;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("extract-train-mask",
                                   "Training-stage object mask from text-query attention");
    sub->add_option("--tokens", tokens, "Q/K/V tensor (3, heads, N, head_dim)")->required();
    sub->add_option("--select", select, "Comma-separated text token indices, e.g. \"1,2,3\"")
        ->required();
    sub->add_option("--layout", layout, "layout.json")->required();
    sub->add_option("--object", object, "Object index the selection describes");
    sub->add_option("--layer", layer, "Transformer layer the tokens came from (recorded only)");
    sub->add_option("--t", timestep, "Diffusion timestep the tokens came from (recorded only)");
    sub->add_option("--out", out, "Mask tensor (L, H, W)")->required();
    common.add(sub, false);
  }

  int run() const {
    (void)common.resolve();
    const auto lay = layout_from_json(read_text(layout));
    const auto qkv = tokens_from_tensor(read_tensor(tokens));
    const auto seq = extract_training_mask(qkv, {object, parse_index_list(select)}, lay);
    Tensor t({lay.frames(), lay.grid_h(), lay.grid_w()});
    for (std::size_t l = 0; l < seq.size(); ++l)
      for (std::size_t i = 0; i < lay.grid_cells(); ++i)
        t.data[l * lay.grid_cells() + i] = seq[l].grid.data()[i] ? 1.0f : 0.0f;
    write_tensor(out, t);
    return kExitOk;
  }
};

// ----------------------------------------------------------------- propagate

struct Propagate {
  Common common;
  std::optional<std::string> features, schedule, report;
  std::string first_masks, out;
  std::optional<std::size_t> window;
  std::optional<double> alpha;
  bool dynamic = false;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("propagate", "Propagate first-frame masks through a video");
    sub->add_option("--features", features, "Feature tensor (L, H, W, C)");
    sub->add_option("--first-masks", first_masks, "First-frame masks (K, H, W)")->required();
    sub->add_option("--window", window, "Anchor window size W (default 2)");
    sub->add_option("--out", out, "Tracks tensor (K, L, H, W)")->required();
    sub->add_flag("--dynamic", dynamic, "Early-freeze propagation over a denoising schedule");
    sub->add_option("--alpha", alpha, "Freeze threshold as a fraction (default 0.05)");
    sub->add_option("--schedule", schedule,
                    "JSON {\"steps\": [feature files...]} in denoising order");
    sub->add_option("--report", report, "Write propagation statistics as JSON");
    common.add(sub, true);
  }

  int run() const {
    auto cfg = common.resolve();
    if (window) cfg.window = *window;
    if (alpha) cfg.alpha = *alpha;
    cfg.validate();
    const auto first = first_masks_from_tensor(read_tensor(first_masks));

    ojson rep = {{"tool", "mdma"}, {"version", kVersion}, {"window", cfg.window}};
    std::vector<MaskTrack> tracks;
    if (dynamic) {
      if (!schedule) throw CLI::RequiredError("--schedule (with --dynamic)");
      const auto j = nlohmann::json::parse(read_text(*schedule));
      const fs::path base = fs::path(*schedule).parent_path();
      DynamicState state(cfg.alpha);
      std::size_t step = 0;
      for (const auto& entry : j.at("steps")) {
        fs::path p = entry.get<std::string>();
        if (p.is_relative()) p = base / p;
        tracks = dynamic_update(state, step++, features_from_tensor(read_tensor(p)), first,
                                cfg.window, common.threads());
      }
      if (step == 0) throw std::invalid_argument("schedule has no steps");
      rep["alpha"] = cfg.alpha;
      rep["steps"] = step;
      rep["propagation_calls"] = state.propagation_calls;
      rep["frozen_step"] = state.frozen_step ? ojson(*state.frozen_step) : ojson(nullptr);
      rep["differences"] = state.differences;
    } else {
      if (!features) throw CLI::RequiredError("--features");
      const auto f = features_from_tensor(read_tensor(*features));
      tracks = propagate_all(f, first, cfg.window, common.threads());
      rep["propagation_calls"] = 1;
    }
    write_tensor(out, tracks_to_tensor(tracks));
    if (report) write_file_atomic(*report, rep.dump(2) + "\n");
    return kExitOk;
  }
};

// ------------------------------------------------------------------ simulate

struct Simulate {
  Common common;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> objects, frames, steps, window;
  std::optional<std::string> grid, mode, render_dir, scenario, write_scenario;
  std::optional<double> alpha, noise;
  std::optional<std::size_t> convergence_step;
  std::size_t trials = 1;
  std::string report;
  bool full = false, literal_v2v = false, literal_t2v = false;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("simulate", "End-to-end synthetic run of propagation + masking");
    sub->add_option("--seed", seed, "Scenario seed (default MDMA_SEED, else 11)");
    sub->add_option("--objects", objects, "Number of objects K (default 2)");
    sub->add_option("--frames", frames, "Frames L (default 8)");
    sub->add_option("--grid", grid, "Latent grid HxW (default 16x16)");
    sub->add_option("--steps", steps, "Denoising steps (default 10)");
    sub->add_option("--alpha", alpha, "Dynamic freeze threshold (default 0.05)");
    sub->add_option("--window", window, "Anchor window size W (default 2)");
    sub->add_option("--mode", mode, "Mask mode for the leak probe (default neg_inf)")
        ->check(CLI::IsMember({"neg_inf", "mul_probs", "mul_logits"}));
    sub->add_option("--noise", noise, "Feature noise at the first step (default 1.5)");
    sub->add_option("--convergence-step", convergence_step,
                    "1-based step from which features are noise-free (default 3)");
    sub->add_option("--scenario", scenario, "JSON scenario description (objects and motions)");
    sub->add_option("--trials", trials, "Leak-probe trials per object per step");
    sub->add_flag("--full", full, "Propagate at every step (no early freeze)");
    sub->add_flag("--literal-identity-v2v", literal_v2v, "Video->video block as identity");
    sub->add_flag("--literal-t2v", literal_t2v, "Non-motion text rows of text->video closed");
    sub->add_option("--report", report, "report.json")->required();
    sub->add_option("--render-dir", render_dir, "Write per-frame mask overlays as PGM");
    sub->add_option("--write-scenario", write_scenario,
                    "Also dump scenario tensors (features, gt masks, flows) to this directory");
    common.add(sub, true);
  }

  int run() const {
    auto cfg = common.resolve();
    if (seed) cfg.seed = *seed;
    if (objects) cfg.objects = *objects;
    if (frames) cfg.frames = *frames;
    if (steps) cfg.steps = *steps;
    if (alpha) cfg.alpha = *alpha;
    if (window) cfg.window = *window;
    if (mode) cfg.mode = *mode;
    if (grid) std::tie(cfg.grid_h, cfg.grid_w) = parse_grid(*grid);
    apply_mask_flags(cfg, literal_v2v, literal_t2v);
    cfg.validate();

    ScenarioConfig sc;
    sc.seed = cfg.seed;
    sc.objects = cfg.objects;
    sc.frames = cfg.frames;
    sc.grid_h = cfg.grid_h;
    sc.grid_w = cfg.grid_w;
    sc.steps = cfg.steps;
    if (noise) sc.noise = *noise;
    if (convergence_step) sc.convergence_step = *convergence_step;
    if (scenario) sc = scenario_config_from_json(read_text(*scenario), sc);
    const Scenario s = generate_scenario(sc);

    RpmConfig rpm{cfg.window, cfg.alpha, !full, common.threads()};
    SimulateOptions opts;
    opts.mode = parse_mask_mode(cfg.mode);
    opts.mask_options = {cfg.literal_identity_v2v, cfg.literal_t2v};
    opts.leak_trials = trials;
    const Report r = simulate(s, rpm, opts);
    write_file_atomic(report, report_to_json(r));

    if (render_dir) {
      fs::create_directories(*render_dir);
      for (std::size_t l = 0; l < s.layout.frames(); ++l) {
        std::ostringstream name;
        name << "frame_" << std::setw(3) << std::setfill('0') << l;
        write_pgm(fs::path(*render_dir) / (name.str() + "_tracked.pgm"),
                  render_tracks(r.final_tracks, l, 8));
        write_pgm(fs::path(*render_dir) / (name.str() + "_truth.pgm"),
                  render_tracks(s.gt_masks, l, 8));
      }
    }
    if (write_scenario) {
      const fs::path dir = *write_scenario;
      fs::create_directories(dir);
      write_file_atomic(dir / "layout.json", layout_to_json(s.layout));
      write_tensor(dir / "gt_masks.tns", tracks_to_tensor(s.gt_masks));
      Tensor first({s.gt_masks.size(), sc.grid_h, sc.grid_w});
      for (std::size_t k = 0; k < s.gt_masks.size(); ++k)
        for (std::size_t i = 0; i < sc.grid_h * sc.grid_w; ++i)
          first.data[k * sc.grid_h * sc.grid_w + i] = s.gt_masks[k].masks[0].grid.data()[i];
      write_tensor(dir / "first_masks.tns", first);
      if (s.flows.size() > 0) write_tensor(dir / "flows.tns", flows_to_tensor(s.flows));
      ojson sched = {{"steps", ojson::array()}};
      for (std::size_t i = 0; i < s.features_per_step.size(); ++i) {
        const std::string name = "features_step" + std::to_string(i) + ".tns";
        write_tensor(dir / name, features_to_tensor(s.features_per_step[i]));
        sched["steps"].push_back(name);
      }
      write_file_atomic(dir / "schedule.json", sched.dump(2) + "\n");
    }
    return kExitOk;
  }
};

// ------------------------------------------------------------------- metrics

struct Metrics {
  Common common;
  std::optional<std::string> flow_gen, flow_ref, mask_gen, mask_ref, iou_a, iou_b, out;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("metrics", "Flow Fidelity and mask IoU from tensor files");
    sub->add_option("--flow-gen", flow_gen, "Generated flows (F, H, W, 2)");
    sub->add_option("--flow-ref", flow_ref, "Reference flows (F, H, W, 2)");
    sub->add_option("--mask-gen", mask_gen, "Masks for generated flows (>= F, H, W)");
    sub->add_option("--mask-ref", mask_ref, "Masks for reference flows (>= F, H, W)");
    sub->add_option("--iou-a", iou_a, "Masks (F, H, W) for per-frame IoU");
    sub->add_option("--iou-b", iou_b, "Masks (F, H, W) for per-frame IoU");
    sub->add_option("--out", out, "Write JSON here instead of standard output");
    common.add(sub, false);
  }

  static std::vector<SpatialMask> frame_masks(const Tensor& t, std::size_t need) {
    require_rank(t, 3, "masks");
    require_binary(t);
    if (t.dim(0) < need) throw FormatError("masks: fewer frames than flow fields");
    std::vector<SpatialMask> out;
    const std::size_t cells = t.dim(1) * t.dim(2);
    for (std::size_t l = 0; l < need; ++l) {
      SpatialMask m{l, BinaryMatrix(t.dim(1), t.dim(2))};
      for (std::size_t i = 0; i < cells; ++i) m.grid.mutable_data()[i] = t.data[l * cells + i] != 0.0f;
      out.push_back(std::move(m));
    }
    return out;
  }

  int run(std::ostream& stdout_stream) const {
    (void)common.resolve();
    const bool want_ff = flow_gen || flow_ref || mask_gen || mask_ref;
    const bool want_iou = iou_a || iou_b;
    if (!want_ff && !want_iou)
      throw CLI::ValidationError("metrics", "give --flow-*/--mask-* and/or --iou-a/--iou-b");
    ojson j = {{"tool", "mdma"}, {"version", kVersion}};
    if (want_ff) {
      if (!(flow_gen && flow_ref && mask_gen && mask_ref))
        throw CLI::ValidationError("metrics", "Flow Fidelity needs --flow-gen, --flow-ref, --mask-gen and --mask-ref");
      const auto fg = flows_from_tensor(read_tensor(*flow_gen));
      const auto fr = flows_from_tensor(read_tensor(*flow_ref));
      const auto mg = frame_masks(read_tensor(*mask_gen), fg.size());
      const auto mr = frame_masks(read_tensor(*mask_ref), fr.size());
      const auto ff = flow_fidelity(fg, fr, mg, mr);
      j["flow_fidelity"] = {{"score", ff.score}, {"magnitude", ff.magnitude}, {"direction", ff.direction}};
    }
    if (want_iou) {
      if (!(iou_a && iou_b)) throw CLI::ValidationError("metrics", "IoU needs --iou-a and --iou-b");
      const auto a = read_tensor(*iou_a);
      const auto b = read_tensor(*iou_b);
      require_rank(a, 3, "iou-a");
      require_rank(b, 3, "iou-b");
      if (a.shape != b.shape) throw FormatError("iou: mask shapes differ");
      const auto ma = frame_masks(a, a.dim(0));
      const auto mb = frame_masks(b, b.dim(0));
      std::vector<double> iou;
      for (std::size_t l = 0; l < ma.size(); ++l) iou.push_back(mask_iou(ma[l], mb[l]));
      j["iou"] = iou;
    }
    const std::string text = j.dump(2) + "\n";
    if (out) write_file_atomic(*out, text);
    else stdout_stream << text;
    return kExitOk;
  }
};

// -------------------------------------------------------------------- render

struct Render {
  Common common;
  std::string in, out;
  std::size_t index = 0, scale = 1;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("render", "Render a tensor slice as a PGM heatmap");
    sub->add_option("--in", in, "Tensor file; the last two dims form the image")->required();
    sub->add_option("--out", out, "Output .pgm")->required();
    sub->add_option("--index", index, "Flat index over the leading dims (default 0)");
    sub->add_option("--scale", scale, "Pixels per entry (default 1)");
    common.add(sub, false);
  }

  int run() const {
    (void)common.resolve();
    const auto t = read_tensor(in);
    const std::size_t rows = t.rank() >= 2 ? t.dim(t.rank() - 2) : 1;
    const std::size_t cols = t.dim(t.rank() - 1);
    const std::size_t slices = t.numel() / (rows * cols);
    if (index >= slices) throw std::invalid_argument("render: --index out of range");
    std::span<const float> v(t.data.data() + index * rows * cols, rows * cols);
    write_pgm(out, render_heatmap(v, rows, cols, scale));
    return kExitOk;
  }
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"mdma: motion-decoupled mask attention and mask propagation toolkit", "mdma"};
  app.require_subcommand(1);

  BuildMask build_mask;
  Attend attend;
  ExtractTrainMask extract;
  Propagate propagate;
  Simulate sim;
  Metrics metrics;
  Render render;
  build_mask.add(app);
  attend.add(app);
  extract.add(app);
  propagate.add(app);
  sim.add(app);
  metrics.add(app);
  render.add(app);
  auto* version = app.add_subcommand("version", "Print the tool version");

  auto usage = [&](std::ostream& os) {
    auto subs = app.get_subcommands();
    os << (subs.empty() ? app.help() : subs.front()->help());
  };

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    usage(out);
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "mdma: " << e.what() << "\n";
    usage(err);
    return kExitUsage;
  }

  try {
    auto* sub = app.get_subcommands().front();
    if (sub == version) {
      out << kVersion << "\n";
      return kExitOk;
    }
    if (sub->get_name() == "build-mask") return build_mask.run();
    if (sub->get_name() == "attend") return attend.run();
    if (sub->get_name() == "extract-train-mask") return extract.run();
    if (sub->get_name() == "propagate") return propagate.run();
    if (sub->get_name() == "simulate") return sim.run();
    if (sub->get_name() == "metrics") return metrics.run(out);
    if (sub->get_name() == "render") return render.run();
  } catch (const CLI::ParseError& e) {
    err << "mdma: " << e.what() << "\n";
    usage(err);
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "mdma: error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace mdma::cli
