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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

namespace mdma {

/// Settings shared by the CLI subcommands. Loaded from `--config run.json`
/// (any subset of the fields below), then overridden by explicit flags.
struct RunConfig {
  std::uint64_t seed = 11;
  std::size_t window = 2;   // W
  double alpha = 0.05;      // dynamic freeze threshold, a fraction
  std::string mode = "neg_inf";
  std::size_t grid_h = 16, grid_w = 16;
  std::size_t frames = 8;
  std::size_t steps = 10;
  std::size_t objects = 2;
  bool literal_identity_v2v = false;
  bool literal_t2v = false;

  // Throws std::invalid_argument unless alpha is in [0, 1] and window >= 1.
  void validate() const;
};

RunConfig run_config_from_json(const std::string& text, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});
std::string run_config_to_json(const RunConfig& config);

}  // namespace mdma
