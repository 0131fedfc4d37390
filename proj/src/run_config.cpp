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

#include "mdma/run_config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace mdma {

using nlohmann::json;

void RunConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("config: alpha must be in [0, 1]");
  if (window < 1) throw std::invalid_argument("config: window must be >= 1");
}

RunConfig run_config_from_json(const std::string& text, RunConfig c) {
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
    for (const auto& [key, v] : j.items()) {
      if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "window") c.window = v.get<std::size_t>();
      else if (key == "alpha") c.alpha = v.get<double>();
      else if (key == "mode") c.mode = v.get<std::string>();
      else if (key == "grid_h") c.grid_h = v.get<std::size_t>();
      else if (key == "grid_w") c.grid_w = v.get<std::size_t>();
      else if (key == "frames") c.frames = v.get<std::size_t>();
      else if (key == "steps") c.steps = v.get<std::size_t>();
      else if (key == "objects") c.objects = v.get<std::size_t>();
      else if (key == "literal_identity_v2v") c.literal_identity_v2v = v.get<bool>();
      else if (key == "literal_t2v") c.literal_t2v = v.get<bool>();
      else throw std::invalid_argument("config: unknown key " + key);
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return run_config_from_json(ss.str(), base);
}

std::string run_config_to_json(const RunConfig& c) {
  const json j = {{"seed", c.seed},
                  {"window", c.window},
                  {"alpha", c.alpha},
                  {"mode", c.mode},
                  {"grid_h", c.grid_h},
                  {"grid_w", c.grid_w},
                  {"frames", c.frames},
                  {"steps", c.steps},
                  {"objects", c.objects},
                  {"literal_identity_v2v", c.literal_identity_v2v},
                  {"literal_t2v", c.literal_t2v}};
  return j.dump(2) + "\n";
}

}  // namespace mdma
