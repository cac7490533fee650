// Copyright (c) 2026 The coast Authors. All Rights Reserved.
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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "coast/segnet.hpp"
#include "coast/synthetic.hpp"
#include "coast/trainer.hpp"
#include "coast/warmup.hpp"

namespace coast {

// Everything a CLI run needs. JSON sections "data", "model", "warmup",
// "train", top-level "seeds" and "variants" lists; keys are snake_case and unknown keys
// are rejected.
struct RunConfig {
  BenchmarkConfig data;
  ModelConfig model;
  WarmupConfig warmup;
  TrainConfig train;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::vector<std::string> variants{"i", "ii", "iii", "iv", "v"};  // ablation subset to run

  // Model class and target counts follow the data section.
  ModelConfig model_for_data() const;
  AblationConfig ablation() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string dump_run_config(const RunConfig& config);

}  // namespace coast
