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

#include "coast/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "coast/errors.hpp"
#include "json.hpp"

namespace coast {

using nlohmann::json;

namespace {

class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw InvalidArgument("config: section '" + name_ + "' must be an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw InvalidArgument("config: unknown key '" + name_ + "." + key + "'");
    }
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw InvalidArgument("config: bad value for '" + name_ + "." + key + "': " + e.what());
    }
  }

  const json* sub(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

void read_spec(const json& j, DomainSpec& s) {
  Section sec(j, "data.specs[]");
  sec.get("domain_id", s.domain_id);
  sec.get("gain", s.gain);
  sec.get("bias", s.bias);
  sec.get("gamma", s.gamma);
  sec.get("noise_std", s.noise_std);
  sec.get("seed", s.seed);
  s.validate();
}

void read_data(const json& j, BenchmarkConfig& d) {
  Section sec(j, "data");
  sec.get("height", d.height);
  sec.get("width", d.width);
  sec.get("classes", d.classes);
  sec.get("num_targets", d.num_targets);
  sec.get("source_count", d.source_count);
  sec.get("target_count", d.target_count);
  sec.get("target_eval_count", d.target_eval_count);
  sec.get("unseen_count", d.unseen_count);
  sec.get("seed", d.seed);
  sec.get("shapes_per_class", d.shapes.shapes_per_class);
  sec.get("max_extra_shapes", d.shapes.max_extra_shapes);
  if (const json* specs = sec.sub("specs")) {
    if (!specs->is_array()) throw InvalidArgument("config: data.specs must be an array");
    d.specs.clear();
    for (const auto& s : *specs) {
      DomainSpec spec;
      read_spec(s, spec);
      d.specs.push_back(spec);
    }
  }
}

void read_model(const json& j, ModelConfig& m) {
  Section sec(j, "model");
  sec.get("encoder_widths", m.encoder.widths);
  sec.get("encoder_strides", m.encoder.strides);
  sec.get("dropout", m.encoder.dropout);
  sec.get("dropout_after", m.encoder.dropout_after);
  sec.get("taps", m.encoder.taps);
  sec.get("discriminator_widths", m.discriminator_widths);
  sec.get("leaky_slope", m.leaky_slope);
  sec.get("seed", m.seed);
}

void read_warmup(const json& j, WarmupConfig& w) {
  Section sec(j, "warmup");
  sec.get("lambda_adv", w.lambda_adv);
  sec.get("iterations", w.iterations);
  sec.get("batch_size", w.batch_size);
  sec.get("seg_learning_rate", w.seg_learning_rate);
  sec.get("disc_learning_rate", w.disc_learning_rate);
  sec.get("momentum", w.momentum);
  sec.get("weight_decay", w.weight_decay);
  sec.get("poly_power", w.poly_power);
  sec.get("seed", w.seed);
  w.validate();
}

void read_train(const json& j, TrainConfig& t) {
  Section sec(j, "train");
  sec.get("iterations", t.iterations);
  sec.get("batch_size", t.batch_size);
  sec.get("learning_rate", t.learning_rate);
  sec.get("momentum", t.momentum);
  sec.get("weight_decay", t.weight_decay);
  sec.get("poly_power", t.poly_power);
  sec.get("refresh_period", t.refresh_period);
  sec.get("lambda", t.lambda);
  sec.get("gamma", t.gamma);
  std::string kd = t.kd_mode == KdMode::Soft ? "soft" : "hard";
  sec.get("kd_mode", kd);
  if (kd == "soft") {
    t.kd_mode = KdMode::Soft;
  } else if (kd == "hard") {
    t.kd_mode = KdMode::Hard;
  } else {
    throw InvalidArgument("config: train.kd_mode must be \"soft\" or \"hard\"");
  }
  sec.get("self_train_only", t.self_train_only);
  sec.get("use_crossdonorm", t.use_crossdonorm);
  sec.get("use_consistency", t.use_consistency);
  sec.get("use_rectification", t.use_rectification);
  sec.get("detach_style", t.detach_style);
  sec.get("share_stylized_predictions", t.share_stylized_predictions);
  sec.get("augment_flip", t.augment.flip);
  sec.get("augment_crop", t.augment.crop);
  sec.get("crop_size", t.augment.crop_size);
  sec.get("augment_photometric", t.augment.photometric);
  sec.get("brightness", t.augment.brightness);
  sec.get("contrast", t.augment.contrast);
  sec.get("seed", t.seed);
  sec.get("log_every", t.log_every);
  sec.get("checkpoint_every", t.checkpoint_every);
  std::string dir = t.checkpoint_dir.string();
  sec.get("checkpoint_dir", dir);
  t.checkpoint_dir = dir;
  t.validate();
}

}  // namespace

ModelConfig RunConfig::model_for_data() const {
  ModelConfig m = model;
  m.classes = data.classes;
  m.num_targets = data.num_targets;
  return m;
}

AblationConfig RunConfig::ablation() const {
  AblationConfig a;
  a.data = data;
  a.model = model_for_data();
  a.warmup = warmup;
  a.train = train;
  a.seeds = seeds;
  a.variants.clear();
  for (const auto& name : variants) {
    bool found = false;
    for (const auto& v : ablation_variants()) {
      if (v.name == name) {
        a.variants.push_back(v);
        found = true;
      }
    }
    if (!found) throw InvalidArgument("config: unknown ablation variant '" + name + "'");
  }
  return a;
}

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig c;
  Section top(j, "config");
  if (const json* s = top.sub("data")) read_data(*s, c.data);
  if (const json* s = top.sub("model")) read_model(*s, c.model);
  if (const json* s = top.sub("warmup")) read_warmup(*s, c.warmup);
  if (const json* s = top.sub("train")) read_train(*s, c.train);
  top.get("seeds", c.seeds);
  top.get("variants", c.variants);
  if (c.seeds.empty()) throw InvalidArgument("config: seeds must not be empty");
  c.ablation();
  c.model_for_data().validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string dump_run_config(const RunConfig& c) {
  json specs = json::array();
  for (const auto& s : c.data.specs) {
    specs.push_back({{"domain_id", s.domain_id}, {"gain", s.gain}, {"bias", s.bias}, {"gamma", s.gamma},
                     {"noise_std", s.noise_std}, {"seed", s.seed}});
  }
  const auto& t = c.train;
  json j{
      {"data",
       {{"height", c.data.height}, {"width", c.data.width}, {"classes", c.data.classes},
        {"num_targets", c.data.num_targets}, {"source_count", c.data.source_count},
        {"target_count", c.data.target_count}, {"target_eval_count", c.data.target_eval_count},
        {"unseen_count", c.data.unseen_count}, {"seed", c.data.seed},
        {"shapes_per_class", c.data.shapes.shapes_per_class}, {"max_extra_shapes", c.data.shapes.max_extra_shapes},
        {"specs", specs}}},
      {"model",
       {{"encoder_widths", c.model.encoder.widths}, {"encoder_strides", c.model.encoder.strides},
        {"dropout", c.model.encoder.dropout}, {"dropout_after", c.model.encoder.dropout_after},
        {"taps", c.model.encoder.taps}, {"discriminator_widths", c.model.discriminator_widths},
        {"leaky_slope", c.model.leaky_slope}, {"seed", c.model.seed}}},
      {"warmup",
       {{"lambda_adv", c.warmup.lambda_adv}, {"iterations", c.warmup.iterations},
        {"batch_size", c.warmup.batch_size}, {"seg_learning_rate", c.warmup.seg_learning_rate},
        {"disc_learning_rate", c.warmup.disc_learning_rate}, {"momentum", c.warmup.momentum},
        {"weight_decay", c.warmup.weight_decay}, {"poly_power", c.warmup.poly_power}, {"seed", c.warmup.seed}}},
      {"train",
       {{"iterations", t.iterations}, {"batch_size", t.batch_size}, {"learning_rate", t.learning_rate},
        {"momentum", t.momentum}, {"weight_decay", t.weight_decay}, {"poly_power", t.poly_power},
        {"refresh_period", t.refresh_period}, {"lambda", t.lambda}, {"gamma", t.gamma},
        {"kd_mode", t.kd_mode == KdMode::Soft ? "soft" : "hard"}, {"self_train_only", t.self_train_only},
        {"use_crossdonorm", t.use_crossdonorm}, {"use_consistency", t.use_consistency},
        {"use_rectification", t.use_rectification}, {"detach_style", t.detach_style},
        {"share_stylized_predictions", t.share_stylized_predictions}, {"augment_flip", t.augment.flip},
        {"augment_crop", t.augment.crop}, {"crop_size", t.augment.crop_size},
        {"augment_photometric", t.augment.photometric}, {"brightness", t.augment.brightness},
        {"contrast", t.augment.contrast}, {"seed", t.seed}, {"log_every", t.log_every},
        {"checkpoint_every", t.checkpoint_every}, {"checkpoint_dir", t.checkpoint_dir.string()}}},
      {"seeds", c.seeds},
      {"variants", c.variants}};
  return j.dump(2);
}

}  // namespace coast
