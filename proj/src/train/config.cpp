#include "vcap/train/config.hpp"

#include <fstream>

#include "vcap/error.hpp"
#include "vcap/metrics/metrics.hpp"

namespace vcap::train {

std::string to_string(Objective o) { return o == Objective::xentropy ? "xentropy" : "reinforce"; }

Objective parse_objective(const std::string& name) {
  if (name == "xentropy") return Objective::xentropy;
  if (name == "reinforce") return Objective::reinforce;
  throw UsageError("unknown objective '" + name + "' (expected xentropy or reinforce)");
}

TrainConfig TrainConfig::for_stage(int stage) {
  TrainConfig c;
  c.stage = stage;
  c.lr = stage == 1 ? 1e-4 : 1e-6;
  c.encoder_frozen = stage != 3;
  c.objective = stage == 1 ? Objective::xentropy : Objective::reinforce;
  c.use_attributes = stage == 3;
  return c;
}

TrainConfig TrainConfig::desk(int stage) {
  TrainConfig c = for_stage(stage);
  switch (stage) {
    case 1:
      c.lr = 2e-3;
      c.max_iterations = 1500;
      c.eval_interval = 50;
      break;
    case 2:
      c.lr = 5e-5;
      c.max_iterations = 300;
      c.eval_interval = 25;
      break;
    default:
      c.lr = 5e-5;
      c.max_iterations = 150;
      c.eval_interval = 25;
      break;
  }
  return c;
}

void TrainConfig::validate() const {
  if (stage < 1 || stage > 3) throw UsageError("stage must be 1, 2 or 3");
  if (stage == 3 && encoder_frozen) throw UsageError("stage 3 trains the frame encoder; encoder_frozen must be false");
  if (stage != 3 && !encoder_frozen) throw UsageError("stages 1 and 2 keep the frame encoder frozen");
  if (!(lr > 0.0)) throw UsageError("lr must be positive");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("alpha must lie in [0, 1]");
  if (samples == 0) throw UsageError("samples must be at least 1");
  if (batch_size == 0) throw UsageError("batch_size must be at least 1");
  if (eval_interval == 0) throw UsageError("eval_interval must be at least 1");
  if (patience == 0) throw UsageError("patience must be at least 1");
  metrics::parse_cider_variant(reward);
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json j = {{"stage", stage},
                      {"lr", lr},
                      {"alpha", alpha},
                      {"samples", samples},
                      {"batch_size", batch_size},
                      {"max_iterations", max_iterations},
                      {"eval_interval", eval_interval},
                      {"patience", patience},
                      {"seed", seed},
                      {"encoder_frozen", encoder_frozen},
                      {"objective", to_string(objective)},
                      {"use_attributes", use_attributes},
                      {"use_baseline", use_baseline},
                      {"reward", reward}};
  const auto model_json = model.to_json();
  for (const auto& [k, v] : model_json.items()) {
    if (k != "vocab_size") j[k] = v;
  }
  return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j, int default_stage) {
  if (!j.is_object()) throw FormatError("training config must be a JSON object");
  TrainConfig c = for_stage(j.contains("stage") ? j.at("stage").get<int>() : default_stage);
  nlohmann::json model_keys = nlohmann::json::object();
  const auto model_json = c.model.to_json();
  try {
    for (const auto& [k, v] : j.items()) {
      if (k == "stage") continue;
      else if (k == "lr") c.lr = v.get<double>();
      else if (k == "alpha") c.alpha = v.get<double>();
      else if (k == "samples") c.samples = v.get<std::size_t>();
      else if (k == "batch_size") c.batch_size = v.get<std::size_t>();
      else if (k == "max_iterations") c.max_iterations = v.get<std::size_t>();
      else if (k == "eval_interval") c.eval_interval = v.get<std::size_t>();
      else if (k == "patience") c.patience = v.get<std::size_t>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k == "encoder_frozen") c.encoder_frozen = v.get<bool>();
      else if (k == "objective") c.objective = parse_objective(v.get<std::string>());
      else if (k == "use_attributes") c.use_attributes = v.get<bool>();
      else if (k == "use_baseline") c.use_baseline = v.get<bool>();
      else if (k == "reward") c.reward = v.get<std::string>();
      else if (k != "vocab_size" && model_json.contains(k)) model_keys[k] = v;
      else throw FormatError("unknown config key '" + k + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad config value: ") + e.what());
  }
  auto merged = model_json;
  merged.update(model_keys);
  c.model = model::CaptionerConfig::from_json(merged);
  return c;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path, int default_stage) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read config " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return from_json(j, default_stage);
}

}  // namespace vcap::train
