#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "vcap/model/captioner.hpp"

namespace vcap::train {

enum class Objective { xentropy, reinforce };

std::string to_string(Objective o);
Objective parse_objective(const std::string& name);

/// Training hyperparameters of one stage plus the model shape used when a run starts from scratch.
struct TrainConfig {
  int stage = 1;
  double lr = 1e-4;
  double alpha = 0.95;
  std::size_t samples = 4;  // M
  std::size_t batch_size = 16;
  std::size_t max_iterations = 2000;
  std::size_t eval_interval = 50;
  std::size_t patience = 10;  // evaluations without improvement before stopping
  std::uint64_t seed = 1;
  bool encoder_frozen = true;
  Objective objective = Objective::xentropy;
  bool use_attributes = false;  // adds (1 - alpha) L_a
  bool use_baseline = true;     // self-critical baseline; b = 0 otherwise
  std::string reward = "cider-d";
  model::CaptionerConfig model;  // vocab_size is taken from the data

  /// Paper settings for a stage: lr 1e-4 / 1e-6, encoder frozen in 1-2, L_a in 3.
  static TrainConfig for_stage(int stage);
  /// Desk-scale settings with larger learning rates and short budgets.
  static TrainConfig desk(int stage);

  void validate() const;
  /// Flat object holding every field (model fields included, vocab_size excluded).
  nlohmann::json to_json() const;
  /// Starts from for_stage(stage) (stage taken from the object or `default_stage`),
  /// then applies the keys present. Unknown keys are rejected.
  static TrainConfig from_json(const nlohmann::json& j, int default_stage = 1);
  static TrainConfig load(const std::filesystem::path& path, int default_stage = 1);
};

}  // namespace vcap::train
