#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "vcap/data/text.hpp"
#include "vcap/model/captioner.hpp"
#include "vcap/nn/adam.hpp"

namespace vcap::train {

/// Model parameters, optimizer state and stage metadata.
/// Stage 0 marks an untrained initialization.
struct Checkpoint {
  model::CaptionerConfig model;
  std::vector<std::string> vocabulary;  // non-special words in id order
  std::vector<std::string> attributes;  // attribute lexicon tokens
  nn::ParamStore params;
  nn::AdamState adam;
  int stage = 0;
  std::uint64_t iteration = 0;
  double best_val_cider = -std::numeric_limits<double>::infinity();

  Vocabulary vocab() const { return Vocabulary(vocabulary); }
  model::Captioner captioner() const { return model::Captioner(model, params); }
};

/// "VCCK" v1: little-endian header (stage, iteration, best CIDEr, model config JSON,
/// vocabulary, attributes), then per parameter name, frozen flag, shape and f64
/// values, then the Adam step counter and moments.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace vcap::train
