#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "vcap/attributes/attributes.hpp"
#include "vcap/data/corpus.hpp"
#include "vcap/metrics/metrics.hpp"
#include "vcap/model/captioner.hpp"
#include "vcap/train/checkpoint.hpp"
#include "vcap/train/config.hpp"

namespace vcap::train {

/// Everything a training run reads: clips per split, vocabulary, attribute
/// labels and the idf table of the training references.
struct Dataset {
  Vocabulary vocab;
  attributes::AttributeLexicon lexicon;
  std::vector<data::Clip> train, val, test;
  std::vector<std::vector<Caption>> train_refs;         // encoded references, parallel to `train`
  std::vector<std::vector<std::uint8_t>> train_labels;  // attribute labels, parallel to `train`
  metrics::IdfTable idf;

  bool has_frames() const { return !train.empty() && train.front().has_frames(); }
  const std::vector<data::Clip>& split(data::Split s) const;
};

/// Builds a Dataset. Without a lexicon, attributes are mined from the training
/// captions (`attr_count` of them); without labels, they are derived from the lexicon.
Dataset make_dataset(const data::DatasetManifest& manifest, const data::FeatureMap* features = nullptr,
                     std::optional<attributes::AttributeLexicon> lexicon = std::nullopt,
                     const attributes::AttributeLabels* labels = nullptr, std::size_t attr_count = 50);

/// Same data with only the first `n` training clips (vocabulary and idf unchanged).
Dataset with_train_subset(const Dataset& data, std::size_t n);

/// Fresh stage-0 checkpoint sized for `data` (attr_count follows the lexicon).
Checkpoint initial_checkpoint(const Dataset& data, model::CaptionerConfig config, std::uint64_t seed);

/// Throws StageOrderError unless the checkpoint stage is `target - 1` or `target`, or `force` is set.
void check_stage_order(int checkpoint_stage, int target, bool force);

/// Replaces frames by per-frame features of the model's current encoder.
std::vector<data::Clip> featurize(model::Captioner& model, const std::vector<data::Clip>& clips);

enum class DecodeMode { greedy, beam };
DecodeMode parse_decode_mode(const std::string& name);

struct Evaluation {
  metrics::MetricReport report;
  std::vector<model::DecodeResult> decoded;
  std::vector<Tokens> hypotheses;
};

/// Decodes every clip (features computed with the model's encoder first) and scores all four metrics.
Evaluation evaluate(model::Captioner& model, const Vocabulary& vocab, const std::vector<data::Clip>& clips,
                    const metrics::IdfTable& idf, DecodeMode mode,
                    metrics::CiderVariant variant = metrics::CiderVariant::cider_d);
Evaluation evaluate(const Checkpoint& ckpt, const Dataset& data, data::Split split, DecodeMode mode);

/// One row per iteration; fields that do not apply are NaN (empty in CSV).
struct LogRow {
  std::uint64_t iteration = 0;
  double loss = NAN;
  double loss_x = NAN;
  double loss_r = NAN;
  double loss_a = NAN;
  double mean_reward = NAN;
  double baseline_mean = NAN;
  double val_cider = NAN;
};

void write_log_csv(const std::filesystem::path& path, const std::vector<LogRow>& rows);

struct StageResult {
  Checkpoint checkpoint;  // parameters with the best validation CIDEr (the starting point included)
  nn::ParamStore last_params;  // the final iterate, whatever its validation score
  std::vector<LogRow> log;
  double start_val_cider = 0.0;
  std::uint64_t iterations_run = 0;
};

/// Runs one stage. Keeps the best-validation-CIDEr parameters and stops after
/// `patience` evaluations without improvement.
StageResult train_stage(const Checkpoint& start, const TrainConfig& config, const Dataset& data, bool force = false);

StageResult step1_train(const Checkpoint& start, const TrainConfig& config, const Dataset& data, bool force = false);
StageResult step2_train(const Checkpoint& start, const TrainConfig& config, const Dataset& data, bool force = false);
StageResult step3_train(const Checkpoint& start, const TrainConfig& config, const Dataset& data, bool force = false);

}  // namespace vcap::train
