#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vcap/train/trainer.hpp"

namespace vcap::train {

/// Stage schedules shared by every variant. The from-scratch variant reuses
/// the step-1 schedule with the encoder unfrozen.
struct AblationOptions {
  std::vector<std::uint64_t> seeds{1, 2, 3};
  model::CaptionerConfig model;
  TrainConfig step1 = TrainConfig::desk(1);
  TrainConfig step2 = TrainConfig::desk(2);
  TrainConfig step3 = TrainConfig::desk(3);
  std::size_t rfc_samples = 1;
  std::size_t rfc_plus_samples = 4;
  /// Called after each finished variant run (variant key, seed, validation CIDEr).
  std::function<void(const std::string&, std::uint64_t, double)> progress;
};

struct VariantResult {
  std::string key;    // "a".."g" or "full"
  std::string label;  // row name in the table
  std::vector<std::uint64_t> seeds;
  std::vector<double> val_cider;             // best validation CIDEr per seed
  std::vector<metrics::MetricReport> test;   // test split, greedy decode, per seed
  double median_val_cider = 0.0;
  metrics::MetricReport median_test;         // per-column median over seeds
};

struct Ordering {
  std::string description;
  bool holds = false;
  bool required = false;  // false for orderings that are only reported
};

struct AblationReport {
  std::string suite;
  std::vector<VariantResult> variants;  // table order
  std::vector<Ordering> orderings;

  const VariantResult& variant(const std::string& key) const;
  bool required_orderings_hold() const;
  /// Median test metrics per variant, plus the median validation CIDEr column.
  std::string table() const;
  nlohmann::json to_json() const;
};

double median(std::vector<double> values);

/// Runs every variant of `suite` (only "table3" exists) for each seed.
/// Step 1 and Step 2 runs are shared between the variants that build on them.
AblationReport run_ablation(const std::string& suite, const Dataset& data, const AblationOptions& options);

}  // namespace vcap::train
