#include "vcap/train/ablation.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include <spdlog/spdlog.h>

#include "vcap/error.hpp"

namespace vcap::train {

namespace {

struct VariantSpec {
  const char* key;
  const char* label;
};

constexpr VariantSpec kTable3[] = {
    {"a", "S2VT (Step 1)"},
    {"b", "RFC (Step 2)"},
    {"c", "RFC+ (Step 2)"},
    {"d", "E2E (xentropy)"},
    {"e", "E2E (att+xentropy)"},
    {"f", "E2E w/o attribute prediction"},
    {"g", "E2E w/o reinforcement or attribute or Step 1"},
    {"full", "E2E (ours)"},
};

TrainConfig seeded(TrainConfig c, std::uint64_t seed) {
  c.seed = seed;
  return c;
}

}  // namespace

double median(std::vector<double> values) {
  if (values.empty()) throw RangeError("median of an empty list");
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

const VariantResult& AblationReport::variant(const std::string& key) const {
  for (const auto& v : variants) {
    if (v.key == key) return v;
  }
  throw RangeError("no ablation variant '" + key + "'");
}

bool AblationReport::required_orderings_hold() const {
  return std::all_of(orderings.begin(), orderings.end(), [](const Ordering& o) { return !o.required || o.holds; });
}

std::string AblationReport::table() const {
  std::vector<std::pair<std::string, metrics::MetricReport>> rows;
  for (const auto& v : variants) rows.emplace_back(v.label, v.median_test);
  std::string out = metrics::report_table(rows);
  // Append the validation column to each row (header first).
  std::string merged;
  std::size_t line = 0, pos = 0;
  char buf[32];
  while (pos < out.size()) {
    const auto end = out.find('\n', pos);
    merged += out.substr(pos, end - pos);
    if (line == 0) {
      std::snprintf(buf, sizeof buf, "  %8s", "valCIDEr");
    } else {
      std::snprintf(buf, sizeof buf, "  %8.4f", variants[line - 1].median_val_cider);
    }
    merged += buf;
    merged += '\n';
    pos = end + 1;
    ++line;
  }
  merged += "\n";
  for (const auto& o : orderings) {
    merged += (o.holds ? "[holds] " : "[fails] ") + o.description + (o.required ? "" : " (reported only)") + "\n";
  }
  return merged;
}

nlohmann::json AblationReport::to_json() const {
  nlohmann::json vs = nlohmann::json::array();
  for (const auto& v : variants) {
    nlohmann::json per_seed = nlohmann::json::array();
    for (std::size_t i = 0; i < v.seeds.size(); ++i) {
      per_seed.push_back({{"seed", v.seeds[i]}, {"val_cider", v.val_cider[i]}, {"test", metrics::to_json(v.test[i])}});
    }
    vs.push_back({{"key", v.key},
                  {"label", v.label},
                  {"median_val_cider", v.median_val_cider},
                  {"median_test", metrics::to_json(v.median_test)},
                  {"runs", per_seed}});
  }
  nlohmann::json os = nlohmann::json::array();
  for (const auto& o : orderings) os.push_back({{"ordering", o.description}, {"holds", o.holds}, {"required", o.required}});
  return {{"suite", suite}, {"variants", vs}, {"orderings", os}};
}

AblationReport run_ablation(const std::string& suite, const Dataset& data, const AblationOptions& options) {
  if (suite != "table3") throw UsageError("unknown ablation suite '" + suite + "' (expected table3)");
  if (options.seeds.empty()) throw UsageError("ablation needs at least one seed");
  if (!data.has_frames()) throw UsageError("the ablation trains the frame encoder and needs raw frames");

  std::map<std::string, VariantResult> results;
  for (const auto& spec : kTable3) results[spec.key] = VariantResult{spec.key, spec.label};

  for (const auto seed : options.seeds) {
    auto record = [&](const std::string& key, const StageResult& r) {
      auto& v = results[key];
      v.seeds.push_back(seed);
      v.val_cider.push_back(r.checkpoint.best_val_cider);
      v.test.push_back(evaluate(r.checkpoint, data, data::Split::test, DecodeMode::greedy).report);
      spdlog::info("ablation seed {} variant {}: val CIDEr {:.4f}", seed, key, r.checkpoint.best_val_cider);
      if (options.progress) options.progress(key, seed, r.checkpoint.best_val_cider);
    };

    const Checkpoint init = initial_checkpoint(data, options.model, seed);

    const auto a = step1_train(init, seeded(options.step1, seed), data);
    record("a", a);

    auto rfc = seeded(options.step2, seed);
    rfc.samples = options.rfc_samples;
    record("b", step2_train(a.checkpoint, rfc, data));

    auto rfc_plus = seeded(options.step2, seed);
    rfc_plus.samples = options.rfc_plus_samples;
    const auto c = step2_train(a.checkpoint, rfc_plus, data);
    record("c", c);

    // Step 2 skipped: Step 3 on top of Step 1 with cross-entropy.
    auto xent = seeded(options.step3, seed);
    xent.objective = Objective::xentropy;
    xent.use_attributes = false;
    record("d", step3_train(a.checkpoint, xent, data, true));

    auto att_xent = xent;
    att_xent.use_attributes = true;
    record("e", step3_train(a.checkpoint, att_xent, data, true));

    auto no_attr = seeded(options.step3, seed);
    no_attr.samples = options.rfc_plus_samples;
    no_attr.use_attributes = false;
    record("f", step3_train(c.checkpoint, no_attr, data));

    // Straight from initialization, the whole network with cross-entropy on the step-1 schedule.
    auto scratch = seeded(options.step1, seed);
    scratch.stage = 3;
    scratch.encoder_frozen = false;
    scratch.objective = Objective::xentropy;
    scratch.use_attributes = false;
    record("g", step3_train(init, scratch, data, true));

    auto full = seeded(options.step3, seed);
    full.samples = options.rfc_plus_samples;
    record("full", step3_train(c.checkpoint, full, data));
  }

  AblationReport report;
  report.suite = suite;
  for (const auto& spec : kTable3) {
    auto v = std::move(results[spec.key]);
    v.median_val_cider = median(v.val_cider);
    auto column = [&](double metrics::MetricReport::*field) {
      std::vector<double> xs;
      for (const auto& t : v.test) xs.push_back(t.*field);
      return median(xs);
    };
    v.median_test.bleu4 = column(&metrics::MetricReport::bleu4);
    v.median_test.rouge_l = column(&metrics::MetricReport::rouge_l);
    v.median_test.meteor = column(&metrics::MetricReport::meteor);
    v.median_test.cider = column(&metrics::MetricReport::cider);
    report.variants.push_back(std::move(v));
  }

  auto val = [&](const char* key) { return report.variant(key).median_val_cider; };
  report.orderings = {
      {"Step 2 > Step 1 (RFC+ vs S2VT, median val CIDEr)", val("c") > val("a"), true},
      {"Step 3 >= Step 2 (E2E (ours) vs RFC+)", val("full") >= val("c"), true},
      {"full pipeline > direct E2E from scratch", val("full") > val("g"), true},
      {"RFC+ (M=4) >= RFC (M=1)", val("c") >= val("b"), true},
      {"direct E2E from scratch < S2VT", val("g") < val("a"), false},
      {"full pipeline tops every ablation",
       std::all_of(report.variants.begin(), report.variants.end(),
                   [&](const VariantResult& v) { return v.key == "full" || v.median_val_cider <= val("full"); }),
       false},
  };
  return report;
}

}  // namespace vcap::train
