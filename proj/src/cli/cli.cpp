#include "vcap/cli/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "vcap/error.hpp"
#include "vcap/train/ablation.hpp"
#include "vcap/train/trainer.hpp"

namespace vcap::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kCheckpointFile = "checkpoint.vcck";
constexpr const char* kLexiconFile = "attributes.txt";
constexpr const char* kLabelsFile = "labels.tsv";
constexpr const char* kFeaturesFile = "features.bin";
constexpr const char* kIdfFile = "idf.json";

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string log_level = "info";
};

struct GenDataArgs {
  std::size_t clips = 290;
  int frames_per_clip = 8;
  int grammar_size = 4;
  int frame_size = 32;
  std::size_t feature_dim = 0;
  std::string out_dir;
};

struct MineArgs {
  std::string data;
  std::size_t count = 50;
  std::string out_dir;
};

struct TrainArgs {
  int step = 1;
  std::string data;
  std::string resume;
  std::string attrs;
  std::string features;
  std::string out_dir;
  bool force = false;
};

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string split = "test";
  std::string mode = "greedy";
  std::string features;
  std::string out_dir;
};

struct CaptionArgs {
  std::string checkpoint;
  std::string manifest;
  std::string split = "all";
  std::string mode = "greedy";
  std::string features;
  std::string out_dir;
};

struct ScoreArgs {
  std::string hyps;
  std::string refs;
  std::string idf;
  std::string variant = "cider-d";
  std::string out_dir;
};

struct AblateArgs {
  std::string suite = "table3";
  std::size_t seeds = 3;
  std::string data;
  std::string out_dir;
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc | std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  os << text;
  if (!os) throw Error("failed writing " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read " + path.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

fs::path checkpoint_path(const std::string& arg) {
  const fs::path p(arg);
  return fs::is_directory(p) ? p / kCheckpointFile : p;
}

std::optional<data::FeatureMap> maybe_features(const std::string& path, std::size_t feat_dim) {
  if (path.empty()) return std::nullopt;
  return data::load_features(path, feat_dim);
}

train::Dataset load_dataset(const std::string& data_dir, const std::optional<data::FeatureMap>& features,
                            const std::string& attrs_dir) {
  const auto manifest = data::read_manifest(data_dir);
  if (attrs_dir.empty()) return train::make_dataset(manifest, features ? &*features : nullptr);
  auto lexicon = attributes::read_lexicon(fs::path(attrs_dir) / kLexiconFile);
  const auto labels = attributes::read_labels(fs::path(attrs_dir) / kLabelsFile, lexicon.size());
  return train::make_dataset(manifest, features ? &*features : nullptr, std::move(lexicon), &labels);
}

// Training config: desk schedule for the step, overridden by the config file, then by --seed.
train::TrainConfig training_config_unchecked(const Globals& g, int step) {
  json merged = train::TrainConfig::desk(step).to_json();
  if (!g.config.empty()) {
    const json file = read_json(g.config);
    if (!file.is_object()) throw FormatError(g.config + ": training config must be a JSON object");
    if (file.contains("stage") && file.at("stage") != step) {
      throw UsageError("config file is for stage " + file.at("stage").dump() + " but --step is " + std::to_string(step));
    }
    for (const auto& [k, v] : file.items()) merged[k] = v;
  }
  auto cfg = train::TrainConfig::from_json(merged, step);
  if (g.seed) cfg.seed = *g.seed;
  cfg.validate();
  return cfg;
}

train::TrainConfig training_config(const Globals& g, int step) {
  try {
    return training_config_unchecked(g, step);
  } catch (const FormatError& e) {
    throw UsageError(std::string("bad config: ") + e.what());
  }
}

std::string metrics_table(const std::string& name, const metrics::MetricReport& r) {
  return metrics::report_table({{name, r}});
}

// ---------------------------------------------------------------------------

int gen_data(const Globals& g, const GenDataArgs& a) {
  data::CorpusConfig cc;
  cc.set_total(a.clips);
  cc.frames_per_clip = a.frames_per_clip;
  cc.grammar_size = a.grammar_size;
  cc.frame_size = a.frame_size;
  cc.seed = g.seed.value_or(1);
  const auto manifest = data::generate_corpus(cc, a.out_dir);
  if (a.feature_dim > 0) {
    // The frame encoder exactly as `train --step 1` initializes it under the same --seed and --config.
    const auto tc = training_config(g, 1);
    model::CaptionerConfig mc = tc.model;
    mc.feat_dim = a.feature_dim;
    mc.frame_size = static_cast<std::size_t>(a.frame_size);
    mc.vocab_size = Vocabulary::kReserved + 1;
    nn::Rng rng(tc.seed);
    model::Captioner encoder(mc, rng);
    data::FeatureMap features;
    for (auto split : {data::Split::train, data::Split::val, data::Split::test}) {
      for (const auto& clip : data::load_clips(manifest, split)) features[clip.id] = encoder.clip_features(clip.frames);
    }
    data::write_features(fs::path(a.out_dir) / kFeaturesFile, features);
    spdlog::info("wrote {} feature sequences of dim {}", features.size(), a.feature_dim);
  }
  std::cout << "generated " << manifest.clips.size() << " clips (" << cc.train_clips << " train / " << cc.val_clips
            << " val / " << cc.test_clips << " test) in " << a.out_dir << "\n";
  return kExitOk;
}

int mine_attrs(const MineArgs& a) {
  const auto manifest = data::read_manifest(a.data);
  const auto lexicon = attributes::mine_attributes(data::training_captions(manifest), a.count);
  attributes::AttributeLabels labels;
  for (const auto* rec : manifest.split(data::Split::train)) {
    std::vector<Tokens> caps;
    for (const auto& c : rec->captions) caps.push_back(tokenize(c));
    labels[rec->id] = attributes::label_clip(caps, lexicon);
  }
  fs::create_directories(a.out_dir);
  attributes::write_lexicon(fs::path(a.out_dir) / kLexiconFile, lexicon);
  attributes::write_labels(fs::path(a.out_dir) / kLabelsFile, labels);
  std::vector<metrics::RefSet> refs;
  for (const auto* rec : manifest.split(data::Split::train)) {
    metrics::RefSet r;
    for (const auto& c : rec->captions) r.push_back(tokenize(c));
    refs.push_back(std::move(r));
  }
  metrics::write_idf(fs::path(a.out_dir) / kIdfFile, metrics::build_idf(refs));
  std::cout << "mined " << lexicon.size() << " attributes for " << labels.size() << " training clips\n";
  return kExitOk;
}

int train_cmd(const Globals& g, const TrainArgs& a) {
  auto cfg = training_config(g, a.step);
  if (cfg.stage == 3 && !a.features.empty()) {
    throw UsageError("step 3 fine-tunes the frame encoder and cannot run on precomputed features");
  }
  std::optional<train::Checkpoint> resumed;
  if (!a.resume.empty()) {
    resumed = train::load_checkpoint(checkpoint_path(a.resume));
    // The checkpoint fixes the architecture; a config file may not contradict it.
    if (!g.config.empty()) {
      const json file = read_json(g.config);
      const json model_json = resumed->model.to_json();
      for (const auto& [k, v] : model_json.items()) {
        if (file.contains(k) && file.at(k) != v) {
          throw UsageError("config sets " + k + "=" + file.at(k).dump() + " but the checkpoint has " + v.dump());
        }
      }
    }
    cfg.model = resumed->model;
  }
  if (!resumed) train::check_stage_order(0, cfg.stage, a.force);
  else train::check_stage_order(resumed->stage, cfg.stage, a.force);

  const auto features = maybe_features(a.features, cfg.model.feat_dim);
  const auto data = load_dataset(a.data, features, a.attrs);
  const train::Checkpoint start = resumed ? *resumed : train::initial_checkpoint(data, cfg.model, cfg.seed);

  train::StageResult result;
  switch (cfg.stage) {
    case 1:
      result = train::step1_train(start, cfg, data, a.force);
      break;
    case 2:
      result = train::step2_train(start, cfg, data, a.force);
      break;
    default:
      result = train::step3_train(start, cfg, data, a.force);
      break;
  }

  const fs::path out(a.out_dir);
  train::save_checkpoint(out / kCheckpointFile, result.checkpoint);
  train::write_log_csv(out / "log.csv", result.log);
  write_json(out / "config.json", cfg.to_json());
  write_json(out / "summary.json", {{"stage", result.checkpoint.stage},
                                    {"iterations_run", result.iterations_run},
                                    {"best_iteration", result.checkpoint.iteration},
                                    {"start_val_cider", result.start_val_cider},
                                    {"best_val_cider", result.checkpoint.best_val_cider}});
  std::cout << "step " << cfg.stage << ": val CIDEr " << result.start_val_cider << " -> "
            << result.checkpoint.best_val_cider << " (" << result.iterations_run << " iterations); checkpoint "
            << (out / kCheckpointFile).string() << "\n";
  return kExitOk;
}

int eval_cmd(const EvalArgs& a) {
  const auto ckpt = train::load_checkpoint(checkpoint_path(a.checkpoint));
  const auto split = data::parse_split(a.split);
  const auto mode = train::parse_decode_mode(a.mode);
  const auto features = maybe_features(a.features, ckpt.model.feat_dim);
  const auto data = train::make_dataset(data::read_manifest(a.data), features ? &*features : nullptr,
                                        attributes::AttributeLexicon(ckpt.attributes));
  if (data.vocab.words() != ckpt.vocabulary) throw FormatError("checkpoint vocabulary does not match the dataset");
  const auto e = train::evaluate(ckpt, data, split, mode);
  const std::string name = "stage " + std::to_string(ckpt.stage) + " (" + a.mode + ")";
  std::cout << metrics_table(name, e.report);
  if (!a.out_dir.empty()) {
    json captions = json::array();
    std::string hyps, refs;
    const auto& clips = data.split(split);
    for (std::size_t i = 0; i < clips.size(); ++i) {
      captions.push_back({{"id", clips[i].id}, {"caption", join_tokens(e.hypotheses[i])}});
      hyps += join_tokens(e.hypotheses[i]) + "\n";
      for (const auto& r : clips[i].captions) refs += clips[i].id + "\t" + join_tokens(r) + "\n";
    }
    // Inputs for `score`, which reproduces these metrics from files.
    write_text(fs::path(a.out_dir) / "hyps.txt", hyps);
    write_text(fs::path(a.out_dir) / "refs.tsv", refs);
    write_json(fs::path(a.out_dir) / "report.json", {{"split", a.split},
                                                      {"mode", a.mode},
                                                      {"stage", ckpt.stage},
                                                      {"clips", clips.size()},
                                                      {"metrics", metrics::to_json(e.report)},
                                                      {"captions", captions}});
  }
  return kExitOk;
}

int caption_cmd(const CaptionArgs& a) {
  const auto ckpt = train::load_checkpoint(checkpoint_path(a.checkpoint));
  const auto manifest = data::read_manifest(a.manifest);
  const auto mode = train::parse_decode_mode(a.mode);
  const auto features = maybe_features(a.features, ckpt.model.feat_dim);
  const data::FeatureMap* fm = features ? &*features : nullptr;
  std::vector<data::Clip> clips;
  if (a.split == "all") {
    for (auto s : {data::Split::train, data::Split::val, data::Split::test}) {
      for (auto& c : data::load_clips(manifest, s, fm)) clips.push_back(std::move(c));
    }
  } else {
    clips = data::load_clips(manifest, data::parse_split(a.split), fm);
  }
  if (clips.empty()) throw RangeError("no clips to caption");
  auto model = ckpt.captioner();
  const auto vocab = ckpt.vocab();
  const auto decoded = model::decode_all(model, train::featurize(model, clips), mode == train::DecodeMode::beam);
  std::ostringstream text;
  json report = json::array();
  for (std::size_t i = 0; i < clips.size(); ++i) {
    const auto words = vocab.decode(decoded[i].tokens);
    text << join_tokens(words) << "\n";
    report.push_back({{"id", clips[i].id}, {"tokens", words}, {"log_prob", decoded[i].log_prob}});
  }
  std::cout << text.str();
  if (!a.out_dir.empty()) {
    write_text(fs::path(a.out_dir) / "captions.txt", text.str());
    write_json(fs::path(a.out_dir) / "captions.json", report);
  }
  return kExitOk;
}

int score_cmd(const ScoreArgs& a) {
  const auto variant = metrics::parse_cider_variant(a.variant);
  // References: id TAB caption, grouped by id in order of first appearance.
  std::ifstream rs(a.refs);
  if (!rs) throw Error("cannot read " + a.refs);
  std::vector<std::string> ids;
  std::map<std::string, metrics::RefSet> refs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(rs, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError(a.refs + ":" + std::to_string(lineno) + ": expected id TAB caption");
    const auto id = line.substr(0, tab);
    if (!refs.count(id)) ids.push_back(id);
    refs[id].push_back(tokenize(line.substr(tab + 1)));
  }
  std::ifstream hs(a.hyps);
  if (!hs) throw Error("cannot read " + a.hyps);
  std::vector<metrics::Sentence> hyps;
  while (std::getline(hs, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    hyps.push_back(tokenize(line));
  }
  if (hyps.size() != ids.size()) {
    throw FormatError("hypothesis file has " + std::to_string(hyps.size()) + " lines but the reference file has " +
                      std::to_string(ids.size()) + " clips");
  }
  std::vector<metrics::RefSet> aligned;
  for (const auto& id : ids) aligned.push_back(refs[id]);
  const auto idf = a.idf.empty() ? metrics::build_idf(aligned) : metrics::read_idf(a.idf);
  const auto report = metrics::score_corpus(hyps, aligned, idf, variant);
  std::cout << metrics::to_json(report).dump() << "\n" << metrics_table("hypotheses", report);
  if (!a.out_dir.empty()) write_json(fs::path(a.out_dir) / "scores.json", metrics::to_json(report));
  return kExitOk;
}

train::AblationOptions ablation_options(const Globals& g, std::size_t seeds) {
  train::AblationOptions o;
  const std::uint64_t base = g.seed.value_or(1);
  o.seeds.clear();
  for (std::size_t i = 0; i < seeds; ++i) o.seeds.push_back(base + i);
  if (!g.config.empty()) {
    // {"step1": {...}, "step2": {...}, "step3": {...}}, each a flat training config.
    const json file = read_json(g.config);
    for (const auto& [k, v] : file.items()) {
      if (k != "step1" && k != "step2" && k != "step3") throw FormatError("unknown ablation config key '" + k + "'");
    }
    auto stage_cfg = [&](const char* key, int stage) {
      json merged = train::TrainConfig::desk(stage).to_json();
      if (file.contains(key)) {
        for (const auto& [k, v] : file.at(key).items()) merged[k] = v;
      }
      auto c = train::TrainConfig::from_json(merged, stage);
      c.validate();
      return c;
    };
    o.step1 = stage_cfg("step1", 1);
    o.step2 = stage_cfg("step2", 2);
    o.step3 = stage_cfg("step3", 3);
    o.model = o.step1.model;
  }
  return o;
}

int ablate_cmd(const Globals& g, const AblateArgs& a) {
  const auto options = ablation_options(g, a.seeds);
  const auto data = load_dataset(a.data, std::nullopt, "");
  const auto report = train::run_ablation(a.suite, data, options);
  const auto table = report.table();
  std::cout << table;
  write_json(fs::path(a.out_dir) / "ablation.json", report.to_json());
  write_text(fs::path(a.out_dir) / "ablation.txt", table);
  return kExitOk;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Video captioning with multitask reinforcement learning: data generation, training, evaluation."};
  app.name("vcap");
  app.require_subcommand(1);
  app.fallthrough();
  // --help lists the flags of every subcommand.
  app.set_help_flag();
  app.set_help_all_flag("-h,--help", "Print this help, including every subcommand's flags, and exit");
  app.failure_message(CLI::FailureMessage::help);

  Globals g;
  app.add_option("--seed", g.seed, "Random seed (corpus for gen-data, initialization and sampling for training)");
  app.add_option("--config", g.config, "JSON config: flat training config for train, per-step configs for ablate")
      ->check(CLI::ExistingFile);
  app.add_option("--log-level", g.log_level, "Log verbosity on stderr")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  GenDataArgs gd;
  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic video-caption corpus");
  gen->add_option("--clips", gd.clips, "Total clips, split 20:3:6 into train/val/test")->check(CLI::PositiveNumber);
  gen->add_option("--frames-per-clip", gd.frames_per_clip, "Frames per clip")->check(CLI::PositiveNumber);
  gen->add_option("--grammar-size", gd.grammar_size, "Words per grammar slot (subjects, actions, colors)")
      ->check(CLI::Range(1, data::kMaxGrammarSize));
  gen->add_option("--frame-size", gd.frame_size, "Frame side in pixels (multiple of 4)")->check(CLI::Range(8, 1024));
  gen->add_option("--feature-dim", gd.feature_dim,
                  "Also write features.bin from the seed-initialized frame encoder with this output size");
  gen->add_option("--out-dir", gd.out_dir, "Output directory")->required();

  MineArgs ma;
  auto* mine = app.add_subcommand("mine-attrs", "Mine the attribute lexicon and per-clip labels");
  mine->add_option("--data", ma.data, "Corpus directory or manifest.jsonl")->required()->check(CLI::ExistingPath);
  mine->add_option("--count", ma.count, "Maximum number of attributes")->check(CLI::PositiveNumber);
  mine->add_option("--out-dir", ma.out_dir, "Output directory for attributes.txt, labels.tsv and idf.json")->required();

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "Run one training step of the three-step pipeline");
  tr->add_option("--step", ta.step, "Pipeline step: 1 cross-entropy, 2 REINFORCE+, 3 multitask end-to-end")
      ->required()
      ->check(CLI::Range(1, 3));
  tr->add_option("--data", ta.data, "Corpus directory or manifest.jsonl")->required()->check(CLI::ExistingPath);
  tr->add_option("--resume", ta.resume, "Checkpoint file or directory to start from")->check(CLI::ExistingPath);
  tr->add_option("--attrs", ta.attrs, "mine-attrs output directory (mined on the fly when absent)")
      ->check(CLI::ExistingDirectory);
  tr->add_option("--features", ta.features, "Precomputed features file (frozen-encoder mode, steps 1-2 only)")
      ->check(CLI::ExistingFile);
  tr->add_option("--out,--out-dir", ta.out_dir, "Output directory for checkpoint, log and config")->required();
  tr->add_flag("--force", ta.force, "Skip the stage-order check");

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "Decode a split and score BLEU4, ROUGE-L, METEOR and CIDEr-D");
  ev->add_option("--checkpoint", ea.checkpoint, "Checkpoint file or directory")->required()->check(CLI::ExistingPath);
  ev->add_option("--data", ea.data, "Corpus directory or manifest.jsonl")->required()->check(CLI::ExistingPath);
  ev->add_option("--split", ea.split, "Split to evaluate")->check(CLI::IsMember({"train", "val", "test"}));
  ev->add_option("--mode", ea.mode, "Decoding")->check(CLI::IsMember({"greedy", "beam"}));
  ev->add_option("--features", ea.features, "Precomputed features file")->check(CLI::ExistingFile);
  ev->add_option("--out-dir", ea.out_dir, "Write report.json here");

  CaptionArgs ca;
  auto* cap = app.add_subcommand("caption", "Print one caption per clip");
  cap->add_option("--checkpoint", ca.checkpoint, "Checkpoint file or directory")->required()->check(CLI::ExistingPath);
  cap->add_option("--manifest", ca.manifest, "Corpus directory or manifest.jsonl")->required()->check(CLI::ExistingPath);
  cap->add_option("--split", ca.split, "Clips to caption")->check(CLI::IsMember({"train", "val", "test", "all"}));
  cap->add_option("--mode", ca.mode, "Decoding")->check(CLI::IsMember({"greedy", "beam"}));
  cap->add_option("--features", ca.features, "Precomputed features file")->check(CLI::ExistingFile);
  cap->add_option("--out-dir", ca.out_dir, "Write captions.txt and captions.json (id, tokens, log-prob) here");

  ScoreArgs sa;
  auto* sc = app.add_subcommand("score", "Score a hypothesis file against references");
  sc->add_option("--hyps", sa.hyps, "Hypotheses, one caption per line, in reference clip order")
      ->required()
      ->check(CLI::ExistingFile);
  sc->add_option("--refs", sa.refs, "References, one 'clip id TAB caption' per line")->required()->check(CLI::ExistingFile);
  sc->add_option("--idf", sa.idf, "Document-frequency table (JSON); defaults to the references")
      ->check(CLI::ExistingFile);
  sc->add_option("--cider-variant", sa.variant, "CIDEr flavour")->check(CLI::IsMember({"cider-d", "cider"}));
  sc->add_option("--out-dir", sa.out_dir, "Write scores.json here");

  AblateArgs aa;
  auto* ab = app.add_subcommand("ablate", "Run the ablation suite and print the comparison table");
  ab->add_option("--suite", aa.suite, "Ablation suite")->check(CLI::IsMember({"table3"}));
  ab->add_option("--seeds", aa.seeds, "Seeds per variant (consecutive from --seed)")->check(CLI::PositiveNumber);
  ab->add_option("--data", aa.data, "Corpus directory or manifest.jsonl")->required()->check(CLI::ExistingPath);
  ab->add_option("--out-dir", aa.out_dir, "Output directory for ablation.json and ablation.txt")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  auto logger = spdlog::get("vcap");
  if (!logger) logger = spdlog::stderr_color_st("vcap");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(g.log_level));

  try {
    if (*gen) return gen_data(g, gd);
    if (*mine) return mine_attrs(ma);
    if (*tr) return train_cmd(g, ta);
    if (*ev) return eval_cmd(ea);
    if (*cap) return caption_cmd(ca);
    if (*sc) return score_cmd(sa);
    if (*ab) return ablate_cmd(g, aa);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace vcap::cli
