#include "vcap/train/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <spdlog/spdlog.h>

#include "vcap/error.hpp"
#include "vcap/rl/reinforce.hpp"

namespace vcap::train {

namespace {

constexpr std::uint64_t kStageStream = 0x5851f42d4c957f2dULL;

std::vector<const data::Clip*> pointers(const std::vector<data::Clip>& clips, const std::vector<std::size_t>& idx) {
  std::vector<const data::Clip*> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(&clips[i]);
  return out;
}

// Epoch-wise shuffled minibatches.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::size_t batch, nn::Rng& rng) : order_(n), batch_(std::min(batch, n)), rng_(rng) {
    std::iota(order_.begin(), order_.end(), 0);
    reshuffle();
  }

  std::vector<std::size_t> next() {
    std::vector<std::size_t> out;
    while (out.size() < batch_) {
      if (pos_ == order_.size()) reshuffle();
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  void reshuffle() {
    // Fisher-Yates with the library generator keeps runs identical across standard libraries.
    for (std::size_t i = order_.size(); i > 1; --i) std::swap(order_[i - 1], order_[rng_() % i]);
    pos_ = 0;
  }

  std::vector<std::size_t> order_;
  std::size_t batch_;
  std::size_t pos_ = 0;
  nn::Rng& rng_;
};

std::string csv_field(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const std::vector<data::Clip>& Dataset::split(data::Split s) const {
  switch (s) {
    case data::Split::train:
      return train;
    case data::Split::val:
      return val;
    default:
      return test;
  }
}

Dataset make_dataset(const data::DatasetManifest& manifest, const data::FeatureMap* features,
                     std::optional<attributes::AttributeLexicon> lexicon, const attributes::AttributeLabels* labels,
                     std::size_t attr_count) {
  Dataset d;
  const auto captions = data::training_captions(manifest);
  d.vocab = build_vocabulary(captions);
  d.lexicon = lexicon ? std::move(*lexicon) : attributes::mine_attributes(captions, attr_count);
  if (d.lexicon.size() == 0) throw RangeError("attribute lexicon is empty");
  d.train = data::load_clips(manifest, data::Split::train, features);
  d.val = data::load_clips(manifest, data::Split::val, features);
  d.test = data::load_clips(manifest, data::Split::test, features);
  if (d.train.empty()) throw RangeError("dataset has no training clips");
  std::vector<metrics::RefSet> corpus;
  for (const auto& c : d.train) {
    corpus.push_back(c.captions);
    std::vector<Caption> refs;
    for (const auto& t : c.captions) refs.push_back(d.vocab.encode(t));
    d.train_refs.push_back(std::move(refs));
    if (labels) {
      auto it = labels->find(c.id);
      if (it == labels->end()) throw FormatError("attribute labels missing clip '" + c.id + "'");
      if (it->second.size() != d.lexicon.size()) throw DimensionError("attribute labels do not match the lexicon size");
      d.train_labels.push_back(it->second);
    } else {
      d.train_labels.push_back(attributes::label_clip(c.captions, d.lexicon));
    }
  }
  d.idf = metrics::build_idf(corpus);
  return d;
}

Dataset with_train_subset(const Dataset& data, std::size_t n) {
  Dataset d = data;
  n = std::min(n, d.train.size());
  d.train.resize(n);
  d.train_refs.resize(n);
  d.train_labels.resize(n);
  return d;
}

Checkpoint initial_checkpoint(const Dataset& data, model::CaptionerConfig config, std::uint64_t seed) {
  config.vocab_size = data.vocab.size();
  config.attr_count = data.lexicon.size();
  nn::Rng rng(seed);
  model::Captioner m(config, rng);
  Checkpoint c;
  c.model = config;
  c.vocabulary = data.vocab.words();
  c.attributes = data.lexicon.tokens();
  c.params = m.params();
  c.stage = 0;
  return c;
}

void check_stage_order(int checkpoint_stage, int target, bool force) {
  if (force || checkpoint_stage == target || checkpoint_stage == target - 1) return;
  throw StageOrderError("step " + std::to_string(target) + " expects a stage-" + std::to_string(target - 1) +
                        " checkpoint (or a stage-" + std::to_string(target) + " one to resume), got stage " +
                        std::to_string(checkpoint_stage) + "; pass --force to override");
}

std::vector<data::Clip> featurize(model::Captioner& model, const std::vector<data::Clip>& clips) {
  std::vector<data::Clip> out;
  out.reserve(clips.size());
  for (const auto& c : clips) {
    data::Clip f;
    f.id = c.id;
    f.captions = c.captions;
    f.features = c.has_frames() ? model.clip_features(c.frames) : c.features;
    out.push_back(std::move(f));
  }
  return out;
}

DecodeMode parse_decode_mode(const std::string& name) {
  if (name == "greedy") return DecodeMode::greedy;
  if (name == "beam") return DecodeMode::beam;
  throw UsageError("unknown decode mode '" + name + "' (expected greedy or beam)");
}

Evaluation evaluate(model::Captioner& model, const Vocabulary& vocab, const std::vector<data::Clip>& clips,
                    const metrics::IdfTable& idf, DecodeMode mode, metrics::CiderVariant variant) {
  if (clips.empty()) throw RangeError("evaluate: empty split");
  const auto feats = featurize(model, clips);
  Evaluation e;
  e.decoded = model::decode_all(model, feats, mode == DecodeMode::beam);
  std::vector<metrics::RefSet> refs;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    e.hypotheses.push_back(vocab.decode(e.decoded[i].tokens));
    refs.push_back(feats[i].captions);
  }
  e.report = metrics::score_corpus(e.hypotheses, refs, idf, variant);
  return e;
}

Evaluation evaluate(const Checkpoint& ckpt, const Dataset& data, data::Split split, DecodeMode mode) {
  auto m = ckpt.captioner();
  return evaluate(m, ckpt.vocab(), data.split(split), data.idf, mode);
}

void write_log_csv(const std::filesystem::path& path, const std::vector<LogRow>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot write " + path.string());
  os << "iteration,loss,loss_x,loss_r,loss_a,mean_reward,baseline_mean,val_cider\n";
  for (const auto& r : rows) {
    os << r.iteration << ',' << csv_field(r.loss) << ',' << csv_field(r.loss_x) << ',' << csv_field(r.loss_r) << ','
       << csv_field(r.loss_a) << ',' << csv_field(r.mean_reward) << ',' << csv_field(r.baseline_mean) << ','
       << csv_field(r.val_cider) << '\n';
  }
}

StageResult train_stage(const Checkpoint& start, const TrainConfig& config, const Dataset& data, bool force) {
  config.validate();
  check_stage_order(start.stage, config.stage, force);
  if (!config.encoder_frozen && !data.has_frames()) {
    throw UsageError("step " + std::to_string(config.stage) +
                     " fine-tunes the frame encoder and needs raw frames; this dataset was loaded in feature mode");
  }
  if (start.vocabulary != data.vocab.words()) throw FormatError("checkpoint vocabulary does not match the dataset");
  if (config.use_attributes && start.model.attr_count != data.lexicon.size()) {
    throw DimensionError("checkpoint has " + std::to_string(start.model.attr_count) + " attributes, lexicon has " +
                         std::to_string(data.lexicon.size()));
  }

  StageResult result;
  Checkpoint& ck = result.checkpoint;
  ck = start;
  model::Captioner model = start.captioner();
  auto& params = model.params();
  params.set_frozen_prefix(model::kEncoderPrefix, config.encoder_frozen);
  nn::AdamState adam = (start.stage == config.stage && start.adam.matches(params)) ? start.adam
                                                                                     : nn::AdamState::for_params(params);
  nn::Rng rng(config.seed ^ (kStageStream * static_cast<std::uint64_t>(config.stage)));

  const auto variant = metrics::parse_cider_variant(config.reward);
  std::optional<rl::CiderReward> reward;
  if (config.objective == Objective::reinforce) reward.emplace(data.idf, data.vocab, variant);

  // Frozen encoder: features once; otherwise the encoder runs on frames every step.
  std::vector<data::Clip> train_clips = config.encoder_frozen ? featurize(model, data.train) : data.train;

  auto validate = [&] { return evaluate(model, data.vocab, data.val, data.idf, DecodeMode::greedy).report.cider; };
  double best = validate();
  result.start_val_cider = best;
  nn::ParamStore best_params = params;
  nn::AdamState best_adam = adam;
  std::uint64_t best_iteration = start.iteration;
  spdlog::info("step {}: start val CIDEr {:.4f}", config.stage, best);

  BatchSampler sampler(train_clips.size(), config.batch_size, rng);
  std::size_t stale = 0;
  for (std::size_t it = 1; it <= config.max_iterations; ++it) {
    const auto idx = sampler.next();
    const auto clips = pointers(train_clips, idx);
    LogRow row;
    row.iteration = start.iteration + it;

    nn::Graph g;
    model::Bound p = model.bind(g);
    model::Encoded enc;
    nn::Var main;
    if (config.objective == Objective::xentropy) {
      enc = model.encode(p, clips, true, rng);
      std::vector<Caption> targets;
      for (auto i : idx) {
        const auto& refs = data.train_refs[i];
        targets.push_back(refs[rng() % refs.size()]);
      }
      main = model.teacher_forced_loss(p, enc, targets, true, rng);
      row.loss_x = g.value(main).item();
    } else {
      auto terms = rl::reinforce_terms(model, p, clips, reward->fn(), config.samples, rng, config.use_baseline);
      enc = terms.encoded;
      main = terms.loss;
      row.loss_r = g.value(main).item();
      row.mean_reward = terms.mean_reward;
      row.baseline_mean = terms.mean_baseline;
    }
    nn::Var loss = main;
    if (config.use_attributes) {
      std::vector<const std::vector<std::uint8_t>*> rows;
      for (auto i : idx) rows.push_back(&data.train_labels[i]);
      nn::Var la = attributes::attribute_loss(g, model.attribute_head(p, enc.pooled), attributes::label_matrix(rows));
      row.loss_a = g.value(la).item();
      loss = rl::multitask_loss(g, main, la, config.alpha);
    }
    row.loss = g.value(loss).item();
    if (!std::isfinite(row.loss)) {
      throw DivergenceError("step " + std::to_string(config.stage) + " diverged at iteration " +
                            std::to_string(row.iteration) + " (loss " + std::to_string(row.loss) +
                            "); lower lr or check the data");
    }
    params.zero_grad();
    if (g.requires_grad(loss)) g.backward(loss);
    nn::adam_step(params, adam, config.lr);

    if (it % config.eval_interval == 0 || it == config.max_iterations) {
      row.val_cider = validate();
      spdlog::info("step {} iter {}: loss {:.5f} val CIDEr {:.4f}", config.stage, row.iteration, row.loss,
                   row.val_cider);
      if (row.val_cider > best) {
        best = row.val_cider;
        best_params = params;
        best_adam = adam;
        best_iteration = row.iteration;
        stale = 0;
      } else if (++stale >= config.patience) {
        result.log.push_back(row);
        result.iterations_run = it;
        spdlog::info("step {}: early stop after {} evaluations without improvement", config.stage, stale);
        break;
      }
    }
    result.log.push_back(row);
    result.iterations_run = it;
  }

  // Frozen flags belong to the stage being run; the next stage resets them.
  result.last_params = params;
  ck.params = std::move(best_params);
  ck.adam = std::move(best_adam);
  ck.stage = config.stage;
  ck.iteration = best_iteration;
  ck.best_val_cider = best;
  spdlog::info("step {}: best val CIDEr {:.4f} at iteration {}", config.stage, best, best_iteration);
  return result;
}

namespace {
StageResult run_step(int step, const Checkpoint& start, const TrainConfig& config, const Dataset& data, bool force) {
  if (config.stage != step) {
    throw UsageError("config is for stage " + std::to_string(config.stage) + ", not step " + std::to_string(step));
  }
  return train_stage(start, config, data, force);
}
}  // namespace

StageResult step1_train(const Checkpoint& start, const TrainConfig& config, const Dataset& data, bool force) {
  return run_step(1, start, config, data, force);
}

StageResult step2_train(const Checkpoint& start, const TrainConfig& config, const Dataset& data, bool force) {
  return run_step(2, start, config, data, force);
}

StageResult step3_train(const Checkpoint& start, const TrainConfig& config, const Dataset& data, bool force) {
  return run_step(3, start, config, data, force);
}

}  // namespace vcap::train
