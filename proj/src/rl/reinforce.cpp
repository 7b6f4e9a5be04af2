#include "vcap/rl/reinforce.hpp"

#include <cmath>

#include "vcap/error.hpp"

namespace vcap::rl {

using model::SampledBatch;
using nn::Graph;
using nn::Var;

double compute_reward(const metrics::Sentence& caption, const metrics::RefSet& refs, const metrics::IdfTable& idf,
                      metrics::CiderVariant variant) {
  if (caption.empty()) return 0.0;
  return metrics::cider_d(caption, refs, idf, variant);
}

CiderReward::CiderReward(metrics::IdfTable idf, Vocabulary vocab, metrics::CiderVariant variant)
    : idf_(std::make_shared<const metrics::IdfTable>(std::move(idf))),
      vocab_(std::move(vocab)),
      scorer_(*idf_, variant) {}

double CiderReward::operator()(const data::Clip& clip, const Caption& caption) {
  auto it = refs_.find(clip.id);
  if (it == refs_.end()) it = refs_.emplace(clip.id, scorer_.prepare(clip.captions)).first;
  const Tokens words = vocab_.decode(caption);
  if (words.empty()) return 0.0;
  return scorer_.score(words, it->second);
}

RewardFn CiderReward::fn() {
  return [this](const data::Clip& clip, const Caption& caption) { return (*this)(clip, caption); };
}

double self_critical_baseline(model::Captioner& model, const data::Clip& clip, const RewardFn& reward) {
  return reward(clip, model.greedy_decode(clip).tokens);
}

std::vector<double> self_critical_baselines(model::Captioner& model, const std::vector<const data::Clip*>& clips,
                                            const RewardFn& reward) {
  const auto decoded = model.greedy_decode(clips);
  std::vector<double> out;
  out.reserve(clips.size());
  for (std::size_t b = 0; b < clips.size(); ++b) out.push_back(reward(*clips[b], decoded[b].tokens));
  return out;
}

Var reinforce_plus_loss(Graph& g, const std::vector<Var>& log_probs, std::span<const double> rewards,
                        double baseline) {
  if (log_probs.empty()) throw RangeError("reinforce_plus_loss: needs at least one trajectory");
  if (rewards.size() != log_probs.size()) throw DimensionError("reinforce_plus_loss: one reward per trajectory");
  const double M = static_cast<double>(log_probs.size());
  std::vector<Var> terms;
  for (std::size_t m = 0; m < log_probs.size(); ++m) {
    terms.push_back(nn::scale(g, log_probs[m], -(rewards[m] - baseline) / M));
  }
  return nn::add_n(g, terms);
}

Var reinforce_plus_loss(Graph& g, const SampledBatch& batch, std::span<const double> rewards,
                        std::span<const double> baselines, std::size_t samples) {
  if (samples == 0) throw RangeError("reinforce_plus_loss: needs at least one trajectory");
  const std::size_t rows = batch.trajectories.size();
  if (rewards.size() != rows) throw DimensionError("reinforce_plus_loss: one reward per trajectory");
  if (baselines.size() * samples != rows) throw DimensionError("reinforce_plus_loss: one baseline per clip");
  const double norm = static_cast<double>(rows);  // M * B
  std::vector<double> advantage(rows);
  for (std::size_t r = 0; r < rows; ++r) advantage[r] = rewards[r] - baselines[r / samples];

  std::vector<Var> terms;
  for (std::size_t t = 0; t < batch.step_log_probs.size(); ++t) {
    std::vector<double> w(rows, 0.0);
    bool any = false;
    for (std::size_t r = 0; r < rows; ++r) {
      if (batch.step_alive[t][r] > 0.0 && advantage[r] != 0.0) {
        w[r] = -advantage[r] / norm;
        any = true;
      }
    }
    if (any) terms.push_back(nn::pick_weighted_sum(g, batch.step_log_probs[t], batch.step_tokens[t], w));
  }
  if (terms.empty()) return g.constant(nn::Tensor::scalar(0.0));
  return terms.size() == 1 ? terms.front() : nn::add_n(g, terms);
}

SampledBatch replay(const model::Captioner& model, model::Bound& p, const model::Encoded& enc,
                    const std::vector<model::Trajectory>& trajectories, std::size_t samples) {
  Graph& g = *p.graph;
  const std::size_t rows = trajectories.size();
  if (samples == 0 || rows != enc.batch * samples) throw DimensionError("replay: expected batch x samples trajectories");
  auto rep = [&](Var v) { return samples == 1 ? v : nn::repeat_rows(g, v, samples); };
  model::DecoderState state{{rep(enc.state.l1.h), rep(enc.state.l1.c)}, {rep(enc.state.l2.h), rep(enc.state.l2.c)}};

  std::vector<Caption> emitted(rows);
  std::size_t longest = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    emitted[r] = trajectories[r].tokens;
    if (trajectories[r].log_probs.size() > trajectories[r].tokens.size()) emitted[r].push_back(Vocabulary::kEos);
    longest = std::max(longest, emitted[r].size());
  }
  SampledBatch out;
  out.trajectories.resize(rows);
  std::vector<std::int64_t> prev(rows, Vocabulary::kBos);
  nn::Rng unused(0);
  for (std::size_t t = 0; t < longest; ++t) {
    Var lpv = model.decoding_log_probs(p, model.decode_step(p, state, prev, false, unused));
    const nn::Tensor& lp = g.value(lpv);
    std::vector<std::int64_t> tokens(rows, Vocabulary::kPad);
    std::vector<double> alive(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      if (t >= emitted[r].size()) {
        prev[r] = Vocabulary::kEos;
        continue;
      }
      const auto tok = emitted[r][t];
      auto& tr = out.trajectories[r];
      tr.log_probs.push_back(lp.at(r, static_cast<std::size_t>(tok)));
      tr.log_prob += tr.log_probs.back();
      if (tok != Vocabulary::kEos) tr.tokens.push_back(tok);
      tr.reward = trajectories[r].reward;
      tokens[r] = tok;
      alive[r] = 1.0;
      prev[r] = tok;
    }
    out.step_log_probs.push_back(lpv);
    out.step_tokens.push_back(std::move(tokens));
    out.step_alive.push_back(std::move(alive));
  }
  return out;
}

std::vector<Var> trajectory_log_probs(Graph& g, const SampledBatch& batch) {
  const std::size_t rows = batch.trajectories.size();
  std::vector<Var> out;
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<Var> terms;
    for (std::size_t t = 0; t < batch.step_log_probs.size(); ++t) {
      if (batch.step_alive[t][r] <= 0.0) continue;
      std::vector<double> w(rows, 0.0);
      w[r] = 1.0;
      terms.push_back(nn::pick_weighted_sum(g, batch.step_log_probs[t], batch.step_tokens[t], w));
    }
    if (terms.empty()) throw RangeError("trajectory_log_probs: trajectory with no steps");
    out.push_back(terms.size() == 1 ? terms.front() : nn::add_n(g, terms));
  }
  return out;
}

namespace {
void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw RangeError("multitask alpha must lie in [0, 1], got " + std::to_string(alpha));
}
}  // namespace

Var multitask_loss(Graph& g, Var reinforce, Var attribute, double alpha) {
  check_alpha(alpha);
  if (alpha == 1.0) return reinforce;
  if (alpha == 0.0) return attribute;
  return nn::add(g, nn::scale(g, reinforce, alpha), nn::scale(g, attribute, 1.0 - alpha));
}

double multitask_loss(double reinforce, double attribute, double alpha) {
  check_alpha(alpha);
  return alpha * reinforce + (1.0 - alpha) * attribute;
}

RlTerms reinforce_terms(model::Captioner& model, model::Bound& p, const std::vector<const data::Clip*>& clips,
                        const RewardFn& reward, std::size_t samples, nn::Rng& rng, bool use_baseline) {
  RlTerms out;
  out.baselines = use_baseline ? self_critical_baselines(model, clips, reward) : std::vector<double>(clips.size(), 0.0);
  out.encoded = model.encode(p, clips, false, rng);
  out.samples = model.sample(p, out.encoded, samples, rng);
  out.rewards.reserve(out.samples.trajectories.size());
  for (std::size_t r = 0; r < out.samples.trajectories.size(); ++r) {
    auto& tr = out.samples.trajectories[r];
    tr.reward = reward(*clips[r / samples], tr.tokens);
    out.rewards.push_back(tr.reward);
    out.mean_reward += tr.reward;
  }
  out.mean_reward /= static_cast<double>(out.rewards.size());
  for (double b : out.baselines) out.mean_baseline += b;
  out.mean_baseline /= static_cast<double>(out.baselines.size());
  out.loss = reinforce_plus_loss(*p.graph, out.samples, out.rewards, out.baselines, samples);
  return out;
}

GradientMoments gradient_moments(model::Captioner& model, const data::Clip& clip, const RewardFn& reward,
                                 std::size_t samples, bool use_baseline, std::size_t draws, nn::Rng& rng,
                                 const std::vector<std::string>& params, double baseline_shift) {
  if (draws < 2) throw RangeError("gradient_moments: need at least two draws");
  std::size_t dim = 0;
  for (const auto& n : params) dim += model.params().get(n).tensor.size();
  const double b0 = (use_baseline ? self_critical_baseline(model, clip, reward) : 0.0) + baseline_shift;

  std::vector<double> mean(dim, 0.0), m2(dim, 0.0), grad(dim);
  for (std::size_t d = 0; d < draws; ++d) {
    model.params().zero_grad();
    {
      Graph g;
      model::Bound p = model.bind(g);
      auto enc = model.encode(p, {&clip}, false, rng);
      auto batch = model.sample(p, enc, samples, rng);
      std::vector<double> rewards;
      for (const auto& tr : batch.trajectories) rewards.push_back(reward(clip, tr.tokens));
      const std::vector<double> baseline{b0};
      Var loss = reinforce_plus_loss(g, batch, rewards, baseline, samples);
      if (g.requires_grad(loss)) g.backward(loss);
    }
    std::size_t k = 0;
    for (const auto& n : params) {
      const auto& t = std::as_const(model.params().get(n).tensor);
      auto gr = t.grad();
      for (std::size_t i = 0; i < t.size(); ++i) grad[k++] = gr.empty() ? 0.0 : gr[i];
    }
    // Welford update
    const double count = static_cast<double>(d + 1);
    for (std::size_t i = 0; i < dim; ++i) {
      const double delta = grad[i] - mean[i];
      mean[i] += delta / count;
      m2[i] += delta * (grad[i] - mean[i]);
    }
  }
  model.params().zero_grad();
  GradientMoments out;
  out.mean = std::move(mean);
  out.draws = draws;
  for (double v : m2) {
    out.variance.push_back(v / static_cast<double>(draws - 1));
    out.total_variance += out.variance.back();
  }
  return out;
}

}  // namespace vcap::rl
