#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "vcap/data/corpus.hpp"
#include "vcap/metrics/metrics.hpp"
#include "vcap/model/captioner.hpp"

namespace vcap::rl {

/// CIDEr-D (or CIDEr) of `caption` against `refs`; an empty caption scores 0.
double compute_reward(const metrics::Sentence& caption, const metrics::RefSet& refs, const metrics::IdfTable& idf,
                      metrics::CiderVariant variant = metrics::CiderVariant::cider_d);

/// Reward of a token-id caption for a clip. Implementations must not depend on model parameters.
using RewardFn = std::function<double(const data::Clip&, const Caption&)>;

/// Caches per-clip prepared references; special tokens (including <eos>) are not scored.
class CiderReward {
 public:
  CiderReward(metrics::IdfTable idf, Vocabulary vocab, metrics::CiderVariant variant = metrics::CiderVariant::cider_d);

  double operator()(const data::Clip& clip, const Caption& caption);
  RewardFn fn();

  const metrics::IdfTable& idf() const { return *idf_; }

 private:
  std::shared_ptr<const metrics::IdfTable> idf_;
  Vocabulary vocab_;
  metrics::CiderScorer scorer_;
  std::unordered_map<std::string, metrics::CiderScorer::Prepared> refs_;
};

/// Reward of the model's own greedy decode; carries no gradient.
double self_critical_baseline(model::Captioner& model, const data::Clip& clip, const RewardFn& reward);
std::vector<double> self_critical_baselines(model::Captioner& model, const std::vector<const data::Clip*>& clips,
                                            const RewardFn& reward);

/// L_r = -(1/M) sum_m (r_m - b) log p(s_m) over scalar log-probability nodes.
nn::Var reinforce_plus_loss(nn::Graph& g, const std::vector<nn::Var>& log_probs, std::span<const double> rewards,
                            double baseline);

/// Batched form over B clips with M samples each (rows b*M + m), averaged over clips.
/// The weights (r - b) enter as constants.
nn::Var reinforce_plus_loss(nn::Graph& g, const model::SampledBatch& batch, std::span<const double> rewards,
                            std::span<const double> baselines, std::size_t samples);

/// Teacher-forces fixed trajectories through the decoder, producing the same
/// step records `sample` would have produced for them (rows b*M + m).
model::SampledBatch replay(const model::Captioner& model, model::Bound& p, const model::Encoded& enc,
                           const std::vector<model::Trajectory>& trajectories, std::size_t samples);

/// Per-trajectory log p(s) as scalar nodes built from the recorded steps.
std::vector<nn::Var> trajectory_log_probs(nn::Graph& g, const model::SampledBatch& batch);

/// L = alpha * L_r + (1 - alpha) * L_a.
nn::Var multitask_loss(nn::Graph& g, nn::Var reinforce, nn::Var attribute, double alpha);
double multitask_loss(double reinforce, double attribute, double alpha);

/// Everything one policy-gradient iteration needs, from a single parameter snapshot.
struct RlTerms {
  model::Encoded encoded;
  model::SampledBatch samples;
  std::vector<double> rewards;    // per trajectory
  std::vector<double> baselines;  // per clip
  nn::Var loss;
  double mean_reward = 0.0;
  double mean_baseline = 0.0;
};

/// Encodes `clips`, draws `samples` captions per clip, scores them and the
/// greedy baselines, and assembles L_r. With `use_baseline` false, b = 0.
RlTerms reinforce_terms(model::Captioner& model, model::Bound& p, const std::vector<const data::Clip*>& clips,
                        const RewardFn& reward, std::size_t samples, nn::Rng& rng, bool use_baseline = true);

/// Monte-Carlo moments of the L_r gradient estimator for one clip.
struct GradientMoments {
  std::vector<double> mean;
  std::vector<double> variance;  // per coordinate, unbiased
  double total_variance = 0.0;  // trace of the covariance
  std::size_t draws = 0;
};

/// Draws `draws` independent estimates of dL_r/d(named params). `baseline_shift`
/// is added to the baseline (zero baseline when `use_baseline` is false).
GradientMoments gradient_moments(model::Captioner& model, const data::Clip& clip, const RewardFn& reward,
                                 std::size_t samples, bool use_baseline, std::size_t draws, nn::Rng& rng,
                                 const std::vector<std::string>& params, double baseline_shift = 0.0);

}  // namespace vcap::rl
