#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vcap/data/corpus.hpp"
#include "vcap/data/text.hpp"
#include "vcap/nn/lstm.hpp"
#include "vcap/nn/ops.hpp"
#include "vcap/nn/param_store.hpp"

namespace vcap::model {

struct CaptionerConfig {
  std::size_t encoder_steps = 5;
  std::size_t decoder_steps = 35;
  std::size_t hidden_dim = 128;
  std::size_t embed_dim = 64;
  std::size_t attr_count = 50;
  std::size_t beam_size = 3;
  std::size_t vocab_size = 0;
  std::size_t feat_dim = 64;
  std::size_t frame_size = 32;
  std::size_t channels = 3;
  std::size_t conv1_channels = 8;
  std::size_t conv2_channels = 16;
  double dropout = 0.2;

  /// Paper dimensions (hidden 1000, embedding 500, 400 attributes).
  static CaptionerConfig paper_preset();
  void validate() const;
  nlohmann::json to_json() const;
  /// Unknown keys are rejected.
  static CaptionerConfig from_json(const nlohmann::json& j);
};

/// Uniformly spaced indices round(i (T-1)/(k-1)); clips shorter than k repeat frames.
std::vector<std::size_t> sample_frame_indices(std::size_t frames, std::size_t k);

/// Parameter-name prefix of the convolutional frame encoder.
inline constexpr const char* kEncoderPrefix = "encoder.";

struct DecodeResult {
  Caption tokens;                 // no <bos>, stops before <eos>
  std::vector<double> log_probs;  // per emitted step, including the <eos> step when present
  double log_prob = 0.0;          // sum of log_probs
  double score = 0.0;             // log_prob / number of steps
  bool terminated = false;        // ended with <eos>
};

/// One sampled caption with its per-step log-probabilities and reward.
struct Trajectory {
  Caption tokens;
  std::vector<double> log_probs;
  double log_prob = 0.0;
  double reward = 0.0;
};

class Captioner;

/// Parameters of a Captioner bound into one graph.
struct Bound {
  nn::Graph* graph = nullptr;
  nn::Var conv1_W, conv1_b, conv2_W, conv2_b, fc_W, fc_b;
  nn::Var proj_W, proj_b;
  nn::Var embed;
  nn::Var out_W, out_b;
  nn::Var attr_W, attr_b;
  std::optional<nn::FusedLstm> lstm1, lstm2;
};

struct DecoderState {
  nn::LstmState l1, l2;
};

/// Encoder outputs for a batch of B clips.
struct Encoded {
  DecoderState state;      // after the last encoder step
  nn::Var pooled;          // (B x embed) temporal mean of projected features
  std::vector<nn::Var> h1; // per encoder step layer-1 outputs (B x hidden)
  std::vector<nn::Var> h2; // per encoder step layer-2 outputs
  std::size_t batch = 0;
};

/// Teacher-forcing targets: caption truncated to decoder_steps - 1 tokens, then <eos>.
Caption decoder_targets(const Caption& caption, std::size_t decoder_steps);

/// Output of sampling M captions for each of B clips (rows b*M + m).
struct SampledBatch {
  std::vector<Trajectory> trajectories;
  std::vector<nn::Var> step_log_probs;                // per step (rows x V) masked log-softmax
  std::vector<std::vector<std::int64_t>> step_tokens; // drawn token per row per step
  std::vector<std::vector<double>> step_alive;        // 1 where the row was still generating
};

/// The two-layer LSTM encoder-decoder with frame encoder, W_I projection and attribute head.
class Captioner {
 public:
  Captioner(CaptionerConfig config, nn::Rng& rng);
  Captioner(CaptionerConfig config, nn::ParamStore params);

  const CaptionerConfig& config() const { return config_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  Bound bind(nn::Graph& g);

  /// (N, H, W, C) frames -> (N, feat_dim) features.
  nn::Var frame_features(Bound& p, nn::Var frames) const;
  /// Per-frame features of a whole clip without recording, (T, feat_dim).
  nn::Tensor clip_features(const nn::Tensor& frames);

  /// Runs the encoder over k sampled frames (or features) of each clip.
  Encoded encode(Bound& p, const std::vector<const data::Clip*>& clips, bool training, nn::Rng& rng) const;
  /// One decoder step fed `prev` tokens; returns full (unmasked) logits (B x V).
  nn::Var decode_step(Bound& p, DecoderState& state, std::span<const std::int64_t> prev, bool training,
                      nn::Rng& rng) const;
  /// Log-softmax with <pad>/<bos> removed from the support (decoding distribution).
  nn::Var decoding_log_probs(Bound& p, nn::Var logits) const;

  /// Mean over clips of the per-clip mean token negative log-likelihood of `captions[b]` (plus <eos>).
  nn::Var teacher_forced_loss(Bound& p, const Encoded& enc, const std::vector<Caption>& captions, bool training,
                              nn::Rng& rng) const;
  /// Sigmoid attribute probabilities (B x N) from the pooled feature.
  nn::Var attribute_head(Bound& p, nn::Var pooled) const;

  std::vector<DecodeResult> greedy_decode(const std::vector<const data::Clip*>& clips);
  DecodeResult greedy_decode(const data::Clip& clip) { return greedy_decode({&clip}).front(); }
  DecodeResult beam_search(const data::Clip& clip, std::size_t beam);
  /// M multinomial samples per clip in a recording graph; decoding is dropout-free.
  SampledBatch sample(Bound& p, const Encoded& enc, std::size_t samples, nn::Rng& rng) const;
  /// Convenience single-clip sampler (non-recording).
  Trajectory sample_caption(const data::Clip& clip, nn::Rng& rng);

 private:
  void register_params(nn::Rng& rng);
  nn::Var feature_input(Bound& p, const std::vector<const data::Clip*>& clips,
                        const std::vector<std::vector<std::size_t>>& indices) const;

  CaptionerConfig config_;
  nn::ParamStore params_;
};

/// Greedy or beam decoding of many clips, in order.
std::vector<DecodeResult> decode_all(Captioner& model, const std::vector<data::Clip>& clips, bool beam,
                                     std::size_t batch = 32);

}  // namespace vcap::model
