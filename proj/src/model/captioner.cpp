#include "vcap/model/captioner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "vcap/error.hpp"
#include "vcap/nn/init.hpp"

namespace vcap::model {

using nn::Graph;
using nn::Tensor;
using nn::Var;

namespace {

constexpr double kMasked = -1e9;

std::size_t argmax_row(const Tensor& t, std::size_t r) {
  std::size_t best = 0;
  double bv = t.at(r, 0);
  for (std::size_t c = 1; c < t.cols(); ++c) {
    if (t.at(r, c) > bv) {
      bv = t.at(r, c);
      best = c;
    }
  }
  return best;
}

std::size_t draw_row(const Tensor& log_probs, std::size_t r, nn::Rng& rng) {
  const double u = nn::uniform01(rng);
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t c = 0; c < log_probs.cols(); ++c) {
    const double p = std::exp(log_probs.at(r, c));
    if (p <= 0.0) continue;
    acc += p;
    last = c;
    if (u < acc) return c;
  }
  return last;  // rounding slack
}

Tensor encoder_init(const nn::Shape& shape, std::size_t fan_in, nn::Rng& rng) {
  return nn::init_uniform(shape, rng, std::sqrt(3.0 / static_cast<double>(fan_in)));
}

}  // namespace

CaptionerConfig CaptionerConfig::paper_preset() {
  CaptionerConfig c;
  c.hidden_dim = 1000;
  c.embed_dim = 500;
  c.attr_count = 400;
  return c;
}

void CaptionerConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw RangeError(std::string("captioner config: ") + name + " must be positive");
  };
  positive(encoder_steps, "encoder_steps");
  positive(decoder_steps, "decoder_steps");
  positive(hidden_dim, "hidden_dim");
  positive(embed_dim, "embed_dim");
  positive(attr_count, "attr_count");
  positive(beam_size, "beam_size");
  positive(feat_dim, "feat_dim");
  positive(channels, "channels");
  positive(conv1_channels, "conv1_channels");
  positive(conv2_channels, "conv2_channels");
  if (vocab_size <= Vocabulary::kReserved) throw RangeError("captioner config: vocabulary has no words");
  if (frame_size < 4 || frame_size % 4 != 0) throw RangeError("captioner config: frame_size must be a multiple of 4");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw RangeError("captioner config: dropout must lie in [0, 1)");
}

nlohmann::json CaptionerConfig::to_json() const {
  return {{"encoder_steps", encoder_steps}, {"decoder_steps", decoder_steps},   {"hidden_dim", hidden_dim},
          {"embed_dim", embed_dim},         {"attr_count", attr_count},         {"beam_size", beam_size},
          {"vocab_size", vocab_size},       {"feat_dim", feat_dim},             {"frame_size", frame_size},
          {"channels", channels},           {"conv1_channels", conv1_channels}, {"conv2_channels", conv2_channels},
          {"dropout", dropout}};
}

CaptionerConfig CaptionerConfig::from_json(const nlohmann::json& j) {
  CaptionerConfig c;
  const std::set<std::string> known = {"encoder_steps", "decoder_steps", "hidden_dim", "embed_dim", "attr_count",
                                       "beam_size",     "vocab_size",    "feat_dim",   "frame_size", "channels",
                                       "conv1_channels", "conv2_channels", "dropout"};
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw FormatError("unknown captioner config key '" + k + "'");
  }
  auto get = [&](const char* key, std::size_t& field) {
    if (j.contains(key)) field = j.at(key).get<std::size_t>();
  };
  get("encoder_steps", c.encoder_steps);
  get("decoder_steps", c.decoder_steps);
  get("hidden_dim", c.hidden_dim);
  get("embed_dim", c.embed_dim);
  get("attr_count", c.attr_count);
  get("beam_size", c.beam_size);
  get("vocab_size", c.vocab_size);
  get("feat_dim", c.feat_dim);
  get("frame_size", c.frame_size);
  get("channels", c.channels);
  get("conv1_channels", c.conv1_channels);
  get("conv2_channels", c.conv2_channels);
  if (j.contains("dropout")) c.dropout = j.at("dropout").get<double>();
  return c;
}

std::vector<std::size_t> sample_frame_indices(std::size_t frames, std::size_t k) {
  if (frames == 0) throw RangeError("sample_frame_indices: clip has no frames");
  std::vector<std::size_t> out(k, 0);
  if (k <= 1) return out;
  for (std::size_t i = 0; i < k; ++i) {
    const double pos = static_cast<double>(i) * static_cast<double>(frames - 1) / static_cast<double>(k - 1);
    out[i] = std::min<std::size_t>(static_cast<std::size_t>(std::lround(pos)), frames - 1);
  }
  return out;
}

Caption decoder_targets(const Caption& caption, std::size_t decoder_steps) {
  if (caption.empty()) throw RangeError("teacher forcing needs a non-empty caption");
  if (decoder_steps == 0) throw RangeError("decoder_steps must be positive");
  Caption out(caption.begin(), caption.begin() + static_cast<std::ptrdiff_t>(std::min(caption.size(), decoder_steps - 1)));
  out.push_back(Vocabulary::kEos);
  return out;
}

Captioner::Captioner(CaptionerConfig config, nn::Rng& rng) : config_(config) {
  config_.validate();
  register_params(rng);
}

Captioner::Captioner(CaptionerConfig config, nn::ParamStore params) : config_(config), params_(std::move(params)) {
  config_.validate();
  nn::Rng probe(0);
  Captioner shape_ref(config_, probe);
  for (const auto& p : shape_ref.params_) {
    if (!params_.contains(p->name)) throw FormatError("checkpoint lacks parameter '" + p->name + "'");
    const auto& got = params_.get(p->name).tensor.shape();
    if (got != p->tensor.shape()) {
      throw DimensionError("parameter '" + p->name + "' has shape " + nn::shape_string(got) + ", config expects " +
                           nn::shape_string(p->tensor.shape()));
    }
  }
  if (params_.size() != shape_ref.params_.size()) throw FormatError("checkpoint has unexpected extra parameters");
}

void Captioner::register_params(nn::Rng& rng) {
  const auto& c = config_;
  const std::size_t pooled = c.frame_size / 4;
  const std::size_t flat = c.conv2_channels * pooled * pooled;
  params_.add("encoder.conv1.W", encoder_init({c.conv1_channels, 3, 3, c.channels}, 9 * c.channels, rng));
  params_.add("encoder.conv1.b", Tensor({c.conv1_channels}));
  params_.add("encoder.conv2.W", encoder_init({c.conv2_channels, 3, 3, c.conv1_channels}, 9 * c.conv1_channels, rng));
  params_.add("encoder.conv2.b", Tensor({c.conv2_channels}));
  params_.add("encoder.fc.W", encoder_init({c.feat_dim, flat}, flat, rng));
  params_.add("encoder.fc.b", Tensor({c.feat_dim}));
  params_.add("proj.W", nn::init_uniform({c.embed_dim, c.feat_dim}, rng));
  params_.add("proj.b", nn::init_uniform({c.embed_dim}, rng));
  nn::register_lstm(params_, "lstm1", c.embed_dim, c.hidden_dim, rng);
  params_.add("embed.E", nn::init_uniform({c.vocab_size, c.embed_dim}, rng));
  nn::register_lstm(params_, "lstm2", c.hidden_dim + c.embed_dim, c.hidden_dim, rng);
  params_.add("out.W", nn::init_uniform({c.vocab_size, c.hidden_dim}, rng));
  params_.add("out.b", nn::init_uniform({c.vocab_size}, rng));
  params_.add("attr.W", nn::init_uniform({c.attr_count, c.embed_dim}, rng));
  params_.add("attr.b", nn::init_uniform({c.attr_count}, rng));
}

Bound Captioner::bind(Graph& g) {
  Bound b;
  b.graph = &g;
  auto p = [&](const char* name) { return g.param(params_.get(name)); };
  b.conv1_W = p("encoder.conv1.W");
  b.conv1_b = p("encoder.conv1.b");
  b.conv2_W = p("encoder.conv2.W");
  b.conv2_b = p("encoder.conv2.b");
  b.fc_W = p("encoder.fc.W");
  b.fc_b = p("encoder.fc.b");
  b.proj_W = p("proj.W");
  b.proj_b = p("proj.b");
  b.embed = p("embed.E");
  b.out_W = p("out.W");
  b.out_b = p("out.b");
  b.attr_W = p("attr.W");
  b.attr_b = p("attr.b");
  b.lstm1.emplace(g, nn::bind_lstm(g, params_, "lstm1"));
  b.lstm2.emplace(g, nn::bind_lstm(g, params_, "lstm2"));
  return b;
}

Var Captioner::frame_features(Bound& p, Var frames) const {
  Graph& g = *p.graph;
  const auto& shape = g.shape(frames);
  const auto& c = config_;
  if (shape.size() != 4 || shape[1] != c.frame_size || shape[2] != c.frame_size || shape[3] != c.channels) {
    throw DimensionError("frame encoder expects (N," + std::to_string(c.frame_size) + "," +
                         std::to_string(c.frame_size) + "," + std::to_string(c.channels) + ") frames, got " +
                         nn::shape_string(shape));
  }
  const std::size_t n = shape[0];
  Var h = nn::max_pool2(g, nn::relu(g, nn::conv2d(g, frames, p.conv1_W, p.conv1_b)));
  h = nn::max_pool2(g, nn::relu(g, nn::conv2d(g, h, p.conv2_W, p.conv2_b)));
  h = nn::reshape(g, h, {n, g.value(h).size() / n});
  return nn::dense(g, h, p.fc_W, p.fc_b);
}

Tensor Captioner::clip_features(const Tensor& frames) {
  Graph g(false);
  Bound p = bind(g);
  return g.value(frame_features(p, g.constant(frames)));
}

Var Captioner::feature_input(Bound& p, const std::vector<const data::Clip*>& clips,
                             const std::vector<std::vector<std::size_t>>& indices) const {
  Graph& g = *p.graph;
  const std::size_t B = clips.size(), k = config_.encoder_steps;
  const bool frames = clips.front()->has_frames();
  for (const auto* c : clips) {
    if (c->has_frames() != frames) throw UsageError("a batch mixes frame clips and feature clips");
  }
  if (frames) {
    const auto& fs = clips.front()->frames.shape();
    const std::size_t per = fs[1] * fs[2] * fs[3];
    Tensor x({k * B, fs[1], fs[2], fs[3]});
    for (std::size_t t = 0; t < k; ++t) {
      for (std::size_t b = 0; b < B; ++b) {
        const auto& src = clips[b]->frames;
        if (src.size() / src.dim(0) != per) throw DimensionError("clips in a batch have different frame shapes");
        std::copy_n(src.values().begin() + static_cast<std::ptrdiff_t>(indices[b][t] * per), per,
                    x.values().begin() + static_cast<std::ptrdiff_t>((t * B + b) * per));
      }
    }
    return frame_features(p, g.constant(std::move(x)));
  }
  const std::size_t d = config_.feat_dim;
  Tensor x({k * B, d});
  for (std::size_t t = 0; t < k; ++t) {
    for (std::size_t b = 0; b < B; ++b) {
      const auto& src = clips[b]->features;
      if (src.cols() != d) {
        throw DimensionError("clip '" + clips[b]->id + "' has feat_dim " + std::to_string(src.cols()) +
                             " but the model expects " + std::to_string(d));
      }
      std::copy_n(src.values().begin() + static_cast<std::ptrdiff_t>(indices[b][t] * d), d,
                  x.values().begin() + static_cast<std::ptrdiff_t>((t * B + b) * d));
    }
  }
  return g.constant(std::move(x));
}

Encoded Captioner::encode(Bound& p, const std::vector<const data::Clip*>& clips, bool training, nn::Rng& rng) const {
  if (clips.empty()) throw RangeError("encode: empty batch");
  Graph& g = *p.graph;
  const std::size_t B = clips.size(), k = config_.encoder_steps;
  std::vector<std::vector<std::size_t>> indices;
  for (const auto* c : clips) indices.push_back(sample_frame_indices(c->length(), k));
  Var x = nn::dense(g, feature_input(p, clips, indices), p.proj_W, p.proj_b);

  const std::vector<std::int64_t> pad(B, Vocabulary::kPad);
  Var pad_embed = nn::embedding(g, p.embed, pad);
  Encoded enc;
  enc.batch = B;
  enc.state.l1 = p.lstm1->zero_state(g, B);
  enc.state.l2 = p.lstm2->zero_state(g, B);
  std::vector<Var> steps;
  for (std::size_t t = 0; t < k; ++t) {
    Var xt = nn::slice_rows(g, x, t * B, B);
    steps.push_back(xt);
    enc.state.l1 = p.lstm1->step(g, xt, enc.state.l1);
    Var in2 = nn::concat_cols(g, {nn::dropout(g, enc.state.l1.h, config_.dropout, training, rng), pad_embed});
    enc.state.l2 = p.lstm2->step(g, in2, enc.state.l2);
    enc.h1.push_back(enc.state.l1.h);
    enc.h2.push_back(enc.state.l2.h);
  }
  enc.pooled = nn::mean_of(g, steps);
  return enc;
}

Var Captioner::decode_step(Bound& p, DecoderState& state, std::span<const std::int64_t> prev, bool training,
                           nn::Rng& rng) const {
  Graph& g = *p.graph;
  state.l1 = p.lstm1->step(g, std::nullopt, state.l1);
  Var word = nn::embedding(g, p.embed, prev);
  Var in2 = nn::concat_cols(g, {nn::dropout(g, state.l1.h, config_.dropout, training, rng), word});
  state.l2 = p.lstm2->step(g, in2, state.l2);
  return nn::dense(g, nn::dropout(g, state.l2.h, config_.dropout, training, rng), p.out_W, p.out_b);
}

Var Captioner::decoding_log_probs(Bound& p, Var logits) const {
  Graph& g = *p.graph;
  Tensor mask(g.shape(logits));
  for (std::size_t r = 0; r < mask.rows(); ++r) {
    mask.at(r, Vocabulary::kPad) = kMasked;
    mask.at(r, Vocabulary::kBos) = kMasked;
  }
  return nn::log_softmax(g, nn::add(g, logits, g.constant(std::move(mask))));
}

Var Captioner::teacher_forced_loss(Bound& p, const Encoded& enc, const std::vector<Caption>& captions, bool training,
                                   nn::Rng& rng) const {
  Graph& g = *p.graph;
  const std::size_t B = enc.batch;
  if (captions.size() != B) throw DimensionError("teacher_forced_loss: one caption per clip required");
  std::vector<Caption> targets;
  std::size_t longest = 0;
  for (const auto& c : captions) {
    targets.push_back(decoder_targets(c, config_.decoder_steps));
    longest = std::max(longest, targets.back().size());
  }
  DecoderState state = enc.state;
  std::vector<std::int64_t> prev(B, Vocabulary::kBos);
  std::vector<Var> terms;
  for (std::size_t t = 0; t < longest; ++t) {
    Var lp = nn::log_softmax(g, decode_step(p, state, prev, training, rng));
    std::vector<std::int64_t> tgt(B, Vocabulary::kPad);
    std::vector<double> w(B, 0.0);
    for (std::size_t b = 0; b < B; ++b) {
      if (t < targets[b].size()) {
        tgt[b] = targets[b][t];
        w[b] = -1.0 / (static_cast<double>(targets[b].size()) * static_cast<double>(B));
      }
    }
    terms.push_back(nn::pick_weighted_sum(g, lp, tgt, w));
    prev = tgt;
  }
  return terms.size() == 1 ? terms.front() : nn::add_n(g, terms);
}

Var Captioner::attribute_head(Bound& p, Var pooled) const {
  Graph& g = *p.graph;
  return nn::sigmoid(g, nn::dense(g, pooled, p.attr_W, p.attr_b));
}

std::vector<DecodeResult> Captioner::greedy_decode(const std::vector<const data::Clip*>& clips) {
  Graph g(false);
  Bound p = bind(g);
  nn::Rng unused(0);
  Encoded enc = encode(p, clips, false, unused);
  const std::size_t B = clips.size();
  std::vector<DecodeResult> out(B);
  std::vector<bool> done(B, false);
  std::vector<std::int64_t> prev(B, Vocabulary::kBos);
  DecoderState state = enc.state;
  std::size_t remaining = B;
  for (std::size_t t = 0; t < config_.decoder_steps && remaining > 0; ++t) {
    const Tensor& lp = g.value(decoding_log_probs(p, decode_step(p, state, prev, false, unused)));
    for (std::size_t b = 0; b < B; ++b) {
      if (done[b]) continue;
      const auto tok = static_cast<std::int64_t>(argmax_row(lp, b));
      out[b].log_probs.push_back(lp.at(b, static_cast<std::size_t>(tok)));
      out[b].log_prob += out[b].log_probs.back();
      prev[b] = tok;
      if (tok == Vocabulary::kEos) {
        done[b] = true;
        out[b].terminated = true;
        --remaining;
      } else {
        out[b].tokens.push_back(tok);
      }
    }
  }
  for (auto& r : out) r.score = r.log_probs.empty() ? 0.0 : r.log_prob / static_cast<double>(r.log_probs.size());
  return out;
}

DecodeResult Captioner::beam_search(const data::Clip& clip, std::size_t beam) {
  if (beam == 0) throw RangeError("beam size must be at least 1");
  struct Hyp {
    Caption tokens;
    std::vector<double> log_probs;
    double sum = 0.0;
  };
  Graph g(false);
  Bound p = bind(g);
  nn::Rng unused(0);
  Encoded enc = encode(p, {&clip}, false, unused);
  DecoderState state = enc.state;
  std::vector<Hyp> active(1);
  std::vector<DecodeResult> finished;
  const auto V = config_.vocab_size;

  for (std::size_t t = 0; t < config_.decoder_steps && !active.empty(); ++t) {
    std::vector<std::int64_t> prev;
    for (const auto& h : active) prev.push_back(h.tokens.empty() ? Vocabulary::kBos : h.tokens.back());
    const Tensor& lp = g.value(decoding_log_probs(p, decode_step(p, state, prev, false, unused)));

    struct Cand {
      double score;
      std::size_t parent;
      std::int64_t token;
    };
    std::vector<Cand> cands;
    cands.reserve(active.size() * V);
    for (std::size_t a = 0; a < active.size(); ++a) {
      for (std::size_t v = 0; v < V; ++v) {
        if (v == Vocabulary::kPad || v == Vocabulary::kBos) continue;
        cands.push_back({active[a].sum + lp.at(a, v), a, static_cast<std::int64_t>(v)});
      }
    }
    auto better = [&](const Cand& x, const Cand& y) {
      if (x.score != y.score) return x.score > y.score;
      const auto& tx = active[x.parent].tokens;
      const auto& ty = active[y.parent].tokens;
      if (tx != ty) return tx < ty;
      return x.token < y.token;
    };
    const std::size_t keep = std::min(beam, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(), better);

    std::vector<Hyp> next;
    std::vector<std::size_t> parents;
    for (std::size_t i = 0; i < keep; ++i) {
      const auto& c = cands[i];
      Hyp h = active[c.parent];
      h.sum = c.score;
      h.log_probs.push_back(lp.at(c.parent, static_cast<std::size_t>(c.token)));
      if (c.token == Vocabulary::kEos) {
        DecodeResult r;
        r.tokens = std::move(h.tokens);
        r.log_probs = std::move(h.log_probs);
        r.log_prob = h.sum;
        r.terminated = true;
        finished.push_back(std::move(r));
      } else {
        h.tokens.push_back(c.token);
        next.push_back(std::move(h));
        parents.push_back(c.parent);
      }
    }
    active = std::move(next);
    if (!active.empty()) {
      auto pick = [&](Var v) { return nn::gather_rows(g, v, parents); };
      state = {{pick(state.l1.h), pick(state.l1.c)}, {pick(state.l2.h), pick(state.l2.c)}};
    }
  }
  for (auto& h : active) {
    DecodeResult r;
    r.tokens = std::move(h.tokens);
    r.log_probs = std::move(h.log_probs);
    r.log_prob = h.sum;
    finished.push_back(std::move(r));
  }
  for (auto& r : finished) r.score = r.log_prob / static_cast<double>(r.log_probs.size());
  return *std::min_element(finished.begin(), finished.end(), [](const DecodeResult& x, const DecodeResult& y) {
    if (x.score != y.score) return x.score > y.score;
    return x.tokens < y.tokens;
  });
}

SampledBatch Captioner::sample(Bound& p, const Encoded& enc, std::size_t samples, nn::Rng& rng) const {
  if (samples == 0) throw RangeError("sample: need at least one trajectory per clip");
  Graph& g = *p.graph;
  const std::size_t rows = enc.batch * samples;
  auto rep = [&](Var v) { return samples == 1 ? v : nn::repeat_rows(g, v, samples); };
  DecoderState state{{rep(enc.state.l1.h), rep(enc.state.l1.c)}, {rep(enc.state.l2.h), rep(enc.state.l2.c)}};
  SampledBatch out;
  out.trajectories.resize(rows);
  std::vector<bool> done(rows, false);
  std::vector<std::int64_t> prev(rows, Vocabulary::kBos);
  std::size_t remaining = rows;
  for (std::size_t t = 0; t < config_.decoder_steps && remaining > 0; ++t) {
    Var lpv = decoding_log_probs(p, decode_step(p, state, prev, false, rng));
    const Tensor& lp = g.value(lpv);
    std::vector<std::int64_t> tokens(rows, Vocabulary::kPad);
    std::vector<double> alive(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      if (done[r]) {
        prev[r] = Vocabulary::kEos;
        continue;
      }
      const auto tok = static_cast<std::int64_t>(draw_row(lp, r, rng));
      auto& tr = out.trajectories[r];
      tr.log_probs.push_back(lp.at(r, static_cast<std::size_t>(tok)));
      tr.log_prob += tr.log_probs.back();
      tokens[r] = tok;
      alive[r] = 1.0;
      prev[r] = tok;
      if (tok == Vocabulary::kEos) {
        done[r] = true;
        --remaining;
      } else {
        tr.tokens.push_back(tok);
      }
    }
    out.step_log_probs.push_back(lpv);
    out.step_tokens.push_back(std::move(tokens));
    out.step_alive.push_back(std::move(alive));
  }
  return out;
}

Trajectory Captioner::sample_caption(const data::Clip& clip, nn::Rng& rng) {
  Graph g(false);
  Bound p = bind(g);
  Encoded enc = encode(p, {&clip}, false, rng);
  return sample(p, enc, 1, rng).trajectories.front();
}

std::vector<DecodeResult> decode_all(Captioner& model, const std::vector<data::Clip>& clips, bool beam,
                                     std::size_t batch) {
  std::vector<DecodeResult> out;
  out.reserve(clips.size());
  if (beam) {
    for (const auto& c : clips) out.push_back(model.beam_search(c, model.config().beam_size));
    return out;
  }
  for (std::size_t i = 0; i < clips.size(); i += batch) {
    std::vector<const data::Clip*> chunk;
    for (std::size_t j = i; j < std::min(clips.size(), i + batch); ++j) chunk.push_back(&clips[j]);
    for (auto& r : model.greedy_decode(chunk)) out.push_back(std::move(r));
  }
  return out;
}

}  // namespace vcap::model
