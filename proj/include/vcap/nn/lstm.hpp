#pragma once

#include <optional>
#include <string>

#include "vcap/nn/graph.hpp"
#include "vcap/nn/ops.hpp"

namespace vcap::nn {

/// Gate weights of one LSTM layer, bound into a graph.
/// W_*x: (hidden x input), W_*h: (hidden x hidden), b_*: (hidden).
struct LstmParams {
  Var W_ix, W_ih, b_i;
  Var W_fx, W_fh, b_f;
  Var W_ox, W_oh, b_o;
  Var W_gx, W_gh, b_g;
};

struct LstmState {
  Var h;
  Var c;
};

/// Registers the twelve gate tensors of an LSTM layer as `<prefix>.W_ix`, ...
void register_lstm(ParamStore& store, const std::string& prefix, std::size_t input_dim, std::size_t hidden_dim,
                   Rng& rng);
LstmParams bind_lstm(Graph& g, ParamStore& store, const std::string& prefix);

/// One step of the gated recurrence:
///   i = σ(W_ix x + W_ih h + b_i), f = σ(...), o = σ(...), g = tanh(...),
///   c' = i ⊙ g + f ⊙ c,  h' = o ⊙ tanh(c').
/// Works on a batch: x (B x input), h and c (B x hidden).
LstmState lstm_cell(Graph& g, Var x, const LstmState& prev, const LstmParams& p);

/// The four gates stacked into single matrices so a step costs two products.
/// Gate order in the stacked rows is i, f, o, g.
class FusedLstm {
 public:
  FusedLstm(Graph& g, const LstmParams& p);

  std::size_t hidden_dim() const { return hidden_; }
  std::size_t input_dim() const { return input_; }

  /// `x` may be absent, meaning a zero input (only the recurrent term and bias remain).
  LstmState step(Graph& g, std::optional<Var> x, const LstmState& prev) const;
  /// Zero state for a batch of `batch` rows.
  LstmState zero_state(Graph& g, std::size_t batch) const;

 private:
  Var wx_, wh_, b_;
  std::size_t hidden_ = 0;
  std::size_t input_ = 0;
};

}  // namespace vcap::nn
