#include "vcap/nn/lstm.hpp"

#include <array>

#include "vcap/error.hpp"
#include "vcap/nn/init.hpp"

namespace vcap::nn {
namespace {

constexpr std::array<char, 4> kGates{'i', 'f', 'o', 'g'};

struct GateView {
  char name;
  Var Wx, Wh, b;
};

std::array<GateView, 4> gates_of(const LstmParams& p) {
  return {GateView{'i', p.W_ix, p.W_ih, p.b_i}, GateView{'f', p.W_fx, p.W_fh, p.b_f},
          GateView{'o', p.W_ox, p.W_oh, p.b_o}, GateView{'g', p.W_gx, p.W_gh, p.b_g}};
}

void check_gate(const Graph& g, const GateView& gate, std::size_t input_dim, std::size_t hidden_dim) {
  const std::string name(1, gate.name);
  const Tensor& Wx = g.value(gate.Wx);
  const Tensor& Wh = g.value(gate.Wh);
  const Tensor& b = g.value(gate.b);
  if (Wx.rank() != 2 || Wx.dim(0) != hidden_dim || Wx.dim(1) != input_dim) {
    throw DimensionError("lstm gate " + name + ": W_" + name + "x is " + shape_string(Wx.shape()) + ", expected (" +
                         std::to_string(hidden_dim) + "x" + std::to_string(input_dim) + ")");
  }
  if (Wh.rank() != 2 || Wh.dim(0) != hidden_dim || Wh.dim(1) != hidden_dim) {
    throw DimensionError("lstm gate " + name + ": W_" + name + "h is " + shape_string(Wh.shape()) + ", expected (" +
                         std::to_string(hidden_dim) + "x" + std::to_string(hidden_dim) + ")");
  }
  if (b.size() != hidden_dim) {
    throw DimensionError("lstm gate " + name + ": b_" + name + " is " + shape_string(b.shape()) + ", expected (" +
                         std::to_string(hidden_dim) + ")");
  }
}

}  // namespace

void register_lstm(ParamStore& store, const std::string& prefix, std::size_t input_dim, std::size_t hidden_dim,
                   Rng& rng) {
  for (char gate : kGates) {
    const std::string s(1, gate);
    store.add(prefix + ".W_" + s + "x", init_uniform({hidden_dim, input_dim}, rng));
    store.add(prefix + ".W_" + s + "h", init_uniform({hidden_dim, hidden_dim}, rng));
    store.add(prefix + ".b_" + s, init_uniform({hidden_dim}, rng));
  }
}

LstmParams bind_lstm(Graph& g, ParamStore& store, const std::string& prefix) {
  auto p = [&](const std::string& suffix) { return g.param(store.get(prefix + "." + suffix)); };
  return LstmParams{p("W_ix"), p("W_ih"), p("b_i"), p("W_fx"), p("W_fh"), p("b_f"),
                    p("W_ox"), p("W_oh"), p("b_o"), p("W_gx"), p("W_gh"), p("b_g")};
}

LstmState lstm_cell(Graph& g, Var x, const LstmState& prev, const LstmParams& p) {
  const std::size_t hidden_dim = g.value(p.b_i).size();
  const std::size_t input_dim = g.value(x).cols();
  for (const auto& gate : gates_of(p)) check_gate(g, gate, input_dim, hidden_dim);
  if (g.value(prev.h).cols() != hidden_dim || g.value(prev.c).cols() != hidden_dim) {
    throw DimensionError("lstm state width does not match hidden dimension " + std::to_string(hidden_dim));
  }
  auto affine = [&](const GateView& gate) {
    return add(g, dense(g, x, gate.Wx, gate.b), dense(g, prev.h, gate.Wh, Var{}));
  };
  const auto gs = gates_of(p);
  Var i = sigmoid(g, affine(gs[0]));
  Var f = sigmoid(g, affine(gs[1]));
  Var o = sigmoid(g, affine(gs[2]));
  Var cand = tanh(g, affine(gs[3]));
  Var c = add(g, mul(g, i, cand), mul(g, f, prev.c));
  Var h = mul(g, o, tanh(g, c));
  return {h, c};
}

FusedLstm::FusedLstm(Graph& g, const LstmParams& p) {
  hidden_ = g.value(p.b_i).size();
  input_ = g.value(p.W_ix).cols();
  for (const auto& gate : gates_of(p)) check_gate(g, gate, input_, hidden_);
  wx_ = concat_rows(g, {p.W_ix, p.W_fx, p.W_ox, p.W_gx});
  wh_ = concat_rows(g, {p.W_ih, p.W_fh, p.W_oh, p.W_gh});
  b_ = concat_cols(g, {p.b_i, p.b_f, p.b_o, p.b_g});
}

LstmState FusedLstm::step(Graph& g, std::optional<Var> x, const LstmState& prev) const {
  if (x && g.value(*x).cols() != input_) {
    throw DimensionError("lstm input width " + std::to_string(g.value(*x).cols()) + " does not match " +
                         std::to_string(input_));
  }
  Var recurrent = dense(g, prev.h, wh_, b_);
  Var pre = x ? add(g, dense(g, *x, wx_, Var{}), recurrent) : recurrent;
  Var i = sigmoid(g, slice_cols(g, pre, 0, hidden_));
  Var f = sigmoid(g, slice_cols(g, pre, hidden_, hidden_));
  Var o = sigmoid(g, slice_cols(g, pre, 2 * hidden_, hidden_));
  Var cand = tanh(g, slice_cols(g, pre, 3 * hidden_, hidden_));
  Var c = add(g, mul(g, i, cand), mul(g, f, prev.c));
  Var h = mul(g, o, tanh(g, c));
  return {h, c};
}

LstmState FusedLstm::zero_state(Graph& g, std::size_t batch) const {
  return {g.constant(Tensor({batch, hidden_})), g.constant(Tensor({batch, hidden_}))};
}

}  // namespace vcap::nn
