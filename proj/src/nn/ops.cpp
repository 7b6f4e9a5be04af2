#include "vcap/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vcap/error.hpp"

namespace vcap::nn {
namespace {

using Index = Eigen::Index;

MatrixMap grad_map(Graph& g, std::uint32_t id) {
  auto buf = g.grad_buffer(id);
  const Tensor& t = g.value_of(id);
  return {buf.data(), static_cast<Index>(t.rows()), static_cast<Index>(t.cols())};
}

ConstMatrixMap out_map(const Graph& g, std::uint32_t self) {
  const Tensor& t = g.value_of(self);
  return {g.out_grad(self).data(), static_cast<Index>(t.rows()), static_cast<Index>(t.cols())};
}

bool wants_grad(const Graph& g, Var v) { return v.valid() && g.requires_grad(v); }

void require_same_shape(const Graph& g, Var a, Var b, const char* op) {
  if (g.shape(a) != g.shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(g.shape(a)) + " vs " +
                         shape_string(g.shape(b)));
  }
}

template <typename F, typename D>
Var unary(Graph& g, Var x, F forward, D derivative_from_output) {
  const Tensor& in = g.value(x);
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = forward(in[i]);
  return g.push(std::move(out), g.any_requires_grad({x}), [x, derivative_from_output](Graph& gr, std::uint32_t self) {
    const Tensor& y = gr.value_of(self);
    auto dy = gr.out_grad(self);
    auto dx = gr.grad_buffer(x.id);
    const Tensor& xin = gr.value_of(x.id);
    for (std::size_t i = 0; i < y.size(); ++i) dx[i] += dy[i] * derivative_from_output(xin[i], y[i]);
  });
}

}  // namespace

Var dense(Graph& g, Var x, Var W, Var b) {
  const Tensor& xv = g.value(x);
  const Tensor& Wv = g.value(W);
  if (Wv.rank() != 2) throw DimensionError("dense: weight must be rank 2, got " + shape_string(Wv.shape()));
  if (xv.cols() != Wv.cols()) {
    throw DimensionError("dense: input width " + std::to_string(xv.cols()) + " does not match weight " +
                         shape_string(Wv.shape()));
  }
  const std::size_t out_dim = Wv.rows();
  if (b.valid() && g.value(b).size() != out_dim) {
    throw DimensionError("dense: bias " + shape_string(g.value(b).shape()) + " does not match output " +
                         std::to_string(out_dim));
  }
  Shape shape = xv.rank() == 1 ? Shape{out_dim} : Shape{xv.rows(), out_dim};
  Tensor y(shape);
  auto ym = y.mat();
  ym.noalias() = xv.mat() * Wv.mat().transpose();
  if (b.valid()) {
    const auto bv = g.value(b).mat();  // 1 x out
    ym.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bv.data(), static_cast<Index>(out_dim));
  }
  return g.push(std::move(y), g.any_requires_grad({x, W, b}), [x, W, b](Graph& gr, std::uint32_t self) {
    const auto dy = out_map(gr, self);
    if (wants_grad(gr, x)) grad_map(gr, x.id).noalias() += dy * gr.value_of(W.id).mat();
    if (wants_grad(gr, W)) grad_map(gr, W.id).noalias() += dy.transpose() * gr.value_of(x.id).mat();
    if (wants_grad(gr, b)) {
      auto db = gr.grad_buffer(b.id);
      Eigen::Map<Eigen::RowVectorXd>(db.data(), static_cast<Index>(db.size())) += dy.colwise().sum();
    }
  });
}

Var add(Graph& g, Var a, Var b) {
  require_same_shape(g, a, b, "add");
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  Tensor y(av.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] + bv[i];
  return g.push(std::move(y), g.any_requires_grad({a, b}), [a, b](Graph& gr, std::uint32_t self) {
    auto dy = gr.out_grad(self);
    for (Var v : {a, b}) {
      if (!wants_grad(gr, v)) continue;
      auto dv = gr.grad_buffer(v.id);
      for (std::size_t i = 0; i < dy.size(); ++i) dv[i] += dy[i];
    }
  });
}

Var sub(Graph& g, Var a, Var b) {
  require_same_shape(g, a, b, "sub");
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  Tensor y(av.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] - bv[i];
  return g.push(std::move(y), g.any_requires_grad({a, b}), [a, b](Graph& gr, std::uint32_t self) {
    auto dy = gr.out_grad(self);
    if (wants_grad(gr, a)) {
      auto da = gr.grad_buffer(a.id);
      for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i];
    }
    if (wants_grad(gr, b)) {
      auto db = gr.grad_buffer(b.id);
      for (std::size_t i = 0; i < dy.size(); ++i) db[i] -= dy[i];
    }
  });
}

Var mul(Graph& g, Var a, Var b) {
  require_same_shape(g, a, b, "mul");
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  Tensor y(av.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] * bv[i];
  return g.push(std::move(y), g.any_requires_grad({a, b}), [a, b](Graph& gr, std::uint32_t self) {
    auto dy = gr.out_grad(self);
    if (wants_grad(gr, a)) {
      auto da = gr.grad_buffer(a.id);
      const Tensor& bv2 = gr.value_of(b.id);
      for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * bv2[i];
    }
    if (wants_grad(gr, b)) {
      auto db = gr.grad_buffer(b.id);
      const Tensor& av2 = gr.value_of(a.id);
      for (std::size_t i = 0; i < dy.size(); ++i) db[i] += dy[i] * av2[i];
    }
  });
}

Var scale(Graph& g, Var a, double factor) {
  const Tensor& av = g.value(a);
  Tensor y(av.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] * factor;
  return g.push(std::move(y), g.any_requires_grad({a}), [a, factor](Graph& gr, std::uint32_t self) {
    auto dy = gr.out_grad(self);
    auto da = gr.grad_buffer(a.id);
    for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * factor;
  });
}

Var add_n(Graph& g, const std::vector<Var>& terms) {
  if (terms.empty()) throw DimensionError("add_n: no terms");
  Tensor y(g.value(terms[0]).shape());
  bool needs = false;
  for (Var t : terms) {
    require_same_shape(g, terms[0], t, "add_n");
    const Tensor& tv = g.value(t);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += tv[i];
    needs = needs || g.any_requires_grad({t});
  }
  return g.push(std::move(y), needs, [terms](Graph& gr, std::uint32_t self) {
    auto dy = gr.out_grad(self);
    for (Var t : terms) {
      if (!wants_grad(gr, t)) continue;
      auto dt = gr.grad_buffer(t.id);
      for (std::size_t i = 0; i < dy.size(); ++i) dt[i] += dy[i];
    }
  });
}

Var mean_of(Graph& g, const std::vector<Var>& terms) {
  if (terms.empty()) throw DimensionError("mean_of: no terms");
  return scale(g, add_n(g, terms), 1.0 / static_cast<double>(terms.size()));
}

Var sigmoid(Graph& g, Var x) {
  return unary(
      g, x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); }, [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Graph& g, Var x) {
  return unary(
      g, x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(Graph& g, Var x) {
  return unary(
      g, x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double in, double) { return in > 0.0 ? 1.0 : 0.0; });
}

Var softmax(Graph& g, Var x) {
  const Tensor& xv = g.value(x);
  Tensor y(xv.shape());
  const std::size_t R = xv.rows();
  const std::size_t C = xv.cols();
  for (std::size_t r = 0; r < R; ++r) {
    const double* in = &xv.data()[r * C];
    double* out = &y.data()[r * C];
    const double mx = *std::max_element(in, in + C);
    double total = 0.0;
    for (std::size_t c = 0; c < C; ++c) total += (out[c] = std::exp(in[c] - mx));
    for (std::size_t c = 0; c < C; ++c) out[c] /= total;
  }
  return g.push(std::move(y), g.any_requires_grad({x}), [x](Graph& gr, std::uint32_t self) {
    const Tensor& yv = gr.value_of(self);
    auto dy = gr.out_grad(self);
    auto dx = gr.grad_buffer(x.id);
    const std::size_t C2 = yv.cols();
    for (std::size_t r = 0; r < yv.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < C2; ++c) dot += dy[r * C2 + c] * yv[r * C2 + c];
      for (std::size_t c = 0; c < C2; ++c) dx[r * C2 + c] += yv[r * C2 + c] * (dy[r * C2 + c] - dot);
    }
  });
}

Var log_softmax(Graph& g, Var x) {
  const Tensor& xv = g.value(x);
  Tensor y(xv.shape());
  const std::size_t R = xv.rows();
  const std::size_t C = xv.cols();
  for (std::size_t r = 0; r < R; ++r) {
    const double* in = &xv.data()[r * C];
    double* out = &y.data()[r * C];
    const double mx = *std::max_element(in, in + C);
    double total = 0.0;
    for (std::size_t c = 0; c < C; ++c) total += std::exp(in[c] - mx);
    const double lse = mx + std::log(total);
    for (std::size_t c = 0; c < C; ++c) out[c] = in[c] - lse;
  }
  return g.push(std::move(y), g.any_requires_grad({x}), [x](Graph& gr, std::uint32_t self) {
    const Tensor& yv = gr.value_of(self);
    auto dy = gr.out_grad(self);
    auto dx = gr.grad_buffer(x.id);
    const std::size_t C2 = yv.cols();
    for (std::size_t r = 0; r < yv.rows(); ++r) {
      double total = 0.0;
      for (std::size_t c = 0; c < C2; ++c) total += dy[r * C2 + c];
      for (std::size_t c = 0; c < C2; ++c) dx[r * C2 + c] += dy[r * C2 + c] - std::exp(yv[r * C2 + c]) * total;
    }
  });
}

Var activation(Graph& g, Var x, Activation kind) {
  switch (kind) {
    case Activation::sigmoid:
      return sigmoid(g, x);
    case Activation::tanh:
      return tanh(g, x);
    case Activation::relu:
      return relu(g, x);
    case Activation::softmax:
      return softmax(g, x);
  }
  throw RangeError("unknown activation");
}

Var dropout(Graph& g, Var x, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw RangeError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  if (!training || rate == 0.0) return x;
  const Tensor& xv = g.value(x);
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(xv.size());
  Tensor y(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    mask[i] = uniform01(rng) < rate ? 0.0 : keep_scale;
    y[i] = xv[i] * mask[i];
  }
  return g.push(std::move(y), g.any_requires_grad({x}), [x, mask = std::move(mask)](Graph& gr, std::uint32_t self) {
    auto dy = gr.out_grad(self);
    auto dx = gr.grad_buffer(x.id);
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * mask[i];
  });
}

Var reshape(Graph& g, Var x, Shape shape) {
  Tensor y = g.value(x).reshaped(std::move(shape));
  return g.push(std::move(y), g.any_requires_grad({x}), [x](Graph& gr, std::uint32_t self) {
    auto dy = gr.out_grad(self);
    auto dx = gr.grad_buffer(x.id);
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
  });
}

Var slice_cols(Graph& g, Var x, std::size_t begin, std::size_t count) {
  const Tensor& xv = g.value(x);
  if (count == 0 || begin + count > xv.cols()) {
    throw DimensionError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") out of " + shape_string(xv.shape()));
  }
  const std::size_t R = xv.rows();
  Shape shape = xv.rank() == 1 ? Shape{count} : Shape{R, count};
  Tensor y(shape);
  y.mat() = xv.mat().middleCols(static_cast<Index>(begin), static_cast<Index>(count));
  return g.push(std::move(y), g.any_requires_grad({x}), [x, begin, count](Graph& gr, std::uint32_t self) {
    grad_map(gr, x.id).middleCols(static_cast<Index>(begin), static_cast<Index>(count)) += out_map(gr, self);
  });
}

Var slice_rows(Graph& g, Var x, std::size_t begin, std::size_t count) {
  const Tensor& xv = g.value(x);
  if (xv.rank() != 2 || count == 0 || begin + count > xv.rows()) {
    throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") out of " + shape_string(xv.shape()));
  }
  Tensor y({count, xv.cols()});
  y.mat() = xv.mat().middleRows(static_cast<Index>(begin), static_cast<Index>(count));
  return g.push(std::move(y), g.any_requires_grad({x}), [x, begin, count](Graph& gr, std::uint32_t self) {
    grad_map(gr, x.id).middleRows(static_cast<Index>(begin), static_cast<Index>(count)) += out_map(gr, self);
  });
}

Var concat_cols(Graph& g, const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no parts");
  const std::size_t R = g.value(parts[0]).rows();
  bool all_rank1 = true;
  bool needs = false;
  std::size_t total = 0;
  for (Var p : parts) {
    const Tensor& pv = g.value(p);
    if (pv.rows() != R) {
      throw DimensionError("concat_cols: row count mismatch " + shape_string(g.value(parts[0]).shape()) + " vs " +
                           shape_string(pv.shape()));
    }
    all_rank1 = all_rank1 && pv.rank() == 1;
    total += pv.cols();
    needs = needs || g.any_requires_grad({p});
  }
  Tensor y(all_rank1 ? Shape{total} : Shape{R, total});
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor& pv = g.value(p);
    y.mat().middleCols(static_cast<Index>(offset), static_cast<Index>(pv.cols())) = pv.mat();
    offset += pv.cols();
  }
  return g.push(std::move(y), needs, [parts](Graph& gr, std::uint32_t self) {
    const auto dy = out_map(gr, self);
    std::size_t off = 0;
    for (Var p : parts) {
      const std::size_t c = gr.value_of(p.id).cols();
      if (wants_grad(gr, p)) grad_map(gr, p.id) += dy.middleCols(static_cast<Index>(off), static_cast<Index>(c));
      off += c;
    }
  });
}

Var concat_rows(Graph& g, const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no parts");
  const std::size_t C = g.value(parts[0]).cols();
  std::size_t total = 0;
  bool needs = false;
  for (Var p : parts) {
    const Tensor& pv = g.value(p);
    if (pv.cols() != C) {
      throw DimensionError("concat_rows: column count mismatch " + shape_string(g.value(parts[0]).shape()) +
                           " vs " + shape_string(pv.shape()));
    }
    total += pv.rows();
    needs = needs || g.any_requires_grad({p});
  }
  Tensor y({total, C});
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor& pv = g.value(p);
    y.mat().middleRows(static_cast<Index>(offset), static_cast<Index>(pv.rows())) = pv.mat();
    offset += pv.rows();
  }
  return g.push(std::move(y), needs, [parts](Graph& gr, std::uint32_t self) {
    const auto dy = out_map(gr, self);
    std::size_t off = 0;
    for (Var p : parts) {
      const std::size_t r = gr.value_of(p.id).rows();
      if (wants_grad(gr, p)) grad_map(gr, p.id) += dy.middleRows(static_cast<Index>(off), static_cast<Index>(r));
      off += r;
    }
  });
}

Var repeat_rows(Graph& g, Var x, std::size_t times) {
  const Tensor& xv = g.value(x);
  if (times == 0) throw DimensionError("repeat_rows: times must be positive");
  if (times == 1) return x;
  const std::size_t R = xv.rows();
  const std::size_t C = xv.cols();
  Tensor y({R * times, C});
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t k = 0; k < times; ++k) {
      std::copy_n(&xv.data()[r * C], C, &y.data()[(r * times + k) * C]);
    }
  }
  return g.push(std::move(y), g.any_requires_grad({x}), [x, times](Graph& gr, std::uint32_t self) {
    auto dy = gr.out_grad(self);
    auto dx = gr.grad_buffer(x.id);
    const std::size_t C2 = gr.value_of(x.id).cols();
    const std::size_t R2 = gr.value_of(x.id).rows();
    for (std::size_t r = 0; r < R2; ++r) {
      for (std::size_t k = 0; k < times; ++k) {
        for (std::size_t c = 0; c < C2; ++c) dx[r * C2 + c] += dy[(r * times + k) * C2 + c];
      }
    }
  });
}

Var gather_rows(Graph& g, Var x, std::span<const std::size_t> rows) {
  const Tensor& xv = g.value(x);
  const std::size_t C = xv.cols();
  if (rows.empty()) throw DimensionError("gather_rows: no rows");
  Tensor y({rows.size(), C});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= xv.rows()) throw RangeError("gather_rows: row " + std::to_string(rows[i]) + " out of range");
    std::copy_n(&xv.data()[rows[i] * C], C, &y.data()[i * C]);
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return g.push(std::move(y), g.any_requires_grad({x}), [x, idx = std::move(idx)](Graph& gr, std::uint32_t self) {
    auto dy = gr.out_grad(self);
    auto dx = gr.grad_buffer(x.id);
    const std::size_t C2 = gr.value_of(x.id).cols();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      for (std::size_t c = 0; c < C2; ++c) dx[idx[i] * C2 + c] += dy[i * C2 + c];
    }
  });
}

Var embedding(Graph& g, Var E, std::span<const std::int64_t> ids) {
  const Tensor& Ev = g.value(E);
  if (Ev.rank() != 2) throw DimensionError("embedding: table must be rank 2, got " + shape_string(Ev.shape()));
  if (ids.empty()) throw DimensionError("embedding: no ids");
  const std::size_t D = Ev.cols();
  Tensor y({ids.size(), D});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= Ev.rows()) {
      throw RangeError("embedding: id " + std::to_string(ids[i]) + " outside vocabulary of " +
                       std::to_string(Ev.rows()));
    }
    std::copy_n(&Ev.data()[static_cast<std::size_t>(ids[i]) * D], D, &y.data()[i * D]);
  }
  std::vector<std::int64_t> idv(ids.begin(), ids.end());
  return g.push(std::move(y), g.any_requires_grad({E}), [E, idv = std::move(idv)](Graph& gr, std::uint32_t self) {
    auto dy = gr.out_grad(self);
    auto dE = gr.grad_buffer(E.id);
    const std::size_t D2 = gr.value_of(E.id).cols();
    for (std::size_t i = 0; i < idv.size(); ++i) {
      const std::size_t row = static_cast<std::size_t>(idv[i]);
      for (std::size_t c = 0; c < D2; ++c) dE[row * D2 + c] += dy[i * D2 + c];
    }
  });
}

Var sum(Graph& g, Var x) {
  const Tensor& xv = g.value(x);
  double total = 0.0;
  for (double v : xv.data()) total += v;
  return g.push(Tensor::scalar(total), g.any_requires_grad({x}), [x](Graph& gr, std::uint32_t self) {
    const double d = gr.out_grad(self)[0];
    for (double& v : gr.grad_buffer(x.id)) v += d;
  });
}

Var mean(Graph& g, Var x) { return scale(g, sum(g, x), 1.0 / static_cast<double>(g.value(x).size())); }

Var pick_weighted_sum(Graph& g, Var x, std::span<const std::int64_t> targets, std::span<const double> weights) {
  const Tensor& xv = g.value(x);
  const std::size_t R = xv.rows();
  const std::size_t C = xv.cols();
  if (targets.size() != R || weights.size() != R) {
    throw DimensionError("pick_weighted_sum: " + std::to_string(targets.size()) + " targets / " +
                         std::to_string(weights.size()) + " weights for " + std::to_string(R) + " rows");
  }
  double total = 0.0;
  for (std::size_t r = 0; r < R; ++r) {
    if (weights[r] == 0.0) continue;
    if (targets[r] < 0 || static_cast<std::size_t>(targets[r]) >= C) {
      throw RangeError("pick_weighted_sum: target " + std::to_string(targets[r]) + " out of range");
    }
    total += weights[r] * xv[r * C + static_cast<std::size_t>(targets[r])];
  }
  std::vector<std::int64_t> t(targets.begin(), targets.end());
  std::vector<double> w(weights.begin(), weights.end());
  return g.push(Tensor::scalar(total), g.any_requires_grad({x}),
                [x, t = std::move(t), w = std::move(w)](Graph& gr, std::uint32_t self) {
                  const double d = gr.out_grad(self)[0];
                  auto dx = gr.grad_buffer(x.id);
                  const std::size_t C2 = gr.value_of(x.id).cols();
                  for (std::size_t r = 0; r < t.size(); ++r) {
                    if (w[r] != 0.0) dx[r * C2 + static_cast<std::size_t>(t[r])] += d * w[r];
                  }
                });
}

Var binary_cross_entropy(Graph& g, Var q, const Tensor& y) {
  constexpr double kLo = 1e-12;
  constexpr double kHi = 1.0 - 1e-12;
  const Tensor& qv = g.value(q);
  if (qv.size() != y.size()) {
    throw DimensionError("binary_cross_entropy: predictions " + shape_string(qv.shape()) + " vs labels " +
                         shape_string(y.shape()));
  }
  const double n = static_cast<double>(qv.size());
  double total = 0.0;
  for (std::size_t i = 0; i < qv.size(); ++i) {
    const double qc = std::clamp(qv[i], kLo, kHi);
    total += y[i] * std::log(qc) + (1.0 - y[i]) * std::log(1.0 - qc);
  }
  return g.push(Tensor::scalar(-total / n), g.any_requires_grad({q}), [q, y, n](Graph& gr, std::uint32_t self) {
    const double d = gr.out_grad(self)[0];
    const Tensor& qv2 = gr.value_of(q.id);
    auto dq = gr.grad_buffer(q.id);
    for (std::size_t i = 0; i < qv2.size(); ++i) {
      const double qi = qv2[i];
      if (qi < kLo || qi > kHi) continue;
      dq[i] += -d / n * (y[i] / qi - (1.0 - y[i]) / (1.0 - qi));
    }
  });
}

Var conv2d(Graph& g, Var x, Var W, Var b) {
  const Tensor& xv = g.value(x);
  const Tensor& Wv = g.value(W);
  if (xv.rank() != 4) throw DimensionError("conv2d: input must be (N,H,W,C), got " + shape_string(xv.shape()));
  if (Wv.rank() != 4 || Wv.dim(1) != Wv.dim(2) || Wv.dim(1) % 2 == 0) {
    throw DimensionError("conv2d: kernel must be (Cout,K,K,Cin) with odd K, got " + shape_string(Wv.shape()));
  }
  const std::size_t N = xv.dim(0), H = xv.dim(1), Wd = xv.dim(2), Cin = xv.dim(3);
  const std::size_t Cout = Wv.dim(0), K = Wv.dim(1);
  if (Wv.dim(3) != Cin) {
    throw DimensionError("conv2d: kernel " + shape_string(Wv.shape()) + " does not match input channels " +
                         std::to_string(Cin));
  }
  if (b.valid() && g.value(b).size() != Cout) throw DimensionError("conv2d: bias does not match output channels");
  const std::size_t patch = K * K * Cin;
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(K / 2);
  // im2col: one row per output pixel
  RowMatrix cols = RowMatrix::Zero(static_cast<Index>(N * H * Wd), static_cast<Index>(patch));
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t i = 0; i < H; ++i) {
      for (std::size_t j = 0; j < Wd; ++j) {
        double* row = cols.data() + ((n * H + i) * Wd + j) * patch;
        for (std::size_t ki = 0; ki < K; ++ki) {
          const std::ptrdiff_t si = static_cast<std::ptrdiff_t>(i + ki) - pad;
          if (si < 0 || si >= static_cast<std::ptrdiff_t>(H)) continue;
          for (std::size_t kj = 0; kj < K; ++kj) {
            const std::ptrdiff_t sj = static_cast<std::ptrdiff_t>(j + kj) - pad;
            if (sj < 0 || sj >= static_cast<std::ptrdiff_t>(Wd)) continue;
            const double* src = &xv.data()[((n * H + static_cast<std::size_t>(si)) * Wd + static_cast<std::size_t>(sj)) * Cin];
            std::copy_n(src, Cin, row + (ki * K + kj) * Cin);
          }
        }
      }
    }
  }
  ConstMatrixMap kernel(Wv.data().data(), static_cast<Index>(Cout), static_cast<Index>(patch));
  Tensor y({N, H, Wd, Cout});
  auto ym = y.mat();
  ym.noalias() = cols * kernel.transpose();
  if (b.valid()) {
    ym.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(g.value(b).data().data(), static_cast<Index>(Cout));
  }
  return g.push(std::move(y), g.any_requires_grad({x, W, b}),
                [x, W, b, cols = std::move(cols), N, H, Wd, Cin, Cout, K, pad, patch](Graph& gr, std::uint32_t self) {
                  const auto dy = out_map(gr, self);
                  if (wants_grad(gr, W)) {
                    auto dW = gr.grad_buffer(W.id);
                    MatrixMap(dW.data(), static_cast<Index>(Cout), static_cast<Index>(patch)).noalias() +=
                        dy.transpose() * cols;
                  }
                  if (wants_grad(gr, b)) {
                    auto db = gr.grad_buffer(b.id);
                    Eigen::Map<Eigen::RowVectorXd>(db.data(), static_cast<Index>(Cout)) += dy.colwise().sum();
                  }
                  if (wants_grad(gr, x)) {
                    const Tensor& Wv2 = gr.value_of(W.id);
                    ConstMatrixMap kern(Wv2.data().data(), static_cast<Index>(Cout), static_cast<Index>(patch));
                    RowMatrix dcols = dy * kern;
                    auto dx = gr.grad_buffer(x.id);
                    for (std::size_t n = 0; n < N; ++n) {
                      for (std::size_t i = 0; i < H; ++i) {
                        for (std::size_t j = 0; j < Wd; ++j) {
                          const double* row = dcols.data() + ((n * H + i) * Wd + j) * patch;
                          for (std::size_t ki = 0; ki < K; ++ki) {
                            const std::ptrdiff_t si = static_cast<std::ptrdiff_t>(i + ki) - pad;
                            if (si < 0 || si >= static_cast<std::ptrdiff_t>(H)) continue;
                            for (std::size_t kj = 0; kj < K; ++kj) {
                              const std::ptrdiff_t sj = static_cast<std::ptrdiff_t>(j + kj) - pad;
                              if (sj < 0 || sj >= static_cast<std::ptrdiff_t>(Wd)) continue;
                              double* dst = &dx[((n * H + static_cast<std::size_t>(si)) * Wd +
                                                 static_cast<std::size_t>(sj)) *
                                                Cin];
                              const double* src = row + (ki * K + kj) * Cin;
                              for (std::size_t c = 0; c < Cin; ++c) dst[c] += src[c];
                            }
                          }
                        }
                      }
                    }
                  }
                });
}

Var max_pool2(Graph& g, Var x) {
  const Tensor& xv = g.value(x);
  if (xv.rank() != 4 || xv.dim(1) % 2 != 0 || xv.dim(2) % 2 != 0) {
    throw DimensionError("max_pool2: input must be (N,H,W,C) with even H and W, got " + shape_string(xv.shape()));
  }
  const std::size_t N = xv.dim(0), H = xv.dim(1), Wd = xv.dim(2), C = xv.dim(3);
  const std::size_t Ho = H / 2, Wo = Wd / 2;
  Tensor y({N, Ho, Wo, C});
  std::vector<std::size_t> argmax(y.size());
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t i = 0; i < Ho; ++i) {
      for (std::size_t j = 0; j < Wo; ++j) {
        for (std::size_t c = 0; c < C; ++c) {
          std::size_t best = ((n * H + 2 * i) * Wd + 2 * j) * C + c;
          for (std::size_t di = 0; di < 2; ++di) {
            for (std::size_t dj = 0; dj < 2; ++dj) {
              const std::size_t at = ((n * H + 2 * i + di) * Wd + 2 * j + dj) * C + c;
              if (xv[at] > xv[best]) best = at;
            }
          }
          const std::size_t out = ((n * Ho + i) * Wo + j) * C + c;
          y[out] = xv[best];
          argmax[out] = best;
        }
      }
    }
  }
  return g.push(std::move(y), g.any_requires_grad({x}), [x, argmax = std::move(argmax)](Graph& gr, std::uint32_t self) {
    auto dy = gr.out_grad(self);
    auto dx = gr.grad_buffer(x.id);
    for (std::size_t k = 0; k < dy.size(); ++k) dx[argmax[k]] += dy[k];
  });
}

}  // namespace vcap::nn
