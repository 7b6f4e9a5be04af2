#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "vcap/nn/graph.hpp"

namespace vcap::nn {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits of one draw.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Linear algebra ----------------------------------------------------------

/// y = x W^T + b for a batch of row vectors x (rows x in), W (out x in), b (out).
/// Rank-1 `x` is treated as a single row and yields a rank-1 result.
/// Pass an invalid Var for `b` to omit the bias.
Var dense(Graph& g, Var x, Var W, Var b);

// Elementwise -------------------------------------------------------------

Var add(Graph& g, Var a, Var b);
Var sub(Graph& g, Var a, Var b);
Var mul(Graph& g, Var a, Var b);
Var scale(Graph& g, Var a, double factor);
/// Sum of equally shaped variables.
Var add_n(Graph& g, const std::vector<Var>& terms);
/// Elementwise mean of equally shaped variables (temporal average pooling).
Var mean_of(Graph& g, const std::vector<Var>& terms);

enum class Activation { sigmoid, tanh, relu, softmax };

Var sigmoid(Graph& g, Var x);
Var tanh(Graph& g, Var x);
Var relu(Graph& g, Var x);
/// Normalizes over the last axis.
Var softmax(Graph& g, Var x);
Var log_softmax(Graph& g, Var x);
Var activation(Graph& g, Var x, Activation kind);

/// Inverted dropout: survivors are scaled by 1/(1-rate); identity when not training.
Var dropout(Graph& g, Var x, double rate, bool training, Rng& rng);

// Structure ---------------------------------------------------------------

Var reshape(Graph& g, Var x, Shape shape);
Var slice_cols(Graph& g, Var x, std::size_t begin, std::size_t count);
Var slice_rows(Graph& g, Var x, std::size_t begin, std::size_t count);
Var concat_cols(Graph& g, const std::vector<Var>& parts);
Var concat_rows(Graph& g, const std::vector<Var>& parts);
/// Repeats each row `times` times consecutively: row r -> rows r*times .. r*times+times-1.
Var repeat_rows(Graph& g, Var x, std::size_t times);
Var gather_rows(Graph& g, Var x, std::span<const std::size_t> rows);

// Lookups and reductions ---------------------------------------------------

/// Row gather from an embedding table E (vocab x dim); gradient scatters into touched rows.
Var embedding(Graph& g, Var E, std::span<const std::int64_t> ids);
Var sum(Graph& g, Var x);
Var mean(Graph& g, Var x);
/// sum_r weights[r] * x[r, targets[r]]; rows with weight 0 are skipped.
Var pick_weighted_sum(Graph& g, Var x, std::span<const std::int64_t> targets, std::span<const double> weights);

/// Mean binary cross entropy of probabilities q against 0/1 targets y
/// (same shape); q is clamped to [1e-12, 1 - 1e-12].
Var binary_cross_entropy(Graph& g, Var q, const Tensor& y);

// Convolution --------------------------------------------------------------

/// Stride-1, zero-padded ("same") 2-D convolution.
/// x: (N, H, W, Cin), W: (Cout, K, K, Cin) with odd K, b: (Cout). Output (N, H, W, Cout).
Var conv2d(Graph& g, Var x, Var W, Var b);
/// 2x2 max pooling with stride 2 on (N, H, W, C); H and W must be even.
Var max_pool2(Graph& g, Var x);

}  // namespace vcap::nn
