#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "vcap/error.hpp"
#include "vcap/metrics/metrics.hpp"

namespace vcap::metrics {

NGramCounts count_ngrams(const Sentence& s) {
  NGramCounts out;
  for (std::size_t n = 1; n <= kMaxN; ++n) {
    if (s.size() < n) continue;
    out.totals[n - 1] = static_cast<int>(s.size() - n + 1);
    for (std::size_t i = 0; i + n <= s.size(); ++i) {
      std::string key = s[i];
      for (std::size_t k = 1; k < n; ++k) {
        key.push_back(' ');
        key += s[i + k];
      }
      ++out.by_order[n - 1][key];
    }
  }
  return out;
}

BleuDetail bleu4_detail(const std::vector<Sentence>& hyps, const std::vector<RefSet>& refs) {
  if (hyps.empty()) throw RangeError("bleu4: empty hypothesis list");
  if (hyps.size() != refs.size()) throw DimensionError("bleu4: hypothesis and reference lists differ in length");
  std::array<double, kMaxN> matched{};
  std::array<double, kMaxN> total{};
  BleuDetail d;
  for (std::size_t k = 0; k < hyps.size(); ++k) {
    if (refs[k].empty()) throw RangeError("bleu4: empty reference set");
    const auto& hyp = hyps[k];
    const auto hc = count_ngrams(hyp);
    std::vector<NGramCounts> rcs;
    for (const auto& r : refs[k]) rcs.push_back(count_ngrams(r));
    for (std::size_t n = 1; n <= kMaxN; ++n) {
      for (const auto& [g, c] : hc.order(n)) {
        int max_ref = 0;
        for (const auto& rc : rcs) {
          auto it = rc.order(n).find(g);
          if (it != rc.order(n).end()) max_ref = std::max(max_ref, it->second);
        }
        matched[n - 1] += std::min(c, max_ref);
      }
      total[n - 1] += hc.totals[n - 1];
    }
    // closest reference length, shorter one on ties
    std::size_t best = refs[k][0].size();
    for (const auto& r : refs[k]) {
      const auto diff = std::llabs(static_cast<long long>(r.size()) - static_cast<long long>(hyp.size()));
      const auto best_diff = std::llabs(static_cast<long long>(best) - static_cast<long long>(hyp.size()));
      if (diff < best_diff || (diff == best_diff && r.size() < best)) best = r.size();
    }
    d.hyp_length += static_cast<double>(hyp.size());
    d.ref_length += static_cast<double>(best);
  }
  double log_sum = 0.0;
  bool any_zero = false;
  for (std::size_t n = 0; n < kMaxN; ++n) {
    d.precision[n] = total[n] > 0 ? matched[n] / total[n] : 0.0;
    if (d.precision[n] == 0.0) {
      any_zero = true;
    } else {
      log_sum += std::log(d.precision[n]) / static_cast<double>(kMaxN);
    }
  }
  if (d.hyp_length == 0.0) {
    d.brevity_penalty = 0.0;
  } else {
    d.brevity_penalty = std::min(1.0, std::exp(1.0 - d.ref_length / d.hyp_length));
  }
  d.score = any_zero ? 0.0 : d.brevity_penalty * std::exp(log_sum);
  return d;
}

double bleu4(const std::vector<Sentence>& hyps, const std::vector<RefSet>& refs) {
  return bleu4_detail(hyps, refs).score;
}

std::size_t lcs_length(const Sentence& a, const Sentence& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const Sentence& hyp, const RefSet& refs) {
  if (refs.empty()) throw RangeError("rouge_l: empty reference set");
  if (hyp.empty()) return 0.0;
  constexpr double b2 = kRougeBeta * kRougeBeta;
  double best = 0.0;
  for (const auto& ref : refs) {
    if (ref.empty()) continue;
    const double l = static_cast<double>(lcs_length(hyp, ref));
    if (l == 0.0) continue;
    const double p = l / static_cast<double>(hyp.size());
    const double r = l / static_cast<double>(ref.size());
    best = std::max(best, (1.0 + b2) * p * r / (r + b2 * p));
  }
  return best;
}

}  // namespace vcap::metrics
