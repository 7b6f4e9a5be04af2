#include <algorithm>
#include <cmath>
#include <set>

#include <spdlog/spdlog.h>

#include "vcap/error.hpp"
#include "vcap/metrics/metrics.hpp"

namespace vcap::metrics {

CiderVariant parse_cider_variant(const std::string& name) {
  if (name == "cider-d" || name == "cider_d" || name == "CIDEr-D") return CiderVariant::cider_d;
  if (name == "cider" || name == "CIDEr") return CiderVariant::cider;
  throw UsageError("unknown reward variant '" + name + "' (expected cider-d or cider)");
}

std::string to_string(CiderVariant v) { return v == CiderVariant::cider_d ? "cider-d" : "cider"; }

std::size_t IdfTable::df(const std::string& ngram, std::size_t n) const {
  const auto& t = df_[n - 1];
  auto it = t.find(ngram);
  return it == t.end() ? 0 : it->second;
}

double IdfTable::idf(const std::string& ngram, std::size_t n) const {
  const auto d = std::max<std::size_t>(df(ngram, n), 1);
  return log_documents_ - std::log(static_cast<double>(d));
}

IdfTable build_idf(const std::vector<RefSet>& corpus) {
  IdfTable t;
  for (const auto& refs : corpus) {
    std::array<std::set<std::string>, kMaxN> seen;
    for (const auto& r : refs) {
      const auto c = count_ngrams(r);
      for (std::size_t n = 0; n < kMaxN; ++n) {
        for (const auto& kv : c.by_order[n]) seen[n].insert(kv.first);
      }
    }
    for (std::size_t n = 0; n < kMaxN; ++n) {
      for (const auto& g : seen[n]) ++t.df_[n][g];
    }
  }
  t.documents_ = corpus.size();
  t.log_documents_ = corpus.empty() ? 0.0 : std::log(static_cast<double>(corpus.size()));
  return t;
}

CiderScorer::CiderScorer(const IdfTable& idf, CiderVariant variant) : idf_(&idf), variant_(variant) {}

CiderScorer::SentenceVector CiderScorer::vectorize(const Sentence& s) const {
  SentenceVector v;
  v.length = s.size();
  const auto c = count_ngrams(s);
  for (std::size_t n = 0; n < kMaxN; ++n) {
    double sq = 0.0;
    for (const auto& [g, count] : c.by_order[n]) {
      if (idf_->df(g, n + 1) == 0) spdlog::debug("cider: unseen {}-gram '{}' gets idf ln(D)", n + 1, g);
      const double w = count * idf_->idf(g, n + 1);
      v.counts[n].emplace(g, count);
      v.weights[n].emplace(g, w);
      sq += w * w;
    }
    v.norm[n] = std::sqrt(sq);
  }
  return v;
}

CiderScorer::Prepared CiderScorer::prepare(const RefSet& refs) const {
  Prepared out;
  out.reserve(refs.size());
  for (const auto& r : refs) out.push_back(vectorize(r));
  return out;
}

double CiderScorer::score(const Sentence& hyp, const Prepared& refs) const {
  if (refs.empty()) throw RangeError("cider: empty reference set");
  const auto h = vectorize(hyp);
  double total = 0.0;
  for (const auto& r : refs) {
    double per_n = 0.0;
    for (std::size_t n = 0; n < kMaxN; ++n) {
      if (h.norm[n] == 0.0 || r.norm[n] == 0.0) continue;
      double num = 0.0;
      for (const auto& [g, wh] : h.weights[n]) {
        auto it = r.weights[n].find(g);
        if (it == r.weights[n].end()) continue;
        if (variant_ == CiderVariant::cider_d) {
          // min(c_h, c_r) * c_r * idf^2 == min(w_h, w_r) * w_r
          num += std::min(wh, it->second) * it->second;
        } else {
          num += wh * it->second;
        }
      }
      per_n += num / (h.norm[n] * r.norm[n]);
    }
    per_n /= static_cast<double>(kMaxN);
    if (variant_ == CiderVariant::cider_d) {
      const double delta = static_cast<double>(h.length) - static_cast<double>(r.length);
      per_n *= std::exp(-(delta * delta) / (2.0 * kCiderSigma * kCiderSigma));
    }
    total += per_n;
  }
  return kCiderScale * total / static_cast<double>(refs.size());
}

double cider_d(const Sentence& hyp, const RefSet& refs, const IdfTable& idf, CiderVariant variant) {
  return CiderScorer(idf, variant).score(hyp, refs);
}

}  // namespace vcap::metrics
