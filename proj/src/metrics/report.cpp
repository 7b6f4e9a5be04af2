#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "vcap/error.hpp"
#include "vcap/metrics/metrics.hpp"

namespace vcap::metrics {

MetricReport score_corpus(const std::vector<Sentence>& hyps, const std::vector<RefSet>& refs, const IdfTable& idf,
                          CiderVariant variant) {
  if (hyps.size() != refs.size()) throw DimensionError("score_corpus: hypothesis and reference lists differ in length");
  if (hyps.empty()) throw RangeError("score_corpus: nothing to score");
  MetricReport r;
  r.bleu4 = bleu4(hyps, refs);
  const CiderScorer scorer(idf, variant);
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    r.rouge_l += rouge_l(hyps[i], refs[i]);
    r.meteor += meteor_lite(hyps[i], refs[i]);
    r.cider += scorer.score(hyps[i], refs[i]);
  }
  const auto n = static_cast<double>(hyps.size());
  r.rouge_l /= n;
  r.meteor /= n;
  r.cider /= n;
  return r;
}

std::string report_table(const std::vector<std::pair<std::string, MetricReport>>& rows) {
  std::size_t width = 6;
  for (const auto& [name, _] : rows) width = std::max(width, name.size());
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-*s  %8s  %8s  %8s  %8s\n", static_cast<int>(width), "Method", "BLEU4", "ROUGE-L",
                "METEOR", "CIDEr");
  out += buf;
  for (const auto& [name, m] : rows) {
    std::snprintf(buf, sizeof buf, "%-*s  %8.4f  %8.4f  %8.4f  %8.4f\n", static_cast<int>(width), name.c_str(),
                  m.bleu4, m.rouge_l, m.meteor, m.cider);
    out += buf;
  }
  return out;
}

nlohmann::json to_json(const MetricReport& r) {
  return {{"bleu4", r.bleu4}, {"rouge_l", r.rouge_l}, {"meteor", r.meteor}, {"cider", r.cider}};
}

nlohmann::json IdfTable::to_json() const {
  nlohmann::json df = nlohmann::json::array();
  for (const auto& order : df_) {
    // Sorted keys so the file is byte-stable.
    std::map<std::string, std::size_t> sorted(order.begin(), order.end());
    df.push_back(sorted);
  }
  return {{"documents", documents_}, {"df", df}};
}

IdfTable IdfTable::from_json(const nlohmann::json& j) {
  IdfTable t;
  try {
    t.documents_ = j.at("documents").get<std::size_t>();
    const auto& df = j.at("df");
    if (!df.is_array() || df.size() != kMaxN) throw FormatError("idf: expected " + std::to_string(kMaxN) + " n-gram orders");
    for (std::size_t n = 0; n < kMaxN; ++n) {
      for (const auto& [g, v] : df[n].items()) {
        const auto count = v.get<std::size_t>();
        if (count < 1 || count > t.documents_) {
          throw FormatError("idf: document frequency of '" + g + "' outside [1, " + std::to_string(t.documents_) + "]");
        }
        t.df_[n][g] = count;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("idf: ") + e.what());
  }
  t.log_documents_ = t.documents_ == 0 ? 0.0 : std::log(static_cast<double>(t.documents_));
  return t;
}

void write_idf(const std::filesystem::path& path, const IdfTable& idf) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot write " + path.string());
  os << idf.to_json().dump() << '\n';
}

IdfTable read_idf(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read idf file " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return IdfTable::from_json(j);
}

}  // namespace vcap::metrics
