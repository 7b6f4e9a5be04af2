#include <algorithm>
#include <cmath>
#include <tuple>

#include "vcap/error.hpp"
#include "vcap/metrics/metrics.hpp"

namespace vcap::metrics {
namespace {

constexpr double kAlpha = 0.9;
constexpr double kGamma = 0.5;
constexpr double kBeta = 3.0;
constexpr long kNodeCap = 200000;

struct Candidate {
  int ref;
  bool exact;
};

using Key = std::tuple<int, int, int>;  // exact, total, -chunks

class Aligner {
 public:
  Aligner(const Sentence& hyp, const Sentence& ref) : used_(ref.size(), false), cands_(hyp.size()) {
    std::vector<std::string> ref_stems;
    ref_stems.reserve(ref.size());
    for (const auto& w : ref) ref_stems.push_back(porter_stem(w));
    for (std::size_t i = 0; i < hyp.size(); ++i) {
      const std::string stem = porter_stem(hyp[i]);
      for (std::size_t j = 0; j < ref.size(); ++j) {
        if (hyp[i] == ref[j]) {
          cands_[i].push_back({static_cast<int>(j), true});
        } else if (stem == ref_stems[j]) {
          cands_[i].push_back({static_cast<int>(j), false});
        }
      }
    }
    exact_left_.assign(hyp.size() + 1, 0);
    any_left_.assign(hyp.size() + 1, 0);
    for (std::size_t i = hyp.size(); i-- > 0;) {
      const bool ex = std::any_of(cands_[i].begin(), cands_[i].end(), [](const Candidate& c) { return c.exact; });
      exact_left_[i] = exact_left_[i + 1] + (ex ? 1 : 0);
      any_left_[i] = any_left_[i + 1] + (cands_[i].empty() ? 0 : 1);
    }
  }

  MeteorAlignment run() {
    greedy();
    search(0, 0, 0, 0, -2, -2);
    return best_;
  }

 private:
  static Key key(const MeteorAlignment& a) { return {a.exact_matches, a.matches, -a.chunks}; }

  void greedy() {
    std::vector<bool> used(used_.size(), false);
    MeteorAlignment a;
    int last_h = -2, last_r = -2;
    for (std::size_t i = 0; i < cands_.size(); ++i) {
      const Candidate* pick = nullptr;
      for (const auto& c : cands_[i]) {
        if (used[static_cast<std::size_t>(c.ref)]) continue;
        if (!pick || (c.exact && !pick->exact)) pick = &c;
      }
      if (!pick) continue;
      used[static_cast<std::size_t>(pick->ref)] = true;
      ++a.matches;
      if (pick->exact) ++a.exact_matches;
      if (!(static_cast<int>(i) == last_h + 1 && pick->ref == last_r + 1)) ++a.chunks;
      last_h = static_cast<int>(i);
      last_r = pick->ref;
    }
    best_ = a;
  }

  void search(std::size_t i, int exact, int total, int chunks, int last_h, int last_r) {
    if (++nodes_ > kNodeCap) return;
    const Key bound{exact + exact_left_[i], total + any_left_[i], -chunks};
    if (bound <= key(best_)) return;
    if (i == cands_.size()) {
      best_ = {total, exact, chunks};
      return;
    }
    for (const auto& c : cands_[i]) {
      auto r = static_cast<std::size_t>(c.ref);
      if (used_[r]) continue;
      used_[r] = true;
      const bool extends = static_cast<int>(i) == last_h + 1 && c.ref == last_r + 1;
      search(i + 1, exact + (c.exact ? 1 : 0), total + 1, chunks + (extends ? 0 : 1), static_cast<int>(i), c.ref);
      used_[r] = false;
    }
    search(i + 1, exact, total, chunks, last_h, last_r);
  }

  std::vector<bool> used_;
  std::vector<std::vector<Candidate>> cands_;
  std::vector<int> exact_left_;
  std::vector<int> any_left_;
  MeteorAlignment best_;
  long nodes_ = 0;
};

}  // namespace

MeteorAlignment meteor_align(const Sentence& hyp, const Sentence& ref) { return Aligner(hyp, ref).run(); }

double meteor_lite(const Sentence& hyp, const RefSet& refs) {
  if (refs.empty()) throw RangeError("meteor: empty reference set");
  double best = 0.0;
  for (const auto& ref : refs) {
    const auto a = meteor_align(hyp, ref);
    if (a.matches == 0) continue;
    const double m = a.matches;
    const double p = m / static_cast<double>(hyp.size());
    const double r = m / static_cast<double>(ref.size());
    const double fmean = p * r / (kAlpha * p + (1.0 - kAlpha) * r);
    const double penalty = kGamma * std::pow(a.chunks / m, kBeta);
    best = std::max(best, fmean * (1.0 - penalty));
  }
  return best;
}

}  // namespace vcap::metrics
