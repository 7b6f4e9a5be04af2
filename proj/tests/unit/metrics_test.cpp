#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>

#include "vcap/error.hpp"
#include "vcap/metrics/metrics.hpp"

using namespace vcap;
using namespace vcap::metrics;

namespace {

Sentence S(const std::string& text) { return tokenize(text); }

using Gram = std::vector<std::string>;

std::map<Gram, int> grams(const Sentence& s, std::size_t n) {
  std::map<Gram, int> out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++out[Gram(s.begin() + i, s.begin() + i + n)];
  return out;
}

// Straight-line corpus BLEU-4.
double oracle_bleu(const std::vector<Sentence>& hyps, const std::vector<RefSet>& refs) {
  double c = 0, r = 0;
  double num[4] = {0, 0, 0, 0}, den[4] = {0, 0, 0, 0};
  for (std::size_t k = 0; k < hyps.size(); ++k) {
    for (std::size_t n = 1; n <= 4; ++n) {
      for (const auto& [g, cnt] : grams(hyps[k], n)) {
        int mx = 0;
        for (const auto& ref : refs[k]) {
          auto rg = grams(ref, n);
          if (rg.count(g)) mx = std::max(mx, rg[g]);
        }
        num[n - 1] += std::min(cnt, mx);
        den[n - 1] += cnt;
      }
    }
    c += hyps[k].size();
    double best = 1e9;
    for (const auto& ref : refs[k]) {
      const double d = std::fabs(double(ref.size()) - double(hyps[k].size()));
      const double bd = std::fabs(best - double(hyps[k].size()));
      if (d < bd || (d == bd && ref.size() < best)) best = ref.size();
    }
    r += best;
  }
  double logp = 0;
  for (int n = 0; n < 4; ++n) {
    if (den[n] == 0 || num[n] == 0) return 0.0;
    logp += 0.25 * std::log(num[n] / den[n]);
  }
  const double bp = c > r ? 1.0 : std::exp(1 - r / c);
  return bp * std::exp(logp);
}

std::size_t oracle_lcs(const Sentence& a, std::size_t i, const Sentence& b, std::size_t j) {
  if (i == a.size() || j == b.size()) return 0;
  if (a[i] == b[j]) return 1 + oracle_lcs(a, i + 1, b, j + 1);
  return std::max(oracle_lcs(a, i + 1, b, j), oracle_lcs(a, i, b, j + 1));
}

// Exhaustive METEOR over every one-to-one alignment.
double oracle_meteor_one(const Sentence& h, const Sentence& r) {
  std::vector<int> best{-1, -1, 0};  // exact, total, -chunks
  std::vector<int> assign(h.size(), -1);
  std::vector<bool> used(r.size(), false);
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == h.size()) {
      int exact = 0, total = 0, chunks = 0, lh = -5, lr = -5;
      for (std::size_t k = 0; k < h.size(); ++k) {
        if (assign[k] < 0) continue;
        ++total;
        if (h[k] == r[assign[k]]) ++exact;
        if (!(int(k) == lh + 1 && assign[k] == lr + 1)) ++chunks;
        lh = int(k);
        lr = assign[k];
      }
      std::vector<int> key{exact, total, -chunks};
      if (key > best) best = key;
      return;
    }
    rec(i + 1);
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (used[j]) continue;
      if (h[i] != r[j] && porter_stem(h[i]) != porter_stem(r[j])) continue;
      used[j] = true;
      assign[i] = int(j);
      rec(i + 1);
      assign[i] = -1;
      used[j] = false;
    }
  };
  rec(0);
  const double m = best[1];
  if (m <= 0) return 0.0;
  const double P = m / h.size(), R = m / r.size();
  const double F = 10 * P * R / (R + 9 * P);
  return F * (1 - 0.5 * std::pow(-best[2] / m, 3));
}

// CIDEr-D from the raw formula on n-gram tuples.
double oracle_cider(const Sentence& hyp, const RefSet& refs, const std::vector<RefSet>& corpus, bool clipped) {
  const double D = corpus.size();
  auto idf = [&](const Gram& g, std::size_t n) {
    double df = 0;
    for (const auto& doc : corpus) {
      bool in = false;
      for (const auto& s : doc) in = in || grams(s, n).count(g) > 0;
      df += in;
    }
    return std::log(D) - std::log(std::max(df, 1.0));
  };
  double total = 0;
  for (const auto& ref : refs) {
    double sum_n = 0;
    for (std::size_t n = 1; n <= 4; ++n) {
      auto gh = grams(hyp, n), gr = grams(ref, n);
      double nh = 0, nr = 0, dot = 0;
      for (const auto& [g, c] : gh) nh += std::pow(c * idf(g, n), 2);
      for (const auto& [g, c] : gr) nr += std::pow(c * idf(g, n), 2);
      for (const auto& [g, c] : gh) {
        if (!gr.count(g)) continue;
        const double w = idf(g, n);
        dot += clipped ? std::min(c, gr[g]) * gr[g] * w * w : c * gr[g] * w * w;
      }
      if (nh > 0 && nr > 0) sum_n += dot / std::sqrt(nh * nr);
    }
    double val = sum_n / 4;
    if (clipped) {
      const double d = double(hyp.size()) - double(ref.size());
      val *= std::exp(-d * d / 72.0);
    }
    total += 10 * val;
  }
  return total / refs.size();
}

Sentence random_sentence(std::mt19937_64& rng, int vocab, int max_len) {
  std::uniform_int_distribution<int> len(1, max_len), w(0, vocab - 1);
  Sentence s;
  for (int i = len(rng); i > 0; --i) s.push_back("w" + std::to_string(w(rng)));
  return s;
}

std::vector<RefSet> toy_corpus() {
  return {{S("a red ball is rolling"), S("the red ball rolls slowly")},
          {S("a blue cube is sliding"), S("the blue cube slides quickly"), S("a cube is sliding")},
          {S("a green ball is bouncing"), S("the green ball bounces")}};
}

}  // namespace

TEST(Ngrams, MassPerOrder) {
  const auto c = count_ngrams(S("a b a b a"));
  EXPECT_EQ(c.totals[0], 5);
  EXPECT_EQ(c.totals[3], 2);
  EXPECT_EQ(c.order(1).at("a"), 3);
  EXPECT_EQ(c.order(2).at("a b"), 2);
  EXPECT_EQ(c.order(2).at("b a"), 2);
  int mass = 0;
  for (const auto& kv : c.order(3)) mass += kv.second;
  EXPECT_EQ(mass, 3);
  EXPECT_EQ(count_ngrams(S("a b")).totals[2], 0);
}

TEST(Bleu, HandExamples) {
  const auto d = bleu4_detail({S("the cat sat")}, {{S("the cat sat down")}});
  EXPECT_DOUBLE_EQ(d.precision[0], 1.0);
  EXPECT_DOUBLE_EQ(d.precision[1], 1.0);
  EXPECT_DOUBLE_EQ(d.precision[2], 1.0);
  EXPECT_DOUBLE_EQ(d.precision[3], 0.0);
  EXPECT_EQ(d.score, 0.0);
  EXPECT_EQ(bleu4({S("a b c d e")}, {{S("a b c d e")}}), 1.0);
  EXPECT_EQ(bleu4({S("x y z w")}, {{S("a b c d")}}), 0.0);
}

TEST(Bleu, MatchesOracleOnRandomCorpora) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<Sentence> hyps;
    std::vector<RefSet> refs;
    for (int k = 0; k < 6; ++k) {
      hyps.push_back(random_sentence(rng, 4, 9));
      RefSet rs;
      for (int j = 0; j < 3; ++j) rs.push_back(random_sentence(rng, 4, 9));
      refs.push_back(rs);
    }
    EXPECT_NEAR(bleu4(hyps, refs), oracle_bleu(hyps, refs), 1e-12);
  }
}

TEST(Bleu, ClosestLengthTieGoesShorter) {
  // refs of length 3 and 5 around a length-4 hypothesis: r = 3, so no brevity penalty.
  const auto d = bleu4_detail({S("a b c d")}, {{S("a b c"), S("a b c d e")}});
  EXPECT_DOUBLE_EQ(d.ref_length, 3.0);
  EXPECT_DOUBLE_EQ(d.brevity_penalty, 1.0);
}

TEST(Bleu, Errors) {
  EXPECT_THROW(bleu4({}, {}), RangeError);
  EXPECT_THROW(bleu4({S("a")}, {}), DimensionError);
  EXPECT_THROW(bleu4({S("a")}, {RefSet{}}), RangeError);
}

TEST(Rouge, HandExamples) {
  EXPECT_NEAR(rouge_l(S("a b c d"), {S("a c d")}), 2.44 * 0.75 / (1 + 1.44 * 0.75), 1e-12);
  EXPECT_NEAR(rouge_l(S("a b c d"), {S("a c d")}), 0.8798, 5e-5);
  EXPECT_EQ(rouge_l(S("a b c"), {S("a b c")}), 1.0);
  EXPECT_EQ(rouge_l(S("a b c"), {S("x y")}), 0.0);
  EXPECT_EQ(rouge_l(Sentence{}, {S("x y")}), 0.0);
  EXPECT_THROW(rouge_l(S("a"), {}), RangeError);
}

TEST(Rouge, LcsMatchesBruteForce) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_sentence(rng, 3, 8), b = random_sentence(rng, 3, 8);
    EXPECT_EQ(lcs_length(a, b), oracle_lcs(a, 0, b, 0));
  }
}

TEST(Porter, ReferenceVocabulary) {
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"caresses", "caress"},   {"ponies", "poni"},       {"ties", "ti"},
      {"caress", "caress"},     {"cats", "cat"},          {"feed", "feed"},
      {"agreed", "agre"},       {"plastered", "plaster"}, {"motoring", "motor"},
      {"sing", "sing"},         {"conflated", "conflat"}, {"troubled", "troubl"},
      {"sized", "size"},        {"hopping", "hop"},       {"tanned", "tan"},
      {"falling", "fall"},      {"hissing", "hiss"},      {"fizzed", "fizz"},
      {"failing", "fail"},      {"filing", "file"},       {"happy", "happi"},
      {"sky", "sky"},           {"relational", "relat"},  {"conditional", "condit"},
      {"rational", "ration"},   {"valenci", "valenc"},    {"digitizer", "digit"},
      {"conformabli", "conform"}, {"radicalli", "radic"}, {"differentli", "differ"},
      {"vileli", "vile"},       {"analogousli", "analog"}, {"vietnamization", "vietnam"},
      {"predication", "predic"}, {"operator", "oper"},    {"feudalism", "feudal"},
      {"decisiveness", "decis"}, {"hopefulness", "hope"}, {"callousness", "callous"},
      {"formaliti", "formal"},  {"sensitiviti", "sensit"}, {"sensibiliti", "sensibl"},
      {"triplicate", "triplic"}, {"formative", "form"},   {"formalize", "formal"},
      {"electriciti", "electr"}, {"electrical", "electr"}, {"hopeful", "hope"},
      {"goodness", "good"},     {"revival", "reviv"},     {"allowance", "allow"},
      {"inference", "infer"},   {"airliner", "airlin"},   {"gyroscopic", "gyroscop"},
      {"adjustable", "adjust"}, {"defensible", "defens"}, {"irritant", "irrit"},
      {"replacement", "replac"}, {"adjustment", "adjust"}, {"dependent", "depend"},
      {"adoption", "adopt"},    {"communism", "commun"},  {"activate", "activ"},
      {"angulariti", "angular"}, {"homologous", "homolog"}, {"effective", "effect"},
      {"bowdlerize", "bowdler"}, {"probate", "probat"},  {"rate", "rate"},
      {"cease", "ceas"},        {"controll", "control"},  {"roll", "roll"},
      {"generalizations", "gener"}, {"oscillators", "oscil"}, {"a", "a"},
      {"is", "is"},             {"moving", "move"},       {"moves", "move"}};
  for (const auto& [w, stem] : cases) EXPECT_EQ(porter_stem(w), stem) << w;
}

TEST(Meteor, HandExamples) {
  EXPECT_NEAR(meteor_lite(S("the cat sat"), {S("the sat cat")}), 0.5, 1e-12);
  const auto a = meteor_align(S("the cat sat"), S("the sat cat"));
  EXPECT_EQ(a.matches, 3);
  EXPECT_EQ(a.chunks, 3);
  for (int L = 1; L <= 6; ++L) {
    Sentence s;
    for (int i = 0; i < L; ++i) s.push_back("t" + std::to_string(i));
    EXPECT_DOUBLE_EQ(meteor_lite(s, {s}), 1.0 - 0.5 / (L * L * L));
  }
  EXPECT_EQ(meteor_lite(S("a b"), {S("c d")}), 0.0);
}

TEST(Meteor, StemStageMatches) {
  const auto a = meteor_align(S("the ball moves"), S("the ball moving"));
  EXPECT_EQ(a.matches, 3);
  EXPECT_EQ(a.exact_matches, 2);
  EXPECT_EQ(a.chunks, 1);
}

TEST(Meteor, PrefersExactOverStemAndFewerChunks) {
  // "moving" may align to "moving" (exact) or "moves" (stem); exact wins.
  const auto a = meteor_align(S("moving"), S("moves moving"));
  EXPECT_EQ(a.exact_matches, 1);
  // repeated tokens: the contiguous alignment has one chunk.
  const auto b = meteor_align(S("a b"), S("a x a b"));
  EXPECT_EQ(b.matches, 2);
  EXPECT_EQ(b.chunks, 1);
}

TEST(Meteor, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(11);
  const std::vector<std::string> words = {"move", "moves", "moving", "ball", "balls", "red"};
  std::uniform_int_distribution<int> pick(0, int(words.size()) - 1), len(1, 6);
  for (int trial = 0; trial < 150; ++trial) {
    Sentence h, r;
    for (int i = len(rng); i > 0; --i) h.push_back(words[pick(rng)]);
    for (int i = len(rng); i > 0; --i) r.push_back(words[pick(rng)]);
    EXPECT_NEAR(meteor_lite(h, {r}), oracle_meteor_one(h, r), 1e-12) << join_tokens(h) << " | " << join_tokens(r);
  }
}

TEST(Idf, CountingOracle) {
  const auto corpus = toy_corpus();
  const auto idf = build_idf(corpus);
  EXPECT_EQ(idf.document_count(), 3u);
  EXPECT_EQ(idf.df("a", 1), 3u);
  EXPECT_DOUBLE_EQ(idf.idf("a", 1), 0.0);
  EXPECT_EQ(idf.df("cube", 1), 1u);  // appears in three captions of one clip
  EXPECT_DOUBLE_EQ(idf.idf("cube", 1), std::log(3.0));
  EXPECT_EQ(idf.df("ball is", 2), 2u);
  EXPECT_EQ(idf.df("never seen", 2), 0u);
  EXPECT_DOUBLE_EQ(idf.idf("never seen", 2), std::log(3.0));
  for (std::size_t n = 1; n <= 4; ++n) {
    for (const auto& [g, df] : idf.table(n)) {
      std::size_t brute = 0;
      for (const auto& doc : corpus) {
        bool in = false;
        for (const auto& s : doc) in = in || count_ngrams(s).order(n).count(g) > 0;
        brute += in;
      }
      EXPECT_EQ(df, brute) << g;
      EXPECT_GE(df, 1u);
      EXPECT_LE(df, 3u);
    }
  }
}

TEST(Cider, SelfMatchAndDisjoint) {
  const auto corpus = toy_corpus();
  const auto idf = build_idf(corpus);
  EXPECT_DOUBLE_EQ(cider_d(S("the blue cube slides quickly"), {S("the blue cube slides quickly")}, idf), 10.0);
  EXPECT_EQ(cider_d(S("zebra"), {S("the blue cube")}, idf), 0.0);
  // only idf-zero overlap ("a" occurs in every clip) scores zero too
  EXPECT_EQ(cider_d(S("a"), {S("a cube")}, idf), 0.0);
}

TEST(Cider, TwoClipToyMatchesOracle) {
  const std::vector<RefSet> corpus = {{S("a man is playing a guitar"), S("a person plays guitar")},
                                      {S("a woman is slicing an onion"), S("someone cuts an onion")}};
  const auto idf = build_idf(corpus);
  const auto hyp = S("a man plays a guitar");
  EXPECT_NEAR(cider_d(hyp, corpus[0], idf), oracle_cider(hyp, corpus[0], corpus, true), 1e-9);
  EXPECT_NEAR(cider_d(hyp, corpus[0], idf, CiderVariant::cider), oracle_cider(hyp, corpus[0], corpus, false), 1e-9);
  const auto hyp2 = S("a woman is cutting an onion an onion");
  EXPECT_NEAR(cider_d(hyp2, corpus[1], idf), oracle_cider(hyp2, corpus[1], corpus, true), 1e-9);
}

TEST(Cider, RandomCorporaMatchOracle) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<RefSet> corpus;
    for (int k = 0; k < 4; ++k) {
      RefSet rs;
      for (int j = 0; j < 2; ++j) rs.push_back(random_sentence(rng, 5, 7));
      corpus.push_back(rs);
    }
    const auto idf = build_idf(corpus);
    const auto hyp = random_sentence(rng, 6, 8);
    for (const auto& refs : corpus) {
      EXPECT_NEAR(cider_d(hyp, refs, idf), oracle_cider(hyp, refs, corpus, true), 1e-9);
      EXPECT_NEAR(cider_d(hyp, refs, idf, CiderVariant::cider), oracle_cider(hyp, refs, corpus, false), 1e-9);
    }
  }
}

TEST(Cider, LengthPenaltyIsGaussian) {
  const std::vector<RefSet> corpus = {{S("p q")}, {S("r s")}, {S("t u")}};
  const auto idf = build_idf(corpus);
  // n=1: clipped dot 2w^2 over sqrt(8)w * sqrt(2)w; n=2: w^2 over sqrt(5)w * w; no ref 3/4-grams
  const double v = cider_d(S("p q p q"), {S("p q")}, idf);
  EXPECT_NEAR(v, 10.0 * (0.5 + 1.0 / std::sqrt(5.0)) / 4.0 * std::exp(-4.0 / 72.0), 1e-12);
  EXPECT_LT(v, 10.0);
  EXPECT_NEAR(cider_d(S("p q p q"), {S("p q")}, idf, CiderVariant::cider), 10.0 * (1.0 + 2.0 / std::sqrt(5.0)) / 4.0,
              1e-12);
}

TEST(Cider, VariantNames) {
  EXPECT_EQ(parse_cider_variant("cider-d"), CiderVariant::cider_d);
  EXPECT_EQ(parse_cider_variant("cider"), CiderVariant::cider);
  EXPECT_EQ(to_string(CiderVariant::cider), "cider");
  EXPECT_THROW(parse_cider_variant("bleu"), UsageError);
}

TEST(CiderScorer, PreparedMatchesDirect) {
  const auto corpus = toy_corpus();
  const auto idf = build_idf(corpus);
  const CiderScorer scorer(idf);
  const auto prepared = scorer.prepare(corpus[1]);
  const auto hyp = S("a blue cube slides");
  EXPECT_EQ(scorer.score(hyp, prepared), cider_d(hyp, corpus[1], idf));
}

TEST(Corpus, AllPerfectAndAllEmpty) {
  const auto corpus = toy_corpus();
  const auto idf = build_idf(corpus);
  std::vector<Sentence> hyps;
  std::vector<RefSet> refs;
  for (const auto& rs : corpus) {
    hyps.push_back(rs[0]);
    refs.push_back({rs[0]});
  }
  const auto r = score_corpus(hyps, refs, idf);
  EXPECT_EQ(r.bleu4, 1.0);
  EXPECT_EQ(r.rouge_l, 1.0);
  EXPECT_GT(r.meteor, 0.99);
  EXPECT_DOUBLE_EQ(r.cider, 10.0);

  const auto z = score_corpus(std::vector<Sentence>(3), refs, idf);
  EXPECT_EQ(z.bleu4, 0.0);
  EXPECT_EQ(z.rouge_l, 0.0);
  EXPECT_EQ(z.meteor, 0.0);
  EXPECT_EQ(z.cider, 0.0);
}

TEST(Corpus, PermutationAndDuplicationInvariance) {
  std::mt19937_64 rng(9);
  std::vector<Sentence> hyps;
  std::vector<RefSet> refs;
  for (int k = 0; k < 8; ++k) {
    hyps.push_back(random_sentence(rng, 5, 7));
    refs.push_back({random_sentence(rng, 5, 7), random_sentence(rng, 5, 7)});
  }
  const auto idf = build_idf(refs);
  const auto base = score_corpus(hyps, refs, idf);

  std::vector<std::size_t> order(hyps.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Sentence> ph;
  std::vector<RefSet> pr;
  for (auto i : order) {
    ph.push_back(hyps[i]);
    pr.push_back(refs[i]);
  }
  const auto perm = score_corpus(ph, pr, idf);
  EXPECT_EQ(perm.bleu4, base.bleu4);
  EXPECT_NEAR(perm.rouge_l, base.rouge_l, 1e-12);
  EXPECT_NEAR(perm.meteor, base.meteor, 1e-12);
  EXPECT_NEAR(perm.cider, base.cider, 1e-12);

  auto dh = hyps;
  auto dr = refs;
  dh.insert(dh.end(), hyps.begin(), hyps.end());
  dr.insert(dr.end(), refs.begin(), refs.end());
  EXPECT_NEAR(score_corpus(dh, dr, idf).cider, base.cider, 1e-12);
}

TEST(Corpus, RangesAndDisjointZero) {
  std::mt19937_64 rng(21);
  std::vector<RefSet> corpus;
  for (int k = 0; k < 5; ++k) corpus.push_back({random_sentence(rng, 6, 8), random_sentence(rng, 6, 8)});
  const auto idf = build_idf(corpus);
  for (int trial = 0; trial < 100; ++trial) {
    const auto h = random_sentence(rng, 6, 8);
    const auto& refs = corpus[trial % corpus.size()];
    const double c = cider_d(h, refs, idf);
    EXPECT_GE(c, 0.0);
    EXPECT_LE(c, 10.0 + 1e-12);
    const double m = meteor_lite(h, refs), rl = rouge_l(h, refs), b = bleu4({h}, {refs});
    for (double v : {m, rl, b}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
  const Sentence h = {"q1", "q2", "q3", "q4"};
  const RefSet r = {{"z1", "z2", "z3", "z4"}};
  EXPECT_EQ(bleu4({h}, {r}), 0.0);
  EXPECT_EQ(rouge_l(h, r), 0.0);
  EXPECT_EQ(meteor_lite(h, r), 0.0);
  EXPECT_EQ(cider_d(h, r, idf), 0.0);
}

TEST(Corpus, SelfMatchDominatesEqualLengthAlternatives) {
  std::mt19937_64 rng(13);
  std::vector<RefSet> corpus;
  for (int k = 0; k < 6; ++k) corpus.push_back({random_sentence(rng, 5, 6)});
  const auto idf = build_idf(corpus);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = random_sentence(rng, 5, 6);
    Sentence alt = s;
    std::uniform_int_distribution<std::size_t> pos(0, s.size() - 1);
    alt[pos(rng)] = "w" + std::to_string(rng() % 5);
    EXPECT_GE(rouge_l(s, {s}), rouge_l(s, {alt}));
    EXPECT_GE(meteor_lite(s, {s}), meteor_lite(s, {alt}));
    EXPECT_GE(cider_d(s, {s}, idf), cider_d(s, {alt}, idf) - 1e-12);
  }
}

TEST(Report, ColumnOrder) {
  const auto t = report_table({{"S2VT", {0.4, 0.6, 0.3, 0.75}}});
  const auto header = t.substr(0, t.find('\n'));
  EXPECT_LT(header.find("BLEU4"), header.find("ROUGE-L"));
  EXPECT_LT(header.find("ROUGE-L"), header.find("METEOR"));
  EXPECT_LT(header.find("METEOR"), header.find("CIDEr"));
  EXPECT_NE(t.find("0.7500"), std::string::npos);
}
