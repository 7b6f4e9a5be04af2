#include <gtest/gtest.h>

#include <fstream>
#include <iterator>
#include <set>

#include "support/temp_dir.hpp"
#include "vcap/data/corpus.hpp"
#include "vcap/data/text.hpp"
#include "vcap/error.hpp"

using namespace vcap;
using namespace vcap::data;
using vcap::testing::TempDir;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

struct Centroid {
  double x = 0, y = 0;
  int count = 0;
};

Centroid centroid(const nn::Tensor& frames, std::size_t t) {
  const std::size_t h = frames.dim(1), w = frames.dim(2);
  Centroid c;
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      const std::size_t base = ((t * h + i) * w + j) * 3;
      if (frames[base] + frames[base + 1] + frames[base + 2] > 0) {
        c.x += j;
        c.y += i;
        ++c.count;
      }
    }
  }
  if (c.count) {
    c.x /= c.count;
    c.y /= c.count;
  }
  return c;
}

}  // namespace

TEST(Tokenize, Examples) {
  EXPECT_EQ(tokenize("A man is Talking."), (Tokens{"a", "man", "is", "talking"}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_EQ(tokenize("  \"Hi,\" she said; ok?!  "), (Tokens{"hi", "she", "said", "ok"}));
  EXPECT_EQ(join_tokens({"a", "b"}), "a b");
}

TEST(Vocabulary, ReservedIdsAndOrdering) {
  const auto v = build_vocabulary({tokenize("a dog")});
  ASSERT_EQ(v.size(), 6u);
  EXPECT_EQ(v.token(0), "<pad>");
  EXPECT_EQ(v.token(1), "<bos>");
  EXPECT_EQ(v.token(2), "<eos>");
  EXPECT_EQ(v.token(3), "<unk>");
  EXPECT_EQ(v.id("a"), 4);
  EXPECT_EQ(v.id("dog"), 5);

  const auto w = build_vocabulary({tokenize("b c c a"), tokenize("a c")});
  EXPECT_EQ(w.words(), (std::vector<std::string>{"c", "a", "b"}));
  EXPECT_EQ(w, build_vocabulary({tokenize("b c c a"), tokenize("a c")}));
}

TEST(Vocabulary, MinCountAndRoundTrip) {
  const auto v = build_vocabulary({tokenize("x y y"), tokenize("y z")}, 2);
  EXPECT_EQ(v.words(), (std::vector<std::string>{"y"}));
  EXPECT_EQ(v.id("x"), Vocabulary::kUnk);

  const auto full = build_vocabulary({tokenize("the red ball rolls")});
  const Tokens t = tokenize("the ball rolls red");
  EXPECT_EQ(full.decode(full.encode(t)), t);
  EXPECT_EQ(full.decode(full.encode(tokenize("the green ball"))), (Tokens{"the", "<unk>", "ball"}));
  Caption ids = full.encode(t);
  ids.insert(ids.begin(), Vocabulary::kBos);
  ids.push_back(Vocabulary::kEos);
  ids.push_back(full.id("red"));
  EXPECT_EQ(full.decode(ids), t);
  EXPECT_THROW(full.token(99), RangeError);
}

TEST(Corpus, SplitRatio) {
  CorpusConfig c;
  c.set_total(290);
  EXPECT_EQ(c.train_clips, 200u);
  EXPECT_EQ(c.val_clips, 30u);
  EXPECT_EQ(c.test_clips, 60u);
  c.set_total(10);
  EXPECT_EQ(c.total(), 10u);
  EXPECT_GE(c.train_clips, c.test_clips);
}

TEST(Corpus, GrammarSizeValidated) {
  CorpusConfig c;
  c.grammar_size = 0;
  EXPECT_THROW(c.validate(), RangeError);
  c.grammar_size = kMaxGrammarSize + 1;
  EXPECT_THROW(c.validate(), RangeError);
  TempDir dir;
  c.grammar_size = 0;
  EXPECT_THROW(generate_corpus(c, dir.path()), RangeError);
}

TEST(Corpus, RenderIsPureAndOnCanvas) {
  for (int subject = 0; subject < kMaxGrammarSize; ++subject) {
    for (int action = 0; action < kMaxGrammarSize; ++action) {
      for (int speed = 0; speed < 2; ++speed) {
        const SceneSpec s{subject, action, (subject + action) % kMaxGrammarSize, speed, 1234567ULL * (subject + 1)};
        const auto a = render_clip(s, 8, 32);
        EXPECT_EQ(a, render_clip(s, 8, 32));
        ASSERT_EQ(a.shape(), (nn::Shape{8, 32, 32, 3}));
        for (std::size_t t = 0; t < 8; ++t) EXPECT_GT(centroid(a, t).count, 0) << subject << " " << action;
        for (double v : a.values()) {
          EXPECT_GE(v, 0.0);
          EXPECT_LE(v, 1.0);
          EXPECT_EQ(v, static_cast<double>(static_cast<float>(v)));
        }
      }
    }
  }
}

TEST(Corpus, MotionMatchesAction) {
  auto frames = [](int action) { return render_clip({0, action, 0, 1, 99}, 8, 32); };
  const auto slide = frames(0), rise = frames(1), fall = frames(2), drift = frames(4), grow = frames(5),
             shrink = frames(6);
  EXPECT_GT(centroid(slide, 7).x, centroid(slide, 0).x + 10);
  EXPECT_LT(centroid(rise, 7).y, centroid(rise, 0).y - 10);
  EXPECT_GT(centroid(fall, 7).y, centroid(fall, 0).y + 10);
  EXPECT_LT(centroid(drift, 7).x, centroid(drift, 0).x - 10);
  EXPECT_GT(centroid(grow, 7).count, centroid(grow, 0).count);
  EXPECT_LT(centroid(shrink, 7).count, centroid(shrink, 0).count);
}

TEST(Corpus, CaptionsNameTheScene) {
  const SceneSpec s{2, 3, 1, 0, 5};
  const auto caps = describe(s);
  ASSERT_EQ(caps.size(), static_cast<std::size_t>(kCaptionTemplates));
  for (const auto& c : caps) {
    const auto t = tokenize(c);
    EXPECT_NE(std::find(t.begin(), t.end(), "triangle"), t.end()) << c;
    for (const auto& w : t) {
      const bool is_color = std::find(color_words().begin(), color_words().end(), w) != color_words().end();
      if (is_color) EXPECT_EQ(w, "green");
    }
  }
  EXPECT_EQ(caps[0], "a green triangle is bouncing");
  EXPECT_EQ(caps[1], "the green triangle bounces slowly");
}

TEST(Corpus, SameSeedSameBytes) {
  TempDir a, b;
  CorpusConfig c;
  c.set_total(10);
  c.seed = 7;
  generate_corpus(c, a.path());
  generate_corpus(c, b.path());
  std::vector<std::string> names;
  for (const auto& e : fs::recursive_directory_iterator(a.path())) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), a.path());
    EXPECT_EQ(slurp(e.path()), slurp(b.path() / rel)) << rel;
    names.push_back(rel.string());
  }
  EXPECT_EQ(names.size(), 12u);  // 10 frame files, manifest, meta
  c.seed = 8;
  TempDir d;
  generate_corpus(c, d.path());
  EXPECT_NE(slurp(a / "manifest.jsonl"), slurp(d / "manifest.jsonl"));
}

TEST(Corpus, DefaultCorpusMatchesAnalyticStatistics) {
  TempDir dir;
  CorpusConfig c;  // 200 / 30 / 60
  const auto m = generate_corpus(c, dir.path());
  ASSERT_EQ(m.clips.size(), 290u);

  std::set<std::string> ids;
  for (const auto& rec : m.clips) EXPECT_TRUE(ids.insert(rec.id).second);
  EXPECT_EQ(m.split(Split::train).size(), 200u);
  EXPECT_EQ(m.split(Split::val).size(), 30u);
  EXPECT_EQ(m.split(Split::test).size(), 60u);

  // analytic vocabulary: function words plus the grammar words of each training scene
  std::set<std::string> expected(template_function_words().begin(), template_function_words().end());
  for (const auto* rec : m.split(Split::train)) {
    const auto& s = rec->scene;
    expected.insert(color_words()[s.color]);
    expected.insert(subject_words()[s.subject]);
    expected.insert(action_ing_words()[s.action]);
    expected.insert(action_s_words()[s.action]);
    expected.insert(speed_words()[s.speed]);
    EXPECT_EQ(rec->captions.size(), static_cast<std::size_t>(kCaptionTemplates));
  }
  const auto caps = training_captions(m);
  const auto vocab = build_vocabulary(caps);
  EXPECT_EQ(vocab.size(), Vocabulary::kReserved + expected.size());

  std::map<std::size_t, std::size_t> hist;
  for (const auto& t : caps) ++hist[t.size()];
  EXPECT_EQ(hist, (std::map<std::size_t, std::size_t>{{4, 200}, {5, 600}, {6, 200}}));

  const auto reread = read_manifest(dir.path());
  ASSERT_EQ(reread.clips.size(), m.clips.size());
  for (std::size_t i = 0; i < m.clips.size(); ++i) {
    EXPECT_EQ(reread.clips[i].scene, m.clips[i].scene);
    EXPECT_EQ(reread.clips[i].captions, m.clips[i].captions);
    EXPECT_EQ(reread.clips[i].split, m.clips[i].split);
  }
  EXPECT_EQ(reread.config.seed, c.seed);
  EXPECT_EQ(reread.config.grammar_size, c.grammar_size);
}

TEST(Corpus, FramesRoundTrip) {
  TempDir dir;
  const auto frames = render_clip({1, 2, 3, 1, 42}, 4, 16);
  write_frames(dir / "x.vcfr", frames);
  EXPECT_EQ(read_frames(dir / "x.vcfr"), frames);
  std::ofstream(dir / "bad.vcfr") << "nope";
  EXPECT_THROW(read_frames(dir / "bad.vcfr"), FormatError);
}

TEST(Features, RoundTripAndDimCheck) {
  TempDir dir;
  FeatureMap f;
  f["clip00000"] = nn::Tensor({3, 4}, {0.1, -2, 3e-9, 4, 5, 6, 7, 8, 9, 10, 11, 1.0 / 3.0});
  f["clip00001"] = nn::Tensor({2, 4}, {1, 2, 3, 4, 5, 6, 7, 8});
  write_features(dir / "f.bin", f);
  EXPECT_EQ(load_features(dir / "f.bin", 4), f);
  try {
    load_features(dir / "f.bin", 64);
    FAIL() << "expected a dimension error";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("4"), std::string::npos);
    EXPECT_NE(msg.find("64"), std::string::npos);
  }
}

TEST(Features, LoadClipsInFeatureMode) {
  TempDir dir;
  CorpusConfig c;
  c.set_total(6);
  const auto m = generate_corpus(c, dir.path());
  FeatureMap f;
  for (const auto& rec : m.clips) f[rec.id] = nn::Tensor({8, 2}, 0.5);
  const auto clips = load_clips(m, Split::train, &f);
  ASSERT_FALSE(clips.empty());
  for (const auto& clip : clips) {
    EXPECT_FALSE(clip.has_frames());
    EXPECT_EQ(clip.length(), 8u);
  }
  const auto framed = load_clips(m, Split::train);
  EXPECT_TRUE(framed[0].has_frames());
  EXPECT_EQ(framed[0].frames, render_clip(m.clips[0].scene, 8, 32));
  f.erase(m.clips[0].id);
  EXPECT_THROW(load_clips(m, Split::train, &f), FormatError);
}
