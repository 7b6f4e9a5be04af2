#include <gtest/gtest.h>

#include <cmath>

#include "support/gradcheck.hpp"
#include "support/temp_dir.hpp"
#include "vcap/attributes/attributes.hpp"
#include "vcap/error.hpp"
#include "vcap/nn/ops.hpp"

using namespace vcap;
using namespace vcap::attributes;

namespace {

std::vector<Tokens> corpus(std::initializer_list<const char*> lines) {
  std::vector<Tokens> out;
  for (const auto* l : lines) out.push_back(tokenize(l));
  return out;
}

double loss_value(const std::vector<double>& q, const std::vector<double>& y) {
  nn::Graph g(false);
  auto qv = g.constant(nn::Tensor::vector(q));
  return g.value(attribute_loss(g, qv, nn::Tensor::vector(y))).item();
}

}  // namespace

TEST(MineAttributes, CountingOracle) {
  ContentLexicon lex;
  lex.content = {"dog", "runs", "sits", "a"};
  lex.stopwords = {"a"};
  const auto attrs = mine_attributes(corpus({"a dog runs", "a dog sits"}), 5, lex);
  ASSERT_EQ(attrs.size(), 3u);
  EXPECT_EQ(attrs.tokens()[0], "dog");
  EXPECT_EQ(attrs.tokens()[1], "runs");  // tie with "sits" broken lexicographically
  EXPECT_EQ(attrs.tokens()[2], "sits");
  EXPECT_FALSE(attrs.index("a").has_value());
}

TEST(MineAttributes, TopNAndStopwords) {
  const auto caps = corpus({"the red ball is sliding", "a red ball slides", "a blue ball rolls", "there is a cube"});
  const auto all = mine_attributes(caps, 100);
  for (const auto& t : all.tokens()) {
    EXPECT_FALSE(ContentLexicon::bundled().stopwords.count(t)) << t;
  }
  EXPECT_EQ(all.tokens()[0], "ball");
  EXPECT_EQ(all.tokens()[1], "red");
  const auto top2 = mine_attributes(caps, 2);
  EXPECT_EQ(top2.tokens(), (std::vector<std::string>{"ball", "red"}));
  EXPECT_EQ(mine_attributes(caps, 100), all);
  EXPECT_THROW(mine_attributes({}, 3), RangeError);
}

TEST(LabelClip, Bits) {
  const AttributeLexicon lex({"dog", "cat", "runs", "red", "blue"});
  EXPECT_EQ(label_clip(corpus({"a dog runs", "the dog"}), lex), (std::vector<std::uint8_t>{1, 0, 1, 0, 0}));
  EXPECT_EQ(label_clip(corpus({"dog cat", "runs red blue"}), lex), (std::vector<std::uint8_t>(5, 1)));
  EXPECT_EQ(label_clip(corpus({"nothing here"}), lex), (std::vector<std::uint8_t>(5, 0)));
  // order and multiplicity do not matter
  EXPECT_EQ(label_clip(corpus({"runs dog dog"}), lex), label_clip(corpus({"dog runs"}), lex));
}

TEST(AttributeLoss, HandValues) {
  EXPECT_NEAR(loss_value({0.5, 0.5, 0.5}, {1, 0, 1}), std::log(2.0), 1e-15);
  EXPECT_NEAR(loss_value({0.9, 0.2, 0.7}, {1, 0, 1}), -(std::log(0.9) + std::log(0.8) + std::log(0.7)) / 3, 1e-12);
  EXPECT_NEAR(loss_value({0.9, 0.2, 0.7}, {1, 0, 1}), 0.2284, 5e-5);
  EXPECT_LE(loss_value({1.0, 0.0, 1.0}, {1, 0, 1}), 1e-10);
  EXPECT_GE(loss_value({0.3, 0.6}, {1, 1}), 0.0);
  nn::Graph g;
  auto q = g.constant(nn::Tensor::vector({0.5, 0.5}));
  EXPECT_THROW(attribute_loss(g, q, nn::Tensor::vector({1, 0, 1})), DimensionError);
}

TEST(AttributeLoss, GradientMatchesFiniteDifferences) {
  const nn::Tensor y = nn::Tensor::matrix(2, 3, {1, 0, 1, 0, 0, 1});
  const double err = vcap::testing::input_gradient_error(
      {nn::Tensor::matrix(2, 3, {0.3, -1.2, 0.8, 2.0, 0.1, -0.4})},
      [&](nn::Graph& g, const std::vector<nn::Var>& v) { return attribute_loss(g, nn::sigmoid(g, v[0]), y); });
  EXPECT_LT(err, 1e-6);
}

TEST(AttributeFiles, RoundTrip) {
  vcap::testing::TempDir dir;
  const AttributeLexicon lex({"ball", "red", "slides"});
  write_lexicon(dir / "lex.txt", lex);
  EXPECT_EQ(read_lexicon(dir / "lex.txt"), lex);
  AttributeLabels labels{{"clip00000", {1, 0, 1}}, {"clip00001", {0, 0, 0}}};
  write_labels(dir / "labels.tsv", labels);
  EXPECT_EQ(read_labels(dir / "labels.tsv", 3), labels);
  EXPECT_THROW(read_labels(dir / "labels.tsv", 2), FormatError);
  const auto y = label_matrix({&labels["clip00000"], &labels["clip00001"]});
  EXPECT_EQ(y, nn::Tensor::matrix(2, 3, {1, 0, 1, 0, 0, 0}));
}
