#include <gtest/gtest.h>

#include <random>

#include "skelcap/text_metrics.hpp"

using namespace skelcap;

namespace {
using Strings = std::vector<std::string>;

Strings random_corpus(std::mt19937_64& rng, std::size_t n, std::size_t min_len) {
  static const Strings words{"the", "right", "left", "hand", "moves", "circle", "twice", "once", ".", "chin", "a"};
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1), len(min_len, 14);
  Strings out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string s;
    for (std::size_t k = len(rng); k > 0; --k) s += words[pick(rng)] + " ";
    out.push_back(s);
  }
  return out;
}
}  // namespace

TEST(MetricTokenize, Basics) {
  EXPECT_EQ(metric_tokenize("The right Hand."), (Tokens{"the", "right", "hand", "."}));
  EXPECT_TRUE(metric_tokenize("").empty());
  EXPECT_EQ(metric_tokenize("the right hand ."), (Tokens{"the", "right", "hand", "."}));
}

TEST(Rouge, HandCountedExamples) {
  EXPECT_DOUBLE_EQ(rouge_n(Strings{"a b c"}, Strings{"a b c"}, 1), 1.0);
  // recall 3/4, precision 1
  EXPECT_NEAR(rouge_n(Strings{"the right hand"}, Strings{"the right hand moves"}, 1), 6.0 / 7.0, 1e-12);
  EXPECT_EQ(rouge_n(Strings{"a b"}, Strings{"c d"}, 1), 0.0);
  // LCS("a c b d", "a b c d") = 3
  EXPECT_NEAR(rouge_l(Strings{"a c b d"}, Strings{"a b c d"}), 0.75, 1e-12);
  EXPECT_EQ(rouge_l(Strings{""}, Strings{"a b"}), 0.0);
  EXPECT_DOUBLE_EQ(rouge_l(Strings{"x y z"}, Strings{"x y z"}), 1.0);
  EXPECT_THROW(rouge_n(Strings{"a"}, Strings{}, 1), LengthMismatchError);
  EXPECT_THROW(rouge_l(Strings{"a"}, Strings{}), LengthMismatchError);
}

TEST(Rouge, NoNgramsOnEitherSideScoresZero) {
  EXPECT_EQ(rouge_n(Strings{"a"}, Strings{"a"}, 2), 0.0);
}

TEST(Bleu, HandCountedPrecisions) {
  const Strings c{"a b c d"}, r{"a b x d"};
  EXPECT_NEAR(bleu_individual(c, r, 1), 3.0 / 4.0, 1e-12);
  EXPECT_NEAR(bleu_individual(c, r, 2), 1.0 / 3.0, 1e-12);
  EXPECT_EQ(bleu_individual(c, r, 3), 0.0);
  EXPECT_EQ(bleu_composite(c, r), 0.0);
  // clipped: min(3, 1) matches over 3 candidate unigrams
  EXPECT_NEAR(bleu_individual(Strings{"a a a"}, Strings{"a b"}, 1), 1.0 / 3.0, 1e-12);
  EXPECT_EQ(bleu_individual(Strings{"a"}, Strings{"a"}, 4), 0.0);
  EXPECT_THROW(bleu_individual(c, Strings{}, 1), LengthMismatchError);
  EXPECT_THROW(bleu_composite(c, Strings{}), LengthMismatchError);
}

TEST(Bleu, CompositeFormula) {
  EXPECT_NEAR(bleu_combine({0.98, 0.96, 0.95, 0.94}, 1.0), 0.9573862633596083, 1e-12);
  EXPECT_NEAR(bleu_combine({0.48, 0.21, 0.11, 0.06}, 1.0), 0.16060206198005555, 1e-12);
  EXPECT_EQ(bleu_combine({0.5, 0.0, 0.5, 0.5}, 1.0), 0.0);
  // brevity penalty exp(1 - 6/4) for a 4-token candidate against 6 tokens
  const Strings c{"a b c d"}, r{"a b c d e f"};
  EXPECT_NEAR(bleu_composite(c, r), std::exp(1.0 - 6.0 / 4.0), 1e-12);
}

TEST(Evaluate, ReportMatchesIndividualOperations) {
  const Strings c{"the right hand moves in a circle", "a c b d", "the hand"};
  const Strings r{"the right hand moves in a small circle", "a b c d", "the left hand"};
  const auto rep = evaluate(c, r);
  EXPECT_EQ(rep.rouge1, rouge_n(c, r, 1));
  EXPECT_EQ(rep.rouge2, rouge_n(c, r, 2));
  EXPECT_EQ(rep.rougeL, rouge_l(c, r));
  EXPECT_EQ(rep.bleu1, bleu_individual(c, r, 1));
  EXPECT_EQ(rep.bleu2, bleu_individual(c, r, 2));
  EXPECT_EQ(rep.bleu3, bleu_individual(c, r, 3));
  EXPECT_EQ(rep.bleu4, bleu_individual(c, r, 4));
  EXPECT_EQ(rep.bleu, bleu_composite(c, r));
  EXPECT_EQ(rep.n_pairs, 3u);
  EXPECT_THROW(evaluate(c, Strings{}), LengthMismatchError);
}

TEST(Evaluate, JsonAndTable) {
  const Strings c{"a b c d e"};
  const auto rep = evaluate(c, c);
  const auto j = rep.to_json();
  EXPECT_EQ(j.dump(),
            R"({"rouge1":1.0,"rouge2":1.0,"rougeL":1.0,"bleu":1.0,"bleu1":1.0,"bleu2":1.0,"bleu3":1.0,"bleu4":1.0,"n_pairs":1})");
  EXPECT_EQ(MetricReport::from_json(j).to_json(), j);
  EXPECT_NE(rep.table("test").find("ROUGE-L"), std::string::npos);
}

TEST(MetricProperties, RangeIdentityAndSymmetryFuzz) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 1000; ++i) {
    const auto c = random_corpus(rng, 1 + i % 7, 0);
    const auto r = random_corpus(rng, c.size(), 0);
    const auto rep = evaluate(c, r);
    for (double v : {rep.rouge1, rep.rouge2, rep.rougeL, rep.bleu, rep.bleu1, rep.bleu2, rep.bleu3, rep.bleu4}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    const double gm = std::pow(rep.bleu1 * rep.bleu2 * rep.bleu3 * rep.bleu4, 0.25);
    EXPECT_LE(rep.bleu, gm + 1e-9);

    const auto swapped = evaluate(r, c);
    EXPECT_NEAR(swapped.rouge1, rep.rouge1, 1e-12);
    EXPECT_NEAR(swapped.rouge2, rep.rouge2, 1e-12);
    EXPECT_NEAR(swapped.rougeL, rep.rougeL, 1e-12);

    const auto counts = bleu_counts(detail::tokenize_all(c), detail::tokenize_all(r));
    if (rep.bleu1 > 0 && rep.bleu2 > 0 && rep.bleu3 > 0 && rep.bleu4 > 0) {
      const double composed = counts.brevity_penalty() *
                              std::exp((std::log(rep.bleu1) + std::log(rep.bleu2) + std::log(rep.bleu3) +
                                        std::log(rep.bleu4)) / 4.0);
      EXPECT_NEAR(rep.bleu, composed, 1e-12);
    }

    const auto same = random_corpus(rng, 1 + i % 5, 4);
    const auto id = evaluate(same, same);
    for (double v : {id.rouge1, id.rouge2, id.rougeL, id.bleu, id.bleu1, id.bleu2, id.bleu3, id.bleu4})
      EXPECT_EQ(v, 1.0);
  }
}

// Dropping a token from a candidate never raises its LCS against a fixed reference.
TEST(MetricProperties, LcsRecallMonotoneUnderContainment) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    const auto ref = metric_tokenize(random_corpus(rng, 1, 1)[0]);
    const auto big = metric_tokenize(random_corpus(rng, 1, 2)[0]);
    auto small = big;
    small.erase(small.begin() + static_cast<std::ptrdiff_t>(rng() % small.size()));
    EXPECT_LE(lcs_length(small, ref), lcs_length(big, ref));
  }
}
