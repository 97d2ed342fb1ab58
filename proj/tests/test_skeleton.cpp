#include <gtest/gtest.h>

#include <random>

#include "skelcap/skeleton.hpp"

using namespace skelcap;

namespace {

SkeletonFrame random_dense(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  SkeletonFrame f = SkeletonFrame::zeros();
  for (auto& p : *f.body) p = {u(rng), u(rng)};
  for (auto& p : *f.left_hand) p = {u(rng), u(rng)};
  for (auto& p : *f.right_hand) p = {u(rng), u(rng)};
  // keep shoulders clearly apart
  (*f.body)[body::kLeftShoulder] = {1.0 + std::abs(u(rng)), u(rng) * 0.2};
  (*f.body)[body::kRightShoulder] = {-1.0 - std::abs(u(rng)), u(rng) * 0.2};
  return f;
}

BodyPoints distinct_body() {
  BodyPoints b{};
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = {100.0 + static_cast<double>(i), -static_cast<double>(i)};
  return b;
}

void expect_frames_near(const SkeletonFrame& a, const SkeletonFrame& b, double tol) {
  const auto va = flatten_frame(a), vb = flatten_frame(b);
  for (std::size_t i = 0; i < va.size(); ++i) EXPECT_NEAR(va[i], vb[i], tol) << "coordinate " << i;
}

}  // namespace

// Every row of the left-hand fallback table.
TEST(ImputeHands, LeftHandFallbackTable) {
  SkeletonFrame f;
  f.body = distinct_body();
  f.right_hand = HandPoints{};
  const auto out = impute_hands(f);
  const auto& b = *f.body;
  ASSERT_TRUE(out.left_hand);
  EXPECT_EQ((*out.left_hand)[0], b[15]);
  for (std::size_t i = 1; i <= 4; ++i) EXPECT_EQ((*out.left_hand)[i], b[21]) << i;
  for (std::size_t i = 5; i <= 12; ++i) EXPECT_EQ((*out.left_hand)[i], b[19]) << i;
  for (std::size_t i = 13; i <= 20; ++i) EXPECT_EQ((*out.left_hand)[i], b[17]) << i;
  EXPECT_EQ(out.right_hand, f.right_hand);
}

// Every row of the right-hand fallback table.
TEST(ImputeHands, RightHandFallbackTable) {
  SkeletonFrame f;
  f.body = BodyPoints{};
  (*f.body)[16] = {1, 2};
  (*f.body)[22] = {3, 4};
  (*f.body)[20] = {5, 6};
  (*f.body)[18] = {7, 8};
  f.left_hand = HandPoints{};
  const auto out = impute_hands(f);
  const auto& r = *out.right_hand;
  EXPECT_EQ(r[0], (Point2{1, 2}));
  for (std::size_t i = 1; i <= 4; ++i) EXPECT_EQ(r[i], (Point2{3, 4})) << i;
  for (std::size_t i = 5; i <= 12; ++i) EXPECT_EQ(r[i], (Point2{5, 6})) << i;
  for (std::size_t i = 13; i <= 20; ++i) EXPECT_EQ(r[i], (Point2{7, 8})) << i;
}

TEST(ImputeHands, IndexChainTakesLeftIndex) {
  SkeletonFrame f;
  f.body = BodyPoints{};
  (*f.body)[19] = {0.3, 0.1};
  f.right_hand = HandPoints{};
  const auto out = impute_hands(f);
  for (std::size_t i = 5; i <= 12; ++i) EXPECT_EQ((*out.left_hand)[i], (Point2{0.3, 0.1}));
}

TEST(ImputeHands, PresentHandsPassThrough) {
  std::mt19937_64 rng(3);
  const auto f = random_dense(rng);
  EXPECT_EQ(impute_hands(f), f);
}

TEST(ImputeHands, RequiresBody) {
  SkeletonFrame f;
  EXPECT_THROW(impute_hands(f), PreconditionError);
}

TEST(ImputeBody, BodyPresentIsUnchanged) {
  SkeletonFrame f;
  f.body = distinct_body();
  EXPECT_EQ(impute_body(f), f);
}

TEST(ImputeBody, CarriesPreviousFrame) {
  std::mt19937_64 rng(5);
  const auto prev = random_dense(rng);
  SkeletonFrame f;
  f.left_hand = HandPoints{};
  EXPECT_EQ(impute_body(f, &prev), prev);
}

TEST(ImputeBody, NoPreviousGivesZeros) {
  SkeletonFrame f;
  const auto out = impute_body(f);
  for (double v : flatten_frame(out)) EXPECT_EQ(v, 0.0);
}

TEST(Imputation, TotalAndIdempotent) {
  std::mt19937_64 rng(11);
  const auto prev = random_dense(rng);
  for (int mask = 0; mask < 8; ++mask) {
    auto f = random_dense(rng);
    if (mask & 1) f.body.reset();
    if (mask & 2) f.left_hand.reset();
    if (mask & 4) f.right_hand.reset();
    for (const SkeletonFrame* p : {static_cast<const SkeletonFrame*>(nullptr), &prev}) {
      const auto once = impute_hands(impute_body(f, p));
      EXPECT_TRUE(once.dense());
      EXPECT_EQ(impute_hands(impute_body(once, p)), once);
      EXPECT_EQ(impute_body(impute_body(f, p), p), impute_body(f, p));
    }
  }
}

TEST(NormalizeFrame, HandComputedAffineMap) {
  SkeletonFrame f = SkeletonFrame::zeros();
  (*f.body)[11] = {2, 0};
  (*f.body)[12] = {4, 0};
  (*f.body)[0] = {3, 1};
  const auto n = normalize_frame(f);
  EXPECT_DOUBLE_EQ(n.params.scale, 0.5);
  EXPECT_EQ(n.params.origin, (Point2{3, 0}));
  EXPECT_FALSE(n.degenerate);
  EXPECT_NEAR((*n.frame.body)[0].x, 0.0, 1e-12);
  EXPECT_NEAR((*n.frame.body)[0].y, 0.5, 1e-12);
  EXPECT_NEAR((*n.frame.body)[11].x, -0.5, 1e-12);
  EXPECT_NEAR((*n.frame.body)[12].x, 0.5, 1e-12);
}

TEST(NormalizeFrame, FixedPoint) {
  SkeletonFrame f = SkeletonFrame::zeros();
  (*f.body)[11] = {-0.5, 0};
  (*f.body)[12] = {0.5, 0};
  (*f.body)[3] = {0.25, -0.75};
  const auto n = normalize_frame(f);
  EXPECT_EQ(n.params.scale, 1.0);
  EXPECT_EQ(n.params.origin, (Point2{0, 0}));
  EXPECT_EQ(n.frame, f);
}

TEST(NormalizeFrame, DegenerateShouldersFallBack) {
  SkeletonFrame f = SkeletonFrame::zeros();
  (*f.body)[5] = {7, 7};
  const auto fresh = normalize_frame(f);
  EXPECT_TRUE(fresh.degenerate);
  EXPECT_EQ(fresh.params, (NormalizationParams{1.0, {0, 0}}));
  EXPECT_EQ(fresh.frame, f);

  const NormalizationParams prev{0.5, {1, 1}};
  const auto reused = normalize_frame(f, prev);
  EXPECT_TRUE(reused.degenerate);
  EXPECT_EQ(reused.params, prev);
  EXPECT_NEAR((*reused.frame.body)[5].x, 3.0, 1e-12);
}

TEST(NormalizeFrame, RequiresDenseFrame) {
  SkeletonFrame f;
  f.body = BodyPoints{};
  EXPECT_THROW(normalize_frame(f), PreconditionError);
}

TEST(NormalizeFrame, ShoulderContractOnRandomFrames) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 1000; ++i) {
    const auto n = normalize_frame(random_dense(rng));
    const auto& b = *n.frame.body;
    EXPECT_NEAR(distance(b[11], b[12]), 1.0, 1e-9);
    EXPECT_NEAR((b[11].x + b[12].x) / 2, 0.0, 1e-9);
    EXPECT_NEAR((b[11].y + b[12].y) / 2, 0.0, 1e-9);
  }
}

TEST(NormalizeFrame, SimilarityInvariance) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> scale(0.25, 4.0), shift(-10.0, 10.0);
  for (int i = 0; i < 200; ++i) {
    const auto f = random_dense(rng);
    const double s = scale(rng);
    const Point2 t{shift(rng), shift(rng)};
    const auto g = detail::map_points(f, [&](Point2 p) { return p * s + t; });
    expect_frames_near(normalize_frame(f).frame, normalize_frame(g).frame, 1e-9);
  }
}

TEST(DenormalizeFrame, InverseOfHandExample) {
  SkeletonFrame f = SkeletonFrame::zeros();
  (*f.body)[0] = {0, 0.5};
  const auto out = denormalize_frame(f, {0.5, {3, 0}});
  EXPECT_NEAR((*out.body)[0].x, 3.0, 1e-12);
  EXPECT_NEAR((*out.body)[0].y, 1.0, 1e-12);
}

TEST(DenormalizeFrame, IdentityParams) {
  std::mt19937_64 rng(23);
  const auto f = random_dense(rng);
  EXPECT_EQ(denormalize_frame(f, {1.0, {0, 0}}), f);
}

TEST(DenormalizeFrame, RejectsNonPositiveScale) {
  const auto f = SkeletonFrame::zeros();
  EXPECT_THROW(denormalize_frame(f, {0.0, {}}), InvalidParamsError);
  EXPECT_THROW(denormalize_frame(f, {-1.0, {}}), InvalidParamsError);
}

TEST(DenormalizeFrame, RoundTrip) {
  std::mt19937_64 rng(29);
  for (int i = 0; i < 200; ++i) {
    const auto f = random_dense(rng);
    const auto n = normalize_frame(f);
    expect_frames_near(denormalize_frame(n.frame, n.params), f, 1e-9);
  }
}

TEST(FlattenFrame, Layout) {
  auto f = SkeletonFrame::zeros();
  for (double v : flatten_frame(f)) EXPECT_EQ(v, 0.0);
  (*f.body)[0] = {1, 2};
  (*f.left_hand)[0] = {3, 4};
  (*f.right_hand)[20] = {5, 6};
  const auto v = flatten_frame(f);
  EXPECT_EQ(v[0], 1);
  EXPECT_EQ(v[1], 2);
  EXPECT_EQ(v[66], 3);
  EXPECT_EQ(v[67], 4);
  EXPECT_EQ(v[148], 5);
  EXPECT_EQ(v[149], 6);
}

TEST(FlattenFrame, RoundTripIsExact) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 100; ++i) {
    const auto f = random_dense(rng);
    const auto v = flatten_frame(f);
    EXPECT_EQ(unflatten_frame(v), f);
  }
  EXPECT_THROW(unflatten_frame(std::vector<double>(149)), ShapeError);
}

TEST(PreprocessSequence, LeadingMissingBodyIsZeroAndDegenerate) {
  std::vector<SkeletonFrame> seq(1);
  const auto out = preprocess_sequence(seq);
  ASSERT_EQ(out.size(), 1u);
  for (double v : out[0].points) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(out[0].params, (NormalizationParams{1.0, {0, 0}}));
  EXPECT_TRUE(out[0].degenerate);
}

TEST(PreprocessSequence, IdenticalFramesGiveIdenticalOutputs) {
  std::mt19937_64 rng(37);
  const auto f = random_dense(rng);
  const std::vector<SkeletonFrame> seq(4, f);
  const auto out = preprocess_sequence(seq);
  for (const auto& o : out) EXPECT_EQ(o, out[0]);
}

TEST(PreprocessSequence, MissingBodyRepeatsPreviousOutput) {
  std::mt19937_64 rng(41);
  std::vector<SkeletonFrame> seq{random_dense(rng), SkeletonFrame{}};
  seq[1].right_hand = HandPoints{};
  const auto out = preprocess_sequence(seq);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[1], out[0]);
}

TEST(PreprocessSequence, InvariantsOnMixedSequence) {
  std::mt19937_64 rng(43);
  std::bernoulli_distribution drop(0.3);
  std::vector<SkeletonFrame> seq;
  for (int i = 0; i < 50; ++i) {
    auto f = random_dense(rng);
    if (drop(rng)) f.body.reset();
    if (drop(rng)) f.left_hand.reset();
    if (drop(rng)) f.right_hand.reset();
    seq.push_back(f);
  }
  const auto a = preprocess_sequence(seq);
  EXPECT_EQ(a, preprocess_sequence(seq));
  ASSERT_EQ(a.size(), seq.size());
  for (const auto& o : a) {
    EXPECT_GT(o.params.scale, 0.0);
    for (double v : o.points) EXPECT_TRUE(std::isfinite(v));
    if (!o.degenerate) {
      const Point2 l{o.points[22], o.points[23]}, r{o.points[24], o.points[25]};
      EXPECT_NEAR(distance(l, r), 1.0, 1e-9);
      EXPECT_NEAR(l.x + r.x, 0.0, 1e-9);
      EXPECT_NEAR(l.y + r.y, 0.0, 1e-9);
    }
  }
}

TEST(PreprocessSequence, EmptyInput) {
  EXPECT_THROW(preprocess_sequence(std::vector<SkeletonFrame>{}), EmptyInputError);
}
