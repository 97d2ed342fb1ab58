#pragma once

// Raw and preprocessed skeleton frames: missing-landmark imputation,
// shoulder-based spatial normalization, and the fixed 150-value layout.

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "skelcap/errors.hpp"

namespace skelcap {

inline constexpr std::size_t kBodyLandmarks = 33;
inline constexpr std::size_t kHandLandmarks = 21;
inline constexpr std::size_t kLandmarks = kBodyLandmarks + 2 * kHandLandmarks;  // 75
inline constexpr std::size_t kFrameValues = 2 * kLandmarks;                   // 150

// Body landmark indices used by the pipeline (pose landmark catalog).
namespace body {
inline constexpr std::size_t kNose = 0;
inline constexpr std::size_t kLeftShoulder = 11;
inline constexpr std::size_t kRightShoulder = 12;
inline constexpr std::size_t kLeftElbow = 13;
inline constexpr std::size_t kRightElbow = 14;
inline constexpr std::size_t kLeftWrist = 15;
inline constexpr std::size_t kRightWrist = 16;
inline constexpr std::size_t kLeftPinky = 17;
inline constexpr std::size_t kRightPinky = 18;
inline constexpr std::size_t kLeftIndex = 19;
inline constexpr std::size_t kRightIndex = 20;
inline constexpr std::size_t kLeftThumb = 21;
inline constexpr std::size_t kRightThumb = 22;
}  // namespace body

// Shoulder distance below which a frame is treated as degenerate.
inline constexpr double kDegenerateShoulderDistance = 1e-6;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
  Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
  Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
  Point2 operator*(double s) const { return {x * s, y * s}; }
  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

using BodyPoints = std::array<Point2, kBodyLandmarks>;
using HandPoints = std::array<Point2, kHandLandmarks>;

struct SkeletonFrame {
  std::optional<BodyPoints> body;
  std::optional<HandPoints> left_hand;
  std::optional<HandPoints> right_hand;

  bool dense() const { return body && left_hand && right_hand; }
  friend bool operator==(const SkeletonFrame&, const SkeletonFrame&) = default;

  static SkeletonFrame zeros() { return {BodyPoints{}, HandPoints{}, HandPoints{}}; }
};

struct NormalizationParams {
  double scale = 1.0;
  Point2 origin{};

  friend bool operator==(const NormalizationParams&, const NormalizationParams&) = default;
};

using FrameVector = std::array<double, kFrameValues>;

struct PreprocessedFrame {
  FrameVector points{};
  NormalizationParams params{};
  bool degenerate = false;

  friend bool operator==(const PreprocessedFrame&, const PreprocessedFrame&) = default;
};

struct NormalizedFrame {
  SkeletonFrame frame;
  NormalizationParams params;
  bool degenerate = false;
};

namespace detail {

inline void require_dense(const SkeletonFrame& f, const char* op) {
  if (!f.dense()) throw PreconditionError(std::string(op) + ": frame is not dense");
}

template <class Fn>
SkeletonFrame map_points(const SkeletonFrame& f, Fn&& fn) {
  SkeletonFrame out = f;
  for (auto& p : *out.body) p = fn(p);
  for (auto& p : *out.left_hand) p = fn(p);
  for (auto& p : *out.right_hand) p = fn(p);
  return out;
}

// Hand landmark -> body landmark used when the hand is undetected.
// Wrist, thumb chain (1-4), index+middle chains (5-12), ring+pinky chains (13-20).
inline constexpr std::size_t hand_fallback(std::size_t hand_index, bool left) {
  if (hand_index == 0) return left ? body::kLeftWrist : body::kRightWrist;
  if (hand_index <= 4) return left ? body::kLeftThumb : body::kRightThumb;
  if (hand_index <= 12) return left ? body::kLeftIndex : body::kRightIndex;
  return left ? body::kLeftPinky : body::kRightPinky;
}

}  // namespace detail

// Fills an undetected hand from the nearest body landmarks.
inline SkeletonFrame impute_hands(const SkeletonFrame& frame) {
  if (!frame.body) throw PreconditionError("impute_hands: body group is absent");
  SkeletonFrame out = frame;
  const auto& b = *frame.body;
  auto fill = [&](bool left) {
    HandPoints hand{};
    for (std::size_t i = 0; i < kHandLandmarks; ++i) hand[i] = b[detail::hand_fallback(i, left)];
    return hand;
  };
  if (!out.left_hand) out.left_hand = fill(true);
  if (!out.right_hand) out.right_hand = fill(false);
  return out;
}

// A frame without a body is replaced by the previous dense frame, or by
// all-zero landmarks when nothing precedes it.
inline SkeletonFrame impute_body(const SkeletonFrame& frame, const SkeletonFrame* previous = nullptr) {
  if (frame.body) return frame;
  if (previous) {
    detail::require_dense(*previous, "impute_body (previous)");
    return *previous;
  }
  return SkeletonFrame::zeros();
}

// Maps p -> (p - origin) * scale so the shoulders sit at distance 1 around (0,0).
// With coincident shoulders the previous params (or identity) are used and the
// result is flagged degenerate.
inline NormalizedFrame normalize_frame(const SkeletonFrame& frame,
                                       const std::optional<NormalizationParams>& previous = std::nullopt) {
  detail::require_dense(frame, "normalize_frame");
  const Point2 ls = (*frame.body)[body::kLeftShoulder];
  const Point2 rs = (*frame.body)[body::kRightShoulder];
  const double d = distance(ls, rs);

  NormalizationParams params;
  bool degenerate = false;
  if (!(d >= kDegenerateShoulderDistance)) {
    degenerate = true;
    params = previous.value_or(NormalizationParams{});
  } else {
    params.origin = {(ls.x + rs.x) / 2.0, (ls.y + rs.y) / 2.0};
    params.scale = 1.0 / d;
  }
  const auto& p = params;
  return {detail::map_points(frame, [&](Point2 q) { return (q - p.origin) * p.scale; }), params, degenerate};
}

inline SkeletonFrame denormalize_frame(const SkeletonFrame& normalized, const NormalizationParams& params) {
  if (!(params.scale > 0.0) || !std::isfinite(params.scale))
    throw InvalidParamsError("denormalize_frame: scale must be positive");
  detail::require_dense(normalized, "denormalize_frame");
  return detail::map_points(normalized, [&](Point2 q) { return q * (1.0 / params.scale) + params.origin; });
}

// Layout: body 0..32, left hand 0..20, right hand 0..20; x then y per landmark.
inline FrameVector flatten_frame(const SkeletonFrame& frame) {
  detail::require_dense(frame, "flatten_frame");
  FrameVector v{};
  std::size_t k = 0;
  auto put = [&](const auto& group) {
    for (const auto& p : group) {
      v[k++] = p.x;
      v[k++] = p.y;
    }
  };
  put(*frame.body);
  put(*frame.left_hand);
  put(*frame.right_hand);
  return v;
}

inline SkeletonFrame unflatten_frame(std::span<const double> v) {
  if (v.size() != kFrameValues) throw ShapeError("unflatten_frame: expected 150 values");
  SkeletonFrame f = SkeletonFrame::zeros();
  std::size_t k = 0;
  auto take = [&](auto& group) {
    for (auto& p : group) {
      p.x = v[k++];
      p.y = v[k++];
    }
  };
  take(*f.body);
  take(*f.left_hand);
  take(*f.right_hand);
  return f;
}

inline std::vector<PreprocessedFrame> preprocess_sequence(std::span<const SkeletonFrame> raw) {
  if (raw.empty()) throw EmptyInputError("preprocess_sequence: empty sequence");
  std::vector<PreprocessedFrame> out;
  out.reserve(raw.size());
  std::optional<SkeletonFrame> previous;
  std::optional<NormalizationParams> previous_params;
  for (const auto& frame : raw) {
    SkeletonFrame dense = impute_hands(impute_body(frame, previous ? &*previous : nullptr));
    NormalizedFrame n = normalize_frame(dense, previous_params);
    out.push_back({flatten_frame(n.frame), n.params, n.degenerate});
    previous = std::move(dense);
    previous_params = n.params;
  }
  return out;
}

}  // namespace skelcap
