#pragma once

// Synthetic sign corpus: a closed sign grammar (hand shape, movement,
// location, handedness, repetitions) rendered onto a 2D pose template and
// paired with a canonical English description.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "skelcap/corpus.hpp"
#include "skelcap/errors.hpp"
#include "skelcap/skeleton.hpp"

namespace skelcap {

enum class HandShape {
  C_HAND,
  T_HAND,
  L_HAND,
  U_HAND,
  P_HAND,
  V_HAND,
  FINGERS_OPEN,
  FINGERS_OPEN_STRAIGHT,
  FINGERS_OPEN_STRAIGHT_MIDDLE_TOUCH,
};
inline constexpr std::size_t kHandShapeCount = 9;

enum class MovementType {
  CONTINUOUS_STRAIGHT,
  CONTINUATION_SAME_DIRECTION,
  PARALLEL_SAME_DIRECTION,
  PARALLEL_OPPOSITE_DIRECTION,
  OPEN_TO_CLOSED,
  CLOSED_TO_OPEN,
  CURVED,
  CIRCULAR,
};
inline constexpr std::size_t kMovementCount = 8;

enum class Location { chest, chin, cheek, forehead, neutral };
inline constexpr std::size_t kLocationCount = 5;

enum class Handedness { right, left, both };
inline constexpr std::size_t kHandednessCount = 3;

inline constexpr std::size_t kSignSpaceSize = kHandShapeCount * kMovementCount * kLocationCount * kHandednessCount * 2;

struct SyntheticSignSpec {
  HandShape hand_shape = HandShape::C_HAND;
  MovementType movement = MovementType::CONTINUOUS_STRAIGHT;
  Location location = Location::chest;
  Handedness handedness = Handedness::right;
  int repetitions = 1;

  friend bool operator==(const SyntheticSignSpec&, const SyntheticSignSpec&) = default;

  // Mixed-radix index into the 2160-element sign space.
  static SyntheticSignSpec from_index(std::size_t i) {
    if (i >= kSignSpaceSize) throw InvalidParamsError("sign index out of range");
    SyntheticSignSpec s;
    s.repetitions = static_cast<int>(i % 2) + 1;
    i /= 2;
    s.handedness = static_cast<Handedness>(i % kHandednessCount);
    i /= kHandednessCount;
    s.location = static_cast<Location>(i % kLocationCount);
    i /= kLocationCount;
    s.movement = static_cast<MovementType>(i % kMovementCount);
    i /= kMovementCount;
    s.hand_shape = static_cast<HandShape>(i);
    return s;
  }
};

inline std::string_view hand_shape_name(HandShape h) {
  static constexpr std::array<std::string_view, kHandShapeCount> names{
      "C_HAND", "T_HAND", "L_HAND", "U_HAND", "P_HAND", "V_HAND",
      "FINGERS_OPEN", "FINGERS_OPEN_STRAIGHT", "FINGERS_OPEN_STRAIGHT_MIDDLE_TOUCH"};
  return names[static_cast<std::size_t>(h)];
}

inline std::string_view movement_name(MovementType m) {
  static constexpr std::array<std::string_view, kMovementCount> names{
      "CONTINUOUS_STRAIGHT", "CONTINUATION_SAME_DIRECTION", "PARALLEL_SAME_DIRECTION",
      "PARALLEL_OPPOSITE_DIRECTION", "OPEN_TO_CLOSED", "CLOSED_TO_OPEN", "CURVED", "CIRCULAR"};
  return names[static_cast<std::size_t>(m)];
}

// Canonical caption of a sign; a pure function of the spec.
inline std::string describe(const SyntheticSignSpec& s) {
  const bool both = s.handedness == Handedness::both;
  std::string out;
  switch (s.handedness) {
    case Handedness::right: out = "the right hand is "; break;
    case Handedness::left: out = "the left hand is "; break;
    case Handedness::both: out = "both hands are "; break;
  }
  switch (s.location) {
    case Location::chest: out += "at chest level"; break;
    case Location::chin: out += "near the chin"; break;
    case Location::cheek: out += "beside the cheek"; break;
    case Location::forehead: out += "in front of the forehead"; break;
    case Location::neutral: out += "in neutral space"; break;
  }
  out += " shaped like ";
  switch (s.hand_shape) {
    case HandShape::C_HAND: out += "a c hand"; break;
    case HandShape::T_HAND: out += "a t hand"; break;
    case HandShape::L_HAND: out += "an l hand"; break;
    case HandShape::U_HAND: out += "a u hand"; break;
    case HandShape::P_HAND: out += "a p hand"; break;
    case HandShape::V_HAND: out += "a v hand"; break;
    case HandShape::FINGERS_OPEN: out += "open fingers"; break;
    case HandShape::FINGERS_OPEN_STRAIGHT: out += "open straight fingers"; break;
    case HandShape::FINGERS_OPEN_STRAIGHT_MIDDLE_TOUCH: out += "open straight fingers with the middle finger bent"; break;
  }
  out += both ? " . the hands " : " . the hand ";
  switch (s.movement) {
    case MovementType::CONTINUOUS_STRAIGHT: out += both ? "move straight outward" : "moves straight outward"; break;
    case MovementType::CONTINUATION_SAME_DIRECTION:
      out += both ? "move down in two continuing strokes" : "moves down in two continuing strokes";
      break;
    case MovementType::PARALLEL_SAME_DIRECTION:
      out += both ? "move up together in parallel" : "moves up and back down";
      break;
    case MovementType::PARALLEL_OPPOSITE_DIRECTION:
      out += both ? "move apart in opposite directions" : "moves diagonally out and back";
      break;
    case MovementType::OPEN_TO_CLOSED: out += both ? "close from open to closed" : "closes from open to closed"; break;
    case MovementType::CLOSED_TO_OPEN: out += both ? "open from closed to open" : "opens from closed to open"; break;
    case MovementType::CURVED: out += both ? "move along a curved arc" : "moves along a curved arc"; break;
    case MovementType::CIRCULAR: out += both ? "move in a circle" : "moves in a circle"; break;
  }
  out += s.repetitions == 2 ? " twice ." : " once .";
  return out;
}

struct SynthOptions {
  double shoulder_width_min = 0.8;
  double shoulder_width_max = 1.6;
  double limb_jitter = 0.10;     // relative, per signer
  double speed_min = 0.75;
  double speed_max = 1.25;
  double noise_sigma = 0.005;    // per coordinate per frame, source units
  double translation_range = 1.0;
  double sample_jitter = 0.05;   // per-rendering path amplitude/anchor jitter, relative
  int frame_jitter = 3;          // +/- frames per rendering
  double hand_dropout = 0.0;     // probability a hand goes undetected in a frame
};

namespace synth_detail {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTemplateShoulderWidth = 1.2;
inline constexpr double kUpperArm = 0.75;
inline constexpr double kForearm = 0.65;
inline constexpr double kHandSize = 0.22;
inline constexpr double kPathAmplitude = 0.22;
inline constexpr int kBaseFrames = 40;

// Static pose, shoulder midpoint at the origin, image convention (y down);
// the signer's left side is +x.
inline BodyPoints body_template() {
  BodyPoints b{};
  b[0] = {0.0, -0.75};
  b[1] = {0.05, -0.85}; b[2] = {0.10, -0.86}; b[3] = {0.15, -0.85};
  b[4] = {-0.05, -0.85}; b[5] = {-0.10, -0.86}; b[6] = {-0.15, -0.85};
  b[7] = {0.25, -0.80}; b[8] = {-0.25, -0.80};
  b[9] = {0.06, -0.62}; b[10] = {-0.06, -0.62};
  b[11] = {0.6, 0.0}; b[12] = {-0.6, 0.0};
  b[23] = {0.35, 1.5}; b[24] = {-0.35, 1.5};
  b[25] = {0.37, 2.3}; b[26] = {-0.37, 2.3};
  b[27] = {0.38, 3.1}; b[28] = {-0.38, 3.1};
  b[29] = {0.40, 3.2}; b[30] = {-0.40, 3.2};
  b[31] = {0.33, 3.25}; b[32] = {-0.33, 3.25};
  return b;
}

struct ShapePose {
  std::array<double, 5> curl;  // thumb, index, middle, ring, pinky
  double spread;
  double thumb_angle;
  double rotation;  // whole-hand rotation toward the outside, radians
};

inline ShapePose shape_pose(HandShape h) {
  switch (h) {
    case HandShape::C_HAND: return {{0.3, 0.45, 0.45, 0.45, 0.45}, 0.5, 0.7, 0.0};
    case HandShape::T_HAND: return {{0.2, 0.85, 0.9, 1.0, 1.0}, 0.3, 0.2, 0.0};
    case HandShape::L_HAND: return {{0.0, 0.0, 1.0, 1.0, 1.0}, 1.0, 1.5, 0.0};
    case HandShape::U_HAND: return {{0.8, 0.0, 0.0, 1.0, 1.0}, 0.0, 0.6, 0.0};
    case HandShape::P_HAND: return {{0.3, 0.0, 0.3, 1.0, 1.0}, 0.8, 0.3, 1.2};
    case HandShape::V_HAND: return {{0.8, 0.0, 0.0, 1.0, 1.0}, 2.5, 0.6, 0.0};
    case HandShape::FINGERS_OPEN: return {{0.15, 0.15, 0.15, 0.15, 0.15}, 2.0, 1.1, 0.0};
    case HandShape::FINGERS_OPEN_STRAIGHT: return {{0.0, 0.0, 0.0, 0.0, 0.0}, 1.0, 0.9, 0.0};
    case HandShape::FINGERS_OPEN_STRAIGHT_MIDDLE_TOUCH: return {{0.0, 0.0, 0.7, 0.0, 0.0}, 1.0, 0.9, 0.0};
  }
  return {};
}

inline ShapePose blend(const ShapePose& a, const ShapePose& b, double t) {
  ShapePose r{};
  for (std::size_t i = 0; i < 5; ++i) r.curl[i] = a.curl[i] + (b.curl[i] - a.curl[i]) * t;
  r.spread = a.spread + (b.spread - a.spread) * t;
  r.thumb_angle = a.thumb_angle + (b.thumb_angle - a.thumb_angle) * t;
  r.rotation = a.rotation + (b.rotation - a.rotation) * t;
  return r;
}

inline const ShapePose kFist{{0.9, 1.0, 1.0, 1.0, 1.0}, 0.3, 0.3, 0.0};

inline Point2 rotate(Point2 p, double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}

// 21 hand landmarks relative to the wrist in a canonical frame (+x toward the
// body midline, -y toward the fingertips), in hand-size units.
inline HandPoints hand_offsets(const ShapePose& pose) {
  HandPoints h{};
  struct Finger {
    Point2 base;
    double angle;
    std::array<double, 3> seg;
  };
  const std::array<Finger, 5> fingers{{
      {{0.25, -0.25}, pose.thumb_angle, {0.30, 0.25, 0.20}},
      {{0.30, -0.85}, 0.12 * pose.spread, {0.40, 0.25, 0.20}},
      {{0.08, -0.92}, 0.0, {0.44, 0.27, 0.21}},
      {{-0.12, -0.88}, -0.12 * pose.spread, {0.40, 0.25, 0.20}},
      {{-0.30, -0.78}, -0.25 * pose.spread, {0.30, 0.19, 0.16}},
  }};
  for (std::size_t f = 0; f < 5; ++f) {
    const auto& fg = fingers[f];
    Point2 p = fg.base;
    const std::size_t first = 1 + 4 * f;
    h[first] = p;
    // Direction measured from "up" (-y) toward the midline; curling bends
    // each joint back toward the palm.
    double a = fg.angle;
    for (std::size_t j = 0; j < 3; ++j) {
      a -= pose.curl[f] * (f == 0 ? 0.9 : 1.3);
      p = p + Point2{std::sin(a), -std::cos(a)} * fg.seg[j];
      h[first + 1 + j] = p;
    }
  }
  for (auto& p : h) p = rotate(p, -pose.rotation);
  return h;
}

inline double smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

// Wrist displacement for one repetition phase u in [0,1]; side is -1 for the
// right hand (image left), +1 for the left hand. Returns the closure amount
// in `closure` for the open/close movements.
inline Point2 path_offset(MovementType m, double u, double side, double amp, double& closure) {
  const double sin2 = std::sin(kPi * u) * std::sin(kPi * u);
  closure = 0.0;
  switch (m) {
    case MovementType::CONTINUOUS_STRAIGHT: return {side * 2.0 * amp * sin2, 0.0};
    case MovementType::CONTINUATION_SAME_DIRECTION: {
      const double prog = u + std::sin(4.0 * kPi * u) / (4.0 * kPi);
      return Point2{side * 0.4, 0.9} * (1.6 * amp * prog);
    }
    case MovementType::PARALLEL_SAME_DIRECTION: return {0.0, -2.0 * amp * sin2};
    case MovementType::PARALLEL_OPPOSITE_DIRECTION: return Point2{side * 0.7, -0.7} * (2.0 * amp * sin2);
    case MovementType::OPEN_TO_CLOSED: closure = smoothstep(u); return {0.0, 0.3 * amp * std::sin(kPi * u)};
    case MovementType::CLOSED_TO_OPEN: closure = 1.0 - smoothstep(u); return {0.0, 0.3 * amp * std::sin(kPi * u)};
    case MovementType::CURVED: return {-side * amp * std::cos(kPi * u), -amp * std::sin(kPi * u)};
    case MovementType::CIRCULAR: return {side * amp * std::sin(2.0 * kPi * u), -amp * (1.0 - std::cos(2.0 * kPi * u))};
  }
  return {};
}

inline Point2 anchor(Location loc, double side) {
  switch (loc) {
    case Location::chest: return {side * 0.2, 0.45};
    case Location::chin: return {side * 0.05, -0.5};
    case Location::cheek: return {side * 0.22, -0.65};
    case Location::forehead: return {side * 0.05, -1.05};
    case Location::neutral: return {side * 0.45, 0.7};
  }
  return {};
}

// Two-link arm: elbow placed on the outer/lower side of the shoulder-wrist line.
inline Point2 elbow_position(Point2 shoulder, Point2 wrist, double upper, double fore, double side) {
  const Point2 d = wrist - shoulder;
  const double len = std::hypot(d.x, d.y);
  if (len < 1e-12) return shoulder + Point2{0.0, upper};
  if (len >= upper + fore) return shoulder + d * (upper / len);
  const double a = (upper * upper - fore * fore + len * len) / (2.0 * len);
  const double h = std::sqrt(std::max(0.0, upper * upper - a * a));
  const Point2 u = d * (1.0 / len);
  Point2 n{-u.y, u.x};
  if (n.x * side < 0.0) n = n * -1.0;
  return shoulder + u * a + n * h;
}

inline std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

struct SignerStyle {
  double scale = 1.0;
  double upper_arm = 1.0;
  double forearm = 1.0;
  double hand = 1.0;
  double speed = 1.0;
  Point2 offset{};
};

}  // namespace synth_detail

// Renders one performance of `spec` by a signer with the given style.
inline std::vector<SkeletonFrame> render_sign(const SyntheticSignSpec& spec, const synth_detail::SignerStyle& style,
                                              const SynthOptions& opt, std::mt19937_64& rng) {
  using namespace synth_detail;
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_int_distribution<int> fj(-opt.frame_jitter, opt.frame_jitter);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::bernoulli_distribution drop(std::clamp(opt.hand_dropout, 0.0, 1.0));

  const int jitter_frames = opt.frame_jitter > 0 ? fj(rng) : 0;
  const int n_frames = std::clamp(static_cast<int>(std::lround(kBaseFrames / style.speed)) + jitter_frames, 20, 60);
  const double amp_scale = 1.0 + opt.sample_jitter * unit(rng);
  const Point2 anchor_shift{opt.sample_jitter * unit(rng) * 0.5, opt.sample_jitter * unit(rng) * 0.5};

  const BodyPoints base = body_template();
  const ShapePose pose = shape_pose(spec.hand_shape);
  const double amp = kPathAmplitude * amp_scale * 0.5 * (style.upper_arm + style.forearm);
  const bool right_acts = spec.handedness != Handedness::left;
  const bool left_acts = spec.handedness != Handedness::right;

  std::vector<SkeletonFrame> frames;
  frames.reserve(static_cast<std::size_t>(n_frames));
  for (int t = 0; t < n_frames; ++t) {
    const double tau = static_cast<double>(t) / static_cast<double>(n_frames - 1);
    const double reps = tau * spec.repetitions;
    const double u = reps >= spec.repetitions ? 1.0 : reps - std::floor(reps);

    BodyPoints body = base;
    SkeletonFrame frame;
    auto pose_arm = [&](bool left, bool acting) {
      const double side = left ? 1.0 : -1.0;
      Point2 wrist;
      ShapePose hp = pose;
      if (acting) {
        double closure = 0.0;
        const Point2 off = path_offset(spec.movement, u, side, amp, closure);
        wrist = anchor(spec.location, side) + anchor_shift + off;
        if (closure > 0.0) hp = blend(pose, kFist, closure);
      } else {
        wrist = {side * 0.45, 1.25};
        hp = shape_pose(HandShape::FINGERS_OPEN_STRAIGHT);
      }
      const std::size_t sh = left ? body::kLeftShoulder : body::kRightShoulder;
      const Point2 elbow = elbow_position(body[sh], wrist, kUpperArm * style.upper_arm, kForearm * style.forearm, side);
      HandPoints hand = hand_offsets(hp);
      for (auto& p : hand) p = wrist + Point2{-side * p.x, p.y} * (kHandSize * style.hand);
      body[left ? body::kLeftElbow : body::kRightElbow] = elbow;
      body[left ? body::kLeftWrist : body::kRightWrist] = wrist;
      body[left ? body::kLeftPinky : body::kRightPinky] = hand[17];
      body[left ? body::kLeftIndex : body::kRightIndex] = hand[5];
      body[left ? body::kLeftThumb : body::kRightThumb] = hand[2];
      (left ? frame.left_hand : frame.right_hand) = hand;
    };
    pose_arm(false, right_acts);
    pose_arm(true, left_acts);
    frame.body = body;

    auto place = [&](Point2& p) {
      p = p * style.scale + style.offset;
      if (opt.noise_sigma > 0.0) {
        p.x += opt.noise_sigma * noise(rng);
        p.y += opt.noise_sigma * noise(rng);
      }
    };
    for (auto& p : *frame.body) place(p);
    for (auto& p : *frame.left_hand) place(p);
    for (auto& p : *frame.right_hand) place(p);
    if (opt.hand_dropout > 0.0) {
      if (drop(rng)) frame.left_hand.reset();
      if (drop(rng)) frame.right_hand.reset();
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

// Spec behind each sign id of a generated corpus, in draw order.
inline std::vector<SyntheticSignSpec> synth_sign_specs(std::size_t n_signs, std::uint64_t seed) {
  if (n_signs > kSignSpaceSize) throw InvalidParamsError("synth_sign_specs: n_signs too large");
  std::vector<std::size_t> space(kSignSpaceSize);
  for (std::size_t i = 0; i < space.size(); ++i) space[i] = i;
  auto spec_rng = synth_detail::seeded_rng(seed, 1);
  std::shuffle(space.begin(), space.end(), spec_rng);
  std::vector<SyntheticSignSpec> specs;
  for (std::size_t g = 0; g < n_signs; ++g) specs.push_back(SyntheticSignSpec::from_index(space[g]));
  return specs;
}

// Draws n_signs distinct signs and renders every (sign, signer) pair
// samples_per_pair times. Deterministic for a fixed seed.
inline std::vector<RawSample> synth_generate(std::size_t n_signs, std::size_t n_signers, std::size_t samples_per_pair,
                                             std::uint64_t seed, const SynthOptions& opt = {}) {
  using namespace synth_detail;
  if (n_signs < 1) throw InvalidParamsError("synth_generate: n_signs must be at least 1");
  if (n_signers < 2) throw InvalidParamsError("synth_generate: n_signers must be at least 2");
  if (n_signs > kSignSpaceSize)
    throw InvalidParamsError("synth_generate: n_signs exceeds the " + std::to_string(kSignSpaceSize) +
                             " distinct sign specs");

  const auto specs = synth_sign_specs(n_signs, seed);

  auto style_rng = seeded_rng(seed, 2);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(style_rng); };
  std::vector<SignerStyle> styles(n_signers);
  for (auto& st : styles) {
    st.scale = uniform(opt.shoulder_width_min, opt.shoulder_width_max) / kTemplateShoulderWidth;
    st.upper_arm = 1.0 + uniform(-opt.limb_jitter, opt.limb_jitter);
    st.forearm = 1.0 + uniform(-opt.limb_jitter, opt.limb_jitter);
    st.hand = 1.0 + uniform(-opt.limb_jitter, opt.limb_jitter);
    st.speed = uniform(opt.speed_min, opt.speed_max);
    st.offset = {uniform(-opt.translation_range, opt.translation_range),
                 uniform(-opt.translation_range, opt.translation_range)};
  }

  auto render_rng = seeded_rng(seed, 3);
  std::vector<RawSample> out;
  out.reserve(n_signs * n_signers * samples_per_pair);
  char id[96];
  for (std::size_t g = 0; g < n_signs; ++g) {
    const auto& spec = specs[g];
    const std::string description = describe(spec);
    std::snprintf(id, sizeof id, "sign%04zu", g);
    const std::string sign_id = id;
    for (std::size_t p = 0; p < n_signers; ++p) {
      std::snprintf(id, sizeof id, "signer%03zu", p);
      const std::string signer_id = id;
      for (std::size_t r = 0; r < samples_per_pair; ++r) {
        std::snprintf(id, sizeof id, "%s-%s-r%zu", sign_id.c_str(), signer_id.c_str(), r);
        out.push_back({id, signer_id, sign_id, description, render_sign(spec, styles[p], opt, render_rng)});
      }
    }
  }
  return out;
}

}  // namespace skelcap
