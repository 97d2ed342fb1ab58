#pragma once

// Caption dataset: JSONL schema, leakage-controlled splits, coordinate
// histograms and the inter-sample metric baseline.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <unordered_map>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "skelcap/errors.hpp"
#include "skelcap/skeleton.hpp"
#include "skelcap/text_metrics.hpp"

namespace skelcap {

template <class Frame>
struct CaptionSample {
  std::string sample_id;
  std::string signer_id;
  std::string sign_id;
  std::string description;
  std::vector<Frame> frames;

  friend bool operator==(const CaptionSample&, const CaptionSample&) = default;
};

using RawSample = CaptionSample<SkeletonFrame>;
using PreprocessedSample = CaptionSample<PreprocessedFrame>;

enum class Variant { raw, preprocessed };

inline PreprocessedSample preprocess_sample(const RawSample& s) {
  return {s.sample_id, s.signer_id, s.sign_id, s.description, preprocess_sequence(s.frames)};
}

// ---------------------------------------------------------------------------
// Serialization

namespace detail {

using ojson = nlohmann::ordered_json;

inline double finite_number(const nlohmann::json& j, const char* what) {
  if (!j.is_number()) throw SchemaError(std::string(what) + " is not a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw SchemaError(std::string(what) + " is not finite");
  return v;
}

inline Point2 point_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw SchemaError("landmark must be [x, y]");
  return {finite_number(j[0], "x"), finite_number(j[1], "y")};
}

template <std::size_t N>
std::optional<std::array<Point2, N>> group_from_json(const nlohmann::json& j, const char* name) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_array() || j.size() != N)
    throw SchemaError(std::string(name) + " must hold " + std::to_string(N) + " landmarks, got " +
                      (j.is_array() ? std::to_string(j.size()) : std::string("non-array")));
  std::array<Point2, N> g{};
  for (std::size_t i = 0; i < N; ++i) g[i] = point_from_json(j[i]);
  return g;
}

template <std::size_t N>
ojson group_to_json(const std::optional<std::array<Point2, N>>& g) {
  if (!g) return nullptr;
  ojson arr = ojson::array();
  for (const auto& p : *g) arr.push_back(ojson::array({p.x, p.y}));
  return arr;
}

inline ojson frame_to_json(const SkeletonFrame& f) {
  ojson j = ojson::object();
  j["body"] = group_to_json(f.body);
  j["left_hand"] = group_to_json(f.left_hand);
  j["right_hand"] = group_to_json(f.right_hand);
  return j;
}

inline ojson frame_to_json(const PreprocessedFrame& f) {
  ojson j = ojson::object();
  j["points"] = f.points;
  j["scale"] = f.params.scale;
  j["origin"] = ojson::array({f.params.origin.x, f.params.origin.y});
  j["degenerate"] = f.degenerate;
  return j;
}

inline void frame_from_json(const nlohmann::json& j, SkeletonFrame& f) {
  if (!j.is_object()) throw SchemaError("frame must be an object");
  f.body = group_from_json<kBodyLandmarks>(j.at("body"), "body");
  f.left_hand = group_from_json<kHandLandmarks>(j.at("left_hand"), "left_hand");
  f.right_hand = group_from_json<kHandLandmarks>(j.at("right_hand"), "right_hand");
}

inline void frame_from_json(const nlohmann::json& j, PreprocessedFrame& f) {
  if (!j.is_object()) throw SchemaError("frame must be an object");
  const auto& pts = j.at("points");
  if (!pts.is_array() || pts.size() != kFrameValues)
    throw SchemaError("points must hold 150 values, got " +
                      (pts.is_array() ? std::to_string(pts.size()) : std::string("non-array")));
  for (std::size_t i = 0; i < kFrameValues; ++i) f.points[i] = finite_number(pts[i], "point");
  f.params.scale = finite_number(j.at("scale"), "scale");
  if (!(f.params.scale > 0.0)) throw SchemaError("scale must be positive");
  f.params.origin = point_from_json(j.at("origin"));
  if (!j.at("degenerate").is_boolean()) throw SchemaError("degenerate must be a boolean");
  f.degenerate = j.at("degenerate").get<bool>();
}

inline std::string string_field(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_string()) throw SchemaError(std::string(key) + " must be a string");
  return v.get<std::string>();
}

}  // namespace detail

template <class Frame>
std::string sample_to_line(const CaptionSample<Frame>& s) {
  detail::ojson j = detail::ojson::object();
  j["sample_id"] = s.sample_id;
  j["signer_id"] = s.signer_id;
  j["sign_id"] = s.sign_id;
  j["description"] = s.description;
  detail::ojson frames = detail::ojson::array();
  for (const auto& f : s.frames) frames.push_back(detail::frame_to_json(f));
  j["frames"] = std::move(frames);
  return j.dump();
}

template <class Frame>
CaptionSample<Frame> sample_from_line(std::string_view line) {
  const auto j = nlohmann::json::parse(line);
  if (!j.is_object()) throw SchemaError("record must be a JSON object");
  CaptionSample<Frame> s;
  s.sample_id = detail::string_field(j, "sample_id");
  s.signer_id = detail::string_field(j, "signer_id");
  s.sign_id = detail::string_field(j, "sign_id");
  s.description = detail::string_field(j, "description");
  if (s.description.empty()) throw SchemaError("description is empty");
  const auto& frames = j.at("frames");
  if (!frames.is_array() || frames.empty()) throw SchemaError("frames must be a nonempty array");
  s.frames.resize(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) detail::frame_from_json(frames[i], s.frames[i]);
  return s;
}

template <class Frame>
void write_samples(const std::vector<CaptionSample<Frame>>& samples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& s : samples) out << sample_to_line(s) << '\n';
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

// Order-preserving; errors carry the 1-based line number.
template <class Frame>
std::vector<CaptionSample<Frame>> read_samples(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<CaptionSample<Frame>> samples;
  std::unordered_set<std::string> ids;
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto s = sample_from_line<Frame>(line);
      if (!ids.insert(s.sample_id).second) throw SchemaError("duplicate sample_id '" + s.sample_id + "'");
      samples.push_back(std::move(s));
    } catch (const SchemaError& e) {
      throw SchemaError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const nlohmann::json::out_of_range& e) {
      throw SchemaError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(lineno, e.what());
    }
  }
  return samples;
}

inline std::vector<RawSample> read_raw_samples(const std::filesystem::path& p) { return read_samples<SkeletonFrame>(p); }
inline std::vector<PreprocessedSample> read_preprocessed_samples(const std::filesystem::path& p) {
  return read_samples<PreprocessedFrame>(p);
}

// ---------------------------------------------------------------------------
// Splits

enum class SplitMode { signer_agnostic, sign_agnostic };

inline std::string to_string(SplitMode m) { return m == SplitMode::signer_agnostic ? "signer_agnostic" : "sign_agnostic"; }

inline SplitMode split_mode_from_string(std::string_view s) {
  if (s == "signer_agnostic" || s == "signer") return SplitMode::signer_agnostic;
  if (s == "sign_agnostic" || s == "sign") return SplitMode::sign_agnostic;
  throw InvalidParamsError("unknown split mode '" + std::string(s) + "'");
}

template <class Frame>
struct SplitResult {
  std::vector<CaptionSample<Frame>> train;
  std::vector<CaptionSample<Frame>> test;
  SplitMode mode = SplitMode::signer_agnostic;
  std::uint64_t seed = 0;
};

// Just the sample ids of a split; the on-disk manifest form.
struct SplitManifest {
  SplitMode mode = SplitMode::signer_agnostic;
  std::uint64_t seed = 0;
  std::vector<std::string> train;
  std::vector<std::string> test;

  template <class Frame>
  static SplitManifest of(const SplitResult<Frame>& r) {
    SplitManifest m{r.mode, r.seed, {}, {}};
    for (const auto& s : r.train) m.train.push_back(s.sample_id);
    for (const auto& s : r.test) m.test.push_back(s.sample_id);
    return m;
  }

  nlohmann::ordered_json to_json() const {
    return {{"mode", to_string(mode)}, {"seed", seed}, {"train", train}, {"test", test}};
  }

  static SplitManifest from_json(const nlohmann::json& j) {
    SplitManifest m;
    try {
      m.mode = split_mode_from_string(j.at("mode").get<std::string>());
      m.seed = j.at("seed").get<std::uint64_t>();
      m.train = j.at("train").get<std::vector<std::string>>();
      m.test = j.at("test").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("split manifest: ") + e.what());
    }
    return m;
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << to_json().dump() << '\n';
  }

  static SplitManifest load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    try {
      return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(1, e.what());
    }
  }

  // Selects the samples named on one side, in manifest order.
  template <class Frame>
  std::vector<CaptionSample<Frame>> select(const std::vector<CaptionSample<Frame>>& samples, bool test_side) const {
    std::unordered_map<std::string, const CaptionSample<Frame>*> by_id;
    for (const auto& s : samples) by_id.emplace(s.sample_id, &s);
    std::vector<CaptionSample<Frame>> out;
    for (const auto& id : test_side ? test : train) {
      auto it = by_id.find(id);
      if (it == by_id.end()) throw SchemaError("split manifest names unknown sample '" + id + "'");
      out.push_back(*it->second);
    }
    return out;
  }
};

namespace detail {

// Groups are shuffled (after sorting for input-order independence) and the
// shortest prefix holding at least fraction * total samples goes to test.
template <class Frame, class Key>
SplitResult<Frame> split_by(const std::vector<CaptionSample<Frame>>& samples, double test_fraction,
                            std::uint64_t seed, SplitMode mode, Key key, const char* what) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw InvalidParamsError("test_fraction must lie in (0, 1)");
  std::map<std::string, std::size_t> counts;
  for (const auto& s : samples) ++counts[key(s)];
  if (counts.size() < 2)
    throw InsufficientDiversityError(std::string("need at least 2 distinct ") + what + " ids, got " +
                                     std::to_string(counts.size()));

  std::vector<std::string> groups;
  for (const auto& [g, _] : counts) groups.push_back(g);
  std::mt19937_64 rng(seed);
  std::shuffle(groups.begin(), groups.end(), rng);

  const double target = test_fraction * static_cast<double>(samples.size());
  std::set<std::string> test_groups;
  std::size_t taken = 0;
  for (std::size_t i = 0; i + 1 < groups.size(); ++i) {
    test_groups.insert(groups[i]);
    taken += counts[groups[i]];
    if (static_cast<double>(taken) >= target) break;
  }

  SplitResult<Frame> r;
  r.mode = mode;
  r.seed = seed;
  for (const auto& s : samples) (test_groups.count(key(s)) ? r.test : r.train).push_back(s);
  return r;
}

}  // namespace detail

template <class Frame>
SplitResult<Frame> split_signer_agnostic(const std::vector<CaptionSample<Frame>>& samples, double test_fraction,
                                         std::uint64_t seed) {
  return detail::split_by(samples, test_fraction, seed, SplitMode::signer_agnostic,
                          [](const auto& s) -> const std::string& { return s.signer_id; }, "signer");
}

template <class Frame>
SplitResult<Frame> split_sign_agnostic(const std::vector<CaptionSample<Frame>>& samples, double test_fraction,
                                       std::uint64_t seed) {
  return detail::split_by(samples, test_fraction, seed, SplitMode::sign_agnostic,
                          [](const auto& s) -> const std::string& { return s.sign_id; }, "sign");
}

template <class Frame>
SplitResult<Frame> split(const std::vector<CaptionSample<Frame>>& samples, SplitMode mode, double test_fraction,
                         std::uint64_t seed) {
  return mode == SplitMode::signer_agnostic ? split_signer_agnostic(samples, test_fraction, seed)
                                            : split_sign_agnostic(samples, test_fraction, seed);
}

// ---------------------------------------------------------------------------
// Statistics

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> counts;

  double bin_width() const { return (hi - lo) / static_cast<double>(counts.size()); }
  double bin_center(std::size_t i) const { return lo + (static_cast<double>(i) + 0.5) * bin_width(); }
  std::size_t bin_of(double v) const {
    if (v <= lo) return 0;
    const auto i = static_cast<std::size_t>((v - lo) / bin_width());
    return std::min(i, counts.size() - 1);
  }
  std::size_t total() const {
    std::size_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }

  void write_csv(std::ostream& out) const {
    const auto old = out.precision(std::numeric_limits<double>::max_digits10);
    out << "bin_center,count\n";
    for (std::size_t i = 0; i < counts.size(); ++i) out << bin_center(i) << ',' << counts[i] << '\n';
    out.precision(old);
  }

  void write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_csv(out);
    if (!out) throw IoError("failed writing " + path.string());
  }
};

struct CoordStats {
  Histogram x;
  Histogram y;
};

inline Histogram make_histogram(const std::vector<double>& values, std::size_t n_bins) {
  Histogram h;
  h.counts.assign(std::max<std::size_t>(n_bins, 1), 0);
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  h.lo = *mn;
  h.hi = *mx;
  if (!(h.hi > h.lo)) {
    h.lo -= 0.5;
    h.hi += 0.5;
  }
  for (double v : values) ++h.counts[h.bin_of(v)];
  return h;
}

// Equal-width histograms over every normalized x and y coordinate.
inline CoordStats coord_stats(const std::vector<PreprocessedSample>& samples, std::size_t n_bins) {
  std::vector<double> xs, ys;
  for (const auto& s : samples)
    for (const auto& f : s.frames)
      for (std::size_t k = 0; k < kLandmarks; ++k) {
        xs.push_back(f.points[2 * k]);
        ys.push_back(f.points[2 * k + 1]);
      }
  if (xs.empty()) throw EmptyInputError("coord_stats: no frames");
  return {make_histogram(xs, n_bins), make_histogram(ys, n_bins)};
}

// ---------------------------------------------------------------------------
// Baseline

inline constexpr std::size_t kDefaultBaselinePairs = 100000;

// Mean metrics over unordered pairs of distinct samples; the sample with the
// lexicographically smaller id acts as candidate. Pairs beyond max_pairs are
// subsampled uniformly without replacement using the seed.
template <class Frame>
MetricReport corpus_baseline(const std::vector<CaptionSample<Frame>>& samples,
                             std::size_t max_pairs = kDefaultBaselinePairs, std::uint64_t seed = 0) {
  const std::size_t n = samples.size();
  if (n < 2) throw EmptyInputError("corpus_baseline: need at least 2 samples");
  if (max_pairs == 0) throw InvalidParamsError("corpus_baseline: max_pairs must be positive");

  std::vector<Tokens> tokens;
  tokens.reserve(n);
  for (const auto& s : samples) tokens.push_back(metric_tokenize(s.description));

  const std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  std::vector<std::uint64_t> picks;
  if (total <= max_pairs) {
    picks.resize(total);
    for (std::uint64_t k = 0; k < total; ++k) picks[k] = k;
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::uint64_t> dist(0, total - 1);
    std::unordered_set<std::uint64_t> seen;
    while (picks.size() < max_pairs)
      if (auto k = dist(rng); seen.insert(k).second) picks.push_back(k);
    std::sort(picks.begin(), picks.end());
  }

  std::vector<Tokens> cands, refs;
  cands.reserve(picks.size());
  refs.reserve(picks.size());
  // Pair index k enumerates (i, j), i < j, row by row.
  std::size_t i = 0;
  std::uint64_t row_start = 0;
  for (std::uint64_t k : picks) {
    while (k >= row_start + (n - 1 - i)) {
      row_start += n - 1 - i;
      ++i;
    }
    const std::size_t j = i + 1 + static_cast<std::size_t>(k - row_start);
    const bool i_first = samples[i].sample_id < samples[j].sample_id;
    cands.push_back(tokens[i_first ? i : j]);
    refs.push_back(tokens[i_first ? j : i]);
  }
  return evaluate_tokens(cands, refs);
}

}  // namespace skelcap
