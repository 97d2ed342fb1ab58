#pragma once

// Binary checkpoint: magic, format version, model config, tensor manifest,
// then little-endian float64 parameters in manifest order, then the optional
// Adam state (step count and both moment vectors).

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "skelcap/errors.hpp"
#include "skelcap/nn/adam.hpp"
#include "skelcap/nn/model.hpp"

namespace skelcap::nn {

inline constexpr char kCheckpointMagic[8] = {'S', 'K', 'C', 'A', 'P', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Seq2SeqModel model;
  std::optional<AdamState> optimizer;
};

namespace ckpt_detail {

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  template <class T>
  void put(T v) {
    v = to_little(v);
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void put_doubles(const ParamVector& xs) {
    for (double x : xs) put(x);
  }
  void put_bytes(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}
  template <class T>
  T get() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (in_.gcount() != static_cast<std::streamsize>(sizeof(T))) throw CorruptFileError("checkpoint is truncated");
    return to_little(v);
  }
  void get_doubles(ParamVector& xs) {
    for (double& x : xs) x = get<double>();
  }
  std::string get_string(std::size_t n) {
    if (n > 4096) throw CorruptFileError("checkpoint tensor name too long");
    std::string s(n, '\0');
    in_.read(s.data(), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n)) throw CorruptFileError("checkpoint is truncated");
    return s;
  }
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::istream& in_;
};

}  // namespace ckpt_detail

inline void save_checkpoint(const Seq2SeqModel& model, const AdamState* optimizer, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  ckpt_detail::Writer w(out);
  const auto& c = model.config;
  w.put_bytes(kCheckpointMagic, sizeof kCheckpointMagic);
  w.put(kCheckpointVersion);
  for (std::uint64_t v : {c.d_model, c.n_heads, c.n_encoder_layers, c.n_decoder_layers, c.d_ff, c.max_src_len,
                          c.max_tgt_len, c.vocab_size, c.input_dim})
    w.put(v);
  w.put(c.dropout_p);
  const auto& tensors = model.arch.layout.tensors();
  w.put(static_cast<std::uint64_t>(tensors.size()));
  for (const auto& t : tensors) {
    w.put(static_cast<std::uint32_t>(t.name.size()));
    w.put_bytes(t.name.data(), t.name.size());
    w.put(static_cast<std::uint64_t>(t.rows));
    w.put(static_cast<std::uint64_t>(t.cols));
  }
  w.put(static_cast<std::uint64_t>(model.params.size()));
  w.put_doubles(model.params);
  w.put(static_cast<std::uint8_t>(optimizer ? 1 : 0));
  if (optimizer) {
    w.put(optimizer->step);
    w.put_doubles(optimizer->m);
    w.put_doubles(optimizer->v);
  }
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  ckpt_detail::Reader r(in);
  char magic[sizeof kCheckpointMagic];
  in.read(magic, sizeof magic);
  if (in.gcount() != sizeof magic || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0)
    throw CorruptFileError("not a checkpoint file: " + path.string());
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw VersionMismatchError("checkpoint format version " + std::to_string(version) + ", expected " +
                               std::to_string(kCheckpointVersion));
  ModelConfig c;
  for (std::size_t* f : {&c.d_model, &c.n_heads, &c.n_encoder_layers, &c.n_decoder_layers, &c.d_ff, &c.max_src_len,
                         &c.max_tgt_len, &c.vocab_size, &c.input_dim})
    *f = static_cast<std::size_t>(r.get<std::uint64_t>());
  c.dropout_p = r.get<double>();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw CorruptFileError(std::string("checkpoint config invalid: ") + e.what());
  }
  Seq2SeqModel model(c);
  const auto& expected = model.arch.layout.tensors();
  if (r.get<std::uint64_t>() != expected.size()) throw CorruptFileError("checkpoint manifest size mismatch");
  for (const auto& t : expected) {
    const auto name = r.get_string(r.get<std::uint32_t>());
    const auto rows = r.get<std::uint64_t>();
    const auto cols = r.get<std::uint64_t>();
    if (name != t.name || rows != t.rows || cols != t.cols)
      throw CorruptFileError("checkpoint manifest entry '" + name + "' does not match the configuration");
  }
  if (r.get<std::uint64_t>() != model.params.size()) throw CorruptFileError("checkpoint parameter count mismatch");
  r.get_doubles(model.params);
  Checkpoint ck{std::move(model), std::nullopt};
  const auto has_opt = r.get<std::uint8_t>();
  if (has_opt > 1) throw CorruptFileError("checkpoint optimizer flag invalid");
  if (has_opt) {
    AdamState st(ck.model.params.size());
    st.step = r.get<std::uint64_t>();
    r.get_doubles(st.m);
    r.get_doubles(st.v);
    ck.optimizer = std::move(st);
  }
  if (!r.at_end()) throw CorruptFileError("checkpoint has trailing bytes");
  return ck;
}

}  // namespace skelcap::nn
