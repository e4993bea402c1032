#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bnls/dynamics.hpp"
#include "bnls/model.hpp"
#include "bnls/radial_grid.hpp"

namespace bnls {

struct CheckpointError : std::runtime_error {
  enum class Kind { Io, BadMagic, VersionMismatch, CorruptLength };
  Kind kind;
  CheckpointError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

struct Checkpoint {
  static constexpr char kMagic[8] = {'B', 'N', 'L', 'S', 'C', 'K', 'P', 'T'};
  static constexpr std::int64_t kVersion = 1;

  int N = 0;
  std::size_t M = 0;
  double R_max = 0, mu = 0, alpha = 0, t = 0;
  std::vector<cplx> values;

  RadialField field() const {
    RadialField u(make_grid(N, M, R_max));
    u.values = values;
    return u;
  }
  Params params() const { return derive_params(N, mu, alpha); }
};

inline Checkpoint make_checkpoint(const Params& p, const RadialField& u, double t) {
  const Grid& g = *u.grid;
  return {g.dim(), g.size(), g.R_max(), p.mu, p.alpha, t, u.values};
}

inline Checkpoint make_checkpoint(const Trajectory& tr) {
  return make_checkpoint(tr.params, tr.final_state, tr.t_final);
}

namespace detail {
static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <class T>
void put(std::vector<char>& buf, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  buf.insert(buf.end(), b, b + sizeof(T));
}

template <class T>
T get(const std::vector<char>& buf, std::size_t& pos) {
  if (pos + sizeof(T) > buf.size()) throw CheckpointError(CheckpointError::Kind::CorruptLength, "checkpoint: truncated header");
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}
}  // namespace detail

inline std::vector<char> serialize(const Checkpoint& c) {
  std::vector<char> buf(std::begin(Checkpoint::kMagic), std::end(Checkpoint::kMagic));
  detail::put<std::int64_t>(buf, Checkpoint::kVersion);
  detail::put<std::int64_t>(buf, c.N);
  detail::put<std::int64_t>(buf, static_cast<std::int64_t>(c.M));
  for (double x : {c.R_max, c.mu, c.alpha, c.t}) detail::put(buf, x);
  for (const auto& z : c.values) {
    detail::put(buf, z.real());
    detail::put(buf, z.imag());
  }
  return buf;
}

inline Checkpoint deserialize(const std::vector<char>& buf) {
  using K = CheckpointError::Kind;
  if (buf.size() < sizeof(Checkpoint::kMagic) || std::memcmp(buf.data(), Checkpoint::kMagic, sizeof(Checkpoint::kMagic)) != 0)
    throw CheckpointError(K::BadMagic, "checkpoint: bad magic");
  std::size_t pos = sizeof(Checkpoint::kMagic);
  const auto version = detail::get<std::int64_t>(buf, pos);
  if (version != Checkpoint::kVersion)
    throw CheckpointError(K::VersionMismatch, "checkpoint: version " + std::to_string(version) + ", expected " +
                                                  std::to_string(Checkpoint::kVersion));
  Checkpoint c;
  c.N = static_cast<int>(detail::get<std::int64_t>(buf, pos));
  const auto M = detail::get<std::int64_t>(buf, pos);
  c.R_max = detail::get<double>(buf, pos);
  c.mu = detail::get<double>(buf, pos);
  c.alpha = detail::get<double>(buf, pos);
  c.t = detail::get<double>(buf, pos);
  if (M <= 0 || buf.size() - pos != static_cast<std::size_t>(M) * 2 * sizeof(double))
    throw CheckpointError(K::CorruptLength, "checkpoint: payload length does not match M");
  c.M = static_cast<std::size_t>(M);
  c.values.resize(c.M);
  for (auto& z : c.values) {
    const double re = detail::get<double>(buf, pos);
    z = cplx(re, detail::get<double>(buf, pos));
  }
  return c;
}

inline void checkpoint_save(const Checkpoint& c, const std::filesystem::path& path) {
  const auto buf = serialize(c);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(CheckpointError::Kind::Io, "checkpoint: cannot open " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw CheckpointError(CheckpointError::Kind::Io, "checkpoint: write failed for " + path.string());
}

inline void checkpoint_save(const Trajectory& tr, const std::filesystem::path& path) {
  checkpoint_save(make_checkpoint(tr), path);
}

inline Checkpoint checkpoint_load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointError::Kind::Io, "checkpoint: cannot open " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw CheckpointError(CheckpointError::Kind::Io, "checkpoint: read failed for " + path.string());
  return deserialize(buf);
}

}  // namespace bnls
