// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "binflow/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "binflow/error.hpp"

namespace binflow {
namespace {

static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");

constexpr char kMagic[4] = {'B', 'N', 'F', 'W'};

class Writer {
 public:
  template <class T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    buf.insert(buf.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    buf.insert(buf.end(), p, p + n);
  }
  std::vector<std::uint8_t> buf;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : buf(b) {}
  template <class T>
  T get() {
    T v;
    get_bytes(&v, sizeof(T));
    return v;
  }
  void get_bytes(void* out, std::size_t n) {
    if (n > buf.size() - pos) throw CheckpointError("checkpoint truncated");
    std::memcpy(out, buf.data() + pos, n);
    pos += n;
  }
  const std::vector<std::uint8_t>& buf;
  std::size_t pos = 0;
};

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t hash) noexcept {
  const auto* p = static_cast<const std::uint8_t*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= p[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::vector<std::uint8_t> serialize_model(const MlpDenoiser& model) {
  const MlpArch& a = model.arch();
  const DataScaling& s = model.scaling();
  Writer w;
  w.put_bytes(kMagic, 4);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(a.dim));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(a.width));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(a.depth));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(a.time_dim));
  w.put<std::uint8_t>(a.precondition ? 1 : 0);
  w.put<std::uint8_t>(0);
  w.put<std::uint8_t>(0);
  w.put<std::uint8_t>(0);
  w.put<double>(s.mu_data);
  w.put<double>(s.sigma2_data);
  w.put<double>(s.final_time);
  w.put<std::uint64_t>(model.seed());
  const std::string& dg = model.config_digest();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(dg.size()));
  w.put_bytes(dg.data(), dg.size());
  w.put<std::uint64_t>(model.params().size());
  w.put_bytes(model.params().data(), model.params().size() * sizeof(float));
  w.put_bytes(model.ema_params().data(), model.ema_params().size() * sizeof(float));
  w.put<std::uint64_t>(fnv1a64(w.buf.data(), w.buf.size()));
  return std::move(w.buf);
}

MlpDenoiser deserialize_model(const std::vector<std::uint8_t>& bytes, std::size_t expected_dim) {
  if (bytes.size() < 8 + sizeof(std::uint64_t)) throw CheckpointError("checkpoint truncated");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw CheckpointError("bad magic bytes");
  const std::size_t body = bytes.size() - sizeof(std::uint64_t);
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body, sizeof(stored));
  if (stored != fnv1a64(bytes.data(), body)) throw CheckpointError("checksum mismatch");

  Reader r(bytes);
  r.pos = 4;
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) +
                          " (expected " + std::to_string(kCheckpointVersion) + ")");
  MlpArch a;
  a.dim = r.get<std::uint32_t>();
  a.width = r.get<std::uint32_t>();
  a.depth = r.get<std::uint32_t>();
  a.time_dim = r.get<std::uint32_t>();
  a.precondition = r.get<std::uint8_t>() != 0;
  r.pos += 3;
  if (expected_dim != 0 && a.dim != expected_dim)
    throw CheckpointError("checkpoint dimension " + std::to_string(a.dim) +
                          " does not match expected dimension " + std::to_string(expected_dim));
  DataScaling s;
  s.mu_data = r.get<double>();
  s.sigma2_data = r.get<double>();
  s.final_time = r.get<double>();
  const auto seed = r.get<std::uint64_t>();
  const auto dg_len = r.get<std::uint32_t>();
  if (dg_len > body - r.pos) throw CheckpointError("checkpoint truncated");
  std::string digest(dg_len, '\0');
  r.get_bytes(digest.data(), dg_len);
  const auto np = r.get<std::uint64_t>();

  try {
    a.validate();
    s.validate();
  } catch (const ParameterError& e) {
    throw CheckpointError(std::string("invalid header: ") + e.what());
  }
  if (np != a.num_params())
    throw CheckpointError("weight count " + std::to_string(np) + " does not match architecture (" +
                          std::to_string(a.num_params()) + ")");
  if (2 * np * sizeof(float) != body - r.pos) throw CheckpointError("weight payload size mismatch");

  MlpDenoiser model(a, s, seed, true);
  model.set_config_digest(digest);
  r.get_bytes(model.params().data(), np * sizeof(float));
  r.get_bytes(model.ema_params().data(), np * sizeof(float));
  return model;
}

void save_model(const MlpDenoiser& model, const std::string& path) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("write to '" + path + "' failed");
}

MlpDenoiser load_model(const std::string& path, std::size_t expected_dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_model(bytes, expected_dim);
}

}  // namespace binflow
