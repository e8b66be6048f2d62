/* Copyright 2026 The mcda Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>

#include "mcda/network.hpp"
#include "mcda/serialization.hpp"

namespace mcda {
namespace {

constexpr char kMagic[8] = {'M', 'C', 'D', 'A', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <class T>
void put(std::vector<std::uint8_t>& out, const T& v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

class Cursor {
 public:
  explicit Cursor(const std::vector<std::uint8_t>& b) : b_(b) {}
  template <class T>
  T get(const char* what) {
    T v;
    need(sizeof(T), what);
    std::memcpy(&v, b_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  const std::uint8_t* take(std::size_t n, const char* what) {
    need(n, what);
    const std::uint8_t* p = b_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n, const char* what) const {
    if (n > b_.size() - pos_) throw LoadError(std::string("checkpoint truncated in ") + what);
  }
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const std::uint8_t* p, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, p, chunk);
    p += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::vector<std::uint8_t> serialize_params(const ModelParams& params, const std::string& note) {
  SegNet net(params.arch);
  check_params(net, params);
  Json header{{"arch", params.arch}, {"note", note}};
  const std::string h = header.dump();
  std::vector<std::uint8_t> out(kMagic, kMagic + sizeof(kMagic));
  put(out, kCheckpointVersion);
  put(out, static_cast<std::uint64_t>(h.size()));
  out.insert(out.end(), h.begin(), h.end());
  put(out, static_cast<std::uint64_t>(params.values.size()));
  const auto* raw = reinterpret_cast<const std::uint8_t*>(params.values.data());
  out.insert(out.end(), raw, raw + params.values.size() * sizeof(float));
  put(out, crc_of(out.data(), out.size()));
  return out;
}

ModelParams deserialize_params(const std::vector<std::uint8_t>& bytes) {
  Cursor cur(bytes);
  if (std::memcmp(cur.take(sizeof(kMagic), "magic"), kMagic, sizeof(kMagic)) != 0) {
    throw LoadError("not a checkpoint file (bad magic)");
  }
  const auto version = cur.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw LoadError("checkpoint format version " + std::to_string(version) +
                    " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const auto hlen = cur.get<std::uint64_t>("header length");
  const auto* hp = cur.take(hlen, "header");
  const auto count = cur.get<std::uint64_t>("parameter count");
  if (count > (bytes.size() - cur.pos()) / sizeof(float)) {
    throw LoadError("checkpoint truncated in parameters");
  }
  const auto* raw = cur.take(count * sizeof(float), "parameters");
  const std::size_t body = cur.pos();
  const auto stored = cur.get<std::uint32_t>("checksum");
  if (cur.pos() != bytes.size()) throw LoadError("trailing bytes after checkpoint checksum");
  if (crc_of(bytes.data(), body) != stored) throw LoadError("checkpoint checksum mismatch");

  ModelParams params;
  try {
    const Json header = Json::parse(hp, hp + hlen);
    read_json(header.at("arch"), "arch", params.arch);
  } catch (const Json::exception& e) {
    throw LoadError(std::string("malformed checkpoint header: ") + e.what());
  } catch (const ConfigError& e) {
    throw LoadError(std::string("malformed checkpoint header: ") + e.what());
  }
  params.values.resize(count);
  std::memcpy(params.values.data(), raw, count * sizeof(float));
  try {
    check_params(SegNet(params.arch), params);
  } catch (const Error& e) {
    throw LoadError(std::string("inconsistent checkpoint: ") + e.what());
  }
  return params;
}

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path,
                     const std::string& note) {
  const auto bytes = serialize_params(params, note);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write checkpoint " + tmp.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw LoadError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  try {
    return deserialize_params(bytes);
  } catch (const LoadError& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

}  // namespace mcda
