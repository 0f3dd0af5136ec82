/* Copyright 2026 The hgnet Authors. All Rights Reserved.

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

#include "hgnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "hgnet/error.hpp"

namespace hg {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are written in host byte order");

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'H', 'G', 'F', 'G'};
constexpr std::size_t kPrefix = 4 + 4 + 4;  // magic, version, crc

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T get(const std::vector<std::uint8_t>& in, std::size_t pos) {
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  return value;
}

std::uint32_t crc_of(const std::uint8_t* data, std::size_t size) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks.
  while (size > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    size -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

json shape_json(const Shape& s) { return json::array({s.n, s.c, s.h, s.w}); }

struct Entry {
  std::string name;
  Tensor tensor;
};

std::vector<Entry> collect(const Network& network, const RmspropState* optimizer) {
  std::vector<Entry> out;
  for (auto& p : network.parameters()) out.push_back({p.name, p.tensor});
  for (auto& b : network.buffers()) out.push_back({b.name, b.tensor});
  if (optimizer != nullptr) {
    for (auto& v : optimizer->square_avg) out.push_back({"rmsprop/" + v.name, v.tensor});
  }
  return out;
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Network& network,
                                               const RmspropState* optimizer,
                                               const json& meta) {
  const std::vector<Entry> entries = collect(network, optimizer);
  json dir = json::array();
  std::uint64_t offset = 0;
  for (const Entry& e : entries) {
    const std::uint64_t bytes =
        e.tensor.numel() * (e.tensor.dtype() == DType::kF32 ? 4 : 8);
    dir.push_back({{"name", e.name},
                   {"shape", shape_json(e.tensor.shape())},
                   {"dtype", dtype_name(e.tensor.dtype())},
                   {"offset", offset}});
    offset += bytes;
  }
  json header{{"architecture", to_json(network.config())},
              {"dtype", dtype_name(network.dtype())},
              {"seed", network.seed()},
              {"optimizer", optimizer != nullptr
                                ? json{{"kind", "rmsprop"}, {"step", optimizer->step}}
                                : json(nullptr)},
              {"meta", meta.is_null() ? json::object() : meta},
              {"tensors", dir}};
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, 0);  // crc, patched below
  put<std::uint64_t>(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  out.reserve(out.size() + offset);
  for (const Entry& e : entries) {
    visit_dtype(e.tensor.dtype(), [&](auto tag) {
      using T = decltype(tag);
      const auto v = e.tensor.values<T>();
      const auto* p = reinterpret_cast<const std::uint8_t*>(v.data());
      out.insert(out.end(), p, p + v.size_bytes());
    });
  }
  const std::uint32_t crc = crc_of(out.data() + kPrefix, out.size() - kPrefix);
  std::memcpy(out.data() + 8, &crc, sizeof crc);
  return out;
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kPrefix + 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw DataError("checkpoint: not an HGFG file or truncated header");
  }
  const auto version = get<std::uint32_t>(bytes, 4);
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint: format version " + std::to_string(version) +
                    ", expected " + std::to_string(kCheckpointVersion));
  }
  const auto stored_crc = get<std::uint32_t>(bytes, 8);
  if (crc_of(bytes.data() + kPrefix, bytes.size() - kPrefix) != stored_crc) {
    throw DataError("checkpoint: checksum mismatch (file truncated or corrupt)");
  }
  const auto header_len = get<std::uint64_t>(bytes, kPrefix);
  const std::size_t header_pos = kPrefix + 8;
  if (header_len > bytes.size() - header_pos) throw DataError("checkpoint: bad header length");
  json header;
  try {
    header = json::parse(bytes.begin() + header_pos,
                         bytes.begin() + header_pos + static_cast<std::ptrdiff_t>(header_len));
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: unreadable header: ") + e.what());
  }
  const std::size_t payload = header_pos + header_len;

  Checkpoint ck;
  try {
    const std::string dtype = header.at("dtype").get<std::string>();
    const DType dt = dtype == "f64" ? DType::kF64 : DType::kF32;
    ck.network = std::make_unique<Network>(network_config_from_json(header.at("architecture")),
                                           header.at("seed").get<std::uint64_t>(), dt);
    ck.meta = header.at("meta");

    std::vector<Entry> targets = collect(*ck.network, nullptr);
    const json& opt = header.at("optimizer");
    if (!opt.is_null()) {
      RmspropState st;
      st.step = opt.at("step").get<std::int64_t>();
      for (const auto& p : ck.network->parameters()) {
        st.square_avg.push_back({p.name, Tensor::zeros(p.tensor.shape(), p.tensor.dtype())});
        targets.push_back({"rmsprop/" + p.name, st.square_avg.back().tensor});
      }
      ck.optimizer = std::move(st);
    }
    const json& dir = header.at("tensors");
    if (dir.size() != targets.size()) {
      throw DataError("checkpoint: directory lists " + std::to_string(dir.size()) +
                      " tensors, network expects " + std::to_string(targets.size()));
    }
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const json& d = dir[i];
      Entry& t = targets[i];
      const auto shape = d.at("shape").get<std::array<int, 4>>();
      if (d.at("name").get<std::string>() != t.name ||
          Shape{shape[0], shape[1], shape[2], shape[3]} != t.tensor.shape() ||
          d.at("dtype").get<std::string>() != dtype_name(t.tensor.dtype())) {
        throw DataError("checkpoint: tensor " + std::to_string(i) + " ('" +
                        d.at("name").get<std::string>() + "') does not match '" + t.name + "'");
      }
      const auto off = d.at("offset").get<std::uint64_t>();
      visit_dtype(t.tensor.dtype(), [&](auto tag) {
        using T = decltype(tag);
        auto v = t.tensor.values<T>();
        if (off > bytes.size() - payload || v.size_bytes() > bytes.size() - payload - off) {
          throw DataError("checkpoint: payload of '" + t.name + "' out of range");
        }
        std::memcpy(v.data(), bytes.data() + payload + off, v.size_bytes());
      });
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: malformed header: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint: bad architecture: ") + e.what());
  }
  return ck;
}

void save_checkpoint(const std::string& path, const Network& network,
                     const RmspropState* optimizer, const json& meta) {
  const std::vector<std::uint8_t> bytes = serialize_checkpoint(network, optimizer, meta);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint '" + tmp + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing checkpoint '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at '" + path + "': " + ec.message());
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace hg
