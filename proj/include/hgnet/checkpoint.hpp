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

#ifndef HGNET_CHECKPOINT_HPP_
#define HGNET_CHECKPOINT_HPP_

// File layout (little endian):
//   "HGFG" | u32 version | u32 crc32 of everything after this field |
//   u64 header length | JSON header | tensor payloads
// The header embeds the architecture, the parameter dtype and init seed,
// the optimizer step, caller metadata, and a directory of
// {name, shape, dtype, offset} entries. Payloads are raw float32 (float64
// for float64 networks) in directory order.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hgnet/network.hpp"
#include "hgnet/optim.hpp"

namespace hg {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::unique_ptr<Network> network;
  std::optional<RmspropState> optimizer;
  nlohmann::json meta;
};

std::vector<std::uint8_t> serialize_checkpoint(const Network& network,
                                               const RmspropState* optimizer,
                                               const nlohmann::json& meta = {});
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

// Written to a temporary file and renamed, so an existing checkpoint at
// `path` survives a failed save.
void save_checkpoint(const std::string& path, const Network& network,
                     const RmspropState* optimizer, const nlohmann::json& meta = {});
Checkpoint load_checkpoint(const std::string& path);

}  // namespace hg

#endif  // HGNET_CHECKPOINT_HPP_
