#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "medsum/model.hpp"

namespace medsum {

struct ManifestEntry {
  std::string name;
  std::vector<int> shape;
  std::uint64_t offset = 0;  // byte offset into the payload
};

// Self-contained snapshot of a trained model: configuration, vocabulary and
// all parameters quantized to 32-bit floats. The file layout is the 8-byte
// magic "MSUMCKPT", a 4-byte little-endian header length, the UTF-8 JSON
// header (version, config, vocabulary, manifest) and the payload floats in
// manifest order, little-endian.
struct Checkpoint {
  static constexpr int kVersion = 1;

  int version = kVersion;
  ModelConfig config;
  Vocabulary vocab;
  std::vector<ManifestEntry> manifest;
  std::vector<float> payload;
};

Checkpoint make_checkpoint(const ModelParams& params, const ModelConfig& config,
                           const Vocabulary& vocab);

// Reconstructs double-precision parameters from the float payload.
ModelParams params_from_checkpoint(const Checkpoint& ckpt);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace medsum
