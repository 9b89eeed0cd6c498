#pragma once

#include <filesystem>
#include <string>

#include "sflow/numkit/autodiff.hpp"

namespace sflow::numkit {

/// A parameter set plus free-form JSON metadata (model hyperparameters).
struct Checkpoint {
  ParameterSet params;
  std::string metadata = "{}";
};

enum class CheckpointFormat { kBinary, kJson };

// Binary layout, all integers little-endian:
//   "SFCKPT\0\1"                 8-byte magic (last byte = format version)
//   u32 metadata length, bytes   UTF-8 JSON
//   u32 parameter count
//   per parameter (sorted by name):
//     u32 name length, bytes
//     u32 rank, u64 dims[rank]
//     f64 values[product(dims)]
//
// JSON layout: {"format": "sflow-checkpoint", "version": 1, "metadata": {...},
//               "parameters": {name: {"shape": [...], "values": [...]}}}
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt,
                     CheckpointFormat format = CheckpointFormat::kBinary);

/// Format is detected from the file contents. Throws std::runtime_error on
/// missing files, bad magic, truncation, or an unsupported version.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sflow::numkit
