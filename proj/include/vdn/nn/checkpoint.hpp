#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "vdn/nn/param.hpp"

namespace vdn::nn {

// Binary layout (all integers little-endian):
//   offset  size  field
//   0       4     magic "VDNC"
//   4       4     format version (u32, currently 1)
//   8       8     architecture spec hash (u64)
//   16      4     architecture preset number (u32, 0 = custom)
//   20      4     architecture flag bits (u32)
//   24      8     number of float values that follow (u64)
//   32      4*n   parameter values, IEEE-754 binary32 little-endian, in
//                 declared parameter order, each tensor row-major
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointHeader {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t spec_hash = 0;
  std::uint32_t preset = 0;
  std::uint32_t flags = 0;
  std::uint64_t value_count = 0;
};

struct Checkpoint {
  CheckpointHeader header;
  std::vector<float> values;
};

void save_checkpoint(const std::filesystem::path& path, CheckpointHeader header,
                     const std::vector<const Param*>& params);

Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies checkpoint values into params (declared order). Throws ConfigError on
// a size mismatch.
void restore_values(const Checkpoint& checkpoint, const ParamList<float>& params);

}  // namespace vdn::nn
