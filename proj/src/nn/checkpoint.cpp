#include "vdn/nn/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace vdn::nn {
namespace {

constexpr std::array<char, 4> kMagic = {'V', 'D', 'N', 'C'};

template <typename U>
void put_le(std::vector<char>& out, U v) {
  for (std::size_t b = 0; b < sizeof(U); ++b) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * b)) & 0xffu));
  }
}

template <typename U>
U get_le(const std::vector<char>& in, std::size_t& pos) {
  if (pos + sizeof(U) > in.size()) throw ConfigError("checkpoint truncated");
  std::uint64_t v = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + b])) << (8 * b);
  }
  pos += sizeof(U);
  return static_cast<U>(v);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, CheckpointHeader header,
                     const std::vector<const Param*>& params) {
  std::vector<char> bytes(kMagic.begin(), kMagic.end());
  header.value_count = 0;
  for (const auto* p : params) header.value_count += p->size();
  put_le(bytes, header.version);
  put_le(bytes, header.spec_hash);
  put_le(bytes, header.preset);
  put_le(bytes, header.flags);
  put_le(bytes, header.value_count);
  for (const auto* p : params) {
    for (const float v : p->value.data()) put_le(bytes, std::bit_cast<std::uint32_t>(v));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 32 || std::memcmp(bytes.data(), kMagic.data(), 4) != 0) {
    throw ConfigError("not a checkpoint file (bad magic): " + path.string());
  }
  std::size_t pos = 4;
  Checkpoint cp;
  cp.header.version = get_le<std::uint32_t>(bytes, pos);
  if (cp.header.version != kCheckpointVersion) {
    throw ConfigError("unsupported checkpoint version " + std::to_string(cp.header.version) +
                      " in " + path.string());
  }
  cp.header.spec_hash = get_le<std::uint64_t>(bytes, pos);
  cp.header.preset = get_le<std::uint32_t>(bytes, pos);
  cp.header.flags = get_le<std::uint32_t>(bytes, pos);
  cp.header.value_count = get_le<std::uint64_t>(bytes, pos);
  if (bytes.size() != pos + 4 * cp.header.value_count) {
    throw ConfigError("checkpoint size does not match its header: " + path.string());
  }
  cp.values.resize(cp.header.value_count);
  for (auto& v : cp.values) v = std::bit_cast<float>(get_le<std::uint32_t>(bytes, pos));
  return cp;
}

void restore_values(const Checkpoint& checkpoint, const ParamList<float>& params) {
  if (checkpoint.values.size() != total_size(params)) {
    throw ConfigError("checkpoint holds " + std::to_string(checkpoint.values.size()) +
                      " values, network expects " + std::to_string(total_size(params)));
  }
  std::size_t pos = 0;
  for (auto* p : params) {
    for (auto& v : p->value.data()) v = checkpoint.values[pos++];
  }
}

}  // namespace vdn::nn
