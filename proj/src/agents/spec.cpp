#include "vdn/agents/spec.hpp"

#include <array>

#include "vdn/nn/errors.hpp"

namespace vdn::agents {
namespace {

constexpr std::array<std::uint32_t, kNumPresets> kPresetBits = {
    0b000000,  // 1
    0b000001,  // 2 V
    0b000011,  // 3 V,S
    0b000111,  // 4 V,S,Id
    0b001111,  // 5 V,S,Id,L
    0b010111,  // 6 V,S,Id,H
    0b011111,  // 7 V,S,Id,L,H
    0b100001,  // 8 V,C
    0b100000,  // 9 C
};

}  // namespace

AgentSpec AgentSpec::preset(int number) {
  if (number < 1 || number > kNumPresets) {
    throw ConfigError("unknown architecture preset " + std::to_string(number) +
                      "; valid presets:\n" + preset_listing());
  }
  return from_flag_bits(kPresetBits[static_cast<std::size_t>(number - 1)]);
}

std::uint32_t AgentSpec::flag_bits() const {
  return (value_decomposition ? 1u : 0u) | (shared_weights ? 2u : 0u) | (role_info ? 4u : 0u) |
         (low_comm ? 8u : 0u) | (high_comm ? 16u : 0u) | (centralized ? 32u : 0u);
}

AgentSpec AgentSpec::from_flag_bits(std::uint32_t bits) {
  AgentSpec s;
  s.value_decomposition = bits & 1u;
  s.shared_weights = bits & 2u;
  s.role_info = bits & 4u;
  s.low_comm = bits & 8u;
  s.high_comm = bits & 16u;
  s.centralized = bits & 32u;
  return s;
}

std::optional<int> AgentSpec::preset_number() const {
  for (std::size_t i = 0; i < kPresetBits.size(); ++i) {
    if (kPresetBits[i] == flag_bits()) return static_cast<int>(i) + 1;
  }
  return std::nullopt;
}

std::string AgentSpec::flags_string() const {
  std::string s;
  auto add = [&](bool on, const char* tag) {
    if (!on) return;
    if (!s.empty()) s += ",";
    s += tag;
  };
  add(value_decomposition, "V");
  add(shared_weights, "S");
  add(role_info, "Id");
  add(low_comm, "L");
  add(high_comm, "H");
  add(centralized, "C");
  return s.empty() ? "none" : s;
}

std::string AgentSpec::label() const {
  const auto n = preset_number();
  return (n ? std::to_string(*n) : std::string("custom")) + " (" + flags_string() + ")";
}

std::uint64_t AgentSpec::hash() const {
  const std::string canonical = "vdn-arch;flags=" + std::to_string(flag_bits()) +
                                ";agents=" + std::to_string(kNumAgents) +
                                ";actions=" + std::to_string(kNumActions) +
                                ";obs=" + std::to_string(kObsInput) +
                                ";hidden=" + std::to_string(kHidden);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string preset_listing() {
  std::string out;
  for (int n = 1; n <= kNumPresets; ++n) out += "  " + AgentSpec::preset(n).label() + "\n";
  return out;
}

AgentSpec validate_spec(const AgentSpec& spec, bool allow_override) {
  if (spec.preset_number()) return spec;
  if (!allow_override) {
    throw ConfigError("architecture flags {" + spec.flags_string() +
                      "} are not a preset; valid presets:\n" + preset_listing());
  }
  if (spec.centralized && (spec.shared_weights || spec.role_info || spec.low_comm || spec.high_comm)) {
    throw ConfigError("centralized architectures cannot combine S/Id/L/H flags");
  }
  return spec;
}

}  // namespace vdn::agents
