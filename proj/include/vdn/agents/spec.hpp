#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace vdn::agents {

inline constexpr int kNumAgents = 2;
inline constexpr int kNumActions = 8;
inline constexpr int kJointActions = kNumActions * kNumActions;
inline constexpr int kHidden = 32;
inline constexpr int kObsInput = 75;
inline constexpr int kNumPresets = 9;

// Architecture switches. The nine accepted combinations are the presets:
//   1 none           4 V,S,Id        7 V,S,Id,L,H
//   2 V              5 V,S,Id,L      8 V,C
//   3 V,S            6 V,S,Id,H      9 C
struct AgentSpec {
  bool value_decomposition = false;  // V
  bool shared_weights = false;       // S
  bool role_info = false;            // Id
  bool low_comm = false;             // L
  bool high_comm = false;            // H
  bool centralized = false;          // C

  static AgentSpec preset(int number);

  std::optional<int> preset_number() const;
  std::uint32_t flag_bits() const;
  static AgentSpec from_flag_bits(std::uint32_t bits);
  std::string flags_string() const;
  std::string label() const;  // "3 (V,S)"

  // Joint-action learner with a |A|^d output head.
  bool combinatorial() const { return centralized && !value_decomposition; }
  // Joint Q is the sum of per-agent components.
  bool decomposed() const { return value_decomposition; }
  // Independent learners: per-agent TD targets, no summation.
  bool independent() const { return !value_decomposition && !centralized; }

  std::uint64_t hash() const;

  bool operator==(const AgentSpec&) const = default;
};

// Returns the spec if it is one of the presets (or if allow_override is set
// and the flags are internally consistent); otherwise throws ConfigError
// listing the valid presets.
AgentSpec validate_spec(const AgentSpec& spec, bool allow_override = false);

std::string preset_listing();

}  // namespace vdn::agents
