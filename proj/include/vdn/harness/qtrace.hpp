#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "vdn/agents/network.hpp"
#include "vdn/gridworld/gridworld.hpp"

namespace vdn::harness {

// One row per reward event, or a single row with an empty event for steps
// without one. q1 and q2 are the chosen actions' components and q_total
// their float sum.
struct TraceRow {
  int step = 0;
  float q1 = 0.0f, q2 = 0.0f, q_total = 0.0f;
  double reward = 0.0;  // the event's amount, 0 when there is no event
  int event_agent = 0;  // 1-based, 0 when there is no event
  std::string event_kind;
};

// Greedy test episode recording the value decomposition. Throws UsageError
// for specs without per-agent components (1 and 9).
std::vector<TraceRow> q_trace(const agents::PolicyNetwork<float>& net,
                              std::shared_ptr<const grid::GridMap> map, std::uint64_t seed,
                              int episode_limit = grid::kTestEpisodeLimit);

// step,q1,q2,q_total,reward,event_agent,event_kind
std::string format_trace(const std::vector<TraceRow>& rows);
void write_trace(const std::filesystem::path& path, const std::vector<TraceRow>& rows);

// Rebuilds the network stored in a checkpoint. The spec is recovered from
// the header. Throws ConfigError for unreadable or inconsistent files.
agents::PolicyNetwork<float> load_network(const std::filesystem::path& checkpoint);
void save_network(const std::filesystem::path& checkpoint, const agents::PolicyNetwork<float>& net);

}  // namespace vdn::harness
