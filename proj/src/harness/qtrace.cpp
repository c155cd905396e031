#include "vdn/harness/qtrace.hpp"

#include "vdn/agents/policy.hpp"
#include "vdn/harness/csv.hpp"
#include "vdn/nn/checkpoint.hpp"

namespace vdn::harness {

std::vector<TraceRow> q_trace(const agents::PolicyNetwork<float>& net,
                              std::shared_ptr<const grid::GridMap> map, std::uint64_t seed,
                              int episode_limit) {
  if (!net.spec().decomposed()) {
    throw UsageError("q-trace needs a value-decomposition architecture (presets 2-8), got " +
                     net.spec().label());
  }
  auto reset = grid::reset(std::move(map), seed, grid::Mode::Test, episode_limit);
  auto& env = reset.state;
  auto obs = std::move(reset.observations);
  auto hidden = net.initial_hidden();
  std::vector<TraceRow> rows;
  std::vector<std::vector<float>> inputs(obs.size());
  while (!env.done()) {
    for (std::size_t i = 0; i < obs.size(); ++i) agents::encode_observation_into(obs[i], inputs[i]);
    const auto q = net.forward(inputs, hidden);
    const auto actions = agents::greedy_actions(q);
    TraceRow row;
    row.step = env.step;
    row.q1 = q.agent(0)[static_cast<std::size_t>(actions[0])];
    row.q2 = q.agent(1)[static_cast<std::size_t>(actions[1])];
    row.q_total = agents::joint_q(q, actions);

    std::vector<grid::Action> env_actions;
    for (const int a : actions) env_actions.push_back(static_cast<grid::Action>(a));
    auto result = grid::step(env, env_actions);
    if (result.events.empty()) {
      rows.push_back(row);
    } else {
      for (const auto& e : result.events) {
        row.reward = e.amount;
        row.event_agent = e.agent + 1;
        row.event_kind = std::string(grid::event_kind_name(e.kind));
        rows.push_back(row);
      }
    }
    obs = std::move(result.observations);
  }
  return rows;
}

std::string format_trace(const std::vector<TraceRow>& rows) {
  std::string out = "step,q1,q2,q_total,reward,event_agent,event_kind\n";
  for (const auto& r : rows) {
    out += std::to_string(r.step) + "," + format_number(r.q1) + "," + format_number(r.q2) + "," +
           format_number(r.q_total) + "," + format_number(r.reward) + "," +
           (r.event_agent ? std::to_string(r.event_agent) : std::string()) + "," + r.event_kind + "\n";
  }
  return out;
}

void write_trace(const std::filesystem::path& path, const std::vector<TraceRow>& rows) {
  write_file_atomic(path, format_trace(rows));
}

agents::PolicyNetwork<float> load_network(const std::filesystem::path& checkpoint) {
  const auto ckpt = nn::load_checkpoint(checkpoint);
  const auto spec = agents::AgentSpec::from_flag_bits(ckpt.header.flags);
  if (spec.hash() != ckpt.header.spec_hash) {
    throw ConfigError(checkpoint.string() + ": architecture flags do not match the stored spec hash");
  }
  agents::validate_spec(spec, true);
  agents::PolicyNetwork<float> net(spec, 0);
  nn::restore_values(ckpt, net.parameters());
  return net;
}

void save_network(const std::filesystem::path& checkpoint, const agents::PolicyNetwork<float>& net) {
  nn::CheckpointHeader header;
  header.spec_hash = net.spec().hash();
  header.preset = static_cast<std::uint32_t>(net.spec().preset_number().value_or(0));
  header.flags = net.spec().flag_bits();
  if (checkpoint.has_parent_path()) std::filesystem::create_directories(checkpoint.parent_path());
  nn::save_checkpoint(checkpoint, header, net.parameters());
}

}  // namespace vdn::harness
