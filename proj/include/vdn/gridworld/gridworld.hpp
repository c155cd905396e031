#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vdn/nn/errors.hpp"

namespace vdn::grid {

enum class Task { Switch, Fetch, Checkers };

std::string_view task_name(Task task);

enum class Cell : std::uint8_t { Floor, Wall };

struct Coord {
  int x = 0;
  int y = 0;
  auto operator<=>(const Coord&) const = default;
};

enum class Orientation : std::uint8_t { North, East, South, West };

inline constexpr int kNumActions = 8;

enum class Action : std::uint8_t {
  Forward,
  Backward,
  StepLeft,
  StepRight,
  RotateLeft,
  RotateRight,
  UseBeam,
  Stand,
};

std::string_view action_name(Action action);

// Parse failure with the 1-based line/column of the offending glyph.
// Line 1 is the `task:` header.
class MapParseError : public ConfigError {
 public:
  MapParseError(const std::string& message, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

struct GridMap {
  std::string name;
  Task task = Task::Switch;
  int width = 0;
  int height = 0;
  std::vector<Cell> cells;
  std::vector<std::vector<Coord>> spawns;  // per agent
  std::vector<Coord> goals;                // per agent (Switch)
  std::optional<Coord> pickup;             // Fetch
  std::optional<Coord> dropoff;            // Fetch
  std::vector<Coord> apples;               // Checkers
  std::vector<Coord> lemons;               // Checkers

  int num_agents() const { return static_cast<int>(spawns.size()); }
  bool in_bounds(Coord c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
  bool is_wall(Coord c) const { return cells[index(c)] == Cell::Wall; }
  std::size_t index(Coord c) const { return static_cast<std::size_t>(c.y * width + c.x); }
};

// ASCII format: a header line `task: switch|fetch|checkers` followed by one
// row per line. Glyphs: `#` wall, `.` floor, `1`/`2` agent spawn, `a`/`b`
// Switch goal of agent 1/2, `P` pickup and `D` drop-off (Fetch), `A` apple and
// `L` lemon (Checkers).
GridMap load_map(std::string_view text, std::string name = {});
GridMap load_map_file(const std::filesystem::path& path);

// Inverse of load_map.
std::string format_map(const GridMap& map);

// 64-bit FNV-1a of the canonical text form; recorded in run metadata.
std::uint64_t map_hash(const GridMap& map);

struct AgentPose {
  Coord position;
  Orientation orientation = Orientation::North;
  bool carrying = false;      // Fetch
  bool reached_goal = false;  // Switch
};

enum class Mode { Train, Test };

inline constexpr int kTrainEpisodeLimit = 5000;
inline constexpr int kTestEpisodeLimit = 2000;

inline constexpr int kObsChannels = 3;
inline constexpr int kObsRows = 5;
inline constexpr int kObsCols = 5;
inline constexpr int kObsSize = kObsChannels * kObsRows * kObsCols;

// Channel-major RGB window: value(ch, row, col) = data[ch*25 + row*5 + col].
// Row 0 is the farthest row ahead; the agent sits at row 4, column 2.
struct Observation {
  std::array<std::uint8_t, kObsSize> data{};

  std::uint8_t at(int ch, int row, int col) const {
    return data[static_cast<std::size_t>(ch * kObsRows * kObsCols + row * kObsCols + col)];
  }
  std::array<std::uint8_t, 3> pixel(int row, int col) const {
    return {at(0, row, col), at(1, row, col), at(2, row, col)};
  }
  bool operator==(const Observation&) const = default;
};

using Rgb = std::array<std::uint8_t, 3>;

namespace palette {
inline constexpr Rgb kWall{120, 120, 120};
inline constexpr Rgb kFloor{0, 0, 0};
inline constexpr Rgb kOffMap{0, 0, 0};
inline constexpr Rgb kSelf{0, 0, 255};
inline constexpr Rgb kTeammateRed{255, 0, 0};
inline constexpr Rgb kTeammateLightBlue{0, 160, 255};
inline constexpr Rgb kGoal{0, 255, 0};
inline constexpr Rgb kPickup{0, 255, 0};
inline constexpr Rgb kDropoff{255, 255, 0};
inline constexpr Rgb kApple{0, 255, 0};
inline constexpr Rgb kLemon{255, 160, 0};
inline constexpr Rgb kBeam{255, 255, 0};
}  // namespace palette

enum class EventKind : std::uint8_t { Goal, Pickup, Dropoff, Apple, Lemon };

std::string_view event_kind_name(EventKind kind);

struct RewardEvent {
  int agent = 0;
  EventKind kind = EventKind::Goal;
  double amount = 0.0;
  bool operator==(const RewardEvent&) const = default;
};

// Reward amounts per task.
inline constexpr double kSwitchGoalReward = 1.0;
inline constexpr double kFetchPickupReward = 3.0;
inline constexpr double kFetchDropoffReward = 5.0;
inline constexpr std::array<double, 2> kCheckersAppleReward{10.0, 1.0};
inline constexpr std::array<double, 2> kCheckersLemonReward{-10.0, -1.0};

enum class Item : std::uint8_t { None, Apple, Lemon };

struct EnvState {
  std::shared_ptr<const GridMap> map;
  std::vector<AgentPose> poses;
  bool pickup_available = true;
  std::vector<Item> items;           // per cell, Checkers
  std::vector<std::uint8_t> beams;   // per cell, lit during the current step only
  int apples_collected = 0;          // since the last task reset
  int lemons_collected = 0;
  int step = 0;
  int episode_limit = kTrainEpisodeLimit;
  int task_resets = 0;
  std::mt19937_64 rng;

  bool done() const { return step >= episode_limit; }
  int remaining_apples() const;
  int remaining_lemons() const;
  bool operator==(const EnvState& other) const;
};

struct StepResult {
  std::vector<Observation> observations;
  double team_reward = 0.0;
  bool done = false;
  std::vector<RewardEvent> events;
};

struct ResetResult {
  EnvState state;
  std::vector<Observation> observations;
};

// Places agents on randomly chosen spawn cells (random orientation), restores
// items and sets the step limit from the mode unless `episode_limit` > 0.
ResetResult reset(std::shared_ptr<const GridMap> map, std::uint64_t seed, Mode mode,
                  int episode_limit = 0);

// Advances all agents simultaneously. Throws UsageError once the episode is done.
StepResult step(EnvState& state, std::span<const Action> actions);

// Final positions given intended targets: walls and off-grid targets keep
// the agent in place; same-target conflicts go to one mover chosen uniformly
// from the state's rng; swaps and moves into a blocked occupant both stay.
std::vector<Coord> resolve_moves(EnvState& state, std::span<const Coord> targets);

Observation render_observation(const EnvState& state, int agent);

Coord forward_vector(Orientation o);
Coord right_vector(Orientation o);
Orientation rotate_left(Orientation o);
Orientation rotate_right(Orientation o);

}  // namespace vdn::grid
