#include <fstream>
#include <sstream>

#include "vdn/gridworld/gridworld.hpp"

namespace vdn::grid {

std::string_view task_name(Task task) {
  switch (task) {
    case Task::Switch: return "switch";
    case Task::Fetch: return "fetch";
    case Task::Checkers: return "checkers";
  }
  return "?";
}

MapParseError::MapParseError(const std::string& message, int line, int column)
    : ConfigError("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
                  message),
      line_(line),
      column_(column) {}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool glyph_allowed(char g, Task task) {
  switch (g) {
    case '#': case '.': case '1': case '2': return true;
    case 'a': case 'b': return task == Task::Switch;
    case 'P': case 'D': return task == Task::Fetch;
    case 'A': case 'L': return task == Task::Checkers;
    default: return false;
  }
}

}  // namespace

GridMap load_map(std::string_view text, std::string name) {
  std::vector<std::string> lines;
  {
    std::string buf(text);
    std::istringstream in(buf);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw MapParseError("empty map document", 1, 1);

  GridMap map;
  map.name = std::move(name);
  const std::string header = trim(lines[0]);
  const std::string prefix = "task:";
  if (header.rfind(prefix, 0) != 0) {
    throw MapParseError("expected header 'task: switch|fetch|checkers'", 1, 1);
  }
  const std::string task = trim(std::string_view(header).substr(prefix.size()));
  if (task == "switch") {
    map.task = Task::Switch;
  } else if (task == "fetch") {
    map.task = Task::Fetch;
  } else if (task == "checkers") {
    map.task = Task::Checkers;
  } else {
    throw MapParseError("unknown task '" + task + "'", 1, static_cast<int>(prefix.size()) + 1);
  }

  if (lines.size() < 2) throw MapParseError("map has no rows", 2, 1);
  map.height = static_cast<int>(lines.size()) - 1;
  map.width = static_cast<int>(lines[1].size());
  if (map.width == 0) throw MapParseError("empty map row", 2, 1);
  map.cells.assign(static_cast<std::size_t>(map.width * map.height), Cell::Floor);

  std::vector<std::vector<Coord>> spawns(2);
  std::vector<std::optional<Coord>> goals(2);
  for (int y = 0; y < map.height; ++y) {
    const std::string& row = lines[static_cast<std::size_t>(y) + 1];
    const int line_no = y + 2;
    if (static_cast<int>(row.size()) != map.width) {
      throw MapParseError("row has " + std::to_string(row.size()) + " cells, expected " +
                              std::to_string(map.width) + " (map must be rectangular)",
                          line_no, static_cast<int>(std::min<std::size_t>(row.size(), map.width)) + 1);
    }
    for (int x = 0; x < map.width; ++x) {
      const char g = row[static_cast<std::size_t>(x)];
      const Coord c{x, y};
      if (!glyph_allowed(g, map.task)) {
        throw MapParseError(std::string("unknown glyph '") + g + "' for task " +
                                std::string(task_name(map.task)),
                            line_no, x + 1);
      }
      auto duplicate = [&](const char* what) {
        return MapParseError(std::string("duplicate ") + what, line_no, x + 1);
      };
      switch (g) {
        case '#': map.cells[map.index(c)] = Cell::Wall; break;
        case '1': spawns[0].push_back(c); break;
        case '2': spawns[1].push_back(c); break;
        case 'a':
          if (goals[0]) throw duplicate("goal for agent 1");
          goals[0] = c;
          break;
        case 'b':
          if (goals[1]) throw duplicate("goal for agent 2");
          goals[1] = c;
          break;
        case 'P':
          if (map.pickup) throw duplicate("pickup cell");
          map.pickup = c;
          break;
        case 'D':
          if (map.dropoff) throw duplicate("drop-off cell");
          map.dropoff = c;
          break;
        case 'A': map.apples.push_back(c); break;
        case 'L': map.lemons.push_back(c); break;
        default: break;
      }
    }
  }

  const int end_line = static_cast<int>(lines.size());
  for (int a = 0; a < 2; ++a) {
    if (spawns[static_cast<std::size_t>(a)].empty()) {
      throw MapParseError("missing spawn for agent " + std::to_string(a + 1), end_line, 1);
    }
  }
  map.spawns = std::move(spawns);
  switch (map.task) {
    case Task::Switch:
      for (int a = 0; a < 2; ++a) {
        if (!goals[static_cast<std::size_t>(a)]) {
          throw MapParseError("missing goal for agent " + std::to_string(a + 1), end_line, 1);
        }
        map.goals.push_back(*goals[static_cast<std::size_t>(a)]);
      }
      break;
    case Task::Fetch:
      if (!map.pickup) throw MapParseError("missing pickup cell", end_line, 1);
      if (!map.dropoff) throw MapParseError("missing drop-off cell", end_line, 1);
      break;
    case Task::Checkers:
      if (map.apples.empty()) throw MapParseError("checkers map needs at least one apple", end_line, 1);
      break;
  }
  return map;
}

GridMap load_map_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open map file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return load_map(ss.str(), path.stem().string());
  } catch (const MapParseError& e) {
    throw MapParseError(path.string() + ": " + e.what(), e.line(), e.column());
  }
}

std::string format_map(const GridMap& map) {
  std::vector<std::string> rows(static_cast<std::size_t>(map.height),
                                std::string(static_cast<std::size_t>(map.width), '.'));
  auto put = [&](Coord c, char g) { rows[static_cast<std::size_t>(c.y)][static_cast<std::size_t>(c.x)] = g; };
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      if (map.is_wall({x, y})) put({x, y}, '#');
    }
  }
  for (std::size_t a = 0; a < map.spawns.size(); ++a) {
    for (const auto& c : map.spawns[a]) put(c, static_cast<char>('1' + a));
  }
  for (std::size_t a = 0; a < map.goals.size(); ++a) put(map.goals[a], static_cast<char>('a' + a));
  if (map.pickup) put(*map.pickup, 'P');
  if (map.dropoff) put(*map.dropoff, 'D');
  for (const auto& c : map.apples) put(c, 'A');
  for (const auto& c : map.lemons) put(c, 'L');
  std::string out = "task: " + std::string(task_name(map.task)) + "\n";
  for (const auto& r : rows) out += r + "\n";
  return out;
}

std::uint64_t map_hash(const GridMap& map) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char ch : format_map(map)) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace vdn::grid
