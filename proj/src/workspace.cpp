#include "nmp/workspace.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "nmp/textio.hpp"

namespace nmp {

void ScenarioSpec::validate() const {
  auto bad_range = [](const RangeD& r) { return !(r.lo <= r.hi); };
  if (name.empty()) throw std::invalid_argument("scenario needs a name");
  if (mode == ObstacleMode::kFixed) {
    for (const auto& box : fixed_obstacles) {
      if (box.half_extents.minCoeff() <= 0.0) {
        throw std::invalid_argument("obstacle half extents must be positive");
      }
    }
    if (context_slots < static_cast<int>(fixed_obstacles.size())) {
      throw std::invalid_argument("context_slots below obstacle count");
    }
  } else {
    if (count_min < 0 || count_max < count_min) {
      throw std::invalid_argument("bad obstacle count range");
    }
    if (bad_range(half_w) || bad_range(half_h) || bad_range(pos_x) ||
        bad_range(pos_z) || bad_range(rot) || half_w.lo <= 0.0 ||
        half_h.lo <= 0.0) {
      throw std::invalid_argument("bad obstacle sampling range");
    }
    if (context_slots < count_max) {
      throw std::invalid_argument("context_slots below count_max");
    }
  }
  if (train_count < 0 || test_count < 0 || validation_count < 0) {
    throw std::invalid_argument("negative split count");
  }
}

bool is_challenging(std::span<const Vec2> obstacle_centers, const Vec2& c0_ee,
                    const Vec2& g) {
  const double query_span = (g - c0_ee).norm();
  for (const Vec2& o : obstacle_centers) {
    if ((o - c0_ee).norm() <= query_span && (o - g).norm() <= query_span) {
      return true;
    }
  }
  return false;
}

namespace {

BoxObstacle snap_box(const BoxObstacle& box) {
  BoxObstacle out;
  out.center = {snap_g9(box.center.x()), snap_g9(box.center.y())};
  out.half_extents = {snap_g9(box.half_extents.x()),
                      snap_g9(box.half_extents.y())};
  out.rotation = snap_g9(box.rotation);
  return out;
}

std::vector<BoxObstacle> sample_obstacles(const ScenarioSpec& spec, Rng& rng) {
  const int n = spec.count_min +
                rng.uniform_int(spec.count_max - spec.count_min + 1);
  std::vector<BoxObstacle> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    BoxObstacle box;
    box.center = {rng.uniform(spec.pos_x.lo, spec.pos_x.hi),
                  rng.uniform(spec.pos_z.lo, spec.pos_z.hi)};
    box.half_extents = {rng.uniform(spec.half_w.lo, spec.half_w.hi),
                        rng.uniform(spec.half_h.lo, spec.half_h.hi)};
    box.rotation = rng.uniform(spec.rot.lo, spec.rot.hi);
    out.push_back(snap_box(box));
  }
  return out;
}

std::vector<Vec2> centers_of(const std::vector<BoxObstacle>& obstacles) {
  std::vector<Vec2> centers;
  centers.reserve(obstacles.size());
  for (const auto& box : obstacles) centers.push_back(box.center);
  return centers;
}

}  // namespace

Workspace sample_workspace(const ScenarioSpec& spec, const ArmModel& arm,
                           Rng& rng) {
  spec.validate();
  Workspace ws;
  ws.bounds = Bounds::around(arm);
  if (spec.mode == ObstacleMode::kFixed) {
    ws.obstacles.reserve(spec.fixed_obstacles.size());
    for (const auto& box : spec.fixed_obstacles) {
      ws.obstacles.push_back(snap_box(box));
    }
  }

  for (int attempt = 0; attempt < kSampleRetryBudget; ++attempt) {
    if (spec.mode == ObstacleMode::kRandom) {
      ws.obstacles = sample_obstacles(spec, rng);
    }
    const Configuration c0 =
        snap_g9(rng.uniform_vector(arm.joint_low, arm.joint_high));
    if (!collision_free(arm, ws, c0)) continue;
    const Configuration goal_config =
        snap_g9(rng.uniform_vector(arm.joint_low, arm.joint_high));
    if (!collision_free(arm, ws, goal_config)) continue;
    const Vec2 ee = fk_ee(arm, goal_config);
    const Vec2 g{snap_g9(ee.x()), snap_g9(ee.y())};
    if (!is_challenging(centers_of(ws.obstacles), fk_ee(arm, c0), g)) continue;
    ws.start = c0;
    ws.goal = g;
    return ws;
  }
  throw GenerationError("workspace sampling budget exhausted for scenario '" +
                        spec.name + "'");
}

WorkspaceDataset generate_dataset(const ScenarioSpec& spec,
                                  const ArmModel& arm) {
  spec.validate();
  WorkspaceDataset ds;
  ds.spec = spec;
  auto fill = [&](std::vector<Workspace>& out, int count, std::int64_t base) {
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
      Rng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(base + i)));
      out.push_back(sample_workspace(spec, arm, rng));
    }
  };
  fill(ds.train, spec.train_count, 0);
  fill(ds.test, spec.test_count, spec.train_count);
  fill(ds.validation, spec.validation_count,
       spec.train_count + spec.test_count);
  return ds;
}

namespace {

std::string record_line(const Workspace& ws, const std::string& split) {
  std::string line = split + "|obstacles=[";
  for (std::size_t i = 0; i < ws.obstacles.size(); ++i) {
    const auto& box = ws.obstacles[i];
    if (i > 0) line += ';';
    line += format_g9(box.center.x()) + ',' + format_g9(box.center.y()) +
            ',' + format_g9(box.half_extents.x()) + ',' +
            format_g9(box.half_extents.y()) + ',' + format_g9(box.rotation);
  }
  line += "]|start=[" + join_g9(ws.start) + "]|goal=[" +
          format_g9(ws.goal.x()) + ',' + format_g9(ws.goal.y()) + ']';
  return line;
}

std::string take_bracketed(const std::string& field, const std::string& key,
                           const std::string& path, int line_no) {
  const std::string prefix = key + "=[";
  if (field.rfind(prefix, 0) != 0 || field.back() != ']') {
    throw ParseError(path, line_no, "expected field '" + key + "=[...]'");
  }
  return field.substr(prefix.size(), field.size() - prefix.size() - 1);
}

}  // namespace

void save_split(const std::vector<Workspace>& list, const std::string& split,
                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "nmp-ws v1\n";
  for (const auto& ws : list) out << record_line(ws, split) << '\n';
}

void save_dataset(const WorkspaceDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "nmp-ws v1\n";
  for (const auto& ws : ds.train) out << record_line(ws, "train") << '\n';
  for (const auto& ws : ds.test) out << record_line(ws, "test") << '\n';
  for (const auto& ws : ds.validation) {
    out << record_line(ws, "validation") << '\n';
  }
}

namespace {

std::pair<std::string, Workspace> parse_line(const std::string& line,
                                             const std::string& path,
                                             int line_no, const ArmModel& arm) {
  const auto fields = split(line, '|');
  if (fields.size() != 4) {
    throw ParseError(path, line_no,
                     "expected 'split|obstacles=[..]|start=[..]|goal=[..]'");
  }
  const std::string& split_name = fields[0];
  if (split_name != "train" && split_name != "test" &&
      split_name != "validation") {
    throw ParseError(path, line_no, "unknown split '" + split_name + "'");
  }
  Workspace ws;
  ws.bounds = Bounds::around(arm);
  try {
    const std::string obstacles_text =
        take_bracketed(fields[1], "obstacles", path, line_no);
    if (!obstacles_text.empty()) {
      for (const auto& entry : split(obstacles_text, ';')) {
        const Vec v = parse_vec(entry, "obstacles");
        if (v.size() != 5) {
          throw std::runtime_error("obstacles: expected 5 values per box");
        }
        BoxObstacle box;
        box.center = {v[0], v[1]};
        box.half_extents = {v[2], v[3]};
        box.rotation = v[4];
        ws.obstacles.push_back(box);
      }
    }
    ws.start = parse_vec(take_bracketed(fields[2], "start", path, line_no),
                         "start");
    const Vec g =
        parse_vec(take_bracketed(fields[3], "goal", path, line_no), "goal");
    if (g.size() != 2) throw std::runtime_error("goal: expected 2 values");
    ws.goal = {g[0], g[1]};
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(path, line_no, e.what());
  }
  return {split_name, ws};
}

void load_records(const std::string& path, const ArmModel& arm,
                  WorkspaceDataset& ds) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != "nmp-ws v1") {
    throw ParseError(path, 1, "expected header 'nmp-ws v1'");
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto [split_name, ws] = parse_line(line, path, line_no, arm);
    if (split_name == "train") {
      ds.train.push_back(std::move(ws));
    } else if (split_name == "test") {
      ds.test.push_back(std::move(ws));
    } else {
      ds.validation.push_back(std::move(ws));
    }
  }
}

}  // namespace

WorkspaceDataset load_dataset(const std::string& path) {
  WorkspaceDataset ds;
  load_records(path, ArmModel::default_arm(), ds);
  return ds;
}

std::vector<Workspace> load_split(const std::string& path) {
  WorkspaceDataset ds = load_dataset(path);
  std::vector<Workspace> out;
  for (auto* list : {&ds.train, &ds.test, &ds.validation}) {
    out.insert(out.end(), std::make_move_iterator(list->begin()),
               std::make_move_iterator(list->end()));
  }
  return out;
}

std::string check_workspace(const Workspace& ws, const ArmModel& arm) {
  for (const auto& box : ws.obstacles) {
    if (box.half_extents.minCoeff() <= 0.0) return "non-positive half extents";
  }
  if (ws.start.size() != arm.dof()) return "start dimension mismatch";
  if (!collision_free(arm, ws, ws.start)) return "start in collision";
  if (!ws.bounds.contains(ws.goal)) return "goal outside bounds";
  if ((ws.goal - arm.base).norm() > arm.reach()) return "goal out of reach";
  return {};
}

bool operator==(const BoxObstacle& a, const BoxObstacle& b) {
  return a.center == b.center && a.half_extents == b.half_extents &&
         a.rotation == b.rotation;
}

bool operator==(const Workspace& a, const Workspace& b) {
  return a.obstacles == b.obstacles && a.start == b.start && a.goal == b.goal;
}

namespace {

std::string range_text(const RangeD& r) {
  return format_g9(r.lo) + ',' + format_g9(r.hi);
}

RangeD parse_range(const std::string& text) {
  const Vec v = parse_vec(text, "range");
  if (v.size() != 2) throw std::runtime_error("range: expected 'lo,hi'");
  return {v[0], v[1]};
}

}  // namespace

void save_scenario(const ScenarioSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "nmp-scenario v1\n";
  out << "name=" << spec.name << '\n';
  out << "mode=" << (spec.mode == ObstacleMode::kFixed ? "fixed" : "random")
      << '\n';
  if (spec.mode == ObstacleMode::kFixed) {
    out << "obstacles=[";
    for (std::size_t i = 0; i < spec.fixed_obstacles.size(); ++i) {
      const auto& box = spec.fixed_obstacles[i];
      if (i > 0) out << ';';
      out << format_g9(box.center.x()) << ',' << format_g9(box.center.y())
          << ',' << format_g9(box.half_extents.x()) << ','
          << format_g9(box.half_extents.y()) << ','
          << format_g9(box.rotation);
    }
    out << "]\n";
  } else {
    out << "count=" << spec.count_min << ',' << spec.count_max << '\n';
    out << "half_w=" << range_text(spec.half_w) << '\n';
    out << "half_h=" << range_text(spec.half_h) << '\n';
    out << "pos_x=" << range_text(spec.pos_x) << '\n';
    out << "pos_z=" << range_text(spec.pos_z) << '\n';
    out << "rot=" << range_text(spec.rot) << '\n';
  }
  out << "train=" << spec.train_count << '\n';
  out << "test=" << spec.test_count << '\n';
  out << "validation=" << spec.validation_count << '\n';
  out << "context_slots=" << spec.context_slots << '\n';
  out << "seed=" << spec.seed << '\n';
}

ScenarioSpec load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != "nmp-scenario v1") {
    throw ParseError(path, 1, "expected header 'nmp-scenario v1'");
  }
  ScenarioSpec spec;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto pos = line.find('=');
    if (pos == std::string::npos) {
      throw ParseError(path, line_no, "expected key=value");
    }
    const std::string key = line.substr(0, pos);
    const std::string value = line.substr(pos + 1);
    try {
      if (key == "name") {
        spec.name = value;
      } else if (key == "mode") {
        if (value == "fixed") {
          spec.mode = ObstacleMode::kFixed;
        } else if (value == "random") {
          spec.mode = ObstacleMode::kRandom;
        } else {
          throw std::runtime_error("mode must be fixed|random");
        }
      } else if (key == "obstacles") {
        if (value.size() < 2 || value.front() != '[' || value.back() != ']') {
          throw std::runtime_error("obstacles: expected [..]");
        }
        const std::string inner = value.substr(1, value.size() - 2);
        spec.fixed_obstacles.clear();
        if (!inner.empty()) {
          for (const auto& entry : split(inner, ';')) {
            const Vec v = parse_vec(entry, "obstacles");
            if (v.size() != 5) {
              throw std::runtime_error("obstacles: 5 values per box");
            }
            spec.fixed_obstacles.push_back(
                {{v[0], v[1]}, {v[2], v[3]}, v[4]});
          }
        }
      } else if (key == "count") {
        const Vec v = parse_vec(value, "count");
        if (v.size() != 2) throw std::runtime_error("count: expected min,max");
        spec.count_min = static_cast<int>(v[0]);
        spec.count_max = static_cast<int>(v[1]);
      } else if (key == "half_w") {
        spec.half_w = parse_range(value);
      } else if (key == "half_h") {
        spec.half_h = parse_range(value);
      } else if (key == "pos_x") {
        spec.pos_x = parse_range(value);
      } else if (key == "pos_z") {
        spec.pos_z = parse_range(value);
      } else if (key == "rot") {
        spec.rot = parse_range(value);
      } else if (key == "train") {
        spec.train_count = std::stoi(value);
      } else if (key == "test") {
        spec.test_count = std::stoi(value);
      } else if (key == "validation") {
        spec.validation_count = std::stoi(value);
      } else if (key == "context_slots") {
        spec.context_slots = std::stoi(value);
      } else if (key == "seed") {
        spec.seed = std::stoull(value);
      } else {
        throw std::runtime_error("unknown key '" + key + "'");
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(path, line_no, e.what());
    }
  }
  spec.validate();
  return spec;
}

ScenarioSpec make_simple_scenario() {
  ScenarioSpec spec;
  spec.name = "simple";
  spec.mode = ObstacleMode::kFixed;
  spec.fixed_obstacles = {{{0.0, 0.30}, {0.02, 0.10}, 0.0}};
  spec.context_slots = 1;
  spec.train_count = 2000;
  spec.test_count = 200;
  spec.validation_count = 1000;
  spec.seed = 90210;
  return spec;
}

ScenarioSpec make_hard_scenario() {
  ScenarioSpec spec;
  spec.name = "hard";
  spec.mode = ObstacleMode::kFixed;
  // Two bars at z ~ 0.30 leave a narrow central passage; the lower block
  // forces an S-shaped approach into it.
  spec.fixed_obstacles = {{{-0.205, 0.30}, {0.17, 0.02}, 0.0},
                          {{0.205, 0.30}, {0.17, 0.02}, 0.0},
                          {{0.0, 0.15}, {0.04, 0.025}, 0.0}};
  spec.context_slots = 3;
  spec.train_count = 2000;
  spec.test_count = 200;
  spec.validation_count = 1000;
  spec.seed = 90211;
  return spec;
}

ScenarioSpec make_random_scenario() {
  ScenarioSpec spec;
  spec.name = "random";
  spec.mode = ObstacleMode::kRandom;
  spec.count_min = 1;
  spec.count_max = 3;
  spec.context_slots = 3;
  spec.train_count = 2000;
  spec.test_count = 200;
  spec.validation_count = 1000;
  spec.seed = 90212;
  return spec;
}

}  // namespace nmp
