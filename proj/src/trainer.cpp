#include "nmp/trainer.hpp"

#include <fstream>
#include <sstream>

#include "nmp/textio.hpp"

namespace nmp {

Variant variant_from_string(const std::string& name) {
  if (name == "ddpg") return Variant::kDdpg;
  if (name == "ddpg_her") return Variant::kDdpgHer;
  if (name == "ddpgmp_noexp") return Variant::kDdpgMpNoExpert;
  if (name == "ddpgmp_her") return Variant::kDdpgMpHer;
  if (name == "ddpgmp_full") return Variant::kDdpgMpFull;
  throw std::invalid_argument("unknown variant '" + name + "'");
}

const char* to_string(Variant v) {
  switch (v) {
    case Variant::kDdpg:
      return "ddpg";
    case Variant::kDdpgHer:
      return "ddpg_her";
    case Variant::kDdpgMpNoExpert:
      return "ddpgmp_noexp";
    case Variant::kDdpgMpHer:
      return "ddpgmp_her";
    case Variant::kDdpgMpFull:
      return "ddpgmp_full";
  }
  return "?";
}

std::vector<Transition> her_relabel(const std::vector<Transition>& episode,
                                    int k, const ArmModel& arm, Rng& rng) {
  std::vector<Transition> out;
  if (episode.empty() || k <= 0) return out;
  const int len = static_cast<int>(episode.size());
  out.reserve(static_cast<std::size_t>(len) * k);

  std::vector<Vec2> reached(len);
  for (int i = 0; i < len; ++i) reached[i] = fk_ee(arm, episode[i].c_to);

  for (int i = 0; i < len; ++i) {
    const Transition& t = episode[i];
    // r^D is goal independent; recompute it once from the stored action.
    const Configuration c_raw = t.c_from + kMotionStepNorm * t.action;
    const double wasted =
        (c_raw - c_raw.cwiseMax(arm.joint_low).cwiseMin(arm.joint_high))
            .norm();
    for (int s = 0; s < k; ++s) {
      const int j = i + rng.uniform_int(len - i);
      const Vec2& new_goal = reached[j];
      Transition copy = t;
      copy.context = with_goal(t.context, new_goal);
      if (t.cls == TransitionClass::kCollision) {
        copy.cls = TransitionClass::kCollision;
      } else if ((reached[i] - new_goal).norm() < kGoalTolerance) {
        copy.cls = TransitionClass::kGoal;
      } else {
        copy.cls = TransitionClass::kFree;
      }
      copy.reward = reward_for(copy.cls, wasted);
      copy.done = copy.cls != TransitionClass::kFree || t.done;
      out.push_back(std::move(copy));
    }
  }
  return out;
}

DemoInjection inject_demonstrations(ReplayBuffer& replay,
                                    const std::vector<const Workspace*>& failed,
                                    const ArmModel& arm, int context_slots,
                                    const RrtParams& base_params, int cap,
                                    Rng& rng) {
  DemoInjection result;
  std::vector<const Workspace*> selected = failed;
  if (static_cast<int>(selected.size()) > cap) {
    for (int i = 0; i < cap; ++i) {
      const int j =
          i + rng.uniform_int(static_cast<int>(selected.size()) - i);
      std::swap(selected[i], selected[j]);
    }
    selected.resize(cap);
  }
  for (const Workspace* ws : selected) {
    ++result.attempted;
    RrtParams params = base_params;
    params.seed = rng.bits();
    const auto plan = rrt_plan(*ws, arm, params);
    if (!plan) {
      ++result.planner_failures;
      continue;
    }
    ++result.planned;
    for (auto& t : score_demonstration(*plan, *ws, arm, context_slots)) {
      replay.push(std::move(t));
      ++result.transitions;
    }
  }
  return result;
}

void write_train_log_header(std::ostream& out) {
  out << "iteration,episodes_seen,test_success,critic_loss,actor_objective,"
         "demos_injected\n";
}

void write_train_log_row(std::ostream& out, const TrainLogRow& row) {
  out << row.iteration << ',' << row.episodes_seen << ','
      << format_g9(row.test_success) << ',' << format_g9(row.critic_loss)
      << ',' << format_g9(row.actor_objective) << ',' << row.demos_injected
      << '\n';
  out.flush();
}

void save_replay(const ReplayBuffer& replay, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "nmp-replay v1\n";
  out << replay.capacity() << ' ' << replay.size() << '\n';
  auto put_vec = [&out](const Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (i > 0) out << ',';
      out << format_g17(v[i]);
    }
    out << '|';
  };
  for (std::size_t i = 0; i < replay.size(); ++i) {
    const Transition& t = replay.oldest(i);
    put_vec(t.context);
    put_vec(t.c_from);
    put_vec(t.action);
    put_vec(t.c_to);
    out << format_g17(t.reward) << '|' << class_index(t.cls) << '|'
        << (t.done ? 1 : 0) << '\n';
  }
}

void load_replay(ReplayBuffer& replay, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != "nmp-replay v1") {
    throw ParseError(path, 1, "expected header 'nmp-replay v1'");
  }
  std::size_t capacity = 0, count = 0;
  if (!std::getline(in, line)) throw ParseError(path, 2, "missing sizes");
  {
    std::istringstream sizes(line);
    if (!(sizes >> capacity >> count)) {
      throw ParseError(path, 2, "expected '<capacity> <size>'");
    }
  }
  replay.clear();
  int line_no = 2;
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) {
      throw ParseError(path, line_no, "truncated replay dump");
    }
    ++line_no;
    const auto fields = split(line, '|');
    if (fields.size() != 7) {
      throw ParseError(path, line_no, "expected 7 fields");
    }
    try {
      Transition t;
      t.context = parse_vec(fields[0], "context");
      t.c_from = parse_vec(fields[1], "c_from");
      t.action = parse_vec(fields[2], "action");
      t.c_to = parse_vec(fields[3], "c_to");
      t.reward = parse_double(fields[4]);
      const int cls = std::stoi(fields[5]);
      if (cls < 0 || cls > 2) throw std::runtime_error("bad class");
      t.cls = static_cast<TransitionClass>(cls);
      t.done = fields[6] == "1";
      replay.push(std::move(t));
    } catch (const std::exception& e) {
      throw ParseError(path, line_no, e.what());
    }
  }
}

void write_progress(const std::string& path, int iteration, long episodes_seen,
                    double best_test, int best_iteration, long demos_total,
                    int demo_failures) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "iteration=" << iteration << '\n';
  out << "episodes_seen=" << episodes_seen << '\n';
  out << "best_test=" << format_g17(best_test) << '\n';
  out << "best_iteration=" << best_iteration << '\n';
  out << "demos_total=" << demos_total << '\n';
  out << "demo_failures=" << demo_failures << '\n';
}

void read_progress(const std::string& path, int& iteration,
                   long& episodes_seen, double& best_test, int& best_iteration,
                   long& demos_total, int& demo_failures) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto pos = line.find('=');
    if (pos == std::string::npos) {
      throw ParseError(path, line_no, "expected key=value");
    }
    const std::string key = line.substr(0, pos);
    const std::string value = line.substr(pos + 1);
    if (key == "iteration") {
      iteration = std::stoi(value);
    } else if (key == "episodes_seen") {
      episodes_seen = std::stol(value);
    } else if (key == "best_test") {
      best_test = parse_double(value);
    } else if (key == "best_iteration") {
      best_iteration = std::stoi(value);
    } else if (key == "demos_total") {
      demos_total = std::stol(value);
    } else if (key == "demo_failures") {
      demo_failures = std::stoi(value);
    } else {
      throw ParseError(path, line_no, "unknown key '" + key + "'");
    }
  }
}

}  // namespace nmp
