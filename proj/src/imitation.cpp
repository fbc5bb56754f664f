#include "nmp/imitation.hpp"

#include <fstream>

#include "nmp/textio.hpp"

namespace nmp {

DemoCorpus DemoCorpus::first_episodes(int n) const {
  DemoCorpus out;
  for (const auto& s : samples) {
    if (s.episode < n) out.samples.push_back(s);
  }
  return out;
}

double cosine_loss(const Vec& predicted, const Vec& expert) {
  if (predicted.size() != expert.size()) {
    throw std::invalid_argument("cosine_loss dimension mismatch");
  }
  if (std::abs(predicted.norm() - 1.0) > 1e-6 ||
      std::abs(expert.norm() - 1.0) > 1e-6) {
    throw std::invalid_argument("cosine_loss expects unit vectors");
  }
  return 1.0 - predicted.dot(expert);
}

DemoCorpus build_corpus(const std::vector<Workspace>& workspaces,
                        const ArmModel& arm, int context_slots,
                        const RrtParams& params, std::uint64_t seed,
                        CorpusBuildStats* stats) {
  DemoCorpus corpus;
  int episode = 0;
  for (std::size_t w = 0; w < workspaces.size(); ++w) {
    const Workspace& ws = workspaces[w];
    RrtParams local = params;
    local.seed = mix_seed(seed, static_cast<std::uint64_t>(w));
    const auto plan = rrt_plan(ws, arm, local);
    if (!plan) {
      if (stats) ++stats->planner_failures;
      continue;
    }
    if (stats) ++stats->planned;
    const Vec context = make_context(ws, context_slots);
    for (std::size_t i = 0; i + 1 < plan->configurations.size(); ++i) {
      const Vec delta = plan->configurations[i + 1] - plan->configurations[i];
      const double norm = delta.norm();
      if (norm < 1e-12) continue;
      DemoSample sample;
      sample.context = context;
      sample.config = plan->configurations[i];
      sample.direction = delta / norm;
      sample.episode = episode;
      corpus.samples.push_back(std::move(sample));
    }
    ++episode;
  }
  return corpus;
}

void save_corpus(const DemoCorpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "nmp-demo v1\n";
  for (const auto& s : corpus.samples) {
    out << join_g9(s.context) << '|' << join_g9(s.config) << '|'
        << join_g9(s.direction) << '\n';
  }
}

DemoCorpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != "nmp-demo v1") {
    throw ParseError(path, 1, "expected header 'nmp-demo v1'");
  }
  DemoCorpus corpus;
  int line_no = 1;
  int episode = -1;
  Vec last_context;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line, '|');
    if (fields.size() != 3) {
      throw ParseError(path, line_no, "expected 'context|config|direction'");
    }
    try {
      DemoSample s;
      s.context = parse_vec(fields[0], "context");
      s.config = parse_vec(fields[1], "config");
      s.direction = parse_vec(fields[2], "direction");
      // The format has no episode column; boundaries are recovered from
      // context changes (consecutive samples of one plan share a context).
      if (episode < 0 || s.context.size() != last_context.size() ||
          s.context != last_context) {
        ++episode;
        last_context = s.context;
      }
      s.episode = episode;
      corpus.samples.push_back(std::move(s));
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(path, line_no, e.what());
    }
  }
  return corpus;
}

}  // namespace nmp
