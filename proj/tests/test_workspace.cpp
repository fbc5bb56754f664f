#include "nmp/workspace.hpp"

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "nmp/textio.hpp"

using namespace nmp;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

ScenarioSpec tiny_simple() {
  ScenarioSpec spec = make_simple_scenario();
  spec.train_count = 6;
  spec.test_count = 3;
  spec.validation_count = 4;
  return spec;
}

}  // namespace

TEST_CASE("is_challenging") {
  SUBCASE("midpoint obstacle qualifies") {
    const Vec2 c0{0.0, 0.0}, g{0.4, 0.0};
    const std::vector<Vec2> centers = {{0.2, 0.0}};
    CHECK(is_challenging(centers, c0, g));
  }
  SUBCASE("distant obstacle fails the first inequality") {
    const Vec2 c0{0.0, 0.0}, g{0.2, 0.0};
    const std::vector<Vec2> centers = {{1.0, 0.0}};
    CHECK_FALSE(is_challenging(centers, c0, g));
  }
  SUBCASE("worked example") {
    const std::vector<Vec2> centers = {{1.0, 0.0}};
    CHECK(is_challenging(centers, {0.0, 0.0}, {2.0, 0.0}));
  }
  SUBCASE("translation invariance") {
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
      const Vec2 c0{rng.uniform(-1, 1), rng.uniform(-1, 1)};
      const Vec2 g{rng.uniform(-1, 1), rng.uniform(-1, 1)};
      const std::vector<Vec2> centers = {
          {rng.uniform(-1, 1), rng.uniform(-1, 1)}};
      const Vec2 shift{rng.uniform(-5, 5), rng.uniform(-5, 5)};
      const std::vector<Vec2> shifted = {centers[0] + shift};
      CHECK(is_challenging(centers, c0, g) ==
            is_challenging(shifted, Vec2(c0 + shift), Vec2(g + shift)));
    }
  }
}

TEST_CASE("sample_workspace is deterministic and honors its contract") {
  const ArmModel arm = ArmModel::default_arm();
  const ScenarioSpec spec = make_simple_scenario();

  Rng rng_a(3), rng_b(3);
  const Workspace a = sample_workspace(spec, arm, rng_a);
  const Workspace b = sample_workspace(spec, arm, rng_b);
  CHECK(a == b);

  Rng rng(99);
  std::vector<Vec2> centers;
  for (const auto& box : a.obstacles) centers.push_back(box.center);
  for (int i = 0; i < 1000; ++i) {
    const Workspace ws = sample_workspace(spec, arm, rng);
    CHECK(collision_free(arm, ws, ws.start));
    CHECK(is_challenging(centers, fk_ee(arm, ws.start), ws.goal));
    CHECK(check_workspace(ws, arm).empty());
  }
}

TEST_CASE("over-constrained scenario exhausts the retry budget") {
  const ArmModel arm = ArmModel::default_arm();
  ScenarioSpec spec = make_simple_scenario();
  // A box that swallows the whole reachable disc: no collision-free start.
  spec.fixed_obstacles = {{{0.0, 0.0}, {0.8, 0.8}, 0.0}};
  spec.name = "impossible";
  Rng rng(1);
  CHECK_THROWS_AS(sample_workspace(spec, arm, rng), GenerationError);
  try {
    Rng rng2(1);
    sample_workspace(spec, arm, rng2);
  } catch (const GenerationError& e) {
    CHECK(std::string(e.what()).find("impossible") != std::string::npos);
  }
}

TEST_CASE("generate_dataset: deterministic, disjoint splits") {
  const ArmModel arm = ArmModel::default_arm();
  const ScenarioSpec spec = tiny_simple();
  const WorkspaceDataset a = generate_dataset(spec, arm);
  const WorkspaceDataset b = generate_dataset(spec, arm);
  CHECK(a.train.size() == 6);
  CHECK(a.test.size() == 3);
  CHECK(a.validation.size() == 4);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  CHECK(a.validation == b.validation);

  for (const auto& t : a.train) {
    for (const auto& v : a.test) CHECK_FALSE(t == v);
    for (const auto& v : a.validation) CHECK_FALSE(t == v);
  }
  for (const auto& t : a.test) {
    for (const auto& v : a.validation) CHECK_FALSE(t == v);
  }
}

TEST_CASE("dataset save/load round trip") {
  const ArmModel arm = ArmModel::default_arm();
  const WorkspaceDataset ds = generate_dataset(tiny_simple(), arm);
  const std::string path = temp_path("nmp_ds_roundtrip.ws");

  save_dataset(ds, path);
  const WorkspaceDataset loaded = load_dataset(path);
  CHECK(loaded.train == ds.train);
  CHECK(loaded.test == ds.test);
  CHECK(loaded.validation == ds.validation);

  // Values are snapped to the file precision at generation, so a second
  // save is byte-identical.
  const std::string again = temp_path("nmp_ds_roundtrip2.ws");
  save_dataset(loaded, again);
  CHECK(read_file(path) == read_file(again));
}

TEST_CASE("hand-written dataset file loads to expected values") {
  const std::string path = temp_path("nmp_ds_fixture.ws");
  {
    std::ofstream out(path);
    out << "nmp-ws v1\n";
    out << "train|obstacles=[0.1,0.2,0.03,0.04,0.5]|start=[0.1,-0.2,0.3,0]|"
           "goal=[0.25,0.125]\n";
  }
  const WorkspaceDataset ds = load_dataset(path);
  REQUIRE(ds.train.size() == 1);
  const Workspace& ws = ds.train[0];
  REQUIRE(ws.obstacles.size() == 1);
  CHECK(ws.obstacles[0].center == Vec2{0.1, 0.2});
  CHECK(ws.obstacles[0].half_extents == Vec2{0.03, 0.04});
  CHECK(ws.obstacles[0].rotation == 0.5);
  CHECK(ws.start.size() == 4);
  CHECK(ws.start[1] == -0.2);
  CHECK(ws.goal == Vec2{0.25, 0.125});
}

TEST_CASE("malformed dataset files raise parse errors with line numbers") {
  SUBCASE("missing goal field") {
    const std::string path = temp_path("nmp_ds_missing_goal.ws");
    {
      std::ofstream out(path);
      out << "nmp-ws v1\n";
      out << "train|obstacles=[]|start=[0,0,0,0]\n";
    }
    try {
      load_dataset(path);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line_number == 2);
    }
  }
  SUBCASE("goal field mangled") {
    const std::string path = temp_path("nmp_ds_bad_goal.ws");
    {
      std::ofstream out(path);
      out << "nmp-ws v1\n";
      out << "train|obstacles=[]|start=[0,0,0,0]|goal=[0.1]\n";
    }
    try {
      load_dataset(path);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("goal") != std::string::npos);
    }
  }
  SUBCASE("bad header") {
    const std::string path = temp_path("nmp_ds_bad_header.ws");
    {
      std::ofstream out(path);
      out << "nmp-ws v2\n";
    }
    CHECK_THROWS_AS(load_dataset(path), ParseError);
  }
}

TEST_CASE("scenario spec file round trip") {
  for (const ScenarioSpec& spec :
       {make_simple_scenario(), make_hard_scenario(), make_random_scenario()}) {
    const std::string path = temp_path("nmp_scn_" + spec.name + ".spec");
    save_scenario(spec, path);
    const ScenarioSpec loaded = load_scenario(path);
    CHECK(loaded.name == spec.name);
    CHECK(loaded.mode == spec.mode);
    CHECK(loaded.fixed_obstacles.size() == spec.fixed_obstacles.size());
    for (std::size_t i = 0; i < spec.fixed_obstacles.size(); ++i) {
      CHECK(loaded.fixed_obstacles[i] == spec.fixed_obstacles[i]);
    }
    CHECK(loaded.train_count == spec.train_count);
    CHECK(loaded.seed == spec.seed);
    CHECK(loaded.context_slots == spec.context_slots);

    const std::string path2 = temp_path("nmp_scn2_" + spec.name + ".spec");
    save_scenario(loaded, path2);
    CHECK(read_file(path) == read_file(path2));
  }
}

TEST_CASE("scenario validation catches bad ranges") {
  ScenarioSpec spec = make_random_scenario();
  spec.half_w = {0.1, 0.01};
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = make_random_scenario();
  spec.context_slots = 0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}
