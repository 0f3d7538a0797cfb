#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "colgrid/errors.hpp"
#include "colgrid/scene.hpp"

using namespace colgrid;

namespace {

/// Writes `content` to a fresh file under the system temp dir and returns its
/// path; files are cleaned up by the fixture's destructor.
class TempFile {
 public:
  explicit TempFile(const std::string& content) {
    static int counter = 0;
    path_ = (std::filesystem::temp_directory_path() /
             ("colgrid_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + ".csv"))
                .string();
    std::ofstream out(path_, std::ios::binary);
    out << content;
  }
  ~TempFile() { std::remove(path_.c_str()); }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

const std::string kSmallScene =
    "frame_id,agent_id,agent_type,x_m,y_m\n"
    "0,1,ped,0.0,0.0\n"
    "0,2,veh,10.0,1.0\n"
    "1,1,ped,0.5,0.0\n"
    "1,2,veh,7.0,1.0\n"
    "2,1,ped,1.0,0.0\n"
    "2,2,veh,4.0,1.0\n";

}  // namespace

TEST_CASE("loads the canonical schema") {
  TempFile f(kSmallScene);
  const Scene scene = load_scene(f.path());
  REQUIRE(scene.frames.size() == 3);
  CHECK(scene.frame_rate_hz == 2.0);
  CHECK(scene.dt() == 0.5);
  CHECK(scene.state_count() == 6);
  CHECK(scene.frames[0].frame_id == 0);
  CHECK(scene.frames[2].frame_id == 2);

  const AgentState* ped = scene.frames[1].find(1);
  REQUIRE(ped != nullptr);
  CHECK(ped->kind == AgentKind::Pedestrian);
  CHECK(ped->position == Vec2{0.5, 0.0});

  const AgentState* veh = scene.frames[1].find(2);
  REQUIRE(veh != nullptr);
  CHECK(veh->kind == AgentKind::Vehicle);
}

TEST_CASE("accepts CRLF line endings and skips blank lines") {
  TempFile f("frame_id,agent_id,agent_type,x_m,y_m\r\n0,1,ped,1.5,-2.25\r\n\r\n1,1,ped,2.0,-2.0\r\n");
  const Scene scene = load_scene(f.path());
  REQUIRE(scene.frames.size() == 2);
  CHECK(scene.frames[0].agents[0].position == Vec2{1.5, -2.25});
}

TEST_CASE("rejects bad input with typed errors") {
  SUBCASE("missing file") {
    CHECK_THROWS_WITH_AS(load_scene("/nonexistent/scene.csv"), doctest::Contains("cannot open"),
                         DataError);
  }
  SUBCASE("wrong header") {
    TempFile f("frame,agent,type,x,y\n0,1,ped,0,0\n");
    try {
      load_scene(f.path());
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(e.kind() == DataError::Kind::BadHeader);
    }
  }
  SUBCASE("malformed coordinate") {
    TempFile f("frame_id,agent_id,agent_type,x_m,y_m\n0,1,ped,abc,0\n");
    try {
      load_scene(f.path());
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(e.kind() == DataError::Kind::MalformedRow);
    }
  }
  SUBCASE("missing field") {
    TempFile f("frame_id,agent_id,agent_type,x_m,y_m\n0,1,ped,0\n");
    try {
      load_scene(f.path());
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(e.kind() == DataError::Kind::MalformedRow);
    }
  }
  SUBCASE("unknown agent type") {
    TempFile f("frame_id,agent_id,agent_type,x_m,y_m\n0,1,horse,0,0\n");
    try {
      load_scene(f.path());
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(e.kind() == DataError::Kind::MalformedRow);
    }
  }
  SUBCASE("duplicate agent in one frame") {
    TempFile f("frame_id,agent_id,agent_type,x_m,y_m\n0,1,ped,0,0\n0,1,ped,1,1\n");
    try {
      load_scene(f.path());
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(e.kind() == DataError::Kind::DuplicateAgentInFrame);
    }
  }
  SUBCASE("frames out of order") {
    TempFile f("frame_id,agent_id,agent_type,x_m,y_m\n2,1,ped,0,0\n1,1,ped,1,1\n");
    try {
      load_scene(f.path());
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(e.kind() == DataError::Kind::NonMonotonicFrames);
    }
  }
  SUBCASE("agent with a gap in its track") {
    TempFile f(
        "frame_id,agent_id,agent_type,x_m,y_m\n"
        "0,1,ped,0,0\n1,5,ped,9,9\n2,1,ped,1,0\n");
    try {
      load_scene(f.path());
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(e.kind() == DataError::Kind::GappedAgent);
    }
  }
}

TEST_CASE("cyclist rows follow the requested policy") {
  const std::string csv = "frame_id,agent_id,agent_type,x_m,y_m\n0,1,cyclist,0,0\n0,2,ped,1,1\n";
  TempFile f(csv);

  const Scene as_veh = load_scene(f.path(), SceneFormat::CanonicalCsv, CyclistPolicy::Vehicle);
  CHECK(as_veh.frames[0].find(1)->kind == AgentKind::Vehicle);

  const Scene as_ped = load_scene(f.path(), SceneFormat::CanonicalCsv, CyclistPolicy::Pedestrian);
  CHECK(as_ped.frames[0].find(1)->kind == AgentKind::Pedestrian);

  const Scene dropped = load_scene(f.path(), SceneFormat::CanonicalCsv, CyclistPolicy::Drop);
  CHECK(dropped.frames[0].find(1) == nullptr);
  CHECK(dropped.frames[0].find(2) != nullptr);
}

TEST_CASE("save and load round-trip coordinates exactly") {
  TempFile f(kSmallScene);
  Scene scene = load_scene(f.path());
  scene.frames[0].agents[0].position = Vec2{0.1 + 0.2, -1.0 / 3.0};  // awkward decimals

  TempFile out("");
  save_scene(scene, out.path());
  const Scene back = load_scene(out.path());
  REQUIRE(back.frames.size() == scene.frames.size());
  for (std::size_t i = 0; i < scene.frames.size(); ++i) {
    REQUIRE(back.frames[i].agents.size() == scene.frames[i].agents.size());
    for (std::size_t j = 0; j < scene.frames[i].agents.size(); ++j) {
      CHECK(back.frames[i].agents[j].position == scene.frames[i].agents[j].position);
      CHECK(back.frames[i].agents[j].agent_id == scene.frames[i].agents[j].agent_id);
      CHECK(back.frames[i].agents[j].kind == scene.frames[i].agents[j].kind);
    }
  }
}

TEST_CASE("velocities are backward differences with a copied first step") {
  TempFile f(kSmallScene);
  const Scene scene = derive_velocities(load_scene(f.path()));

  // Pedestrian 1 moves +0.5 m per 0.5 s frame -> exactly (1, 0) m/s.
  CHECK(scene.frames[1].find(1)->velocity == Vec2{1.0, 0.0});
  CHECK(scene.frames[2].find(1)->velocity == Vec2{1.0, 0.0});
  // First frame copies the following difference.
  CHECK(scene.frames[0].find(1)->velocity == Vec2{1.0, 0.0});
  // Vehicle 2 moves -3 m per frame -> (-6, 0) m/s.
  CHECK(scene.frames[0].find(2)->velocity == Vec2{-6.0, 0.0});
  CHECK(scene.frames[2].find(2)->velocity == Vec2{-6.0, 0.0});
}

TEST_CASE("an agent seen only once gets zero velocity and a warning") {
  TempFile f(
      "frame_id,agent_id,agent_type,x_m,y_m\n"
      "0,1,ped,0,0\n"
      "1,1,ped,1,0\n"
      "1,9,ped,5,5\n");
  std::vector<std::int64_t> warnings;
  const Scene scene = derive_velocities(load_scene(f.path()), &warnings);
  CHECK(scene.frames[1].find(9)->velocity == Vec2{0.0, 0.0});
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0] == 9);
}

TEST_CASE("windows pick pedestrians present across the whole slice") {
  // 5 frames; ped 1 spans all, ped 2 misses frame 4, vehicle 3 spans all.
  std::string csv = "frame_id,agent_id,agent_type,x_m,y_m\n";
  for (int t = 0; t < 5; ++t) {
    csv += std::to_string(t) + ",1,ped," + std::to_string(t) + ",0\n";
    if (t < 4) csv += std::to_string(t) + ",2,ped,0," + std::to_string(t) + "\n";
    csv += std::to_string(t) + ",3,veh,5,5\n";
  }
  TempFile f(csv);
  const Scene scene = load_scene(f.path());

  const auto windows = make_windows(scene, 2, 2, 1);
  REQUIRE(windows.size() == 2);

  CHECK(windows[0].window_id == 0);
  CHECK(windows[0].target_ids == std::vector<std::int64_t>{1, 2});

  // The second slice covers frames 1..4; ped 2 is gone at frame 4.
  CHECK(windows[1].window_id == 1);
  CHECK(windows[1].target_ids == std::vector<std::int64_t>{1});

  // Frames 1..4 include frame 4 where ped 2 is absent: only ped 1 qualifies.
  const auto w2 = make_windows(scene, 2, 3, 1);
  REQUIRE(w2.size() == 1);
  CHECK(w2[0].target_ids == std::vector<std::int64_t>{1});

  // Vehicles are never targets.
  for (const auto& w : windows) {
    for (auto id : w.target_ids) CHECK(id != 3);
  }
}

TEST_CASE("windows honor the stride and drop target-free slices") {
  std::string csv = "frame_id,agent_id,agent_type,x_m,y_m\n";
  for (int t = 0; t < 12; ++t) {
    csv += std::to_string(t) + ",7,ped," + std::to_string(t) + ",0\n";
  }
  TempFile f(csv);
  const Scene scene = load_scene(f.path());

  const auto stride3 = make_windows(scene, 3, 3, 3);
  REQUIRE(stride3.size() == 3);
  CHECK(stride3[0].window_id == 0);
  CHECK(stride3[1].window_id == 3);
  CHECK(stride3[2].window_id == 6);

  // A vehicles-only scene yields no windows at all.
  std::string veh_csv = "frame_id,agent_id,agent_type,x_m,y_m\n";
  for (int t = 0; t < 8; ++t) veh_csv += std::to_string(t) + ",3,veh,0,0\n";
  TempFile g(veh_csv);
  CHECK(make_windows(load_scene(g.path()), 3, 3, 1).empty());

  CHECK_THROWS_AS(make_windows(scene, 1, 3, 1), DataError);
  CHECK_THROWS_AS(make_windows(scene, 3, 0, 1), DataError);
  CHECK_THROWS_AS(make_windows(scene, 3, 3, 0), DataError);
}

TEST_CASE("window accessors expose positions and prediction ground truth") {
  std::string csv = "frame_id,agent_id,agent_type,x_m,y_m\n";
  for (int t = 0; t < 4; ++t) {
    csv += std::to_string(t) + ",1,ped," + std::to_string(t) + "," + std::to_string(2 * t) + "\n";
  }
  TempFile f(csv);
  const auto windows = make_windows(load_scene(f.path()), 2, 2, 1);
  REQUIRE(windows.size() == 1);
  const auto& w = windows[0];

  const auto pos = w.target_positions(1);
  REQUIRE(pos.size() == 4);
  CHECK(pos[3] == Vec2{3.0, 6.0});

  const auto gt = w.ground_truth(1);
  REQUIRE(gt.size() == 2);
  CHECK(gt[0] == Vec2{2.0, 4.0});
  CHECK(gt[1] == Vec2{3.0, 6.0});

  CHECK(w.find(0, 1) != nullptr);
  CHECK(w.find(0, 99) == nullptr);
  CHECK_THROWS_AS(w.target_positions(99), DataError);
}

TEST_CASE("the first minutes of a recording become the test split") {
  // At 2 Hz, 1 minute = 120 frames. Use 0.05 min = 6 frames for brevity.
  std::string csv = "frame_id,agent_id,agent_type,x_m,y_m\n";
  for (int t = 0; t < 10; ++t) csv += std::to_string(t) + ",1,ped,0,0\n";
  TempFile f(csv);
  const Scene scene = load_scene(f.path());

  const auto split = split_first_minutes(scene, 0.05);
  REQUIRE(split.test.frames.size() == 6);  // frames 0..5
  REQUIRE(split.train.frames.size() == 4);
  CHECK(split.test.frames.back().frame_id == 5);
  CHECK(split.train.frames.front().frame_id == 6);
  CHECK(split.test.frame_rate_hz == scene.frame_rate_hz);
}
