#include "colgrid/scene.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "colgrid/errors.hpp"

namespace colgrid {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_i64(const std::string& s, std::int64_t& out) {
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end;
}

bool parse_double(const std::string& s, double& out) {
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

const AgentState* Frame::find(std::int64_t agent_id) const {
  for (const auto& a : agents) {
    if (a.agent_id == agent_id) return &a;
  }
  return nullptr;
}

std::size_t Scene::state_count() const {
  std::size_t n = 0;
  for (const auto& f : frames) n += f.agents.size();
  return n;
}

const AgentState* SceneWindow::find(int step, std::int64_t agent_id) const {
  return frames.at(static_cast<std::size_t>(step)).find(agent_id);
}

std::vector<Vec2> SceneWindow::target_positions(std::int64_t agent_id) const {
  std::vector<Vec2> out;
  out.reserve(frames.size());
  for (const auto& f : frames) {
    const AgentState* s = f.find(agent_id);
    if (s == nullptr) {
      throw DataError(DataError::Kind::WindowNotFound,
                      "agent " + std::to_string(agent_id) + " is not present in every window frame");
    }
    out.push_back(s->position);
  }
  return out;
}

std::vector<Vec2> SceneWindow::ground_truth(std::int64_t agent_id) const {
  auto all = target_positions(agent_id);
  return std::vector<Vec2>(all.begin() + t_obs, all.end());
}

Scene load_scene(const std::string& path, SceneFormat format, CyclistPolicy cyclist_as,
                 double frame_rate_hz) {
  (void)format;  // only CanonicalCsv exists
  std::ifstream in(path);
  if (!in) {
    throw DataError(DataError::Kind::MissingFile, "cannot open scene file: " + path);
  }

  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(DataError::Kind::BadHeader, path + ": empty file");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCanonicalCsvHeader) {
    throw DataError(DataError::Kind::BadHeader,
                    path + ": header must be exactly '" + std::string(kCanonicalCsvHeader) + "'");
  }

  Scene scene;
  scene.frame_rate_hz = frame_rate_hz;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    const auto fields = split_csv_line(line);
    std::int64_t frame_id = 0;
    std::int64_t agent_id = 0;
    double x = 0.0;
    double y = 0.0;
    if (fields.size() != 5 || !parse_i64(fields[0], frame_id) || !parse_i64(fields[1], agent_id) ||
        !parse_double(fields[3], x) || !parse_double(fields[4], y)) {
      throw DataError(DataError::Kind::MalformedRow,
                      path + ":" + std::to_string(line_no) + ": malformed row");
    }

    AgentKind kind;
    if (fields[2] == "ped") {
      kind = AgentKind::Pedestrian;
    } else if (fields[2] == "veh") {
      kind = AgentKind::Vehicle;
    } else if (fields[2] == "cyclist") {
      if (cyclist_as == CyclistPolicy::Drop) continue;
      kind = cyclist_as == CyclistPolicy::Vehicle ? AgentKind::Vehicle : AgentKind::Pedestrian;
    } else {
      throw DataError(DataError::Kind::MalformedRow,
                      path + ":" + std::to_string(line_no) + ": unknown agent_type '" + fields[2] + "'");
    }

    if (scene.frames.empty() || scene.frames.back().frame_id != frame_id) {
      if (!scene.frames.empty() && frame_id < scene.frames.back().frame_id) {
        throw DataError(DataError::Kind::NonMonotonicFrames,
                        path + ":" + std::to_string(line_no) + ": frame " + std::to_string(frame_id) +
                            " after frame " + std::to_string(scene.frames.back().frame_id));
      }
      scene.frames.push_back(Frame{frame_id, {}});
    }
    Frame& frame = scene.frames.back();
    if (frame.find(agent_id) != nullptr) {
      throw DataError(DataError::Kind::DuplicateAgentInFrame,
                      path + ":" + std::to_string(line_no) + ": agent " + std::to_string(agent_id) +
                          " appears twice in frame " + std::to_string(frame_id));
    }
    frame.agents.push_back(AgentState{agent_id, kind, Vec2{x, y}, Vec2{}});
  }

  // Contiguity: each agent must occupy a gap-free run of frames.
  std::unordered_map<std::int64_t, std::size_t> last_seen;
  for (std::size_t i = 0; i < scene.frames.size(); ++i) {
    for (const auto& a : scene.frames[i].agents) {
      auto it = last_seen.find(a.agent_id);
      if (it != last_seen.end() && it->second + 1 != i) {
        throw DataError(DataError::Kind::GappedAgent,
                        path + ": agent " + std::to_string(a.agent_id) +
                            " has non-contiguous frames");
      }
      last_seen[a.agent_id] = i;
    }
  }
  return scene;
}

void save_scene(const Scene& scene, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError(DataError::Kind::MissingFile, "cannot write scene file: " + path);
  }
  out << kCanonicalCsvHeader << "\n";
  for (const auto& frame : scene.frames) {
    for (const auto& a : frame.agents) {
      out << frame.frame_id << ',' << a.agent_id << ','
          << (a.kind == AgentKind::Pedestrian ? "ped" : "veh") << ',' << format_double(a.position.x)
          << ',' << format_double(a.position.y) << "\n";
    }
  }
}

Scene derive_velocities(const Scene& scene, std::vector<std::int64_t>* single_frame_warnings) {
  Scene out = scene;
  const double dt = out.dt();

  // agent -> (frame index, state index) in presence order
  std::map<std::int64_t, std::vector<std::pair<std::size_t, std::size_t>>> presence;
  for (std::size_t i = 0; i < out.frames.size(); ++i) {
    for (std::size_t j = 0; j < out.frames[i].agents.size(); ++j) {
      presence[out.frames[i].agents[j].agent_id].emplace_back(i, j);
    }
  }

  for (const auto& [agent_id, locs] : presence) {
    if (locs.size() == 1) {
      out.frames[locs[0].first].agents[locs[0].second].velocity = Vec2{0.0, 0.0};
      if (single_frame_warnings != nullptr) single_frame_warnings->push_back(agent_id);
      continue;
    }
    for (std::size_t k = 1; k < locs.size(); ++k) {
      const Vec2 prev = out.frames[locs[k - 1].first].agents[locs[k - 1].second].position;
      const Vec2 cur = out.frames[locs[k].first].agents[locs[k].second].position;
      out.frames[locs[k].first].agents[locs[k].second].velocity = (1.0 / dt) * (cur - prev);
    }
    // First frame copies the forward difference.
    out.frames[locs[0].first].agents[locs[0].second].velocity =
        out.frames[locs[1].first].agents[locs[1].second].velocity;
  }
  return out;
}

std::vector<SceneWindow> make_windows(const Scene& scene, int t_obs, int t_pred, int stride) {
  if (t_obs < 2 || t_pred < 1 || stride < 1) {
    throw DataError(DataError::Kind::InvalidConfig,
                    "make_windows requires t_obs >= 2, t_pred >= 1, stride >= 1");
  }
  const int total = t_obs + t_pred;
  std::vector<SceneWindow> out;
  if (static_cast<int>(scene.frames.size()) < total) return out;

  for (std::size_t start = 0; start + total <= scene.frames.size();
       start += static_cast<std::size_t>(stride)) {
    SceneWindow w;
    w.window_id = scene.frames[start].frame_id;
    w.t_obs = t_obs;
    w.t_pred = t_pred;
    w.dt = scene.dt();
    w.frames.assign(scene.frames.begin() + start, scene.frames.begin() + start + total);

    // Targets: pedestrians present in every frame of the slice.
    for (const auto& a : w.frames.front().agents) {
      if (a.kind != AgentKind::Pedestrian) continue;
      bool full = true;
      for (int t = 1; t < total && full; ++t) {
        const AgentState* s = w.frames[t].find(a.agent_id);
        full = s != nullptr && s->kind == AgentKind::Pedestrian;
      }
      if (full) w.target_ids.push_back(a.agent_id);
    }
    std::sort(w.target_ids.begin(), w.target_ids.end());
    if (!w.target_ids.empty()) out.push_back(std::move(w));
  }
  return out;
}

SceneSplit split_first_minutes(const Scene& scene, double minutes) {
  if (minutes < 0.0) {
    throw DataError(DataError::Kind::InvalidConfig, "minutes must be >= 0");
  }
  const double cutoff_frames = minutes * 60.0 * scene.frame_rate_hz;
  SceneSplit split;
  split.test.frame_rate_hz = scene.frame_rate_hz;
  split.train.frame_rate_hz = scene.frame_rate_hz;
  for (const auto& f : scene.frames) {
    if (static_cast<double>(f.frame_id) < cutoff_frames) {
      split.test.frames.push_back(f);
    } else {
      split.train.frames.push_back(f);
    }
  }
  return split;
}

}  // namespace colgrid
