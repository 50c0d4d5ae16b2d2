#pragma once

// Command-line front end: simulate scenes, track them with the baseline and
// the engine, evaluate and ablate. Everything below `run_cli` is exposed so
// tests can drive the same code paths without spawning processes.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cyclematch/engine.hpp"
#include "cyclematch/evalkit.hpp"
#include "cyclematch/simworld.hpp"

namespace cyclematch {

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

/// Parses "0-9", "1,4,7" or a mix such as "0-3,10". Throws ConfigError.
std::vector<std::uint64_t> parse_seeds(const std::string& text);

struct RunConfig {
  // Exactly one input source.
  std::vector<std::string> scenarios;               // kind names or config JSON paths
  std::optional<std::filesystem::path> mot;
  std::vector<std::filesystem::path> scene_files;

  std::vector<std::uint64_t> seeds{0};
  EngineConfig engine;
  bool baseline_only = false;
  int jobs = 1;
  std::filesystem::path out = "out";

  void validate() const;
  nlohmann::ordered_json to_json() const;
};

/// Scenes named by the config, in a deterministic order.
std::vector<Scene> resolve_scenes(const RunConfig& cfg);

struct SceneRun {
  Scene scene;
  int first_frame = 0;  // frame of the initial box
  std::vector<BBox> baseline;
  std::optional<SequenceResult> engine;
  double engine_seconds = 0.0;
};

/// Runs baseline argmax and, unless baseline_only, the engine on one scene,
/// initialised from the target's true box at its first frame.
SceneRun run_scene(const Scene& scene, const EngineConfig& cfg, bool baseline_only = false);

/// Runs `fn(i)` for i in [0, n) on `jobs` worker threads. The first
/// exception thrown by any task is rethrown after all workers stop.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

void write_boxes_csv(std::ostream& out, const nlohmann::ordered_json& config, int first_frame,
                     const std::vector<BBox>& boxes);
/// Reads a file written by write_boxes_csv; returns (first frame, boxes).
std::pair<int, std::vector<BBox>> read_boxes_csv(const std::filesystem::path& path);
void write_log_jsonl(std::ostream& out, const std::vector<DecisionRecord>& log);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cyclematch
