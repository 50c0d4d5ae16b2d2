#include "cyclematch/cli.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

#include "cyclematch/errors.hpp"

namespace cyclematch {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& text, const std::string& what) {
  T v{};
  const std::string t = trim(text);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError("bad " + what + " '" + text + "'");
  }
  return v;
}

void put_double(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

ScenarioConfig scenario_from_arg(const std::string& arg) {
  if (arg.size() > 5 && arg.ends_with(".json")) {
    std::ifstream in(arg);
    if (!in) throw ConfigError("cannot open scenario config " + arg);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(arg + ": " + e.what());
    }
    return parse_scenario_config(j);
  }
  return scenario_defaults(arg);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw std::runtime_error("cannot create output directory " + dir.string());
  }
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

ojson run_header(const RunConfig& cfg, const Scene& scene, const std::string& system) {
  ojson h{{"system", system}, {"scene", scene.name}, {"kind", scene.kind}, {"seed", scene.seed}};
  if (system != "baseline") h["engine"] = cfg.engine.to_json();
  return h;
}

struct Means {
  EvalReport sum;
  std::size_t n = 0;
  double id_switch_rate = 0.0;  // fraction of scenes with at least one switch

  void add(const EvalReport& r) {
    sum.accuracy += r.accuracy;
    sum.robustness += r.robustness;
    sum.eao_lite += r.eao_lite;
    sum.auc += r.auc;
    sum.precision += r.precision;
    sum.norm_precision += r.norm_precision;
    sum.ao += r.ao;
    sum.sr50 += r.sr50;
    sum.sr75 += r.sr75;
    sum.id_switches += r.id_switches;
    id_switch_rate += r.id_switches > 0 ? 1.0 : 0.0;
    ++n;
  }

  double get(std::string_view metric) const {
    return n ? metric_value(sum, metric) / double(n) : 0.0;
  }

  ojson to_json() const {
    ojson j;
    for (const char* m : metric_names()) j[m] = get(m);
    j["id_switch_rate"] = n ? id_switch_rate / double(n) : 0.0;
    j["scenes"] = n;
    return j;
  }
};

struct Evaluated {
  EvalReport baseline;
  std::optional<EvalReport> engine;
  double engine_seconds = 0.0;
  int frames = 0;
};

Evaluated evaluate_run(const SceneRun& run) {
  const SimWorld world(run.scene);
  Evaluated e;
  e.baseline = evaluate(run.baseline, world, {}, run.first_frame);
  if (run.engine) e.engine = evaluate(run.engine->boxes, world, {}, run.first_frame);
  e.engine_seconds = run.engine_seconds;
  e.frames = static_cast<int>(run.baseline.size());
  return e;
}

struct Ablation {
  std::string param;
  std::vector<std::string> values;
};

Ablation parse_ablation(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError("--ablate expects param=v1,v2,...");
  Ablation a{trim(text.substr(0, eq)), split(text.substr(eq + 1), ',')};
  for (auto& v : a.values) v = trim(v);
  if (a.values.empty()) throw ConfigError("--ablate needs at least one value");
  if (a.param != "tau" && a.param != "kalman" && a.param != "gate_iou" && a.param != "alpha") {
    throw ConfigError("cannot ablate '" + a.param + "'; choose tau, kalman, gate_iou or alpha");
  }
  return a;
}

EngineConfig with_value(EngineConfig cfg, const std::string& param, const std::string& value) {
  if (param == "tau") {
    cfg.tau = parse_number<int>(value, "tau");
  } else if (param == "kalman") {
    if (value == "on") cfg.kalman_enabled = true;
    else if (value == "off") cfg.kalman_enabled = false;
    else throw ConfigError("kalman ablation values are on/off, got '" + value + "'");
  } else if (param == "gate_iou") {
    cfg.stability_iou_threshold = parse_number<double>(value, "gate_iou");
  } else {
    cfg.alpha = parse_number<double>(value, "alpha");
  }
  cfg.validate();
  return cfg;
}

// --- commands ----------------------------------------------------------------

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  if (cfg.scenarios.empty()) throw ConfigError("simulate needs --scenario");
  const std::vector<Scene> scenes = resolve_scenes(cfg);
  ensure_dir(cfg.out);
  for (const Scene& s : scenes) save_scene(s, cfg.out / (s.name + ".scene.json"));
  out << "wrote " << scenes.size() << " scene files to " << cfg.out.string() << "\n";
  return kExitOk;
}

std::vector<SceneRun> run_all(const std::vector<Scene>& scenes, const EngineConfig& engine,
                              bool baseline_only, int jobs) {
  std::vector<std::optional<SceneRun>> slots(scenes.size());
  parallel_for(scenes.size(), jobs,
               [&](std::size_t i) { slots[i] = run_scene(scenes[i], engine, baseline_only); });
  std::vector<SceneRun> runs;
  runs.reserve(slots.size());
  for (auto& s : slots) runs.push_back(std::move(*s));
  return runs;
}

int cmd_track(const RunConfig& cfg, std::ostream& out) {
  const std::vector<Scene> scenes = resolve_scenes(cfg);
  ensure_dir(cfg.out);
  const std::vector<SceneRun> runs = run_all(scenes, cfg.engine, cfg.baseline_only, cfg.jobs);
  std::size_t unstable = 0;
  for (const SceneRun& r : runs) {
    {
      auto f = open_out(cfg.out / (r.scene.name + ".baseline.csv"));
      write_boxes_csv(f, run_header(cfg, r.scene, "baseline"), r.first_frame, r.baseline);
    }
    if (r.engine) {
      auto f = open_out(cfg.out / (r.scene.name + ".engine.csv"));
      write_boxes_csv(f, run_header(cfg, r.scene, "engine"), r.first_frame, r.engine->boxes);
      auto l = open_out(cfg.out / (r.scene.name + ".engine.log.jsonl"));
      write_log_jsonl(l, r.engine->log);
      for (const DecisionRecord& rec : r.engine->log) unstable += rec.gate == Gate::Unstable;
    }
  }
  out << "tracked " << runs.size() << " scenes into " << cfg.out.string();
  if (!cfg.baseline_only) out << " (" << unstable << " gate-fired frames)";
  out << "\n";
  return kExitOk;
}

SceneRun load_run(const fs::path& dir, const Scene& scene, bool baseline_only) {
  SceneRun run;
  run.scene = scene;
  const ObjectSpec& target = scene.object(scene.target_id);
  const int expected = target.last_frame - target.first_frame + 1;
  auto read = [&](const std::string& system) {
    const fs::path p = dir / (scene.name + "." + system + ".csv");
    auto [first, boxes] = read_boxes_csv(p);
    if (first != target.first_frame || static_cast<int>(boxes.size()) != expected) {
      throw std::runtime_error(p.string() + " does not match scene " + scene.name + " (frames " +
                               std::to_string(first) + "+" + std::to_string(boxes.size()) +
                               ", expected " + std::to_string(target.first_frame) + "+" +
                               std::to_string(expected) + ")");
    }
    return boxes;
  };
  run.first_frame = target.first_frame;
  run.baseline = read("baseline");
  if (!baseline_only) run.engine = SequenceResult{read("engine"), {}};
  return run;
}

int cmd_evaluate(const RunConfig& cfg, const std::optional<fs::path>& runs_dir,
                 const std::vector<std::string>& ablate, std::ostream& out) {
  const std::vector<Scene> scenes = resolve_scenes(cfg);
  std::vector<Ablation> ablations;
  for (const std::string& a : ablate) ablations.push_back(parse_ablation(a));
  ensure_dir(cfg.out);

  std::vector<SceneRun> runs;
  if (runs_dir) {
    for (const Scene& s : scenes) runs.push_back(load_run(*runs_dir, s, cfg.baseline_only));
  } else {
    runs = run_all(scenes, cfg.engine, cfg.baseline_only, cfg.jobs);
  }

  std::vector<Evaluated> evals(runs.size());
  parallel_for(runs.size(), cfg.jobs, [&](std::size_t i) { evals[i] = evaluate_run(runs[i]); });

  ojson report;
  report["config"] = cfg.to_json();
  ojson per_scene = ojson::array();
  Means base_mean, eng_mean;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    ojson row{{"scene", runs[i].scene.name}, {"baseline", evals[i].baseline.to_json()}};
    base_mean.add(evals[i].baseline);
    if (evals[i].engine) {
      row["engine"] = evals[i].engine->to_json();
      eng_mean.add(*evals[i].engine);
    }
    per_scene.push_back(std::move(row));
  }
  report["scenes"] = std::move(per_scene);
  report["mean"] = {{"baseline", base_mean.to_json()}};
  if (!cfg.baseline_only) report["mean"]["engine"] = eng_mean.to_json();

  {
    auto f = open_out(cfg.out / "comparison.csv");
    f << "scene,metric,baseline,engine,delta\n";
    auto emit = [&](const std::string& scene, const char* metric, double b, std::optional<double> e) {
      std::string line = scene + "," + metric + ",";
      put_double(line, b);
      line += ",";
      if (e) put_double(line, *e);
      line += ",";
      if (e) put_double(line, *e - b);
      f << line << "\n";
    };
    for (std::size_t i = 0; i < runs.size(); ++i) {
      for (const char* m : metric_names()) {
        std::optional<double> e;
        if (evals[i].engine) e = metric_value(*evals[i].engine, m);
        emit(runs[i].scene.name, m, metric_value(evals[i].baseline, m), e);
      }
    }
    for (const char* m : metric_names()) {
      std::optional<double> e;
      if (!cfg.baseline_only) e = eng_mean.get(m);
      emit("mean", m, base_mean.get(m), e);
    }
  }

  out << "metric          baseline    engine      delta\n";
  for (const char* m : metric_names()) {
    char line[128];
    const double b = base_mean.get(m);
    if (cfg.baseline_only) {
      std::snprintf(line, sizeof(line), "%-15s %-11.4f\n", m, b);
    } else {
      const double e = eng_mean.get(m);
      std::snprintf(line, sizeof(line), "%-15s %-11.4f %-11.4f %+.4f\n", m, b, e, e - b);
    }
    out << line;
  }

  if (!ablations.empty()) {
    ojson ablation_json = ojson::array();
    auto f = open_out(cfg.out / "ablation.csv");
    f << "param,value";
    for (const char* m : metric_names()) f << "," << m;
    f << ",id_switch_rate,ms_per_frame\n";
    for (const Ablation& a : ablations) {
      for (const std::string& v : a.values) {
        const EngineConfig ec = with_value(cfg.engine, a.param, v);
        const std::vector<SceneRun> ab_runs = run_all(scenes, ec, false, cfg.jobs);
        Means mean;
        double seconds = 0.0;
        long long frames = 0;
        for (const SceneRun& r : ab_runs) {
          const Evaluated e = evaluate_run(r);
          mean.add(*e.engine);
          seconds += e.engine_seconds;
          frames += e.frames;
        }
        const double ms = frames ? 1000.0 * seconds / double(frames) : 0.0;
        std::string line = a.param + "," + v;
        for (const char* m : metric_names()) {
          line += ",";
          put_double(line, mean.get(m));
        }
        line += ",";
        put_double(line, mean.to_json()["id_switch_rate"].get<double>());
        line += ",";
        put_double(line, ms);
        f << line << "\n";
        ojson row = mean.to_json();
        row["param"] = a.param;
        row["value"] = v;
        row["ms_per_frame"] = ms;
        ablation_json.push_back(std::move(row));
        out << "ablation " << a.param << "=" << v << ": robustness " << mean.get("robustness")
            << ", auc " << mean.get("auc") << ", " << ms << " ms/frame\n";
      }
    }
    report["ablation"] = std::move(ablation_json);
  }

  auto f = open_out(cfg.out / "report.json");
  f << report.dump(2) << "\n";
  return kExitOk;
}

void add_source_options(CLI::App* cmd, RunConfig& cfg, std::string& seeds, bool scene_inputs) {
  cmd->add_option("--scenario", cfg.scenarios,
                  "Scenario kind(s) or config JSON path(s), comma separated")
      ->delimiter(',')
      ->envname("CYCLEMATCH_SCENARIO");
  cmd->add_option("--seeds", seeds, "Seed list, e.g. 0-99 or 1,5,9")->envname("CYCLEMATCH_SEEDS");
  cmd->add_option("--out", cfg.out, "Output directory")->envname("CYCLEMATCH_OUT");
  if (scene_inputs) {
    cmd->add_option("--mot", cfg.mot, "MOT ground-truth file to replay");
    cmd->add_option("--scene", cfg.scene_files, "Scene file(s) written by simulate");
  }
}

void add_engine_options(CLI::App* cmd, RunConfig& cfg) {
  EngineConfig& e = cfg.engine;
  cmd->add_option("--tau", e.tau, "Backtracking length")->envname("CYCLEMATCH_TAU");
  cmd->add_option("--alpha", e.alpha, "Confidence ratio filter")->envname("CYCLEMATCH_ALPHA");
  cmd->add_option("--nms-iou", e.nms_iou, "Soft-NMS IoU threshold")->envname("CYCLEMATCH_NMS_IOU");
  cmd->add_option("--nms-sigma", e.nms_sigma, "Soft-NMS Gaussian width")->envname("CYCLEMATCH_NMS_SIGMA");
  cmd->add_option("--gate-iou", e.stability_iou_threshold, "Stability gate IoU threshold")
      ->envname("CYCLEMATCH_GATE_IOU");
  cmd->add_flag("--no-kalman{false}", e.kalman_enabled, "Disable the motion candidate")
      ->envname("CYCLEMATCH_NO_KALMAN");
  cmd->add_flag("--baseline-only", cfg.baseline_only, "Run only the argmax baseline")
      ->envname("CYCLEMATCH_BASELINE_ONLY");
  cmd->add_option("--jobs", cfg.jobs, "Worker threads")->envname("CYCLEMATCH_JOBS");
}

}  // namespace

// -----------------------------------------------------------------------------

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const std::string& raw : split(text, ',')) {
    const std::string part = trim(raw);
    if (part.empty()) continue;
    const auto dash = part.find('-');
    if (dash == std::string::npos) {
      out.push_back(parse_number<std::uint64_t>(part, "seed"));
      continue;
    }
    const auto lo = parse_number<std::uint64_t>(part.substr(0, dash), "seed");
    const auto hi = parse_number<std::uint64_t>(part.substr(dash + 1), "seed");
    if (hi < lo) throw ConfigError("seed range '" + part + "' is reversed");
    if (hi - lo > 1000000) throw ConfigError("seed range '" + part + "' is too large");
    for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
  }
  if (out.empty()) throw ConfigError("seed list is empty");
  return out;
}

void RunConfig::validate() const {
  const int sources = (!scenarios.empty()) + mot.has_value() + (!scene_files.empty());
  if (sources != 1) {
    throw ConfigError("give exactly one input source: --scenario, --mot or --scene");
  }
  if (seeds.empty()) throw ConfigError("seed list is empty");
  if (jobs < 1) throw ConfigError("--jobs must be at least 1");
  engine.validate();
}

nlohmann::ordered_json RunConfig::to_json() const {
  ojson j;
  if (!scenarios.empty()) {
    ojson sc = ojson::array();
    for (const std::string& s : scenarios) sc.push_back(scenario_from_arg(s).to_json());
    j["scenarios"] = std::move(sc);
  }
  if (mot) j["mot"] = mot->string();
  if (!scene_files.empty()) {
    ojson files = ojson::array();
    for (const auto& p : scene_files) files.push_back(p.string());
    j["scene_files"] = std::move(files);
  }
  j["seeds"] = seeds;
  j["engine"] = engine.to_json();
  j["baseline_only"] = baseline_only;
  return j;
}

std::vector<Scene> resolve_scenes(const RunConfig& cfg) {
  cfg.validate();
  std::vector<Scene> scenes;
  if (!cfg.scenarios.empty()) {
    for (const std::string& arg : cfg.scenarios) {
      const ScenarioConfig sc = scenario_from_arg(arg);
      for (std::uint64_t seed : cfg.seeds) scenes.push_back(generate_scene(sc, seed));
    }
  } else if (cfg.mot) {
    std::vector<std::string> warnings;
    scenes.push_back(load_mot(*cfg.mot, cfg.seeds.front(), 16, &warnings));
    for (const std::string& w : warnings) std::cerr << "warning: " << cfg.mot->string() << ": " << w << "\n";
  } else {
    for (const fs::path& p : cfg.scene_files) scenes.push_back(load_scene(p));
  }
  return scenes;
}

SceneRun run_scene(const Scene& scene, const EngineConfig& cfg, bool baseline_only) {
  cfg.validate();
  auto world = std::make_shared<const SimWorld>(scene);
  const MockTracker tracker(world);
  const ObjectSpec& target = scene.object(scene.target_id);
  const int first = std::max(0, target.first_frame);
  const int last = std::min(scene.length - 1, target.last_frame);
  const BBox b0 = world->target_box(first);

  SceneRun run;
  run.scene = scene;
  run.first_frame = first;
  run.baseline = run_baseline(tracker, first, last, b0);
  if (!baseline_only) {
    const auto t0 = std::chrono::steady_clock::now();
    run.engine = run_sequence(tracker, first, last, b0, cfg);
    run.engine_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  return run;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (!stop.load()) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) break;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          stop = true;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

void write_boxes_csv(std::ostream& out, const nlohmann::ordered_json& config, int first_frame,
                     const std::vector<BBox>& boxes) {
  out << "# config: " << config.dump() << "\n";
  out << "frame,x,y,w,h\n";
  std::string line;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    line = std::to_string(first_frame + static_cast<int>(i));
    for (double v : {boxes[i].x(), boxes[i].y(), boxes[i].w(), boxes[i].h()}) {
      line += ",";
      put_double(line, v);
    }
    out << line << "\n";
  }
}

std::pair<int, std::vector<BBox>> read_boxes_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<BBox> boxes;
  int first = 0;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty() || text[0] == '#' || text.rfind("frame,", 0) == 0) continue;
    const auto fields = split(text, ',');
    if (fields.size() != 5) throw ParseError(line_no, path.string() + ": expected frame,x,y,w,h");
    try {
      const int frame = parse_number<int>(fields[0], "frame");
      if (boxes.empty()) first = frame;
      if (frame != first + static_cast<int>(boxes.size())) {
        throw ParseError(line_no, path.string() + ": frames are not consecutive");
      }
      boxes.emplace_back(parse_number<double>(fields[1], "x"), parse_number<double>(fields[2], "y"),
                         parse_number<double>(fields[3], "w"), parse_number<double>(fields[4], "h"));
    } catch (const ConfigError& e) {
      throw ParseError(line_no, path.string() + ": " + e.what());
    } catch (const ContractError& e) {
      throw ParseError(line_no, path.string() + ": " + e.what());
    }
  }
  if (boxes.empty()) throw ParseError(0, path.string() + ": no boxes");
  return {first, std::move(boxes)};
}

void write_log_jsonl(std::ostream& out, const std::vector<DecisionRecord>& log) {
  for (const DecisionRecord& r : log) out << r.to_json().dump() << "\n";
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"cyclematch: neighbor-matching post-processing for single object trackers"};
  app.name("cyclematch");
  app.require_subcommand(1);

  RunConfig cfg;
  std::string seeds = "0";
  std::optional<fs::path> runs_dir;
  std::vector<std::string> ablate;

  CLI::App* sim = app.add_subcommand("simulate", "Generate scene files");
  add_source_options(sim, cfg, seeds, false);

  CLI::App* track = app.add_subcommand("track", "Run baseline and engine, write boxes and decision logs");
  add_source_options(track, cfg, seeds, true);
  add_engine_options(track, cfg);

  CLI::App* eval = app.add_subcommand("evaluate", "Compute metrics, comparisons and ablations");
  add_source_options(eval, cfg, seeds, true);
  add_engine_options(eval, cfg);
  eval->add_option("--runs", runs_dir, "Directory of track outputs to score instead of re-running");
  eval->add_option("--ablate", ablate, "Sweep, e.g. tau=1,3,9,27 or kalman=on,off")
      ->envname("CYCLEMATCH_ABLATE");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    cfg.seeds = parse_seeds(seeds);
    if (sim->parsed()) return cmd_simulate(cfg, out);
    if (track->parsed()) return cmd_track(cfg, out);
    return cmd_evaluate(cfg, runs_dir, ablate, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return run_cli(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace cyclematch
