#include "cli.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "turnkit/error.hpp"
#include "turnkit/pipeline.hpp"
#include "turnkit/svg.hpp"

namespace turnkit::cli {

namespace fs = std::filesystem;

namespace {

struct Failure {
  int code;
  std::string message;
};

std::string read_file(const std::string& path, int missing_code, std::string_view what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{missing_code, fmt::format("cannot read {} '{}'", what, path)};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Failure{kUsage, fmt::format("cannot write '{}'", path)};
  out << content;
  if (!out) throw Failure{kUsage, fmt::format("failed writing '{}'", path)};
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-")
    out << content;
  else
    write_file(path, content);
}

std::string truth_path_for(const std::string& walk_csv) {
  fs::path p(walk_csv);
  return (p.parent_path() / (p.stem().string() + ".truth.json")).string();
}

// Expands --config FILE: every key of the JSON object becomes --key VALUE unless
// the flag was given explicitly.
std::vector<std::string> merge_config(const std::vector<std::string>& args) {
  auto it = std::find(args.begin(), args.end(), "--config");
  if (it == args.end()) return args;
  if (it + 1 == args.end()) throw Failure{kUsage, "--config needs a file"};
  const std::string path = *(it + 1);
  std::vector<std::string> merged(args.begin(), it);
  merged.insert(merged.end(), it + 2, args.end());

  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(read_file(path, kMissingCompanion, "config file"));
  } catch (const nlohmann::json::exception& ex) {
    throw Failure{kInputParse, fmt::format("config '{}': {}", path, ex.what())};
  }
  if (!cfg.is_object()) throw Failure{kInputParse, "config file must hold a JSON object"};
  for (const auto& [key, value] : cfg.items()) {
    const std::string flag = "--" + key;
    const bool explicit_flag = std::any_of(merged.begin(), merged.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (explicit_flag) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) merged.push_back(flag);
    } else if (value.is_string()) {
      merged.push_back(flag);
      merged.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      merged.push_back(flag);
      merged.push_back(value.dump());
    } else {
      throw Failure{kInputParse, fmt::format("config key '{}' must be a string, number or boolean", key)};
    }
  }
  return merged;
}

WalkInput load_walk(const std::string& path) {
  const auto text = read_file(path, kUsage, "walk file");
  try {
    return walk_from_log(parse_imu_csv(text));
  } catch (const ParseError& e) {
    throw Failure{kInputParse, fmt::format("{}: {}", path, e.what())};
  } catch (const Error& e) {
    throw Failure{kInputParse, fmt::format("{}: {}", path, e.what())};
  }
}

std::vector<StepSpan> load_truth(const std::string& path) {
  const auto text = read_file(path, kMissingCompanion, "truth sidecar");
  try {
    return parse_truth_json(text);
  } catch (const Error& e) {
    throw Failure{kInputParse, fmt::format("{}: {}", path, e.what())};
  }
}

struct Corpus {
  std::vector<std::string> files;
  std::vector<WalkInput> walks;
  std::vector<std::vector<StepSpan>> truth;
};

Corpus load_corpus(const std::string& dir) {
  Corpus c;
  const fs::path manifest = fs::path(dir) / "manifest.json";
  if (fs::exists(manifest)) {
    try {
      const auto j = nlohmann::json::parse(read_file(manifest.string(), kMissingCompanion, "manifest"));
      for (const auto& w : j.at("walks")) c.files.push_back((fs::path(dir) / w.at("csv").get<std::string>()).string());
    } catch (const nlohmann::json::exception& ex) {
      throw Failure{kInputParse, fmt::format("{}: {}", manifest.string(), ex.what())};
    }
  } else {
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(dir, ec))
      if (entry.path().extension() == ".csv") c.files.push_back(entry.path().string());
    if (ec) throw Failure{kUsage, fmt::format("cannot list corpus directory '{}'", dir)};
    std::sort(c.files.begin(), c.files.end());
  }
  if (c.files.empty()) throw Failure{kUsage, fmt::format("no walks found in '{}'", dir)};
  for (const auto& f : c.files) {
    c.walks.push_back(load_walk(f));
    c.truth.push_back(load_truth(truth_path_for(f)));
  }
  return c;
}

// Flags shared by detect and compare.
struct DetectorFlags {
  double tau = 22.5;
  std::size_t merge_gap = 1;
  std::string model;
  std::string legacy_model;
  double beta = -1.0;
  std::size_t min_segment = 2;
  double contamination = 0.05;
  std::size_t trees = 100;
  std::size_t subsample = 256;
  std::uint64_t seed = 0;
  double obs_epsilon = -1.0;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--tau", tau, "Threshold on the per-step yaw change, degrees")->capture_default_str();
    cmd->add_option("--merge-gap", merge_gap, "Unflagged steps allowed inside one merged turn")->capture_default_str();
    cmd->add_option("--model", model, "HMM model JSON (default: built-in published tables)");
    cmd->add_option("--legacy-model", legacy_model, "Legacy three-step model JSON");
    cmd->add_option("--beta", beta, "PELT penalty (default: 2 sigma^2 ln n)");
    cmd->add_option("--min-segment", min_segment, "PELT minimum segment length")->capture_default_str();
    cmd->add_option("--contamination", contamination, "Isolation forest contamination")->capture_default_str();
    cmd->add_option("--trees", trees, "Isolation forest tree count")->capture_default_str();
    cmd->add_option("--subsample", subsample, "Isolation forest subsample size")->capture_default_str();
    cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    cmd->add_option("--obs-epsilon", obs_epsilon, "Override the HMM observation confusion probability");
  }

  DetectorSettings settings() const {
    DetectorSettings s;
    s.threshold.tau = tau;
    s.threshold.merge_gap = merge_gap;
    if (!model.empty()) {
      try {
        s.hmm = parse_hmm_model(read_file(model, kMissingCompanion, "model file"));
      } catch (const Error& e) {
        throw Failure{kInputParse, fmt::format("{}: {}", model, e.what())};
      }
    }
    if (obs_epsilon >= 0.0) s.hmm.obs_epsilon = obs_epsilon;
    if (!legacy_model.empty()) {
      try {
        s.legacy = parse_legacy_model(read_file(legacy_model, kMissingCompanion, "legacy model"));
      } catch (const Error& e) {
        throw Failure{kInputParse, fmt::format("{}: {}", legacy_model, e.what())};
      }
    }
    s.pelt.penalty_beta = beta;
    s.pelt.min_segment = min_segment;
    s.forest.contamination = contamination;
    s.forest.tree_count = trees;
    s.forest.subsample_size = subsample;
    s.forest.seed = seed;
    try {
      s.threshold.validate();
      s.forest.validate();
      if (min_segment < 1) fail(ErrorKind::invalid_argument, "min-segment must be >= 1");
    } catch (const Error& e) {
      throw Failure{kUsage, e.what()};
    }
    return s;
  }
};

int cmd_synth(int count, std::uint64_t seed, double noise, const std::string& out_dir, std::ostream& err) {
  if (count < 1) throw Failure{kUsage, "--count must be >= 1"};
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw Failure{kUsage, fmt::format("cannot create directory '{}'", out_dir)};

  CorpusTemplate tmpl;
  tmpl.yaw_noise_sigma = noise;
  const auto walks = generate_corpus(count, tmpl, seed);
  nlohmann::ordered_json manifest;
  manifest["seed"] = seed;
  manifest["count"] = count;
  manifest["yaw_noise_sigma"] = noise;
  manifest["checksum"] = fmt::format("{:016x}", corpus_checksum(walks));
  auto list = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < walks.size(); ++i) {
    const std::string stem = fmt::format("walk_{:04d}", i);
    write_file((fs::path(out_dir) / (stem + ".csv")).string(), write_imu_csv(synthesize_imu(walks[i])));
    write_file((fs::path(out_dir) / (stem + ".truth.json")).string(), write_truth_json(walks[i].truth));
    nlohmann::ordered_json w;
    w["csv"] = stem + ".csv";
    w["truth"] = stem + ".truth.json";
    w["steps"] = walks[i].yaw.size();
    w["turns"] = walks[i].truth.size();
    list.push_back(std::move(w));
  }
  manifest["walks"] = std::move(list);
  write_file((fs::path(out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
  err << fmt::format("wrote {} walks to {}\n", count, out_dir);
  return kOk;
}

Method require_method(const std::string& name) {
  const auto m = parse_method(name);
  if (!m) throw Failure{kUsage, fmt::format("unknown method '{}'", name)};
  return *m;
}

std::vector<TurnEvent> detect_or_fail(Method m, const WalkInput& walk, const DetectorSettings& s) {
  try {
    return run_detector(m, walk, s);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::invalid_argument) throw Failure{kUsage, e.what()};
    throw Failure{kInputParse, e.what()};
  }
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Turn detection for pedestrian inertial walks", "turnkit"};
  app.require_subcommand(1);

  // synth
  int synth_count = 10;
  std::uint64_t synth_seed = 42;
  double synth_noise = 3.0;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with ground truth");
  synth->add_option("--count", synth_count, "Number of walks")->capture_default_str();
  synth->add_option("--seed", synth_seed, "Corpus seed")->capture_default_str();
  synth->add_option("--noise", synth_noise, "Yaw noise sigma on straight steps, degrees")->capture_default_str();
  synth->add_option("--out", synth_out, "Output directory")->required();

  // steps
  std::string steps_in, steps_out;
  auto* steps = app.add_subcommand("steps", "Detect steps and write the step CSV");
  steps->add_option("input", steps_in, "IMU CSV")->required();
  steps->add_option("--out", steps_out, "Step CSV (default stdout)");

  // detect
  std::string detect_method, detect_in, detect_out, detect_forest;
  DetectorFlags detect_flags;
  auto* detect = app.add_subcommand("detect", "Run one turn detector on a walk");
  detect->add_option("--method", detect_method, "threshold|threshold-merged|hmm-legacy|hmm-block|pelt|pelt-if")
      ->required();
  detect->add_option("input", detect_in, "IMU CSV")->required();
  detect->add_option("--out", detect_out, "Events JSON (default stdout)");
  detect->add_option("--save-forest", detect_forest, "Write the fitted isolation forest (pelt-if)");
  detect_flags.add_to(detect);

  // train
  std::string train_corpus, train_hmm_out, train_legacy_out;
  int train_clusters = 14;
  double train_alpha = 1.0;
  auto* train = app.add_subcommand("train", "Estimate HMM parameters from a labelled corpus");
  train->add_option("--corpus", train_corpus, "Corpus directory")->required();
  train->add_option("--out-hmm", train_hmm_out, "Block HMM model JSON");
  train->add_option("--out-legacy", train_legacy_out, "Legacy three-step model JSON");
  train->add_option("--clusters", train_clusters, "Legacy value count")->capture_default_str();
  train->add_option("--alpha", train_alpha, "Additive smoothing")->capture_default_str();

  // eval
  std::string eval_events, eval_walk, eval_truth, eval_out, eval_csv, eval_plot, eval_method;
  std::size_t eval_tolerance = 2;
  auto* eval = app.add_subcommand("eval", "Score detected events against ground truth");
  eval->add_option("--events", eval_events, "Events JSON")->required();
  eval->add_option("--walk", eval_walk, "Walk IMU CSV (locates the truth sidecar; needed for --plot)");
  eval->add_option("--truth", eval_truth, "Truth sidecar JSON");
  eval->add_option("--method", eval_method, "Method label for the report");
  eval->add_option("--tolerance", eval_tolerance, "Matching tolerance, steps")->capture_default_str();
  eval->add_option("--out", eval_out, "Report JSON (default stdout)");
  eval->add_option("--csv", eval_csv, "Report CSV");
  eval->add_option("--plot", eval_plot, "Trajectory SVG");

  // compare
  std::string cmp_corpus, cmp_out, cmp_csv;
  std::size_t cmp_tolerance = 2;
  DetectorFlags cmp_flags;
  auto* compare = app.add_subcommand("compare", "Evaluate all six detectors on a corpus");
  compare->add_option("--corpus", cmp_corpus, "Corpus directory")->required();
  compare->add_option("--tolerance", cmp_tolerance, "Matching tolerance, steps")->capture_default_str();
  compare->add_option("--out", cmp_out, "Report JSON (default stdout)");
  compare->add_option("--csv", cmp_csv, "Report CSV");
  cmp_flags.add_to(compare);

  try {
    const auto args = merge_config(raw_args);
    try {
      std::vector<std::string> reversed(args.rbegin(), args.rend());
      app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return kOk;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return kOk;
    } catch (const CLI::ParseError& e) {
      err << "error: " << e.what() << "\n";
      return kUsage;
    }

    if (*synth) return cmd_synth(synth_count, synth_seed, synth_noise, synth_out, err);

    if (*steps) {
      if (!steps_out.empty() && fs::path(steps_out) == fs::path(steps_in)) throw Failure{kUsage, "output equals input"};
      const auto walk = load_walk(steps_in);
      emit(steps_out, write_step_csv(walk.steps), out);
      return kOk;
    }

    if (*detect) {
      const Method m = require_method(detect_method);
      if (!detect_out.empty() && fs::path(detect_out) == fs::path(detect_in))
        throw Failure{kUsage, "output equals input"};
      const auto settings = detect_flags.settings();
      if (m == Method::hmm_legacy && !settings.legacy)
        throw Failure{kUsage, "hmm-legacy needs --legacy-model (see the train command)"};
      const auto walk = load_walk(detect_in);
      std::vector<TurnEvent> events;
      if (walk.yaw.size() >= 2) events = detect_or_fail(m, walk, settings);
      if (!detect_forest.empty() && m == Method::pelt_if && walk.features.size() >= 2)
        write_file(detect_forest, write_forest_json(fit_iforest(walk.features, settings.forest)));
      emit(detect_out, write_events_json(events), out);
      return kOk;
    }

    if (*train) {
      if (train_hmm_out.empty() && train_legacy_out.empty())
        throw Failure{kUsage, "nothing to do: give --out-hmm and/or --out-legacy"};
      const auto corpus = load_corpus(train_corpus);
      const FilterConfig filter;
      try {
        if (!train_hmm_out.empty())
          write_file(train_hmm_out, write_hmm_model(train_block_hmm(corpus.walks, corpus.truth, filter, train_alpha)));
        if (!train_legacy_out.empty())
          write_file(train_legacy_out, write_legacy_model(train_legacy(corpus.walks, filter, train_clusters)));
      } catch (const Error& e) {
        throw Failure{e.kind() == ErrorKind::invalid_argument ? kUsage : kInputParse, e.what()};
      }
      return kOk;
    }

    if (*eval) {
      std::string truth_path = eval_truth;
      if (truth_path.empty()) {
        if (eval_walk.empty()) throw Failure{kUsage, "give --truth or --walk to locate the truth sidecar"};
        truth_path = truth_path_for(eval_walk);
      }
      const auto truth = load_truth(truth_path);
      std::vector<TurnEvent> events;
      try {
        events = parse_events_json(read_file(eval_events, kMissingCompanion, "events file"));
      } catch (const Error& e) {
        throw Failure{kInputParse, fmt::format("{}: {}", eval_events, e.what())};
      }
      Method method = events.empty() ? Method::threshold : events.front().method;
      if (!eval_method.empty()) method = require_method(eval_method);
      const MatchConfig match{eval_tolerance};
      MethodReport row{method, metrics(match_events(std::span<const TurnEvent>(events), truth, match)), {}};
      const std::vector<MethodReport> rows{row};
      emit(eval_out, write_report_json(rows), out);
      if (!eval_csv.empty()) write_file(eval_csv, write_report_csv(rows));
      if (!eval_plot.empty()) {
        if (eval_walk.empty()) throw Failure{kUsage, "--plot needs --walk"};
        const auto walk = load_walk(eval_walk);
        std::vector<std::array<double, 2>> pos;
        for (const auto& s : walk.steps) pos.push_back(s.pos);
        write_file(eval_plot, render_trajectory_svg(pos, events));
      }
      return kOk;
    }

    if (*compare) {
      auto settings = cmp_flags.settings();
      const auto corpus = load_corpus(cmp_corpus);
      if (!settings.legacy) {
        try {
          settings.legacy = train_legacy(corpus.walks, settings.filter);
        } catch (const Error& e) {
          throw Failure{kInputParse, e.what()};
        }
      }
      std::vector<MethodReport> rows;
      try {
        rows = compare_methods(corpus.walks, corpus.truth, settings, kAllMethods, MatchConfig{cmp_tolerance});
      } catch (const Error& e) {
        throw Failure{e.kind() == ErrorKind::invalid_argument ? kUsage : kInputParse, e.what()};
      }
      emit(cmp_out, write_report_json(rows), out);
      if (!cmp_csv.empty()) write_file(cmp_csv, write_report_csv(rows));
      return kOk;
    }
  } catch (const Failure& f) {
    err << "error: " << f.message << "\n";
    return f.code;
  }
  return kUsage;
}

}  // namespace turnkit::cli
