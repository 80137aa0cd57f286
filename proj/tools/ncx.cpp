#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <optional>

#include "ncx/error.hpp"
#include "ncx/feature_stats.hpp"
#include "ncx/pipeline.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Configuration file (dotted key = value lines)");
  cmd->add_option("--seed", c.seed, "Master seed; overrides the config");
  cmd->add_option("--out", c.out, "Output directory; overrides output.dir");
  cmd->add_option("--threads", c.threads, "Worker threads (default: NCX_THREADS, then config)");
}

ncx::PipelineConfig resolve(const Common& c) {
  auto cfg = c.config.empty() ? ncx::PipelineConfig{} : ncx::PipelineConfig::load(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out.empty()) cfg.output_directory = c.out;
  if (c.threads) {
    cfg.threads = *c.threads;
  } else if (const char* env = std::getenv("NCX_THREADS")) {
    try {
      cfg.threads = static_cast<unsigned>(std::stoul(env));
    } catch (const std::exception&) {
      ncx::fail(ncx::ErrorCode::ConfigInvalid, "NCX_THREADS: expected a positive integer");
    }
  }
  if (cfg.threads == 0) ncx::fail(ncx::ErrorCode::ConfigInvalid, "runtime.threads: must be positive");
  return cfg;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) ncx::fail(ncx::ErrorCode::IoFailure, "cannot write " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EEG complexity features and subject classification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ncx::kVersion));

  Common common;
  std::string data_dir, features_path, results_dir, classifier = "logistic", feature_set = "HFD+SampEn";

  auto* synth = app.add_subcommand("synth", "Generate a calibrated surrogate cohort");
  add_common(synth, common);

  auto* extract = app.add_subcommand("extract", "Epoch recordings and compute HFD/SampEn features");
  add_common(extract, common);
  extract->add_option("--data", data_dir, "Recording directory with labels.csv (default: data.directory)");

  auto* train = app.add_subcommand("train", "Fit one classifier on a features CSV and save it as JSON");
  add_common(train, common);
  train->add_option("--features", features_path, "Features CSV")->required();
  train->add_option("--classifier", classifier, "Classifier name");
  train->add_option("--feature-set", feature_set, "HFD, SampEn or HFD+SampEn");

  auto* evaluate = app.add_subcommand("evaluate", "Cross-validate the experiment grid on a features CSV");
  add_common(evaluate, common);
  evaluate->add_option("--features", features_path, "Features CSV")->required();

  auto* report = app.add_subcommand("report", "Write report files from a results directory");
  add_common(report, common);
  report->add_option("--results", results_dir, "Directory holding results.json")->required();

  auto* run = app.add_subcommand("run", "Full pipeline: data, features, grids, reports");
  add_common(run, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  const auto* cmd = app.get_subcommands().front();
  const std::string stage = cmd->get_name();
  try {
    auto cfg = resolve(common);
    const std::filesystem::path out = cfg.output_directory;

    if (cmd == synth) {
      cfg.validate();
      const auto result = ncx::synth_stage(cfg);
      ncx::write_dataset(result, cfg, out);
      std::printf("wrote %zu recordings to %s\n", result.data.recordings.size(), out.c_str());
    } else if (cmd == extract) {
      if (!data_dir.empty()) {
        cfg.source = ncx::DataSource::Directory;
        cfg.data_directory = data_dir;
      }
      if (cfg.source != ncx::DataSource::Directory) {
        ncx::fail(ncx::ErrorCode::ConfigInvalid, "data.directory: extract needs a recording directory");
      }
      cfg.validate();
      const auto data = ncx::load_dataset(cfg.data_directory, cfg.data_format, cfg.validate_montage);
      const auto fm = ncx::extract_stage(cfg, data);
      std::filesystem::create_directories(out);
      ncx::write_features_csv(fm, out / "features.csv");
      std::printf("wrote %zu x %zu features to %s\n", fm.rows(), fm.cols(), (out / "features.csv").c_str());
    } else if (cmd == train) {
      cfg.validate();
      const auto kind = ncx::parse_classifier_kind(classifier);
      if (!kind) ncx::fail(ncx::ErrorCode::ConfigInvalid, "--classifier: unknown '" + classifier + "'");
      const auto fm = ncx::select_feature_set(ncx::read_features_csv(features_path), feature_set);
      const auto norm = ncx::zscore_normalize(fm);
      const auto model = ncx::train(ncx::default_spec(*kind, cfg.classifier_seed()), norm.matrix);
      std::filesystem::create_directories(out);
      const auto path = out / ("model_" + classifier + ".json");
      const auto to_vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
      nlohmann::ordered_json doc{{"feature_set", feature_set},
                                 {"zscore", {{"mean", to_vec(norm.mean)}, {"sd", to_vec(norm.sd)}}},
                                 {"model", nlohmann::ordered_json::parse(model.to_json())}};
      write_file(path, doc.dump(2) + "\n");
      std::printf("wrote %s\n", path.c_str());
    } else if (cmd == evaluate) {
      cfg.validate();
      const auto fm = ncx::read_features_csv(features_path);
      const auto results = ncx::evaluate_stage(cfg, fm);
      std::filesystem::create_directories(out);
      write_file(out / "results.json", ncx::results_json(results));
      ncx::report_stage(results, out);
      for (const auto& w : results.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
      std::printf("evaluated %zu cells into %s\n", results.feature_grid.size() + results.pca_grid.size(),
                  out.c_str());
    } else if (cmd == report) {
      const auto path = std::filesystem::path(results_dir) / "results.json";
      if (!std::filesystem::exists(path)) {
        std::fprintf(stderr, "ncx report: no results.json in %s\n", results_dir.c_str());
        return kExitUsage;
      }
      const auto results = ncx::read_results_json(path);
      if (results.feature_grid.empty() && results.pca_grid.empty()) {
        std::fprintf(stderr, "ncx report: %s holds no evaluated cells\n", path.c_str());
        return kExitUsage;
      }
      ncx::report_stage(results, out);
      std::printf("wrote reports to %s\n", out.c_str());
    } else if (cmd == run) {
      ncx::run_pipeline(cfg);
      std::printf("run complete: %s\n", out.c_str());
    }
  } catch (const ncx::Error& e) {
    std::fprintf(stderr, "ncx %s: %s\n", stage.c_str(), e.what());
    return e.code() == ncx::ErrorCode::ConfigInvalid ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ncx %s: %s\n", stage.c_str(), e.what());
    return kExitRuntime;
  }
  return 0;
}
