#include "ncx/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "ncx/error.hpp"
#include "ncx/feature_stats.hpp"
#include "ncx/parallel.hpp"

namespace ncx {
namespace {

using nlohmann::ordered_json;

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) fail(ErrorCode::IoFailure, "write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void make_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
}

std::string recording_extension(FileFormat f) { return f == FileFormat::Csv ? ".csv" : ".bin"; }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ordered_json cell_to_json(const GridCell& c) {
  ordered_json rows = ordered_json::array();
  for (const auto& p : c.result.rows) rows.push_back({p.truth, p.predicted, p.score, p.fold});
  return {{"classifier", c.classifier},
          {"features", c.features},
          {"accuracy_pct", c.result.accuracy_pct},
          {"auc", c.result.auc},
          {"rows", std::move(rows)}};
}

GridCell cell_from_json(const ordered_json& j) {
  GridCell c;
  c.classifier = j.at("classifier").get<std::string>();
  c.features = j.at("features").get<std::string>();
  std::vector<Prediction> rows;
  for (const auto& r : j.at("rows")) {
    Prediction p;
    p.truth = r.at(0).get<int>();
    p.predicted = r.at(1).get<int>();
    p.score = r.at(2).get<double>();
    p.fold = r.at(3).get<std::size_t>();
    rows.push_back(p);
  }
  c.result = summarize(std::move(rows));
  return c;
}

Report make_report(const GridResults& r, const std::vector<GridCell>& grid) {
  Report rep;
  rep.run_id = r.run_id;
  rep.seed = r.seed;
  rep.config_digest = r.config_digest;
  rep.grid = grid;
  rep.explained_variance = r.explained_variance;
  rep.protocol = r.protocol;
  return rep;
}

}  // namespace

void write_labels_csv(const Dataset& data, const std::filesystem::path& path) {
  std::string text = "subject_id,label\n";
  for (std::size_t i = 0; i < data.recordings.size(); ++i) {
    text += data.recordings[i].subject_id + "," + std::to_string(data.labels[i]) + "\n";
  }
  write_text(path, text);
}

Dataset load_dataset(const std::filesystem::path& dir, FileFormat format, bool validate_montage) {
  const auto labels_path = dir / "labels.csv";
  if (!std::filesystem::exists(labels_path)) {
    fail(ErrorCode::IoFailure, "no labels.csv in " + dir.string());
  }
  std::istringstream in(read_text(labels_path));
  std::string line;
  std::getline(in, line);
  if (line.rfind("subject_id,label", 0) != 0) fail(ErrorCode::MalformedFile, "labels.csv: bad header");
  Dataset data;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) fail(ErrorCode::MalformedFile, "labels.csv: bad row '" + line + "'");
    const auto id = line.substr(0, comma);
    const auto label = line.substr(comma + 1);
    if (label != "0" && label != "1") fail(ErrorCode::MalformedFile, "labels.csv: label must be 0 or 1");
    LoadOptions opts;
    opts.validate_montage = validate_montage;
    opts.subject_id = id;
    data.recordings.push_back(load_recording(dir / (id + recording_extension(format)), format, opts));
    data.labels.push_back(label == "1" ? 1 : 0);
  }
  if (data.recordings.empty()) fail(ErrorCode::MalformedFile, "labels.csv lists no subjects");
  return data;
}

SynthOutput synth_stage(const PipelineConfig& cfg) {
  SurrogateConfig sc = cfg.synth;
  sc.seed = cfg.synth_seed();
  sc.epoch_seconds = cfg.epoch_seconds;
  sc.epochs_per_subject = cfg.epoch_count;
  sc.hfd = cfg.hfd;
  sc.sampen = cfg.sampen;
  SynthOutput out;
  out.cohort = surrogate_cohort(sc, cfg.threads);
  out.data.recordings = out.cohort.recordings;
  out.data.labels = out.cohort.labels;
  return out;
}

void write_dataset(const SynthOutput& out, const PipelineConfig& cfg, const std::filesystem::path& dir) {
  make_dir(dir);
  for (const auto& rec : out.data.recordings) {
    write_recording(rec, dir / (rec.subject_id + recording_extension(cfg.data_format)), cfg.data_format);
  }
  write_labels_csv(out.data, dir / "labels.csv");
  SurrogateConfig sc = cfg.synth;
  sc.seed = cfg.synth_seed();
  write_text(dir / "cohort_manifest.json", cohort_manifest_json(out.cohort, sc));
}

FeatureMatrix extract_stage(const PipelineConfig& cfg, const Dataset& data) {
  const auto es = extract_epoch_set(data.recordings, cfg.epoch_seconds, cfg.epoch_count, cfg.epoch_offsets);
  const auto vectors = extract_features(es, cfg.hfd, cfg.sampen, cfg.merge, cfg.threads);
  std::vector<std::string> ids;
  for (const auto& r : data.recordings) ids.push_back(r.subject_id);
  return to_feature_matrix(vectors, ids, data.labels);
}

std::string run_id(const PipelineConfig& cfg) {
  return "ncx-" + cfg.digest().substr(0, 8) + "-" + hex64(cfg.seed);
}

GridResults evaluate_stage(const PipelineConfig& cfg, const FeatureMatrix& fm) {
  fm.check();
  for (auto m : cfg.pc_counts) {
    if (m > fm.cols()) {
      fail(ErrorCode::ConfigInvalid, "grid.pc_counts: " + std::to_string(m) + " exceeds " +
                                         std::to_string(fm.cols()) + " features");
    }
  }
  GridResults r;
  r.run_id = run_id(cfg);
  r.seed = cfg.seed;
  r.config_digest = cfg.digest();
  r.protocol = {{"folds", "stratified K=" + std::to_string(cfg.folds)},
                {"metrics", "pooled over out-of-fold predictions"},
                {"normalization", "z-score fitted on each training partition"},
                {"pca_scope", std::string(to_string(cfg.pca_scope))},
                {"epoch_merge", std::string(to_string(cfg.merge))}};

  const auto plan = stratified_kfold(fm.labels, cfg.folds, cfg.fold_seed());
  r.warnings = plan.warnings;

  struct Job {
    ClassifierKind kind;
    std::string features;
    const FeatureMatrix* data;
    PcaMode pca;
    bool pca_grid;
  };
  std::vector<FeatureMatrix> sets;
  sets.reserve(cfg.feature_sets.size());
  for (const auto& s : cfg.feature_sets) sets.push_back(select_feature_set(fm, s));

  std::vector<Job> jobs;
  for (auto kind : cfg.classifiers) {
    for (std::size_t s = 0; s < sets.size(); ++s) {
      jobs.push_back({kind, cfg.feature_sets[s], &sets[s], {}, false});
    }
  }
  for (auto kind : cfg.classifiers) {
    for (auto m : cfg.pc_counts) {
      jobs.push_back({kind, "PC=" + std::to_string(m), &fm, {cfg.pca_scope, m}, true});
    }
  }

  std::vector<GridCell> cells(jobs.size());
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t i) {
    const auto& job = jobs[i];
    const auto spec = default_spec(job.kind, cfg.classifier_seed());
    try {
      cells[i] = {std::string(to_string(job.kind)), job.features,
                  cross_validate(spec, *job.data, plan, job.pca, 1)};
    } catch (const Error& e) {
      throw Error(e.code(), std::string(to_string(job.kind)) + " on " + job.features + ": " + e.detail());
    }
  });
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    (jobs[i].pca_grid ? r.pca_grid : r.feature_grid).push_back(std::move(cells[i]));
  }

  if (fm.cols() >= 1) {
    const auto model = fit_pca(fm);
    for (std::size_t m = 1; m <= model.components(); ++m) {
      r.explained_variance.push_back({m, explained_variance(model, m)});
    }
  }
  return r;
}

std::string results_json(const GridResults& r) {
  ordered_json feature_grid = ordered_json::array();
  for (const auto& c : r.feature_grid) feature_grid.push_back(cell_to_json(c));
  ordered_json pca_grid = ordered_json::array();
  for (const auto& c : r.pca_grid) pca_grid.push_back(cell_to_json(c));
  ordered_json ev = ordered_json::array();
  for (const auto& p : r.explained_variance) ev.push_back({{"m", p.m}, {"pct", p.pct}});
  ordered_json protocol = ordered_json::object();
  for (const auto& [k, v] : r.protocol) protocol[k] = v;
  ordered_json doc{{"format", "ncx-results"},
                   {"run_id", r.run_id},
                   {"seed", r.seed},
                   {"config_digest", r.config_digest},
                   {"protocol", std::move(protocol)},
                   {"warnings", r.warnings},
                   {"feature_grid", std::move(feature_grid)},
                   {"pca_grid", std::move(pca_grid)},
                   {"explained_variance", std::move(ev)}};
  return doc.dump(1) + "\n";
}

GridResults read_results_json(const std::filesystem::path& path) {
  const auto text = read_text(path);
  try {
    const auto doc = ordered_json::parse(text);
    if (doc.at("format").get<std::string>() != "ncx-results") {
      fail(ErrorCode::MalformedFile, path.string() + " is not a results file");
    }
    GridResults r;
    r.run_id = doc.at("run_id").get<std::string>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    r.config_digest = doc.at("config_digest").get<std::string>();
    for (const auto& [k, v] : doc.at("protocol").items()) r.protocol.emplace_back(k, v.get<std::string>());
    r.warnings = doc.at("warnings").get<std::vector<std::string>>();
    for (const auto& c : doc.at("feature_grid")) r.feature_grid.push_back(cell_from_json(c));
    for (const auto& c : doc.at("pca_grid")) r.pca_grid.push_back(cell_from_json(c));
    for (const auto& p : doc.at("explained_variance")) {
      r.explained_variance.push_back({p.at("m").get<std::size_t>(), p.at("pct").get<double>()});
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedFile, path.string() + ": " + e.what());
  }
}

void report_stage(const GridResults& results, const std::filesystem::path& dir) {
  if (results.feature_grid.empty() && results.pca_grid.empty()) {
    fail(ErrorCode::InvalidArgument, "no evaluated cells to report");
  }
  if (!results.feature_grid.empty()) emit_report(make_report(results, results.feature_grid), dir, "report");
  if (!results.pca_grid.empty()) emit_report(make_report(results, results.pca_grid), dir, "report_pca");
}

void run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  const auto& out = cfg.output_directory;
  make_dir(out);

  Dataset data;
  if (cfg.source == DataSource::Synth) {
    auto synth = synth_stage(cfg);
    SurrogateConfig sc = cfg.synth;
    sc.seed = cfg.synth_seed();
    write_text(out / "cohort_manifest.json", cohort_manifest_json(synth.cohort, sc));
    data = std::move(synth.data);
  } else {
    data = load_dataset(cfg.data_directory, cfg.data_format, cfg.validate_montage);
  }

  const auto fm = extract_stage(cfg, data);
  write_features_csv(fm, out / "features.csv");
  const auto results = evaluate_stage(cfg, fm);
  write_text(out / "results.json", results_json(results));
  report_stage(results, out);

  ordered_json manifest{{"run_id", results.run_id},
                        {"version", kVersion},
                        {"timestamp", utc_timestamp()},
                        {"config_digest", results.config_digest},
                        {"seeds",
                         {{"master", cfg.seed},
                          {"synth", cfg.synth_seed()},
                          {"folds", cfg.fold_seed()},
                          {"classifiers", cfg.classifier_seed()}}},
                        {"config", cfg.canonical()}};
  write_text(out / "run_manifest.json", manifest.dump(2) + "\n");
}

}  // namespace ncx
