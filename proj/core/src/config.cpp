#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "ncx/error.hpp"
#include "ncx/parallel.hpp"
#include "ncx/pipeline.hpp"

namespace ncx {
namespace {

[[noreturn]] void invalid(std::string_view key, const std::string& what) {
  fail(ErrorCode::ConfigInvalid, std::string(key) + ": " + what);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto pos = s.find(',', start);
    const auto item = trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (!item.empty()) out.push_back(item);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
T parse_number(std::string_view key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) invalid(key, "expected a number, got '" + v + "'");
  return out;
}

bool parse_bool(std::string_view key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  invalid(key, "expected true or false, got '" + v + "'");
}

TargetRange parse_range(std::string_view key, const std::string& v) {
  const auto parts = split_list(v);
  if (parts.size() != 2) invalid(key, "expected 'lo, hi'");
  return {parse_number<double>(key, parts[0]), parse_number<double>(key, parts[1])};
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

template <class T>
std::string join_numbers(const std::vector<T>& v) {
  std::vector<std::string> s;
  for (auto x : v) s.push_back(std::to_string(x));
  return join(s);
}

std::string range_text(const TargetRange& r) { return format_real(r.lo) + "," + format_real(r.hi); }

struct Key {
  std::string name;
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
  bool affects_results = true;
};

const std::vector<Key>& keys() {
  using C = PipelineConfig;
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    const auto add = [&k](std::string name, std::function<void(C&, const std::string&)> set,
                          std::function<std::string(const C&)> get, bool affects = true) {
      k.push_back({std::move(name), std::move(set), std::move(get), affects});
    };

    add("seed", [](C& c, const std::string& v) { c.seed = parse_number<std::uint64_t>("seed", v); },
        [](const C& c) { return std::to_string(c.seed); });

    add("data.source",
        [](C& c, const std::string& v) {
          if (v == "synth") c.source = DataSource::Synth;
          else if (v == "directory") c.source = DataSource::Directory;
          else invalid("data.source", "expected synth or directory, got '" + v + "'");
        },
        [](const C& c) { return std::string(c.source == DataSource::Synth ? "synth" : "directory"); });
    add("data.directory", [](C& c, const std::string& v) { c.data_directory = v; },
        [](const C& c) { return c.data_directory.string(); });
    add("data.format",
        [](C& c, const std::string& v) {
          const auto f = parse_file_format(v);
          if (!f) invalid("data.format", "expected csv or raw-binary, got '" + v + "'");
          c.data_format = *f;
        },
        [](const C& c) { return std::string(c.data_format == FileFormat::Csv ? "csv" : "raw-binary"); });
    add("data.validate_montage",
        [](C& c, const std::string& v) { c.validate_montage = parse_bool("data.validate_montage", v); },
        [](const C& c) { return std::string(c.validate_montage ? "true" : "false"); });

    const auto synth_size = [&add](const char* name, std::size_t SurrogateConfig::*field) {
      add(name, [=](C& c, const std::string& v) { c.synth.*field = parse_number<std::size_t>(name, v); },
          [=](const C& c) { return std::to_string(c.synth.*field); });
    };
    const auto synth_real = [&add](const char* name, double SurrogateConfig::*field) {
      add(name, [=](C& c, const std::string& v) { c.synth.*field = parse_number<double>(name, v); },
          [=](const C& c) { return format_real(c.synth.*field); });
    };
    const auto synth_range = [&add](const char* name, TargetRange SurrogateConfig::*field) {
      add(name, [=](C& c, const std::string& v) { c.synth.*field = parse_range(name, v); },
          [=](const C& c) { return range_text(c.synth.*field); });
    };
    synth_size("synth.n_patients", &SurrogateConfig::n_patients);
    synth_size("synth.n_controls", &SurrogateConfig::n_controls);
    synth_size("synth.n_channels", &SurrogateConfig::n_channels);
    synth_size("synth.pilot_epochs", &SurrogateConfig::pilot_epochs);
    synth_real("synth.fs", &SurrogateConfig::fs);
    synth_real("synth.subject_jitter", &SurrogateConfig::subject_jitter);
    synth_real("synth.channel_jitter", &SurrogateConfig::channel_jitter);
    synth_real("synth.tolerance", &SurrogateConfig::tolerance);
    synth_range("synth.patient_hfd", &SurrogateConfig::patient_hfd);
    synth_range("synth.control_hfd", &SurrogateConfig::control_hfd);
    synth_range("synth.patient_sampen", &SurrogateConfig::patient_sampen);
    synth_range("synth.control_sampen", &SurrogateConfig::control_sampen);

    add("epoch.seconds", [](C& c, const std::string& v) { c.epoch_seconds = parse_number<double>("epoch.seconds", v); },
        [](const C& c) { return format_real(c.epoch_seconds); });
    add("epoch.count", [](C& c, const std::string& v) { c.epoch_count = parse_number<std::size_t>("epoch.count", v); },
        [](const C& c) { return std::to_string(c.epoch_count); });
    add("epoch.offsets",
        [](C& c, const std::string& v) {
          c.epoch_offsets.clear();
          for (const auto& s : split_list(v)) c.epoch_offsets.push_back(parse_number<std::size_t>("epoch.offsets", s));
        },
        [](const C& c) { return join_numbers(c.epoch_offsets); });

    add("features.k_max", [](C& c, const std::string& v) { c.hfd.k_max = parse_number<int>("features.k_max", v); },
        [](const C& c) { return std::to_string(c.hfd.k_max); });
    add("features.m", [](C& c, const std::string& v) { c.sampen.m = parse_number<int>("features.m", v); },
        [](const C& c) { return std::to_string(c.sampen.m); });
    add("features.r_factor",
        [](C& c, const std::string& v) { c.sampen.r_factor = parse_number<double>("features.r_factor", v); },
        [](const C& c) { return format_real(c.sampen.r_factor); });
    add("features.sd",
        [](C& c, const std::string& v) {
          if (v == "population") c.sampen.sd = SdConvention::Population;
          else if (v == "sample") c.sampen.sd = SdConvention::Sample;
          else invalid("features.sd", "expected population or sample, got '" + v + "'");
        },
        [](const C& c) { return std::string(c.sampen.sd == SdConvention::Population ? "population" : "sample"); });
    add("features.merge",
        [](C& c, const std::string& v) {
          const auto m = parse_epoch_merge(v);
          if (!m) invalid("features.merge", "expected mean, median or per_epoch, got '" + v + "'");
          c.merge = *m;
        },
        [](const C& c) { return std::string(to_string(c.merge)); });

    add("grid.classifiers",
        [](C& c, const std::string& v) {
          c.classifiers.clear();
          for (const auto& s : split_list(v)) {
            if (s == "all") {
              c.classifiers.assign(std::begin(kAllClassifiers), std::end(kAllClassifiers));
              continue;
            }
            const auto kind = parse_classifier_kind(s);
            if (!kind) invalid("grid.classifiers", "unknown classifier '" + s + "'");
            c.classifiers.push_back(*kind);
          }
        },
        [](const C& c) {
          std::vector<std::string> s;
          for (auto k : c.classifiers) s.emplace_back(to_string(k));
          return join(s);
        });
    add("grid.feature_sets", [](C& c, const std::string& v) { c.feature_sets = split_list(v); },
        [](const C& c) { return join(c.feature_sets); });
    add("grid.pc_counts",
        [](C& c, const std::string& v) {
          c.pc_counts.clear();
          for (const auto& s : split_list(v)) c.pc_counts.push_back(parse_number<std::size_t>("grid.pc_counts", s));
        },
        [](const C& c) { return join_numbers(c.pc_counts); });
    add("grid.pca_mode",
        [](C& c, const std::string& v) {
          const auto scope = parse_pca_scope(v);
          if (!scope || *scope == PcaScope::None) invalid("grid.pca_mode", "expected per_fold or global, got '" + v + "'");
          c.pca_scope = *scope;
        },
        [](const C& c) { return std::string(to_string(c.pca_scope)); });

    add("evaluation.K", [](C& c, const std::string& v) { c.folds = parse_number<std::size_t>("evaluation.K", v); },
        [](const C& c) { return std::to_string(c.folds); });

    add("output.dir", [](C& c, const std::string& v) { c.output_directory = v; },
        [](const C& c) { return c.output_directory.string(); }, false);
    add("runtime.threads",
        [](C& c, const std::string& v) { c.threads = parse_number<unsigned>("runtime.threads", v); },
        [](const C& c) { return std::to_string(c.threads); }, false);

    std::sort(k.begin(), k.end(), [](const Key& a, const Key& b) { return a.name < b.name; });
    return k;
  }();
  return table;
}

}  // namespace

PipelineConfig PipelineConfig::parse(std::string_view text) {
  PipelineConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::ConfigInvalid, "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const auto key = trim(std::string_view(body).substr(0, eq));
    const auto value = trim(std::string_view(body).substr(eq + 1));
    const auto& table = keys();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return k.name == key; });
    if (it == table.end()) invalid(key, "unknown key");
    it->set(cfg, value);
  }
  return cfg;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigInvalid, "cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void PipelineConfig::validate() const {
  if (folds < 2) invalid("evaluation.K", "must be at least 2");
  if (!(epoch_seconds > 0.0)) invalid("epoch.seconds", "must be positive");
  if (epoch_count < 1) invalid("epoch.count", "must be at least 1");
  if (!epoch_offsets.empty() && epoch_offsets.size() < epoch_count) {
    invalid("epoch.offsets", "needs at least epoch.count entries");
  }
  if (hfd.k_max < 2) invalid("features.k_max", "must be at least 2");
  if (sampen.m < 1) invalid("features.m", "must be at least 1");
  if (!(sampen.r_factor > 0.0)) invalid("features.r_factor", "must be positive");
  if (classifiers.empty()) invalid("grid.classifiers", "must name at least one classifier");
  for (const auto& s : feature_sets) {
    if (s != "HFD" && s != "SampEn" && s != "HFD+SampEn") {
      invalid("grid.feature_sets", "unknown feature set '" + s + "'");
    }
  }
  if (feature_sets.empty() && pc_counts.empty()) {
    invalid("grid.feature_sets", "grid is empty; set feature sets or PC counts");
  }
  if (source == DataSource::Directory && data_directory.empty()) {
    invalid("data.directory", "required when data.source = directory");
  }
  if (source == DataSource::Synth) {
    try {
      synth.validate();
    } catch (const Error& e) {
      invalid("synth", e.detail());
    }
    const std::size_t features = 2 * synth.n_channels;
    for (auto m : pc_counts) {
      if (m < 1 || m > features) {
        invalid("grid.pc_counts", "must lie in [1, " + std::to_string(features) + "]");
      }
    }
    if (folds > synth.n_patients + synth.n_controls) {
      invalid("evaluation.K", "exceeds the number of subjects");
    }
  } else {
    for (auto m : pc_counts) {
      if (m < 1) invalid("grid.pc_counts", "must be positive");
    }
  }
}

std::string PipelineConfig::canonical() const {
  std::string out;
  for (const auto& k : keys()) {
    if (!k.affects_results) continue;
    out += k.name + " = " + k.get(*this) + "\n";
  }
  return out;
}

std::string PipelineConfig::digest() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t PipelineConfig::synth_seed() const { return mix_seed(seed, 1); }
std::uint64_t PipelineConfig::fold_seed() const { return mix_seed(seed, 2); }
std::uint64_t PipelineConfig::classifier_seed() const { return mix_seed(seed, 3); }

}  // namespace ncx
