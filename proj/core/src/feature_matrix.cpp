#include "ncx/feature_matrix.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "ncx/error.hpp"

namespace ncx {

void FeatureMatrix::check() const {
  if (static_cast<std::size_t>(values.cols()) != feature_names.size()) {
    fail(ErrorCode::InvalidArgument, "feature name count does not match matrix columns");
  }
  if (static_cast<std::size_t>(values.rows()) != labels.size() ||
      subject_ids.size() != labels.size()) {
    fail(ErrorCode::InvalidArgument, "row count does not match labels/subject ids");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) fail(ErrorCode::InvalidArgument, "labels must be 0 or 1");
  }
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
  FeatureMatrix out;
  out.feature_names = feature_names;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), values.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.values.row(static_cast<Eigen::Index>(i)) = values.row(static_cast<Eigen::Index>(rows[i]));
    out.subject_ids.push_back(subject_ids.at(rows[i]));
    out.labels.push_back(labels.at(rows[i]));
  }
  return out;
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::size_t> cols) const {
  FeatureMatrix out;
  out.subject_ids = subject_ids;
  out.labels = labels;
  out.values.resize(values.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    out.values.col(static_cast<Eigen::Index>(j)) = values.col(static_cast<Eigen::Index>(cols[j]));
    out.feature_names.push_back(feature_names.at(cols[j]));
  }
  return out;
}

FeatureMatrix FeatureMatrix::select_prefix(std::string_view prefix) const {
  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < feature_names.size(); ++j) {
    if (std::string_view(feature_names[j]).starts_with(prefix)) cols.push_back(j);
  }
  return select_columns(cols);
}

FeatureMatrix select_feature_set(const FeatureMatrix& fm, std::string_view set) {
  FeatureMatrix out;
  if (set == "HFD") {
    out = fm.select_prefix("HFD:");
  } else if (set == "SampEn") {
    out = fm.select_prefix("SampEn:");
  } else if (set == "HFD+SampEn" || set == "SampEn+HFD") {
    return fm;
  } else {
    fail(ErrorCode::InvalidArgument, "unknown feature set '" + std::string(set) + "'");
  }
  if (out.cols() == 0) {
    fail(ErrorCode::FeatureNameMismatch, "no columns for feature set " + std::string(set));
  }
  return out;
}

FeatureMatrix to_feature_matrix(std::span<const FeatureVector> vectors,
                                std::span<const std::string> subject_ids,
                                std::span<const int> labels) {
  if (subject_ids.size() != labels.size()) {
    fail(ErrorCode::InvalidArgument, "subject id and label lists differ in length");
  }
  std::map<std::string, int, std::less<>> label_of;
  for (std::size_t i = 0; i < subject_ids.size(); ++i) label_of[subject_ids[i]] = labels[i];

  FeatureMatrix fm;
  if (vectors.empty()) return fm;
  fm.feature_names = vectors.front().names;
  fm.values.resize(static_cast<Eigen::Index>(vectors.size()),
                   static_cast<Eigen::Index>(fm.feature_names.size()));
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const auto& v = vectors[i];
    if (v.names != fm.feature_names) {
      fail(ErrorCode::FeatureNameMismatch, "feature vector of " + v.subject_id + " differs");
    }
    auto it = label_of.find(v.subject_id);
    if (it == label_of.end()) fail(ErrorCode::InvalidArgument, "no label for " + v.subject_id);
    for (std::size_t j = 0; j < v.values.size(); ++j) {
      fm.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v.values[j];
    }
    fm.subject_ids.push_back(v.epoch < 0 ? v.subject_id
                                         : v.subject_id + "#" + std::to_string(v.epoch));
    fm.labels.push_back(it->second);
  }
  return fm;
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_features_csv(const FeatureMatrix& fm, const std::filesystem::path& path) {
  fm.check();
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + path.string());
  out << "subject_id,label";
  for (const auto& n : fm.feature_names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < fm.rows(); ++i) {
    out << fm.subject_ids[i] << ',' << fm.labels[i];
    for (std::size_t j = 0; j < fm.cols(); ++j) {
      out << ',' << format_real(fm.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    out << '\n';
  }
  if (!out) fail(ErrorCode::IoFailure, "write failed for " + path.string());
}

FeatureMatrix read_features_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
  std::string line;
  std::vector<std::vector<double>> rows;
  FeatureMatrix fm;
  bool header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!header) {
      if (cells.size() < 3 || cells[0] != "subject_id" || cells[1] != "label") {
        fail(ErrorCode::MalformedFile, "features header must start with subject_id,label");
      }
      fm.feature_names.assign(cells.begin() + 2, cells.end());
      header = true;
      continue;
    }
    if (cells.size() != fm.feature_names.size() + 2) {
      fail(ErrorCode::MalformedFile, "ragged row on line " + std::to_string(line_no));
    }
    fm.subject_ids.push_back(cells[0]);
    if (cells[1] != "0" && cells[1] != "1") {
      fail(ErrorCode::MalformedFile, "label must be 0 or 1 on line " + std::to_string(line_no));
    }
    fm.labels.push_back(cells[1] == "1" ? 1 : 0);
    std::vector<double> row;
    for (std::size_t j = 2; j < cells.size(); ++j) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cells[j].data(), cells[j].data() + cells[j].size(), v);
      if (ec != std::errc() || ptr != cells[j].data() + cells[j].size()) {
        fail(ErrorCode::MalformedFile, "non-numeric cell on line " + std::to_string(line_no));
      }
      if (!std::isfinite(v)) {
        fail(ErrorCode::NonFiniteSample, "non-finite feature on line " + std::to_string(line_no));
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (!header) fail(ErrorCode::MalformedFile, "empty features file " + path.string());
  fm.values.resize(static_cast<Eigen::Index>(rows.size()),
                   static_cast<Eigen::Index>(fm.feature_names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      fm.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return fm;
}

void write_named_matrix_csv(const Eigen::MatrixXd& m, std::span<const std::string> row_names,
                            std::span<const std::string> col_names,
                            const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + path.string());
  out << "name";
  for (const auto& c : col_names) out << ',' << c;
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << row_names[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << format_real(m(i, j));
    out << '\n';
  }
  if (!out) fail(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace ncx
