#include <fstream>
#include <json.hpp>

#include "ncx/error.hpp"
#include "ncx/evaluation.hpp"
#include "ncx/feature_matrix.hpp"

namespace ncx {
namespace {

using nlohmann::ordered_json;

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) fail(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace

std::string report_json(const Report& report) {
  ordered_json grid = ordered_json::array();
  for (const auto& c : report.grid) {
    const auto& cm = c.result.confusion;
    grid.push_back({{"classifier", c.classifier},
                    {"features", c.features},
                    {"accuracy_pct", c.result.accuracy_pct},
                    {"auc", c.result.auc},
                    {"confusion", {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}}}});
  }
  const auto margins = compute_margins(report.grid);
  const auto entries = [](const std::vector<MarginEntry>& v) {
    ordered_json a = ordered_json::array();
    for (const auto& e : v) a.push_back({{"name", e.name}, {"accuracy_pct", e.accuracy_pct}});
    return a;
  };
  ordered_json ev = ordered_json::array();
  for (const auto& p : report.explained_variance) ev.push_back({{"m", p.m}, {"pct", p.pct}});
  ordered_json protocol = ordered_json::object();
  for (const auto& [k, v] : report.protocol) protocol[k] = v;

  ordered_json doc{{"run_id", report.run_id},
                   {"seed", report.seed},
                   {"config_digest", report.config_digest},
                   {"protocol", std::move(protocol)},
                   {"grid", std::move(grid)},
                   {"margins",
                    {{"per_classifier", entries(margins.per_classifier)},
                     {"per_feature_set", entries(margins.per_feature_set)}}},
                   {"explained_variance", std::move(ev)}};
  return doc.dump(2) + "\n";
}

void emit_report(const Report& report, const std::filesystem::path& dir, std::string_view stem) {
  if (report.grid.empty()) fail(ErrorCode::InvalidArgument, "report has no evaluated cells");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
  const std::string base(stem);

  write_text(dir / (base + ".json"), report_json(report));

  std::string csv = "classifier,features,accuracy_pct,auc,tp,fp,tn,fn\n";
  for (const auto& c : report.grid) {
    const auto& cm = c.result.confusion;
    csv += c.classifier + "," + c.features + "," + format_real(c.result.accuracy_pct) + "," +
           format_real(c.result.auc) + "," + std::to_string(cm.tp) + "," + std::to_string(cm.fp) +
           "," + std::to_string(cm.tn) + "," + std::to_string(cm.fn) + "\n";
  }
  write_text(dir / (base + "_grid.csv"), csv);

  if (!report.explained_variance.empty()) {
    std::string ev = "m,pct\n";
    for (const auto& p : report.explained_variance) {
      ev += std::to_string(p.m) + "," + format_real(p.pct) + "\n";
    }
    write_text(dir / (base + "_explained_variance.csv"), ev);
  }
}

}  // namespace ncx
