#include "ncx/signal_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "ncx/error.hpp"

namespace ncx {
namespace {

constexpr char kMagic[4] = {'N', 'C', 'X', '1'};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_cell(std::string_view cell, std::size_t line_no) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc() || ptr != last) {
    fail(ErrorCode::MalformedFile,
         "non-numeric cell '" + std::string(cell) + "' on line " + std::to_string(line_no));
  }
  if (!std::isfinite(v)) {
    fail(ErrorCode::NonFiniteSample,
         "non-finite value '" + std::string(cell) + "' on line " + std::to_string(line_no));
  }
  return v;
}

template <class T>
void put(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get(std::istream& is, const std::filesystem::path& path) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) {
    fail(ErrorCode::MalformedFile, "truncated binary file " + path.string());
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

Recording load_csv(const std::filesystem::path& path, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());

  Recording rec;
  std::optional<double> fs;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      auto body = trim(view.substr(1));
      if (body.starts_with("fs=")) fs = parse_cell(trim(body.substr(3)), line_no);
      continue;
    }
    if (!have_header) {
      for (auto label : split_commas(view)) rec.channels.emplace_back(label);
      rec.data.resize(rec.channels.size());
      have_header = true;
      continue;
    }
    auto cells = split_commas(view);
    if (cells.size() != rec.channels.size()) {
      fail(ErrorCode::MalformedFile, "ragged row on line " + std::to_string(line_no) + " of " +
                                         path.string() + ": expected " +
                                         std::to_string(rec.channels.size()) + " cells, got " +
                                         std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) rec.data[c].push_back(parse_cell(cells[c], line_no));
  }
  if (!have_header) fail(ErrorCode::MalformedFile, "missing header in " + path.string());

  if (!fs) fs = opts.fs;
  if (!fs) {
    fail(ErrorCode::MalformedFile,
         "no sampling rate: " + path.string() + " lacks '# fs=' and none was supplied");
  }
  rec.fs = *fs;
  return rec;
}

Recording load_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    fail(ErrorCode::MalformedFile, "bad magic in " + path.string());
  }
  Recording rec;
  auto n_channels = get<std::uint32_t>(in, path);
  auto n_samples = get<std::uint32_t>(in, path);
  rec.fs = get<double>(in, path);
  rec.channels.reserve(n_channels);
  for (std::uint32_t c = 0; c < n_channels; ++c) {
    auto len = get<std::uint32_t>(in, path);
    std::string label(len, '\0');
    if (len > 0 && !in.read(label.data(), len)) {
      fail(ErrorCode::MalformedFile, "truncated channel label in " + path.string());
    }
    rec.channels.push_back(std::move(label));
  }
  rec.data.assign(n_channels, std::vector<double>(n_samples));
  for (auto& row : rec.data) {
    for (auto& v : row) v = get<double>(in, path);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    fail(ErrorCode::MalformedFile, "trailing bytes in " + path.string());
  }
  return rec;
}

}  // namespace

void validate(const Recording& rec, bool montage) {
  if (!(rec.fs > 0.0) || !std::isfinite(rec.fs)) {
    fail(ErrorCode::MalformedFile, "sampling rate must be positive");
  }
  if (rec.channels.empty() || rec.channels.size() != rec.data.size()) {
    fail(ErrorCode::MalformedFile, "channel labels do not match data rows");
  }
  const auto n = rec.data.front().size();
  if (n == 0) fail(ErrorCode::MalformedFile, "recording has no samples");
  std::set<std::string_view> seen;
  for (std::size_t c = 0; c < rec.channels.size(); ++c) {
    if (!seen.insert(rec.channels[c]).second) {
      fail(ErrorCode::MalformedFile, "duplicate channel label " + rec.channels[c]);
    }
    if (rec.data[c].size() != n) {
      fail(ErrorCode::MalformedFile, "channel " + rec.channels[c] + " has ragged length");
    }
    for (double v : rec.data[c]) {
      if (!std::isfinite(v)) fail(ErrorCode::NonFiniteSample, "channel " + rec.channels[c]);
    }
  }
  if (montage) {
    for (const auto& label : rec.channels) {
      if (std::find(kMontage.begin(), kMontage.end(), label) == kMontage.end()) {
        fail(ErrorCode::UnknownChannelLabel, label);
      }
    }
    if (rec.channels.size() != kMontage.size()) {
      fail(ErrorCode::UnknownChannelLabel,
           "expected the 19 montage electrodes, found " + std::to_string(rec.channels.size()));
    }
  }
}

std::optional<FileFormat> parse_file_format(std::string_view name) {
  if (name == "csv") return FileFormat::Csv;
  if (name == "raw-binary" || name == "raw" || name == "bin") return FileFormat::RawBinary;
  return std::nullopt;
}

Recording load_recording(const std::filesystem::path& path, FileFormat format,
                         const LoadOptions& opts) {
  Recording rec = format == FileFormat::Csv ? load_csv(path, opts) : load_binary(path);
  rec.subject_id = opts.subject_id.value_or(path.stem().string());
  validate(rec, opts.validate_montage);
  return rec;
}

void write_recording(const Recording& rec, const std::filesystem::path& path, FileFormat format) {
  validate(rec, false);
  if (format == FileFormat::Csv) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::IoFailure, "cannot write " + path.string());
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", rec.fs);
    out << "# fs=" << buf << '\n';
    for (std::size_t c = 0; c < rec.channels.size(); ++c) {
      out << (c ? "," : "") << rec.channels[c];
    }
    out << '\n';
    const auto n = rec.samples();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < rec.channels.size(); ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", rec.data[c][i]);
        out << (c ? "," : "") << buf;
      }
      out << '\n';
    }
    if (!out) fail(ErrorCode::IoFailure, "write failed for " + path.string());
    return;
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(kMagic, 4);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(rec.channels.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(rec.samples()));
  put<double>(out, rec.fs);
  for (const auto& label : rec.channels) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(label.size()));
    out.write(label.data(), static_cast<std::streamsize>(label.size()));
  }
  for (const auto& row : rec.data) {
    for (double v : row) put<double>(out, v);
  }
  if (!out) fail(ErrorCode::IoFailure, "write failed for " + path.string());
}

std::size_t EpochSet::channel_epoch_count() const noexcept {
  std::size_t total = 0;
  for (const auto& s : subjects) {
    for (const auto& ch : s.epochs) total += ch.size();
  }
  return total;
}

Epoch EpochSet::epoch(std::size_t subject, std::size_t channel, std::size_t index) const {
  const auto& s = subjects.at(subject);
  return Epoch{s.subject_id, s.channels.at(channel), s.epochs.at(channel).at(index), fs};
}

std::size_t epoch_length(double epoch_seconds, double fs) {
  if (!(epoch_seconds > 0.0) || !(fs > 0.0)) {
    fail(ErrorCode::InvalidArgument, "epoch length and sampling rate must be positive");
  }
  return static_cast<std::size_t>(std::llround(epoch_seconds * fs));
}

std::vector<std::size_t> even_offsets(std::size_t samples, std::size_t length, std::size_t count) {
  if (count == 0) return {};
  if (length > samples) {
    fail(ErrorCode::OffsetOutOfRange, "epoch longer than recording");
  }
  std::vector<std::size_t> out(count, 0);
  if (count == 1) return out;
  // Largest stride that keeps the last epoch inside the recording, capped so
  // epochs sit a full recording-fraction apart (0, n/count, 2n/count, ...).
  const std::size_t span = samples - length;
  const std::size_t stride = std::min(span / (count - 1), samples / count);
  for (std::size_t i = 0; i < count; ++i) out[i] = i * stride;
  return out;
}

SubjectEpochs extract_epochs(const Recording& rec, double epoch_seconds, std::size_t count,
                             std::span<const std::size_t> offsets,
                             std::vector<std::string>* warnings) {
  const auto len = epoch_length(epoch_seconds, rec.fs);
  if (offsets.size() < count) {
    fail(ErrorCode::CountMismatch, "need " + std::to_string(count) + " offsets, got " +
                                       std::to_string(offsets.size()));
  }
  const auto n = rec.samples();
  for (std::size_t e = 0; e < count; ++e) {
    if (offsets[e] + len > n) {
      fail(ErrorCode::OffsetOutOfRange, "offset " + std::to_string(offsets[e]) + " + " +
                                            std::to_string(len) + " exceeds " +
                                            std::to_string(n) + " samples in " + rec.subject_id);
    }
  }
  if (warnings) {
    std::vector<std::size_t> sorted(offsets.begin(), offsets.begin() + static_cast<long>(count));
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t e = 1; e < sorted.size(); ++e) {
      if (sorted[e] < sorted[e - 1] + len) {
        warnings->push_back("overlapping epochs in " + rec.subject_id + " at offsets " +
                            std::to_string(sorted[e - 1]) + " and " + std::to_string(sorted[e]));
      }
    }
  }

  SubjectEpochs out;
  out.subject_id = rec.subject_id;
  out.channels = rec.channels;
  out.epochs.resize(rec.channels.size());
  for (std::size_t c = 0; c < rec.channels.size(); ++c) {
    out.epochs[c].reserve(count);
    for (std::size_t e = 0; e < count; ++e) {
      auto first = rec.data[c].begin() + static_cast<long>(offsets[e]);
      out.epochs[c].emplace_back(first, first + static_cast<long>(len));
    }
  }
  return out;
}

EpochSet extract_epoch_set(std::span<const Recording> recordings, double epoch_seconds,
                           std::size_t count, std::span<const std::size_t> offsets) {
  EpochSet set;
  set.epochs_per_subject = count;
  if (recordings.empty()) return set;
  set.fs = recordings.front().fs;
  set.epoch_length = epoch_length(epoch_seconds, set.fs);
  for (const auto& rec : recordings) {
    if (rec.fs != set.fs) {
      fail(ErrorCode::InvalidArgument, "sampling rate of " + rec.subject_id + " differs");
    }
    if (rec.channels != recordings.front().channels) {
      fail(ErrorCode::InvalidArgument, "channel layout of " + rec.subject_id + " differs");
    }
    if (offsets.empty()) {
      auto even = even_offsets(rec.samples(), set.epoch_length, count);
      set.subjects.push_back(extract_epochs(rec, epoch_seconds, count, even, &set.warnings));
    } else {
      set.subjects.push_back(extract_epochs(rec, epoch_seconds, count, offsets, &set.warnings));
    }
  }
  return set;
}

}  // namespace ncx
