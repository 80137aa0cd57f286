#include "ncx/nonlinear_features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ncx/error.hpp"
#include "ncx/parallel.hpp"

namespace ncx {

double curve_length(std::span<const double> x, int k, int m_start) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  if (k < 1 || m_start < 1 || m_start > k || k >= n) {
    fail(ErrorCode::InvalidArgument, "curve_length needs 1 <= m_start <= k < N (k=" +
                                         std::to_string(k) + ", m_start=" +
                                         std::to_string(m_start) + ", N=" + std::to_string(n) + ")");
  }
  const std::ptrdiff_t steps = (n - m_start) / k;
  if (steps == 0) {
    fail(ErrorCode::DegenerateScale, "no increments at k=" + std::to_string(k));
  }
  double sum = 0.0;
  const double* p = x.data() + (m_start - 1);
  for (std::ptrdiff_t i = 1; i <= steps; ++i) sum += std::abs(p[i * k] - p[(i - 1) * k]);
  return sum * static_cast<double>(n - 1) / (static_cast<double>(steps) * k) / k;
}

HfdResult higuchi_fd_detail(std::span<const double> x, const HfdParams& p) {
  if (p.k_max < 2) fail(ErrorCode::InvalidArgument, "k_max must be at least 2");
  if (x.size() < static_cast<std::size_t>(p.k_max) + 1) {
    fail(ErrorCode::InvalidArgument, "series shorter than k_max + 1");
  }
  if (std::adjacent_find(x.begin(), x.end(), std::not_equal_to<>()) == x.end()) {
    fail(ErrorCode::ConstantSeries, "Higuchi FD undefined for a constant series");
  }

  HfdResult out;
  out.log_lengths.reserve(static_cast<std::size_t>(p.k_max));
  for (int k = 1; k <= p.k_max; ++k) {
    double total = 0.0;
    for (int m = 1; m <= k; ++m) total += curve_length(x, k, m);
    const double mean = total / k;
    if (!(mean > 0.0)) {
      fail(ErrorCode::ConstantSeries, "zero curve length at k=" + std::to_string(k));
    }
    out.log_lengths.push_back(std::log(mean));
  }

  // OLS slope of ln L(k) against ln(1/k).
  const auto count = static_cast<double>(p.k_max);
  double mean_u = 0.0, mean_v = 0.0;
  for (int k = 1; k <= p.k_max; ++k) {
    mean_u += -std::log(static_cast<double>(k));
    mean_v += out.log_lengths[static_cast<std::size_t>(k - 1)];
  }
  mean_u /= count;
  mean_v /= count;
  double sxy = 0.0, sxx = 0.0;
  for (int k = 1; k <= p.k_max; ++k) {
    const double du = -std::log(static_cast<double>(k)) - mean_u;
    sxy += du * (out.log_lengths[static_cast<std::size_t>(k - 1)] - mean_v);
    sxx += du * du;
  }
  out.value = sxy / sxx;
  out.out_of_range = out.value < 1.0 || out.value > 2.0;
  return out;
}

double higuchi_fd(std::span<const double> x, const HfdParams& p) {
  return higuchi_fd_detail(x, p).value;
}

double series_sd(std::span<const double> x, SdConvention sd) {
  const auto n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (sd == SdConvention::Population ? n : n - 1.0));
}

SampEnCounts sample_entropy_counts(std::span<const double> x, const SampEnParams& p) {
  if (p.m < 1) fail(ErrorCode::InvalidArgument, "embedding length m must be >= 1");
  if (!(p.r_factor > 0.0)) fail(ErrorCode::InvalidArgument, "r_factor must be positive");
  const auto m = static_cast<std::size_t>(p.m);
  if (x.size() < m + 2) fail(ErrorCode::InvalidArgument, "series shorter than m + 2");

  SampEnCounts out;
  out.r = p.r_factor * series_sd(x, p.sd);
  const double r = out.r;
  const std::size_t n = x.size() - m;

  // Visit template pairs in order of their first sample: once the sorted
  // first-sample gap exceeds r, no later partner can match.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });

  const double* data = x.data();
  std::uint64_t a = 0, b = 0;
  for (std::size_t pi = 0; pi < n; ++pi) {
    const std::size_t i = order[pi];
    const double head = data[i];
    for (std::size_t qi = pi + 1; qi < n; ++qi) {
      const std::size_t j = order[qi];
      if (data[j] - head > r) break;
      std::size_t k = 1;
      while (k < m && std::abs(data[i + k] - data[j + k]) <= r) ++k;
      if (k < m) continue;
      ++b;
      if (std::abs(data[i + m] - data[j + m]) <= r) ++a;
    }
  }
  out.a = 2 * a;
  out.b = 2 * b;
  return out;
}

double sample_entropy(std::span<const double> x, const SampEnParams& p) {
  const auto c = sample_entropy_counts(x, p);
  if (c.a == 0 || c.b == 0) throw NoTemplateMatchesError(c.a, c.b);
  return -std::log(static_cast<double>(c.a) / static_cast<double>(c.b));
}

std::optional<EpochMerge> parse_epoch_merge(std::string_view name) {
  if (name == "mean") return EpochMerge::Mean;
  if (name == "median") return EpochMerge::Median;
  if (name == "per-epoch" || name == "per_epoch") return EpochMerge::PerEpoch;
  return std::nullopt;
}

std::string_view to_string(EpochMerge merge) {
  switch (merge) {
    case EpochMerge::Mean: return "mean";
    case EpochMerge::Median: return "median";
    case EpochMerge::PerEpoch: return "per-epoch";
  }
  return "mean";
}

std::vector<std::string> feature_names(std::span<const std::string> channels) {
  std::vector<std::string> names;
  names.reserve(2 * channels.size());
  for (const auto& ch : channels) names.push_back("HFD:" + ch);
  for (const auto& ch : channels) names.push_back("SampEn:" + ch);
  return names;
}

namespace {

// Channel indices in montage order when the layout is a permutation of the
// montage, otherwise identity.
std::vector<std::size_t> channel_order(const std::vector<std::string>& channels) {
  std::vector<std::size_t> order(channels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (channels.size() != kMontage.size()) return order;
  for (std::size_t i = 0; i < kMontage.size(); ++i) {
    auto it = std::find(channels.begin(), channels.end(), kMontage[i]);
    if (it == channels.end()) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      return order;
    }
    order[i] = static_cast<std::size_t>(it - channels.begin());
  }
  return order;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace

std::vector<FeatureVector> extract_features(const EpochSet& es, const HfdParams& hfd,
                                            const SampEnParams& se, EpochMerge merge,
                                            unsigned threads) {
  if (es.subjects.empty()) return {};
  const auto& layout = es.subjects.front().channels;
  const auto order = channel_order(layout);
  std::vector<std::string> ordered;
  for (auto c : order) ordered.push_back(layout[c]);
  const auto names = feature_names(ordered);

  const std::size_t n_sub = es.subjects.size();
  const std::size_t n_ch = layout.size();
  const std::size_t n_ep = es.epochs_per_subject;
  for (const auto& s : es.subjects) {
    if (s.channels != layout) {
      fail(ErrorCode::InvalidArgument, "subject " + s.subject_id + " has a different layout");
    }
    for (const auto& ch : s.epochs) {
      if (ch.size() != n_ep) {
        fail(ErrorCode::CountMismatch, "subject " + s.subject_id + " has " +
                                           std::to_string(ch.size()) + " epochs, expected " +
                                           std::to_string(n_ep));
      }
    }
  }

  // hfd_v / se_v indexed [subject][output channel][epoch].
  const auto slot = [&](std::size_t s, std::size_t c, std::size_t e) {
    return (s * n_ch + c) * n_ep + e;
  };
  std::vector<double> hfd_v(n_sub * n_ch * n_ep), se_v(n_sub * n_ch * n_ep);
  parallel_for(n_sub * n_ch * n_ep, threads, [&](std::size_t job) {
    const std::size_t e = job % n_ep;
    const std::size_t c = (job / n_ep) % n_ch;
    const std::size_t s = job / (n_ep * n_ch);
    const auto& samples = es.subjects[s].epochs[order[c]][e];
    try {
      hfd_v[slot(s, c, e)] = higuchi_fd(samples, hfd);
      se_v[slot(s, c, e)] = sample_entropy(samples, se);
    } catch (const Error& err) {
      throw Error(err.code(), "subject " + es.subjects[s].subject_id + ", channel " +
                                  ordered[c] + ", epoch " + std::to_string(e) + ": " + err.detail());
    }
  });

  std::vector<FeatureVector> out;
  const auto make = [&](std::size_t s, int epoch) {
    FeatureVector fv;
    fv.subject_id = es.subjects[s].subject_id;
    fv.epoch = epoch;
    fv.names = names;
    fv.values.resize(2 * n_ch);
    return fv;
  };
  if (merge == EpochMerge::PerEpoch) {
    for (std::size_t s = 0; s < n_sub; ++s) {
      for (std::size_t e = 0; e < n_ep; ++e) {
        auto fv = make(s, static_cast<int>(e));
        for (std::size_t c = 0; c < n_ch; ++c) {
          fv.values[c] = hfd_v[slot(s, c, e)];
          fv.values[n_ch + c] = se_v[slot(s, c, e)];
        }
        out.push_back(std::move(fv));
      }
    }
    return out;
  }

  for (std::size_t s = 0; s < n_sub; ++s) {
    auto fv = make(s, -1);
    for (std::size_t c = 0; c < n_ch; ++c) {
      std::vector<double> h(n_ep), q(n_ep);
      for (std::size_t e = 0; e < n_ep; ++e) {
        h[e] = hfd_v[slot(s, c, e)];
        q[e] = se_v[slot(s, c, e)];
      }
      if (merge == EpochMerge::Median) {
        fv.values[c] = median_of(h);
        fv.values[n_ch + c] = median_of(q);
      } else {
        fv.values[c] = std::accumulate(h.begin(), h.end(), 0.0) / static_cast<double>(n_ep);
        fv.values[n_ch + c] = std::accumulate(q.begin(), q.end(), 0.0) / static_cast<double>(n_ep);
      }
    }
    out.push_back(std::move(fv));
  }
  return out;
}

}  // namespace ncx
