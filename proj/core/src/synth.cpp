#include "ncx/synth.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <json.hpp>
#include <numbers>
#include <random>
#include <unsupported/Eigen/FFT>

#include "ncx/error.hpp"
#include "ncx/parallel.hpp"

namespace ncx {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Base oscillator frequencies (Hz at tempo 1) and 1/sqrt(f) amplitudes.
constexpr std::array<double, 5> kBaseFreqs = {2.0, 5.0, 10.0, 11.0, 20.0};

void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::ParameterOutOfRange, what);
}

std::vector<double> circulant_eigenvalues(double hurst, std::size_t n) {
  std::size_t m = 1;
  while (m < n) m <<= 1;
  std::vector<std::complex<double>> row(2 * m);
  for (std::size_t k = 0; k <= m; ++k) row[k] = fgn_autocovariance(hurst, k);
  for (std::size_t k = 1; k < m; ++k) row[2 * m - k] = row[k];
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, row);
  std::vector<double> lambda(spec.size());
  double scale = 0.0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    lambda[i] = spec[i].real();
    scale = std::max(scale, std::abs(lambda[i]));
  }
  for (auto& l : lambda) {
    if (l < -1e-10 * scale) {
      fail(ErrorCode::EmbeddingFailure, "circulant embedding has negative eigenvalue " + std::to_string(l));
    }
    l = std::max(l, 0.0);
  }
  return lambda;
}

std::vector<double> fgn_circulant(double hurst, std::size_t n, std::uint64_t seed) {
  const auto lambda = circulant_eigenvalues(hurst, n);
  const std::size_t len = lambda.size();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<std::complex<double>> w(len);
  for (std::size_t i = 0; i < len; ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    w[i] = std::sqrt(lambda[i] / static_cast<double>(len)) * std::complex<double>(re, im);
  }
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> y;
  fft.fwd(y, w);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = y[i].real();
  return out;
}

std::vector<double> fgn_cholesky(double hurst, std::size_t n, std::uint64_t seed) {
  const auto sz = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd cov(sz, sz);
  for (Eigen::Index i = 0; i < sz; ++i) {
    for (Eigen::Index j = 0; j < sz; ++j) {
      cov(i, j) = fgn_autocovariance(hurst, static_cast<std::size_t>(std::abs(i - j)));
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) fail(ErrorCode::EmbeddingFailure, "fGn covariance not positive definite");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(sz);
  for (Eigen::Index i = 0; i < sz; ++i) z(i) = normal(rng);
  const Eigen::VectorXd x = llt.matrixL() * z;
  return {x.data(), x.data() + x.size()};
}

struct Jitter {
  double subject_w = 0.0, subject_t = 0.0, channel_w = 0.0, channel_t = 0.0;
};

Jitter draw_jitter(std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Jitter j;
  j.subject_w = normal(rng);
  j.subject_t = normal(rng);
  j.channel_w = normal(rng);
  j.channel_t = normal(rng);
  return j;
}

struct PilotStats {
  double hfd = 0.0;
  double sampen = 0.0;
};

class Pilot {
 public:
  Pilot(const SurrogateConfig& cfg, int group) : cfg_(cfg) {
    length_ = epoch_length(cfg.epoch_seconds, cfg.fs);
    for (std::size_t p = 0; p < cfg.pilot_epochs; ++p) {
      const auto seed = mix_seed(cfg.seed, 0x5000 + 1000 * static_cast<std::uint64_t>(group) + p);
      std::mt19937_64 rng(seed);
      const auto j = draw_jitter(rng);
      w_scale_.push_back(std::exp(cfg.subject_jitter * j.subject_w + cfg.channel_jitter * j.channel_w));
      t_scale_.push_back(std::exp(cfg.subject_jitter * j.subject_t + cfg.channel_jitter * j.channel_t));
      seeds_.push_back(mix_seed(seed, 1));
    }
  }

  PilotStats evaluate(double w, double tempo, bool want_hfd, bool want_sampen, unsigned threads) const {
    const std::size_t n = seeds_.size();
    std::vector<double> h(n, 0.0), s(n, 0.0);
    parallel_for(n, threads, [&](std::size_t p) {
      const auto x = mixture_series(std::min(1.0, w * w_scale_[p]), tempo * t_scale_[p], length_,
                                    cfg_.fs, seeds_[p]);
      if (want_hfd) h[p] = higuchi_fd(x, cfg_.hfd);
      if (want_sampen) s[p] = sample_entropy(x, cfg_.sampen);
    });
    PilotStats st;
    for (std::size_t p = 0; p < n; ++p) {
      st.hfd += h[p] / static_cast<double>(n);
      st.sampen += s[p] / static_cast<double>(n);
    }
    return st;
  }

 private:
  const SurrogateConfig& cfg_;
  std::size_t length_ = 0;
  std::vector<double> w_scale_, t_scale_;
  std::vector<std::uint64_t> seeds_;
};

// Bisection for f(x) = target on [lo, hi] with f increasing. Returns the
// midpoint of the final bracket, or the first point within `tol`.
template <class F>
double bisect(F&& f, double lo, double hi, double target, double tol, int max_iter,
              const std::string& what) {
  const double f_lo = f(lo);
  const double f_hi = f(hi);
  if (!(f_lo <= target && target <= f_hi)) {
    fail(ErrorCode::CalibrationFailure,
         what + " target " + std::to_string(target) + " outside achievable range [" +
             std::to_string(f_lo) + ", " + std::to_string(f_hi) + "]");
  }
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < max_iter; ++it) {
    mid = 0.5 * (lo + hi);
    const double v = f(mid);
    if (std::abs(v - target) <= tol) return mid;
    (v < target ? lo : hi) = mid;
  }
  return mid;
}

// Tolerance on a statistic, tightened so that hitting it keeps the pilot mean
// inside the target range.
double tolerance_for(const SurrogateConfig& cfg, const TargetRange& r) {
  return std::min(cfg.tolerance, 0.25 * (r.hi - r.lo));
}

}  // namespace

std::vector<double> weierstrass(double dimension, std::size_t n, double fs, int n_terms,
                                std::uint64_t phase_seed) {
  require(dimension > 1.0 && dimension < 2.0, "weierstrass dimension must lie in (1, 2)");
  require(n_terms >= 20, "weierstrass needs at least 20 terms");
  require(n > 0 && fs > 0.0, "weierstrass needs N > 0 and fs > 0");
  const double a = std::pow(kWeierstrassRatio, dimension - 2.0);
  std::mt19937_64 rng(phase_seed);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  std::vector<double> x(n, 0.0);
  double amp = 1.0;
  double freq = 1.0;
  for (int term = 0; term < n_terms; ++term) {
    const double phi = phase(rng);
    for (std::size_t i = 0; i < n; ++i) {
      // Reduce the phase in cycles first; b^n t grows past double precision.
      const double cycles = std::fmod(freq * (static_cast<double>(i) / fs), 1.0);
      x[i] += amp * std::cos(kTwoPi * cycles + phi);
    }
    amp *= a;
    freq *= kWeierstrassRatio;
  }
  return x;
}

std::vector<double> white_noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> x(n);
  for (auto& v : x) v = normal(rng);
  return x;
}

double fgn_autocovariance(double hurst, std::size_t lag) {
  const double k = static_cast<double>(lag);
  const double h2 = 2.0 * hurst;
  return 0.5 * (std::pow(k + 1.0, h2) - 2.0 * std::pow(k, h2) + std::pow(std::abs(k - 1.0), h2));
}

std::vector<double> fgn_embedding_covariance(double hurst, std::size_t n) {
  require(hurst > 0.0 && hurst < 1.0, "Hurst exponent must lie in (0, 1)");
  require(n > 0, "fGn length must be positive");
  const auto lambda = circulant_eigenvalues(hurst, n);
  std::vector<std::complex<double>> spec(lambda.begin(), lambda.end());
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> c;
  fft.inv(c, spec);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = c[i].real();
  return out;
}

std::vector<double> fgn(double hurst, std::size_t n, std::uint64_t seed, FgnMethod method) {
  require(hurst > 0.0 && hurst < 1.0, "Hurst exponent must lie in (0, 1)");
  require(n > 0, "fGn length must be positive");
  switch (method) {
    case FgnMethod::Circulant: return fgn_circulant(hurst, n, seed);
    case FgnMethod::Cholesky: return fgn_cholesky(hurst, n, seed);
    case FgnMethod::Auto: break;
  }
  try {
    return fgn_circulant(hurst, n, seed);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::EmbeddingFailure) throw;
    return fgn_cholesky(hurst, n, seed);
  }
}

std::vector<double> fbm(double hurst, std::size_t n, std::uint64_t seed, FgnMethod method) {
  auto x = fgn(hurst, n, seed, method);
  for (std::size_t i = 1; i < n; ++i) x[i] += x[i - 1];
  return x;
}

void SurrogateConfig::validate() const {
  require(n_patients >= 2, "n_patients must be at least 2");
  require(n_controls >= 2, "n_controls must be at least 2");
  for (const auto* r : {&patient_hfd, &control_hfd}) {
    require(r->lo >= 1.0 && r->hi <= 2.0 && r->lo <= r->hi, "HFD target ranges must lie within [1, 2]");
  }
  for (const auto* r : {&patient_sampen, &control_sampen}) {
    require(r->lo > 0.0 && r->lo <= r->hi, "SampEn target ranges must be positive");
  }
  require(n_channels >= 1, "n_channels must be positive");
  require(fs > 0.0, "fs must be positive");
  require(epoch_seconds > 0.0, "epoch_seconds must be positive");
  require(epochs_per_subject >= 1, "epochs_per_subject must be positive");
  require(subject_jitter >= 0.0 && channel_jitter >= 0.0, "jitter must be nonnegative");
  require(pilot_epochs >= 1, "pilot_epochs must be positive");
  require(max_bisection >= 1 && max_bisection <= 40, "max_bisection must lie in [1, 40]");
  require(tolerance > 0.0, "tolerance must be positive");
}

std::vector<double> mixture_series(double noise_weight, double tempo, std::size_t n, double fs,
                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  std::normal_distribution<double> normal;
  std::vector<double> base(n, 0.0);
  for (double f : kBaseFreqs) {
    const double phi = phase(rng);
    const double amp = 1.0 / std::sqrt(f);
    const double cycles_per_sample = f * tempo / fs;
    for (std::size_t i = 0; i < n; ++i) {
      base[i] += amp * std::cos(kTwoPi * std::fmod(cycles_per_sample * static_cast<double>(i), 1.0) + phi);
    }
  }
  const double sd = series_sd(base, SdConvention::Population);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = (1.0 - noise_weight) * base[i] / sd + noise_weight * normal(rng);
  }
  return x;
}

MixingWeights calibrate_group(const SurrogateConfig& cfg, const TargetRange& hfd,
                              const TargetRange& sampen, int group, unsigned threads) {
  cfg.validate();
  const Pilot pilot(cfg, group);
  const double tol_h = tolerance_for(cfg, hfd);
  const double tol_s = tolerance_for(cfg, sampen);
  const std::string name = group == 0 ? "patient" : "control";

  constexpr double kMaxWeight = 0.5;
  const double lt_lo = std::log(0.1), lt_hi = std::log(8.0);

  // One alternating pass of 1-D bisections finds the basin; HFD and SampEn
  // both react to both knobs, so alternating alone converges very slowly.
  MixingWeights mw;
  mw.tempo = 1.0;
  mw.noise_weight = bisect(
      [&](double w) { return pilot.evaluate(w, mw.tempo, true, false, threads).hfd; }, 0.0,
      kMaxWeight, hfd.mid(), tol_h, cfg.max_bisection, name + " HFD");
  double lt = bisect(
      [&](double t) { return pilot.evaluate(mw.noise_weight, std::exp(t), false, true, threads).sampen; },
      lt_lo, lt_hi, sampen.mid(), tol_s, cfg.max_bisection, name + " SampEn");
  double w = mw.noise_weight;

  // Then damped Newton on (w, log tempo) with a forward-difference Jacobian,
  // residuals measured in units of the tolerance.
  const auto residual = [&](double wv, double ltv) {
    const auto st = pilot.evaluate(wv, std::exp(ltv), true, true, threads);
    return std::array<double, 4>{(st.hfd - hfd.mid()) / tol_h, (st.sampen - sampen.mid()) / tol_s,
                                 st.hfd, st.sampen};
  };
  const auto norm = [](const std::array<double, 4>& r) { return std::max(std::abs(r[0]), std::abs(r[1])); };
  auto r = residual(w, lt);
  for (int round = 0; round < cfg.max_rounds && norm(r) > 1.0; ++round) {
    const double dw = std::max(1e-4, 0.01 * w), dlt = 0.01;
    const auto rw = residual(std::min(kMaxWeight, w + dw), lt);
    const auto rt = residual(w, std::min(lt_hi, lt + dlt));
    const double a = (rw[0] - r[0]) / dw, b = (rt[0] - r[0]) / dlt;
    const double c = (rw[1] - r[1]) / dw, d = (rt[1] - r[1]) / dlt;
    const double det = a * d - b * c;
    if (!(std::abs(det) > 0.0) || !std::isfinite(det)) break;
    const double step_w = -(d * r[0] - b * r[1]) / det;
    const double step_lt = -(-c * r[0] + a * r[1]) / det;
    bool improved = false;
    for (double t = 1.0; t >= 1.0 / 64.0; t *= 0.5) {
      const double nw = std::clamp(w + t * step_w, 0.0, kMaxWeight);
      const double nlt = std::clamp(lt + t * step_lt, lt_lo, lt_hi);
      const auto nr = residual(nw, nlt);
      if (norm(nr) < norm(r)) {
        w = nw;
        lt = nlt;
        r = nr;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  mw.noise_weight = w;
  mw.tempo = std::exp(lt);
  mw.pilot_hfd = r[2];
  mw.pilot_sampen = r[3];
  if (norm(r) <= 1.0) return mw;
  fail(ErrorCode::CalibrationFailure,
       name + " calibration did not settle: pilot HFD " + std::to_string(mw.pilot_hfd) +
           ", SampEn " + std::to_string(mw.pilot_sampen));
}

SurrogateCohort surrogate_cohort(const SurrogateConfig& cfg, unsigned threads) {
  cfg.validate();
  SurrogateCohort cohort;
  cohort.patient = calibrate_group(cfg, cfg.patient_hfd, cfg.patient_sampen, 0, threads);
  cohort.control = calibrate_group(cfg, cfg.control_hfd, cfg.control_sampen, 1, threads);

  std::vector<std::string> channels;
  for (std::size_t c = 0; c < cfg.n_channels; ++c) {
    channels.push_back(cfg.n_channels == kMontage.size() ? std::string(kMontage[c])
                                                         : "Ch" + std::to_string(c + 1));
  }
  const std::size_t len = epoch_length(cfg.epoch_seconds, cfg.fs) * cfg.epochs_per_subject;
  const std::size_t total = cfg.n_patients + cfg.n_controls;
  cohort.recordings.resize(total);
  cohort.subjects.resize(total);
  cohort.labels.resize(total);

  parallel_for(total, threads, [&](std::size_t s) {
    const bool patient = s < cfg.n_patients;
    const std::size_t idx = patient ? s + 1 : s - cfg.n_patients + 1;
    char id[16];
    std::snprintf(id, sizeof id, "%c%02zu", patient ? 'P' : 'C', idx);
    const auto& mw = patient ? cohort.patient : cohort.control;

    SurrogateSubject subj;
    subj.id = id;
    subj.label = patient ? 1 : 0;
    subj.seed = mix_seed(cfg.seed, 0x100 + s);
    std::mt19937_64 rng(subj.seed);
    std::normal_distribution<double> normal;
    const double zw = normal(rng);
    const double zt = normal(rng);

    Recording rec;
    rec.subject_id = subj.id;
    rec.fs = cfg.fs;
    rec.channels = channels;
    for (std::size_t c = 0; c < cfg.n_channels; ++c) {
      const auto ch_seed = mix_seed(subj.seed, c);
      std::mt19937_64 ch_rng(ch_seed);
      std::normal_distribution<double> ch_normal;
      const double cw = ch_normal(ch_rng);
      const double ct = ch_normal(ch_rng);
      const double w = std::min(1.0, mw.noise_weight * std::exp(cfg.subject_jitter * zw + cfg.channel_jitter * cw));
      const double t = mw.tempo * std::exp(cfg.subject_jitter * zt + cfg.channel_jitter * ct);
      subj.noise_weight.push_back(w);
      subj.tempo.push_back(t);
      rec.data.push_back(mixture_series(w, t, len, cfg.fs, mix_seed(ch_seed, 1)));
    }
    cohort.labels[s] = subj.label;
    cohort.recordings[s] = std::move(rec);
    cohort.subjects[s] = std::move(subj);
  });
  return cohort;
}

std::string cohort_manifest_json(const SurrogateCohort& cohort, const SurrogateConfig& cfg) {
  using nlohmann::ordered_json;
  const auto group = [](const MixingWeights& m) {
    return ordered_json{{"noise_weight", m.noise_weight},
                        {"tempo", m.tempo},
                        {"pilot_hfd", m.pilot_hfd},
                        {"pilot_sampen", m.pilot_sampen}};
  };
  ordered_json subjects = ordered_json::array();
  for (const auto& s : cohort.subjects) {
    subjects.push_back({{"id", s.id},
                        {"label", s.label},
                        {"seed", s.seed},
                        {"noise_weight", s.noise_weight},
                        {"tempo", s.tempo}});
  }
  ordered_json doc{{"seed", cfg.seed},
                   {"fs", cfg.fs},
                   {"epoch_seconds", cfg.epoch_seconds},
                   {"epochs_per_subject", cfg.epochs_per_subject},
                   {"patient", group(cohort.patient)},
                   {"control", group(cohort.control)},
                   {"subjects", std::move(subjects)}};
  return doc.dump(2) + "\n";
}

}  // namespace ncx
