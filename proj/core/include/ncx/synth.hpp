#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ncx/nonlinear_features.hpp"
#include "ncx/signal_io.hpp"

namespace ncx {

inline constexpr double kWeierstrassRatio = 1.5;

/// W(t) = sum_n a^n cos(2 pi b^n t + phi_n), b = 1.5, a = b^(D-2), random phases.
/// Throws ParameterOutOfRange unless 1 < D < 2, n_terms >= 20, N > 0, fs > 0.
std::vector<double> weierstrass(double dimension, std::size_t n, double fs, int n_terms = 50,
                                std::uint64_t phase_seed = 0);

std::vector<double> white_noise(std::size_t n, std::uint64_t seed);

enum class FgnMethod { Auto, Circulant, Cholesky };

/// Analytic fractional Gaussian noise autocovariance at `lag` (unit variance).
double fgn_autocovariance(double hurst, std::size_t lag);

/// Autocovariance at lags 0..n-1 implied by the circulant embedding actually
/// used for synthesis. Throws EmbeddingFailure on a negative eigenvalue.
std::vector<double> fgn_embedding_covariance(double hurst, std::size_t n);

/// Unit-variance fractional Gaussian noise. Auto uses circulant embedding and
/// falls back to Cholesky when the embedding is not nonnegative definite.
std::vector<double> fgn(double hurst, std::size_t n, std::uint64_t seed,
                        FgnMethod method = FgnMethod::Auto);

/// Fractional Brownian motion as the running sum of fgn().
std::vector<double> fbm(double hurst, std::size_t n, std::uint64_t seed,
                        FgnMethod method = FgnMethod::Auto);

struct TargetRange {
  double lo = 0.0;
  double hi = 0.0;
  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

struct SurrogateConfig {
  std::size_t n_patients = 21;
  std::size_t n_controls = 20;
  TargetRange patient_hfd{1.0812, 1.1553};
  TargetRange control_hfd{1.0194, 1.0198};
  TargetRange patient_sampen{0.3999, 0.4160};
  TargetRange control_sampen{0.1417, 0.1591};
  std::size_t n_channels = 19;
  double fs = 1000.0;
  double epoch_seconds = 5.0;
  std::size_t epochs_per_subject = 3;
  std::uint64_t seed = 20190101;

  /// Log-scale spread of the mixing parameters between subjects and between
  /// channels of one subject.
  double subject_jitter = 0.05;
  double channel_jitter = 0.02;

  std::size_t pilot_epochs = 20;
  int max_bisection = 40;
  double tolerance = 1e-3;
  int max_rounds = 8;

  HfdParams hfd;
  SampEnParams sampen;

  /// Throws ParameterOutOfRange naming the offending field.
  void validate() const;
};

/// Group-level mixing parameters: x = (1 - w) base(tempo) + w noise.
struct MixingWeights {
  double noise_weight = 0.0;
  double tempo = 1.0;
  double pilot_hfd = 0.0;
  double pilot_sampen = 0.0;
};

struct SurrogateSubject {
  std::string id;
  int label = 0;
  std::uint64_t seed = 0;
  std::vector<double> noise_weight;  // per channel
  std::vector<double> tempo;         // per channel
};

struct SurrogateCohort {
  std::vector<Recording> recordings;
  std::vector<int> labels;
  std::vector<SurrogateSubject> subjects;
  MixingWeights patient;
  MixingWeights control;
};

/// One channel of the surrogate model over `n` samples.
std::vector<double> mixture_series(double noise_weight, double tempo, std::size_t n, double fs,
                                   std::uint64_t seed);

/// Bisection calibration of one group's mixing weights against the pilot set.
/// `group` selects the pilot seeds. Throws CalibrationFailure.
MixingWeights calibrate_group(const SurrogateConfig& cfg, const TargetRange& hfd,
                              const TargetRange& sampen, int group, unsigned threads = 1);

/// Patients (label 1, ids P01..) then controls (label 0, ids C01..).
SurrogateCohort surrogate_cohort(const SurrogateConfig& cfg, unsigned threads = 1);

std::string cohort_manifest_json(const SurrogateCohort& cohort, const SurrogateConfig& cfg);

}  // namespace ncx
