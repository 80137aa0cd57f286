#include <doctest.h>

#include <cmath>

#include "ncx/error.hpp"
#include "ncx/nonlinear_features.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace ncx;
using testing_util::code_of;

TEST_CASE("curve length on simple series") {
  const std::vector<double> ramp{0, 1, 2, 3, 4, 5};
  CHECK(curve_length(ramp, 1, 1) == 5.0);
  const std::vector<double> flat(40, 2.5);
  for (int k = 1; k <= 8; ++k) {
    for (int m = 1; m <= k; ++m) CHECK(curve_length(flat, k, m) == 0.0);
  }
  const std::vector<double> shortx{1, 2, 3, 4, 5};
  CHECK(code_of([&] { curve_length(shortx, 4, 4); }) == ErrorCode::DegenerateScale);
}

TEST_CASE("curve length matches direct summation") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto x = testing_util::gaussian(50, seed);
    for (int k = 1; k <= 8; ++k) {
      for (int m = 1; m <= k; ++m) {
        const double want = oracle::curve_length(x, k, m);
        CHECK(curve_length(x, k, m) == doctest::Approx(want).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("higuchi fd of affine series is one") {
  for (double slope : {0.001, 1.0, -3.5, 250.0}) {
    std::vector<double> x(5000);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = slope * static_cast<double>(i) + 7.0;
    CHECK(std::abs(higuchi_fd(x) - 1.0) < 1e-6);
  }
}

TEST_CASE("higuchi fd of white noise is near two") {
  double mean = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) mean += higuchi_fd(testing_util::gaussian(5000, seed)) / 20.0;
  CHECK(mean == doctest::Approx(2.0).epsilon(0.025));
}

TEST_CASE("higuchi fd matches naive implementation") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const std::size_t n = 20 + seed * 2;
    const auto x = testing_util::uniform(n, seed + 1000);
    const double want = oracle::higuchi_fd(x, 8);
    REQUIRE(std::abs(higuchi_fd(x) - want) <= 1e-12 * std::abs(want));
  }
}

TEST_CASE("higuchi fd contract") {
  const std::vector<double> flat(100, 1.0);
  CHECK(code_of([&] { higuchi_fd(flat); }) == ErrorCode::ConstantSeries);
  const std::vector<double> tiny{1, 2, 3, 4};
  CHECK_THROWS_AS(higuchi_fd(tiny), Error);
  const auto detail = higuchi_fd_detail(testing_util::gaussian(500, 3));
  CHECK(detail.log_lengths.size() == 8);
  CHECK(detail.out_of_range == (detail.value < 1.0 || detail.value > 2.0));
}

TEST_CASE("sample entropy simple cases") {
  const std::vector<double> flat(50, 4.0);
  CHECK(sample_entropy(flat) == 0.0);
  std::vector<double> alt(60);
  for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2 ? -1.0 : 1.0;
  CHECK(sample_entropy(alt) == 0.0);
}

TEST_CASE("sample entropy counts match brute force") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto x = testing_util::uniform(200, seed);
    const auto c = sample_entropy_counts(x);
    const auto want = oracle::sampen_counts(x, 2, 0.15 * oracle::population_sd(x));
    REQUIRE(c.a == want.a);
    REQUIRE(c.b == want.b);
    CHECK(sample_entropy(x) == -std::log(static_cast<double>(want.a) / static_cast<double>(want.b)));
  }
}

TEST_CASE("sample entropy without matches reports counts") {
  std::vector<double> ramp(10);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<double>(i);
  try {
    sample_entropy(ramp);
    FAIL("expected NoTemplateMatchesError");
  } catch (const NoTemplateMatchesError& e) {
    CHECK(e.a() == 0);
    CHECK(e.b() == 0);
    CHECK(e.code() == ErrorCode::NoTemplateMatches);
  }
}

TEST_CASE("sample entropy sd convention") {
  const auto x = testing_util::gaussian(300, 5);
  SampEnParams pop, smp;
  smp.sd = SdConvention::Sample;
  const auto a = sample_entropy_counts(x, pop);
  const auto b = sample_entropy_counts(x, smp);
  CHECK(b.r > a.r);
  CHECK(b.r == doctest::Approx(a.r * std::sqrt(300.0 / 299.0)).epsilon(1e-14));
}

TEST_CASE("feature names cover both measures") {
  std::vector<std::string> chans(kMontage.begin(), kMontage.end());
  const auto names = feature_names(chans);
  REQUIRE(names.size() == 38);
  CHECK(names.front() == "HFD:Fp1");
  CHECK(names[19] == "SampEn:Fp1");
  CHECK(names.back() == "SampEn:Pz");
}

namespace {

EpochSet make_epoch_set(std::size_t subjects, std::size_t channels, std::size_t epochs, std::size_t len,
                        bool identical = false) {
  EpochSet es;
  es.fs = 1000.0;
  es.epoch_length = len;
  es.epochs_per_subject = epochs;
  for (std::size_t s = 0; s < subjects; ++s) {
    SubjectEpochs se;
    se.subject_id = "S" + std::to_string(s);
    for (std::size_t c = 0; c < channels; ++c) {
      se.channels.push_back(channels == kMontage.size() ? std::string(kMontage[c]) : "Ch" + std::to_string(c));
      std::vector<std::vector<double>> eps;
      for (std::size_t e = 0; e < epochs; ++e) {
        eps.push_back(testing_util::gaussian(len, identical ? s * 100 + c : s * 1000 + c * 10 + e));
      }
      se.epochs.push_back(std::move(eps));
    }
    es.subjects.push_back(std::move(se));
  }
  return es;
}

}  // namespace

TEST_CASE("extract features yields 38 values per subject") {
  const auto es = make_epoch_set(3, 19, 3, 300);
  const auto fv = extract_features(es, {}, {}, EpochMerge::Mean);
  REQUIRE(fv.size() == 3);
  for (const auto& v : fv) {
    CHECK(v.values.size() == 38);
    CHECK(v.epoch == -1);
    for (double x : v.values) CHECK(std::isfinite(x));
  }
}

TEST_CASE("mean merge equals mean of per-epoch vectors") {
  const auto es = make_epoch_set(2, 4, 3, 300);
  const auto merged = extract_features(es, {}, {}, EpochMerge::Mean);
  const auto per = extract_features(es, {}, {}, EpochMerge::PerEpoch);
  REQUIRE(per.size() == 6);
  for (std::size_t s = 0; s < 2; ++s) {
    for (std::size_t j = 0; j < 8; ++j) {
      double sum = 0.0;
      for (std::size_t e = 0; e < 3; ++e) sum += per[s * 3 + e].values[j];
      CHECK(std::abs(merged[s].values[j] - sum / 3.0) <= 1e-15);
    }
  }
}

TEST_CASE("identical epochs merge to the single-epoch vector") {
  const auto es = make_epoch_set(1, 3, 3, 300, true);
  const auto merged = extract_features(es, {}, {}, EpochMerge::Mean);
  const auto median = extract_features(es, {}, {}, EpochMerge::Median);
  const auto per = extract_features(es, {}, {}, EpochMerge::PerEpoch);
  for (std::size_t j = 0; j < 6; ++j) {
    CHECK(merged[0].values[j] == doctest::Approx(per[0].values[j]).epsilon(1e-15));
    CHECK(median[0].values[j] == per[0].values[j]);
  }
}

TEST_CASE("extraction is independent of thread count") {
  const auto es = make_epoch_set(4, 5, 3, 250);
  const auto a = extract_features(es, {}, {}, EpochMerge::Mean, 1);
  const auto b = extract_features(es, {}, {}, EpochMerge::Mean, 4);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].values == b[i].values);
}

TEST_CASE("feature errors name subject, channel and epoch") {
  auto es = make_epoch_set(2, 3, 2, 200);
  std::fill(es.subjects[1].epochs[2][1].begin(), es.subjects[1].epochs[2][1].end(), 0.0);
  try {
    extract_features(es, {}, {});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConstantSeries);
    const std::string msg = e.what();
    CHECK(msg.find("S1") != std::string::npos);
    CHECK(msg.find("Ch2") != std::string::npos);
    CHECK(msg.find("epoch 1") != std::string::npos);
  }
}

TEST_CASE("merge rule names round-trip") {
  for (auto m : {EpochMerge::Mean, EpochMerge::Median, EpochMerge::PerEpoch}) {
    CHECK(parse_epoch_merge(to_string(m)) == m);
  }
  CHECK_FALSE(parse_epoch_merge("mode").has_value());
}
