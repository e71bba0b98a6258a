#include "blinkica/errors.hpp"
#include "blinkica/signal_core.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace blinkica;

namespace {

std::vector<double> sine(double f, double fs, std::size_t n, double amp = 1.0, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t t = 0; t < n; ++t) x[t] = amp * std::sin(2.0 * std::numbers::pi * f * t / fs + phase);
  return x;
}

std::vector<double> gaussian(std::size_t n, std::uint64_t seed, double sd = 1.0) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, sd);
  std::vector<double> x(n);
  for (auto& v : x) v = g(rng);
  return x;
}

}  // namespace

TEST_SUITE("signal_core") {

TEST_CASE("pearson: self, sign flip and a hand-checked pair") {
  const std::vector<double> x{0.3, -1.2, 2.5, 0.7, 1.1};
  std::vector<double> neg(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) neg[i] = -x[i];
  CHECK(pearson(x, x) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pearson(x, neg) == doctest::Approx(-1.0).epsilon(1e-15));

  const std::vector<double> a{1, 2, 3, 4}, b{1, 2, 3, 5};
  const double expected = oracle::pearson(a, b);
  CHECK(expected == doctest::Approx(0.9827).epsilon(1e-4));
  CHECK(pearson(a, b) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(pearson(b, a) == doctest::Approx(pearson(a, b)).epsilon(1e-15));
}

TEST_CASE("pearson: errors are distinct, never NaN") {
  const std::vector<double> a{1, 2, 3}, b{1, 2}, c{4, 4, 4};
  CHECK_THROWS_AS(pearson(a, b), ShapeError);
  CHECK_THROWS_AS(pearson(std::vector<double>{1}, std::vector<double>{2}), ShapeError);
  CHECK_THROWS_AS(pearson(a, c), DegenerateInputError);
  CHECK_THROWS_AS(pearson(c, a), DegenerateInputError);
}

TEST_CASE("rms") {
  CHECK(rms(std::vector<double>(10, 0.0)) == 0.0);
  CHECK(rms(std::vector<double>(7, -3.5)) == doctest::Approx(3.5));
  // 50 whole periods of a unit sine.
  const auto s = sine(5.0, 1000.0, 10000);
  CHECK(rms(s) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
  CHECK(rms(s) == doctest::Approx(oracle::rms(s)).epsilon(1e-12));
  CHECK_THROWS_AS(rms(std::vector<double>{}), ShapeError);
}

TEST_CASE("snr_db") {
  CHECK(snr_db(3.0, 3.0) == doctest::Approx(0.0));
  CHECK(snr_db(5.62, 1.0) == doctest::Approx(15.0).epsilon(1e-3));
  CHECK(snr_db(2.37, 1.0) == doctest::Approx(7.5).epsilon(2e-3));
  CHECK(snr_db(10.0, 1.0) == doctest::Approx(20.0));
  CHECK_THROWS_AS(snr_db(0.0, 1.0), RangeError);
  CHECK_THROWS_AS(snr_db(1.0, -1.0), RangeError);
}

TEST_CASE("add_noise_at_snr") {
  const auto ch = sine(10.0, 1000.0, 60000, 20.0);
  Rng rng(1);
  const auto same = add_noise_at_snr(ch, kNoNoise, rng);
  CHECK(same == ch);

  Rng r1(7), r2(7);
  const auto noisy = add_noise_at_snr(ch, 10.0, r1);
  REQUIRE(noisy.size() == ch.size());
  std::vector<double> diff(ch.size());
  for (std::size_t i = 0; i < ch.size(); ++i) diff[i] = noisy[i] - ch[i];
  CHECK(std::abs(snr_db(oracle::rms(ch), oracle::rms(diff)) - 10.0) < 0.2);
  const auto noise = noise_at_snr(ch, 10.0, r2);
  for (std::size_t i = 0; i < ch.size(); ++i) REQUIRE(diff[i] == doctest::Approx(noise[i]).epsilon(1e-12));

  Rng r3(7);
  CHECK(add_noise_at_snr(ch, 10.0, r3) == noisy);

  CHECK_THROWS_AS(add_noise_at_snr(std::vector<double>(100, 0.0), 10.0, rng), DegenerateInputError);
  CHECK_THROWS_AS(add_noise_at_snr(ch, std::nan(""), rng), RangeError);
}

TEST_CASE("butterworth: single-pass magnitude matches the closed form") {
  for (double fc : {1.0, 35.0, 100.0}) {
    const ButterworthFilter lp(FilterKind::lowpass, fc, 1000.0);
    const ButterworthFilter hp(FilterKind::highpass, fc, 1000.0);
    for (double f : {0.2, 0.5, 1.0, 3.0, 10.0, 35.0, 60.0, 100.0, 250.0, 450.0}) {
      CHECK(lp.magnitude(f) == doctest::Approx(oracle::butterworth_lowpass_mag(f, fc, 1000.0, 4)).epsilon(1e-9));
      CHECK(hp.magnitude(f) == doctest::Approx(oracle::butterworth_highpass_mag(f, fc, 1000.0, 4)).epsilon(1e-9));
    }
  }
}

TEST_CASE("highpass / lowpass examples") {
  const double fs = 1000.0;
  const auto zero = std::vector<double>(5000, 0.0);
  for (double v : highpass(zero, fs, 1.0)) REQUIRE(v == 0.0);

  const auto s100 = sine(100.0, fs, 10000);
  const auto lp = lowpass(s100, fs, 35.0);
  CHECK(lp.size() == s100.size());
  CHECK(rms(lp) < 0.05 * rms(s100));
  // Squared magnitude predicts the steady-state gain away from the edges.
  const double predicted = std::pow(oracle::butterworth_lowpass_mag(100.0, 35.0, fs, 4), 2);
  CHECK(rms(std::span(lp).subspan(1000, 8000)) / rms(s100) == doctest::Approx(predicted).epsilon(0.05));

  const auto s10 = sine(10.0, fs, 10000);
  const auto hp = highpass(s10, fs, 1.0);
  CHECK(std::abs(rms(hp) / rms(s10) - 1.0) < 0.02);
}

TEST_CASE("filters reject cutoffs outside (0, fs/2) and keep recording shape") {
  CHECK_THROWS_AS(lowpass(std::vector<double>(100, 1.0), 100.0, 50.0), RangeError);
  CHECK_THROWS_AS(highpass(std::vector<double>(100, 1.0), 100.0, 0.0), RangeError);
  CHECK_THROWS_AS(highpass(std::vector<double>(100, 1.0), 100.0, -3.0), RangeError);

  SignalMatrix data(2, 3000);
  Rng rng(3);
  std::normal_distribution<double> g;
  for (Eigen::Index i = 0; i < data.size(); ++i) data.data()[i] = g(rng);
  const Recording rec(data, 500.0, {"A", "B"}, {ChannelRole::measurement, ChannelRole::eog});
  const Recording out = lowpass(rec, 40.0);
  CHECK(out.data.rows() == 2);
  CHECK(out.data.cols() == 3000);
  CHECK(out.labels == rec.labels);
  const auto row1 = lowpass(rec.channel(1), 500.0, 40.0);
  for (std::size_t t = 0; t < row1.size(); ++t) REQUIRE(out.channel(1)[t] == row1[t]);
}

TEST_CASE("filtfilt is zero phase") {
  // A symmetric pulse stays symmetric about its centre.
  std::vector<double> x(2001, 0.0);
  for (int t = -100; t <= 100; ++t) x[1000 + t] = std::exp(-t * t / 800.0);
  const auto y = lowpass(x, 1000.0, 35.0);
  for (int k = 1; k < 400; ++k) REQUIRE(y[1000 + k] == doctest::Approx(y[1000 - k]).epsilon(1e-9));
}

TEST_CASE("gaussianity_stats: Gaussian and uniform draws") {
  const auto g = gaussian(15000, 11, 2.0);
  const auto r = gaussianity_stats(g);
  const auto m = oracle::moments(g);
  CHECK(r.mean == doctest::Approx(m.mean).epsilon(1e-12));
  CHECK(r.std == doctest::Approx(std::sqrt(m.var)).epsilon(1e-12));
  CHECK(r.skewness == doctest::Approx(m.skew).epsilon(1e-9));
  CHECK(r.kurtosis == doctest::Approx(m.kurt).epsilon(1e-9));
  CHECK(std::abs(r.skewness) < 3.0 * std::sqrt(6.0 / 15000));
  CHECK(std::abs(r.kurtosis - 3.0) < 3.0 * std::sqrt(24.0 / 15000));
  CHECK(r.max_cdf_distance >= 0.0);
  CHECK(r.max_cdf_distance < 0.015);

  Rng rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> uni(15000);
  for (auto& v : uni) v = u(rng);
  CHECK(std::abs(gaussianity_stats(uni).kurtosis - 1.8) < 0.1);
  CHECK(gaussianity_stats(uni).max_cdf_distance > 0.03);
}

TEST_CASE("gaussianity_stats: KS distance by brute force") {
  const std::vector<double> x{-1.3, 0.2, 0.25, 0.9, 1.7, -0.4, 2.2, -2.0, 0.05, 0.6};
  const auto r = gaussianity_stats(x);
  const auto m = oracle::moments(x);
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double phi = 0.5 * std::erfc(-(sorted[i] - m.mean) / std::sqrt(2.0 * m.var));
    d = std::max({d, std::abs(phi - double(i) / sorted.size()), std::abs(phi - double(i + 1) / sorted.size())});
  }
  CHECK(r.max_cdf_distance == doctest::Approx(d).epsilon(1e-12));
}

TEST_CASE("gaussianity_stats errors") {
  CHECK_THROWS_AS(gaussianity_stats(std::vector<double>(8, 2.0)), DegenerateInputError);
  CHECK_THROWS_AS(gaussianity_stats(std::vector<double>{1, 2, 3}), ShapeError);
}

TEST_CASE("quantization_noise_rms") {
  CHECK(quantization_noise_rms(0.1) == doctest::Approx(0.02887).epsilon(1e-4));
  CHECK(quantization_noise_rms(0.0) == 0.0);
  CHECK(quantization_noise_rms(1.0) == doctest::Approx(0.2887).epsilon(1e-4));
  // Empirical RMS of rounding error for a fine ramp.
  std::vector<double> err;
  for (int i = 0; i < 100000; ++i) {
    const double v = i * 0.0013717;
    err.push_back(v - 0.1 * std::round(v / 0.1));
  }
  CHECK(oracle::rms(err) == doctest::Approx(quantization_noise_rms(0.1)).epsilon(0.01));
  CHECK_THROWS_AS(quantization_noise_rms(-0.1), RangeError);
}

TEST_CASE("sine_max_excursion") {
  CHECK(sine_max_excursion(1e-6, 10e-3, 60.0) == doctest::Approx(1.885e-6).epsilon(1e-3));
  CHECK(sine_max_excursion(3.0, 0.0, 10.0) == 0.0);
  CHECK(sine_max_excursion(1.0, 2.0, 10.0) == doctest::Approx(2.0));

  // Brute force over phase for a window shorter than half a period.
  const double f = 0.01, vpp = 4.0, dur = 20.0;
  double best = 0.0;
  for (int p = 0; p < 2000; ++p) {
    const double ph = 2.0 * std::numbers::pi * p / 2000;
    double lo = 1e9, hi = -1e9;
    for (int k = 0; k <= 2000; ++k) {
      const double v = 0.5 * vpp * std::sin(2.0 * std::numbers::pi * f * dur * k / 2000 + ph);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    best = std::max(best, hi - lo);
  }
  CHECK(sine_max_excursion(f, vpp, dur) == doctest::Approx(best).epsilon(1e-4));
  CHECK_THROWS_AS(sine_max_excursion(-1.0, 1.0, 1.0), RangeError);
}

}  // TEST_SUITE
