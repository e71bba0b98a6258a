#pragma once

#include "blinkica/recording.hpp"

#include <array>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace blinkica {

// Seeded random stream used everywhere randomness is needed.
using Rng = std::mt19937_64;

// Sentinel SNR meaning "no noise added".
inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

/// Product-moment correlation. Throws ShapeError on length mismatch or
/// fewer than two samples, DegenerateInputError when either input is constant.
double pearson(std::span<const double> x, std::span<const double> y);

double rms(std::span<const double> x);

/// 20*log10(signal_rms / noise_rms); both arguments must be strictly positive.
double snr_db(double signal_rms, double noise_rms);

/// Returns channel + n with n ~ N(0, sigma^2) i.i.d. and
/// sigma = rms(channel) / 10^(snr/20). snr == kNoNoise returns the input unchanged.
std::vector<double> add_noise_at_snr(std::span<const double> channel, double snr, Rng& rng);

/// The noise vector add_noise_at_snr would add for the same stream state.
std::vector<double> noise_at_snr(std::span<const double> channel, double snr, Rng& rng);

// One direct-form-II-transposed second-order section, a0 normalised to 1.
struct Biquad {
  double b0, b1, b2, a1, a2;
};

enum class FilterKind { lowpass, highpass };

// 4th-order Butterworth as two cascaded biquads (bilinear transform, prewarped).
class ButterworthFilter {
 public:
  ButterworthFilter(FilterKind kind, double cutoff_hz, double fs);

  /// Causal single pass starting from the steady state for x[0].
  void filter_in_place(std::span<double> x) const;

  /// Forward-backward (zero phase) application with odd reflection padding
  /// of 3x the filter order at each edge.
  std::vector<double> filtfilt(std::span<const double> x) const;

  /// |H(e^{jw})| of a single pass at frequency f (Hz).
  double magnitude(double f_hz) const;

  static constexpr int kOrder = 4;
  static constexpr std::size_t kPadding = 3 * kOrder;

  const std::array<Biquad, 2>& sections() const { return sections_; }

 private:
  std::array<Biquad, 2> sections_{};
  double fs_;
};

/// Zero-phase 4th-order Butterworth, applied to every channel independently.
/// Throws RangeError unless 0 < fc < fs/2.
Recording highpass(const Recording& rec, double fc);
Recording lowpass(const Recording& rec, double fc);

std::vector<double> highpass(std::span<const double> x, double fs, double fc);
std::vector<double> lowpass(std::span<const double> x, double fs, double fc);

// Moment summary of a sample; population moments, non-excess kurtosis.
struct GaussianityReport {
  double mean = 0.0;
  double std = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;
  double max_cdf_distance = 0.0;  // sup |F_empirical - Phi((x - mean)/std)|
};

GaussianityReport gaussianity_stats(std::span<const double> samples);

/// RMS of uniform quantisation error for a converter step of `resolution`.
double quantization_noise_rms(double resolution);

/// Worst-case peak-to-peak change of a sine (frequency f, peak-to-peak vpp)
/// inside a window of `duration` seconds.
double sine_max_excursion(double f_hz, double vpp, double duration_s);

}  // namespace blinkica
