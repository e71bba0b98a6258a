#include "blinkica/signal_core.hpp"

#include "blinkica/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

namespace blinkica {

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw ShapeError("pearson: length mismatch (" + std::to_string(x.size()) + " vs " +
                     std::to_string(y.size()) + ")");
  if (x.size() < 2) throw ShapeError("pearson: need at least two samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DegenerateInputError("pearson: constant input");
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

double rms(std::span<const double> x) {
  if (x.empty()) throw ShapeError("rms: empty input");
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

double snr_db(double signal_rms, double noise_rms) {
  if (!(signal_rms > 0.0) || !(noise_rms > 0.0))
    throw RangeError("snr_db: amplitudes must be strictly positive");
  return 20.0 * std::log10(signal_rms / noise_rms);
}

std::vector<double> noise_at_snr(std::span<const double> channel, double snr, Rng& rng) {
  if (std::isnan(snr) || snr == -std::numeric_limits<double>::infinity())
    throw RangeError("add_noise_at_snr: SNR must be finite or the no-noise sentinel");
  std::vector<double> noise(channel.size(), 0.0);
  if (snr == kNoNoise) return noise;
  const double signal = rms(channel);
  if (signal == 0.0) throw DegenerateInputError("add_noise_at_snr: channel has zero RMS");
  std::normal_distribution<double> gauss(0.0, signal / std::pow(10.0, snr / 20.0));
  for (auto& v : noise) v = gauss(rng);
  return noise;
}

std::vector<double> add_noise_at_snr(std::span<const double> channel, double snr, Rng& rng) {
  auto out = noise_at_snr(channel, snr, rng);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += channel[i];
  return out;
}

// ---------------------------------------------------------------------------
// Butterworth

namespace {

// Q of the two pole pairs of a 4th-order Butterworth prototype.
constexpr std::array<double, 2> kButterworthQ = {0.54119610014619698, 1.3065629648763766};

Biquad design_section(FilterKind kind, double w0, double q) {
  const double c = std::cos(w0);
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  Biquad s{};
  if (kind == FilterKind::lowpass) {
    s.b0 = (1.0 - c) / 2.0 / a0;
    s.b1 = (1.0 - c) / a0;
  } else {
    s.b0 = (1.0 + c) / 2.0 / a0;
    s.b1 = -(1.0 + c) / a0;
  }
  s.b2 = s.b0;
  s.a1 = -2.0 * c / a0;
  s.a2 = (1.0 - alpha) / a0;
  return s;
}

void run_section(const Biquad& s, std::span<double> x) {
  if (x.empty()) return;
  const double u = x[0];
  const double g = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
  double z1 = (g - s.b0) * u;
  double z2 = (s.b2 - s.a2 * g) * u;
  for (double& v : x) {
    const double in = v;
    const double out = s.b0 * in + z1;
    z1 = s.b1 * in - s.a1 * out + z2;
    z2 = s.b2 * in - s.a2 * out;
    v = out;
  }
}

void check_cutoff(double fc, double fs) {
  if (!(fs > 0.0)) throw RangeError("filter: sampling rate must be positive");
  if (!(fc > 0.0) || !(fc < fs / 2.0))
    throw RangeError("filter: cutoff " + std::to_string(fc) + " Hz outside (0, " +
                     std::to_string(fs / 2.0) + ") Hz");
}

}  // namespace

ButterworthFilter::ButterworthFilter(FilterKind kind, double cutoff_hz, double fs) : fs_(fs) {
  check_cutoff(cutoff_hz, fs);
  const double w0 = 2.0 * std::numbers::pi * cutoff_hz / fs;
  for (std::size_t i = 0; i < sections_.size(); ++i)
    sections_[i] = design_section(kind, w0, kButterworthQ[i]);
}

void ButterworthFilter::filter_in_place(std::span<double> x) const {
  for (const auto& s : sections_) run_section(s, x);
}

std::vector<double> ButterworthFilter::filtfilt(std::span<const double> x) const {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const std::size_t pad = n > 1 ? std::min(kPadding, n - 1) : 0;
  std::vector<double> buf;
  buf.reserve(n + 2 * pad);
  for (std::size_t k = pad; k >= 1; --k) buf.push_back(2.0 * x[0] - x[k]);
  buf.insert(buf.end(), x.begin(), x.end());
  for (std::size_t k = 1; k <= pad; ++k) buf.push_back(2.0 * x[n - 1] - x[n - 1 - k]);

  filter_in_place(buf);
  std::reverse(buf.begin(), buf.end());
  filter_in_place(buf);
  std::reverse(buf.begin(), buf.end());
  return {buf.begin() + static_cast<std::ptrdiff_t>(pad),
          buf.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

double ButterworthFilter::magnitude(double f_hz) const {
  const std::complex<double> z = std::polar(1.0, -2.0 * std::numbers::pi * f_hz / fs_);
  std::complex<double> h = 1.0;
  for (const auto& s : sections_)
    h *= (s.b0 + s.b1 * z + s.b2 * z * z) / (1.0 + s.a1 * z + s.a2 * z * z);
  return std::abs(h);
}

namespace {

Recording filter_recording(const Recording& rec, FilterKind kind, double fc) {
  const ButterworthFilter filt(kind, fc, rec.fs);
  Recording out = rec;
  for (std::size_t c = 0; c < rec.n_channels(); ++c) {
    const auto y = filt.filtfilt(rec.channel(c));
    std::copy(y.begin(), y.end(), out.channel(c).begin());
  }
  return out;
}

}  // namespace

Recording highpass(const Recording& rec, double fc) {
  return filter_recording(rec, FilterKind::highpass, fc);
}

Recording lowpass(const Recording& rec, double fc) {
  return filter_recording(rec, FilterKind::lowpass, fc);
}

std::vector<double> highpass(std::span<const double> x, double fs, double fc) {
  return ButterworthFilter(FilterKind::highpass, fc, fs).filtfilt(x);
}

std::vector<double> lowpass(std::span<const double> x, double fs, double fc) {
  return ButterworthFilter(FilterKind::lowpass, fc, fs).filtfilt(x);
}

// ---------------------------------------------------------------------------

GaussianityReport gaussianity_stats(std::span<const double> samples) {
  if (samples.size() < 8) throw ShapeError("gaussianity_stats: need at least 8 samples");
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : samples) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (m2 == 0.0) throw DegenerateInputError("gaussianity_stats: zero variance");

  GaussianityReport r;
  r.mean = mean;
  r.std = std::sqrt(m2);
  r.skewness = m3 / std::pow(m2, 1.5);
  r.kurtosis = m4 / (m2 * m2);

  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  double dmax = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double z = (sorted[i] - mean) / r.std;
    const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    dmax = std::max({dmax, hi - cdf, cdf - lo});
  }
  r.max_cdf_distance = std::clamp(dmax, 0.0, 1.0);
  return r;
}

double quantization_noise_rms(double resolution) {
  if (resolution < 0.0) throw RangeError("quantization_noise_rms: negative resolution");
  return resolution / std::sqrt(12.0);
}

double sine_max_excursion(double f_hz, double vpp, double duration_s) {
  if (f_hz < 0.0 || vpp < 0.0 || duration_s < 0.0)
    throw RangeError("sine_max_excursion: arguments must be non-negative");
  const double phase_span = std::min(std::numbers::pi * f_hz * duration_s, std::numbers::pi / 2.0);
  return vpp * std::sin(phase_span);
}

}  // namespace blinkica
