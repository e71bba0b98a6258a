#include "blinkica/synth.hpp"

#include "blinkica/errors.hpp"
#include "blinkica/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

namespace blinkica {

namespace {

const std::map<std::string, std::pair<double, double>>& electrode_positions() {
  static const std::map<std::string, std::pair<double, double>> table = {
      {"FP1", {-0.31, 0.95}}, {"FP2", {0.31, 0.95}},   {"F7", {-0.81, 0.59}},
      {"F3", {-0.40, 0.50}},  {"Fz", {0.0, 0.45}},     {"F4", {0.40, 0.50}},
      {"F8", {0.81, 0.59}},   {"FC5", {-0.68, 0.25}},  {"FC1", {-0.22, 0.23}},
      {"FC2", {0.22, 0.23}},  {"FC6", {0.68, 0.25}},   {"T7", {-1.0, 0.0}},
      {"C3", {-0.45, 0.0}},   {"Cz", {0.0, 0.0}},      {"C4", {0.45, 0.0}},
      {"T8", {1.0, 0.0}},     {"CP5", {-0.68, -0.25}}, {"CP1", {-0.22, -0.23}},
      {"CP2", {0.22, -0.23}}, {"CP6", {0.68, -0.25}},  {"P7", {-0.81, -0.59}},
      {"P3", {-0.40, -0.50}}, {"Pz", {0.0, -0.45}},    {"P4", {0.40, -0.50}},
      {"P8", {0.81, -0.59}},  {"O1", {-0.31, -0.95}},  {"Oz", {0.0, -1.0}},
      {"O2", {0.31, -0.95}},  {"M2", {1.10, -0.45}},   {"M1", {-1.10, -0.45}},
      {"LO1", {-0.55, 1.10}}, {"LO2", {0.55, 1.10}},   {"IO1", {-0.30, 1.20}},
  };
  return table;
}

Montage build_montage(std::initializer_list<const char*> eeg) {
  Montage m;
  for (const char* l : eeg) m.push_back(make_channel(l, ChannelRole::measurement));
  m.push_back(make_channel("M2", ChannelRole::reference));
  for (const char* l : {"LO1", "LO2", "IO1"}) m.push_back(make_channel(l, ChannelRole::eog));
  return m;
}

// Sum of AR(1) processes with log-spaced corners; weights give a ~1/f
// spectrum between the lowest and highest corner.
std::vector<double> pink_noise(std::size_t n, double fs, double f_low, double f_high, Rng& rng) {
  constexpr int kPoles = 8;
  std::normal_distribution<double> gauss;
  std::vector<double> out(n, 0.0);
  for (int p = 0; p < kPoles; ++p) {
    const double fc = f_low * std::pow(f_high / f_low, static_cast<double>(p) / (kPoles - 1));
    const double a = std::exp(-2.0 * std::numbers::pi * fc / fs);
    const double innovation = std::sqrt(1.0 - a * a);
    const double weight = std::sqrt(f_low / fc);
    double y = gauss(rng);
    for (auto& v : out) {
      y = a * y + innovation * gauss(rng);
      v += weight * y;
    }
  }
  return out;
}

std::vector<double> slow_envelope(std::size_t n, double fs, const SourceBand& band, Rng& rng) {
  std::normal_distribution<double> gauss;
  const double a = std::exp(-2.0 * std::numbers::pi * band.envelope_hz / fs);
  const double innovation = std::sqrt(1.0 - a * a);
  std::vector<double> u(n);
  double y = gauss(rng);
  for (auto& v : u) {
    y = a * y + innovation * gauss(rng);
    v = y;
  }
  for (auto& v : u) v = std::exp(band.envelope_sigma * v);
  return u;
}

void standardise(std::span<double> x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (double& v : x) {
    v -= mean;
    var += v * v;
  }
  const double sd = std::sqrt(var / static_cast<double>(x.size()));
  for (double& v : x) v /= sd;
}

}  // namespace

ChannelSpec make_channel(const std::string& label, ChannelRole role) {
  const auto& table = electrode_positions();
  if (auto it = table.find(label); it != table.end())
    return {label, role, it->second.first, it->second.second};
  const double angle = static_cast<double>(hash_name(label) % 3600) / 3600.0 * 2.0 * std::numbers::pi;
  return {label, role, 0.6 * std::cos(angle), 0.6 * std::sin(angle)};
}

Montage full_montage() {
  return build_montage({"FP1", "FP2", "F7",  "F3",  "Fz",  "F4",  "F8",  "FC5", "FC1", "FC2",
                        "FC6", "T7",  "C3",  "Cz",  "C4",  "T8",  "CP5", "CP1", "CP2", "CP6",
                        "P7",  "P3",  "Pz",  "P4",  "P8",  "O1",  "Oz",  "O2"});
}

Montage desk_montage() {
  return build_montage({"FP1", "FP2", "F7", "F3", "Fz", "F4", "F8", "T7", "C3", "Cz", "C4", "T8",
                        "P3", "Pz", "P4", "Oz"});
}

std::size_t SynthSpec::n_channels() const {
  return static_cast<std::size_t>(std::count_if(montage.begin(), montage.end(), [](const auto& c) {
    return c.role == ChannelRole::measurement;
  }));
}

void SynthSpec::validate() const {
  if (!(fs > 70.0)) throw ConfigError("fs", "must exceed 70 Hz");
  if (!(duration >= kMinDuration))
    throw ConfigError("duration", "must be at least " + std::to_string(kMinDuration) + " s");
  if (n_channels() < 2) throw ConfigError("montage", "needs at least two measurement channels");
  std::set<std::string> seen;
  for (const auto& c : montage)
    if (!seen.insert(c.label).second) throw ConfigError("montage", "duplicate label " + c.label);
  if (!(source_band.low_hz > 0.0) || !(source_band.high_hz > source_band.low_hz))
    throw ConfigError("source_band", "need 0 < low_hz < high_hz");
  if (!(source_band.low_hz < fs / 2.0)) throw ConfigError("source_band.low_hz", "must be below fs/2");
  if (!(source_band.envelope_sigma >= 0.0) || !(source_band.envelope_hz > 0.0))
    throw ConfigError("source_band", "envelope_sigma must be >= 0 and envelope_hz > 0");
  if (!(brain_rms > 0.0)) throw ConfigError("brain_rms", "must be positive");
  if (!(mixing_width > 0.0)) throw ConfigError("mixing_width", "must be positive");
  if (!(mixing_jitter >= 0.0)) throw ConfigError("mixing_jitter", "must be non-negative");
  if (!(blink_amplitude >= 0.0)) throw ConfigError("blink_amplitude", "must be non-negative");
  for (const auto& f : frontal_labels)
    if (!seen.count(f)) throw ConfigError("frontal_labels", "label " + f + " not in montage");
  if (reference_label.empty()) throw ConfigError("reference_label", "must not be empty");
}

CleanDataset generate_clean_recording(const SynthSpec& spec) {
  spec.validate();
  Rng rng(derive_seed({spec.seed, hash_name("clean")}));
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  const auto n_src = static_cast<Eigen::Index>(spec.n_channels());
  const auto n = static_cast<std::size_t>(std::llround(spec.duration * spec.fs));
  const double high = std::min(spec.source_band.high_hz, 0.45 * spec.fs);

  SignalMatrix S(n_src, static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < n_src; ++i) {
    auto g = pink_noise(n, spec.fs, spec.source_band.low_hz, high, rng);
    const auto env = slow_envelope(n, spec.fs, spec.source_band, rng);
    for (std::size_t t = 0; t < n; ++t) g[t] *= env[t];
    g = highpass(g, spec.fs, spec.source_band.low_hz);
    g = lowpass(g, spec.fs, high);
    standardise(g);
    std::copy(g.begin(), g.end(), S.row(i).data());
  }

  // Source locations and polarities; every channel (including EOG and the
  // reference) sees each source through a Gaussian spatial footprint.
  std::vector<std::pair<double, double>> where;
  std::vector<double> polarity;
  while (where.size() < static_cast<std::size_t>(n_src)) {
    const double x = unit(rng), y = unit(rng);
    if (x * x + y * y <= 1.0) {
      where.emplace_back(x, y);
      polarity.push_back(unit(rng) < 0.0 ? -1.0 : 1.0);
    }
  }
  const auto n_all = static_cast<Eigen::Index>(spec.montage.size());
  Eigen::MatrixXd A_all(n_all, n_src);
  for (Eigen::Index c = 0; c < n_all; ++c) {
    const auto& ch = spec.montage[static_cast<std::size_t>(c)];
    for (Eigen::Index s = 0; s < n_src; ++s) {
      const auto [sx, sy] = where[static_cast<std::size_t>(s)];
      const double d2 = (ch.x - sx) * (ch.x - sx) + (ch.y - sy) * (ch.y - sy);
      A_all(c, s) = polarity[static_cast<std::size_t>(s)] *
                        std::exp(-d2 / (2.0 * spec.mixing_width * spec.mixing_width)) +
                    spec.mixing_jitter * gauss(rng);
    }
  }
  // Scale rows so every channel has exactly brain_rms.
  SignalMatrix X = A_all * S;
  for (Eigen::Index c = 0; c < n_all; ++c) {
    const double r = std::sqrt(X.row(c).squaredNorm() / static_cast<double>(n));
    A_all.row(c) *= spec.brain_rms / r;
  }
  X = A_all * S;

  std::vector<std::string> labels;
  std::vector<ChannelRole> roles;
  std::vector<Eigen::Index> meas_rows;
  for (Eigen::Index c = 0; c < n_all; ++c) {
    const auto& ch = spec.montage[static_cast<std::size_t>(c)];
    labels.push_back(ch.label);
    roles.push_back(ch.role);
    if (ch.role == ChannelRole::measurement) meas_rows.push_back(c);
  }

  CleanDataset out;
  out.truth.A.resize(n_src, n_src);
  for (Eigen::Index i = 0; i < n_src; ++i)
    out.truth.A.row(i) = A_all.row(meas_rows[static_cast<std::size_t>(i)]);
  out.truth.s = std::move(S);
  out.truth.x = out.truth.A * out.truth.s;
  for (Eigen::Index i = 0; i < n_src; ++i)
    X.row(meas_rows[static_cast<std::size_t>(i)]) = out.truth.x.row(i);
  out.recording = Recording(std::move(X), spec.fs, std::move(labels), std::move(roles));
  return out;
}

std::vector<double> synth_blink_kernel(double fs, double amplitude) {
  if (!(fs > 70.0)) throw RangeError("synth_blink_kernel: fs must exceed 70 Hz");
  if (amplitude < 0.0) throw RangeError("synth_blink_kernel: negative amplitude");
  constexpr double kRise = 0.05, kDecay = 0.15, kPeakAt = 0.3, kLowpass = 35.0;
  constexpr double kTaper = 0.1;
  const auto n = static_cast<std::size_t>(std::llround(fs));
  std::vector<double> k(n, 0.0);
  if (amplitude == 0.0) return k;

  const double t_peak = std::log(kDecay / kRise) * kRise * kDecay / (kDecay - kRise);
  const double onset = kPeakAt - t_peak;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs - onset;
    if (t > 0.0) k[i] = std::exp(-t / kDecay) - std::exp(-t / kRise);
  }
  k = lowpass(k, fs, kLowpass);
  // Half-cosine taper over the tail brings the last sample to zero.
  const auto taper = static_cast<std::size_t>(kTaper * fs);
  for (std::size_t j = 0; j < taper; ++j) {
    const double w = 0.5 * (1.0 - std::cos(std::numbers::pi * static_cast<double>(j) /
                                           static_cast<double>(taper)));
    k[n - 1 - j] *= w;
  }
  const double peak = *std::max_element(k.begin(), k.end());
  for (auto& v : k) v *= amplitude / peak;
  return k;
}

BlinkSchedule draw_blink_schedule(double duration, double fs, Rng& rng) {
  if (!(fs > 0.0)) throw RangeError("draw_blink_schedule: fs must be positive");
  if (!(duration > 11.0)) throw RangeError("draw_blink_schedule: duration must exceed 11 s");
  std::uniform_real_distribution<double> gap(5.0, 10.0);
  BlinkSchedule out;
  double previous = 0.0;
  for (;;) {
    double t = 0.0;
    std::size_t onset = 0;
    for (;;) {
      onset = static_cast<std::size_t>(std::llround((previous + gap(rng)) * fs));
      t = static_cast<double>(onset) / fs;
      if (t - previous > 5.0 && t - previous < 10.0) break;
    }
    if (t + 1.0 > duration) break;
    out.timestamps.push_back(t);
    out.onsets.push_back(onset);
    previous = t;
  }
  return out;
}

std::vector<double> default_topography(const Montage& montage,
                                       std::span<const std::string> frontal_labels) {
  std::vector<double> w;
  for (const auto& ch : montage) {
    const bool frontal =
        std::find(frontal_labels.begin(), frontal_labels.end(), ch.label) != frontal_labels.end();
    if (frontal || ch.role == ChannelRole::eog) {
      w.push_back(1.0);
    } else {
      const double d2 = ch.x * ch.x + (ch.y - 1.0) * (ch.y - 1.0);
      w.push_back(0.1 * std::exp(-d2));
    }
  }
  return w;
}

Contaminated inject_blinks(const Recording& clean, const BlinkSchedule& schedule) {
  const auto n = clean.n_samples();
  if (schedule.topography.size() != clean.n_channels())
    throw ShapeError("inject_blinks: topography has " + std::to_string(schedule.topography.size()) +
                     " weights for " + std::to_string(clean.n_channels()) + " channels");
  if (schedule.onsets.size() != schedule.timestamps.size())
    throw ShapeError("inject_blinks: onsets and timestamps differ in length");
  Contaminated out{clean, std::vector<double>(n, 0.0)};
  if (schedule.onsets.empty()) return out;
  const auto klen = static_cast<std::size_t>(std::llround(clean.fs));
  if (schedule.kernel.size() != klen)
    throw ShapeError("inject_blinks: kernel length must equal fs samples");
  for (auto onset : schedule.onsets) {
    if (onset + klen > n) throw ShapeError("inject_blinks: blink extends past the recording");
    for (std::size_t j = 0; j < klen; ++j) out.reference[onset + j] += schedule.kernel[j];
  }
  for (std::size_t c = 0; c < clean.n_channels(); ++c) {
    const double w = schedule.topography[c];
    auto row = out.recording.channel(c);
    for (std::size_t t = 0; t < n; ++t) row[t] += w * out.reference[t];
  }
  return out;
}

Recording set_reference_channel(const Recording& rec, std::span<const double> trace,
                                const std::string& label) {
  if (trace.size() != rec.n_samples())
    throw ShapeError("set_reference_channel: trace has " + std::to_string(trace.size()) +
                     " samples, recording has " + std::to_string(rec.n_samples()));
  Recording out = rec;
  if (auto idx = rec.find(label)) {
    std::copy(trace.begin(), trace.end(), out.channel(*idx).begin());
    out.roles[*idx] = ChannelRole::eog;
    return out;
  }
  SignalMatrix data(rec.data.rows() + 1, rec.data.cols());
  data.topRows(rec.data.rows()) = rec.data;
  for (std::size_t t = 0; t < trace.size(); ++t) data(rec.data.rows(), static_cast<Eigen::Index>(t)) = trace[t];
  out.data = std::move(data);
  out.labels.push_back(label);
  out.roles.push_back(ChannelRole::eog);
  out.validate();
  return out;
}

std::vector<std::size_t> adaptive_zscore_outliers(std::span<const double> scores,
                                                  double threshold) {
  std::vector<std::size_t> remaining(scores.size());
  for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;
  std::vector<std::size_t> flagged;
  while (remaining.size() >= 2) {
    double mean = 0.0;
    for (auto i : remaining) mean += scores[i];
    mean /= static_cast<double>(remaining.size());
    double var = 0.0;
    for (auto i : remaining) var += (scores[i] - mean) * (scores[i] - mean);
    const double sd = std::sqrt(var / static_cast<double>(remaining.size()));
    if (sd == 0.0) break;
    std::vector<std::size_t> keep;
    bool any = false;
    for (auto i : remaining) {
      if ((scores[i] - mean) / sd > threshold) {
        flagged.push_back(i);
        any = true;
      } else {
        keep.push_back(i);
      }
    }
    if (!any) break;
    remaining = std::move(keep);
  }
  std::sort(flagged.begin(), flagged.end());
  return flagged;
}

std::vector<std::size_t> isolate_eyeblink_component(const Recording& rec, const IcaModel& model,
                                                    double threshold) {
  const auto eog = rec.indices_with_role(ChannelRole::eog);
  if (eog.empty()) throw ShapeError("isolate_eyeblink_component: recording has no EOG channel");
  const SignalMatrix S = sources(model, rec);
  constexpr double kEogLow = 1.0, kEogHigh = 10.0;
  std::set<std::size_t> flagged;
  for (auto row : eog) {
    std::vector<double> ref(rec.channel(row).begin(), rec.channel(row).end());
    if (rec.fs > 2.0 * kEogHigh) ref = lowpass(highpass(ref, rec.fs, kEogLow), rec.fs, kEogHigh);
    std::vector<double> scores;
    for (Eigen::Index c = 0; c < S.rows(); ++c)
      scores.push_back(std::abs(pearson({S.row(c).data(), static_cast<std::size_t>(S.cols())}, ref)));
    for (auto i : adaptive_zscore_outliers(scores, threshold)) flagged.insert(i);
  }
  return {flagged.begin(), flagged.end()};
}

SyntheticDataset synthesize_dataset(const SynthSpec& spec) {
  CleanDataset clean = generate_clean_recording(spec);
  Rng rng(derive_seed({spec.seed, hash_name("blinks")}));
  BlinkSchedule schedule = draw_blink_schedule(spec.duration, spec.fs, rng);
  schedule.kernel = synth_blink_kernel(spec.fs, spec.blink_amplitude);
  schedule.topography = default_topography(spec.montage, spec.frontal_labels);
  Contaminated dirty = inject_blinks(clean.recording, schedule);

  SyntheticDataset out;
  out.recording = set_reference_channel(dirty.recording, dirty.reference, spec.reference_label);
  if (out.recording.n_channels() > schedule.topography.size()) schedule.topography.push_back(1.0);
  out.clean = std::move(clean.recording);
  out.truth = std::move(clean.truth);
  out.schedule = std::move(schedule);
  out.reference = std::move(dirty.reference);
  return out;
}

}  // namespace blinkica
