#pragma once

#include "blinkica/ica.hpp"
#include "blinkica/recording.hpp"
#include "blinkica/signal_core.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace blinkica {

// One electrode of a montage. (x, y) is an azimuthal scalp projection with
// +y toward the nose and the T7-T8 circle at radius 1.
struct ChannelSpec {
  std::string label;
  ChannelRole role = ChannelRole::measurement;
  double x = 0.0;
  double y = 0.0;
};

using Montage = std::vector<ChannelSpec>;

// 28 measurement electrodes, M2 reference, LO1/LO2/IO1 EOG.
Montage full_montage();
// 16 measurement electrodes (a subset of the above), M2, LO1/LO2/IO1.
Montage desk_montage();

// Position lookup for 10-20 labels used by the built-in montages. Unknown
// labels get a deterministic position on an inner ring.
ChannelSpec make_channel(const std::string& label, ChannelRole role);

struct SourceBand {
  double low_hz = 1.0;
  double high_hz = 45.0;
  double envelope_sigma = 0.5;  // log-amplitude modulation depth
  double envelope_hz = 0.5;     // modulation bandwidth
};

struct SynthSpec {
  Montage montage = full_montage();
  double duration = 300.0;  // s
  double fs = 1000.0;       // Hz
  SourceBand source_band;
  double brain_rms = 20.0;       // uV per measurement channel
  double mixing_width = 0.8;     // spatial spread of a source on the scalp
  double mixing_jitter = 0.1;    // i.i.d. perturbation keeping the mixing full rank
  double blink_amplitude = 100.0;  // uV, kernel peak
  std::vector<std::string> frontal_labels = {"FP1", "FP2"};
  std::string reference_label = "LO1";
  std::uint64_t seed = 1;

  static constexpr double kMinDuration = 65.0;  // one-minute segment plus margin

  std::size_t n_channels() const;  // measurement channels
  void validate() const;           // throws ConfigError naming the field
};

struct CleanDataset {
  Recording recording;
  MixingModel truth;  // measurement channels only
};

/// Smooth random mixing of one super-Gaussian 1/f source per measurement
/// channel, band-limited and high-passed. EOG and reference channels carry
/// their own mixtures of the same sources.
CleanDataset generate_clean_recording(const SynthSpec& spec);

/// One-second difference-of-exponentials blink, low-passed at 35 Hz,
/// peak equal to `amplitude`.
std::vector<double> synth_blink_kernel(double fs, double amplitude);

struct BlinkSchedule {
  std::vector<double> timestamps;   // s, on the sample grid
  std::vector<std::size_t> onsets;  // sample index of each timestamp
  std::vector<double> kernel;       // fs samples
  std::vector<double> topography;   // per channel of the target recording
};

/// T_i ~ U(T_{i-1} + 5, T_{i-1} + 10) with T_0 = 0, stopping before the
/// first blink that would not end inside the recording.
BlinkSchedule draw_blink_schedule(double duration, double fs, Rng& rng);

/// Per-channel blink weights: 1 on frontal and EOG channels, at most 0.1
/// elsewhere, falling off with distance from the eyes.
std::vector<double> default_topography(const Montage& montage,
                                       std::span<const std::string> frontal_labels);

struct Contaminated {
  Recording recording;
  std::vector<double> reference;  // sum of kernels at the onsets
};

Contaminated inject_blinks(const Recording& clean, const BlinkSchedule& schedule);

/// Replaces (or appends) `label` with `trace` and forces its role to eog.
Recording set_reference_channel(const Recording& rec, std::span<const double> trace,
                                const std::string& label = "LO1");

/// Indices of components flagged by iterative z-scoring (threshold 2.6) of
/// |pearson(component, band-passed EOG)|, union over EOG channels, sorted.
std::vector<std::size_t> isolate_eyeblink_component(const Recording& rec, const IcaModel& model,
                                                    double threshold = 2.6);

/// Iterative z-score outlier detection used above; returns flagged indices.
std::vector<std::size_t> adaptive_zscore_outliers(std::span<const double> scores,
                                                  double threshold);

struct SyntheticDataset {
  Recording recording;  // contaminated, reference channel holds the blink trace
  Recording clean;
  MixingModel truth;
  BlinkSchedule schedule;
  std::vector<double> reference;
};

/// Full pipeline: clean data, schedule, kernel, injection, reference channel.
SyntheticDataset synthesize_dataset(const SynthSpec& spec);

// Recording CSV: "# fs=", "# labels=", "# roles=" header lines, then one
// comma-separated row per sample in label order, 17 significant digits.
void write_recording_csv(const std::filesystem::path& path, const Recording& rec);
void write_recording_csv(std::ostream& out, const Recording& rec);
Recording import_external_recording(const std::filesystem::path& path);
Recording read_recording_csv(std::istream& in);

}  // namespace blinkica
