#pragma once

#include "blinkica/ica.hpp"
#include "blinkica/recording.hpp"
#include "blinkica/signal_core.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace blinkica {

// Named electrode subset. "all" with an empty channel list means every
// measurement channel of the recording it is applied to.
struct ElectrodeConfig {
  std::string name;
  std::vector<std::string> channels;

  static ElectrodeConfig all() { return {"all", {}}; }
  bool is_all() const { return name == "all" && channels.empty(); }
  void validate() const;  // non-empty name, no duplicate labels
};

/// Built-in subsets for the 28-electrode montage: com9, em8, att8, mi10.
/// These approximate published layouts; exact lists can be supplied as custom configs.
std::vector<ElectrodeConfig> builtin_configs();
std::optional<ElectrodeConfig> builtin_config(const std::string& name);

struct SnrLevel {
  double gamma = kNoNoise;  // dB; kNoNoise marks the noiseless baseline

  static SnrLevel baseline() { return {}; }
  static SnrLevel db(double g);  // throws RangeError unless finite
  bool is_baseline() const { return gamma == kNoNoise; }
  std::string label() const;  // "inf" for the baseline, shortest decimal otherwise
  friend bool operator==(const SnrLevel&, const SnrLevel&) = default;
};

/// start, start+step, ... up to stop (inclusive within step/1000), optionally
/// preceded by the baseline.
std::vector<SnrLevel> snr_grid(double start, double stop, double step, bool include_baseline);

struct Dataset {
  std::string id;
  Recording recording;
};

struct TrialResult {
  std::string dataset;
  std::string config;
  std::string algorithm;
  SnrLevel snr;
  int iteration = 0;
  double rho = 0.0;
  std::size_t best_component = 0;
  double fit_time_s = 0.0;
  int iterations_used = 0;
  bool converged = false;
  std::size_t segment_start = 0;
  std::uint64_t seed = 0;
};

struct DegradationRecord {
  double rho_0 = 0.0;
  double rho_gamma = 0.0;
  double q = 0.0;
};

struct TrialOptions {
  std::size_t segment_length = 60000;
  std::string reference_label = "LO1";
  IcaOptions ica;
  // Timed fits never overlap across threads; other trial work stays parallel.
  bool serial_timing = true;
};

struct Segment {
  Recording recording;
  std::size_t start = 0;
};

/// Uniform start in [0, N - length]; all channels sliced identically.
Segment select_segment(const Recording& rec, std::size_t length, Rng& rng);

/// Measurement channels restricted to the config (in config order); EOG and
/// reference channels are kept. Unknown labels are all listed in the error.
Recording subset_channels(const Recording& rec, const ElectrodeConfig& config);

/// max_i |pearson(component_i, reference)|, lowest index on ties.
std::pair<double, std::size_t> correlation_score(const IcaModel& model, const Recording& rec,
                                                 std::span<const double> reference);

// Seed coordinates. The segment stream omits algorithm and SNR so every
// noise level, the baseline, and both algorithms see the same segments.
std::uint64_t segment_seed(std::uint64_t master, const std::string& dataset,
                           const std::string& config, int iteration);
std::uint64_t trial_seed(std::uint64_t master, const std::string& dataset,
                         const std::string& config, const std::string& algorithm, SnrLevel snr,
                         int iteration);

/// Adds calibrated noise to every measurement channel of `rec` from the
/// stream derived from `trial_seed`. Returns the added noise, channel-major.
std::vector<std::vector<double>> add_trial_noise(Recording& rec, SnrLevel snr,
                                                 std::uint64_t trial_seed);

TrialResult run_trial(const Dataset& dataset, const ElectrodeConfig& config, IcaMethod algorithm,
                      SnrLevel snr, int iteration, std::uint64_t master_seed,
                      const TrialOptions& opts = {});

struct TrialCoordinate {
  std::size_t dataset = 0, config = 0, algorithm = 0, snr = 0;
  int iteration = 0;
};

struct TrialFailure {
  std::string dataset, config, algorithm, snr;
  int iteration = 0;
  std::string message;
};

struct SweepOptions {
  TrialOptions trial;
  unsigned workers = 1;  // 0 = hardware concurrency
  // Coordinates for which this returns true are not executed (resume).
  std::function<bool(const TrialCoordinate&)> skip;
  // Called in coordinate order as results become available.
  std::function<void(const TrialResult&)> on_row;
};

struct SweepResult {
  std::vector<TrialResult> rows;  // coordinate order; failed and skipped trials absent
  std::vector<TrialFailure> failures;
};

/// Cartesian product dataset x config x algorithm x snr x iteration.
SweepResult run_sweep(const std::vector<Dataset>& datasets,
                      const std::vector<ElectrodeConfig>& configs,
                      const std::vector<IcaMethod>& algorithms, const std::vector<SnrLevel>& snrs,
                      int n_iterations, std::uint64_t master_seed, const SweepOptions& opts = {});

/// (rho_0 - rho_gamma) / rho_0; throws RangeError unless rho_0 > 0.
double degradation(double rho_0, double rho_gamma);

struct GroupSummary {
  std::string dataset, config, algorithm;
  SnrLevel snr;
  std::size_t n = 0;
  double mean_rho = 0.0, std_rho = 0.0;
  double mean_time_s = 0.0, std_time_s = 0.0;
  double convergence_rate = 0.0;
  std::optional<DegradationRecord> degradation;  // absent when no baseline group exists
  bool baseline_missing = false;
};

/// Groups by (dataset, config, algorithm, snr) in order of first appearance.
/// Population standard deviations.
std::vector<GroupSummary> aggregate(const std::vector<TrialResult>& table);

/// Column `component` of A_hat paired with the model's channel labels.
std::vector<std::pair<std::string, double>> export_component_weights(const IcaModel& model,
                                                                     std::size_t component);

// Results table CSV.
inline constexpr const char* kResultsHeader =
    "dataset,config,algorithm,snr_db,iteration,rho,best_component,fit_time_s,iterations_used,"
    "converged,segment_start,seed";
std::string format_result_row(const TrialResult& row);
void write_results_csv(std::ostream& out, const std::vector<TrialResult>& rows);
std::vector<TrialResult> read_results_csv(std::istream& in, bool allow_truncated_tail = false);

// Summary JSON nested dataset -> config -> algorithm -> snr.
nlohmann::ordered_json summary_to_json(const std::vector<GroupSummary>& groups);

}  // namespace blinkica
