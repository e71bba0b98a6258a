#pragma once

#include "blinkica/bench.hpp"
#include "blinkica/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace blinkica::cli {

struct SnrGridSpec {
  double start_db = 0.0;
  double stop_db = 20.0;
  double step_db = 2.5;
  bool include_baseline = true;
};

// Everything a run needs. Defaults reproduce the full experiment shape:
// 6 datasets, 5 configs, 2 algorithms, 0-20 dB in 2.5 dB steps, 100
// iterations, 60,000-sample segments.
struct RunConfig {
  SynthSpec synthesis;
  int datasets = 6;
  std::vector<ElectrodeConfig> configs = default_configs();
  std::vector<IcaMethod> algorithms = {IcaMethod::fastica_deflation, IcaMethod::infomax};
  SnrGridSpec snr;
  int iterations = 100;
  std::size_t segment_length = 60000;
  std::uint64_t seed = 42;
  std::filesystem::path output_dir = "blinkica_out";
  unsigned workers = 1;
  IcaOptions ica;

  static std::vector<ElectrodeConfig> default_configs();

  std::vector<SnrLevel> snr_levels() const;
  std::string dataset_id(int index) const;  // "ds01", "ds02", ...
  std::uint64_t dataset_seed(int index) const;
  SynthSpec dataset_spec(int index) const;

  // Throws ConfigError naming the offending field.
  void validate() const;

  // 2 datasets x {all, em8} x {fastica, infomax} x {0, 10, 20} dB (+ baseline)
  // x 10 iterations on the 16-electrode montage at 250 Hz.
  void apply_quick_preset();
};

RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::ordered_json run_config_to_json(const RunConfig& cfg);

}  // namespace blinkica::cli
