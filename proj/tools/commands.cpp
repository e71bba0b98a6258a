#include "commands.hpp"

#include "blinkica/errors.hpp"
#include "blinkica/seeding.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

namespace blinkica::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

RunConfig resolve_config(const CommonFlags& flags) {
  RunConfig cfg = flags.config ? load_run_config(*flags.config) : RunConfig{};
  if (flags.quick) cfg.apply_quick_preset();
  if (flags.out) cfg.output_dir = *flags.out;
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.workers) cfg.workers = *flags.workers;
  cfg.validate();
  return cfg;
}

fs::path dataset_dir(const fs::path& out) { return out / "datasets"; }
fs::path dataset_path(const fs::path& out, const std::string& id) { return dataset_dir(out) / (id + ".csv"); }
fs::path truth_path(const fs::path& out, const std::string& id) { return dataset_dir(out) / (id + ".truth.json"); }

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw ConfigError("--out", "cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("--out", "cannot write " + path.string());
  f << text;
  if (!f) throw ConfigError("--out", "failed writing " + path.string());
}

ordered_json truth_json(const SynthSpec& spec, const SyntheticDataset& ds) {
  ordered_json j;
  j["seed"] = spec.seed;
  j["fs_hz"] = spec.fs;
  j["duration_s"] = spec.duration;
  j["reference_label"] = spec.reference_label;
  j["labels"] = ds.recording.labels;
  j["blink_timestamps_s"] = ds.schedule.timestamps;
  j["blink_onsets"] = ds.schedule.onsets;
  j["topography"] = ds.schedule.topography;
  j["kernel"] = ds.schedule.kernel;
  ordered_json mixing = ordered_json::array();
  for (Eigen::Index r = 0; r < ds.truth.A.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(ds.truth.A.cols()));
    for (Eigen::Index c = 0; c < ds.truth.A.cols(); ++c) row[static_cast<std::size_t>(c)] = ds.truth.A(r, c);
    mixing.push_back(std::move(row));
  }
  j["mixing"] = std::move(mixing);
  return j;
}

using CoordKey = std::tuple<std::string, std::string, std::string, std::string, int>;

CoordKey key_of(const TrialResult& r) { return {r.dataset, r.config, r.algorithm, r.snr.label(), r.iteration}; }

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::vector<TrialResult> load_results(const fs::path& path, bool allow_truncated_tail) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  return read_results_csv(in, allow_truncated_tail);
}

}  // namespace

// ---------------------------------------------------------------------------

int cmd_synth(const RunConfig& cfg, std::ostream& out) {
  ensure_dir(dataset_dir(cfg.output_dir));
  for (int i = 0; i < cfg.datasets; ++i) {
    const std::string id = cfg.dataset_id(i);
    const SynthSpec spec = cfg.dataset_spec(i);
    const SyntheticDataset ds = synthesize_dataset(spec);
    const fs::path rec_path = dataset_path(cfg.output_dir, id);
    const fs::path sidecar = truth_path(cfg.output_dir, id);
    try {
      write_recording_csv(rec_path, ds.recording);
    } catch (const std::runtime_error& e) {
      throw ConfigError("--out", e.what());
    }
    write_text(sidecar, truth_json(spec, ds).dump(2) + "\n");
    out << rec_path.string() << '\n' << sidecar.string() << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_sweep(const RunConfig& cfg, const SweepFlags& flags, std::ostream& out, std::ostream& err) {
  std::vector<Dataset> datasets;
  for (int i = 0; i < cfg.datasets; ++i) {
    const std::string id = cfg.dataset_id(i);
    const fs::path path = dataset_path(cfg.output_dir, id);
    if (!fs::exists(path))
      throw ConfigError("datasets", "missing dataset file " + path.string() + " (run synth first)");
    datasets.push_back(Dataset{id, import_external_recording(path)});
  }
  const auto snrs = cfg.snr_levels();
  ensure_dir(cfg.output_dir);
  const fs::path results_path = cfg.output_dir / "results.csv";

  std::vector<TrialResult> previous;
  std::set<CoordKey> done;
  if (flags.resume && fs::exists(results_path)) {
    previous = load_results(results_path, true);
    for (const auto& r : previous) {
      if (r.seed != trial_seed(cfg.seed, r.dataset, r.config, r.algorithm, r.snr, r.iteration))
        throw ConfigError("--resume", "existing results were produced with a different master seed");
      done.insert(key_of(r));
    }
  }

  // Rows are appended as they complete so an interrupted run keeps its progress.
  // Rewriting the kept rows first also drops a truncated tail from a killed run.
  {
    std::ofstream f(results_path, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("--out", "cannot write " + results_path.string());
    write_results_csv(f, previous);
  }
  std::ofstream live(results_path, std::ios::binary | std::ios::app);

  SweepOptions opts;
  opts.trial.segment_length = cfg.segment_length;
  opts.trial.reference_label = cfg.synthesis.reference_label;
  opts.trial.ica = cfg.ica;
  opts.trial.serial_timing = flags.serial_timing;
  opts.workers = cfg.workers;
  std::vector<std::string> algo_names;
  for (auto a : cfg.algorithms) algo_names.emplace_back(to_string(a));
  opts.skip = [&](const TrialCoordinate& c) {
    return done.count(CoordKey{datasets[c.dataset].id, cfg.configs[c.config].name, algo_names[c.algorithm],
                               snrs[c.snr].label(), c.iteration}) > 0;
  };
  opts.on_row = [&](const TrialResult& r) {
    live << format_result_row(r) << '\n';
    live.flush();
  };

  SweepResult result =
      run_sweep(datasets, cfg.configs, cfg.algorithms, snrs, cfg.iterations, cfg.seed, opts);
  live.close();

  // Merge and rewrite in coordinate order so resumed and uninterrupted runs match.
  std::map<CoordKey, TrialResult> by_key;
  for (auto& r : previous) by_key.emplace(key_of(r), std::move(r));
  for (auto& r : result.rows) by_key.insert_or_assign(key_of(r), std::move(r));
  std::vector<TrialResult> rows;
  for (std::size_t d = 0; d < datasets.size(); ++d)
    for (const auto& c : cfg.configs)
      for (const auto& a : algo_names)
        for (const auto& s : snrs)
          for (int it = 0; it < cfg.iterations; ++it) {
            auto found = by_key.find(CoordKey{datasets[d].id, c.name, a, s.label(), it});
            if (found != by_key.end()) rows.push_back(found->second);
          }
  {
    std::ofstream f(results_path, std::ios::binary | std::ios::trunc);
    write_results_csv(f, rows);
    if (!f) throw ConfigError("--out", "failed writing " + results_path.string());
  }
  const fs::path summary_path = cfg.output_dir / "summary.json";
  write_text(summary_path, summary_to_json(aggregate(rows)).dump(2) + "\n");

  for (const auto& f : result.failures)
    err << "trial failed: dataset=" << f.dataset << " config=" << f.config << " algorithm=" << f.algorithm
        << " snr_db=" << f.snr << " iteration=" << f.iteration << ": " << f.message << '\n';
  out << results_path.string() << '\n' << summary_path.string() << '\n';
  return result.failures.empty() ? kOk : kInternalError;
}

// ---------------------------------------------------------------------------

std::vector<GroupSummary> pool_datasets(const std::vector<TrialResult>& rows) {
  std::vector<TrialResult> pooled = rows;
  for (auto& r : pooled) r.dataset = "pooled";
  return aggregate(pooled);
}

int cmd_report(const fs::path& results, const fs::path& out_dir, std::ostream& out, std::ostream& err) {
  const auto rows = load_results(results, false);
  if (rows.empty()) throw ParseError(results.string() + ": no result rows");
  const auto groups = pool_datasets(rows);
  ensure_dir(out_dir);

  std::ostringstream corr, degr, time;
  corr << "config,algorithm,snr_db,n,mean_rho,std_rho\n";
  degr << "config,algorithm,snr_db,n,rho_0,mean_rho,q\n";
  time << "config,algorithm,snr_db,n,mean_time_s,std_time_s,convergence_rate\n";
  bool missing_baseline = false;
  for (const auto& g : groups) {
    const std::string prefix = g.config + "," + g.algorithm + "," + g.snr.label() + "," + std::to_string(g.n) + ",";
    corr << prefix << fmt(g.mean_rho) << ',' << fmt(g.std_rho) << '\n';
    time << prefix << fmt(g.mean_time_s) << ',' << fmt(g.std_time_s) << ',' << fmt(g.convergence_rate) << '\n';
    if (g.baseline_missing) missing_baseline = true;
    if (g.degradation && !g.snr.is_baseline())
      degr << prefix << fmt(g.degradation->rho_0) << ',' << fmt(g.mean_rho) << ',' << fmt(g.degradation->q) << '\n';
  }
  if (missing_baseline)
    err << "warning: results contain no baseline (snr_db=inf) rows for some groups; "
           "degradation omitted for them\n";

  const fs::path p1 = out_dir / "correlation_vs_snr.csv";
  const fs::path p2 = out_dir / "degradation_vs_snr.csv";
  const fs::path p3 = out_dir / "time_vs_snr.csv";
  write_text(p1, corr.str());
  write_text(p2, degr.str());
  write_text(p3, time.str());
  out << p1.string() << '\n' << p2.string() << '\n' << p3.string() << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

std::vector<double> read_single_column(std::istream& in) {
  std::vector<double> values;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = line;
    while (!sv.empty() && (sv.front() == ' ' || sv.front() == '\t')) sv.remove_prefix(1);
    while (!sv.empty() && (sv.back() == ' ' || sv.back() == '\t' || sv.back() == '\r')) sv.remove_suffix(1);
    if (sv.empty() || sv.front() == '#') continue;
    double v = 0.0;
    const auto res = std::from_chars(sv.data(), sv.data() + sv.size(), v);
    if (res.ec != std::errc() || res.ptr != sv.data() + sv.size() || !std::isfinite(v)) {
      // A single text header line is tolerated.
      if (values.empty() && lineno == 1) continue;
      throw ParseError("non-numeric value '" + std::string(sv) + "'", lineno);
    }
    values.push_back(v);
  }
  return values;
}

int cmd_characterize(const fs::path& samples, const std::optional<fs::path>& json_out, bool json_stdout,
                     std::ostream& out) {
  std::ifstream in(samples, std::ios::binary);
  if (!in) throw ParseError("cannot open " + samples.string());
  const auto values = read_single_column(in);
  const GaussianityReport r = gaussianity_stats(values);

  ordered_json j;
  j["n"] = values.size();
  j["mean"] = r.mean;
  j["std"] = r.std;
  j["skewness"] = r.skewness;
  j["kurtosis"] = r.kurtosis;
  j["max_cdf_distance"] = r.max_cdf_distance;
  if (json_stdout) {
    out << j.dump(2) << '\n';
  } else {
    out << "n                 " << values.size() << '\n'
        << "mean              " << fmt(r.mean) << '\n'
        << "std               " << fmt(r.std) << '\n'
        << "skewness          " << fmt(r.skewness) << '\n'
        << "kurtosis          " << fmt(r.kurtosis) << '\n'
        << "max_cdf_distance  " << fmt(r.max_cdf_distance) << '\n';
  }
  if (json_out) {
    ensure_dir(json_out->parent_path().empty() ? fs::path(".") : json_out->parent_path());
    write_text(*json_out, j.dump(2) + "\n");
  }
  return kOk;
}

}  // namespace blinkica::cli
