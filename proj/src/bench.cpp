#include "blinkica/bench.hpp"

#include "blinkica/errors.hpp"
#include "blinkica/seeding.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <thread>
#include <tuple>

namespace blinkica {

void ElectrodeConfig::validate() const {
  if (name.empty()) throw ConfigError("configs", "electrode config without a name");
  if (name.find(',') != std::string::npos)
    throw ConfigError("configs", "config name '" + name + "' contains a comma");
  if (channels.empty() && name != "all")
    throw ConfigError("configs." + name, "channel list is empty");
  std::set<std::string> seen;
  for (const auto& c : channels)
    if (!seen.insert(c).second) throw ConfigError("configs." + name, "duplicate channel " + c);
}

std::vector<ElectrodeConfig> builtin_configs() {
  return {
      {"com9", {"F3", "Fz", "F4", "C3", "Cz", "C4", "P3", "Pz", "P4"}},
      {"em8", {"FP1", "FP2", "F7", "F3", "F4", "F8", "T7", "T8"}},
      {"att8", {"Fz", "FC1", "FC2", "Cz", "CP1", "CP2", "Pz", "Oz"}},
      {"mi10", {"FC5", "FC1", "FC2", "FC6", "C3", "Cz", "C4", "CP5", "CP1", "CP2"}},
  };
}

std::optional<ElectrodeConfig> builtin_config(const std::string& name) {
  if (name == "all") return ElectrodeConfig::all();
  for (auto& c : builtin_configs())
    if (c.name == name) return c;
  return std::nullopt;
}

// ---------------------------------------------------------------------------

namespace {

std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

std::string full_precision(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return {buf, res.ptr};
}

}  // namespace

SnrLevel SnrLevel::db(double g) {
  if (!std::isfinite(g)) throw RangeError("SNR level must be finite");
  return SnrLevel{g};
}

std::string SnrLevel::label() const { return is_baseline() ? "inf" : shortest(gamma); }

std::vector<SnrLevel> snr_grid(double start, double stop, double step, bool include_baseline) {
  if (!(step > 0.0)) throw RangeError("SNR grid step must be > 0");
  if (!std::isfinite(start) || !std::isfinite(stop) || stop < start)
    throw RangeError("SNR grid needs finite start <= stop");
  std::vector<SnrLevel> out;
  if (include_baseline) out.push_back(SnrLevel::baseline());
  const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-3)) + 1;
  for (long i = 0; i < n; ++i) out.push_back(SnrLevel::db(start + static_cast<double>(i) * step));
  return out;
}

// ---------------------------------------------------------------------------

Segment select_segment(const Recording& rec, std::size_t length, Rng& rng) {
  if (length == 0) throw RangeError("select_segment: length must be >= 1");
  if (length > rec.n_samples())
    throw ShapeError("select_segment: recording has " + std::to_string(rec.n_samples()) +
                     " samples, segment needs " + std::to_string(length));
  std::uniform_int_distribution<std::size_t> pick(0, rec.n_samples() - length);
  const std::size_t start = pick(rng);
  return {slice_samples(rec, start, length), start};
}

Recording subset_channels(const Recording& rec, const ElectrodeConfig& config) {
  std::vector<std::size_t> rows;
  if (config.is_all()) {
    rows = rec.indices_with_role(ChannelRole::measurement);
  } else {
    std::vector<std::string> missing;
    for (const auto& label : config.channels) {
      const auto idx = rec.find(label);
      if (!idx)
        missing.push_back(label);
      else if (rec.roles[*idx] != ChannelRole::measurement)
        throw ShapeError("config '" + config.name + "': channel " + label +
                         " is not a measurement channel");
      else
        rows.push_back(*idx);
    }
    if (!missing.empty()) {
      std::string msg = "config '" + config.name + "': unknown channel label(s):";
      for (const auto& m : missing) msg += " " + m;
      throw ShapeError(msg);
    }
  }
  for (std::size_t i = 0; i < rec.n_channels(); ++i)
    if (rec.roles[i] != ChannelRole::measurement) rows.push_back(i);
  return select_channels(rec, rows);
}

std::pair<double, std::size_t> correlation_score(const IcaModel& model, const Recording& rec,
                                                 std::span<const double> reference) {
  if (reference.size() != rec.n_samples())
    throw ShapeError("correlation_score: reference length does not match recording");
  if (std::all_of(reference.begin(), reference.end(), [&](double v) { return v == reference[0]; }))
    throw DegenerateInputError("correlation_score: reference trace is constant");
  const SignalMatrix S = sources(model, rec);
  double best = -1.0;
  std::size_t best_idx = 0;
  for (Eigen::Index c = 0; c < S.rows(); ++c) {
    const double r =
        std::abs(pearson({S.row(c).data(), static_cast<std::size_t>(S.cols())}, reference));
    if (r > best) {
      best = r;
      best_idx = static_cast<std::size_t>(c);
    }
  }
  return {best, best_idx};
}

std::uint64_t segment_seed(std::uint64_t master, const std::string& dataset,
                           const std::string& config, int iteration) {
  return derive_seed({master, hash_name("segment"), hash_name(dataset), hash_name(config),
                      static_cast<std::uint64_t>(iteration)});
}

std::uint64_t trial_seed(std::uint64_t master, const std::string& dataset,
                         const std::string& config, const std::string& algorithm, SnrLevel snr,
                         int iteration) {
  return derive_seed({master, hash_name(dataset), hash_name(config), hash_name(algorithm),
                      hash_value(snr.gamma), static_cast<std::uint64_t>(iteration)});
}

std::vector<std::vector<double>> add_trial_noise(Recording& rec, SnrLevel snr,
                                                 std::uint64_t seed) {
  std::vector<std::vector<double>> added;
  if (snr.is_baseline()) return added;
  Rng rng(derive_seed({seed, hash_name("noise")}));
  for (auto row : rec.indices_with_role(ChannelRole::measurement)) {
    auto noise = noise_at_snr(rec.channel(row), snr.gamma, rng);
    auto ch = rec.channel(row);
    for (std::size_t t = 0; t < noise.size(); ++t) ch[t] += noise[t];
    added.push_back(std::move(noise));
  }
  return added;
}

TrialResult run_trial(const Dataset& dataset, const ElectrodeConfig& config, IcaMethod algorithm,
                      SnrLevel snr, int iteration, std::uint64_t master_seed,
                      const TrialOptions& opts) {
  const std::string algo_name(to_string(algorithm));
  TrialResult out;
  out.dataset = dataset.id;
  out.config = config.name;
  out.algorithm = algo_name;
  out.snr = snr;
  out.iteration = iteration;
  out.seed = trial_seed(master_seed, dataset.id, config.name, algo_name, snr, iteration);

  Rng seg_rng(segment_seed(master_seed, dataset.id, config.name, iteration));
  Segment seg = select_segment(dataset.recording, opts.segment_length, seg_rng);
  out.segment_start = seg.start;
  Recording rec = subset_channels(seg.recording, config);
  add_trial_noise(rec, snr, out.seed);

  IcaOptions ica = opts.ica;
  ica.mode = algorithm == IcaMethod::fastica_parallel ? FastIcaMode::parallel : FastIcaMode::deflation;
  const IcaAlgorithm family =
      algorithm == IcaMethod::infomax ? IcaAlgorithm::infomax : IcaAlgorithm::fastica;

  static std::mutex timing_mutex;
  std::unique_lock<std::mutex> timing_lock(timing_mutex, std::defer_lock);
  if (opts.serial_timing) timing_lock.lock();
  const auto t0 = std::chrono::steady_clock::now();
  const IcaModel model = fit(rec, family, ica);
  const auto t1 = std::chrono::steady_clock::now();
  if (timing_lock.owns_lock()) timing_lock.unlock();
  out.fit_time_s = std::max(std::chrono::duration<double>(t1 - t0).count(), 1e-9);
  out.iterations_used = model.iterations_used;
  out.converged = model.converged;

  const auto reference = rec.channel(rec.index_of(opts.reference_label));
  std::tie(out.rho, out.best_component) = correlation_score(model, rec, reference);
  return out;
}

// ---------------------------------------------------------------------------

SweepResult run_sweep(const std::vector<Dataset>& datasets,
                      const std::vector<ElectrodeConfig>& configs,
                      const std::vector<IcaMethod>& algorithms, const std::vector<SnrLevel>& snrs,
                      int n_iterations, std::uint64_t master_seed, const SweepOptions& opts) {
  if (datasets.empty() || configs.empty() || algorithms.empty() || snrs.empty() ||
      n_iterations < 1)
    throw RangeError("run_sweep: every axis must be non-empty");
  for (const auto& c : configs) c.validate();

  const std::size_t nI = static_cast<std::size_t>(n_iterations);
  const std::size_t total = datasets.size() * configs.size() * algorithms.size() * snrs.size() * nI;
  auto decode = [&](std::size_t i) {
    TrialCoordinate c;
    c.iteration = static_cast<int>(i % nI);
    i /= nI;
    c.snr = i % snrs.size();
    i /= snrs.size();
    c.algorithm = i % algorithms.size();
    i /= algorithms.size();
    c.config = i % configs.size();
    c.dataset = i / configs.size();
    return c;
  };

  std::vector<std::optional<TrialResult>> results(total);
  std::vector<std::optional<TrialFailure>> failures(total);
  std::vector<char> done(total, 0);
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t emitted = 0;
  std::exception_ptr callback_error;

  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= total) return;
      const TrialCoordinate c = decode(i);
      if (!(opts.skip && opts.skip(c))) {
        const auto& ds = datasets[c.dataset];
        const auto& cfg = configs[c.config];
        try {
          results[i] = run_trial(ds, cfg, algorithms[c.algorithm], snrs[c.snr], c.iteration,
                                 master_seed, opts.trial);
        } catch (const std::exception& e) {
          failures[i] = TrialFailure{ds.id, cfg.name, std::string(to_string(algorithms[c.algorithm])),
                                     snrs[c.snr].label(), c.iteration, e.what()};
        }
      }
      std::lock_guard lock(mu);
      done[i] = 1;
      while (emitted < total && done[emitted]) {
        if (results[emitted] && opts.on_row && !callback_error) {
          try {
            opts.on_row(*results[emitted]);
          } catch (...) {
            callback_error = std::current_exception();
          }
        }
        ++emitted;
      }
    }
  };

  unsigned workers = opts.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : opts.workers;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, total));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (callback_error) std::rethrow_exception(callback_error);

  SweepResult out;
  for (std::size_t i = 0; i < total; ++i) {
    if (results[i]) out.rows.push_back(std::move(*results[i]));
    if (failures[i]) out.failures.push_back(std::move(*failures[i]));
  }
  return out;
}

// ---------------------------------------------------------------------------

double degradation(double rho_0, double rho_gamma) {
  if (!(rho_0 > 0.0)) throw RangeError("degradation: baseline score must be > 0");
  return (rho_0 - rho_gamma) / rho_0;
}

std::vector<GroupSummary> aggregate(const std::vector<TrialResult>& table) {
  using Key = std::tuple<std::string, std::string, std::string, double>;
  std::map<Key, std::size_t> index;
  std::vector<GroupSummary> groups;
  std::vector<std::vector<const TrialResult*>> members;
  for (const auto& row : table) {
    const Key key{row.dataset, row.config, row.algorithm, row.snr.gamma};
    auto [it, inserted] = index.emplace(key, groups.size());
    if (inserted) {
      GroupSummary g;
      g.dataset = row.dataset;
      g.config = row.config;
      g.algorithm = row.algorithm;
      g.snr = row.snr;
      groups.push_back(std::move(g));
      members.emplace_back();
    }
    members[it->second].push_back(&row);
  }

  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    auto& g = groups[gi];
    const auto& rows = members[gi];
    const double n = static_cast<double>(rows.size());
    g.n = rows.size();
    double sr = 0.0, st = 0.0, conv = 0.0;
    for (const auto* r : rows) {
      sr += r->rho;
      st += r->fit_time_s;
      conv += r->converged ? 1.0 : 0.0;
    }
    g.mean_rho = sr / n;
    g.mean_time_s = st / n;
    g.convergence_rate = conv / n;
    double vr = 0.0, vt = 0.0;
    for (const auto* r : rows) {
      vr += (r->rho - g.mean_rho) * (r->rho - g.mean_rho);
      vt += (r->fit_time_s - g.mean_time_s) * (r->fit_time_s - g.mean_time_s);
    }
    g.std_rho = std::sqrt(vr / n);
    g.std_time_s = std::sqrt(vt / n);
  }

  for (auto& g : groups) {
    const auto it = index.find(Key{g.dataset, g.config, g.algorithm, kNoNoise});
    if (it == index.end()) {
      g.baseline_missing = true;
      continue;
    }
    const double rho_0 = groups[it->second].mean_rho;
    if (rho_0 > 0.0) g.degradation = DegradationRecord{rho_0, g.mean_rho, degradation(rho_0, g.mean_rho)};
  }
  return groups;
}

std::vector<std::pair<std::string, double>> export_component_weights(const IcaModel& model,
                                                                     std::size_t component) {
  if (component >= model.n_components)
    throw RangeError("export_component_weights: component " + std::to_string(component) +
                     " out of range (" + std::to_string(model.n_components) + " components)");
  std::vector<std::pair<std::string, double>> out;
  for (Eigen::Index c = 0; c < model.A_hat.rows(); ++c)
    out.emplace_back(model.channel_labels[static_cast<std::size_t>(c)],
                     model.A_hat(c, static_cast<Eigen::Index>(component)));
  return out;
}

// ---------------------------------------------------------------------------

std::string format_result_row(const TrialResult& r) {
  std::string s;
  s += r.dataset + ',' + r.config + ',' + r.algorithm + ',' + r.snr.label() + ',';
  s += std::to_string(r.iteration) + ',' + full_precision(r.rho) + ',';
  s += std::to_string(r.best_component) + ',' + full_precision(r.fit_time_s) + ',';
  s += std::to_string(r.iterations_used) + ',' + (r.converged ? "true" : "false") + ',';
  s += std::to_string(r.segment_start) + ',' + std::to_string(r.seed);
  return s;
}

void write_results_csv(std::ostream& out, const std::vector<TrialResult>& rows) {
  out << kResultsHeader << '\n';
  for (const auto& r : rows) out << format_result_row(r) << '\n';
}

namespace {

template <typename T>
T parse_number(std::string_view cell, long line, const char* column) {
  T v{};
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
    throw ParseError(std::string("column ") + column + ": cannot parse '" + std::string(cell) + "'",
                     line);
  return v;
}

}  // namespace

std::vector<TrialResult> read_results_csv(std::istream& in, bool allow_truncated_tail) {
  const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  bool last_complete = true;
  while (pos < content.size()) {
    const auto nl = content.find('\n', pos);
    if (nl == std::string::npos) {
      lines.emplace_back(content.data() + pos, content.size() - pos);
      last_complete = false;
      break;
    }
    lines.emplace_back(content.data() + pos, nl - pos);
    pos = nl + 1;
  }
  for (auto& l : lines)
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
  if (lines.empty() || lines[0] != kResultsHeader)
    throw ParseError("results file does not start with the expected header", 1);
  if (allow_truncated_tail && !last_complete) lines.pop_back();

  std::vector<TrialResult> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const long lineno = static_cast<long>(i + 1);
    if (lines[i].empty()) continue;
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    const auto& l = lines[i];
    for (;;) {
      const auto comma = l.find(',', start);
      cells.push_back(l.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cells.size() != 12)
      throw ParseError("expected 12 columns, found " + std::to_string(cells.size()), lineno);
    TrialResult r;
    r.dataset = cells[0];
    r.config = cells[1];
    r.algorithm = cells[2];
    r.snr = cells[3] == "inf" ? SnrLevel::baseline()
                              : SnrLevel::db(parse_number<double>(cells[3], lineno, "snr_db"));
    r.iteration = parse_number<int>(cells[4], lineno, "iteration");
    r.rho = parse_number<double>(cells[5], lineno, "rho");
    r.best_component = parse_number<std::size_t>(cells[6], lineno, "best_component");
    r.fit_time_s = parse_number<double>(cells[7], lineno, "fit_time_s");
    r.iterations_used = parse_number<int>(cells[8], lineno, "iterations_used");
    if (cells[9] == "true")
      r.converged = true;
    else if (cells[9] == "false")
      r.converged = false;
    else
      throw ParseError("column converged: expected true/false", lineno);
    r.segment_start = parse_number<std::size_t>(cells[10], lineno, "segment_start");
    r.seed = parse_number<std::uint64_t>(cells[11], lineno, "seed");
    rows.push_back(std::move(r));
  }
  return rows;
}

nlohmann::ordered_json summary_to_json(const std::vector<GroupSummary>& groups) {
  nlohmann::ordered_json root = nlohmann::ordered_json::object();
  for (const auto& g : groups) {
    nlohmann::ordered_json entry;
    entry["n"] = g.n;
    entry["mean_rho"] = g.mean_rho;
    entry["std_rho"] = g.std_rho;
    entry["mean_time_s"] = g.mean_time_s;
    entry["std_time_s"] = g.std_time_s;
    entry["convergence_rate"] = g.convergence_rate;
    if (g.degradation) {
      entry["q"] = g.degradation->q;
      entry["rho_0"] = g.degradation->rho_0;
    } else {
      entry["q"] = nullptr;
      entry["rho_0"] = nullptr;
    }
    root[g.dataset][g.config][g.algorithm][g.snr.label()] = std::move(entry);
  }
  return root;
}

}  // namespace blinkica
