#include "run_config.hpp"

#include "blinkica/errors.hpp"
#include "blinkica/seeding.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

namespace blinkica::cli {

using nlohmann::json;

std::vector<ElectrodeConfig> RunConfig::default_configs() {
  std::vector<ElectrodeConfig> out{ElectrodeConfig::all()};
  for (auto& c : builtin_configs()) out.push_back(c);
  return out;
}

std::vector<SnrLevel> RunConfig::snr_levels() const {
  return snr_grid(snr.start_db, snr.stop_db, snr.step_db, snr.include_baseline);
}

std::string RunConfig::dataset_id(int index) const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "ds%02d", index + 1);
  return buf;
}

std::uint64_t RunConfig::dataset_seed(int index) const {
  return derive_seed({seed, hash_name("dataset"), static_cast<std::uint64_t>(index)});
}

SynthSpec RunConfig::dataset_spec(int index) const {
  SynthSpec s = synthesis;
  s.seed = dataset_seed(index);
  return s;
}

void RunConfig::validate() const {
  synthesis.validate();
  if (datasets < 1) throw ConfigError("datasets", "must be >= 1");
  if (configs.empty()) throw ConfigError("configs", "must list at least one electrode config");
  std::set<std::string> names;
  std::set<std::string> montage_labels;
  for (const auto& ch : synthesis.montage)
    if (ch.role == ChannelRole::measurement) montage_labels.insert(ch.label);
  for (const auto& c : configs) {
    c.validate();
    if (!names.insert(c.name).second) throw ConfigError("configs", "duplicate config name " + c.name);
    for (const auto& l : c.channels)
      if (!montage_labels.count(l))
        throw ConfigError("configs." + c.name, "channel " + l + " is not a measurement channel of the montage");
  }
  if (algorithms.empty()) throw ConfigError("algorithms", "must list at least one algorithm");
  if (!(snr.step_db > 0.0)) throw ConfigError("snr.step_db", "must be > 0");
  if (!std::isfinite(snr.start_db) || !std::isfinite(snr.stop_db) || snr.stop_db < snr.start_db)
    throw ConfigError("snr", "need finite start_db <= stop_db");
  if (iterations < 1) throw ConfigError("iterations", "must be >= 1");
  if (segment_length < 1) throw ConfigError("segment_length", "must be >= 1");
  const auto samples = static_cast<std::size_t>(std::llround(synthesis.duration * synthesis.fs));
  if (segment_length > samples)
    throw ConfigError("segment_length", "exceeds the synthesised recording length (" +
                                            std::to_string(samples) + " samples)");
  try {
    ica.validate();
  } catch (const std::exception& e) {
    throw ConfigError("ica", e.what());
  }
}

void RunConfig::apply_quick_preset() {
  synthesis.montage = desk_montage();
  synthesis.fs = 250.0;
  synthesis.duration = 120.0;
  segment_length = 15000;
  datasets = 2;
  configs = {ElectrodeConfig::all(), *builtin_config("em8")};
  algorithms = {IcaMethod::fastica_deflation, IcaMethod::infomax};
  snr = SnrGridSpec{0.0, 20.0, 10.0, true};
  iterations = 10;
}

// ---------------------------------------------------------------------------

namespace {

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw ConfigError(where.empty() ? it.key() : where + "." + it.key(), "unknown key");
  }
}

template <typename T>
void read(const json& obj, const char* key, const std::string& where, T& target) {
  if (!obj.contains(key)) return;
  const std::string field = where.empty() ? key : where + "." + key;
  const json& v = obj.at(key);
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(field, "expected true or false");
    } else if constexpr (std::is_arithmetic_v<T>) {
      if (!v.is_number()) throw ConfigError(field, "expected a number");
      if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError(field, "expected an integer");
        if constexpr (std::is_unsigned_v<T>)
          if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)
            throw ConfigError(field, "must be non-negative");
      }
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(field, "expected a string");
    }
    target = v.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(field, e.what());
  }
}

Montage parse_montage(const json& v) {
  if (v.is_string()) {
    const auto name = v.get<std::string>();
    if (name == "full") return full_montage();
    if (name == "desk") return desk_montage();
    throw ConfigError("synthesis.montage", "unknown montage '" + name + "' (expected full, desk or a list)");
  }
  if (!v.is_array()) throw ConfigError("synthesis.montage", "expected a name or a list of channels");
  Montage m;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string where = "synthesis.montage[" + std::to_string(i) + "]";
    const json& e = v[i];
    if (e.is_string()) {
      m.push_back(make_channel(e.get<std::string>(), ChannelRole::measurement));
      continue;
    }
    if (!e.is_object() || !e.contains("label")) throw ConfigError(where, "expected a label or {label, role, x, y}");
    reject_unknown(e, where, {"label", "role", "x", "y"});
    std::string label, role = "measurement";
    read(e, "label", where, label);
    read(e, "role", where, role);
    ChannelSpec ch;
    try {
      ch = make_channel(label, parse_role(role));
    } catch (const ParseError& err) {
      throw ConfigError(where + ".role", err.what());
    }
    read(e, "x", where, ch.x);
    read(e, "y", where, ch.y);
    m.push_back(std::move(ch));
  }
  return m;
}

ElectrodeConfig parse_electrode_config(const json& v, std::size_t i) {
  const std::string where = "configs[" + std::to_string(i) + "]";
  if (v.is_string()) {
    const auto name = v.get<std::string>();
    if (auto c = builtin_config(name)) return *c;
    throw ConfigError(where, "unknown config name '" + name + "'");
  }
  if (!v.is_object()) throw ConfigError(where, "expected a name or {name, channels}");
  reject_unknown(v, where, {"name", "channels"});
  ElectrodeConfig c;
  read(v, "name", where, c.name);
  if (!v.contains("channels") || !v["channels"].is_array())
    throw ConfigError(where + ".channels", "expected a list of labels");
  for (const auto& l : v["channels"]) {
    if (!l.is_string()) throw ConfigError(where + ".channels", "labels must be strings");
    c.channels.push_back(l.get<std::string>());
  }
  return c;
}

}  // namespace

RunConfig parse_run_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  reject_unknown(doc, "", {"synthesis", "datasets", "configs", "algorithms", "snr", "iterations",
                           "segment_length", "seed", "output_dir", "workers", "ica"});
  RunConfig cfg;
  if (doc.contains("synthesis")) {
    const json& s = doc["synthesis"];
    if (!s.is_object()) throw ConfigError("synthesis", "expected an object");
    reject_unknown(s, "synthesis", {"montage", "duration_s", "fs_hz", "source_band", "brain_rms_uv",
                                    "mixing_width", "mixing_jitter", "blink_amplitude_uv",
                                    "frontal_labels", "reference_label"});
    if (s.contains("montage")) cfg.synthesis.montage = parse_montage(s["montage"]);
    read(s, "duration_s", "synthesis", cfg.synthesis.duration);
    read(s, "fs_hz", "synthesis", cfg.synthesis.fs);
    read(s, "brain_rms_uv", "synthesis", cfg.synthesis.brain_rms);
    read(s, "mixing_width", "synthesis", cfg.synthesis.mixing_width);
    read(s, "mixing_jitter", "synthesis", cfg.synthesis.mixing_jitter);
    read(s, "blink_amplitude_uv", "synthesis", cfg.synthesis.blink_amplitude);
    read(s, "reference_label", "synthesis", cfg.synthesis.reference_label);
    if (s.contains("frontal_labels")) {
      if (!s["frontal_labels"].is_array()) throw ConfigError("synthesis.frontal_labels", "expected a list");
      cfg.synthesis.frontal_labels.clear();
      for (const auto& l : s["frontal_labels"]) {
        if (!l.is_string()) throw ConfigError("synthesis.frontal_labels", "labels must be strings");
        cfg.synthesis.frontal_labels.push_back(l.get<std::string>());
      }
    }
    if (s.contains("source_band")) {
      const json& b = s["source_band"];
      const std::string where = "synthesis.source_band";
      if (!b.is_object()) throw ConfigError(where, "expected an object");
      reject_unknown(b, where, {"low_hz", "high_hz", "envelope_sigma", "envelope_hz"});
      read(b, "low_hz", where, cfg.synthesis.source_band.low_hz);
      read(b, "high_hz", where, cfg.synthesis.source_band.high_hz);
      read(b, "envelope_sigma", where, cfg.synthesis.source_band.envelope_sigma);
      read(b, "envelope_hz", where, cfg.synthesis.source_band.envelope_hz);
    }
  }
  read(doc, "datasets", "", cfg.datasets);
  if (doc.contains("configs")) {
    const json& c = doc["configs"];
    if (!c.is_array()) throw ConfigError("configs", "expected a list");
    cfg.configs.clear();
    for (std::size_t i = 0; i < c.size(); ++i) cfg.configs.push_back(parse_electrode_config(c[i], i));
  }
  if (doc.contains("algorithms")) {
    const json& a = doc["algorithms"];
    if (!a.is_array()) throw ConfigError("algorithms", "expected a list");
    cfg.algorithms.clear();
    for (const auto& name : a) {
      if (!name.is_string()) throw ConfigError("algorithms", "entries must be strings");
      try {
        cfg.algorithms.push_back(parse_method(name.get<std::string>()));
      } catch (const ParseError& e) {
        throw ConfigError("algorithms", e.what());
      }
    }
  }
  if (doc.contains("snr")) {
    const json& g = doc["snr"];
    if (!g.is_object()) throw ConfigError("snr", "expected an object");
    reject_unknown(g, "snr", {"start_db", "stop_db", "step_db", "include_baseline"});
    read(g, "start_db", "snr", cfg.snr.start_db);
    read(g, "stop_db", "snr", cfg.snr.stop_db);
    read(g, "step_db", "snr", cfg.snr.step_db);
    read(g, "include_baseline", "snr", cfg.snr.include_baseline);
  }
  read(doc, "iterations", "", cfg.iterations);
  read(doc, "segment_length", "", cfg.segment_length);
  read(doc, "seed", "", cfg.seed);
  if (doc.contains("output_dir")) {
    std::string dir;
    read(doc, "output_dir", "", dir);
    cfg.output_dir = dir;
  }
  read(doc, "workers", "", cfg.workers);
  if (doc.contains("ica")) {
    const json& o = doc["ica"];
    if (!o.is_object()) throw ConfigError("ica", "expected an object");
    reject_unknown(o, "ica", {"max_iterations", "tolerance", "learning_rate", "anneal_factor",
                              "anneal_threshold_deg", "block_size", "rank_tolerance", "seed"});
    if (o.contains("max_iterations") && !o["max_iterations"].is_null()) {
      int v = 0;
      read(o, "max_iterations", "ica", v);
      cfg.ica.max_iterations = v;
    }
    if (o.contains("learning_rate") && !o["learning_rate"].is_null()) {
      double v = 0.0;
      read(o, "learning_rate", "ica", v);
      cfg.ica.learning_rate = v;
    }
    read(o, "tolerance", "ica", cfg.ica.tolerance);
    read(o, "anneal_factor", "ica", cfg.ica.anneal_factor);
    read(o, "anneal_threshold_deg", "ica", cfg.ica.anneal_threshold_deg);
    read(o, "block_size", "ica", cfg.ica.block_size);
    read(o, "rank_tolerance", "ica", cfg.ica.rank_tolerance);
    read(o, "seed", "ica", cfg.ica.seed);
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
  }
  return parse_run_config(doc);
}

nlohmann::ordered_json run_config_to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  auto& s = j["synthesis"];
  s["montage"] = nlohmann::ordered_json::array();
  for (const auto& ch : cfg.synthesis.montage)
    s["montage"].push_back({{"label", ch.label}, {"role", std::string(to_string(ch.role))}, {"x", ch.x}, {"y", ch.y}});
  s["duration_s"] = cfg.synthesis.duration;
  s["fs_hz"] = cfg.synthesis.fs;
  s["source_band"] = {{"low_hz", cfg.synthesis.source_band.low_hz},
                      {"high_hz", cfg.synthesis.source_band.high_hz},
                      {"envelope_sigma", cfg.synthesis.source_band.envelope_sigma},
                      {"envelope_hz", cfg.synthesis.source_band.envelope_hz}};
  s["brain_rms_uv"] = cfg.synthesis.brain_rms;
  s["mixing_width"] = cfg.synthesis.mixing_width;
  s["mixing_jitter"] = cfg.synthesis.mixing_jitter;
  s["blink_amplitude_uv"] = cfg.synthesis.blink_amplitude;
  s["frontal_labels"] = cfg.synthesis.frontal_labels;
  s["reference_label"] = cfg.synthesis.reference_label;
  j["datasets"] = cfg.datasets;
  j["configs"] = nlohmann::ordered_json::array();
  for (const auto& c : cfg.configs) {
    if (c.is_all())
      j["configs"].push_back("all");
    else
      j["configs"].push_back({{"name", c.name}, {"channels", c.channels}});
  }
  j["algorithms"] = nlohmann::ordered_json::array();
  for (auto a : cfg.algorithms) j["algorithms"].push_back(std::string(to_string(a)));
  j["snr"] = {{"start_db", cfg.snr.start_db},
              {"stop_db", cfg.snr.stop_db},
              {"step_db", cfg.snr.step_db},
              {"include_baseline", cfg.snr.include_baseline}};
  j["iterations"] = cfg.iterations;
  j["segment_length"] = cfg.segment_length;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir.string();
  j["workers"] = cfg.workers;
  auto& ica = j["ica"];
  if (cfg.ica.max_iterations) ica["max_iterations"] = *cfg.ica.max_iterations;
  ica["tolerance"] = cfg.ica.tolerance;
  if (cfg.ica.learning_rate) ica["learning_rate"] = *cfg.ica.learning_rate;
  ica["anneal_factor"] = cfg.ica.anneal_factor;
  ica["anneal_threshold_deg"] = cfg.ica.anneal_threshold_deg;
  ica["block_size"] = cfg.ica.block_size;
  ica["rank_tolerance"] = cfg.ica.rank_tolerance;
  ica["seed"] = cfg.ica.seed;
  return j;
}

}  // namespace blinkica::cli
