#include "blinkica/bench.hpp"
#include "blinkica/errors.hpp"
#include "blinkica/synth.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <sstream>

using namespace blinkica;

namespace {

SynthSpec small_spec(std::uint64_t seed) {
  SynthSpec s;
  s.montage = desk_montage();
  s.fs = 250.0;
  s.duration = 70.0;
  s.seed = seed;
  return s;
}

std::vector<double> row_of(const SignalMatrix& m, Eigen::Index r) {
  return {m.row(r).data(), m.row(r).data() + m.cols()};
}

}  // namespace

TEST_SUITE("synthgen") {

TEST_CASE("montages") {
  const Montage full = full_montage();
  int meas = 0, eog = 0, ref = 0;
  for (const auto& c : full) {
    meas += c.role == ChannelRole::measurement;
    eog += c.role == ChannelRole::eog;
    ref += c.role == ChannelRole::reference;
  }
  CHECK(meas == 28);
  CHECK(eog == 3);
  CHECK(ref == 1);
  CHECK(desk_montage().size() == 20);
}

TEST_CASE("SynthSpec validation names the field") {
  SynthSpec s = small_spec(1);
  s.fs = 60.0;
  try {
    s.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "fs");
  }
  s = small_spec(1);
  s.duration = 30.0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = small_spec(1);
  s.frontal_labels = {"XX"};
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("clean recording: DC rejection, determinism, super-Gaussian sources, exact mixing") {
  const SynthSpec spec = small_spec(3);
  const CleanDataset a = generate_clean_recording(spec);
  const CleanDataset b = generate_clean_recording(spec);
  CHECK(a.recording.data == b.recording.data);
  CHECK(a.truth.A == b.truth.A);
  CHECK(a.recording.n_samples() == 70u * 250u);
  CHECK(a.recording.n_channels() == spec.montage.size());

  for (std::size_t c = 0; c < a.recording.n_channels(); ++c) {
    const auto m = oracle::moments(a.recording.channel(c));
    CHECK(std::abs(m.mean) < 0.1);
    CHECK(std::sqrt(m.var) == doctest::Approx(spec.brain_rms).epsilon(0.01));
  }
  for (Eigen::Index i = 0; i < a.truth.s.rows(); ++i) CHECK(oracle::moments(row_of(a.truth.s, i)).kurt - 3.0 > 0.5);

  CHECK((a.truth.x - a.truth.A * a.truth.s).cwiseAbs().maxCoeff() == 0.0);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a.truth.A);
  CHECK(svd.singularValues().minCoeff() > 1e-6 * svd.singularValues().maxCoeff());

  const CleanDataset c = generate_clean_recording(small_spec(4));
  CHECK(c.recording.data != a.recording.data);
}

TEST_CASE("blink kernel") {
  const auto k = synth_blink_kernel(1000.0, 100.0);
  REQUIRE(k.size() == 1000);
  const double mx = *std::max_element(k.begin(), k.end());
  const double mn = *std::min_element(k.begin(), k.end());
  CHECK(std::abs(mx - 100.0) <= 1.0);
  CHECK(mn >= -5.0);
  CHECK(std::abs(k.front()) < 1.0);
  CHECK(std::abs(k.back()) < 1.0);
  const auto peak_at = std::distance(k.begin(), std::max_element(k.begin(), k.end()));
  CHECK(peak_at > 200);
  CHECK(peak_at < 400);
  CHECK(oracle::dft_power_fraction_above(k, 1000.0, 35.0) < 0.02);

  for (double v : synth_blink_kernel(500.0, 0.0)) REQUIRE(v == 0.0);
  CHECK(synth_blink_kernel(250.0, 50.0).size() == 250);
  CHECK_THROWS_AS(synth_blink_kernel(60.0, 100.0), RangeError);
}

TEST_CASE("blink schedule") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const auto s = draw_blink_schedule(60.0, 250.0, rng);
    REQUIRE(s.timestamps.size() >= 5);
    REQUIRE(s.timestamps.size() <= 11);
    double prev = 0.0;
    for (std::size_t i = 0; i < s.timestamps.size(); ++i) {
      const double gap = s.timestamps[i] - prev;
      REQUIRE(gap > 5.0);
      REQUIRE(gap < 10.0);
      REQUIRE(s.timestamps[i] + 1.0 <= 60.0);
      REQUIRE(s.onsets[i] == static_cast<std::size_t>(std::llround(s.timestamps[i] * 250.0)));
      prev = s.timestamps[i];
    }
  }
  // 12 s: the first onset lies in (5, 10). A second blink fits only when
  // T_1 + gap <= 11, which has probability 0.5 / 25 = 2%.
  int two = 0;
  constexpr int kSeeds = 5000;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    Rng r12(seed);
    const auto s = draw_blink_schedule(12.0, 1000.0, r12);
    REQUIRE(s.timestamps.size() >= 1);
    REQUIRE(s.timestamps.size() <= 2);
    REQUIRE(s.timestamps[0] > 5.0);
    REQUIRE(s.timestamps[0] < 10.0);
    if (s.timestamps.size() == 2) {
      ++two;
      REQUIRE(s.timestamps[1] <= 11.0);
    }
  }
  const double p = 0.02, sd = std::sqrt(p * (1 - p) / kSeeds);
  CHECK(std::abs(double(two) / kSeeds - p) < 4.0 * sd);
  Rng rng(1);
  CHECK_THROWS_AS(draw_blink_schedule(11.0, 250.0, rng), RangeError);
}

TEST_CASE("topography") {
  const Montage m = desk_montage();
  const std::vector<std::string> frontal{"FP1", "FP2"};
  const auto w = default_topography(m, frontal);
  REQUIRE(w.size() == m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i].label == "FP1" || m[i].label == "FP2") CHECK(w[i] >= 0.8);
    else if (m[i].role == ChannelRole::measurement) CHECK(w[i] <= 0.1);
  }
}

TEST_CASE("injection") {
  const Montage m = desk_montage();
  const std::vector<std::string> frontal{"FP1", "FP2"};
  std::vector<std::string> labels;
  std::vector<ChannelRole> roles;
  for (const auto& c : m) {
    labels.push_back(c.label);
    roles.push_back(c.role);
  }
  const double fs = 100.0;
  const Recording zero(SignalMatrix::Zero(static_cast<Eigen::Index>(m.size()), 3000), fs, labels, roles);

  BlinkSchedule empty;
  empty.kernel = synth_blink_kernel(fs, 100.0);
  empty.topography = default_topography(m, frontal);
  const auto e = inject_blinks(zero, empty);
  CHECK(e.recording.data == zero.data);
  for (double v : e.reference) REQUIRE(v == 0.0);

  BlinkSchedule one = empty;
  one.timestamps = {7.0};
  one.onsets = {700};
  const auto c = inject_blinks(zero, one);
  for (std::size_t ch = 0; ch < m.size(); ++ch)
    for (std::size_t t = 0; t < 3000; ++t) {
      const double expect = (t >= 700 && t < 800) ? one.topography[ch] * one.kernel[t - 700] : 0.0;
      REQUIRE(c.recording.channel(ch)[t] == expect);
    }
  // Within the blink support every weighted channel is a scaled copy of the reference.
  const auto fp1 = *c.recording.find("FP1");
  CHECK(oracle::pearson(c.recording.channel(fp1).subspan(700, 100), std::span(c.reference).subspan(700, 100)) ==
        doctest::Approx(1.0).epsilon(1e-12));

  // Real data: contaminated minus clean is topography times reference, sample by sample.
  const CleanDataset clean = generate_clean_recording(small_spec(5));
  Rng rng(9);
  BlinkSchedule s = draw_blink_schedule(70.0, 250.0, rng);
  s.kernel = synth_blink_kernel(250.0, 100.0);
  s.topography = default_topography(m, frontal);
  const auto dirty = inject_blinks(clean.recording, s);
  double worst = 0.0;
  for (std::size_t ch = 0; ch < m.size(); ++ch)
    for (std::size_t t = 0; t < clean.recording.n_samples(); ++t)
      worst = std::max(worst, std::abs(dirty.recording.channel(ch)[t] - clean.recording.channel(ch)[t] -
                                       s.topography[ch] * dirty.reference[t]));
  CHECK(worst < 1e-9);

  // Two halves of the schedule injected in turn equal the merged schedule.
  BlinkSchedule first = s, second = s;
  const std::size_t half = s.onsets.size() / 2;
  first.onsets.resize(half);
  first.timestamps.resize(half);
  second.onsets.erase(second.onsets.begin(), second.onsets.begin() + static_cast<long>(half));
  second.timestamps.erase(second.timestamps.begin(), second.timestamps.begin() + static_cast<long>(half));
  const auto twice = inject_blinks(inject_blinks(clean.recording, first).recording, second);
  CHECK((twice.recording.data - dirty.recording.data).cwiseAbs().maxCoeff() < 1e-9);

  BlinkSchedule bad = s;
  bad.topography.pop_back();
  CHECK_THROWS_AS(inject_blinks(clean.recording, bad), ShapeError);
}

TEST_CASE("reference channel") {
  const CleanDataset clean = generate_clean_recording(small_spec(6));
  std::vector<double> trace(clean.recording.n_samples());
  for (std::size_t t = 0; t < trace.size(); ++t) trace[t] = std::sin(0.01 * t);
  const Recording r = set_reference_channel(clean.recording, trace, "LO1");
  CHECK(r.n_channels() == clean.recording.n_channels());
  const auto lo1 = r.index_of("LO1");
  CHECK(std::equal(trace.begin(), trace.end(), r.channel(lo1).begin()));
  CHECK(r.roles[lo1] == ChannelRole::eog);

  const Recording appended = set_reference_channel(clean.recording, trace, "NEW");
  CHECK(appended.n_channels() == clean.recording.n_channels() + 1);
  CHECK_THROWS_AS(set_reference_channel(clean.recording, std::vector<double>(5), "LO1"), ShapeError);

  // A 4-channel mixture plus LO1 decomposes into 4 components.
  std::mt19937_64 rng(6);
  const Eigen::MatrixXd s = oracle::laplace_sources(4, 4000, rng);
  const SignalMatrix x = oracle::well_conditioned_mixing(4, rng) * s;
  const Recording four(x, 250.0, {"A", "B", "C", "D"}, std::vector<ChannelRole>(4, ChannelRole::measurement));
  const Recording five = set_reference_channel(four, row_of(SignalMatrix(s), 0), "LO1");
  CHECK(five.n_channels() == 5);
  CHECK(fit(five, IcaAlgorithm::fastica).n_components == 4);
}

TEST_CASE("adaptive z-score") {
  const std::vector<double> scores{0.01, 0.02, 0.015, 0.03, 0.9, 0.02, 0.01, 0.025, 0.018, 0.012};
  CHECK(adaptive_zscore_outliers(scores, 2.6) == std::vector<std::size_t>{4});
  CHECK(adaptive_zscore_outliers(std::vector<double>(6, 0.2), 2.6).empty());
  // Second-round detection after the dominant outlier is removed.
  std::vector<double> two(20, 0.02);
  for (std::size_t i = 0; i < two.size(); ++i) two[i] += 0.001 * static_cast<double>(i % 5);
  two[3] = 0.95;
  two[11] = 0.3;
  CHECK(adaptive_zscore_outliers(two, 2.6) == std::vector<std::size_t>{3, 11});
}

TEST_CASE("synthetic dataset layout") {
  const SyntheticDataset d = synthesize_dataset(small_spec(7));
  CHECK(d.recording.n_channels() == desk_montage().size());
  const auto lo1 = d.recording.index_of("LO1");
  CHECK(d.recording.roles[lo1] == ChannelRole::eog);
  CHECK(std::equal(d.reference.begin(), d.reference.end(), d.recording.channel(lo1).begin()));
  CHECK(d.schedule.kernel.size() == 250);
  CHECK(!d.schedule.timestamps.empty());

  const SyntheticDataset again = synthesize_dataset(small_spec(7));
  CHECK(again.recording.data == d.recording.data);
}

TEST_CASE("end to end: blink component recovered, isolated and removable") {
  int hits = 0;
  constexpr int kRuns = 50;
  for (int seed = 0; seed < kRuns; ++seed) {
    const SyntheticDataset d = synthesize_dataset(small_spec(100 + seed));
    const IcaModel m = fit(d.recording, IcaAlgorithm::fastica);
    const SignalMatrix S = sources(m, d.recording);
    double best = 0.0;
    std::size_t best_idx = 0;
    for (Eigen::Index c = 0; c < S.rows(); ++c) {
      const double r = std::abs(oracle::pearson(row_of(S, c), d.reference));
      if (r > best) {
        best = r;
        best_idx = static_cast<std::size_t>(c);
      }
    }
    hits += best > 0.95;

    if (seed < 5) {
      const auto flagged = isolate_eyeblink_component(d.recording, m);
      CHECK(std::find(flagged.begin(), flagged.end(), best_idx) != flagged.end());
      CHECK(std::adjacent_find(flagged.begin(), flagged.end()) == flagged.end());
      const std::vector<std::size_t> drop{best_idx};
      const Recording cleaned = nullify_and_reconstruct(m, d.recording, drop);
      for (std::size_t c = 0; c < cleaned.n_channels(); ++c)
        if (cleaned.roles[c] == ChannelRole::measurement)
          CHECK(std::abs(oracle::pearson(cleaned.channel(c), d.reference)) < 0.1);
    }
  }
  CHECK(hits >= 48);
}

TEST_CASE("isolate: EOG made of independent noise is rarely flagged") {
  int empty = 0;
  constexpr int kRuns = 40;
  // The false-positive rate of a fixed z threshold grows with the component
  // count; 8 components matches the 8-channel configurations.
  const CleanDataset base = generate_clean_recording(small_spec(8));
  Recording rec = subset_channels(base.recording, *builtin_config("em8"));
  const IcaModel m = fit(rec, IcaAlgorithm::fastica);
  for (int seed = 0; seed < kRuns; ++seed) {
    Rng rng(1000 + seed);
    std::normal_distribution<double> g(0.0, 20.0);
    for (auto row : rec.indices_with_role(ChannelRole::eog))
      for (auto& v : rec.channel(row)) v = g(rng);
    empty += isolate_eyeblink_component(rec, m).empty();
  }
  CHECK(empty >= 38);

  const Recording no_eog = select_channels(rec, std::vector<std::size_t>{0, 1, 2});
  CHECK_THROWS_AS(isolate_eyeblink_component(no_eog, fit(no_eog, IcaAlgorithm::fastica)), ShapeError);
}

TEST_CASE("recording CSV round trip and diagnostics") {
  const SyntheticDataset d = synthesize_dataset(small_spec(9));
  std::stringstream ss;
  write_recording_csv(ss, d.recording);
  const Recording back = read_recording_csv(ss);
  CHECK(back.labels == d.recording.labels);
  CHECK(back.roles == d.recording.roles);
  CHECK(back.fs == d.recording.fs);
  CHECK(back.data == d.recording.data);

  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_recording_csv(in);
  };
  auto message = [&](const std::string& text) -> std::string {
    try {
      parse(text);
    } catch (const ParseError& e) {
      return e.what();
    }
    return "";
  };
  CHECK(message("# labels=A,B\n# roles=eeg,eog\n1,2\n").find("'fs'") != std::string::npos);
  CHECK(message("# fs=100\n# roles=eeg,eog\n1,2\n").find("'labels'") != std::string::npos);
  const std::string ragged = message("# fs=100\n# labels=A,B\n# roles=eeg,eog\n1,2\n3\n");
  CHECK(ragged.find("ragged") != std::string::npos);
  CHECK(ragged.find("line 5") != std::string::npos);
  CHECK(message("# fs=100\n# labels=A,B\n# roles=eeg,eog\n1,x\n").find("non-numeric") != std::string::npos);
  CHECK(message("# fs=100\n# labels=A,B\n# roles=eeg,bogus\n1,2\n").find("roles") != std::string::npos);
}

TEST_CASE("import: 28 + 4 channel file") {
  const Montage m = full_montage();
  std::vector<std::string> labels;
  std::vector<ChannelRole> roles;
  for (const auto& c : m) {
    labels.push_back(c.label);
    roles.push_back(c.role);
  }
  SignalMatrix data(static_cast<Eigen::Index>(m.size()), 40);
  data.setRandom();
  std::stringstream ss;
  write_recording_csv(ss, Recording(data, 1000.0, labels, roles));
  const Recording r = read_recording_csv(ss);
  CHECK(r.indices_with_role(ChannelRole::measurement).size() == 28);
  CHECK(r.indices_with_role(ChannelRole::eog).size() == 3);
  CHECK(r.indices_with_role(ChannelRole::reference).size() == 1);
  CHECK_THROWS_AS(import_external_recording("/nonexistent/file.csv"), ParseError);
}

}  // TEST_SUITE
