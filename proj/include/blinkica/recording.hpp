#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace blinkica {

// Channels are rows, time samples are columns. Row-major so that each
// channel is contiguous and can be handed out as a span.
using SignalMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class ChannelRole { measurement, eog, reference };

std::string_view to_string(ChannelRole role);
ChannelRole parse_role(std::string_view text);

// Multichannel voltage record in microvolts.
struct Recording {
  SignalMatrix data;
  double fs = 0.0;
  std::vector<std::string> labels;
  std::vector<ChannelRole> roles;

  Recording() = default;
  Recording(SignalMatrix data, double fs, std::vector<std::string> labels,
            std::vector<ChannelRole> roles);

  std::size_t n_channels() const { return static_cast<std::size_t>(data.rows()); }
  std::size_t n_samples() const { return static_cast<std::size_t>(data.cols()); }
  double duration() const { return static_cast<double>(n_samples()) / fs; }

  std::span<const double> channel(std::size_t row) const;
  std::span<double> channel(std::size_t row);

  std::optional<std::size_t> find(std::string_view label) const;
  std::size_t index_of(std::string_view label) const;  // throws ShapeError when absent
  std::vector<std::size_t> indices_with_role(ChannelRole role) const;

  // Throws on any broken invariant (label/role counts, fs, duplicate names).
  void validate() const;
};

// New recording holding the given rows, in the given order.
Recording select_channels(const Recording& rec, std::span<const std::size_t> rows);

// New recording holding samples [start, start + length).
Recording slice_samples(const Recording& rec, std::size_t start, std::size_t length);

// Copy of the measurement-role rows as a dense matrix, plus their labels.
SignalMatrix measurement_data(const Recording& rec);
std::vector<std::string> measurement_labels(const Recording& rec);

}  // namespace blinkica
