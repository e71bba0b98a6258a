#include "blinkica/recording.hpp"

#include "blinkica/errors.hpp"

#include <algorithm>
#include <unordered_set>

namespace blinkica {

std::string_view to_string(ChannelRole role) {
  switch (role) {
    case ChannelRole::measurement:
      return "measurement";
    case ChannelRole::eog:
      return "eog";
    case ChannelRole::reference:
      return "reference";
  }
  return "measurement";
}

ChannelRole parse_role(std::string_view text) {
  if (text == "measurement" || text == "eeg") return ChannelRole::measurement;
  if (text == "eog") return ChannelRole::eog;
  if (text == "reference" || text == "ref") return ChannelRole::reference;
  throw ParseError("unknown channel role '" + std::string(text) + "'");
}

Recording::Recording(SignalMatrix data_, double fs_, std::vector<std::string> labels_,
                     std::vector<ChannelRole> roles_)
    : data(std::move(data_)), fs(fs_), labels(std::move(labels_)), roles(std::move(roles_)) {
  validate();
}

std::span<const double> Recording::channel(std::size_t row) const {
  return {data.row(static_cast<Eigen::Index>(row)).data(), n_samples()};
}

std::span<double> Recording::channel(std::size_t row) {
  return {data.row(static_cast<Eigen::Index>(row)).data(), n_samples()};
}

std::optional<std::size_t> Recording::find(std::string_view label) const {
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels.begin());
}

std::size_t Recording::index_of(std::string_view label) const {
  if (auto idx = find(label)) return *idx;
  throw ShapeError("recording has no channel labelled '" + std::string(label) + "'");
}

std::vector<std::size_t> Recording::indices_with_role(ChannelRole role) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < roles.size(); ++i)
    if (roles[i] == role) out.push_back(i);
  return out;
}

void Recording::validate() const {
  if (!(fs > 0.0)) throw RangeError("sampling rate must be positive");
  if (labels.size() != n_channels())
    throw ShapeError("label count " + std::to_string(labels.size()) + " != channel count " +
                     std::to_string(n_channels()));
  if (roles.size() != n_channels())
    throw ShapeError("role count " + std::to_string(roles.size()) + " != channel count " +
                     std::to_string(n_channels()));
  if (n_channels() > 0 && n_samples() == 0) throw ShapeError("recording has no samples");
  std::unordered_set<std::string_view> seen;
  for (const auto& l : labels)
    if (!seen.insert(l).second) throw ShapeError("duplicate channel label '" + l + "'");
}

Recording select_channels(const Recording& rec, std::span<const std::size_t> rows) {
  SignalMatrix out(static_cast<Eigen::Index>(rows.size()), rec.data.cols());
  std::vector<std::string> labels;
  std::vector<ChannelRole> roles;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= rec.n_channels()) throw ShapeError("channel index out of range");
    out.row(static_cast<Eigen::Index>(i)) = rec.data.row(static_cast<Eigen::Index>(rows[i]));
    labels.push_back(rec.labels[rows[i]]);
    roles.push_back(rec.roles[rows[i]]);
  }
  return Recording(std::move(out), rec.fs, std::move(labels), std::move(roles));
}

Recording slice_samples(const Recording& rec, std::size_t start, std::size_t length) {
  if (length == 0 || start + length > rec.n_samples())
    throw ShapeError("sample window [" + std::to_string(start) + ", " +
                     std::to_string(start + length) + ") exceeds recording length " +
                     std::to_string(rec.n_samples()));
  SignalMatrix out = rec.data.middleCols(static_cast<Eigen::Index>(start),
                                         static_cast<Eigen::Index>(length));
  return Recording(std::move(out), rec.fs, rec.labels, rec.roles);
}

SignalMatrix measurement_data(const Recording& rec) {
  const auto rows = rec.indices_with_role(ChannelRole::measurement);
  SignalMatrix out(static_cast<Eigen::Index>(rows.size()), rec.data.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = rec.data.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

std::vector<std::string> measurement_labels(const Recording& rec) {
  std::vector<std::string> out;
  for (auto i : rec.indices_with_role(ChannelRole::measurement)) out.push_back(rec.labels[i]);
  return out;
}

}  // namespace blinkica
