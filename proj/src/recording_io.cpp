#include "blinkica/errors.hpp"
#include "blinkica/synth.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace blinkica {

namespace {

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ',';
    out += parts[i];
  }
  return out;
}

}  // namespace

void write_recording_csv(std::ostream& out, const Recording& rec) {
  std::vector<std::string> roles;
  for (auto r : rec.roles) roles.emplace_back(to_string(r));
  char buf[64];
  auto fmt = [&](double v) {
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
  };
  out << "# fs=" << fmt(rec.fs) << '\n';
  out << "# labels=" << join(rec.labels) << '\n';
  out << "# roles=" << join(roles) << '\n';
  std::string line;
  for (Eigen::Index t = 0; t < rec.data.cols(); ++t) {
    line.clear();
    for (Eigen::Index c = 0; c < rec.data.rows(); ++c) {
      if (c) line += ',';
      line += fmt(rec.data(c, t));
    }
    line += '\n';
    out << line;
  }
}

void write_recording_csv(const std::filesystem::path& path, const Recording& rec) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_recording_csv(out, rec);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Recording read_recording_csv(std::istream& in) {
  std::map<std::string, std::string> header;
  std::vector<std::vector<double>> rows;
  std::string line;
  long lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = trim(line);
    if (sv.empty()) continue;
    if (sv.front() == '#') {
      if (!rows.empty()) throw ParseError("header line after data rows", lineno);
      sv.remove_prefix(1);
      sv = trim(sv);
      const auto eq = sv.find('=');
      if (eq == std::string_view::npos) throw ParseError("header line without '='", lineno);
      header[std::string(trim(sv.substr(0, eq)))] = std::string(trim(sv.substr(eq + 1)));
      continue;
    }
    if (rows.empty()) {
      for (const char* key : {"fs", "labels", "roles"})
        if (!header.count(key)) throw ParseError("missing header field '" + std::string(key) + "'");
      width = split(header["labels"], ',').size();
    }
    const auto cells = split(sv, ',');
    if (cells.size() != width)
      throw ParseError("ragged row: " + std::to_string(cells.size()) + " cells, expected " +
                           std::to_string(width),
                       lineno);
    std::vector<double> row(width);
    for (std::size_t c = 0; c < width; ++c) {
      const std::string_view cell = trim(cells[c]);
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), row[c]);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        throw ParseError("non-numeric cell '" + std::string(cell) + "' in column " +
                             std::to_string(c + 1),
                         lineno);
    }
    rows.push_back(std::move(row));
  }
  for (const char* key : {"fs", "labels", "roles"})
    if (!header.count(key)) throw ParseError("missing header field '" + std::string(key) + "'");
  if (rows.empty()) throw ParseError("no data rows");

  double fs = 0.0;
  const std::string& fs_text = header["fs"];
  const auto res = std::from_chars(fs_text.data(), fs_text.data() + fs_text.size(), fs);
  if (res.ec != std::errc() || res.ptr != fs_text.data() + fs_text.size() || !(fs > 0.0))
    throw ParseError("header field 'fs' is not a positive number: '" + fs_text + "'");

  auto labels = split(header["labels"], ',');
  for (auto& l : labels) l = std::string(trim(l));
  std::vector<ChannelRole> roles;
  for (const auto& r : split(header["roles"], ',')) {
    try {
      roles.push_back(parse_role(trim(r)));
    } catch (const ParseError& e) {
      throw ParseError(std::string("header field 'roles': ") + e.what());
    }
  }
  if (roles.size() != labels.size())
    throw ParseError("header field 'roles' has " + std::to_string(roles.size()) +
                     " entries for " + std::to_string(labels.size()) + " labels");

  SignalMatrix data(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t c = 0; c < labels.size(); ++c)
      data(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) = rows[t][c];
  try {
    return Recording(std::move(data), fs, std::move(labels), std::move(roles));
  } catch (const std::exception& e) {
    throw ParseError(e.what());
  }
}

Recording import_external_recording(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  return read_recording_csv(in);
}

}  // namespace blinkica
