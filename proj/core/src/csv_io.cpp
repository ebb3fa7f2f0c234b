#include "skosens/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "skosens/error.hpp"

namespace skosens {
namespace {

void put(std::ostream& out, double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.write(buf, n);
}

std::ofstream open_out(const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + file.string());
  return out;
}

void finish(std::ostream& out, const std::filesystem::path& file) {
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + file.string());
}

}  // namespace

void write_path_csv(std::ostream& out, const GridPath& path, const std::string& comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
  const Eigen::Index n = path.rows() * path.cols();
  out << 't';
  for (Eigen::Index c = 1; c <= n; ++c) out << ",component_" << c;
  out << '\n';
  for (std::size_t k = 0; k < path.size(); ++k) {
    put(out, path.time(k));
    const auto v = path.vec(k);
    for (Eigen::Index c = 0; c < n; ++c) {
      out << ',';
      put(out, v(c));
    }
    out << '\n';
  }
}

void write_path_csv(const std::filesystem::path& file, const GridPath& path,
                    const std::string& comment) {
  auto out = open_out(file);
  write_path_csv(out, path, comment);
  finish(out, file);
}

GridPath read_path_csv(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
  std::string line;
  bool header = false;
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> points;
  Eigen::Index width = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line.rfind("t,", 0) != 0 && line != "t") {
        throw Error(ErrorCode::kIoError, "csv: expected header starting with 't'");
      }
      width = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ','));
      if (rows == 0) rows = width / cols;
      if (rows * cols != width) throw Error(ErrorCode::kShapeMismatch, "csv: column count does not fit shape");
      header = true;
      continue;
    }
    std::vector<double> values;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p <= end) {
      const char* comma = std::find(p, end, ',');
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(p, comma, v);
      if (ec != std::errc() || ptr != comma) throw Error(ErrorCode::kIoError, "csv: bad number in '" + line + "'");
      values.push_back(v);
      p = comma + 1;
    }
    if (static_cast<Eigen::Index>(values.size()) != width + 1) {
      throw Error(ErrorCode::kIoError, "csv: ragged row");
    }
    times.push_back(values[0]);
    points.push_back(Eigen::Map<Eigen::MatrixXd>(values.data() + 1, rows, cols));
  }
  if (!header) throw Error(ErrorCode::kIoError, "csv: missing header");
  if (times.size() < 2) throw Error(ErrorCode::kIoError, "csv: need at least two rows");
  return GridPath::from_points(times[0], times[1] - times[0], points);
}

GridPath read_path_csv(const std::filesystem::path& file, Eigen::Index rows, Eigen::Index cols) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + file.string());
  return read_path_csv(in, rows, cols);
}

void write_jumps_csv(std::ostream& out, const std::vector<JumpEvent>& jumps, int dim,
                     const std::string& comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
  const int n = dim * dim;
  out << "k,t,I";
  for (int c = 1; c <= n; ++c) out << ",delta_a_" << c;
  for (int c = 1; c <= n; ++c) out << ",a_before_" << c;
  out << '\n';
  for (const auto& j : jumps) {
    out << j.k << ',';
    put(out, j.time);
    out << ',';
    out << j.I.bits();
    for (int c = 0; c < n; ++c) {
      out << ',';
      put(out, j.delta_a.data()[c]);
    }
    for (int c = 0; c < n; ++c) {
      out << ',';
      put(out, j.a_before.data()[c]);
    }
    out << '\n';
  }
}

void write_jumps_csv(const std::filesystem::path& file, const std::vector<JumpEvent>& jumps,
                     int dim, const std::string& comment) {
  auto out = open_out(file);
  write_jumps_csv(out, jumps, dim, comment);
  finish(out, file);
}

}  // namespace skosens
