#include "skosens/grid_path.hpp"

#include <cmath>
#include <string>

#include "skosens/error.hpp"

namespace skosens {

GridPath::GridPath(double t0, double dt, Eigen::Index rows, Eigen::Index cols,
                   std::size_t num_points)
    : t0_(t0), dt_(dt), rows_(rows), cols_(cols), num_points_(num_points),
      data_(num_points * static_cast<std::size_t>(rows * cols), 0.0) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw Error(ErrorCode::kInvalidArgument, "GridPath: dt must be positive and finite");
  }
  if (rows <= 0 || cols <= 0) {
    throw Error(ErrorCode::kShapeMismatch, "GridPath: rows and cols must be positive");
  }
}

GridPath GridPath::from_points(double t0, double dt, const std::vector<Eigen::MatrixXd>& points) {
  if (points.empty()) throw Error(ErrorCode::kInvalidArgument, "GridPath: no points");
  GridPath path(t0, dt, points.front().rows(), points.front().cols(), 0);
  path.reserve(points.size());
  for (const auto& p : points) path.push_back(p);
  return path;
}

void GridPath::push_back(const Eigen::Ref<const Eigen::MatrixXd>& point) {
  if (point.rows() != rows_ || point.cols() != cols_) {
    throw Error(ErrorCode::kShapeMismatch, "GridPath::push_back: shape mismatch");
  }
  for (Eigen::Index c = 0; c < cols_; ++c) {
    for (Eigen::Index r = 0; r < rows_; ++r) data_.push_back(point(r, c));
  }
  ++num_points_;
}

bool GridPath::same_grid(const GridPath& other) const {
  return num_points_ == other.num_points_ && t0_ == other.t0_ && dt_ == other.dt_;
}

void GridPath::validate() const {
  if (num_points_ < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "GridPath: need at least two grid points, got " + std::to_string(num_points_));
  }
  for (double v : data_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "GridPath: non-finite entry");
  }
}

}  // namespace skosens
