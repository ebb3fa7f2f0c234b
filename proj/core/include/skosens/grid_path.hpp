#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace skosens {

/// Vector- or matrix-valued function sampled on the uniform grid t0 + k*dt.
///
/// Points are stored contiguously, each in column-major order, and exposed as
/// Eigen maps. A vector path has cols() == 1.
class GridPath {
 public:
  GridPath() = default;
  /// Zero-filled path with `num_points` grid points.
  GridPath(double t0, double dt, Eigen::Index rows, Eigen::Index cols, std::size_t num_points);

  static GridPath from_points(double t0, double dt, const std::vector<Eigen::MatrixXd>& points);
  /// Samples `f(t)` at t0 + k*dt for k = 0..num_steps.
  template <typename F>
  static GridPath sample(double t0, double dt, std::size_t num_steps, Eigen::Index rows,
                         Eigen::Index cols, F&& f) {
    GridPath path(t0, dt, rows, cols, num_steps + 1);
    for (std::size_t k = 0; k <= num_steps; ++k) path.at(k) = f(path.time(k));
    return path;
  }

  double t0() const { return t0_; }
  double dt() const { return dt_; }
  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  bool is_vector() const { return cols_ == 1; }
  std::size_t size() const { return num_points_; }
  /// Number of grid steps K (size() - 1).
  std::size_t steps() const { return num_points_ == 0 ? 0 : num_points_ - 1; }
  double time(std::size_t k) const { return t0_ + static_cast<double>(k) * dt_; }

  Eigen::Map<const Eigen::MatrixXd> at(std::size_t k) const {
    return {data_.data() + k * stride(), rows_, cols_};
  }
  Eigen::Map<Eigen::MatrixXd> at(std::size_t k) {
    return {data_.data() + k * stride(), rows_, cols_};
  }
  Eigen::Map<const Eigen::VectorXd> vec(std::size_t k) const {
    return {data_.data() + k * stride(), rows_ * cols_};
  }
  Eigen::Map<Eigen::VectorXd> vec(std::size_t k) {
    return {data_.data() + k * stride(), rows_ * cols_};
  }

  /// Appends one grid point; the shape must match.
  void push_back(const Eigen::Ref<const Eigen::MatrixXd>& point);
  void reserve(std::size_t num_points) { data_.reserve(num_points * stride()); }

  std::span<const double> data() const { return data_; }

  bool same_grid(const GridPath& other) const;
  bool same_shape(const GridPath& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  /// Throws ShapeMismatch / InvalidArgument when the GridPath invariants
  /// (dt > 0, at least two points, finite entries) do not hold.
  void validate() const;

 private:
  std::size_t stride() const { return static_cast<std::size_t>(rows_ * cols_); }

  double t0_ = 0.0;
  double dt_ = 1.0;
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  std::size_t num_points_ = 0;
  std::vector<double> data_;
};

}  // namespace skosens
