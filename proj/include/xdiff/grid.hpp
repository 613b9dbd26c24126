#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Core>

#include "xdiff/errors.hpp"

namespace xdiff {

/// Cell-centered values (n entries).
template <typename Scalar>
using Field = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Face-centered values (n + 1 entries); entry j sits at x = j h.
template <typename Scalar>
using FaceField = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Uniform cell-centered partition of (0, 1).
template <typename Scalar = double>
class Grid {
 public:
  explicit Grid(std::size_t n_cells) : n_(n_cells) {
    if (n_cells < 2) {
      throw ConfigError("grid needs at least 2 cells, got " + std::to_string(n_cells));
    }
    h_ = Scalar(1) / static_cast<Scalar>(n_);
  }

  std::size_t n_cells() const noexcept { return n_; }
  Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(n_); }
  Scalar h() const noexcept { return h_; }

  Scalar center(Eigen::Index i) const { return (static_cast<Scalar>(i) + Scalar(0.5)) * h_; }
  Scalar face(Eigen::Index j) const {
    // exact endpoints regardless of rounding in h
    return j == size() ? Scalar(1) : static_cast<Scalar>(j) * h_;
  }

  Field<Scalar> centers() const {
    Field<Scalar> x(size());
    for (Eigen::Index i = 0; i < size(); ++i) x[i] = center(i);
    return x;
  }

  FaceField<Scalar> faces() const {
    FaceField<Scalar> x(size() + 1);
    for (Eigen::Index j = 0; j <= size(); ++j) x[j] = face(j);
    return x;
  }

  bool operator==(const Grid& other) const noexcept { return n_ == other.n_; }

 private:
  std::size_t n_;
  Scalar h_;
};

template <typename Scalar>
Grid<Scalar> build_grid(std::size_t n_cells) {
  return Grid<Scalar>(n_cells);
}

namespace detail {

template <typename Derived, typename Scalar>
void require_cells(const Eigen::MatrixBase<Derived>& f, const Grid<Scalar>& grid, const char* what) {
  if (f.size() != grid.size()) {
    throw ContractViolation(std::string(what) + ": cell field has " + std::to_string(f.size()) +
                            " entries, grid has " + std::to_string(grid.size()));
  }
}

template <typename Derived, typename Scalar>
void require_faces(const Eigen::MatrixBase<Derived>& f, const Grid<Scalar>& grid, const char* what) {
  if (f.size() != grid.size() + 1) {
    throw ContractViolation(std::string(what) + ": face field has " + std::to_string(f.size()) +
                            " entries, grid needs " + std::to_string(grid.size() + 1));
  }
}

}  // namespace detail

/// Midpoint rule h * sum(f_i), summed left to right so that partial sums are reproducible.
template <typename Derived, typename Scalar>
Scalar integrate(const Eigen::MatrixBase<Derived>& f, const Grid<Scalar>& grid) {
  detail::require_cells(f, grid, "integrate");
  Scalar acc = Scalar(0);
  for (Eigen::Index i = 0; i < f.size(); ++i) acc += f[i];
  return grid.h() * acc;
}

/// Trapezoid rule over face values; endpoints carry half weight.
template <typename Derived, typename Scalar>
Scalar integrate_faces(const Eigen::MatrixBase<Derived>& f, const Grid<Scalar>& grid) {
  detail::require_faces(f, grid, "integrate_faces");
  const Eigen::Index n = grid.size();
  return grid.h() * (f.segment(1, n - 1).sum() + Scalar(0.5) * (f[0] + f[n]));
}

/// Interior faces carry (f_{i+1} - f_i) / h; the two boundary faces are 0 (no-flux).
template <typename Derived, typename Scalar>
FaceField<Scalar> face_gradient(const Eigen::MatrixBase<Derived>& f, const Grid<Scalar>& grid) {
  detail::require_cells(f, grid, "face_gradient");
  const Eigen::Index n = grid.size();
  FaceField<Scalar> g = FaceField<Scalar>::Zero(n + 1);
  g.segment(1, n - 1) = (f.tail(n - 1) - f.head(n - 1)) / grid.h();
  return g;
}

/// (F_{i+1/2} - F_{i-1/2}) / h for each cell.
template <typename Derived, typename Scalar>
Field<Scalar> face_divergence(const Eigen::MatrixBase<Derived>& flux, const Grid<Scalar>& grid) {
  detail::require_faces(flux, grid, "face_divergence");
  const Eigen::Index n = grid.size();
  return (flux.tail(n) - flux.head(n)) / grid.h();
}

/// Arithmetic average of neighbouring cells onto interior faces; boundary faces take the adjacent cell.
template <typename Derived, typename Scalar>
FaceField<Scalar> face_average(const Eigen::MatrixBase<Derived>& f, const Grid<Scalar>& grid) {
  detail::require_cells(f, grid, "face_average");
  const Eigen::Index n = grid.size();
  FaceField<Scalar> a(n + 1);
  a[0] = f[0];
  a[n] = f[n - 1];
  a.segment(1, n - 1) = Scalar(0.5) * (f.tail(n - 1) + f.head(n - 1));
  return a;
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& f) {
  return f.allFinite();
}

}  // namespace xdiff
