#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "vpme/error.hpp"

namespace vpme {

/// Uniform cell-centred grid on the cube [-L, L]^3.
class GridSpec {
 public:
  GridSpec(double half_width, int cells_per_axis);

  double half_width() const noexcept { return half_width_; }
  int cells() const noexcept { return cells_; }
  double spacing() const noexcept { return 2.0 * half_width_ / cells_; }
  double cell_volume() const noexcept {
    const double h = spacing();
    return h * h * h;
  }
  std::size_t size() const noexcept {
    return static_cast<std::size_t>(cells_) * cells_ * cells_;
  }

  /// Coordinate of the centre of cell i along any axis.
  double center(int i) const noexcept { return -half_width_ + (i + 0.5) * spacing(); }

  std::size_t index(int i, int j, int k) const noexcept {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(cells_) * (static_cast<std::size_t>(j) +
                                               static_cast<std::size_t>(cells_) * k);
  }

  std::array<double, 3> position(std::size_t idx) const noexcept;

  bool operator==(const GridSpec& other) const noexcept {
    return half_width_ == other.half_width_ && cells_ == other.cells_;
  }

 private:
  double half_width_;
  int cells_;
};

void require_same_grid(const GridSpec& a, const GridSpec& b);

class ScalarField {
 public:
  explicit ScalarField(const GridSpec& grid, double fill = 0.0)
      : grid_(grid), values_(grid.size(), fill) {}
  ScalarField(const GridSpec& grid, std::vector<double> values);

  const GridSpec& grid() const noexcept { return grid_; }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double& at(int i, int j, int k) noexcept { return values_[grid_.index(i, j, k)]; }
  double at(int i, int j, int k) const noexcept { return values_[grid_.index(i, j, k)]; }

  /// Midpoint-rule integral.
  double integral() const noexcept;
  double max_value() const noexcept;
  double min_value() const noexcept;
  bool all_finite() const noexcept;

  ScalarField& operator+=(const ScalarField& other);
  ScalarField& operator-=(const ScalarField& other);
  ScalarField& operator*=(double s) noexcept;

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);

class VectorField {
 public:
  explicit VectorField(const GridSpec& grid);

  const GridSpec& grid() const noexcept { return grid_; }
  std::span<double> component(int axis) noexcept { return components_[axis]; }
  std::span<const double> component(int axis) const noexcept { return components_[axis]; }
  std::size_t size() const noexcept { return components_[0].size(); }

  double magnitude(std::size_t i) const noexcept;
  ScalarField magnitude() const;
  bool all_finite() const noexcept;

  VectorField& operator+=(const VectorField& other);
  VectorField& operator-=(const VectorField& other);

 private:
  GridSpec grid_;
  std::array<std::vector<double>, 3> components_;
};

void require_finite(const ScalarField& f, const char* name);

}  // namespace vpme
