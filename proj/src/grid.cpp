#include "vpme/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vpme {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::GridMismatch: return "grid-mismatch";
    case ErrorCode::InvalidField: return "invalid-field";
    case ErrorCode::InvalidParameter: return "invalid-parameter";
    case ErrorCode::ConvergenceFailure: return "convergence-failure";
    case ErrorCode::InvalidNormalization: return "invalid-normalization";
    case ErrorCode::GuardViolation: return "guard-violation";
    case ErrorCode::InvalidSpec: return "invalid-spec";
    case ErrorCode::Truncation: return "truncation";
    case ErrorCode::StaleState: return "stale-state";
    case ErrorCode::IdMismatch: return "id-mismatch";
    case ErrorCode::SizeMismatch: return "size-mismatch";
    case ErrorCode::CapExceeded: return "cap-exceeded";
    case ErrorCode::EmptyHistory: return "empty-history";
    case ErrorCode::Unsynchronized: return "unsynchronized";
    case ErrorCode::Cfl: return "cfl";
    case ErrorCode::Io: return "io";
    case ErrorCode::Parse: return "parse";
  }
  return "unknown";
}

GridSpec::GridSpec(double half_width, int cells_per_axis)
    : half_width_(half_width), cells_(cells_per_axis) {
  require(std::isfinite(half_width) && half_width > 0.0, ErrorCode::InvalidParameter,
          "grid half-width must be positive");
  require(cells_per_axis >= 8 && cells_per_axis % 2 == 0, ErrorCode::InvalidParameter,
          "cells per axis must be an even integer >= 8, got " + std::to_string(cells_per_axis));
}

std::array<double, 3> GridSpec::position(std::size_t idx) const noexcept {
  const auto n = static_cast<std::size_t>(cells_);
  const int i = static_cast<int>(idx % n);
  const int j = static_cast<int>((idx / n) % n);
  const int k = static_cast<int>(idx / (n * n));
  return {center(i), center(j), center(k)};
}

void require_same_grid(const GridSpec& a, const GridSpec& b) {
  require(a == b, ErrorCode::GridMismatch,
          "fields live on different grids (n=" + std::to_string(a.cells()) + " vs " +
              std::to_string(b.cells()) + ")");
}

ScalarField::ScalarField(const GridSpec& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  require(values_.size() == grid_.size(), ErrorCode::SizeMismatch,
          "value count does not match grid");
}

double ScalarField::integral() const noexcept {
  double s = 0.0;
  for (double v : values_) s += v;
  return s * grid_.cell_volume();
}

double ScalarField::max_value() const noexcept {
  return *std::max_element(values_.begin(), values_.end());
}

double ScalarField::min_value() const noexcept {
  return *std::min_element(values_.begin(), values_.end());
}

bool ScalarField::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

ScalarField& ScalarField::operator+=(const ScalarField& other) {
  require_same_grid(grid_, other.grid_);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& other) {
  require_same_grid(grid_, other.grid_);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

ScalarField& ScalarField::operator*=(double s) noexcept {
  for (double& v : values_) v *= s;
  return *this;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }

VectorField::VectorField(const GridSpec& grid) : grid_(grid) {
  for (auto& c : components_) c.assign(grid.size(), 0.0);
}

double VectorField::magnitude(std::size_t i) const noexcept {
  const double x = components_[0][i], y = components_[1][i], z = components_[2][i];
  return std::sqrt(x * x + y * y + z * z);
}

ScalarField VectorField::magnitude() const {
  ScalarField out(grid_);
  for (std::size_t i = 0; i < size(); ++i) out[i] = magnitude(i);
  return out;
}

bool VectorField::all_finite() const noexcept {
  for (const auto& c : components_)
    for (double v : c)
      if (!std::isfinite(v)) return false;
  return true;
}

VectorField& VectorField::operator+=(const VectorField& other) {
  require_same_grid(grid_, other.grid_);
  for (int a = 0; a < 3; ++a)
    for (std::size_t i = 0; i < size(); ++i) components_[a][i] += other.components_[a][i];
  return *this;
}

VectorField& VectorField::operator-=(const VectorField& other) {
  require_same_grid(grid_, other.grid_);
  for (int a = 0; a < 3; ++a)
    for (std::size_t i = 0; i < size(); ++i) components_[a][i] -= other.components_[a][i];
  return *this;
}

void require_finite(const ScalarField& f, const char* name) {
  require(f.all_finite(), ErrorCode::InvalidField, std::string(name) + " contains non-finite values");
}

}  // namespace vpme
