#pragma once

#include <filesystem>
#include <string_view>

#include "vpme/grid.hpp"

namespace vpme {

/// Binary record: "VPMEF1", int32 n, float64 L, then n^3 float64 samples,
/// x-fastest, all little-endian.
inline constexpr std::string_view kFieldMagic = "VPMEF1";

void write_scalar_field(const std::filesystem::path& path, const ScalarField& field);
ScalarField read_scalar_field(const std::filesystem::path& path);

/// CSV with header x,y,z,value; one row per cell.
void write_scalar_csv(const std::filesystem::path& path, const ScalarField& field);

}  // namespace vpme
