#include "vpme/field_io.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <vector>

namespace vpme {

static_assert(std::endian::native == std::endian::little, "binary formats assume little-endian hosts");

void write_scalar_field(const std::filesystem::path& path, const ScalarField& field) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  const std::int32_t n = field.grid().cells();
  const double L = field.grid().half_width();
  out.write(kFieldMagic.data(), static_cast<std::streamsize>(kFieldMagic.size()));
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(&L), sizeof L);
  out.write(reinterpret_cast<const char*>(field.values().data()),
            static_cast<std::streamsize>(field.size() * sizeof(double)));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

ScalarField read_scalar_field(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  char magic[6];
  in.read(magic, sizeof magic);
  if (!in || std::string_view(magic, sizeof magic) != kFieldMagic)
    throw Error(ErrorCode::Parse, path.string() + " is not a VPMEF1 field file");
  std::int32_t n = 0;
  double L = 0.0;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  in.read(reinterpret_cast<char*>(&L), sizeof L);
  if (!in) throw Error(ErrorCode::Parse, path.string() + ": truncated header");
  GridSpec grid(L, n);
  std::vector<double> values(grid.size());
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!in) throw Error(ErrorCode::Parse, path.string() + ": truncated sample block");
  return ScalarField(grid, std::move(values));
}

void write_scalar_csv(const std::filesystem::path& path, const ScalarField& field) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  const GridSpec& g = field.grid();
  out << "x,y,z,value\n" << std::setprecision(17);
  for (std::size_t i = 0; i < field.size(); ++i) {
    const auto p = g.position(i);
    out << p[0] << ',' << p[1] << ',' << p[2] << ',' << field[i] << '\n';
  }
}

}  // namespace vpme
