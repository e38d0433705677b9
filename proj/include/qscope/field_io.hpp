#pragma once

// Plain-text field dumps: a header line "nx ny hx hy" followed by nx*ny
// values in row-major order, one per line, printed with 17 significant
// digits so a dump reloads bit-exactly.

#include <filesystem>
#include <iosfwd>

#include "qscope/grid.hpp"

namespace qscope {

void write_field(std::ostream& out, const ScalarField& f);
void write_field(const std::filesystem::path& path, const ScalarField& f);

ScalarField read_field(std::istream& in);
ScalarField read_field(const std::filesystem::path& path);

// Mask stored as a 0/1 field dump.
void write_mask(const std::filesystem::path& path, const RegionMask& mask);

}  // namespace qscope
