#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "fuse/grid.hpp"

namespace fuse {

// Grid CSV layout: per channel a "# channel <i>" header line followed by
// height rows of width comma-separated values. Doubles are printed with 17
// significant digits so a write/read round trip is bit exact.
void write_grid_csv(const Grid& g, std::ostream& out);
void write_grid_csv(const Grid& g, const std::filesystem::path& path);
Grid read_grid_csv(std::istream& in, const std::string& source_name = "<stream>");
Grid read_grid_csv(const std::filesystem::path& path);

// Binary 8-bit PGM (P5). Values are mapped affinely from [min,max] to
// [0,255]; the mapping is recorded in "<path>.txt". Multi-channel grids are
// reduced to their channel mean for the preview image.
void write_pgm(const Grid& g, const std::filesystem::path& path);
void write_pgm(const SalienceMap& m, const std::filesystem::path& path);
void write_pgm(const BlendMask& m, const std::filesystem::path& path);

// Masks are stored as single-channel grid CSVs whose entries are exactly 0 or 1.
BlendMask read_mask_csv(const std::filesystem::path& path);
void write_mask_csv(const BlendMask& m, const std::filesystem::path& path);

// 17-significant-digit representation that parses back to the same double.
std::string format_double(double v);

} // namespace fuse
