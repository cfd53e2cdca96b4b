#pragma once

#include "ttb/tensor.hpp"

#include <string>

namespace ttb {

/// Binary PGM (P5) or PPM (P6), 8-bit. Returns (rows, cols) for PGM and
/// (rows, cols, 3) for PPM with values scaled to [0, 1].
DenseTensor read_image(const std::string& path);

/// Writes PGM for (rows, cols) and PPM for (rows, cols, 3); values are
/// clamped to [0, 1] and rounded to 8 bits.
void write_image(const std::string& path, const DenseTensor& img);

/// True when the path ends in .pgm or .ppm.
bool is_image_path(const std::string& path);

}  // namespace ttb
