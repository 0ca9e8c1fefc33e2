#pragma once

#include <filesystem>
#include <iosfwd>

#include "bohmchsh/wavefunction.hpp"

namespace bohmchsh {

/// Binary state file, little-endian:
///   8 bytes   magic "BCHSHWF1"
///   uint64    n_x, n_y
///   float64   x_min, y_min, dx, dy
///   float64   (re, im) pairs, row-major (x index slow), n_x * n_y of them
void write_state(std::ostream& out, const WaveFunction2D& psi);
WaveFunction2D read_state(std::istream& in);

void save_state(const std::filesystem::path& path, const WaveFunction2D& psi);
WaveFunction2D load_state(const std::filesystem::path& path);

/// Columns x, y, density (|psi|^2), one row per grid point.
void write_density_csv(std::ostream& out, const WaveFunction2D& psi);

}  // namespace bohmchsh
