#pragma once

#include <cstddef>
#include <span>

#include "bohmchsh/wavefunction.hpp"

namespace bohmchsh::detail {

enum class FftDirection { forward, backward };

/// Unnormalized in-place DFT along one axis of a row-major nx*ny array.
/// Axis::a transforms the columns (stride ny), Axis::b the contiguous rows.
void fft_axis(std::span<complex> data, std::size_t nx, std::size_t ny, Axis axis, FftDirection direction);

inline void fft_1d(std::span<complex> data, FftDirection direction) {
  fft_axis(data, 1, data.size(), Axis::b, direction);
}

}  // namespace bohmchsh::detail
