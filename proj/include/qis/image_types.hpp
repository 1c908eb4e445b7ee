#pragma once

#include <cstdint>
#include <vector>

namespace qis {

/// Real-valued raster shared by denoising and flux I/O.
struct RealImage {
    int width = 0;
    int height = 0;
    std::vector<double> values; ///< row-major

    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// 8-bit display raster (PGM payload).
struct DisplayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels; ///< row-major

    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

} // namespace qis
