#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace trafficast {

/// Binary R x R image with exactly one white (255) pixel per column.
///
/// Row 1 is the bottom of the image (lowest value); column i holds its
/// white pixel at row p_i = max(1, ceil(R * x_i)).
class RasterImage {
public:
    /// Builds an image from a full pixel grid indexed [row - 1][col],
    /// row-major, bottom row first. Throws DataError unless every column
    /// has exactly one 255 pixel and all others are 0.
    static RasterImage from_pixels(std::size_t resolution, std::vector<std::uint8_t> pixels);
    /// Builds an image from 1-based column positions.
    static RasterImage from_positions(std::size_t resolution, std::vector<std::uint16_t> positions);

    [[nodiscard]] std::size_t resolution() const { return resolution_; }
    /// 1-based row index of the white pixel in each column.
    [[nodiscard]] std::span<const std::uint16_t> positions() const { return positions_; }
    /// Pixel at 1-based row (from the bottom) and 0-based column.
    [[nodiscard]] std::uint8_t pixel(std::size_t row, std::size_t col) const {
        return positions_[col] == row ? 255 : 0;
    }
    /// Full grid, bottom row first.
    [[nodiscard]] std::vector<std::uint8_t> pixels() const;
    /// Vertical mirror (row p becomes R + 1 - p).
    [[nodiscard]] RasterImage flipped() const;

    friend bool operator==(const RasterImage&, const RasterImage&) = default;

private:
    std::size_t resolution_ = 0;
    std::vector<std::uint16_t> positions_;
};

/// Linear-interpolation resampling onto `length` evenly spaced points with
/// both endpoints kept. Identity when the lengths already match.
[[nodiscard]] std::vector<double> resample_linear(std::span<const double> x, std::size_t length);

/// Rasterizes a series with values in [0, 1]; resamples to R columns first
/// when needed. Throws ConfigError on values outside [0, 1].
[[nodiscard]] RasterImage rasterize(std::span<const double> normalized, std::size_t resolution);

/// Quantized reconstruction (p_i - 0.5) / R. Throws DataError when the
/// pixel grid breaks the one-white-pixel-per-column rule.
[[nodiscard]] std::vector<double> derasterize(const RasterImage& image);

/// Binary PGM (P5, maxval 255), top row = highest value.
void write_pgm(const RasterImage& image, const std::filesystem::path& path);
[[nodiscard]] RasterImage read_pgm(const std::filesystem::path& path);

/// Image as a 0/1 float plane in row-major order, top row first, which is
/// the layout the embedder consumes.
void to_plane(const RasterImage& image, std::span<double> out);

}  // namespace trafficast
