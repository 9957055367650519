#include "trafficast/raster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "trafficast/error.hpp"

namespace trafficast {

RasterImage RasterImage::from_positions(std::size_t resolution, std::vector<std::uint16_t> positions) {
    if (resolution == 0 || resolution > 65535 || positions.size() != resolution) {
        throw DataError("raster needs one position per column");
    }
    for (const auto p : positions) {
        if (p < 1 || p > resolution) {
            throw DataError("raster position " + std::to_string(p) + " outside 1.." + std::to_string(resolution));
        }
    }
    RasterImage img;
    img.resolution_ = resolution;
    img.positions_ = std::move(positions);
    return img;
}

RasterImage RasterImage::from_pixels(std::size_t resolution, std::vector<std::uint8_t> pixels) {
    if (resolution == 0 || pixels.size() != resolution * resolution) {
        throw DataError("pixel grid must be resolution x resolution");
    }
    std::vector<std::uint16_t> positions(resolution, 0);
    for (std::size_t row = 0; row < resolution; ++row) {
        for (std::size_t col = 0; col < resolution; ++col) {
            const std::uint8_t v = pixels[row * resolution + col];
            if (v == 0) {
                continue;
            }
            if (v != 255) {
                throw DataError("pixel value " + std::to_string(v) + " is neither 0 nor 255");
            }
            if (positions[col] != 0) {
                throw DataError("column " + std::to_string(col) + " has more than one white pixel");
            }
            positions[col] = static_cast<std::uint16_t>(row + 1);
        }
    }
    for (std::size_t col = 0; col < resolution; ++col) {
        if (positions[col] == 0) {
            throw DataError("column " + std::to_string(col) + " has no white pixel");
        }
    }
    return from_positions(resolution, std::move(positions));
}

std::vector<std::uint8_t> RasterImage::pixels() const {
    std::vector<std::uint8_t> grid(resolution_ * resolution_, 0);
    for (std::size_t col = 0; col < resolution_; ++col) {
        grid[(positions_[col] - 1) * resolution_ + col] = 255;
    }
    return grid;
}

RasterImage RasterImage::flipped() const {
    RasterImage img = *this;
    for (auto& p : img.positions_) {
        p = static_cast<std::uint16_t>(resolution_ + 1 - p);
    }
    return img;
}

std::vector<double> resample_linear(std::span<const double> x, std::size_t length) {
    if (x.empty() || length == 0) {
        throw ConfigError("resampling needs non-empty input and output");
    }
    if (x.size() == length) {
        return {x.begin(), x.end()};
    }
    std::vector<double> out(length);
    if (x.size() == 1 || length == 1) {
        std::fill(out.begin(), out.end(), x.front());
        return out;
    }
    const double scale = static_cast<double>(x.size() - 1) / static_cast<double>(length - 1);
    for (std::size_t i = 0; i < length; ++i) {
        const double u = static_cast<double>(i) * scale;
        const auto lo = std::min(static_cast<std::size_t>(u), x.size() - 2);
        const double frac = u - static_cast<double>(lo);
        out[i] = x[lo] + (x[lo + 1] - x[lo]) * frac;
    }
    return out;
}

RasterImage rasterize(std::span<const double> normalized, std::size_t resolution) {
    if (resolution == 0 || resolution > 65535) {
        throw ConfigError("raster resolution must be in 1..65535");
    }
    if (normalized.empty()) {
        throw ConfigError("cannot rasterize an empty series");
    }
    for (const double v : normalized) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw ConfigError("raster input " + std::to_string(v) + " outside [0, 1]");
        }
    }
    const auto columns = resample_linear(normalized, resolution);
    const double r = static_cast<double>(resolution);
    std::vector<std::uint16_t> positions(resolution);
    for (std::size_t i = 0; i < resolution; ++i) {
        const double p = std::ceil(r * columns[i]);
        positions[i] = static_cast<std::uint16_t>(std::clamp(p, 1.0, r));
    }
    return RasterImage::from_positions(resolution, std::move(positions));
}

std::vector<double> derasterize(const RasterImage& image) {
    const double r = static_cast<double>(image.resolution());
    std::vector<double> out;
    out.reserve(image.resolution());
    for (const auto p : image.positions()) {
        out.push_back((static_cast<double>(p) - 0.5) / r);
    }
    return out;
}

void write_pgm(const RasterImage& image, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
    const std::size_t r = image.resolution();
    out << "P5\n" << r << ' ' << r << "\n255\n";
    std::vector<char> row(r);
    for (std::size_t top = 0; top < r; ++top) {
        const std::size_t level = r - top;
        for (std::size_t col = 0; col < r; ++col) {
            row[col] = static_cast<char>(image.pixel(level, col));
        }
        out.write(row.data(), static_cast<std::streamsize>(r));
    }
    if (!out) {
        throw Error("write to '" + path.string() + "' failed");
    }
}

RasterImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open '" + path.string() + "'");
    }
    std::string magic;
    std::size_t w = 0;
    std::size_t h = 0;
    int maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P5" || w == 0 || w != h || maxval != 255) {
        throw DataError("'" + path.string() + "' is not a square 8-bit P5 image");
    }
    in.get();
    std::vector<std::uint8_t> top_first(w * h);
    in.read(reinterpret_cast<char*>(top_first.data()), static_cast<std::streamsize>(top_first.size()));
    if (in.gcount() != static_cast<std::streamsize>(top_first.size())) {
        throw DataError("'" + path.string() + "' is truncated");
    }
    std::vector<std::uint8_t> bottom_first(w * h);
    for (std::size_t top = 0; top < h; ++top) {
        std::copy_n(top_first.begin() + static_cast<std::ptrdiff_t>(top * w), w,
                    bottom_first.begin() + static_cast<std::ptrdiff_t>((h - 1 - top) * w));
    }
    return RasterImage::from_pixels(w, std::move(bottom_first));
}

void to_plane(const RasterImage& image, std::span<double> out) {
    const std::size_t r = image.resolution();
    if (out.size() != r * r) {
        throw ConfigError("plane buffer does not match raster resolution");
    }
    std::fill(out.begin(), out.end(), 0.0);
    const auto positions = image.positions();
    for (std::size_t col = 0; col < r; ++col) {
        out[(r - positions[col]) * r + col] = 1.0;
    }
}

}  // namespace trafficast
