#pragma once

#include "pnpr/grid.hpp"

#include <filesystem>
#include <stdexcept>

namespace pnpr {

class ImageIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Binary 8-bit PGM (P5). Only maxval 255 is accepted.
RealGrid read_pgm(const std::filesystem::path& path);
/// Values are rounded and clamped to [0, 255].
void write_pgm(const RealGrid& image, const std::filesystem::path& path);

/// Raw float format: "PRF1", u32 width, u32 height, u32 channels, then
/// width*height*channels little-endian f32 samples, channel-major (each
/// channel is a full row-major plane). Planes map to channels.
RealGrid read_prf(const std::filesystem::path& path);
void write_prf(const RealGrid& grid, const std::filesystem::path& path);

/// Dispatches on the file's magic bytes (P5 or PRF1).
RealGrid read_image(const std::filesystem::path& path);

/// Centred size x size window; throws if the image is smaller.
RealGrid center_crop(const RealGrid& image, std::size_t size);

} // namespace pnpr
