#include "pnpr/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <vector>

namespace pnpr {

namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ImageIoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ImageIoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw ImageIoError("write failed for " + path.string());
}

class PgmHeader {
public:
    PgmHeader(const std::vector<std::uint8_t>& bytes, const std::string& name) : bytes_(bytes), name_(name) {}

    // Next whitespace-delimited decimal token, skipping '#' comments.
    unsigned long next_number()
    {
        for (;;) {
            if (pos_ >= bytes_.size())
                fail("truncated header");
            const auto c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n')
                    ++pos_;
            } else if (std::isspace(c)) {
                ++pos_;
            } else {
                break;
            }
        }
        unsigned long value = 0;
        std::size_t digits = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + (bytes_[pos_] - '0');
            if (++digits > 9)
                fail("header number too large");
            ++pos_;
        }
        if (digits == 0)
            fail("malformed header");
        return value;
    }

    // Exactly one whitespace byte separates maxval from the raster.
    std::size_t raster_offset()
    {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
            fail("malformed header");
        return pos_ + 1;
    }

    [[noreturn]] void fail(const std::string& what) const { throw ImageIoError(name_ + ": PGM " + what); }

    std::size_t pos_ = 2;

private:
    const std::vector<std::uint8_t>& bytes_;
    std::string name_;
};

std::uint32_t get_u32(const std::uint8_t* p)
{
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

} // namespace

RealGrid read_pgm(const std::filesystem::path& path)
{
    const auto bytes = slurp(path);
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
        throw ImageIoError(path.string() + ": not a binary PGM (P5)");
    PgmHeader header(bytes, path.string());
    const auto width = header.next_number();
    const auto height = header.next_number();
    const auto maxval = header.next_number();
    if (width == 0 || height == 0)
        header.fail("has zero width or height");
    if (maxval != 255)
        header.fail("max value " + std::to_string(maxval) + " unsupported (only 255)");
    const std::size_t offset = header.raster_offset();
    const std::size_t count = static_cast<std::size_t>(width) * height;
    if (bytes.size() - offset < count)
        header.fail("raster truncated");

    RealGrid img(height, width);
    for (std::size_t i = 0; i < count; ++i)
        img[i] = bytes[offset + i];
    return img;
}

void write_pgm(const RealGrid& image, const std::filesystem::path& path)
{
    if (image.planes() != 1)
        throw ImageIoError("write_pgm: single-plane image expected");
    const std::string head = "P5\n" + std::to_string(image.cols()) + " " + std::to_string(image.rows()) + "\n255\n";
    std::vector<std::uint8_t> bytes(head.begin(), head.end());
    bytes.reserve(head.size() + image.size());
    for (double v : image) {
        const double clamped = std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 255.0);
        bytes.push_back(static_cast<std::uint8_t>(std::lround(clamped)));
    }
    dump(path, bytes);
}

RealGrid read_prf(const std::filesystem::path& path)
{
    const auto bytes = slurp(path);
    if (bytes.size() < 16 || std::string(bytes.begin(), bytes.begin() + 4) != "PRF1")
        throw ImageIoError(path.string() + ": not a PRF1 file");
    const std::uint32_t width = get_u32(&bytes[4]);
    const std::uint32_t height = get_u32(&bytes[8]);
    const std::uint32_t channels = get_u32(&bytes[12]);
    if (width == 0 || height == 0 || channels == 0)
        throw ImageIoError(path.string() + ": PRF1 header has a zero dimension");
    const std::uint64_t count = static_cast<std::uint64_t>(width) * height * channels;
    if (count > (1ULL << 30) || bytes.size() - 16 < count * 4)
        throw ImageIoError(path.string() + ": PRF1 payload truncated");
    if (bytes.size() - 16 > count * 4)
        throw ImageIoError(path.string() + ": PRF1 payload has trailing bytes");

    RealGrid g(std::size_t{channels}, std::size_t{height}, std::size_t{width});
    for (std::size_t i = 0; i < count; ++i)
        g[i] = std::bit_cast<float>(get_u32(&bytes[16 + 4 * i]));
    return g;
}

void write_prf(const RealGrid& grid, const std::filesystem::path& path)
{
    std::vector<std::uint8_t> bytes{'P', 'R', 'F', '1'};
    bytes.reserve(16 + 4 * grid.size());
    put_u32(bytes, static_cast<std::uint32_t>(grid.cols()));
    put_u32(bytes, static_cast<std::uint32_t>(grid.rows()));
    put_u32(bytes, static_cast<std::uint32_t>(grid.planes()));
    for (double v : grid)
        put_u32(bytes, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    dump(path, bytes);
}

RealGrid read_image(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ImageIoError("cannot open " + path.string());
    char magic[4] = {};
    in.read(magic, 4);
    if (in.gcount() >= 2 && magic[0] == 'P' && magic[1] == '5')
        return read_pgm(path);
    if (in.gcount() == 4 && std::string(magic, 4) == "PRF1")
        return read_prf(path);
    throw ImageIoError(path.string() + ": unrecognised image format (expected P5 PGM or PRF1)");
}

RealGrid center_crop(const RealGrid& image, std::size_t size)
{
    if (image.rows() < size || image.cols() < size)
        throw ImageIoError("image of " + std::to_string(image.cols()) + "x" + std::to_string(image.rows()) +
                           " is smaller than the requested " + std::to_string(size) + "x" + std::to_string(size));
    const std::size_t r0 = (image.rows() - size) / 2;
    const std::size_t c0 = (image.cols() - size) / 2;
    RealGrid out(size, size);
    for (std::size_t r = 0; r < size; ++r)
        for (std::size_t c = 0; c < size; ++c)
            out(r, c) = image(r0 + r, c0 + c);
    return out;
}

} // namespace pnpr
