#include "panogs/codecs.hpp"

#include "panogs/errors.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace panogs {

namespace {

std::uint8_t quantize(double v)
{
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

Bytes write_png_image(png_image& img, const std::vector<std::uint8_t>& pixels)
{
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&img, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
        throw IoError(std::string("PNG encode failed: ") + img.message);
    }
    Bytes out(size);
    if (!png_image_write_to_memory(&img, out.data(), &size, 0, pixels.data(), 0, nullptr)) {
        throw IoError(std::string("PNG encode failed: ") + img.message);
    }
    out.resize(size);
    return out;
}

std::vector<std::uint8_t> read_png_image(const Bytes& png, png_uint_32 format, int& width, int& height)
{
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&img, png.data(), png.size())) {
        throw IoError(std::string("PNG decode failed: ") + img.message);
    }
    img.format = format;
    std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, pixels.data(), 0, nullptr)) {
        png_image_free(&img);
        throw IoError(std::string("PNG decode failed: ") + img.message);
    }
    width = static_cast<int>(img.width);
    height = static_cast<int>(img.height);
    return pixels;
}

}  // namespace

Bytes encode_png(const Image& image)
{
    if (image.channels() != 1 && image.channels() != 3) {
        throw ContractError("encode_png supports 1 or 3 channels");
    }
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width());
    img.height = static_cast<png_uint_32>(image.height());
    img.format = image.channels() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    std::vector<std::uint8_t> pixels(image.data().size());
    std::transform(image.data().begin(), image.data().end(), pixels.begin(), quantize);
    return write_png_image(img, pixels);
}

Image decode_png(const Bytes& png)
{
    // Peek at the header to keep gray images single-channel.
    png_image probe;
    std::memset(&probe, 0, sizeof probe);
    probe.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&probe, png.data(), png.size())) {
        throw IoError(std::string("PNG decode failed: ") + probe.message);
    }
    const bool gray = (probe.format & PNG_FORMAT_FLAG_COLOR) == 0;
    png_image_free(&probe);
    int w = 0;
    int h = 0;
    const auto pixels = read_png_image(png, gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB, w, h);
    Image out(w, h, gray ? 1 : 3);
    std::transform(pixels.begin(), pixels.end(), out.data().begin(), [](std::uint8_t v) { return v / 255.0; });
    return out;
}

Bytes encode_mask_png(const Mask& mask)
{
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(mask.width());
    img.height = static_cast<png_uint_32>(mask.height());
    img.format = PNG_FORMAT_GRAY;
    std::vector<std::uint8_t> pixels(mask.data().size());
    std::transform(mask.data().begin(), mask.data().end(), pixels.begin(),
                   [](std::uint8_t v) { return static_cast<std::uint8_t>(v ? 255 : 0); });
    return write_png_image(img, pixels);
}

Mask decode_mask_png(const Bytes& png)
{
    int w = 0;
    int h = 0;
    const auto pixels = read_png_image(png, PNG_FORMAT_GRAY, w, h);
    Mask out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            out.set(x, y, pixels[static_cast<std::size_t>(y) * w + x] >= 128);
        }
    }
    return out;
}

Bytes encode_pfm(const Image& map)
{
    if (map.channels() != 1) {
        throw ContractError("encode_pfm expects a single-channel map");
    }
    static_assert(std::endian::native == std::endian::little);
    const std::string header = "Pf\n" + std::to_string(map.width()) + " " + std::to_string(map.height()) + "\n-1.0\n";
    Bytes out(header.begin(), header.end());
    out.reserve(out.size() + map.data().size() * 4);
    for (int y = map.height() - 1; y >= 0; --y) {
        for (int x = 0; x < map.width(); ++x) {
            const auto f = static_cast<float>(map.at(x, y));
            std::uint8_t b[4];
            std::memcpy(b, &f, 4);
            out.insert(out.end(), b, b + 4);
        }
    }
    return out;
}

Image decode_pfm(const Bytes& pfm)
{
    std::size_t pos = 0;
    const auto token = [&]() {
        while (pos < pfm.size() && std::isspace(pfm[pos])) {
            ++pos;
        }
        std::string t;
        while (pos < pfm.size() && !std::isspace(pfm[pos])) {
            t.push_back(static_cast<char>(pfm[pos++]));
        }
        return t;
    };
    const std::string magic = token();
    if (magic != "Pf") {
        throw IoError("PFM: expected single-channel 'Pf' header, got '" + magic + "'");
    }
    int w = 0;
    int h = 0;
    double scale = 0.0;
    try {
        w = std::stoi(token());
        h = std::stoi(token());
        scale = std::stod(token());
    } catch (const std::exception&) {
        throw IoError("PFM: malformed header");
    }
    ++pos;  // single whitespace byte before the raster
    if (w <= 0 || h <= 0 || scale == 0.0) {
        throw IoError("PFM: invalid dims or scale");
    }
    const bool little = scale < 0.0;
    const std::size_t need = static_cast<std::size_t>(w) * h * 4;
    if (pfm.size() < pos + need) {
        throw IoError("PFM: truncated raster");
    }
    Image out(w, h, 1);
    const std::uint8_t* p = pfm.data() + pos;
    for (int y = h - 1; y >= 0; --y) {
        for (int x = 0; x < w; ++x) {
            std::uint8_t b[4] = {p[0], p[1], p[2], p[3]};
            if (!little) {
                std::reverse(b, b + 4);
            }
            float f = 0.0F;
            std::memcpy(&f, b, 4);
            out.at(x, y) = f;
            p += 4;
        }
    }
    return out;
}

std::string base64_encode(const Bytes& bytes)
{
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(), static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

Bytes base64_decode(const std::string& text)
{
    std::string clean;
    clean.reserve(text.size());
    for (char c : text) {
        if (!std::isspace(static_cast<unsigned char>(c))) {
            clean.push_back(c);
        }
    }
    if (clean.size() % 4 != 0) {
        throw IoError("base64: length is not a multiple of 4");
    }
    Bytes out(3 * clean.size() / 4);
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()),
                                  static_cast<int>(clean.size()));
    if (n < 0) {
        throw IoError("base64: invalid input");
    }
    std::size_t pad = 0;
    if (!clean.empty() && clean.back() == '=') {
        ++pad;
        if (clean.size() > 1 && clean[clean.size() - 2] == '=') {
            ++pad;
        }
    }
    out.resize(static_cast<std::size_t>(n) - pad);
    return out;
}

std::string sha256_hex(const Bytes& bytes)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw IoError("sha256 failed");
    }
    std::ostringstream s;
    for (unsigned int i = 0; i < len; ++i) {
        s << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    }
    return s.str();
}

Bytes read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const Bytes& bytes)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

void write_png(const std::filesystem::path& path, const Image& image)
{
    write_file(path, encode_png(image));
}

Image read_png(const std::filesystem::path& path)
{
    return decode_png(read_file(path));
}

void write_pfm(const std::filesystem::path& path, const Image& map)
{
    write_file(path, encode_pfm(map));
}

Image read_pfm(const std::filesystem::path& path)
{
    return decode_pfm(read_file(path));
}

}  // namespace panogs
