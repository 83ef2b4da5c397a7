#ifndef DATESPOT_PNG_IO_HPP
#define DATESPOT_PNG_IO_HPP

// Minimal PNG reader/writer on top of zlib. Handles 8-bit gray, RGB and
// RGBA, non-interlaced, which covers everything this project produces.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <zlib.h>

#include "datespot/image.hpp"

namespace datespot::png {

namespace detail {

inline void put_u32(std::vector<uint8_t>& v, uint32_t x) {
    v.push_back(uint8_t(x >> 24));
    v.push_back(uint8_t(x >> 16));
    v.push_back(uint8_t(x >> 8));
    v.push_back(uint8_t(x));
}

inline uint32_t get_u32(const uint8_t* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

inline void write_chunk(std::vector<uint8_t>& out, const char type[4],
                        const uint8_t* payload, size_t n) {
    put_u32(out, uint32_t(n));
    size_t type_pos = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload, payload + n);
    uint32_t crc = uint32_t(::crc32(0, out.data() + type_pos, uInt(4 + n)));
    put_u32(out, crc);
}

inline std::vector<uint8_t> zlib_deflate(const std::vector<uint8_t>& in) {
    uLongf bound = ::compressBound(uLong(in.size()));
    std::vector<uint8_t> out(bound);
    if (::compress2(out.data(), &bound, in.data(), uLong(in.size()), 6) != Z_OK)
        throw std::runtime_error("png: deflate failed");
    out.resize(bound);
    return out;
}

inline std::vector<uint8_t> zlib_inflate(const std::vector<uint8_t>& in, size_t expected) {
    std::vector<uint8_t> out(expected);
    uLongf n = uLongf(expected);
    int rc = ::uncompress(out.data(), &n, in.data(), uLong(in.size()));
    if (rc != Z_OK || n != expected)
        throw std::runtime_error("png: inflate failed");
    return out;
}

inline int paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

}  // namespace detail

inline void save(const std::string& path, const ImageU8& img) {
    if (img.empty()) throw std::invalid_argument("png: empty image");
    uint8_t color_type;
    switch (img.channels) {
        case 1: color_type = 0; break;
        case 3: color_type = 2; break;
        case 4: color_type = 6; break;
        default: throw std::invalid_argument("png: unsupported channel count");
    }
    const size_t stride = size_t(img.width) * img.channels;
    std::vector<uint8_t> raw;
    raw.reserve((stride + 1) * img.height);
    for (int y = 0; y < img.height; ++y) {
        raw.push_back(0);  // filter type none
        const uint8_t* row = img.data.data() + size_t(y) * stride;
        raw.insert(raw.end(), row, row + stride);
    }
    std::vector<uint8_t> idat = detail::zlib_deflate(raw);

    std::vector<uint8_t> out;
    static const uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    out.insert(out.end(), sig, sig + 8);
    std::vector<uint8_t> ihdr;
    detail::put_u32(ihdr, uint32_t(img.width));
    detail::put_u32(ihdr, uint32_t(img.height));
    ihdr.push_back(8);           // bit depth
    ihdr.push_back(color_type);
    ihdr.push_back(0);           // compression
    ihdr.push_back(0);           // filter
    ihdr.push_back(0);           // no interlace
    detail::write_chunk(out, "IHDR", ihdr.data(), ihdr.size());
    detail::write_chunk(out, "IDAT", idat.data(), idat.size());
    detail::write_chunk(out, "IEND", nullptr, 0);

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("png: cannot open for write: " + path);
    f.write(reinterpret_cast<const char*>(out.data()), std::streamsize(out.size()));
    if (!f) throw std::runtime_error("png: write failed: " + path);
}

inline ImageU8 load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("png: cannot open: " + path);
    std::vector<uint8_t> buf((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
    static const uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    if (buf.size() < 8 || std::memcmp(buf.data(), sig, 8) != 0)
        throw std::runtime_error("png: bad signature: " + path);

    size_t pos = 8;
    uint32_t w = 0, h = 0;
    int channels = 0, bit_depth = 0, interlace = 0;
    std::vector<uint8_t> idat;
    while (pos + 8 <= buf.size()) {
        uint32_t len = detail::get_u32(buf.data() + pos);
        if (pos + 12 + len > buf.size()) throw std::runtime_error("png: truncated chunk");
        const char* type = reinterpret_cast<const char*>(buf.data() + pos + 4);
        const uint8_t* payload = buf.data() + pos + 8;
        if (std::memcmp(type, "IHDR", 4) == 0) {
            w = detail::get_u32(payload);
            h = detail::get_u32(payload + 4);
            bit_depth = payload[8];
            switch (payload[9]) {
                case 0: channels = 1; break;
                case 2: channels = 3; break;
                case 6: channels = 4; break;
                default: throw std::runtime_error("png: unsupported color type");
            }
            interlace = payload[12];
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), payload, payload + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            break;
        }
        pos += 12 + len;
    }
    if (w == 0 || h == 0) throw std::runtime_error("png: missing IHDR");
    if (bit_depth != 8) throw std::runtime_error("png: only 8-bit depth supported");
    if (interlace != 0) throw std::runtime_error("png: interlaced images unsupported");

    const size_t stride = size_t(w) * channels;
    std::vector<uint8_t> raw = detail::zlib_inflate(idat, (stride + 1) * h);

    ImageU8 img(int(w), int(h), channels);
    const int bpp = channels;  // bytes per pixel at 8-bit depth
    for (uint32_t y = 0; y < h; ++y) {
        const uint8_t* src = raw.data() + size_t(y) * (stride + 1);
        uint8_t filter = src[0];
        uint8_t* cur = img.data.data() + size_t(y) * stride;
        const uint8_t* prev = y > 0 ? img.data.data() + size_t(y - 1) * stride : nullptr;
        for (size_t i = 0; i < stride; ++i) {
            int x = src[1 + i];
            int a = i >= size_t(bpp) ? cur[i - bpp] : 0;
            int b = prev ? prev[i] : 0;
            int c = (prev && i >= size_t(bpp)) ? prev[i - bpp] : 0;
            switch (filter) {
                case 0: break;
                case 1: x += a; break;
                case 2: x += b; break;
                case 3: x += (a + b) / 2; break;
                case 4: x += detail::paeth(a, b, c); break;
                default: throw std::runtime_error("png: bad filter type");
            }
            cur[i] = uint8_t(x & 0xff);
        }
    }
    return img;
}

}  // namespace datespot::png

#endif
