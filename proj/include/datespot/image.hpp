#ifndef DATESPOT_IMAGE_HPP
#define DATESPOT_IMAGE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace datespot {

/// Row-major interleaved raster. channels=3 for RGB, 1 for planes.
template <typename T>
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<T> data;

    Image() = default;
    Image(int w, int h, int c = 1, T fill = T(0))
        : width(w), height(h), channels(c),
          data(static_cast<size_t>(w) * h * c, fill) {}

    bool empty() const { return width == 0 || height == 0; }
    size_t size() const { return data.size(); }

    T& at(int x, int y, int c = 0) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    T at(int x, int y, int c = 0) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    // Clamped access for border handling in filters.
    T at_clamped(int x, int y, int c = 0) const {
        x = std::clamp(x, 0, width - 1);
        y = std::clamp(y, 0, height - 1);
        return at(x, y, c);
    }
};

using ImageU8 = Image<uint8_t>;
using Plane = Image<float>;

inline Plane to_gray_average(const ImageU8& rgb) {
    if (rgb.channels != 3) throw std::invalid_argument("expected 3-channel image");
    Plane out(rgb.width, rgb.height);
    for (int y = 0; y < rgb.height; ++y)
        for (int x = 0; x < rgb.width; ++x) {
            float s = float(rgb.at(x, y, 0)) + float(rgb.at(x, y, 1)) + float(rgb.at(x, y, 2));
            out.at(x, y) = s / (3.0f * 255.0f);
        }
    return out;
}

inline Plane channel_plane(const ImageU8& rgb, int c) {
    Plane out(rgb.width, rgb.height);
    for (int y = 0; y < rgb.height; ++y)
        for (int x = 0; x < rgb.width; ++x)
            out.at(x, y) = float(rgb.at(x, y, c)) / 255.0f;
    return out;
}

/// Bilinear resize of a single-channel plane.
inline Plane resize_bilinear(const Plane& src, int w, int h) {
    if (src.empty() || w <= 0 || h <= 0) throw std::invalid_argument("bad resize");
    Plane out(w, h);
    const float sx = float(src.width) / float(w);
    const float sy = float(src.height) / float(h);
    for (int y = 0; y < h; ++y) {
        float fy = (y + 0.5f) * sy - 0.5f;
        int y0 = int(std::floor(fy));
        float wy = fy - y0;
        for (int x = 0; x < w; ++x) {
            float fx = (x + 0.5f) * sx - 0.5f;
            int x0 = int(std::floor(fx));
            float wx = fx - x0;
            float v00 = src.at_clamped(x0, y0);
            float v10 = src.at_clamped(x0 + 1, y0);
            float v01 = src.at_clamped(x0, y0 + 1);
            float v11 = src.at_clamped(x0 + 1, y0 + 1);
            out.at(x, y) = v00 * (1 - wx) * (1 - wy) + v10 * wx * (1 - wy) +
                           v01 * (1 - wx) * wy + v11 * wx * wy;
        }
    }
    return out;
}

inline ImageU8 plane_to_u8(const Plane& p) {
    ImageU8 out(p.width, p.height, 1);
    for (size_t i = 0; i < p.data.size(); ++i) {
        float v = std::clamp(p.data[i], 0.0f, 1.0f);
        out.data[i] = uint8_t(std::lround(v * 255.0f));
    }
    return out;
}

inline ImageU8 plane_to_rgb_u8(const Plane& p) {
    ImageU8 out(p.width, p.height, 3);
    for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < p.width; ++x) {
            uint8_t v = uint8_t(std::lround(std::clamp(p.at(x, y), 0.0f, 1.0f) * 255.0f));
            out.at(x, y, 0) = out.at(x, y, 1) = out.at(x, y, 2) = v;
        }
    return out;
}

}  // namespace datespot

#endif
