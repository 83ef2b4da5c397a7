#ifndef DATESPOT_ENHANCE_HPP
#define DATESPOT_ENHANCE_HPP

// Enhanced-gray conversion of an RGB text line: per-domain sub-band
// combination (color / Haar wavelet / gradient), dominant-pixel selection,
// median smoothing, and local-variance fusion of the three domains.

#include <array>
#include <stdexcept>

#include "datespot/image.hpp"

namespace datespot {

struct SubBandSet {
    std::array<Plane, 3> rgb;       // R, G, B
    std::array<Plane, 3> wavelet;   // LH, HL, HH details, upsampled
    std::array<Plane, 3> gradient;  // horizontal, vertical, diagonal
};

struct DomainSmooth {
    Plane rgb;
    Plane wavelet;
    Plane gradient;
};

struct FusedGray {
    Plane plane;
};

namespace detail {

inline void check_same_size(const Plane& a, const Plane& b) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("plane dimension mismatch");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Decomposition
// ---------------------------------------------------------------------------

/// Single-level Haar details of a gray plane, upsampled back to full size.
/// Returned planes hold absolute detail magnitudes.
inline std::array<Plane, 3> haar_details(const Plane& gray) {
    if (gray.width < 2 || gray.height < 2)
        throw std::invalid_argument("haar: image smaller than 2x2");
    int hw = gray.width / 2, hh = gray.height / 2;
    Plane lh(hw, hh), hl(hw, hh), hhp(hw, hh);
    for (int y = 0; y < hh; ++y)
        for (int x = 0; x < hw; ++x) {
            float a = gray.at(2 * x, 2 * y);
            float b = gray.at_clamped(2 * x + 1, 2 * y);
            float c = gray.at_clamped(2 * x, 2 * y + 1);
            float d = gray.at_clamped(2 * x + 1, 2 * y + 1);
            lh.at(x, y) = std::abs((a + b - c - d) * 0.25f);   // horizontal detail
            hl.at(x, y) = std::abs((a - b + c - d) * 0.25f);   // vertical detail
            hhp.at(x, y) = std::abs((a - b - c + d) * 0.25f);  // diagonal detail
        }
    return {resize_bilinear(lh, gray.width, gray.height),
            resize_bilinear(hl, gray.width, gray.height),
            resize_bilinear(hhp, gray.width, gray.height)};
}

/// Absolute responses of horizontal/vertical Sobel and a diagonal difference
/// kernel, normalized into [0,1].
inline std::array<Plane, 3> gradient_planes(const Plane& gray) {
    Plane gh(gray.width, gray.height), gv(gray.width, gray.height), gd(gray.width, gray.height);
    for (int y = 0; y < gray.height; ++y)
        for (int x = 0; x < gray.width; ++x) {
            auto p = [&](int dx, int dy) { return gray.at_clamped(x + dx, y + dy); };
            float sx = (p(1, -1) + 2 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2 * p(-1, 0) + p(-1, 1));
            float sy = (p(-1, 1) + 2 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2 * p(0, -1) + p(1, -1));
            float dd = p(1, 1) - p(0, 0);
            gh.at(x, y) = std::abs(sx) / 4.0f;
            gv.at(x, y) = std::abs(sy) / 4.0f;
            gd.at(x, y) = std::abs(dd);
        }
    return {gh, gv, gd};
}

inline SubBandSet decompose(const ImageU8& image) {
    if (image.width < 2 || image.height < 2)
        throw std::invalid_argument("decompose: image smaller than 2x2");
    SubBandSet s;
    for (int c = 0; c < 3; ++c) s.rgb[size_t(c)] = channel_plane(image, c);
    Plane gray = to_gray_average(image);
    s.wavelet = haar_details(gray);
    s.gradient = gradient_planes(gray);
    return s;
}

// ---------------------------------------------------------------------------
// Per-domain processing
// ---------------------------------------------------------------------------

/// Pixel-wise sum of three planes, renormalized by the plane maximum.
inline Plane combine_linear(const Plane& a, const Plane& b, const Plane& c) {
    detail::check_same_size(a, b);
    detail::check_same_size(a, c);
    Plane out(a.width, a.height);
    float maxv = 0.0f;
    for (size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = a.data[i] + b.data[i] + c.data[i];
        maxv = std::max(maxv, out.data[i]);
    }
    if (maxv > 0.0f)
        for (auto& v : out.data) v /= maxv;
    return out;
}

namespace detail {

/// Otsu threshold over values in [0,1] using a 256-bin histogram.
/// Degenerate (single-level) histograms return the minimum, which retains
/// every pixel.
inline float otsu_threshold(const Plane& p, int x0, int y0, int x1, int y1) {
    std::array<int, 256> hist{};
    float minv = 1.0f, maxv = 0.0f;
    int count = 0;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            float v = std::clamp(p.at(x, y), 0.0f, 1.0f);
            ++hist[size_t(std::min(255, int(v * 255.0f)))];
            minv = std::min(minv, v);
            maxv = std::max(maxv, v);
            ++count;
        }
    if (count == 0 || maxv - minv < 1e-6f) return minv;

    double total_sum = 0.0;
    for (int i = 0; i < 256; ++i) total_sum += double(i) * hist[size_t(i)];
    double w0 = 0.0, sum0 = 0.0, best_var = -1.0;
    int best_t = 0;
    for (int t = 0; t < 256; ++t) {
        w0 += hist[size_t(t)];
        if (w0 == 0) continue;
        double w1 = count - w0;
        if (w1 == 0) break;
        sum0 += double(t) * hist[size_t(t)];
        double m0 = sum0 / w0;
        double m1 = (total_sum - sum0) / w1;
        double var = w0 * w1 * (m0 - m1) * (m0 - m1);
        if (var > best_var) {
            best_var = var;
            best_t = t;
        }
    }
    // Threshold at the first value of the upper class.
    return float(best_t + 1) / 255.0f;
}

}  // namespace detail

/// Local histogram dominance: sliding 16x16 windows (stride 8), pixels at or
/// above the window's Otsu threshold keep their value; overlapping windows
/// combine by maximum.
inline Plane select_dominant(const Plane& p, int window = 16, int stride = 8) {
    Plane out(p.width, p.height, 1, 0.0f);
    for (int y0 = 0; y0 < p.height; y0 += stride) {
        int y1 = std::min(y0 + window, p.height);
        for (int x0 = 0; x0 < p.width; x0 += stride) {
            int x1 = std::min(x0 + window, p.width);
            float t = detail::otsu_threshold(p, x0, y0, x1, y1);
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) {
                    float v = p.at(x, y);
                    if (v >= t) out.at(x, y) = std::max(out.at(x, y), v);
                }
            if (x1 >= p.width) break;
        }
        if (y0 + window >= p.height && y0 + stride >= p.height) break;
    }
    return out;
}

/// 3x3 median filter.
inline Plane smooth(const Plane& p) {
    Plane out(p.width, p.height);
    for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < p.width; ++x) {
            std::array<float, 9> v;
            int k = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) v[size_t(k++)] = p.at_clamped(x + dx, y + dy);
            std::nth_element(v.begin(), v.begin() + 4, v.end());
            out.at(x, y) = v[4];
        }
    return out;
}

// ---------------------------------------------------------------------------
// Fusion
// ---------------------------------------------------------------------------

namespace detail {

inline double local_variance(const Plane& p, int x, int y, int radius) {
    double sum = 0.0, sq = 0.0;
    int n = 0;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
            double v = p.at_clamped(x + dx, y + dy);
            sum += v;
            sq += v * v;
            ++n;
        }
    double mean = sum / n;
    return sq / n - mean * mean;
}

}  // namespace detail

/// Per-pixel selection of the domain with maximal local variance. Ties break
/// in the fixed order RGB > wavelet > gradient.
inline FusedGray fuse(const DomainSmooth& smooths, int radius = 1) {
    detail::check_same_size(smooths.rgb, smooths.wavelet);
    detail::check_same_size(smooths.rgb, smooths.gradient);
    FusedGray out;
    out.plane = Plane(smooths.rgb.width, smooths.rgb.height);
    for (int y = 0; y < out.plane.height; ++y)
        for (int x = 0; x < out.plane.width; ++x) {
            double vr = detail::local_variance(smooths.rgb, x, y, radius);
            double vw = detail::local_variance(smooths.wavelet, x, y, radius);
            double vg = detail::local_variance(smooths.gradient, x, y, radius);
            float val;
            if (vr >= vw && vr >= vg)
                val = smooths.rgb.at(x, y);
            else if (vw >= vg)
                val = smooths.wavelet.at(x, y);
            else
                val = smooths.gradient.at(x, y);
            out.plane.at(x, y) = val;
        }
    return out;
}

/// Full enhancement pipeline for one RGB line image.
inline std::pair<DomainSmooth, FusedGray> enhance_line(const ImageU8& image) {
    SubBandSet bands = decompose(image);
    DomainSmooth sm;
    sm.rgb = smooth(select_dominant(combine_linear(bands.rgb[0], bands.rgb[1], bands.rgb[2])));
    sm.wavelet =
        smooth(select_dominant(combine_linear(bands.wavelet[0], bands.wavelet[1], bands.wavelet[2])));
    sm.gradient = smooth(
        select_dominant(combine_linear(bands.gradient[0], bands.gradient[1], bands.gradient[2])));
    FusedGray fused = fuse(sm);
    return {std::move(sm), std::move(fused)};
}

}  // namespace datespot

#endif
