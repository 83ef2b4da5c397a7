#ifndef DATESPOT_FEATURES_HPP
#define DATESPOT_FEATURES_HPP

// Frame-level features: PHOG descriptors over a sliding window, the
// column-profile baseline feature, and sequence concatenation.

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "datespot/image.hpp"

namespace datespot {

enum class FeatureTag { Binary, Gray, Combined, Tandem };

inline std::string feature_tag_name(FeatureTag t) {
    switch (t) {
        case FeatureTag::Binary: return "binary";
        case FeatureTag::Gray: return "gray";
        case FeatureTag::Combined: return "combined";
        case FeatureTag::Tandem: return "tandem";
    }
    return "?";
}

struct FeatureSequence {
    int dim = 0;
    int count = 0;
    FeatureTag tag = FeatureTag::Gray;
    std::vector<float> values;  // count * dim, frame-major

    void resize(int frames, int d) {
        dim = d;
        count = frames;
        values.assign(size_t(frames) * size_t(d), 0.0f);
    }
    std::span<const float> frame(int i) const {
        return {values.data() + size_t(i) * size_t(dim), size_t(dim)};
    }
    std::span<float> frame(int i) {
        return {values.data() + size_t(i) * size_t(dim), size_t(dim)};
    }
};

struct SlidingWindowConfig {
    int line_height = 64;
    int window_width = 32;
    double overlap = 0.5;

    int stride() const {
        double s = window_width * (1.0 - overlap);
        int si = int(std::lround(s));
        if (si <= 0 || std::abs(s - si) > 1e-9)
            throw std::invalid_argument("stride must be a positive integer");
        return si;
    }
};

struct PhogConfig {
    int levels = 2;  // limiting pyramid level K
    int bins = 8;    // orientation bins over 360 degrees

    int dimension() const {
        int cells = 0;
        for (int n = 0, c = 1; n <= levels; ++n, c *= 4) cells += c;
        return bins * cells;
    }
};

// ---------------------------------------------------------------------------
// PHOG
// ---------------------------------------------------------------------------

namespace detail {

/// Accumulate unnormalized per-level orientation histograms of a patch.
/// Level n splits the patch into 2^n x 2^n cells; output blocks are
/// concatenated level by level, cells in row-major order.
inline std::vector<double> phog_accumulate(const Plane& patch, const PhogConfig& cfg) {
    std::vector<double> acc(size_t(cfg.dimension()), 0.0);
    const double two_pi = 2.0 * std::numbers::pi;
    for (int y = 0; y < patch.height; ++y)
        for (int x = 0; x < patch.width; ++x) {
            float gx = patch.at_clamped(x + 1, y) - patch.at_clamped(x - 1, y);
            float gy = patch.at_clamped(x, y + 1) - patch.at_clamped(x, y - 1);
            double mag = std::sqrt(double(gx) * gx + double(gy) * gy);
            if (mag == 0.0) continue;
            double angle = std::atan2(double(gy), double(gx));
            if (angle < 0) angle += two_pi;
            int bin = std::min(cfg.bins - 1, int(angle / two_pi * cfg.bins));

            int offset = 0;
            for (int n = 0, grid = 1; n <= cfg.levels; ++n, grid *= 2) {
                int cx = std::min(grid - 1, x * grid / patch.width);
                int cy = std::min(grid - 1, y * grid / patch.height);
                int cell = cy * grid + cx;
                acc[size_t(offset + (cell * cfg.bins) + bin)] += mag;
                offset += grid * grid * cfg.bins;
            }
        }
    return acc;
}

}  // namespace detail

/// PHOG descriptor of a window patch; each pyramid level's block is
/// L1-normalized independently (an all-zero block stays zero).
inline std::vector<float> phog_window(const Plane& patch, const PhogConfig& cfg = {}) {
    if (patch.empty()) throw std::invalid_argument("phog_window: empty patch");
    std::vector<double> acc = detail::phog_accumulate(patch, cfg);
    std::vector<float> out(acc.size());
    int offset = 0;
    for (int n = 0, grid = 1; n <= cfg.levels; ++n, grid *= 2) {
        int block = grid * grid * cfg.bins;
        double sum = 0.0;
        for (int i = 0; i < block; ++i) sum += acc[size_t(offset + i)];
        for (int i = 0; i < block; ++i)
            out[size_t(offset + i)] = sum > 0.0 ? float(acc[size_t(offset + i)] / sum) : 0.0f;
        offset += block;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sliding-window sequence extraction
// ---------------------------------------------------------------------------

/// Closed-form frame count: full windows plus one zero-padded partial frame
/// when the width is not stride-aligned.
inline int frame_count_for_width(int width, const SlidingWindowConfig& win) {
    int stride = win.stride();
    if (width <= win.window_width) return 1;
    int full = (width - win.window_width) / stride + 1;
    bool aligned = (width - win.window_width) % stride == 0;
    return full + (aligned ? 0 : 1);
}

/// PHOG frame sequence of a gray (or binary-valued) line image. The image is
/// height-normalized to the configured line height, preserving aspect ratio.
inline FeatureSequence extract_sequence(const Plane& image, const SlidingWindowConfig& win = {},
                                        const PhogConfig& cfg = {},
                                        FeatureTag tag = FeatureTag::Gray) {
    if (image.empty()) throw std::invalid_argument("extract_sequence: empty image");
    Plane scaled = image;
    if (image.height != win.line_height) {
        int new_w = std::max(1, int(std::lround(double(image.width) * win.line_height /
                                                 double(image.height))));
        scaled = resize_bilinear(image, new_w, win.line_height);
    }
    const int stride = win.stride();
    const int frames = frame_count_for_width(scaled.width, win);

    FeatureSequence seq;
    seq.resize(frames, cfg.dimension());
    seq.tag = tag;
    Plane patch(win.window_width, win.line_height);
    for (int f = 0; f < frames; ++f) {
        int x0 = f * stride;
        for (int y = 0; y < win.line_height; ++y)
            for (int x = 0; x < win.window_width; ++x)
                patch.at(x, y) = (x0 + x < scaled.width) ? scaled.at(x0 + x, y) : 0.0f;
        auto vec = phog_window(patch, cfg);
        std::copy(vec.begin(), vec.end(), seq.frame(f).begin());
    }
    return seq;
}

/// Frame-wise concatenation of two sequences with equal frame counts.
inline FeatureSequence concat_features(const FeatureSequence& a, const FeatureSequence& b) {
    if (a.count != b.count) throw std::invalid_argument("concat_features: frame count mismatch");
    FeatureSequence out;
    out.resize(a.count, a.dim + b.dim);
    out.tag = FeatureTag::Combined;
    for (int f = 0; f < a.count; ++f) {
        auto fa = a.frame(f);
        auto fb = b.frame(f);
        auto fo = out.frame(f);
        std::copy(fa.begin(), fa.end(), fo.begin());
        std::copy(fb.begin(), fb.end(), fo.begin() + a.dim);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Marti-Bunke baseline feature (9 values per image column)
// ---------------------------------------------------------------------------

inline FeatureSequence marti_bunke_features(const Plane& binary) {
    if (binary.empty()) throw std::invalid_argument("marti_bunke_features: empty image");
    const int H = binary.height;
    FeatureSequence seq;
    seq.resize(binary.width, 9);
    seq.tag = FeatureTag::Binary;
    const double norm = H > 1 ? double(H - 1) : 1.0;
    double prev_upper = 0.0, prev_lower = 0.0;
    for (int x = 0; x < binary.width; ++x) {
        int count = 0, first = -1, last = -1, transitions = 0;
        double sum_y = 0.0, sum_y2 = 0.0;
        float prev = 0.0f;  // implicit background above the column
        for (int y = 0; y < H; ++y) {
            float v = binary.at(x, y) >= 0.5f ? 1.0f : 0.0f;
            if (v > 0.5f) {
                ++count;
                if (first < 0) first = y;
                last = y;
                double ny = y / norm;
                sum_y += ny;
                sum_y2 += ny * ny;
            }
            if (prev < 0.5f && v > 0.5f) ++transitions;
            prev = v;
        }
        auto fo = seq.frame(x);
        double upper = first >= 0 ? first / norm : 0.0;
        double lower = last >= 0 ? last / norm : 0.0;
        fo[0] = float(double(count) / H);
        fo[1] = count > 0 ? float(sum_y / count) : 0.0f;
        fo[2] = count > 0 ? float(sum_y2 / count) : 0.0f;
        fo[3] = float(upper);
        fo[4] = float(lower);
        fo[5] = float(transitions);
        fo[6] = count > 0 ? float(double(count) / double(last - first + 1)) : 0.0f;
        fo[7] = x > 0 ? float(upper - prev_upper) : 0.0f;
        fo[8] = x > 0 ? float(lower - prev_lower) : 0.0f;
        prev_upper = upper;
        prev_lower = lower;
    }
    return seq;
}

}  // namespace datespot

#endif
