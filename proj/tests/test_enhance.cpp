#include <doctest.h>

#include <random>

#include "datespot/corpus.hpp"
#include "datespot/enhance.hpp"

using namespace datespot;

namespace {

Plane random_plane(int w, int h, std::mt19937_64& rng) {
    Plane p(w, h);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (auto& v : p.data) v = u(rng);
    return p;
}

// Independent re-implementation of the mean/variance statistic used by the
// fusion rule, kept deliberately naive.
double oracle_variance(const Plane& p, int cx, int cy, int radius) {
    double sum = 0.0, sq = 0.0;
    int n = 0;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
            double v = p.at_clamped(cx + dx, cy + dy);
            sum += v;
            sq += v * v;
            ++n;
        }
    double mean = sum / n;
    return sq / n - mean * mean;
}

}  // namespace

TEST_CASE("linear combination sums bands and renormalizes by the maximum") {
    std::mt19937_64 rng(3);
    Plane a = random_plane(9, 5, rng), b = random_plane(9, 5, rng), c = random_plane(9, 5, rng);
    Plane out = combine_linear(a, b, c);
    float maxsum = 0.0f;
    for (size_t i = 0; i < out.data.size(); ++i)
        maxsum = std::max(maxsum, a.data[i] + b.data[i] + c.data[i]);
    float outmax = 0.0f;
    for (size_t i = 0; i < out.data.size(); ++i) {
        CHECK(out.data[i] == doctest::Approx((a.data[i] + b.data[i] + c.data[i]) / maxsum));
        outmax = std::max(outmax, out.data[i]);
    }
    CHECK(outmax == doctest::Approx(1.0f));

    Plane z(4, 4);
    Plane zz = combine_linear(z, z, z);
    for (float v : zz.data) CHECK(v == 0.0f);
}

TEST_CASE("haar details vanish on constant images and detect a vertical edge") {
    Plane flat(8, 8);
    for (auto& v : flat.data) v = 0.4f;
    auto d = haar_details(flat);
    for (const auto& plane : d)
        for (float v : plane.data) CHECK(v == doctest::Approx(0.0f));

    Plane stripes(8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) stripes.at(x, y) = (x % 2 == 0) ? 0.0f : 1.0f;
    auto s = haar_details(stripes);
    // Column stripes excite the vertical-detail band only.
    for (float v : s[0].data) CHECK(v == doctest::Approx(0.0f));
    for (float v : s[1].data) CHECK(v == doctest::Approx(0.5f));
    for (float v : s[2].data) CHECK(v == doctest::Approx(0.0f));
}

TEST_CASE("otsu threshold separates a two-level window") {
    Plane p(16, 16);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) p.at(x, y) = (x < 8) ? 0.2f : 0.8f;
    float t = detail::otsu_threshold(p, 0, 0, 16, 16);
    CHECK(t > 0.2f);
    CHECK(t <= 0.8f);

    Plane flat(8, 8);
    for (auto& v : flat.data) v = 0.3f;
    CHECK(detail::otsu_threshold(flat, 0, 0, 8, 8) == doctest::Approx(0.3f));
}

TEST_CASE("median smoothing removes isolated impulses") {
    Plane p(9, 9);
    for (auto& v : p.data) v = 0.5f;
    p.at(4, 4) = 1.0f;
    Plane s = smooth(p);
    CHECK(s.at(4, 4) == doctest::Approx(0.5f));
    CHECK(s.at(0, 0) == doctest::Approx(0.5f));
}

TEST_CASE("fusion picks, per pixel, the domain with maximal local variance") {
    std::mt19937_64 rng(17);
    DomainSmooth sm;
    sm.rgb = random_plane(21, 13, rng);
    sm.wavelet = random_plane(21, 13, rng);
    sm.gradient = random_plane(21, 13, rng);
    FusedGray fused = fuse(sm);
    for (int y = 0; y < 13; ++y)
        for (int x = 0; x < 21; ++x) {
            double vr = oracle_variance(sm.rgb, x, y, 1);
            double vw = oracle_variance(sm.wavelet, x, y, 1);
            double vg = oracle_variance(sm.gradient, x, y, 1);
            float expect;
            if (vr >= vw && vr >= vg) expect = sm.rgb.at(x, y);
            else if (vw >= vg) expect = sm.wavelet.at(x, y);
            else expect = sm.gradient.at(x, y);
            CHECK(fused.plane.at(x, y) == expect);
        }
}

TEST_CASE("enhancement of a rendered line keeps size and range") {
    ImageU8 img = render_line("04/18/2014", RenderStyle{}, 11);
    auto [smooths, fused] = enhance_line(img);
    CHECK(fused.plane.width == img.width);
    CHECK(fused.plane.height == img.height);
    for (float v : fused.plane.data) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
    // Bright glyph pixels should survive enhancement as high values somewhere.
    float maxv = 0.0f;
    for (float v : fused.plane.data) maxv = std::max(maxv, v);
    CHECK(maxv > 0.5f);
}
