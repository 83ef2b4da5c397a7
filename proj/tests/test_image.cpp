#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "datespot/image.hpp"
#include "datespot/png_io.hpp"

using namespace datespot;
namespace fs = std::filesystem;

namespace {
fs::path temp_file(const char* name) {
    return fs::temp_directory_path() / name;
}
}  // namespace

TEST_CASE("png round-trips gray, rgb and rgba images") {
    std::mt19937_64 rng(7);
    for (int channels : {1, 3, 4}) {
        ImageU8 img(37, 11, channels);
        for (auto& v : img.data) v = uint8_t(rng());
        auto path = temp_file("datespot_png_rt.png");
        png::save(path.string(), img);
        ImageU8 back = png::load(path.string());
        REQUIRE(back.width == img.width);
        REQUIRE(back.height == img.height);
        REQUIRE(back.channels == img.channels);
        CHECK(back.data == img.data);
        fs::remove(path);
    }
}

TEST_CASE("png load rejects non-png data") {
    auto path = temp_file("datespot_not_a png.bin");
    {
        std::ofstream os(path, std::ios::binary);
        os << "definitely not a png";
    }
    CHECK_THROWS(png::load(path.string()));
    fs::remove(path);
}

TEST_CASE("gray conversion averages channels and scales to [0,1]") {
    ImageU8 img(2, 1, 3);
    img.at(0, 0, 0) = 255;
    img.at(0, 0, 1) = 0;
    img.at(0, 0, 2) = 0;
    img.at(1, 0, 0) = 30;
    img.at(1, 0, 1) = 60;
    img.at(1, 0, 2) = 90;
    Plane g = to_gray_average(img);
    CHECK(g.at(0, 0) == doctest::Approx(255.0 / 3.0 / 255.0));
    CHECK(g.at(1, 0) == doctest::Approx(60.0 / 255.0));
}

TEST_CASE("bilinear resize is identity at the same size and interpolates midpoints") {
    Plane p(2, 2);
    p.at(0, 0) = 0.0f;
    p.at(1, 0) = 1.0f;
    p.at(0, 1) = 0.0f;
    p.at(1, 1) = 1.0f;
    Plane same = resize_bilinear(p, 2, 2);
    for (int i = 0; i < 4; ++i) CHECK(same.data[size_t(i)] == p.data[size_t(i)]);
    Plane wide = resize_bilinear(p, 3, 2);
    CHECK(wide.at(0, 0) == doctest::Approx(0.0));
    CHECK(wide.at(2, 0) == doctest::Approx(1.0));
    CHECK(wide.at(1, 0) == doctest::Approx(0.5));
}

TEST_CASE("clamped access replicates border pixels") {
    Plane p(2, 2);
    p.at(0, 0) = 1.0f;
    p.at(1, 0) = 2.0f;
    p.at(0, 1) = 3.0f;
    p.at(1, 1) = 4.0f;
    CHECK(p.at_clamped(-5, -5) == 1.0f);
    CHECK(p.at_clamped(9, 0) == 2.0f);
    CHECK(p.at_clamped(0, 9) == 3.0f);
}
