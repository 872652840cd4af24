#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "faceid/imageio.hpp"
#include "support/synthetic.hpp"

using namespace faceid;
namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) {
    return std::vector<std::uint8_t>(s.begin(), s.end());
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("faceid_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("parse_pgm P5 hand-built") {
    std::vector<std::uint8_t> data = bytes_of("P5\n2 2\n255\n");
    data.insert(data.end(), {0, 255, 128, 64});
    const GrayImage img = parse_pgm(data);
    CHECK(img.height() == 2);
    CHECK(img.width() == 2);
    CHECK(img.pixels(0, 0) == 0.0);
    CHECK(img.pixels(0, 1) == 1.0);
    CHECK(img.pixels(1, 0) == doctest::Approx(128.0 / 255.0));
    CHECK(img.pixels(1, 1) == doctest::Approx(64.0 / 255.0));
}

TEST_CASE("parse_pgm P2 ASCII with maxval normalization") {
    const GrayImage img = parse_pgm(bytes_of("P2\n# comment\n1 1\n100\n100\n"));
    CHECK(img.height() == 1);
    CHECK(img.width() == 1);
    CHECK(img.pixels(0, 0) == 1.0);
}

TEST_CASE("parse_pgm 16-bit big-endian") {
    std::vector<std::uint8_t> data = bytes_of("P5 1 1 65535 ");
    data.insert(data.end(), {0x01, 0x00});  // 256
    const GrayImage img = parse_pgm(data);
    CHECK(img.pixels(0, 0) == doctest::Approx(256.0 / 65535.0));
}

TEST_CASE("parse_pgm error paths") {
    CHECK_THROWS_AS(parse_pgm(bytes_of("P6\n1 1\n255\nx")), BadMagic);
    CHECK_THROWS_AS(parse_pgm(bytes_of("P5\n0 2\n255\n")), BadHeader);
    CHECK_THROWS_AS(parse_pgm(bytes_of("P5\n1 1\n70000\n")), BadHeader);
    CHECK_THROWS_AS(parse_pgm(bytes_of("P5\n2 2\n255\nab")), TruncatedData);
    CHECK_THROWS_AS(parse_pgm(bytes_of("P2\n2 1\n255\n7")), TruncatedData);
}

TEST_CASE("pgm round trip within quantization error") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    GrayImage img;
    img.pixels = Matrix(5, 7);
    for (double& v : img.pixels.values()) v = uni(rng);
    const GrayImage back = parse_pgm(write_pgm(img));
    REQUIRE(back.height() == img.height());
    REQUIRE(back.width() == img.width());
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        CHECK(std::abs(back.pixels.values()[i] - img.pixels.values()[i]) <= 1.0 / 510.0);
}

TEST_CASE("resize_bilinear") {
    SUBCASE("identity when dims match") {
        GrayImage img;
        img.pixels = Matrix(3, 3, 0.25);
        img.pixels(1, 1) = 0.75;
        const GrayImage out = resize_bilinear(img, 3, 3);
        for (std::size_t i = 0; i < 9; ++i)
            CHECK(out.pixels.values()[i] == img.pixels.values()[i]);
    }
    SUBCASE("constants stay constant") {
        GrayImage img;
        img.pixels = Matrix(4, 6, 0.3);
        const GrayImage out = resize_bilinear(img, 9, 2);
        for (double v : out.pixels.values()) CHECK(v == doctest::Approx(0.3));
    }
    SUBCASE("1x2 to 1x3 interpolates the midpoint") {
        GrayImage img;
        img.pixels = Matrix(1, 2);
        img.pixels(0, 1) = 1.0;
        const GrayImage out = resize_bilinear(img, 1, 3);
        CHECK(out.pixels(0, 0) == doctest::Approx(0.0));
        CHECK(out.pixels(0, 1) == doctest::Approx(0.5));
        CHECK(out.pixels(0, 2) == doctest::Approx(1.0));
    }
    SUBCASE("output range never exceeds input range") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        for (int trial = 0; trial < 10; ++trial) {
            GrayImage img;
            img.pixels = Matrix(2 + rng() % 8, 2 + rng() % 8);
            for (double& v : img.pixels.values()) v = uni(rng);
            const auto [in_min, in_max] =
                std::minmax_element(img.pixels.values().begin(), img.pixels.values().end());
            const GrayImage out = resize_bilinear(img, 1 + rng() % 12, 1 + rng() % 12);
            for (double v : out.pixels.values()) {
                CHECK(v >= *in_min - 1e-12);
                CHECK(v <= *in_max + 1e-12);
            }
        }
    }
}

TEST_CASE("load_manifest") {
    TempDir tmp;
    const Dataset faces = testsupport::make_face_dataset(2, 3, 4, 4, 99);
    for (std::size_t i = 0; i < faces.samples.size(); ++i)
        save_pgm(tmp.path / ("f" + std::to_string(i) + ".pgm"), faces.samples[i].image);

    SUBCASE("weights default to 1 without a weight column") {
        std::ofstream(tmp.path / "m.csv") << "#dims=4,4\npath,label\nf0.pgm,0\nf1.pgm,0\nf3.pgm,1\n";
        const Dataset ds = load_manifest(tmp.path / "m.csv");
        CHECK(ds.samples.size() == 3);
        CHECK(ds.class_count == 2);
        for (const auto& s : ds.samples) CHECK(s.weight == 1.0);
    }
    SUBCASE("weight column is honored") {
        std::ofstream(tmp.path / "m.csv")
            << "#dims=4,4\npath,label,weight\nf0.pgm,0,3\nf1.pgm,1,2\n";
        const Dataset ds = load_manifest(tmp.path / "m.csv");
        CHECK(ds.samples[0].weight == 3.0);
        CHECK(ds.samples[1].weight == 2.0);
    }
    SUBCASE("images are resized to the declared dims") {
        std::ofstream(tmp.path / "m.csv") << "#dims=2,3\npath,label\nf0.pgm,0\nf1.pgm,1\n";
        const Dataset ds = load_manifest(tmp.path / "m.csv");
        CHECK(ds.samples[0].image.height() == 2);
        CHECK(ds.samples[0].image.width() == 3);
    }
    SUBCASE("missing image names the row") {
        std::ofstream(tmp.path / "m.csv") << "#dims=4,4\npath,label\nf0.pgm,0\nnope.pgm,1\n";
        CHECK_THROWS_WITH_AS(load_manifest(tmp.path / "m.csv"),
                             doctest::Contains("line 4"), MissingFile);
    }
    SUBCASE("negative weight rejected") {
        std::ofstream(tmp.path / "m.csv") << "#dims=4,4\npath,label,weight\nf0.pgm,0,-1\n";
        CHECK_THROWS_AS(load_manifest(tmp.path / "m.csv"), ParseError);
    }
    SUBCASE("missing pragma rejected") {
        std::ofstream(tmp.path / "m.csv") << "path,label\nf0.pgm,0\n";
        CHECK_THROWS_AS(load_manifest(tmp.path / "m.csv"), ParseError);
    }
    SUBCASE("missing manifest file") {
        CHECK_THROWS_AS(load_manifest(tmp.path / "absent.csv"), MissingFile);
    }
    SUBCASE("bad label") {
        std::ofstream(tmp.path / "m.csv") << "#dims=4,4\npath,label\nf0.pgm,oops\n";
        CHECK_THROWS_AS(load_manifest(tmp.path / "m.csv"), UnknownLabel);
    }
}
