#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "qrlab/dataset.hpp"
#include "qrlab/errors.hpp"
#include "qrlab/rng.hpp"

using namespace qrlab;
using doctest::Approx;

namespace {

namespace fs = std::filesystem;

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "qrlab_data_test";
    fs::create_directories(dir);
    return dir;
}

void put_be32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<char*>(b), 4);
}

// Hand-built 2-image 2x2 IDX fixture.
struct Fixture {
    std::string images;
    std::string labels;
};

Fixture write_fixture(std::uint32_t image_magic = 2051, std::uint32_t label_magic = 2049,
                      std::uint32_t label_count = 2, bool truncate_pixels = false) {
    const fs::path dir = temp_dir();
    Fixture fx{(dir / "imgs.idx3").string(), (dir / "labels.idx1").string()};
    {
        std::ofstream out(fx.images, std::ios::binary | std::ios::trunc);
        put_be32(out, image_magic);
        put_be32(out, 2);  // count
        put_be32(out, 2);  // rows
        put_be32(out, 2);  // cols
        const unsigned char pixels[8] = {0, 128, 255, 64, 1, 2, 3, 4};
        out.write(reinterpret_cast<const char*>(pixels), truncate_pixels ? 5 : 8);
    }
    {
        std::ofstream out(fx.labels, std::ios::binary | std::ios::trunc);
        put_be32(out, label_magic);
        put_be32(out, label_count);
        const unsigned char labels[2] = {7, 3};
        out.write(reinterpret_cast<const char*>(labels), 2);
    }
    return fx;
}

}  // namespace

TEST_CASE("IDX fixture round-trips exactly") {
    const Fixture fx = write_fixture();
    const data::DatasetSplit split = data::load_mnist(fx.images, fx.labels, data::Role::test);
    REQUIRE(split.rows == 2);
    REQUIRE(split.cols == 4);
    CHECK(split.features[0] == 0.0);
    CHECK(split.features[1] == Approx(128.0 / 255.0).epsilon(1e-15));
    CHECK(split.features[2] == 1.0);
    CHECK(split.features[3] == Approx(64.0 / 255.0).epsilon(1e-15));
    CHECK(split.features[4] == Approx(1.0 / 255.0).epsilon(1e-15));
    CHECK(split.labels[0] == 7);
    CHECK(split.labels[1] == 3);
    CHECK(split.bound_lo[0] == 0.0);
    CHECK(split.bound_hi[0] == 1.0);
    for (double v : split.features) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("IDX loader errors name the defect") {
    const Fixture bad_magic = write_fixture(1234);
    CHECK_THROWS_WITH_AS(data::load_mnist(bad_magic.images, bad_magic.labels, data::Role::test),
                         doctest::Contains("expected 2051"), data_error);
    try {
        data::load_mnist(bad_magic.images, bad_magic.labels, data::Role::test);
    } catch (const data_error& e) {
        CHECK(std::string(e.what()).find("1234") != std::string::npos);
    }

    const Fixture bad_label_magic = write_fixture(2051, 99);
    CHECK_THROWS_WITH_AS(
        data::load_mnist(bad_label_magic.images, bad_label_magic.labels, data::Role::test),
        doctest::Contains("expected 2049"), data_error);

    const Fixture truncated = write_fixture(2051, 2049, 2, /*truncate_pixels=*/true);
    CHECK_THROWS_WITH_AS(data::load_mnist(truncated.images, truncated.labels, data::Role::test),
                         doctest::Contains("truncated"), data_error);

    const Fixture mismatch = write_fixture(2051, 2049, /*label_count=*/3);
    CHECK_THROWS_WITH_AS(data::load_mnist(mismatch.images, mismatch.labels, data::Role::test),
                         doctest::Contains("does not match"), data_error);

    CHECK_THROWS_AS(data::load_mnist("/nonexistent/file", "/nonexistent/file", data::Role::test),
                    data_error);
}

TEST_CASE("spiral point equations") {
    const double pi = 3.14159265358979323846;
    auto [x, y] = data::spiral_point(0, pi, 0.0, 0.0);
    CHECK(x == Approx(-0.1 * pi).epsilon(1e-12));
    CHECK(y == Approx(0.0).epsilon(1e-12));
    auto [x1, y1] = data::spiral_point(1, pi, 0.0, 0.0);
    CHECK(x1 == Approx(0.1 * pi).epsilon(1e-12));
}

TEST_CASE("spiral antisymmetry under mirrored noise") {
    SplitMix64 rng(5150);
    for (int k = 0; k < 1000; ++k) {
        const double t = rng.uniform(0.0, 100.0);
        const double nx = 0.1732 * rng.normal();
        const double ny = 0.1732 * rng.normal();
        auto [x0, y0] = data::spiral_point(0, t, nx, ny);
        auto [x1, y1] = data::spiral_point(1, t, -nx, -ny);
        CHECK(x0 == -x1);
        CHECK(y0 == -y1);
    }
}

TEST_CASE("spiral generation: counts, labels, radius bound") {
    data::SpiralConfig config;
    config.seed = 99;
    auto [train, test] = data::generate_spirals(config);
    CHECK(train.rows == 400);
    CHECK(test.rows == 400);
    CHECK(train.cols == 2);
    for (const data::DatasetSplit* split : {&train, &test}) {
        int per_class[2] = {0, 0};
        for (int l : split->labels) {
            REQUIRE(l >= 0);
            REQUIRE(l <= 1);
            ++per_class[l];
        }
        CHECK(per_class[0] == 200);
        CHECK(per_class[1] == 200);
        const double limit = 0.1 * 100.0 + 5.0 * std::sqrt(0.03);
        for (std::size_t i = 0; i < split->rows; ++i) {
            const double r = std::hypot(split->features[i * 2], split->features[i * 2 + 1]);
            CHECK(r <= limit);
        }
        // recorded bounds match the actual extrema
        double lo = split->features[0], hi = split->features[0];
        for (std::size_t i = 0; i < split->rows; ++i) {
            lo = std::min(lo, split->features[i * 2]);
            hi = std::max(hi, split->features[i * 2]);
        }
        CHECK(split->bound_lo[0] == lo);
        CHECK(split->bound_hi[0] == hi);
    }
    // train and test differ (independent sub-seeds)
    CHECK(train.features != test.features);

    // determinism
    auto [train2, test2] = data::generate_spirals(config);
    CHECK(train.features == train2.features);
    CHECK(test.labels == test2.labels);
}

TEST_CASE("spiral normalization option") {
    data::SpiralConfig config;
    config.seed = 3;
    config.normalize = true;
    auto [train, test] = data::generate_spirals(config);
    double extent = 0.0;
    for (const data::DatasetSplit* split : {&train, &test})
        for (double v : split->features) extent = std::max(extent, std::abs(v));
    CHECK(extent == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("holdout split sizes, multiset identity, determinism") {
    data::DatasetSplit big;
    big.rows = 60000;
    big.cols = 1;
    big.features.resize(big.rows);
    big.labels.resize(big.rows);
    for (std::size_t i = 0; i < big.rows; ++i) {
        big.features[i] = static_cast<double>(i);
        big.labels[i] = static_cast<int>(i % 10);
    }
    big.bound_lo = {0.0};
    big.bound_hi = {59999.0};

    auto [train, val] = data::holdout_split(big, 0.10, 31);
    CHECK(train.rows == 54000);
    CHECK(val.rows == 6000);

    std::vector<double> all;
    all.insert(all.end(), train.features.begin(), train.features.end());
    all.insert(all.end(), val.features.begin(), val.features.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < big.rows; ++i) CHECK(all[i] == static_cast<double>(i));

    auto [train2, val2] = data::holdout_split(big, 0.10, 31);
    CHECK(train.features == train2.features);
    CHECK(val.labels == val2.labels);

    auto [train3, val3] = data::holdout_split(big, 0.10, 32);
    CHECK(train.features != train3.features);

    CHECK_THROWS_AS(data::holdout_split(data::DatasetSplit{}, 0.10, 1), data_error);
    CHECK_THROWS_AS(data::holdout_split(big, 0.0, 1), data_error);
    CHECK_THROWS_AS(data::holdout_split(big, 1.0, 1), data_error);

    // ceil on a non-divisible size
    data::DatasetSplit odd = big;
    odd.rows = 11;
    odd.features.resize(11);
    odd.labels.resize(11);
    auto [t11, v11] = data::holdout_split(odd, 0.10, 1);
    CHECK(v11.rows == 2);  // ceil(1.1)
    CHECK(t11.rows == 9);
}

TEST_CASE("subsample is deterministic and preserves file order") {
    data::DatasetSplit split;
    split.rows = 100;
    split.cols = 1;
    split.features.resize(100);
    split.labels.resize(100);
    for (std::size_t i = 0; i < 100; ++i) split.features[i] = static_cast<double>(i);
    const data::DatasetSplit sub = data::subsample(split, 10, 5);
    CHECK(sub.rows == 10);
    CHECK(std::is_sorted(sub.features.begin(), sub.features.end()));
    const data::DatasetSplit sub2 = data::subsample(split, 10, 5);
    CHECK(sub.features == sub2.features);
    CHECK(data::subsample(split, 0, 5).rows == 100);
    CHECK(data::subsample(split, 200, 5).rows == 100);
}

TEST_CASE("spiral CSV export") {
    data::SpiralConfig config;
    config.points_per_class = 3;
    auto [train, test] = data::generate_spirals(config);
    const fs::path path = temp_dir() / "spiral.csv";
    data::write_spiral_csv(train, path.string());
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "x,y,label");
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 6);
}

TEST_CASE("dataset spec strings") {
    auto [train, test] = data::load_dataset_spec("spiral:7");
    CHECK(train.rows == 400);
    CHECK(test.cols == 2);
    CHECK_THROWS_AS(data::load_dataset_spec("nonsense"), data_error);
    CHECK_THROWS_AS(data::load_dataset_spec("spiral:notanumber"), data_error);
    CHECK_THROWS_AS(data::load_dataset_spec("mnist:/nonexistent_dir_xyz"), data_error);
}
