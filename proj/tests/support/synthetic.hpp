// Synthetic data generators shared by the test and acceptance suites.
#ifndef FACEID_TESTS_SYNTHETIC_HPP
#define FACEID_TESTS_SYNTHETIC_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "faceid/imageio.hpp"

namespace faceid::testsupport {

/// Gaussian blobs in feature space: `per_class` points around each of
/// `classes` well-separated centers.
inline void make_blobs(std::size_t classes, std::size_t per_class, std::size_t dim,
                       double separation, double noise, std::uint64_t seed,
                       std::vector<std::vector<double>>& xs, std::vector<int>& ys) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<std::vector<double>> centers(classes, std::vector<double>(dim));
    for (auto& c : centers)
        for (auto& v : c) v = gauss(rng) * separation;
    for (std::size_t k = 0; k < classes; ++k) {
        for (std::size_t i = 0; i < per_class; ++i) {
            std::vector<double> x(dim);
            for (std::size_t j = 0; j < dim; ++j) x[j] = centers[k][j] + gauss(rng) * noise;
            xs.push_back(std::move(x));
            ys.push_back(static_cast<int>(k));
        }
    }
}

/// Face-like identity images: each class is a smooth sum of random 2-D
/// Gaussian bumps; samples of a class add small noise and brightness jitter.
inline Dataset make_face_dataset(std::size_t classes, std::size_t per_class, std::size_t h,
                                 std::size_t w, std::uint64_t seed, double noise = 0.02) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Dataset ds;
    ds.class_count = classes;
    for (std::size_t k = 0; k < classes; ++k) {
        Matrix base(h, w);
        const int bumps = 4;
        for (int b = 0; b < bumps; ++b) {
            const double cy = uni(rng) * static_cast<double>(h - 1);
            const double cx = uni(rng) * static_cast<double>(w - 1);
            const double sy = 1.5 + uni(rng) * static_cast<double>(h) / 3.0;
            const double sx = 1.5 + uni(rng) * static_cast<double>(w) / 3.0;
            const double amp = 0.3 + 0.5 * uni(rng);
            for (std::size_t r = 0; r < h; ++r)
                for (std::size_t c = 0; c < w; ++c) {
                    const double dy = (static_cast<double>(r) - cy) / sy;
                    const double dx = (static_cast<double>(c) - cx) / sx;
                    base(r, c) += amp * std::exp(-0.5 * (dy * dy + dx * dx));
                }
        }
        for (std::size_t i = 0; i < per_class; ++i) {
            WeightedSample s;
            s.label = static_cast<int>(k);
            s.weight = 1.0;
            s.image.source_id = "synthetic/" + std::to_string(k) + "/" + std::to_string(i);
            s.image.pixels = Matrix(h, w);
            const double gain = 1.0 + 0.05 * gauss(rng);
            for (std::size_t p = 0; p < h * w; ++p) {
                const double v = gain * base.data()[p] + noise * gauss(rng);
                s.image.pixels.data()[p] = std::clamp(v, 0.0, 1.0);
            }
            ds.samples.push_back(std::move(s));
        }
    }
    return ds;
}

/// Write a dataset as PGM files plus a manifest under `dir`.
/// Returns the manifest path.
inline std::filesystem::path write_face_dataset(const std::filesystem::path& dir,
                                                const Dataset& ds, bool weight_column = false) {
    std::filesystem::create_directories(dir);
    const auto manifest = dir / "manifest.csv";
    std::ofstream out(manifest);
    out << "#dims=" << ds.samples.front().image.height() << ","
        << ds.samples.front().image.width() << "\n";
    out << (weight_column ? "path,label,weight\n" : "path,label\n");
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const std::string name = "img_" + std::to_string(i) + ".pgm";
        save_pgm(dir / name, ds.samples[i].image);
        out << name << "," << ds.samples[i].label;
        if (weight_column) out << "," << ds.samples[i].weight;
        out << "\n";
    }
    return manifest;
}

} // namespace faceid::testsupport

#endif
