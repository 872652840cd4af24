#ifndef FACEID_IMAGEIO_HPP
#define FACEID_IMAGEIO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "faceid/linalg.hpp"

namespace faceid {

/// Grayscale image with intensities normalized to [0,1].
struct GrayImage {
    Matrix pixels;
    std::string source_id;

    std::size_t height() const { return pixels.rows(); }
    std::size_t width() const { return pixels.cols(); }
};

struct WeightedSample {
    GrayImage image;
    int label = 0;
    double weight = 1.0;
};

struct Dataset {
    std::vector<WeightedSample> samples;
    std::size_t class_count = 0;
};

/// Parse a PGM image (P5 binary or P2 ASCII). 16-bit P5 samples are
/// big-endian. Pixels are divided by maxval.
GrayImage parse_pgm(const std::vector<std::uint8_t>& bytes, const std::string& source_id = "");

/// Write a binary (P5) PGM at maxval 255.
std::vector<std::uint8_t> write_pgm(const GrayImage& img);

GrayImage load_pgm(const std::filesystem::path& path);
void save_pgm(const std::filesystem::path& path, const GrayImage& img);

/// Bilinear resize with corner-aligned mapping:
/// src = dst * (n_src-1)/(n_dst-1) when n_dst > 1, else the source center.
GrayImage resize_bilinear(const GrayImage& img, std::size_t out_h, std::size_t out_w);

/// Load a dataset manifest: a `#dims=H,W` pragma line, a `path,label,weight`
/// header (weight column optional), then one row per image. Relative image
/// paths resolve against the manifest's directory.
Dataset load_manifest(const std::filesystem::path& path);

} // namespace faceid

#endif
