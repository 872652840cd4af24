#ifndef FACEID_SUBSPACE_HPP
#define FACEID_SUBSPACE_HPP

#include <optional>
#include <string>
#include <vector>

#include "faceid/imageio.hpp"
#include "faceid/linalg.hpp"

namespace faceid {

/// Weighted 2D PCA model: weighted mean image plus the leading
/// eigenpairs of the weighted image scatter matrix.
struct Wpca2dModel {
    Matrix mean_image;            // h x w
    Matrix eigvecs;               // w x d, orthonormal columns
    std::vector<double> eigvals;  // d values, descending
    std::size_t d = 0;
    bool rank_deficient = false;  // lambda_d <= 1e-12 * lambda_1
};

struct PcaModel {
    std::vector<double> mean;     // length m
    Matrix basis;                 // m x k, orthonormal columns
    std::vector<double> eigvals;  // k values, descending
    std::size_t k = 0;
};

/// Projection of one image onto a Wpca2dModel: column k is (A - mean) * Omega_k.
struct FeatureMatrix {
    Matrix values;  // h x d
};

struct FeatureVector {
    std::vector<double> values;
    std::string extractor_id;
};

enum class ExtractorVariant { PcaOnly, Wpca2dThenPca };

struct ExtractorPipeline {
    ExtractorVariant variant = ExtractorVariant::PcaOnly;
    std::optional<Wpca2dModel> wpca2d;
    PcaModel pca;
};

Wpca2dModel fit_wpca2d(const Dataset& data, std::size_t d);
FeatureMatrix project_2dpca(const Wpca2dModel& model, const GrayImage& img);

PcaModel fit_pca(const std::vector<std::vector<double>>& vectors, std::size_t k);
FeatureVector project_pca(const PcaModel& model, const std::vector<double>& x);
std::vector<double> reconstruct_pca(const PcaModel& model, const FeatureVector& f);

/// Smallest k whose leading eigenvalues capture at least `energy` of the total.
std::size_t choose_k_for_energy(const std::vector<double>& eigvals, double energy);

std::vector<double> flatten_row_major(const Matrix& m);
std::vector<double> flatten_column_major(const Matrix& m);

FeatureVector extract(const ExtractorPipeline& pipeline, const GrayImage& img);

/// Fit a full pipeline on a dataset. For Wpca2dThenPca the second-stage PCA
/// is fit unweighted on the flattened feature matrices of the training set.
/// k_final = 0 selects the smallest k capturing >= 95% of second-stage variance.
ExtractorPipeline fit_pipeline(const Dataset& data, ExtractorVariant variant, std::size_t d,
                               std::size_t k_final);

// Versioned textual serialization (17 significant digits, bit-exact round trip).
std::string serialize_wpca2d(const Wpca2dModel& m);
Wpca2dModel deserialize_wpca2d(const std::string& text);
std::string serialize_pca(const PcaModel& m);
PcaModel deserialize_pca(const std::string& text);
std::string serialize_pipeline(const ExtractorPipeline& p);
ExtractorPipeline deserialize_pipeline(const std::string& text);

} // namespace faceid

#endif
