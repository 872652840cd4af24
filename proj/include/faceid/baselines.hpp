#ifndef FACEID_BASELINES_HPP
#define FACEID_BASELINES_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "faceid/errors.hpp"

namespace faceid {

struct KnnModel {
    std::vector<std::vector<double>> gallery;
    std::vector<int> labels;
    std::size_t k = 1;
};

KnnModel make_knn(const std::vector<std::vector<double>>& gallery, const std::vector<int>& labels,
                  std::size_t k);

struct KnnResult {
    int label = -1;
    // Distinct labels ordered by their nearest gallery distance, ascending.
    std::vector<int> ranked_labels;
};

/// Majority vote among the k nearest gallery points by L2 distance.
/// Vote ties break to the tied label with the smaller nearest distance,
/// then to the smaller label index.
KnnResult knn_classify(const KnnModel& model, const std::vector<double>& x);

double sigmoid(double x);

struct MlpConfig {
    std::size_t hidden = 100;
    double eta = 0.5;
    std::size_t epochs = 300;
};

/// Three-layer perceptron, sigmoid activations on hidden and output layers.
struct MlpModel {
    std::size_t in = 0, hidden = 0, out = 0;
    std::vector<double> w1;  // hidden x in, row-major
    std::vector<double> b1;  // hidden
    std::vector<double> w2;  // out x hidden, row-major
    std::vector<double> b2;  // out
    double eta = 0.5;
};

MlpModel mlp_init(std::size_t in, std::size_t hidden, std::size_t out, double eta,
                  std::uint64_t seed);

std::vector<double> mlp_forward(const MlpModel& model, const std::vector<double>& x);

struct MlpGradient {
    std::vector<double> w1, b1, w2, b2;
};

/// Gradient of the squared error 1/2 ||f(x) - target||^2 by backpropagation.
MlpGradient mlp_gradient(const MlpModel& model, const std::vector<double>& x,
                         const std::vector<double>& target);

/// Squared-error SGD over per-epoch shuffles drawn from a seeded stream.
/// Deterministic given (data order, config, seed).
MlpModel mlp_train(const std::vector<std::vector<double>>& xs,
                   const std::vector<std::vector<double>>& targets, const MlpConfig& config,
                   std::uint64_t seed);

struct MlpResult {
    int label = -1;
    std::vector<double> scores;  // output activations
};

MlpResult mlp_classify(const MlpModel& model, const std::vector<double>& x);

std::string serialize_knn(const KnnModel& m);
KnnModel deserialize_knn(const std::string& text);
std::string serialize_mlp(const MlpModel& m);
MlpModel deserialize_mlp(const std::string& text);

} // namespace faceid

#endif
