#ifndef FACEID_EVAL_HPP
#define FACEID_EVAL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "faceid/baselines.hpp"
#include "faceid/imageio.hpp"
#include "faceid/subspace.hpp"
#include "faceid/svm.hpp"

namespace faceid {

/// Stratified assignment of every sample to one of three folds.
struct SplitPlan {
    std::uint64_t seed = 0;
    std::vector<int> fold;  // per sample, in {0,1,2}
};

SplitPlan make_splits(const Dataset& data, std::uint64_t seed);

double accuracy(const std::vector<int>& predictions, const std::vector<int>& truths);

/// rates[n-1] = fraction of queries whose true label is in the top n of its
/// ranked list. Always non-decreasing.
struct CmsCurve {
    std::vector<double> rates;
};

CmsCurve cms_curve(const std::vector<std::vector<int>>& ranked_labels,
                   const std::vector<int>& truths, std::size_t max_rank);

enum class ClassifierKind { Svm, Knn, Mlp };

struct MethodSpec {
    ExtractorVariant variant = ExtractorVariant::PcaOnly;
    std::size_t d = 20;        // 2DPCA components
    std::size_t k_final = 0;   // second-stage / PCA dimension; 0 = 95% energy
    ClassifierKind classifier = ClassifierKind::Svm;
    KernelSpec kernel;
    std::vector<double> c_grid{10.0};
    std::vector<double> sigma_grid{1.0};
    double svm_tol = 1e-3;
    std::size_t knn_k = 1;
    MlpConfig mlp;
    std::uint64_t seed = 0;

    std::string name() const;
};

/// A trained classifier over extracted features, uniform across the three
/// classifier families. Ranked labels support CMS curves.
struct TrainedClassifier {
    ClassifierKind kind = ClassifierKind::Svm;
    std::size_t class_count = 0;
    OvaModel svm;
    KnnModel knn;
    MlpModel mlp;
    double selected_c = 0.0;      // grid-search pick, SVM only
    double selected_sigma = 0.0;

    int predict(const std::vector<double>& x) const;
    std::vector<int> ranked(const std::vector<double>& x) const;
};

/// Train the chosen classifier. For SVM with a multi-cell grid, a stratified
/// inner split of the training data selects (C, sigma) before retraining on
/// all of it.
TrainedClassifier train_classifier(const std::vector<std::vector<double>>& features,
                                   const std::vector<int>& labels, std::size_t class_count,
                                   const MethodSpec& spec);

/// One cross-validation round: extractor and classifier fitted on the two
/// training folds, evaluated on the held-out fold.
struct FoldRun {
    ExtractorPipeline pipeline;
    TrainedClassifier classifier;
    double accuracy = 0.0;
    std::vector<std::vector<int>> ranked;  // per held-out query
    std::vector<int> truths;
};

FoldRun run_fold(const Dataset& data, const SplitPlan& plan, int held, const MethodSpec& spec);

struct CvReport {
    std::vector<double> fold_accuracy;
    double mean_accuracy = 0.0;
    CmsCurve cms;  // pooled over held-out queries of all folds
    std::vector<double> fold_c, fold_sigma;  // SVM grid picks per fold
};

/// Three rounds: hold out each fold in turn, fit the extractor and classifier
/// on the remaining two folds only, evaluate on the held-out fold.
CvReport cross_validate(const Dataset& data, const SplitPlan& plan, const MethodSpec& spec);

std::string format_accuracy_csv(const std::string& method, const CvReport& report);
std::string format_cms_csv(const std::string& method, const CmsCurve& cms);

} // namespace faceid

#endif
