#ifndef FACEID_SVM_HPP
#define FACEID_SVM_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "faceid/linalg.hpp"

namespace faceid {

enum class KernelKind { Linear, Poly, Rbf };

struct KernelSpec {
    KernelKind kind = KernelKind::Rbf;
    unsigned degree = 3;  // poly
    double sigma = 1.0;   // rbf, K(x,x') = exp(-||x-x'||^2 / (2 sigma^2))
};

double kernel_eval(const KernelSpec& spec, const std::vector<double>& x,
                   const std::vector<double>& y);

/// Label-masked kernel matrix H_ij = y_i y_j K(x_i, x_j).
Matrix gram(const KernelSpec& spec, const std::vector<std::vector<double>>& xs,
            const std::vector<int>& ys);

/// Solve the dual QP  min 1/2 a'Ha - sum(a)  s.t.  0 <= a_i <= C,  sum(a_i y_i) = 0
/// by SMO with maximal-violating-pair selection. Box and equality constraints
/// hold exactly by construction of the pairwise update. max_iter = 0 means the
/// default cap of max(100 * N, 10000) pair updates.
std::vector<double> solve_dual(const Matrix& h, const std::vector<int>& ys, double c, double tol,
                               std::size_t max_iter = 0);

double compute_bias(const std::vector<double>& alphas, const std::vector<std::vector<double>>& xs,
                    const std::vector<int>& ys, const KernelSpec& spec, double c);

struct SvmBinaryModel {
    std::vector<double> alphas;  // all N multipliers
    std::vector<int> labels;     // all N labels in {-1,+1}
    std::vector<std::size_t> support_idx;
    std::vector<std::vector<double>> support_x;
    std::vector<double> support_coef;  // alpha_i * y_i for i in support_idx
    double bias = 0.0;
    KernelSpec kernel;
    double c = 1.0;
};

SvmBinaryModel train_binary(const std::vector<std::vector<double>>& xs,
                            const std::vector<int>& ys, const KernelSpec& spec, double c,
                            double tol = 1e-3);

/// Raw decision value sum_i alpha_i y_i K(x_i, x) + b.
double decision_value(const SvmBinaryModel& model, const std::vector<double>& x);

/// sign of the decision value; sign(0) = +1.
int predict_binary(const SvmBinaryModel& model, const std::vector<double>& x);

struct OvaModel {
    std::size_t class_count = 0;
    std::vector<SvmBinaryModel> models;  // one per class
    KernelSpec kernel;
    double c = 1.0;
};

/// One-vs-all training: class k against the rest, K binary problems over a
/// kernel matrix computed once and shared.
OvaModel train_ova(const std::vector<std::vector<double>>& xs, const std::vector<int>& labels,
                   std::size_t class_count, const KernelSpec& spec, double c, double tol = 1e-3);

std::vector<double> ova_scores(const OvaModel& model, const std::vector<double>& x);

/// argmax over the raw per-class scores; ties break to the lowest class index.
int classify_ova(const OvaModel& model, const std::vector<double>& x);

struct GridResult {
    double c = 0.0;
    double sigma = 0.0;
    double val_accuracy = 0.0;
};

/// Pick the (C, sigma) pair maximizing validation accuracy; ties break to
/// smaller C, then smaller sigma. Cells whose training fails are skipped.
GridResult grid_search(const std::vector<std::vector<double>>& train_x,
                       const std::vector<int>& train_y, std::size_t class_count,
                       const std::vector<std::vector<double>>& val_x,
                       const std::vector<int>& val_y, KernelKind kind, unsigned degree,
                       const std::vector<double>& c_grid, const std::vector<double>& sigma_grid,
                       double tol = 1e-3);

std::string serialize_svm_ova(const OvaModel& model);
OvaModel deserialize_svm_ova(const std::string& text);

} // namespace faceid

#endif
