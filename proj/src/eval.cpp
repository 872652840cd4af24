#include "faceid/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace faceid {

SplitPlan make_splits(const Dataset& data, std::uint64_t seed) {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < data.samples.size(); ++i)
        by_class[data.samples[i].label].push_back(i);
    for (const auto& [label, idx] : by_class)
        if (idx.empty()) throw DegenerateData("make_splits: class without samples");

    SplitPlan plan;
    plan.seed = seed;
    plan.fold.assign(data.samples.size(), 0);
    std::mt19937_64 rng(seed);
    std::size_t class_pos = 0;
    for (auto& [label, idx] : by_class) {
        std::shuffle(idx.begin(), idx.end(), rng);
        // Rotate the starting fold per class so fold sizes stay balanced.
        const std::size_t start = class_pos % 3;
        for (std::size_t i = 0; i < idx.size(); ++i)
            plan.fold[idx[i]] = static_cast<int>((start + i) % 3);
        ++class_pos;
    }
    return plan;
}

double accuracy(const std::vector<int>& predictions, const std::vector<int>& truths) {
    if (predictions.size() != truths.size() || predictions.empty())
        throw ShapeMismatch("accuracy: predictions and truths must match and be nonempty");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        if (predictions[i] == truths[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

CmsCurve cms_curve(const std::vector<std::vector<int>>& ranked_labels,
                   const std::vector<int>& truths, std::size_t max_rank) {
    if (ranked_labels.size() != truths.size() || truths.empty())
        throw ShapeMismatch("cms_curve: ranked lists and truths must match and be nonempty");
    if (max_rank < 1) throw ConfigError("cms_curve: max_rank must be >= 1");
    CmsCurve curve;
    curve.rates.assign(max_rank, 0.0);
    for (std::size_t q = 0; q < truths.size(); ++q) {
        const auto& list = ranked_labels[q];
        for (std::size_t r = 0; r < max_rank; ++r) {
            if (r < list.size() && list[r] == truths[q]) {
                for (std::size_t n = r; n < max_rank; ++n) curve.rates[n] += 1.0;
                break;
            }
        }
    }
    for (double& v : curve.rates) v /= static_cast<double>(truths.size());
    return curve;
}

std::string MethodSpec::name() const {
    std::string extractor = variant == ExtractorVariant::PcaOnly ? "pca" : "wpca2d";
    std::string cls = classifier == ClassifierKind::Svm   ? "svm"
                      : classifier == ClassifierKind::Knn ? "knn"
                                                          : "mlp";
    return extractor + "+" + cls;
}

int TrainedClassifier::predict(const std::vector<double>& x) const {
    switch (kind) {
        case ClassifierKind::Svm:
            return classify_ova(svm, x);
        case ClassifierKind::Knn:
            return knn_classify(knn, x).label;
        case ClassifierKind::Mlp:
            return mlp_classify(mlp, x).label;
    }
    throw ConfigError("predict: unknown classifier kind");
}

std::vector<int> TrainedClassifier::ranked(const std::vector<double>& x) const {
    if (kind == ClassifierKind::Knn) return knn_classify(knn, x).ranked_labels;
    std::vector<double> scores = kind == ClassifierKind::Svm ? ova_scores(svm, x)
                                                             : mlp_classify(mlp, x).scores;
    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores[a] > scores[b]; });
    return order;
}

namespace {

// Stratified inner split for grid search: roughly one third of each class
// held out for validation, at least one sample of each class kept in training.
void inner_split(const std::vector<int>& labels, std::uint64_t seed,
                 std::vector<std::size_t>& train_idx, std::vector<std::size_t>& val_idx) {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    std::mt19937_64 rng(seed ^ 0xd1b54a32d192ed03ULL);
    for (auto& [label, idx] : by_class) {
        std::shuffle(idx.begin(), idx.end(), rng);
        std::size_t held = idx.size() >= 2 ? (idx.size() + 2) / 3 : 0;
        held = std::min(held, idx.size() - 1);
        for (std::size_t i = 0; i < idx.size(); ++i)
            (i < held ? val_idx : train_idx).push_back(idx[i]);
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());
}

} // namespace

TrainedClassifier train_classifier(const std::vector<std::vector<double>>& features,
                                   const std::vector<int>& labels, std::size_t class_count,
                                   const MethodSpec& spec) {
    if (features.size() != labels.size() || features.empty())
        throw ShapeMismatch("train_classifier: features and labels must match");

    TrainedClassifier out;
    out.kind = spec.classifier;
    out.class_count = class_count;

    switch (spec.classifier) {
        case ClassifierKind::Knn: {
            out.knn = make_knn(features, labels, spec.knn_k);
            break;
        }
        case ClassifierKind::Mlp: {
            std::vector<std::vector<double>> targets(labels.size(),
                                                     std::vector<double>(class_count, 0.0));
            for (std::size_t i = 0; i < labels.size(); ++i)
                targets[i][static_cast<std::size_t>(labels[i])] = 1.0;
            out.mlp = mlp_train(features, targets, spec.mlp, spec.seed);
            break;
        }
        case ClassifierKind::Svm: {
            KernelSpec kernel = spec.kernel;
            double c = spec.c_grid.empty() ? 1.0 : spec.c_grid.front();
            double sigma = spec.sigma_grid.empty() ? kernel.sigma : spec.sigma_grid.front();
            const bool needs_sigma = kernel.kind == KernelKind::Rbf;
            const std::size_t cells =
                spec.c_grid.size() * (needs_sigma ? spec.sigma_grid.size() : 1);
            if (cells > 1) {
                std::vector<std::size_t> tr, va;
                inner_split(labels, spec.seed, tr, va);
                std::vector<std::vector<double>> tx, vx;
                std::vector<int> ty, vy;
                for (std::size_t i : tr) {
                    tx.push_back(features[i]);
                    ty.push_back(labels[i]);
                }
                for (std::size_t i : va) {
                    vx.push_back(features[i]);
                    vy.push_back(labels[i]);
                }
                const GridResult g =
                    grid_search(tx, ty, class_count, vx, vy, kernel.kind, kernel.degree,
                                spec.c_grid, spec.sigma_grid, spec.svm_tol);
                c = g.c;
                sigma = g.sigma;
            }
            if (needs_sigma) kernel.sigma = sigma;
            out.svm = train_ova(features, labels, class_count, kernel, c, spec.svm_tol);
            out.selected_c = c;
            out.selected_sigma = needs_sigma ? sigma : 0.0;
            break;
        }
    }
    return out;
}

FoldRun run_fold(const Dataset& data, const SplitPlan& plan, int held, const MethodSpec& spec) {
    if (plan.fold.size() != data.samples.size())
        throw ShapeMismatch("run_fold: plan does not match dataset");
    if (held < 0 || held > 2) throw ConfigError("run_fold: held fold must be 0, 1 or 2");

    Dataset train;
    train.class_count = data.class_count;
    std::vector<std::size_t> test_idx;
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        if (plan.fold[i] == held)
            test_idx.push_back(i);
        else
            train.samples.push_back(data.samples[i]);
    }
    if (train.samples.empty() || test_idx.empty())
        throw DegenerateData("run_fold: empty fold " + std::to_string(held));

    FoldRun run;
    // Extractor sees training folds only.
    run.pipeline = fit_pipeline(train, spec.variant, spec.d, spec.k_final);

    std::vector<std::vector<double>> train_feats;
    std::vector<int> train_labels;
    for (const auto& s : train.samples) {
        train_feats.push_back(extract(run.pipeline, s.image).values);
        train_labels.push_back(s.label);
    }

    MethodSpec fold_spec = spec;
    fold_spec.seed = spec.seed * 1000003ULL + static_cast<std::uint64_t>(held);
    try {
        run.classifier = train_classifier(train_feats, train_labels, data.class_count, fold_spec);
    } catch (const Error& e) {
        throw Error(e.error_class(), "fold " + std::to_string(held) + ": " + e.what());
    }

    std::vector<int> preds;
    for (std::size_t i : test_idx) {
        const std::vector<double> f = extract(run.pipeline, data.samples[i].image).values;
        preds.push_back(run.classifier.predict(f));
        run.ranked.push_back(run.classifier.ranked(f));
        run.truths.push_back(data.samples[i].label);
    }
    run.accuracy = accuracy(preds, run.truths);
    return run;
}

CvReport cross_validate(const Dataset& data, const SplitPlan& plan, const MethodSpec& spec) {
    CvReport report;
    std::vector<std::vector<int>> pooled_ranked;
    std::vector<int> pooled_truth;

    for (int held = 0; held < 3; ++held) {
        const FoldRun run = run_fold(data, plan, held, spec);
        pooled_ranked.insert(pooled_ranked.end(), run.ranked.begin(), run.ranked.end());
        pooled_truth.insert(pooled_truth.end(), run.truths.begin(), run.truths.end());
        report.fold_accuracy.push_back(run.accuracy);
        report.fold_c.push_back(run.classifier.selected_c);
        report.fold_sigma.push_back(run.classifier.selected_sigma);
    }

    report.mean_accuracy =
        std::accumulate(report.fold_accuracy.begin(), report.fold_accuracy.end(), 0.0) / 3.0;
    report.cms = cms_curve(pooled_ranked, pooled_truth, data.class_count);
    return report;
}

std::string format_accuracy_csv(const std::string& method, const CvReport& report) {
    std::ostringstream out;
    out << "method,fold,accuracy\n";
    char buf[40];
    for (std::size_t f = 0; f < report.fold_accuracy.size(); ++f) {
        std::snprintf(buf, sizeof(buf), "%.17g", report.fold_accuracy[f]);
        out << method << "," << f << "," << buf << "\n";
    }
    std::snprintf(buf, sizeof(buf), "%.17g", report.mean_accuracy);
    out << method << ",mean," << buf << "\n";
    return out.str();
}

std::string format_cms_csv(const std::string& method, const CmsCurve& cms) {
    std::ostringstream out;
    out << "method,rank,rate\n";
    char buf[40];
    for (std::size_t r = 0; r < cms.rates.size(); ++r) {
        std::snprintf(buf, sizeof(buf), "%.17g", cms.rates[r]);
        out << method << "," << (r + 1) << "," << buf << "\n";
    }
    return out.str();
}

} // namespace faceid
