#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "faceid/svm.hpp"
#include "support/qp_oracle.hpp"
#include "support/synthetic.hpp"

using namespace faceid;
using namespace faceid::testsupport;

namespace {

const KernelSpec kLinear{KernelKind::Linear, 3, 1.0};

SvmBinaryModel symmetric_two_point_model() {
    return train_binary({{-1.0}, {1.0}}, {-1, 1}, kLinear, 10.0);
}

// Largest KKT violation over all points, minimized over the bias choice.
double kkt_violation(const SvmBinaryModel& model, const std::vector<std::vector<double>>& xs,
                     const std::vector<int>& ys, double c) {
    const std::size_t n = xs.size();
    std::vector<double> f_nob(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            f_nob[i] += model.alphas[j] * static_cast<double>(ys[j]) *
                        kernel_eval(model.kernel, xs[j], xs[i]);

    auto violation_at = [&](double b) {
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double margin = static_cast<double>(ys[i]) * (f_nob[i] + b);
            const double a = model.alphas[i];
            if (a <= 1e-8 * c)
                worst = std::max(worst, 1.0 - margin);  // need margin >= 1
            else if (a >= c * (1.0 - 1e-8))
                worst = std::max(worst, margin - 1.0);  // need margin <= 1
            else
                worst = std::max(worst, std::abs(margin - 1.0));
        }
        return worst;
    };

    // KKT requires existence of a feasible bias; search a bracketed range.
    double best = violation_at(model.bias);
    double lo = model.bias - 5.0, hi = model.bias + 5.0;
    for (int it = 0; it < 200; ++it) {
        const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
        if (violation_at(m1) < violation_at(m2))
            hi = m2;
        else
            lo = m1;
    }
    return std::min(best, violation_at(0.5 * (lo + hi)));
}

} // namespace

TEST_CASE("kernel_eval") {
    CHECK(kernel_eval({KernelKind::Poly, 3, 1.0}, {1, 0}, {1, 1}) == doctest::Approx(8.0));
    CHECK(kernel_eval({KernelKind::Rbf, 3, 2.0}, {0.4, -1}, {0.4, -1}) == 1.0);
    CHECK(kernel_eval({KernelKind::Rbf, 3, 1.0}, {0.0}, {2.0}) ==
          doctest::Approx(std::exp(-2.0)));
    CHECK(kernel_eval(kLinear, {1, 2}, {3, 4}) == doctest::Approx(11.0));
    CHECK_THROWS_AS(kernel_eval(kLinear, {1.0}, {1, 2}), ShapeMismatch);
}

TEST_CASE("gram matrix") {
    SUBCASE("hand case with opposite labels") {
        const Matrix h = gram(kLinear, {{1.0}, {-1.0}}, {1, -1});
        CHECK(h(0, 0) == doctest::Approx(1.0));
        CHECK(h(0, 1) == doctest::Approx(1.0));
        CHECK(h(1, 0) == doctest::Approx(1.0));
        CHECK(h(1, 1) == doctest::Approx(1.0));
    }
    SUBCASE("single sample") {
        const Matrix h = gram({KernelKind::Poly, 2, 1.0}, {{2.0}}, {1});
        CHECK(h(0, 0) == doctest::Approx(25.0));
    }
    SUBCASE("rbf diagonal is exactly one") {
        std::mt19937_64 rng(1);
        std::uniform_real_distribution<double> uni(-1.0, 1.0);
        std::vector<std::vector<double>> xs(5, std::vector<double>(3));
        for (auto& x : xs)
            for (double& v : x) v = uni(rng);
        const Matrix h = gram({KernelKind::Rbf, 3, 0.7}, xs, {1, -1, 1, -1, 1});
        for (std::size_t i = 0; i < 5; ++i) CHECK(h(i, i) == 1.0);
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 5; ++j)
                CHECK(std::abs(h(i, j) - h(j, i)) <= 1e-10);
    }
}

TEST_CASE("solve_dual hand cases") {
    SUBCASE("symmetric two-point problem") {
        const Matrix h = gram(kLinear, {{-1.0}, {1.0}}, {-1, 1});
        const auto alpha = solve_dual(h, {-1, 1}, 10.0, 1e-6);
        CHECK(alpha[0] == doctest::Approx(0.5).epsilon(1e-4));
        CHECK(alpha[1] == doctest::Approx(0.5).epsilon(1e-4));
    }
    SUBCASE("tiny C boxes alpha") {
        const Matrix h = gram(kLinear, {{-1.0}, {1.0}}, {-1, 1});
        const auto alpha = solve_dual(h, {-1, 1}, 1e-9, 1e-3);
        for (double a : alpha) {
            CHECK(a >= 0.0);
            CHECK(a <= 1e-9);
        }
    }
    SUBCASE("single class rejected") {
        const Matrix h = gram(kLinear, {{1.0}, {2.0}}, {1, 1});
        CHECK_THROWS_AS(solve_dual(h, {1, 1}, 1.0, 1e-3), SingleClass);
    }
}

TEST_CASE("solve_dual XOR against the oracle") {
    const std::vector<std::vector<double>> xs = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};
    const std::vector<int> ys = {1, 1, -1, -1};
    const KernelSpec rbf{KernelKind::Rbf, 3, 1.0};
    const Matrix h = gram(rbf, xs, ys);
    const auto alpha = solve_dual(h, ys, 10.0, 1e-8);
    const auto oracle = qp_oracle(h, ys, 10.0, 200000);
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(alpha[i] - oracle[i]) <= 1e-4);
}

TEST_CASE("solve_dual oracle equivalence and feasibility on random problems") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 2 + rng() % 5;
        std::vector<std::vector<double>> xs(n, std::vector<double>(2));
        std::vector<int> ys(n);
        bool pos = false, neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            for (double& v : xs[i]) v = uni(rng);
            ys[i] = (rng() % 2) ? 1 : -1;
            (ys[i] > 0 ? pos : neg) = true;
        }
        if (!pos || !neg) continue;
        const double c = (trial % 2) ? 1.0 : 10.0;
        const KernelSpec spec = (trial % 3) ? KernelSpec{KernelKind::Rbf, 3, 1.0} : kLinear;
        const Matrix h = gram(spec, xs, ys);
        const auto alpha = solve_dual(h, ys, c, 1e-5);

        // Unconditional feasibility.
        double eq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(alpha[i] >= 0.0);
            CHECK(alpha[i] <= c);
            eq += alpha[i] * ys[i];
        }
        CHECK(std::abs(eq) <= 1e-12);

        const auto oracle = qp_oracle(h, ys, c);
        CHECK(dual_objective_max(h, alpha) >= dual_objective_max(h, oracle) - 1e-4);
    }
}

TEST_CASE("compute_bias hand cases") {
    SUBCASE("symmetric problem has zero bias") {
        const SvmBinaryModel m = symmetric_two_point_model();
        CHECK(m.bias == doctest::Approx(0.0).epsilon(1e-6));
    }
    SUBCASE("translated problem: f(x) = x - 1") {
        const SvmBinaryModel m = train_binary({{0.0}, {2.0}}, {-1, 1}, kLinear, 10.0, 1e-6);
        CHECK(m.bias == doctest::Approx(-1.0).epsilon(1e-4));
        CHECK(decision_value(m, {0.0}) == doctest::Approx(-1.0).epsilon(1e-4));
        CHECK(decision_value(m, {2.0}) == doctest::Approx(1.0).epsilon(1e-4));
    }
    SUBCASE("single support vector formula") {
        const std::vector<std::vector<double>> xs = {{1.0}, {3.0}};
        const std::vector<int> ys = {1, -1};
        std::vector<double> alpha = {0.4, 0.0};
        // Only index 0 clears the threshold; the average collapses to one term.
        const double b = compute_bias(alpha, xs, ys, kLinear, 10.0);
        CHECK(b == doctest::Approx(1.0 - 0.4 * kernel_eval(kLinear, xs[0], xs[0])));
    }
    SUBCASE("no support vectors") {
        std::vector<double> alpha = {0.0, 0.0};
        CHECK_THROWS_AS(compute_bias(alpha, {{0.0}, {1.0}}, {-1, 1}, kLinear, 1.0),
                        NoSupportVectors);
    }
}

TEST_CASE("predict_binary") {
    const SvmBinaryModel m = symmetric_two_point_model();
    SUBCASE("interior point") { CHECK(predict_binary(m, {0.7}) == 1); }
    SUBCASE("free support vectors sit on the margin") {
        for (std::size_t t = 0; t < m.support_idx.size(); ++t) {
            const std::size_t i = m.support_idx[t];
            const double a = m.alphas[i];
            if (a > 1e-8 * m.c && a < m.c * (1.0 - 1e-8)) {
                const double margin =
                    static_cast<double>(m.labels[i]) * decision_value(m, m.support_x[t]);
                CHECK(std::abs(margin - 1.0) <= 1e-3);
            }
        }
    }
    SUBCASE("score zero predicts +1") {
        SvmBinaryModel trivial;
        trivial.kernel = kLinear;
        trivial.bias = 0.0;
        CHECK(predict_binary(trivial, {123.0}) == 1);
    }
}

TEST_CASE("KKT conditions hold for trained models") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 4 + rng() % 8;
        std::vector<std::vector<double>> xs(n, std::vector<double>(3));
        std::vector<int> ys(n);
        bool pos = false, neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            for (double& v : xs[i]) v = uni(rng);
            ys[i] = (rng() % 2) ? 1 : -1;
            (ys[i] > 0 ? pos : neg) = true;
        }
        if (!pos || !neg) continue;
        const SvmBinaryModel m = train_binary(xs, ys, {KernelKind::Rbf, 3, 1.0}, 10.0, 1e-4);
        CHECK(kkt_violation(m, xs, ys, 10.0) <= 1e-3);
    }
}

TEST_CASE("label symmetry") {
    std::vector<std::vector<double>> xs;
    std::vector<int> labels;
    make_blobs(2, 8, 2, 3.0, 0.4, 7, xs, labels);
    std::vector<int> ys(labels.size()), flipped(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        ys[i] = labels[i] == 0 ? 1 : -1;
        flipped[i] = -ys[i];
    }
    const KernelSpec rbf{KernelKind::Rbf, 3, 2.0};
    const SvmBinaryModel a = train_binary(xs, ys, rbf, 10.0, 1e-6);
    const SvmBinaryModel b = train_binary(xs, flipped, rbf, 10.0, 1e-6);
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> uni(-4.0, 4.0);
    for (int q = 0; q < 20; ++q) {
        const std::vector<double> x = {uni(rng), uni(rng)};
        CHECK(std::abs(decision_value(a, x) + decision_value(b, x)) <= 1e-6);
        CHECK(predict_binary(a, x) == -predict_binary(b, x));
    }
}

TEST_CASE("one-vs-all") {
    SUBCASE("two classes agree with the binary rule") {
        std::vector<std::vector<double>> xs;
        std::vector<int> labels;
        make_blobs(2, 10, 2, 3.0, 0.5, 21, xs, labels);
        const KernelSpec rbf{KernelKind::Rbf, 3, 2.0};
        const OvaModel ova = train_ova(xs, labels, 2, rbf, 10.0, 1e-6);
        std::vector<int> ys(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) ys[i] = labels[i] == 0 ? 1 : -1;
        const SvmBinaryModel bin = train_binary(xs, ys, rbf, 10.0, 1e-6);
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> uni(-4.0, 4.0);
        for (int q = 0; q < 30; ++q) {
            const std::vector<double> x = {uni(rng), uni(rng)};
            const int from_binary = predict_binary(bin, x) == 1 ? 0 : 1;
            CHECK(classify_ova(ova, x) == from_binary);
        }
    }
    SUBCASE("three separable blobs reach perfect training accuracy") {
        std::vector<std::vector<double>> xs;
        std::vector<int> labels;
        make_blobs(3, 10, 2, 5.0, 0.3, 33, xs, labels);
        const OvaModel ova = train_ova(xs, labels, 3, {KernelKind::Rbf, 3, 2.0}, 10.0, 1e-4);
        for (std::size_t i = 0; i < xs.size(); ++i) CHECK(classify_ova(ova, xs[i]) == labels[i]);
    }
    SUBCASE("degenerate class with identical points still trains") {
        std::vector<std::vector<double>> xs = {{0, 0}, {0, 0}, {5, 5}, {6, 5}, {-5, 5}, {-6, 5}};
        std::vector<int> labels = {0, 0, 1, 1, 2, 2};
        const OvaModel ova = train_ova(xs, labels, 3, {KernelKind::Rbf, 3, 1.0}, 10.0, 1e-4);
        CHECK(classify_ova(ova, {0.0, 0.0}) == 0);
    }
    SUBCASE("argmax tie breaks to the lowest class") {
        OvaModel fake;
        fake.class_count = 2;
        SvmBinaryModel m;
        m.kernel = kLinear;
        m.bias = 0.5;
        fake.models.push_back(m);
        fake.models.push_back(m);
        CHECK(classify_ova(fake, {1.0}) == 0);
    }
    SUBCASE("scores argmax picks the max") {
        OvaModel fake;
        fake.class_count = 3;
        for (double b : {0.2, 0.9, -1.0}) {
            SvmBinaryModel m;
            m.kernel = kLinear;
            m.bias = b;
            fake.models.push_back(m);
        }
        CHECK(classify_ova(fake, {0.0}) == 1);
    }
    SUBCASE("errors are tagged with the class") {
        std::vector<std::vector<double>> xs = {{0.0}, {1.0}};
        CHECK_THROWS_AS(train_ova(xs, {0, 0}, 2, kLinear, 1.0, 1e-3), Error);
        CHECK_THROWS_AS(train_ova(xs, {0, 1}, 1, kLinear, 1.0, 1e-3), SingleClass);
    }
}

TEST_CASE("grid search") {
    std::vector<std::vector<double>> xs, vx;
    std::vector<int> ys, vy;
    make_blobs(3, 8, 2, 5.0, 0.3, 51, xs, ys);
    make_blobs(3, 4, 2, 5.0, 0.3, 51, vx, vy);  // same centers: same seed

    SUBCASE("single cell returns that cell") {
        const GridResult g = grid_search(xs, ys, 3, vx, vy, KernelKind::Rbf, 3, {2.0}, {1.5});
        CHECK(g.c == 2.0);
        CHECK(g.sigma == 1.5);
    }
    SUBCASE("perfect cell wins and ties break to smaller C") {
        const GridResult g =
            grid_search(xs, ys, 3, vx, vy, KernelKind::Rbf, 3, {1.0, 4.0, 16.0}, {2.0});
        CHECK(g.val_accuracy == doctest::Approx(1.0));
        CHECK(g.c == 1.0);  // all cells separate the blobs; smallest C preferred
    }
    SUBCASE("sigma tie-break after C") {
        const GridResult g =
            grid_search(xs, ys, 3, vx, vy, KernelKind::Rbf, 3, {4.0}, {1.0, 2.0});
        CHECK(g.c == 4.0);
        CHECK(g.sigma == 1.0);
    }
    SUBCASE("empty grid rejected") {
        CHECK_THROWS_AS(grid_search(xs, ys, 3, vx, vy, KernelKind::Rbf, 3, {}, {1.0}),
                        ConfigError);
    }
}

TEST_CASE("classify_ova argmax invariance under increasing transforms") {
    std::vector<std::vector<double>> xs;
    std::vector<int> labels;
    make_blobs(3, 6, 2, 4.0, 0.5, 63, xs, labels);
    const OvaModel ova = train_ova(xs, labels, 3, {KernelKind::Rbf, 3, 1.5}, 5.0, 1e-4);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> uni(-5.0, 5.0);
    for (int q = 0; q < 25; ++q) {
        const std::vector<double> x = {uni(rng), uni(rng)};
        const auto scores = ova_scores(ova, x);
        std::size_t argmax_raw = 0, argmax_tr = 0;
        for (std::size_t k = 1; k < scores.size(); ++k) {
            if (scores[k] > scores[argmax_raw]) argmax_raw = k;
            if (std::tanh(scores[k]) + 3.0 > std::tanh(scores[argmax_tr]) + 3.0) argmax_tr = k;
        }
        CHECK(argmax_raw == argmax_tr);
        CHECK(classify_ova(ova, x) == static_cast<int>(argmax_raw));
    }
}

TEST_CASE("svm model serialization round trip") {
    std::vector<std::vector<double>> xs;
    std::vector<int> labels;
    make_blobs(3, 6, 2, 4.0, 0.4, 71, xs, labels);
    const OvaModel ova = train_ova(xs, labels, 3, {KernelKind::Rbf, 3, 1.5}, 5.0, 1e-4);
    const std::string text = serialize_svm_ova(ova);
    const OvaModel back = deserialize_svm_ova(text);
    CHECK(serialize_svm_ova(back) == text);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> uni(-5.0, 5.0);
    for (int q = 0; q < 10; ++q) {
        const std::vector<double> x = {uni(rng), uni(rng)};
        CHECK(classify_ova(back, x) == classify_ova(ova, x));
    }
}
