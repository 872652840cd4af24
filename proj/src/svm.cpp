#include "faceid/svm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace faceid {

namespace {

constexpr double kTau = 1e-12;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void check_labels(const std::vector<int>& ys) {
    for (int y : ys)
        if (y != 1 && y != -1) throw ConfigError("svm: labels must be -1 or +1");
}

/// Plain kernel matrix K_ij = K(x_i, x_j), no label mask.
Matrix kernel_matrix(const KernelSpec& spec, const std::vector<std::vector<double>>& xs) {
    const std::size_t n = xs.size();
    Matrix k(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double v = kernel_eval(spec, xs[i], xs[j]);
            k(i, j) = v;
            k(j, i) = v;
        }
    return k;
}

/// SMO with maximal-violating-pair selection on Q_ij = y_i y_j K_ij.
std::vector<double> smo_on_kernel(const Matrix& k, const std::vector<int>& y, double c,
                                  double tol, std::size_t max_iter) {
    const std::size_t n = y.size();
    bool has_pos = false, has_neg = false;
    for (int v : y) (v > 0 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg)
        throw SingleClass("solve_dual: all labels identical, equality constraint forces alpha=0");
    if (c <= 0.0) throw ConfigError("solve_dual: C must be positive");
    if (tol <= 0.0) throw ConfigError("solve_dual: tol must be positive");
    if (max_iter == 0) max_iter = std::max<std::size_t>(100 * n, 10000);

    std::vector<double> alpha(n, 0.0);
    std::vector<double> g(n, -1.0);  // gradient of 1/2 a'Qa - e'a at a = 0

    auto q = [&](std::size_t i, std::size_t j) {
        return static_cast<double>(y[i] * y[j]) * k(i, j);
    };

    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        // Working set: i maximizes -y_i g_i over I_up, j minimizes over I_low.
        double g_max = -std::numeric_limits<double>::infinity();
        double g_min = std::numeric_limits<double>::infinity();
        std::size_t i_sel = n, j_sel = n;
        for (std::size_t t = 0; t < n; ++t) {
            const double v = -static_cast<double>(y[t]) * g[t];
            const bool in_up = (y[t] > 0 && alpha[t] < c) || (y[t] < 0 && alpha[t] > 0.0);
            const bool in_low = (y[t] < 0 && alpha[t] < c) || (y[t] > 0 && alpha[t] > 0.0);
            if (in_up && v > g_max) {
                g_max = v;
                i_sel = t;
            }
            if (in_low && v < g_min) {
                g_min = v;
                j_sel = t;
            }
        }
        if (i_sel == n || j_sel == n || g_max - g_min <= tol) return alpha;

        const std::size_t i = i_sel, j = j_sel;
        const double old_ai = alpha[i];
        const double old_aj = alpha[j];

        if (y[i] != y[j]) {
            double quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
            if (quad <= 0.0) quad = kTau;
            const double delta = (-g[i] - g[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0.0) {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
                if (alpha[i] > c) {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else {
                if (alpha[i] < 0.0) {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if (alpha[j] > c) {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            }
        } else {
            double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
            if (quad <= 0.0) quad = kTau;
            const double delta = (g[i] - g[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > c) {
                if (alpha[i] > c) {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
                if (alpha[j] > c) {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if (alpha[i] < 0.0) {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
        }

        const double dai = alpha[i] - old_ai;
        const double daj = alpha[j] - old_aj;
        if (dai == 0.0 && daj == 0.0) return alpha;  // stalled at the boundary
        for (std::size_t t = 0; t < n; ++t) g[t] += q(t, i) * dai + q(t, j) * daj;
    }
    throw NoConvergence("solve_dual: iteration cap reached before optimality gap <= tol");
}

double bias_from_kernel(const Matrix& k, const std::vector<double>& alpha,
                        const std::vector<int>& y, double c) {
    const double eps_sv = 1e-8 * c;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < alpha.size(); ++i)
        if (alpha[i] > eps_sv) idx.push_back(i);
    if (idx.empty()) throw NoSupportVectors("compute_bias: no multipliers above threshold");
    double b = 0.0;
    for (std::size_t i : idx) {
        double s = 0.0;
        for (std::size_t j : idx) s += alpha[j] * static_cast<double>(y[j]) * k(j, i);
        b += static_cast<double>(y[i]) - s;
    }
    return b / static_cast<double>(idx.size());
}

SvmBinaryModel make_binary_model(const std::vector<std::vector<double>>& xs,
                                 const std::vector<int>& ys, const KernelSpec& spec, double c,
                                 std::vector<double>&& alpha, double bias) {
    SvmBinaryModel m;
    m.labels = ys;
    m.kernel = spec;
    m.c = c;
    m.bias = bias;
    const double eps_sv = 1e-8 * c;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        if (alpha[i] > eps_sv) {
            m.support_idx.push_back(i);
            m.support_x.push_back(xs[i]);
            m.support_coef.push_back(alpha[i] * static_cast<double>(ys[i]));
        }
    }
    m.alphas = std::move(alpha);
    return m;
}

} // namespace

double kernel_eval(const KernelSpec& spec, const std::vector<double>& x,
                   const std::vector<double>& y) {
    if (x.size() != y.size()) throw ShapeMismatch("kernel_eval: vector length mismatch");
    switch (spec.kind) {
        case KernelKind::Linear:
            return dot(x, y);
        case KernelKind::Poly: {
            if (spec.degree < 1) throw ConfigError("kernel_eval: poly degree must be >= 1");
            return std::pow(dot(x, y) + 1.0, static_cast<double>(spec.degree));
        }
        case KernelKind::Rbf: {
            if (!(spec.sigma > 0.0)) throw ConfigError("kernel_eval: rbf sigma must be > 0");
            return std::exp(-squared_distance(x, y) / (2.0 * spec.sigma * spec.sigma));
        }
    }
    throw ConfigError("kernel_eval: unknown kernel kind");
}

Matrix gram(const KernelSpec& spec, const std::vector<std::vector<double>>& xs,
            const std::vector<int>& ys) {
    if (xs.size() != ys.size() || xs.empty()) throw ShapeMismatch("gram: |xs| must equal |ys| >= 1");
    check_labels(ys);
    Matrix h = kernel_matrix(spec, xs);
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = 0; j < xs.size(); ++j)
            h(i, j) *= static_cast<double>(ys[i] * ys[j]);
    return h;
}

std::vector<double> solve_dual(const Matrix& h, const std::vector<int>& ys, double c, double tol,
                               std::size_t max_iter) {
    if (h.rows() != h.cols() || h.rows() != ys.size())
        throw ShapeMismatch("solve_dual: H must be N x N matching labels");
    check_labels(ys);
    // Recover the unmasked kernel matrix: K_ij = H_ij y_i y_j.
    Matrix k = h;
    for (std::size_t i = 0; i < ys.size(); ++i)
        for (std::size_t j = 0; j < ys.size(); ++j)
            k(i, j) *= static_cast<double>(ys[i] * ys[j]);
    return smo_on_kernel(k, ys, c, tol, max_iter);
}

double compute_bias(const std::vector<double>& alphas, const std::vector<std::vector<double>>& xs,
                    const std::vector<int>& ys, const KernelSpec& spec, double c) {
    if (alphas.size() != xs.size() || xs.size() != ys.size())
        throw ShapeMismatch("compute_bias: size mismatch");
    return bias_from_kernel(kernel_matrix(spec, xs), alphas, ys, c);
}

SvmBinaryModel train_binary(const std::vector<std::vector<double>>& xs,
                            const std::vector<int>& ys, const KernelSpec& spec, double c,
                            double tol) {
    if (xs.size() != ys.size() || xs.empty())
        throw ShapeMismatch("train_binary: |xs| must equal |ys| >= 1");
    check_labels(ys);
    const Matrix k = kernel_matrix(spec, xs);
    std::vector<double> alpha = smo_on_kernel(k, ys, c, tol, 0);
    const double bias = bias_from_kernel(k, alpha, ys, c);
    return make_binary_model(xs, ys, spec, c, std::move(alpha), bias);
}

double decision_value(const SvmBinaryModel& model, const std::vector<double>& x) {
    double s = model.bias;
    for (std::size_t i = 0; i < model.support_x.size(); ++i)
        s += model.support_coef[i] * kernel_eval(model.kernel, model.support_x[i], x);
    return s;
}

int predict_binary(const SvmBinaryModel& model, const std::vector<double>& x) {
    return decision_value(model, x) >= 0.0 ? 1 : -1;
}

OvaModel train_ova(const std::vector<std::vector<double>>& xs, const std::vector<int>& labels,
                   std::size_t class_count, const KernelSpec& spec, double c, double tol) {
    if (xs.size() != labels.size() || xs.empty())
        throw ShapeMismatch("train_ova: |xs| must equal |labels| >= 1");
    if (class_count < 2) throw SingleClass("train_ova: need >= 2 classes");
    std::vector<std::size_t> per_class(class_count, 0);
    for (int l : labels) {
        if (l < 0 || static_cast<std::size_t>(l) >= class_count)
            throw UnknownLabel("train_ova: label out of range: " + std::to_string(l));
        ++per_class[static_cast<std::size_t>(l)];
    }
    for (std::size_t k = 0; k < class_count; ++k)
        if (per_class[k] == 0)
            throw DegenerateData("train_ova: class " + std::to_string(k) + " has no samples");

    const Matrix km = kernel_matrix(spec, xs);
    OvaModel ova;
    ova.class_count = class_count;
    ova.kernel = spec;
    ova.c = c;
    std::vector<int> yk(labels.size());
    for (std::size_t k = 0; k < class_count; ++k) {
        for (std::size_t i = 0; i < labels.size(); ++i)
            yk[i] = labels[i] == static_cast<int>(k) ? 1 : -1;
        try {
            std::vector<double> alpha = smo_on_kernel(km, yk, c, tol, 0);
            const double bias = bias_from_kernel(km, alpha, yk, c);
            ova.models.push_back(make_binary_model(xs, yk, spec, c, std::move(alpha), bias));
        } catch (const Error& e) {
            throw Error(e.error_class(),
                        "train_ova: class " + std::to_string(k) + ": " + e.what());
        }
    }
    return ova;
}

std::vector<double> ova_scores(const OvaModel& model, const std::vector<double>& x) {
    std::vector<double> scores;
    scores.reserve(model.models.size());
    for (const auto& m : model.models) scores.push_back(decision_value(m, x));
    return scores;
}

int classify_ova(const OvaModel& model, const std::vector<double>& x) {
    const std::vector<double> scores = ova_scores(model, x);
    std::size_t best = 0;
    for (std::size_t k = 1; k < scores.size(); ++k)
        if (scores[k] > scores[best]) best = k;
    return static_cast<int>(best);
}

GridResult grid_search(const std::vector<std::vector<double>>& train_x,
                       const std::vector<int>& train_y, std::size_t class_count,
                       const std::vector<std::vector<double>>& val_x,
                       const std::vector<int>& val_y, KernelKind kind, unsigned degree,
                       const std::vector<double>& c_grid, const std::vector<double>& sigma_grid,
                       double tol) {
    if (c_grid.empty()) throw ConfigError("grid_search: empty C grid");
    const bool uses_sigma = kind == KernelKind::Rbf;
    const std::vector<double> sigmas = uses_sigma ? sigma_grid : std::vector<double>{0.0};
    if (uses_sigma && sigma_grid.empty()) throw ConfigError("grid_search: empty sigma grid");

    // Cache the geometry once; kernels per cell are cheap transforms of it.
    const std::size_t n = train_x.size();
    const std::size_t nv = val_x.size();
    Matrix base_tt(n, n);   // dot products or squared distances, train x train
    Matrix base_tv(n, nv);  // train x validation
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double v = uses_sigma ? squared_distance(train_x[i], train_x[j])
                                        : dot(train_x[i], train_x[j]);
            base_tt(i, j) = v;
            base_tt(j, i) = v;
        }
        for (std::size_t j = 0; j < nv; ++j)
            base_tv(i, j) = uses_sigma ? squared_distance(train_x[i], val_x[j])
                                       : dot(train_x[i], val_x[j]);
    }

    auto apply_kernel = [&](const Matrix& base, double sigma) {
        Matrix k = base;
        for (double& v : k.values()) {
            switch (kind) {
                case KernelKind::Linear:
                    break;
                case KernelKind::Poly:
                    v = std::pow(v + 1.0, static_cast<double>(degree));
                    break;
                case KernelKind::Rbf:
                    v = std::exp(-v / (2.0 * sigma * sigma));
                    break;
            }
        }
        return k;
    };

    GridResult best;
    bool found = false;
    std::string last_error = "no cells attempted";
    std::vector<int> yk(n);

    for (double sigma : sigmas) {
        Matrix ktt, ktv;
        try {
            if (uses_sigma && !(sigma > 0.0)) throw ConfigError("grid_search: sigma must be > 0");
            ktt = apply_kernel(base_tt, sigma);
            ktv = apply_kernel(base_tv, sigma);
        } catch (const Error& e) {
            last_error = e.what();
            continue;
        }
        for (double c : c_grid) {
            try {
                // Train all K one-vs-all problems over the shared kernel.
                std::vector<std::vector<double>> class_alpha(class_count);
                std::vector<double> class_bias(class_count);
                for (std::size_t k = 0; k < class_count; ++k) {
                    for (std::size_t i = 0; i < n; ++i)
                        yk[i] = train_y[i] == static_cast<int>(k) ? 1 : -1;
                    class_alpha[k] = smo_on_kernel(ktt, yk, c, tol, 0);
                    class_bias[k] = bias_from_kernel(ktt, class_alpha[k], yk, c);
                }
                std::size_t correct = 0;
                for (std::size_t qi = 0; qi < nv; ++qi) {
                    std::size_t argmax = 0;
                    double best_score = -std::numeric_limits<double>::infinity();
                    for (std::size_t k = 0; k < class_count; ++k) {
                        double s = class_bias[k];
                        for (std::size_t i = 0; i < n; ++i) {
                            const double a = class_alpha[k][i];
                            if (a <= 1e-8 * c) continue;
                            const double yi = train_y[i] == static_cast<int>(k) ? 1.0 : -1.0;
                            s += a * yi * ktv(i, qi);
                        }
                        if (s > best_score) {
                            best_score = s;
                            argmax = k;
                        }
                    }
                    if (static_cast<int>(argmax) == val_y[qi]) ++correct;
                }
                const double acc = nv ? static_cast<double>(correct) / static_cast<double>(nv)
                                      : 0.0;
                const bool better =
                    !found || acc > best.val_accuracy ||
                    (acc == best.val_accuracy &&
                     (c < best.c || (c == best.c && uses_sigma && sigma < best.sigma)));
                if (better) {
                    best = GridResult{c, sigma, acc};
                    found = true;
                }
            } catch (const Error& e) {
                last_error = e.what();
            }
        }
    }
    if (!found) throw NoConvergence("grid_search: every cell failed; last error: " + last_error);
    return best;
}

std::string serialize_svm_ova(const OvaModel& model) {
    std::ostringstream out;
    out << "SVM_OVA v1\n";
    const char* kind = model.kernel.kind == KernelKind::Linear ? "linear"
                       : model.kernel.kind == KernelKind::Poly ? "poly"
                                                               : "rbf";
    out << kind << " " << model.kernel.degree << " " << fmt(model.kernel.sigma) << "\n";
    const std::size_t dim =
        model.models.empty() || model.models.front().support_x.empty()
            ? 0
            : model.models.front().support_x.front().size();
    out << fmt(model.c) << " " << model.class_count << " " << dim << "\n";
    for (const auto& m : model.models) {
        out << m.support_x.size() << " " << fmt(m.bias) << "\n";
        for (std::size_t i = 0; i < m.support_x.size(); ++i) {
            out << fmt(m.support_coef[i]);
            for (double v : m.support_x[i]) out << " " << fmt(v);
            out << "\n";
        }
    }
    return out.str();
}

OvaModel deserialize_svm_ova(const std::string& text) {
    std::istringstream in(text);
    std::string tok;
    if (!(in >> tok) || tok != "SVM_OVA") throw ParseError("svm model: bad magic");
    if (!(in >> tok) || tok != "v1") throw ParseError("svm model: unsupported version");

    OvaModel model;
    std::string kind;
    unsigned degree = 0;
    double sigma = 0.0;
    if (!(in >> kind >> degree >> sigma)) throw ParseError("svm model: bad kernel line");
    if (kind == "linear")
        model.kernel.kind = KernelKind::Linear;
    else if (kind == "poly")
        model.kernel.kind = KernelKind::Poly;
    else if (kind == "rbf")
        model.kernel.kind = KernelKind::Rbf;
    else
        throw ParseError("svm model: unknown kernel \"" + kind + "\"");
    model.kernel.degree = degree;
    model.kernel.sigma = sigma;

    std::size_t dim = 0;
    if (!(in >> model.c >> model.class_count >> dim))
        throw ParseError("svm model: bad header line");
    for (std::size_t k = 0; k < model.class_count; ++k) {
        std::size_t n_sv = 0;
        SvmBinaryModel m;
        m.kernel = model.kernel;
        m.c = model.c;
        if (!(in >> n_sv >> m.bias)) throw ParseError("svm model: truncated class block");
        for (std::size_t i = 0; i < n_sv; ++i) {
            double coef = 0.0;
            if (!(in >> coef)) throw ParseError("svm model: truncated support vector");
            std::vector<double> x(dim);
            for (double& v : x)
                if (!(in >> v)) throw ParseError("svm model: truncated support vector");
            m.support_coef.push_back(coef);
            m.support_x.push_back(std::move(x));
        }
        model.models.push_back(std::move(m));
    }
    return model;
}

} // namespace faceid
