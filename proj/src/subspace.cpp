#include "faceid/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace faceid {

namespace {

// Kahan compensated accumulator.
struct Accum {
    double sum = 0.0;
    double comp = 0.0;

    void add(double v) {
        const double y = v - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void expect_token(std::istream& in, const std::string& want, const std::string& ctx) {
    std::string tok;
    if (!(in >> tok) || tok != want)
        throw ParseError(ctx + ": expected \"" + want + "\", got \"" + tok + "\"");
}

double read_real(std::istream& in, const std::string& ctx) {
    double v = 0.0;
    if (!(in >> v)) throw ParseError(ctx + ": truncated numeric data");
    return v;
}

std::size_t read_count(std::istream& in, const std::string& ctx) {
    long long v = 0;
    if (!(in >> v) || v < 0) throw ParseError(ctx + ": bad count");
    return static_cast<std::size_t>(v);
}

} // namespace

Wpca2dModel fit_wpca2d(const Dataset& data, std::size_t d) {
    if (data.samples.empty()) throw DegenerateData("fit_wpca2d: empty dataset");
    const std::size_t h = data.samples.front().image.height();
    const std::size_t w = data.samples.front().image.width();
    for (const auto& s : data.samples)
        if (s.image.height() != h || s.image.width() != w)
            throw InconsistentDims("fit_wpca2d: images differ in size");
    if (d < 1 || d > w)
        throw KTooLarge("fit_wpca2d: d must be in [1, image width " + std::to_string(w) + "]");

    std::size_t positive = 0;
    double wsum = 0.0;
    for (const auto& s : data.samples) {
        if (s.weight > 0.0) ++positive;
        wsum += s.weight;
    }
    if (positive < 2) throw DegenerateData("fit_wpca2d: need >= 2 samples with positive weight");

    // Weighted mean image.
    Matrix mean(h, w);
    {
        std::vector<Accum> acc(h * w);
        for (const auto& s : data.samples) {
            if (s.weight == 0.0) continue;
            const double* px = s.image.pixels.data();
            for (std::size_t i = 0; i < h * w; ++i) acc[i].add(s.weight * px[i]);
        }
        for (std::size_t i = 0; i < h * w; ++i) mean.data()[i] = acc[i].sum / wsum;
    }

    // Weighted image scatter G = sum_i w_i D_i^T D_i / sum_i w_i, D_i = A_i - mean.
    Matrix g(w, w);
    {
        std::vector<Accum> acc(w * w);
        Matrix diff(h, w);
        for (const auto& s : data.samples) {
            if (s.weight == 0.0) continue;
            for (std::size_t i = 0; i < h * w; ++i)
                diff.data()[i] = s.image.pixels.data()[i] - mean.data()[i];
            for (std::size_t a = 0; a < w; ++a) {
                for (std::size_t b = a; b < w; ++b) {
                    double dotv = 0.0;
                    for (std::size_t r = 0; r < h; ++r) dotv += diff(r, a) * diff(r, b);
                    acc[a * w + b].add(s.weight * dotv);
                }
            }
        }
        for (std::size_t a = 0; a < w; ++a)
            for (std::size_t b = a; b < w; ++b) {
                const double v = acc[a * w + b].sum / wsum;
                g(a, b) = v;
                g(b, a) = v;
            }
    }

    const EigenResult eig = sym_eig(g, 1e-12);
    Wpca2dModel model;
    model.mean_image = std::move(mean);
    model.d = d;
    model.eigvals.assign(eig.eigenvalues.begin(), eig.eigenvalues.begin() + d);
    model.eigvecs = Matrix(w, d);
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t i = 0; i < w; ++i) model.eigvecs(i, j) = eig.eigenvectors(i, j);
    model.rank_deficient = model.eigvals.back() <= 1e-12 * std::max(eig.eigenvalues.front(), 0.0);
    return model;
}

FeatureMatrix project_2dpca(const Wpca2dModel& model, const GrayImage& img) {
    if (img.height() != model.mean_image.rows() || img.width() != model.mean_image.cols())
        throw ShapeMismatch("project_2dpca: image dims do not match model");
    const std::size_t h = img.height();
    const std::size_t w = img.width();
    FeatureMatrix fm;
    fm.values = Matrix(h, model.d);
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t j = 0; j < model.d; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < w; ++c)
                s += (img.pixels(r, c) - model.mean_image(r, c)) * model.eigvecs(c, j);
            fm.values(r, j) = s;
        }
    }
    return fm;
}

namespace {

struct FullPca {
    std::vector<double> mean;
    Matrix basis;                 // m x r
    std::vector<double> eigvals;  // r values, descending (full available spectrum)
};

FullPca fit_pca_full(const std::vector<std::vector<double>>& vectors) {
    const std::size_t n = vectors.size();
    if (n < 2) throw DegenerateData("fit_pca: need >= 2 vectors");
    const std::size_t m = vectors.front().size();
    for (const auto& v : vectors)
        if (v.size() != m) throw InconsistentDims("fit_pca: vectors differ in length");

    FullPca out;
    out.mean.assign(m, 0.0);
    for (const auto& v : vectors)
        for (std::size_t i = 0; i < m; ++i) out.mean[i] += v[i];
    for (std::size_t i = 0; i < m; ++i) out.mean[i] /= static_cast<double>(n);

    if (m <= n) {
        // Direct covariance path.
        Matrix cov(m, m);
        std::vector<double> diff(m);
        for (const auto& v : vectors) {
            for (std::size_t i = 0; i < m; ++i) diff[i] = v[i] - out.mean[i];
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = i; j < m; ++j) cov(i, j) += diff[i] * diff[j];
        }
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i; j < m; ++j) {
                cov(i, j) /= static_cast<double>(n);
                cov(j, i) = cov(i, j);
            }
        const EigenResult eig = sym_eig(cov, 1e-12);
        out.basis = eig.eigenvectors;
        out.eigvals = eig.eigenvalues;
    } else {
        // Snapshot (Gram) path: eigenvectors of the N x N inner-product matrix.
        Matrix gram(n, n);
        std::vector<std::vector<double>> centered(n, std::vector<double>(m));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) centered[i][j] = vectors[i][j] - out.mean[j];
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) {
                const double v = dot(centered[i], centered[j]) / static_cast<double>(n);
                gram(i, j) = v;
                gram(j, i) = v;
            }
        const EigenResult eig = sym_eig(gram, 1e-12);
        out.basis = Matrix(m, n);
        out.eigvals = eig.eigenvalues;
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<double> v(m, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const double u = eig.eigenvectors(i, j);
                if (u == 0.0) continue;
                for (std::size_t p = 0; p < m; ++p) v[p] += u * centered[i][p];
            }
            double norm = std::sqrt(dot(v, v));
            if (norm < 1e-300) norm = 1.0;  // zero-variance direction, column stays ~0
            // Sign convention matches sym_eig so both paths serialize identically.
            double sign = 1.0;
            for (std::size_t p = 0; p < m; ++p) {
                if (std::abs(v[p] / norm) > 1e-12) {
                    sign = v[p] >= 0.0 ? 1.0 : -1.0;
                    break;
                }
            }
            for (std::size_t p = 0; p < m; ++p) out.basis(p, j) = sign * v[p] / norm;
        }
    }
    return out;
}

PcaModel truncate_pca(FullPca&& full, std::size_t k) {
    PcaModel model;
    model.mean = std::move(full.mean);
    model.k = k;
    model.eigvals.assign(full.eigvals.begin(), full.eigvals.begin() + k);
    model.basis = Matrix(model.mean.size(), k);
    for (std::size_t i = 0; i < model.mean.size(); ++i)
        for (std::size_t j = 0; j < k; ++j) model.basis(i, j) = full.basis(i, j);
    return model;
}

} // namespace

PcaModel fit_pca(const std::vector<std::vector<double>>& vectors, std::size_t k) {
    const std::size_t n = vectors.size();
    if (n < 2) throw DegenerateData("fit_pca: need >= 2 vectors");
    const std::size_t m = vectors.front().size();
    const std::size_t k_max = std::min(m, n - 1);
    if (k < 1 || k > k_max)
        throw KTooLarge("fit_pca: k must be in [1, min(m, N-1) = " + std::to_string(k_max) + "]");
    return truncate_pca(fit_pca_full(vectors), k);
}

FeatureVector project_pca(const PcaModel& model, const std::vector<double>& x) {
    if (x.size() != model.mean.size()) throw ShapeMismatch("project_pca: vector length mismatch");
    FeatureVector f;
    f.values.resize(model.k);
    for (std::size_t j = 0; j < model.k; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            s += model.basis(i, j) * (x[i] - model.mean[i]);
        f.values[j] = s;
    }
    return f;
}

std::vector<double> reconstruct_pca(const PcaModel& model, const FeatureVector& f) {
    if (f.values.size() != model.k) throw ShapeMismatch("reconstruct_pca: feature length mismatch");
    std::vector<double> x = model.mean;
    for (std::size_t j = 0; j < model.k; ++j) {
        const double c = f.values[j];
        if (c == 0.0) continue;
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += model.basis(i, j) * c;
    }
    return x;
}

std::size_t choose_k_for_energy(const std::vector<double>& eigvals, double energy) {
    double total = 0.0;
    for (double v : eigvals) total += std::max(v, 0.0);
    if (total <= 0.0) return 1;
    double run = 0.0;
    for (std::size_t i = 0; i < eigvals.size(); ++i) {
        run += std::max(eigvals[i], 0.0);
        if (run >= energy * total) return i + 1;
    }
    return eigvals.size();
}

std::vector<double> flatten_row_major(const Matrix& m) { return m.values(); }

std::vector<double> flatten_column_major(const Matrix& m) {
    std::vector<double> out;
    out.reserve(m.size());
    for (std::size_t j = 0; j < m.cols(); ++j)
        for (std::size_t i = 0; i < m.rows(); ++i) out.push_back(m(i, j));
    return out;
}

FeatureVector extract(const ExtractorPipeline& pipeline, const GrayImage& img) {
    FeatureVector f;
    if (pipeline.variant == ExtractorVariant::PcaOnly) {
        f = project_pca(pipeline.pca, flatten_row_major(img.pixels));
        f.extractor_id = "pca";
    } else {
        if (!pipeline.wpca2d) throw ConfigError("extract: pipeline missing 2DPCA stage");
        const FeatureMatrix fm = project_2dpca(*pipeline.wpca2d, img);
        f = project_pca(pipeline.pca, flatten_column_major(fm.values));
        f.extractor_id = "wpca2d+pca";
    }
    return f;
}

ExtractorPipeline fit_pipeline(const Dataset& data, ExtractorVariant variant, std::size_t d,
                               std::size_t k_final) {
    ExtractorPipeline pipe;
    pipe.variant = variant;

    std::vector<std::vector<double>> stage2;
    stage2.reserve(data.samples.size());
    if (variant == ExtractorVariant::PcaOnly) {
        for (const auto& s : data.samples) stage2.push_back(flatten_row_major(s.image.pixels));
    } else {
        pipe.wpca2d = fit_wpca2d(data, d);
        for (const auto& s : data.samples)
            stage2.push_back(flatten_column_major(project_2dpca(*pipe.wpca2d, s.image).values));
    }

    FullPca full = fit_pca_full(stage2);
    const std::size_t k_max = std::min(stage2.front().size(), stage2.size() - 1);
    std::size_t k = k_final;
    if (k == 0) k = std::min(choose_k_for_energy(full.eigvals, 0.95), k_max);
    if (k > k_max)
        throw KTooLarge("fit_pipeline: k_final exceeds min(m, N-1) = " + std::to_string(k_max));
    pipe.pca = truncate_pca(std::move(full), k);
    return pipe;
}

// ---------------------------------------------------------------------------
// Serialization

std::string serialize_wpca2d(const Wpca2dModel& m) {
    std::ostringstream out;
    out << "WPCA2D v1\n";
    out << m.mean_image.rows() << " " << m.mean_image.cols() << " " << m.d << " "
        << (m.rank_deficient ? 1 : 0) << "\n";
    for (std::size_t j = 0; j < m.d; ++j) out << (j ? " " : "") << fmt(m.eigvals[j]);
    out << "\n";
    for (std::size_t i = 0; i < m.mean_image.rows(); ++i) {
        for (std::size_t j = 0; j < m.mean_image.cols(); ++j)
            out << (j ? " " : "") << fmt(m.mean_image(i, j));
        out << "\n";
    }
    for (std::size_t i = 0; i < m.eigvecs.rows(); ++i) {
        for (std::size_t j = 0; j < m.eigvecs.cols(); ++j)
            out << (j ? " " : "") << fmt(m.eigvecs(i, j));
        out << "\n";
    }
    return out.str();
}

namespace {

Wpca2dModel read_wpca2d(std::istream& in) {
    expect_token(in, "WPCA2D", "wpca2d model");
    expect_token(in, "v1", "wpca2d model");
    const std::size_t h = read_count(in, "wpca2d");
    const std::size_t w = read_count(in, "wpca2d");
    const std::size_t d = read_count(in, "wpca2d");
    const std::size_t rd = read_count(in, "wpca2d");
    Wpca2dModel m;
    m.d = d;
    m.rank_deficient = rd != 0;
    m.eigvals.resize(d);
    for (auto& v : m.eigvals) v = read_real(in, "wpca2d eigvals");
    m.mean_image = Matrix(h, w);
    for (auto& v : m.mean_image.values()) v = read_real(in, "wpca2d mean");
    m.eigvecs = Matrix(w, d);
    for (auto& v : m.eigvecs.values()) v = read_real(in, "wpca2d eigvecs");
    return m;
}

PcaModel read_pca(std::istream& in) {
    expect_token(in, "PCA", "pca model");
    expect_token(in, "v1", "pca model");
    const std::size_t m = read_count(in, "pca");
    const std::size_t k = read_count(in, "pca");
    PcaModel model;
    model.k = k;
    model.mean.resize(m);
    for (auto& v : model.mean) v = read_real(in, "pca mean");
    model.eigvals.resize(k);
    for (auto& v : model.eigvals) v = read_real(in, "pca eigvals");
    model.basis = Matrix(m, k);
    for (auto& v : model.basis.values()) v = read_real(in, "pca basis");
    return model;
}

} // namespace

Wpca2dModel deserialize_wpca2d(const std::string& text) {
    std::istringstream in(text);
    return read_wpca2d(in);
}

std::string serialize_pca(const PcaModel& m) {
    std::ostringstream out;
    out << "PCA v1\n" << m.mean.size() << " " << m.k << "\n";
    for (std::size_t i = 0; i < m.mean.size(); ++i) out << (i ? " " : "") << fmt(m.mean[i]);
    out << "\n";
    for (std::size_t j = 0; j < m.k; ++j) out << (j ? " " : "") << fmt(m.eigvals[j]);
    out << "\n";
    for (std::size_t i = 0; i < m.basis.rows(); ++i) {
        for (std::size_t j = 0; j < m.basis.cols(); ++j)
            out << (j ? " " : "") << fmt(m.basis(i, j));
        out << "\n";
    }
    return out.str();
}

PcaModel deserialize_pca(const std::string& text) {
    std::istringstream in(text);
    return read_pca(in);
}

std::string serialize_pipeline(const ExtractorPipeline& p) {
    std::ostringstream out;
    out << "PIPELINE v1\n";
    out << (p.variant == ExtractorVariant::PcaOnly ? "pca_only" : "wpca2d_then_pca") << "\n";
    if (p.variant == ExtractorVariant::Wpca2dThenPca) {
        if (!p.wpca2d) throw ConfigError("serialize_pipeline: missing 2DPCA stage");
        out << serialize_wpca2d(*p.wpca2d);
    }
    out << serialize_pca(p.pca);
    return out.str();
}

ExtractorPipeline deserialize_pipeline(const std::string& text) {
    std::istringstream in(text);
    expect_token(in, "PIPELINE", "pipeline");
    expect_token(in, "v1", "pipeline");
    std::string variant;
    if (!(in >> variant)) throw ParseError("pipeline: missing variant");
    ExtractorPipeline p;
    if (variant == "pca_only") {
        p.variant = ExtractorVariant::PcaOnly;
    } else if (variant == "wpca2d_then_pca") {
        p.variant = ExtractorVariant::Wpca2dThenPca;
        p.wpca2d = read_wpca2d(in);
    } else {
        throw ParseError("pipeline: unknown variant \"" + variant + "\"");
    }
    p.pca = read_pca(in);
    return p;
}

} // namespace faceid
