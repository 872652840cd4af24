#include "faceid/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "faceid/linalg.hpp"

namespace faceid {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

KnnModel make_knn(const std::vector<std::vector<double>>& gallery, const std::vector<int>& labels,
                  std::size_t k) {
    if (gallery.size() != labels.size() || gallery.empty())
        throw ShapeMismatch("make_knn: gallery and labels must match and be nonempty");
    if (k < 1 || k > gallery.size())
        throw KTooLarge("make_knn: k must be in [1, gallery size]");
    return KnnModel{gallery, labels, k};
}

KnnResult knn_classify(const KnnModel& model, const std::vector<double>& x) {
    const std::size_t n = model.gallery.size();
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (model.gallery[i].size() != x.size())
            throw ShapeMismatch("knn_classify: query length does not match gallery");
        dist[i] = squared_distance(model.gallery[i], x);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });

    // Nearest distance per distinct label, for ranking and tie-breaks.
    std::map<int, double> nearest;
    for (std::size_t i = 0; i < n; ++i) {
        auto it = nearest.find(model.labels[i]);
        if (it == nearest.end() || dist[i] < it->second) nearest[model.labels[i]] = dist[i];
    }

    std::map<int, std::size_t> votes;
    for (std::size_t j = 0; j < model.k; ++j) ++votes[model.labels[order[j]]];

    int best_label = -1;
    std::size_t best_votes = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (const auto& [label, count] : votes) {
        const double d = nearest.at(label);
        if (count > best_votes || (count == best_votes && d < best_dist)) {
            best_label = label;
            best_votes = count;
            best_dist = d;
        }
    }

    KnnResult res;
    res.label = best_label;
    res.ranked_labels.reserve(nearest.size());
    for (const auto& [label, _] : nearest) res.ranked_labels.push_back(label);
    std::stable_sort(res.ranked_labels.begin(), res.ranked_labels.end(),
                     [&](int a, int b) { return nearest.at(a) < nearest.at(b); });
    return res;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

MlpModel mlp_init(std::size_t in, std::size_t hidden, std::size_t out, double eta,
                  std::uint64_t seed) {
    if (in == 0 || hidden == 0 || out == 0) throw ConfigError("mlp_init: zero layer size");
    if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("mlp_init: eta must be in (0,1)");
    MlpModel m;
    m.in = in;
    m.hidden = hidden;
    m.out = out;
    m.eta = eta;
    std::mt19937_64 rng(seed);
    const double r1 = 1.0 / std::sqrt(static_cast<double>(in));
    const double r2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    std::uniform_real_distribution<double> u1(-r1, r1), u2(-r2, r2);
    m.w1.resize(hidden * in);
    for (double& v : m.w1) v = u1(rng);
    m.b1.assign(hidden, 0.0);
    m.w2.resize(out * hidden);
    for (double& v : m.w2) v = u2(rng);
    m.b2.assign(out, 0.0);
    return m;
}

namespace {

void forward_pass(const MlpModel& m, const std::vector<double>& x, std::vector<double>& h,
                  std::vector<double>& o) {
    if (x.size() != m.in) throw ShapeMismatch("mlp: input length mismatch");
    h.resize(m.hidden);
    for (std::size_t j = 0; j < m.hidden; ++j) {
        double s = m.b1[j];
        const double* row = &m.w1[j * m.in];
        for (std::size_t i = 0; i < m.in; ++i) s += row[i] * x[i];
        h[j] = sigmoid(s);
    }
    o.resize(m.out);
    for (std::size_t k = 0; k < m.out; ++k) {
        double s = m.b2[k];
        const double* row = &m.w2[k * m.hidden];
        for (std::size_t j = 0; j < m.hidden; ++j) s += row[j] * h[j];
        o[k] = sigmoid(s);
    }
}

} // namespace

std::vector<double> mlp_forward(const MlpModel& model, const std::vector<double>& x) {
    std::vector<double> h, o;
    forward_pass(model, x, h, o);
    return o;
}

MlpGradient mlp_gradient(const MlpModel& m, const std::vector<double>& x,
                         const std::vector<double>& target) {
    if (target.size() != m.out) throw ShapeMismatch("mlp_gradient: target length mismatch");
    std::vector<double> h, o;
    forward_pass(m, x, h, o);

    // delta_o = (o - t) * o * (1 - o)
    std::vector<double> delta_o(m.out);
    for (std::size_t k = 0; k < m.out; ++k)
        delta_o[k] = (o[k] - target[k]) * o[k] * (1.0 - o[k]);

    std::vector<double> delta_h(m.hidden, 0.0);
    for (std::size_t j = 0; j < m.hidden; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < m.out; ++k) s += m.w2[k * m.hidden + j] * delta_o[k];
        delta_h[j] = s * h[j] * (1.0 - h[j]);
    }

    MlpGradient g;
    g.w1.resize(m.w1.size());
    g.b1 = delta_h;
    g.w2.resize(m.w2.size());
    g.b2 = delta_o;
    for (std::size_t j = 0; j < m.hidden; ++j)
        for (std::size_t i = 0; i < m.in; ++i) g.w1[j * m.in + i] = delta_h[j] * x[i];
    for (std::size_t k = 0; k < m.out; ++k)
        for (std::size_t j = 0; j < m.hidden; ++j) g.w2[k * m.hidden + j] = delta_o[k] * h[j];
    return g;
}

MlpModel mlp_train(const std::vector<std::vector<double>>& xs,
                   const std::vector<std::vector<double>>& targets, const MlpConfig& config,
                   std::uint64_t seed) {
    if (xs.size() != targets.size() || xs.empty())
        throw ShapeMismatch("mlp_train: data and targets must match and be nonempty");
    MlpModel m = mlp_init(xs.front().size(), config.hidden, targets.front().size(), config.eta,
                          seed);
    std::mt19937_64 shuffle_rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (std::size_t idx : order) {
            const MlpGradient g = mlp_gradient(m, xs[idx], targets[idx]);
            for (std::size_t i = 0; i < m.w1.size(); ++i) m.w1[i] -= m.eta * g.w1[i];
            for (std::size_t i = 0; i < m.b1.size(); ++i) m.b1[i] -= m.eta * g.b1[i];
            for (std::size_t i = 0; i < m.w2.size(); ++i) m.w2[i] -= m.eta * g.w2[i];
            for (std::size_t i = 0; i < m.b2.size(); ++i) m.b2[i] -= m.eta * g.b2[i];
        }
        for (double v : m.w1)
            if (!std::isfinite(v)) throw NonFiniteLoss("mlp_train: weights diverged");
    }
    return m;
}

MlpResult mlp_classify(const MlpModel& model, const std::vector<double>& x) {
    MlpResult r;
    r.scores = mlp_forward(model, x);
    r.label = static_cast<int>(
        std::max_element(r.scores.begin(), r.scores.end()) - r.scores.begin());
    return r;
}

std::string serialize_knn(const KnnModel& m) {
    std::ostringstream out;
    out << "KNN v1\n" << m.k << " " << m.gallery.size() << " "
        << (m.gallery.empty() ? 0 : m.gallery.front().size()) << "\n";
    for (std::size_t i = 0; i < m.gallery.size(); ++i) {
        out << m.labels[i];
        for (double v : m.gallery[i]) out << " " << fmt(v);
        out << "\n";
    }
    return out.str();
}

KnnModel deserialize_knn(const std::string& text) {
    std::istringstream in(text);
    std::string tok;
    if (!(in >> tok) || tok != "KNN") throw ParseError("knn model: bad magic");
    if (!(in >> tok) || tok != "v1") throw ParseError("knn model: unsupported version");
    std::size_t k = 0, n = 0, dim = 0;
    if (!(in >> k >> n >> dim)) throw ParseError("knn model: bad header");
    KnnModel m;
    m.k = k;
    for (std::size_t i = 0; i < n; ++i) {
        int label = 0;
        if (!(in >> label)) throw ParseError("knn model: truncated");
        std::vector<double> x(dim);
        for (double& v : x)
            if (!(in >> v)) throw ParseError("knn model: truncated");
        m.labels.push_back(label);
        m.gallery.push_back(std::move(x));
    }
    return m;
}

std::string serialize_mlp(const MlpModel& m) {
    std::ostringstream out;
    out << "MLP v1\n" << m.in << " " << m.hidden << " " << m.out << " " << fmt(m.eta) << "\n";
    auto dump = [&](const std::vector<double>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << fmt(v[i]);
        out << "\n";
    };
    dump(m.w1);
    dump(m.b1);
    dump(m.w2);
    dump(m.b2);
    return out.str();
}

MlpModel deserialize_mlp(const std::string& text) {
    std::istringstream in(text);
    std::string tok;
    if (!(in >> tok) || tok != "MLP") throw ParseError("mlp model: bad magic");
    if (!(in >> tok) || tok != "v1") throw ParseError("mlp model: unsupported version");
    MlpModel m;
    if (!(in >> m.in >> m.hidden >> m.out >> m.eta)) throw ParseError("mlp model: bad header");
    auto read = [&](std::vector<double>& v, std::size_t n) {
        v.resize(n);
        for (double& x : v)
            if (!(in >> x)) throw ParseError("mlp model: truncated");
    };
    read(m.w1, m.hidden * m.in);
    read(m.b1, m.hidden);
    read(m.w2, m.out * m.hidden);
    read(m.b2, m.out);
    return m;
}

} // namespace faceid
