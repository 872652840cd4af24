// faceid: weighted 2DPCA + kernel SVM face identification pipeline.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "faceid/baselines.hpp"
#include "faceid/eval.hpp"
#include "faceid/imageio.hpp"
#include "faceid/subspace.hpp"
#include "faceid/svm.hpp"

namespace fs = std::filesystem;
using namespace faceid;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

int exit_code_for(const Error& e) {
    switch (e.error_class()) {
        case ErrorClass::Config:
            return kExitConfig;
        case ErrorClass::Data:
            return kExitData;
        case ErrorClass::Numeric:
            return kExitNumeric;
    }
    return kExitNumeric;
}

void write_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw MissingFile("cannot write: " + tmp.string());
        out << content;
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile("cannot open: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Grid syntax: comma-separated entries; each entry is a plain number, "2^k",
// or a power-of-two range "2^a..2^b".
std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto range_pos = item.find("..");
        if (range_pos != std::string::npos) {
            const std::string lo_s = item.substr(0, range_pos);
            const std::string hi_s = item.substr(range_pos + 2);
            if (lo_s.rfind("2^", 0) != 0 || hi_s.rfind("2^", 0) != 0)
                throw ConfigError("grid range must use 2^a..2^b syntax: " + item);
            const int lo = std::stoi(lo_s.substr(2));
            const int hi = std::stoi(hi_s.substr(2));
            if (lo > hi) throw ConfigError("grid range is empty: " + item);
            for (int e = lo; e <= hi; ++e) out.push_back(std::ldexp(1.0, e));
        } else if (item.rfind("2^", 0) == 0) {
            out.push_back(std::ldexp(1.0, std::stoi(item.substr(2))));
        } else {
            out.push_back(std::stod(item));
        }
    }
    if (out.empty()) throw ConfigError("empty grid: \"" + text + "\"");
    return out;
}

struct CommonOpts {
    std::string manifest;
    std::string variant = "wpca2d";
    std::size_t d = 20;
    std::size_t k_final = 0;
    std::string classifier = "svm";
    std::string kernel = "rbf";
    unsigned degree = 3;
    std::string c_grid = "2^-5..2^14";
    std::string sigma_grid = "2^-15..2^3";
    std::size_t knn_k = 1;
    std::size_t mlp_hidden = 100;
    double mlp_eta = 0.5;
    std::size_t mlp_epochs = 300;
    std::uint64_t seed = 0;
    std::string out;
};

ExtractorVariant parse_variant(const std::string& v) {
    if (v == "pca") return ExtractorVariant::PcaOnly;
    if (v == "wpca2d") return ExtractorVariant::Wpca2dThenPca;
    throw ConfigError("unknown variant: " + v);
}

KernelKind parse_kernel(const std::string& k) {
    if (k == "linear") return KernelKind::Linear;
    if (k == "poly") return KernelKind::Poly;
    if (k == "rbf") return KernelKind::Rbf;
    throw ConfigError("unknown kernel: " + k);
}

MethodSpec build_method(const CommonOpts& o) {
    MethodSpec spec;
    spec.variant = parse_variant(o.variant);
    spec.d = o.d;
    spec.k_final = o.k_final;
    if (o.classifier == "svm")
        spec.classifier = ClassifierKind::Svm;
    else if (o.classifier == "knn")
        spec.classifier = ClassifierKind::Knn;
    else if (o.classifier == "mlp")
        spec.classifier = ClassifierKind::Mlp;
    else
        throw ConfigError("unknown classifier: " + o.classifier);
    spec.kernel.kind = parse_kernel(o.kernel);
    spec.kernel.degree = o.degree;
    spec.c_grid = parse_grid(o.c_grid);
    spec.sigma_grid = parse_grid(o.sigma_grid);
    spec.knn_k = o.knn_k;
    spec.mlp.hidden = o.mlp_hidden;
    spec.mlp.eta = o.mlp_eta;
    spec.mlp.epochs = o.mlp_epochs;
    spec.seed = o.seed;
    return spec;
}

void extract_all(const ExtractorPipeline& pipe, const Dataset& data,
                 std::vector<std::vector<double>>& feats, std::vector<int>& labels) {
    for (const auto& s : data.samples) {
        feats.push_back(extract(pipe, s.image).values);
        labels.push_back(s.label);
    }
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

int cmd_fit_extractor(const CommonOpts& o) {
    const Dataset data = load_manifest(o.manifest);
    const ExtractorPipeline pipe = fit_pipeline(data, parse_variant(o.variant), o.d, o.k_final);
    write_atomic(o.out, serialize_pipeline(pipe));

    double kept = 0.0;
    for (double v : pipe.pca.eigvals) kept += std::max(v, 0.0);
    std::cout << "variant=" << o.variant;
    if (pipe.wpca2d) std::cout << " d=" << pipe.wpca2d->d;
    std::cout << " k_final=" << pipe.pca.k << " retained_energy=" << fmt17(kept) << "\n";
    return 0;
}

int cmd_extract(const CommonOpts& o, const std::string& pipeline_path) {
    const Dataset data = load_manifest(o.manifest);
    const ExtractorPipeline pipe = deserialize_pipeline(read_file(pipeline_path));
    std::ostringstream out;
    out << "label";
    const std::size_t dim = pipe.pca.k;
    for (std::size_t j = 0; j < dim; ++j) out << ",f" << j;
    out << "\n";
    for (const auto& s : data.samples) {
        const FeatureVector f = extract(pipe, s.image);
        out << s.label;
        for (double v : f.values) out << "," << fmt17(v);
        out << "\n";
    }
    write_atomic(o.out, out.str());
    return 0;
}

int cmd_train(const CommonOpts& o, const std::string& pipeline_path) {
    const Dataset data = load_manifest(o.manifest);
    const ExtractorPipeline pipe = deserialize_pipeline(read_file(pipeline_path));
    const MethodSpec spec = build_method(o);

    std::vector<std::vector<double>> feats;
    std::vector<int> labels;
    extract_all(pipe, data, feats, labels);

    const TrainedClassifier clf = train_classifier(feats, labels, data.class_count, spec);
    std::string serialized;
    switch (clf.kind) {
        case ClassifierKind::Svm:
            serialized = serialize_svm_ova(clf.svm);
            std::cout << "selected C=" << fmt17(clf.selected_c);
            if (spec.kernel.kind == KernelKind::Rbf)
                std::cout << ", sigma=" << fmt17(clf.selected_sigma);
            std::cout << "\n";
            break;
        case ClassifierKind::Knn:
            serialized = serialize_knn(clf.knn);
            break;
        case ClassifierKind::Mlp:
            serialized = serialize_mlp(clf.mlp);
            break;
    }
    write_atomic(o.out, serialized);
    return 0;
}

TrainedClassifier load_classifier(const std::string& path) {
    const std::string text = read_file(path);
    TrainedClassifier clf;
    if (text.rfind("SVM_OVA", 0) == 0) {
        clf.kind = ClassifierKind::Svm;
        clf.svm = deserialize_svm_ova(text);
        clf.class_count = clf.svm.class_count;
    } else if (text.rfind("KNN", 0) == 0) {
        clf.kind = ClassifierKind::Knn;
        clf.knn = deserialize_knn(text);
    } else if (text.rfind("MLP", 0) == 0) {
        clf.kind = ClassifierKind::Mlp;
        clf.mlp = deserialize_mlp(text);
        clf.class_count = clf.mlp.out;
    } else {
        throw ParseError("unrecognized model file: " + path);
    }
    return clf;
}

int cmd_predict(const CommonOpts& o, const std::string& pipeline_path,
                const std::string& model_path) {
    const Dataset data = load_manifest(o.manifest);
    const ExtractorPipeline pipe = deserialize_pipeline(read_file(pipeline_path));
    const TrainedClassifier clf = load_classifier(model_path);

    std::ostringstream out;
    out << "index,truth,predicted\n";
    std::vector<int> preds, truths;
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        const FeatureVector f = extract(pipe, data.samples[i].image);
        const int p = clf.predict(f.values);
        preds.push_back(p);
        truths.push_back(data.samples[i].label);
        out << i << "," << data.samples[i].label << "," << p << "\n";
    }
    write_atomic(o.out, out.str());
    std::cout << "accuracy=" << fmt17(accuracy(preds, truths)) << "\n";
    return 0;
}

int cmd_evaluate(const CommonOpts& o) {
    const Dataset data = load_manifest(o.manifest);
    const MethodSpec spec = build_method(o);
    const SplitPlan plan = make_splits(data, o.seed);
    const CvReport report = cross_validate(data, plan, spec);

    const fs::path out_dir(o.out);
    fs::create_directories(out_dir);
    write_atomic(out_dir / "accuracy.csv", format_accuracy_csv(spec.name(), report));
    write_atomic(out_dir / "cms.csv", format_cms_csv(spec.name(), report.cms));
    std::cout << "method=" << spec.name()
              << " mean_accuracy=" << fmt17(report.mean_accuracy) << "\n";
    return 0;
}

int cmd_cms(const CommonOpts& o, const std::string& pipeline_path, const std::string& model_path,
            std::size_t max_rank) {
    const Dataset data = load_manifest(o.manifest);
    const ExtractorPipeline pipe = deserialize_pipeline(read_file(pipeline_path));
    const TrainedClassifier clf = load_classifier(model_path);

    std::vector<std::vector<int>> ranked;
    std::vector<int> truths;
    for (const auto& s : data.samples) {
        ranked.push_back(clf.ranked(extract(pipe, s.image).values));
        truths.push_back(s.label);
    }
    if (max_rank == 0) max_rank = data.class_count;
    const CmsCurve curve = cms_curve(ranked, truths, max_rank);
    write_atomic(o.out, format_cms_csv("model", curve));
    std::cout << "rank1=" << fmt17(curve.rates.front()) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Face identification: weighted 2DPCA features + kernel SVM"};
    app.set_config("--config", "", "key=value config file; flags take precedence");
    app.require_subcommand(1);

    CommonOpts o;
    std::string pipeline_path, model_path;
    std::size_t max_rank = 0;

    auto add_common = [&](CLI::App* cmd, bool needs_manifest = true) {
        auto* m = cmd->add_option("--manifest", o.manifest, "dataset manifest CSV");
        if (needs_manifest) m->required();
        cmd->add_option("--out", o.out, "output path")->required();
    };

    auto* fit = app.add_subcommand("fit-extractor", "fit a feature-extraction pipeline");
    add_common(fit);
    fit->add_option("--variant", o.variant, "pca|wpca2d");
    fit->add_option("--d", o.d, "2DPCA component count");
    fit->add_option("--k-final", o.k_final, "final feature dimension (0 = 95% energy)");

    auto* ext = app.add_subcommand("extract", "extract features with a fitted pipeline");
    add_common(ext);
    ext->add_option("--pipeline", pipeline_path, "pipeline file")->required();

    auto* tr = app.add_subcommand("train", "train a classifier on extracted features");
    add_common(tr);
    tr->add_option("--pipeline", pipeline_path, "pipeline file")->required();
    tr->add_option("--classifier", o.classifier, "svm|knn|mlp");
    tr->add_option("--kernel", o.kernel, "linear|poly|rbf");
    tr->add_option("--degree", o.degree, "polynomial degree");
    tr->add_option("--c-grid", o.c_grid, "C grid, e.g. 2^-5..2^14 or 1,10,100");
    tr->add_option("--sigma-grid", o.sigma_grid, "sigma grid (rbf)");
    tr->add_option("--k", o.knn_k, "k for k-NN");
    tr->add_option("--mlp-hidden", o.mlp_hidden, "MLP hidden layer size");
    tr->add_option("--mlp-eta", o.mlp_eta, "MLP learning rate");
    tr->add_option("--mlp-epochs", o.mlp_epochs, "MLP training epochs");
    tr->add_option("--seed", o.seed, "RNG seed");

    auto* pr = app.add_subcommand("predict", "predict labels for a manifest");
    add_common(pr);
    pr->add_option("--pipeline", pipeline_path, "pipeline file")->required();
    pr->add_option("--model", model_path, "model file")->required();

    auto* ev = app.add_subcommand("evaluate", "3-fold cross-validated evaluation");
    add_common(ev);
    ev->add_option("--variant", o.variant, "pca|wpca2d");
    ev->add_option("--d", o.d, "2DPCA component count");
    ev->add_option("--k-final", o.k_final, "final feature dimension (0 = 95% energy)");
    ev->add_option("--classifier", o.classifier, "svm|knn|mlp");
    ev->add_option("--kernel", o.kernel, "linear|poly|rbf");
    ev->add_option("--degree", o.degree, "polynomial degree");
    ev->add_option("--c-grid", o.c_grid, "C grid");
    ev->add_option("--sigma-grid", o.sigma_grid, "sigma grid (rbf)");
    ev->add_option("--k", o.knn_k, "k for k-NN");
    ev->add_option("--mlp-hidden", o.mlp_hidden, "MLP hidden layer size");
    ev->add_option("--mlp-eta", o.mlp_eta, "MLP learning rate");
    ev->add_option("--mlp-epochs", o.mlp_epochs, "MLP training epochs");
    ev->add_option("--seed", o.seed, "RNG seed")->required();

    auto* cm = app.add_subcommand("cms", "cumulative match score curve for a trained model");
    add_common(cm);
    cm->add_option("--pipeline", pipeline_path, "pipeline file")->required();
    cm->add_option("--model", model_path, "model file")->required();
    cm->add_option("--max-rank", max_rank, "curve length (0 = class count)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitConfig;
    }

    try {
        if (fit->parsed()) return cmd_fit_extractor(o);
        if (ext->parsed()) return cmd_extract(o, pipeline_path);
        if (tr->parsed()) return cmd_train(o, pipeline_path);
        if (pr->parsed()) return cmd_predict(o, pipeline_path, model_path);
        if (ev->parsed()) return cmd_evaluate(o);
        if (cm->parsed()) return cmd_cms(o, pipeline_path, model_path, max_rank);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitConfig;
}
