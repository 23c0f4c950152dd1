#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "sketchauth/error.hpp"
#include "sketchauth/eval.hpp"
#include "sketchauth/features.hpp"
#include "sketchauth/pipeline.hpp"
#include "sketchauth/synthetic.hpp"
#include "sketchauth/verifier.hpp"

namespace py = pybind11;
using namespace sketchauth;

namespace {

RgbImage rgb_from_array(py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> a) {
    if (a.ndim() != 3 || a.shape(2) != 3) throw ValidationError("expected an (H, W, 3) uint8 array");
    RgbImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    std::copy(a.data(), a.data() + a.size(), img.pixels.begin());
    return img;
}

GreyImage grey_from_array(py::array_t<double, py::array::c_style | py::array::forcecast> a) {
    if (a.ndim() != 2) throw ValidationError("expected an (H, W) float array");
    GreyImage g(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    std::copy(a.data(), a.data() + a.size(), g.pixels.begin());
    return g;
}

py::dict features_dict(const FeatureVector& f) {
    py::dict d;
    d["fourier_energy"] = f.fourier_energy;
    d["shannon_entropy"] = f.shannon_entropy;
    d["contrast"] = f.contrast;
    d["glcm_homogeneity"] = f.homogeneity;
    d["fractal_dimension"] = f.fractal_dimension;
    d["edgeless"] = f.edgeless;
    return d;
}

std::vector<Method> methods_from(const std::vector<std::string>& names) {
    std::vector<Method> out;
    for (const auto& n : names) out.push_back(parse_method(n));
    return out;
}

RunConfig run_config(const std::filesystem::path& manifest, const std::filesystem::path& out, double q,
                     std::uint64_t seed, const std::vector<std::string>& methods, bool q_sweep, unsigned threads) {
    RunConfig cfg;
    cfg.manifest = manifest;
    cfg.out = out;
    cfg.q = q;
    cfg.seed = seed;
    cfg.methods = methods_from(methods);
    cfg.q_sweep = q_sweep;
    cfg.threads = threads;
    cfg.validate();
    return cfg;
}

} // namespace

PYBIND11_MODULE(_sketchauth, m) {
    m.doc() = "Handcrafted-feature drawing verification";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<RuntimeFailure>(m, "RuntimeFailure", PyExc_RuntimeError);

    m.def("extract_features", [](py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> rgb) {
        return features_dict(extract_features(rgb_from_array(rgb)));
    }, py::arg("rgb"), "Five-feature vector of an (H, W, 3) uint8 image.");

    m.def("canny", [](py::array_t<double, py::array::c_style | py::array::forcecast> grey, double sigma, double low,
                      double high) {
        CannyParams p{sigma, low, high};
        const auto e = canny(grey_from_array(grey), p);
        py::array_t<bool> out({e.height, e.width});
        auto* dst = out.mutable_data();
        for (std::size_t i = 0; i < e.edges.size(); ++i) dst[i] = e.edges[i] != 0;
        return out;
    }, py::arg("grey"), py::arg("sigma") = 1.0, py::arg("t_low") = 0.10, py::arg("t_high") = 0.20);

    m.def("calibrate_threshold", [](std::vector<double> errors, double q) { return calibrate_threshold(errors, q); },
          py::arg("errors"), py::arg("q"));

    m.def("wilson_interval", [](long x, long n, double z) {
        const auto w = wilson_interval(x, n, z);
        return py::make_tuple(w.lower, w.upper);
    }, py::arg("x"), py::arg("n"), py::arg("z") = 1.96);

    m.def("compute_metrics", [](long tp, long fn, long fp, long tn) {
        return py::module_::import("json").attr("loads")(metrics_to_json(compute_metrics({tp, fn, fp, tn})));
    }, py::arg("tp"), py::arg("fn"), py::arg("fp"), py::arg("tn"));

    m.def("generate_corpus", [](const std::filesystem::path& dir, int artists, int n_train, int n_test, int size,
                                std::uint64_t seed) {
        write_synthetic_corpus(dir, {artists, n_train, n_test, size, seed});
        return dir / "manifest.json";
    }, py::arg("dir"), py::arg("artists") = 10, py::arg("n_train") = 20, py::arg("n_test") = 9, py::arg("size") = 256,
       py::arg("seed") = 7);

    m.def("run", [](const std::filesystem::path& manifest, const std::filesystem::path& out, double q,
                    std::uint64_t seed, const std::vector<std::string>& methods, bool q_sweep, unsigned threads) {
        const auto cfg = run_config(manifest, out, q, seed, methods, q_sweep, threads);
        py::gil_scoped_release release;
        cmd_extract(cfg);
        cmd_train(cfg);
        cmd_evaluate(cfg);
        return report_dir(cfg, cfg.methods.front()).parent_path();
    }, py::arg("manifest"), py::arg("out"), py::arg("q") = 0.95, py::arg("seed") = 42,
       py::arg("methods") = std::vector<std::string>{"autoencoder"}, py::arg("q_sweep") = false,
       py::arg("threads") = 0u, "extract, train and evaluate; returns the reports directory.");
}
