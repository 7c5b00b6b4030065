#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "posecloak/config.hpp"
#include "posecloak/downstream.hpp"
#include "posecloak/image_io.hpp"
#include "posecloak/losses.hpp"
#include "posecloak/metrics.hpp"
#include "posecloak/optimizer.hpp"
#include "posecloak/robustness.hpp"

namespace py = pybind11;
using namespace posecloak;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

ImageTensor image_from_array(const DoubleArray& arr) {
    if (arr.ndim() != 3 || arr.shape(2) != 3) {
        throw std::invalid_argument("expected an (H, W, 3) array");
    }
    ImageTensor img(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
    std::copy(arr.data(), arr.data() + arr.size(), img.values().begin());
    return img;
}

py::array_t<double> image_to_array(const ImageTensor& img) {
    py::array_t<double> arr({img.height(), img.width(), ImageTensor::kChannels});
    std::copy(img.values().begin(), img.values().end(), arr.mutable_data());
    return arr;
}

PerturbationField field_from_array(const DoubleArray& arr) {
    if (arr.ndim() != 3 || arr.shape(2) != 3) {
        throw std::invalid_argument("expected an (H, W, 3) array");
    }
    PerturbationField d(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
    std::copy(arr.data(), arr.data() + arr.size(), d.values().begin());
    return d;
}

py::array_t<double> field_to_array(const PerturbationField& d) {
    py::array_t<double> arr({d.height(), d.width(), ImageTensor::kChannels});
    std::copy(d.values().begin(), d.values().end(), arr.mutable_data());
    return arr;
}

EmbeddingSet embedding_set(const Eigen::MatrixXd& m, const std::string& id) {
    return EmbeddingSet{m, id};
}

py::dict trace_to_dict(const OptimizationTrace& trace) {
    py::list iterations;
    for (const auto& rec : trace.iterations) {
        py::dict d;
        d["vae"] = rec.loss.vae;
        d["clip"] = rec.loss.clip;
        d["reference"] = rec.loss.reference;
        d["frame"] = rec.loss.frame;
        d["lpips_penalty"] = rec.loss.lpips_penalty;
        d["total"] = rec.loss.total;
        d["delta_linf"] = rec.delta_linf;
        d["transform"] = to_string(rec.transform);
        d["timestep"] = rec.timestep;
        iterations.append(d);
    }
    py::dict out;
    out["iterations"] = iterations;
    out["seed"] = trace.metadata.seed;
    out["budget"] = trace.metadata.eta;
    out["step_size"] = trace.metadata.gamma;
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Protective perturbations against pose-driven image animation";
    m.attr("__version__") = kToolVersion;

    // ---- tensor operations ------------------------------------------------
    m.def(
        "clamp_valid",
        [](const DoubleArray& img) { return image_to_array(clamp_valid(image_from_array(img))); },
        py::arg("image"), "Clamp an (H, W, 3) image into [0, 1].");
    m.def(
        "linf_project",
        [](const DoubleArray& delta, double eta) {
            return field_to_array(linf_project(field_from_array(delta), eta));
        },
        py::arg("delta"), py::arg("eta"), "Clip a perturbation into the L-inf ball.");
    m.def(
        "linf_norm",
        [](const DoubleArray& delta) { return linf_norm(field_from_array(delta)); },
        py::arg("delta"));

    // ---- configuration ------------------------------------------------------
    py::class_<LossWeights>(m, "LossWeights")
        .def(py::init<>())
        .def_readwrite("lambda_vae", &LossWeights::lambda_vae)
        .def_readwrite("lambda_clip", &LossWeights::lambda_clip)
        .def_readwrite("lambda_ref", &LossWeights::lambda_ref)
        .def_readwrite("lambda_frame", &LossWeights::lambda_frame)
        .def_readwrite("lambda_lpips", &LossWeights::lambda_lpips)
        .def_readwrite("zeta", &LossWeights::zeta);

    py::class_<EotConfig>(m, "EotConfig")
        .def(py::init<>())
        .def_readwrite("enabled", &EotConfig::enabled)
        .def_readwrite("blur_sigma_min", &EotConfig::blur_sigma_min)
        .def_readwrite("blur_sigma_max", &EotConfig::blur_sigma_max)
        .def_readwrite("jpeg_quality_min", &EotConfig::jpeg_quality_min)
        .def_readwrite("jpeg_quality_max", &EotConfig::jpeg_quality_max)
        .def_readwrite("noise_std_min", &EotConfig::noise_std_min)
        .def_readwrite("noise_std_max", &EotConfig::noise_std_max)
        .def_readwrite("resize_scale_min", &EotConfig::resize_scale_min)
        .def_readwrite("resize_scale_max", &EotConfig::resize_scale_max);

    py::class_<ScheduleConfig>(m, "ScheduleConfig")
        .def(py::init<>())
        .def_readwrite("kind", &ScheduleConfig::kind)
        .def_readwrite("train_steps", &ScheduleConfig::train_steps)
        .def_readwrite("inference_steps", &ScheduleConfig::inference_steps)
        .def_readwrite("window", &ScheduleConfig::window);

    py::class_<ProtectionConfig>(m, "ProtectionConfig")
        .def(py::init<>())
        .def_readwrite("eta", &ProtectionConfig::eta)
        .def_readwrite("gamma", &ProtectionConfig::gamma)
        .def_readwrite("iterations", &ProtectionConfig::iterations)
        .def_readwrite("decay", &ProtectionConfig::decay)
        .def_readwrite("frames", &ProtectionConfig::frames)
        .def_readwrite("seed", &ProtectionConfig::seed)
        .def_readwrite("weights", &ProtectionConfig::weights)
        .def_readwrite("eot", &ProtectionConfig::eot)
        .def_readwrite("schedule", &ProtectionConfig::schedule);

    // ---- extractors -----------------------------------------------------------
    py::class_<ExtractorBundle>(m, "ExtractorBundle");
    m.def("build_toy_stack", &build_toy_stack, py::arg("seed") = 0,
          py::arg("latent_channels") = 4,
          "Deterministic desk-scale surrogate stack with analytic gradients.");
    m.def(
        "resolve_preset",
        [](const std::string& name) { return resolve_bundle(BundleSpec::preset(name)); },
        py::arg("name"), "Resolve a registry preset such as 'toy-default'.");

    // ---- optimization -----------------------------------------------------------
    m.def(
        "protect",
        [](const DoubleArray& image, const ProtectionConfig& cfg, const ExtractorBundle& bundle) {
            ProtectResult result = protect(image_from_array(image), cfg, bundle);
            py::dict out;
            out["image"] = image_to_array(result.protected_image);
            out["delta"] = field_to_array(result.delta);
            out["trace"] = trace_to_dict(result.trace);
            return out;
        },
        py::arg("image"), py::arg("config"), py::arg("bundle"),
        "Run the full optimization loop; returns the protected image, the final "
        "perturbation and the per-iteration trace.");

    // ---- metrics -------------------------------------------------------------------
    m.def(
        "psnr",
        [](const DoubleArray& a, const DoubleArray& b) {
            return psnr(image_from_array(a), image_from_array(b));
        },
        py::arg("a"), py::arg("b"));
    m.def(
        "ssim",
        [](const DoubleArray& a, const DoubleArray& b) {
            return ssim(image_from_array(a), image_from_array(b));
        },
        py::arg("a"), py::arg("b"));
    m.def("frechet_distance", &frechet_distance, py::arg("mu1"), py::arg("cov1"), py::arg("mu2"),
          py::arg("cov2"));
    m.def(
        "fid_from_embeddings",
        [](const Eigen::MatrixXd& ref, const Eigen::MatrixXd& gen) {
            return fid_from_embeddings(embedding_set(ref, "numpy"), embedding_set(gen, "numpy"));
        },
        py::arg("reference"), py::arg("generated"),
        "Frechet distance between Gaussian fits of two embedding matrices (rows are samples).");
    m.def(
        "cosine_similarity_mean",
        [](const Eigen::MatrixXd& ref, const Eigen::MatrixXd& gen) {
            return cosine_similarity_mean(embedding_set(ref, "numpy"),
                                          embedding_set(gen, "numpy"));
        },
        py::arg("reference"), py::arg("generated"));

    // ---- robustness -------------------------------------------------------------
    m.def(
        "apply_countermeasure",
        [](const std::string& kind, double param, const DoubleArray& img, std::uint64_t seed) {
            return image_to_array(apply_countermeasure(countermeasure_from_string(kind), param,
                                                       image_from_array(img), seed));
        },
        py::arg("kind"), py::arg("param"), py::arg("image"), py::arg("seed") = 0,
        "Evaluation-time transformation: jpeg, blur, noise, median or bit.");
    m.def(
        "interpolate_average_purify",
        [](const std::vector<DoubleArray>& images) {
            std::vector<ImageTensor> tensors;
            for (const auto& a : images) {
                tensors.push_back(image_from_array(a));
            }
            return image_to_array(interpolate_average_purify(tensors));
        },
        py::arg("images"), "Midpoint-interpolation purifier over exactly five images.");

    // ---- downstream simulation ------------------------------------------------------
    m.def(
        "simulate_animation",
        [](const DoubleArray& reference, const ExtractorBundle& bundle, int frames, double jitter,
           std::uint64_t seed) {
            FrameSequence out =
                simulate_animation(image_from_array(reference), bundle, frames, jitter, seed);
            std::vector<py::array_t<double>> arrays;
            for (const auto& f : out) {
                arrays.push_back(image_to_array(f));
            }
            return arrays;
        },
        py::arg("reference"), py::arg("bundle"), py::arg("frames") = 24, py::arg("jitter") = 0.25,
        py::arg("seed") = 0, "Desk-scale decode-after-extract animation stand-in.");

    // ---- image I/O ---------------------------------------------------------------------
    m.def(
        "read_image",
        [](const std::string& path) {
            ImageReadInfo info;
            ImageTensor img = read_image(path, &info);
            return py::make_tuple(image_to_array(img), info.lossy);
        },
        py::arg("path"), "Returns (array, was_lossy).");
    m.def(
        "write_png",
        [](const std::string& path, const DoubleArray& img) {
            write_png(path, image_from_array(img));
        },
        py::arg("path"), py::arg("image"));
    m.def(
        "jpeg_roundtrip",
        [](const DoubleArray& img, int quality) {
            return image_to_array(jpeg_roundtrip(image_from_array(img), quality));
        },
        py::arg("image"), py::arg("quality"));
}
