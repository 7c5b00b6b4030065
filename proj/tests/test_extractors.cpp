#include "doctest.h"

#include "fd_helpers.hpp"
#include "posecloak/extractors.hpp"
#include "posecloak/rng.hpp"
#include "posecloak/schedule.hpp"

using namespace posecloak;
using namespace posecloak::testing;

namespace {

ImageTensor seeded_image(std::uint64_t seed, int h = 8, int w = 8) {
    SplitRng rng(seed);
    ImageTensor img(h, w);
    for (double& v : img.values()) {
        v = rng.uniform(0.2, 0.8);
    }
    return img;
}

Eigen::VectorXd seeded_cotangent(std::uint64_t seed, Eigen::Index n) {
    SplitRng rng(seed);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        v(i) = rng.normal();
    }
    return v;
}

LatentTensor latent_cotangent(std::uint64_t seed, const LatentShape& shape) {
    SplitRng rng(seed);
    LatentTensor z(shape);
    for (double& v : z.values()) {
        v = rng.normal();
    }
    return z;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

} // namespace

TEST_SUITE("extractors") {

TEST_CASE("toy stack is parameter-identical across builds with one seed") {
    ExtractorBundle a = build_toy_stack(0, 4);
    ExtractorBundle b = build_toy_stack(0, 4);
    ImageTensor img = seeded_image(1);
    LatentTensor za = a.encoder->encode(img);
    LatentTensor zb = b.encoder->encode(img);
    for (std::size_t i = 0; i < za.size(); ++i) {
        CHECK(za.values()[i] == zb.values()[i]);
    }
    Eigen::VectorXd ea = a.semantic->embed(img);
    Eigen::VectorXd eb = b.semantic->embed(img);
    CHECK((ea - eb).cwiseAbs().maxCoeff() == 0.0);
    CHECK(build_toy_stack(1, 4).encoder->encode(img).values()[0] != za.values()[0]);
}

TEST_CASE("toy encoder gradient matches central finite differences") {
    ExtractorBundle bundle = build_toy_stack(3, 4);
    ImageTensor x = seeded_image(10);
    LatentTensor cot = latent_cotangent(11, bundle.encoder->latent_shape());

    auto scalar = [&](const ImageTensor& img) {
        return dot(bundle.encoder->encode(img).values(), cot.values());
    };
    ImageTensor analytic = bundle.encoder->encode_grad(x, cot);
    ImageTensor fd = fd_image_grad(scalar, x, 1e-4);
    CHECK(max_abs_deviation(analytic.values(), fd.values()) < 1e-5);
}

TEST_CASE("all toy extractor gradients pass the 1e-4 relative contract on 10 probes") {
    ExtractorBundle bundle = build_toy_stack(5, 4);
    for (std::uint64_t probe = 0; probe < 10; ++probe) {
        ImageTensor x = seeded_image(100 + probe);

        { // semantic encoder
            Eigen::VectorXd cot = seeded_cotangent(200 + probe, bundle.semantic->embedding_dim());
            auto scalar = [&](const ImageTensor& img) {
                return bundle.semantic->embed(img).dot(cot);
            };
            ImageTensor analytic = bundle.semantic->embed_grad(x, cot);
            ImageTensor fd = fd_image_grad(scalar, x, 1e-4);
            CHECK(relative_deviation(analytic.values(), fd.values()) < 1e-4);
        }
        { // reference extractor through the encoder latent
            LatentTensor z = bundle.encoder->encode(x);
            auto maps = bundle.references[0]->extract(z);
            std::vector<LatentTensor> cots;
            for (std::size_t m = 0; m < maps.size(); ++m) {
                cots.push_back(latent_cotangent(300 + probe * 7 + m, maps[m].shape()));
            }
            // gradient w.r.t. the latent input
            LatentTensor analytic = bundle.references[0]->extract_grad(z, cots);
            LatentTensor fd(z.shape());
            LatentTensor zprobe = z;
            auto zv = zprobe.values();
            auto fv = fd.values();
            const double step = 1e-4;
            for (std::size_t i = 0; i < zv.size(); ++i) {
                double orig = zv[i];
                auto eval = [&]() {
                    double acc = 0.0;
                    auto out = bundle.references[0]->extract(zprobe);
                    for (std::size_t m = 0; m < out.size(); ++m) {
                        acc += dot(out[m].values(), cots[m].values());
                    }
                    return acc;
                };
                zv[i] = orig + step;
                double up = eval();
                zv[i] = orig - step;
                double down = eval();
                zv[i] = orig;
                fv[i] = (up - down) / (2.0 * step);
            }
            CHECK(relative_deviation(analytic.values(), fd.values()) < 1e-4);
        }
        { // conditioner
            Conditioning cot;
            for (int f = 0; f < 3; ++f) {
                cot.frames.push_back(
                    seeded_cotangent(400 + probe * 3 + f, bundle.conditioner->conditioning_dim()));
            }
            auto scalar = [&](const ImageTensor& img) {
                Conditioning c = bundle.conditioner->condition_from(img, 3);
                double acc = 0.0;
                for (int f = 0; f < 3; ++f) {
                    acc += c.frames[f].dot(cot.frames[f]);
                }
                return acc;
            };
            ImageTensor analytic = bundle.conditioner->condition_grad(x, 3, cot);
            ImageTensor fd = fd_image_grad(scalar, x, 1e-4);
            CHECK(relative_deviation(analytic.values(), fd.values()) < 1e-4);
        }
        { // perceptual distance w.r.t. first argument
            ImageTensor other = seeded_image(500 + probe);
            auto scalar = [&](const ImageTensor& img) {
                return bundle.perceptual->distance(img, other);
            };
            ImageTensor analytic = bundle.perceptual->distance_grad_first(x, other);
            ImageTensor fd = fd_image_grad(scalar, x, 1e-4);
            CHECK(relative_deviation(analytic.values(), fd.values()) < 1e-4);
        }
    }
}

TEST_CASE("toy predictor conditioning gradient matches finite differences") {
    ExtractorBundle bundle = build_toy_stack(6, 4);
    ImageTensor x = seeded_image(42);
    const int frames = 2;
    Conditioning cond = bundle.conditioner->condition_from(x, frames);
    SplitRng rng(77);
    auto noisy = sample_latent_frames(frames, bundle.predictor->latent_shape(), rng);

    std::vector<LatentTensor> cots;
    for (int f = 0; f < frames; ++f) {
        cots.push_back(latent_cotangent(600 + f, bundle.predictor->latent_shape()));
    }
    auto scalar = [&](const Conditioning& c) {
        auto eps = bundle.predictor->predict(noisy, c, 120);
        double acc = 0.0;
        for (int f = 0; f < frames; ++f) {
            acc += dot(eps[f].values(), cots[f].values());
        }
        return acc;
    };

    Conditioning analytic = bundle.predictor->predict_grad_conditioning(noisy, cond, 120, cots);
    const double step = 1e-4;
    for (int f = 0; f < frames; ++f) {
        for (Eigen::Index i = 0; i < cond.frames[f].size(); ++i) {
            Conditioning probe = cond;
            probe.frames[f](i) += step;
            double up = scalar(probe);
            probe.frames[f](i) -= 2.0 * step;
            double down = scalar(probe);
            double fd = (up - down) / (2.0 * step);
            CHECK(analytic.frames[f](i) == doctest::Approx(fd).epsilon(1e-4));
        }
    }
}

TEST_CASE("extractor outputs are deterministic across repeated calls") {
    ExtractorBundle bundle = build_toy_stack(8, 4);
    CHECK(bundle.encoder->deterministic());
    CHECK(bundle.encoder->input_normalization() == InputNormalization::kUnitRange);
    ImageTensor x = seeded_image(88);
    LatentTensor z1 = bundle.encoder->encode(x);
    LatentTensor z2 = bundle.encoder->encode(x);
    for (std::size_t i = 0; i < z1.size(); ++i) {
        CHECK(z1.values()[i] == z2.values()[i]);
    }
    Eigen::VectorXd e1 = bundle.semantic->embed(x);
    Eigen::VectorXd e2 = bundle.semantic->embed(x);
    CHECK((e1 - e2).cwiseAbs().maxCoeff() == 0.0);
    auto m1 = bundle.references[0]->extract(z1);
    auto m2 = bundle.references[0]->extract(z1);
    for (std::size_t m = 0; m < m1.size(); ++m) {
        for (std::size_t i = 0; i < m1[m].size(); ++i) {
            CHECK(m1[m].values()[i] == m2[m].values()[i]);
        }
    }
}

TEST_CASE("toy perceptual distance is a metric-like zero at identity") {
    ExtractorBundle bundle = build_toy_stack(0, 4);
    ImageTensor a = seeded_image(9);
    ImageTensor b = seeded_image(10);
    CHECK(bundle.perceptual->distance(a, a) == 0.0);
    CHECK(bundle.perceptual->distance(a, b) == doctest::Approx(bundle.perceptual->distance(b, a)));
    CHECK(bundle.perceptual->distance(a, b) > 0.0);
}

TEST_CASE("extractors accept larger inputs through their boundary resize") {
    ExtractorBundle bundle = build_toy_stack(0, 4);
    ImageTensor big = seeded_image(3, 16, 16);
    CHECK_NOTHROW(bundle.encoder->encode(big));
    CHECK_NOTHROW(bundle.semantic->embed(big));
    // gradient flows through the resize
    Eigen::VectorXd cot = seeded_cotangent(1, bundle.semantic->embedding_dim());
    auto scalar = [&](const ImageTensor& img) { return bundle.semantic->embed(img).dot(cot); };
    ImageTensor analytic = bundle.semantic->embed_grad(big, cot);
    ImageTensor fd = fd_image_grad(scalar, big, 1e-4);
    CHECK(relative_deviation(analytic.values(), fd.values()) < 1e-4);
}

TEST_CASE("resolve_bundle: toy-default preset resolves with K=3") {
    ExtractorBundle bundle = resolve_bundle(BundleSpec::preset("toy-default"));
    CHECK(bundle.references.size() == 3);
    CHECK(bundle.encoder != nullptr);
    CHECK(bundle.semantic != nullptr);
    CHECK(bundle.predictor != nullptr);
    CHECK(bundle.conditioner != nullptr);
    CHECK(bundle.perceptual != nullptr);
    CHECK(bundle.decoder != nullptr);
}

TEST_CASE("resolve_bundle: references differ across ensemble indices") {
    ExtractorBundle bundle = resolve_bundle(BundleSpec::preset("toy-default"));
    ImageTensor x = seeded_image(2);
    LatentTensor z = bundle.encoder->encode(x);
    auto m0 = bundle.references[0]->extract(z);
    auto m1 = bundle.references[1]->extract(z);
    CHECK(m0[0].values()[0] != m1[0].values()[0]);
}

TEST_CASE("resolve_bundle: unknown names fail atomically") {
    BundleSpec spec = BundleSpec::preset("toy-default");
    spec.predictor.name = "missing-predictor";
    CHECK_THROWS_AS(resolve_bundle(spec), ResolutionError);
    CHECK_THROWS_AS(BundleSpec::preset("production-magic"), ResolutionError);
}

TEST_CASE("resolve_bundle: shape contract mismatches are configuration errors") {
    BundleSpec spec = BundleSpec::preset("toy-default");
    spec.encoder.params["latent_channels"] = 2; // predictor stays at 4
    CHECK_THROWS_AS(resolve_bundle(spec), ConfigurationError);

    BundleSpec no_refs = BundleSpec::preset("toy-default");
    no_refs.references.clear();
    CHECK_THROWS_AS(resolve_bundle(no_refs), ConfigurationError);
}

TEST_CASE("identity encoder reproduces pixels and has an exact adjoint") {
    auto enc = make_identity_encoder(8);
    ImageTensor x = seeded_image(3);
    LatentTensor z = enc->encode(x);
    CHECK(z.shape() == LatentShape{3, 8, 8});
    CHECK(z.at(0, 2, 5) == x.at(2, 5, 0));
    CHECK(z.at(2, 7, 1) == x.at(7, 1, 2));
    LatentTensor cot = latent_cotangent(4, z.shape());
    ImageTensor g = enc->encode_grad(x, cot);
    CHECK(g.at(3, 3, 1) == cot.at(1, 3, 3));
}

} // TEST_SUITE
