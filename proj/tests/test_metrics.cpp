#include "doctest.h"

#include <cmath>
#include <limits>

#include "posecloak/metrics.hpp"
#include "posecloak/rng.hpp"

using namespace posecloak;

namespace {

ImageTensor seeded_image(std::uint64_t seed, int h = 16, int w = 16) {
    SplitRng rng(seed);
    ImageTensor img(h, w);
    for (double& v : img.values()) {
        v = rng.uniform(0.0, 1.0);
    }
    return img;
}

EmbeddingSet gaussian_cloud(std::uint64_t seed, int n, const Eigen::VectorXd& mu,
                            const Eigen::MatrixXd& chol_lower, const std::string& id) {
    SplitRng rng(seed);
    EmbeddingSet set;
    set.embedder_id = id;
    set.embeddings.resize(n, mu.size());
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd z(mu.size());
        for (Eigen::Index j = 0; j < mu.size(); ++j) {
            z(j) = rng.normal();
        }
        set.embeddings.row(i) = (mu + chol_lower * z).transpose();
    }
    return set;
}

} // namespace

TEST_SUITE("metrics") {

TEST_CASE("psnr caps at 100 dB for identical images") {
    ImageTensor a = seeded_image(1);
    CHECK(psnr(a, a) == 100.0);
}

TEST_CASE("psnr hand case 0.5 vs 0.75") {
    ImageTensor a = ImageTensor::filled(8, 8, 0.5);
    ImageTensor b = ImageTensor::filled(8, 8, 0.75);
    CHECK(psnr(a, b) == doctest::Approx(12.0412).epsilon(1e-3));
}

TEST_CASE("psnr is symmetric and rejects shape mismatch") {
    ImageTensor a = seeded_image(2);
    ImageTensor b = seeded_image(3);
    CHECK(psnr(a, b) == psnr(b, a));
    ImageTensor c(16, 17);
    CHECK_THROWS_AS(psnr(a, c), std::invalid_argument);
}

TEST_CASE("ssim of an image with itself is exactly 1") {
    ImageTensor a = seeded_image(4);
    CHECK(ssim(a, a) == 1.0);
}

TEST_CASE("ssim matches the constant-patch closed form") {
    const double va = 0.5, vb = 0.6;
    ImageTensor a = ImageTensor::filled(16, 16, va);
    ImageTensor b = ImageTensor::filled(16, 16, vb);
    const double c1 = 0.01 * 0.01;
    // constant patches: variance and covariance vanish, the contrast
    // factor reduces to c2/c2 = 1, only luminance deviates
    double expected = (2.0 * va * vb + c1) / (va * va + vb * vb + c1);
    CHECK(ssim(a, b) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("ssim is symmetric and enforces the window size") {
    ImageTensor a = seeded_image(5);
    ImageTensor b = seeded_image(6);
    CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
    ImageTensor small(8, 8);
    CHECK_THROWS_AS(ssim(small, small), std::invalid_argument);
}

TEST_CASE("frechet_distance is zero for identical Gaussians") {
    Eigen::VectorXd mu(3);
    mu << 1.0, -2.0, 0.5;
    Eigen::MatrixXd cov(3, 3);
    cov << 2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 0.5;
    CHECK(frechet_distance(mu, cov, mu, cov) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("frechet_distance matches the 1-D closed form") {
    SplitRng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        double m1 = rng.uniform(-3.0, 3.0), m2 = rng.uniform(-3.0, 3.0);
        double s1 = rng.uniform(0.1, 2.0), s2 = rng.uniform(0.1, 2.0);
        Eigen::VectorXd mu1(1), mu2(1);
        mu1 << m1;
        mu2 << m2;
        Eigen::MatrixXd c1(1, 1), c2(1, 1);
        c1 << s1 * s1;
        c2 << s2 * s2;
        double expected = (m1 - m2) * (m1 - m2) + (s1 - s2) * (s1 - s2);
        CHECK(frechet_distance(mu1, c1, mu2, c2) == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("frechet_distance 1-D unit cases") {
    Eigen::VectorXd a(1), b(1);
    Eigen::MatrixXd s1(1, 1), s2(1, 1);
    a << 0.0;
    b << 1.0;
    s1 << 1.0;
    s2 << 1.0;
    CHECK(frechet_distance(a, s1, b, s2) == doctest::Approx(1.0).epsilon(1e-9));
    b << 0.0;
    s2 << 4.0; // sigma 2 vs sigma 1
    CHECK(frechet_distance(a, s1, b, s2) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("frechet_distance is symmetric and checks dimensions") {
    Eigen::VectorXd mu1(2), mu2(2);
    mu1 << 0.5, -1.0;
    mu2 << 1.5, 2.0;
    Eigen::MatrixXd c1(2, 2), c2(2, 2);
    c1 << 1.0, 0.2, 0.2, 0.8;
    c2 << 0.6, -0.1, -0.1, 1.4;
    CHECK(frechet_distance(mu1, c1, mu2, c2) ==
          doctest::Approx(frechet_distance(mu2, c2, mu1, c1)).epsilon(1e-9));
    Eigen::VectorXd mu3(3);
    mu3.setZero();
    CHECK_THROWS_AS(frechet_distance(mu1, c1, mu3, c2), std::invalid_argument);
}

TEST_CASE("fid_from_embeddings: identical sets score zero") {
    SplitRng rng(8);
    EmbeddingSet set;
    set.embedder_id = "toy";
    set.embeddings.resize(32, 4);
    for (Eigen::Index i = 0; i < set.embeddings.size(); ++i) {
        set.embeddings.data()[i] = rng.normal();
    }
    CHECK(fid_from_embeddings(set, set) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("fid_from_embeddings approaches the closed form on synthetic Gaussians") {
    Eigen::VectorXd mu1(3), mu2(3);
    mu1 << 0.0, 0.0, 0.0;
    mu2 << 1.0, -0.5, 0.25;
    Eigen::MatrixXd l1(3, 3), l2(3, 3);
    l1 << 1.0, 0, 0, 0.2, 0.9, 0, 0.1, -0.1, 0.7;
    l2 << 1.4, 0, 0, -0.3, 1.1, 0, 0.0, 0.2, 0.8;
    EmbeddingSet ref = gaussian_cloud(10, 10000, mu1, l1, "synthetic");
    EmbeddingSet gen = gaussian_cloud(11, 10000, mu2, l2, "synthetic");
    double expected =
        frechet_distance(mu1, l1 * l1.transpose(), mu2, l2 * l2.transpose());
    double measured = fid_from_embeddings(ref, gen);
    CHECK(measured == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("fid_from_embeddings rejects small sets, mixed embedders and non-finite values") {
    EmbeddingSet a, b;
    a.embedder_id = b.embedder_id = "toy";
    a.embeddings.resize(1, 2);
    b.embeddings.resize(4, 2);
    a.embeddings.setZero();
    b.embeddings.setRandom();
    CHECK_THROWS_AS(fid_from_embeddings(a, b), std::invalid_argument);
    a.embeddings.resize(4, 2);
    a.embeddings.setRandom();
    a.embedder_id = "other";
    CHECK_THROWS_AS(fid_from_embeddings(a, b), std::invalid_argument);
    a.embedder_id = "toy";
    a.embeddings(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(fid_from_embeddings(a, b), std::invalid_argument);
}

TEST_CASE("16-frame chunking discards the remainder") {
    CHECK(complete_chunks(33) == 2);
    CHECK(complete_chunks(32) == 2);
    CHECK(complete_chunks(15) == 0);
    CHECK(complete_chunks(16) == 1);
}

TEST_CASE("cosine_similarity_mean unit and orthogonal cases") {
    EmbeddingSet ref, gen;
    ref.embedder_id = gen.embedder_id = "toy";
    ref.embeddings.resize(3, 2);
    for (int i = 0; i < 3; ++i) {
        ref.embeddings.row(i) << 1.0, 0.0;
    }
    gen = ref;
    CHECK(cosine_similarity_mean(ref, gen) == doctest::Approx(1.0).epsilon(1e-12));
    for (int i = 0; i < 3; ++i) {
        gen.embeddings.row(i) << 0.0, 1.0;
    }
    CHECK(cosine_similarity_mean(ref, gen) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("cosine_similarity_mean matches the double-loop oracle and rejects zeros") {
    SplitRng rng(12);
    EmbeddingSet ref, gen;
    ref.embedder_id = gen.embedder_id = "toy";
    ref.embeddings.resize(4, 3);
    gen.embeddings.resize(5, 3);
    for (Eigen::Index i = 0; i < ref.embeddings.size(); ++i) {
        ref.embeddings.data()[i] = rng.normal();
    }
    for (Eigen::Index i = 0; i < gen.embeddings.size(); ++i) {
        gen.embeddings.data()[i] = rng.normal();
    }
    double expected = 0.0;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 5; ++j) {
            expected += ref.embeddings.row(i).dot(gen.embeddings.row(j)) /
                        (ref.embeddings.row(i).norm() * gen.embeddings.row(j).norm());
        }
    }
    expected /= 20.0;
    CHECK(cosine_similarity_mean(ref, gen) == doctest::Approx(expected).epsilon(1e-12));

    gen.embeddings.row(2).setZero();
    CHECK_THROWS_AS(cosine_similarity_mean(ref, gen), std::invalid_argument);
}

TEST_CASE("evaluate_metrics: perfect generation hits every ceiling") {
    ExtractorBundle bundle = build_toy_stack(0, 4);
    EvalEmbedders embedders;
    embedders.image = embedder_from_semantic(bundle.semantic, "toy-semantic");
    embedders.clip_i = embedders.image;
    embedders.fid_vid = mean_clip_embedder(embedders.image, 16);
    embedders.lpips = bundle.perceptual;

    FrameSequence frames;
    for (int i = 0; i < 3; ++i) {
        frames.push_back(seeded_image(20 + i));
    }
    MetricReport report =
        evaluate_metrics(frames, frames, embedders, {"psnr", "ssim", "lpips", "fid"});
    CHECK(report.metrics.at("psnr").value == 100.0);
    CHECK(report.metrics.at("ssim").value == 1.0);
    CHECK(report.metrics.at("lpips").value == 0.0);
    CHECK(report.metrics.at("fid").value == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("evaluate_metrics: missing embedders degrade gracefully") {
    ExtractorBundle bundle = build_toy_stack(0, 4);
    EvalEmbedders embedders;
    embedders.image = embedder_from_semantic(bundle.semantic, "toy-semantic");
    embedders.lpips = bundle.perceptual;

    FrameSequence frames;
    for (int i = 0; i < 2; ++i) {
        frames.push_back(seeded_image(30 + i));
    }
    MetricReport report = evaluate_metrics(frames, frames, embedders, {"fvd", "fid", "dino"});
    CHECK(report.metrics.at("fvd").skipped);
    CHECK(!report.metrics.at("fvd").reason.empty());
    CHECK(report.metrics.at("dino").skipped);
    CHECK(!report.metrics.at("fid").skipped);
}

TEST_CASE("evaluate_metrics matches the per-metric operations") {
    ExtractorBundle bundle = build_toy_stack(1, 4);
    EvalEmbedders embedders;
    embedders.image = embedder_from_semantic(bundle.semantic, "toy-semantic");
    embedders.lpips = bundle.perceptual;

    FrameSequence ref, gen;
    for (int i = 0; i < 4; ++i) {
        ref.push_back(seeded_image(40 + i));
        gen.push_back(seeded_image(50 + i));
    }
    MetricReport report = evaluate_metrics(ref, gen, embedders, {"psnr", "lpips", "fid"});

    double psnr_acc = 0.0, lpips_acc = 0.0;
    for (int i = 0; i < 4; ++i) {
        psnr_acc += psnr(ref[i], gen[i]);
        lpips_acc += bundle.perceptual->distance(gen[i], ref[i]);
    }
    CHECK(report.metrics.at("psnr").value == doctest::Approx(psnr_acc / 4.0).epsilon(1e-12));
    CHECK(report.metrics.at("lpips").value == doctest::Approx(lpips_acc / 4.0).epsilon(1e-12));
    CHECK(report.metrics.at("fid").value ==
          doctest::Approx(fid_from_embeddings(embed_frames(ref, *embedders.image),
                                              embed_frames(gen, *embedders.image)))
              .epsilon(1e-12));
}

TEST_CASE("a single reference image broadcasts across generated frames") {
    ExtractorBundle bundle = build_toy_stack(3, 4);
    EvalEmbedders embedders;
    embedders.lpips = bundle.perceptual;

    ImageTensor ref_img = seeded_image(80);
    FrameSequence reference;
    reference.push_back(ref_img);
    FrameSequence generated;
    for (int i = 0; i < 3; ++i) {
        generated.push_back(seeded_image(81 + i));
    }
    MetricReport report = evaluate_metrics(reference, generated, embedders, {"psnr", "lpips"});
    double expected_psnr = 0.0;
    for (int i = 0; i < 3; ++i) {
        expected_psnr += psnr(ref_img, generated[i]);
    }
    CHECK(report.metrics.at("psnr").value ==
          doctest::Approx(expected_psnr / 3.0).epsilon(1e-12));

    // mismatched multi-frame reference is rejected
    reference.push_back(seeded_image(90));
    CHECK_THROWS_AS(evaluate_metrics(reference, generated, embedders, {"psnr"}),
                    std::invalid_argument);
}

TEST_CASE("frame-wise metrics are invariant to joint frame permutation") {
    ExtractorBundle bundle = build_toy_stack(2, 4);
    EvalEmbedders embedders;
    embedders.lpips = bundle.perceptual;

    FrameSequence ref, gen, ref_perm, gen_perm;
    std::vector<int> order = {2, 0, 3, 1};
    for (int i = 0; i < 4; ++i) {
        ref.push_back(seeded_image(60 + i));
        gen.push_back(seeded_image(70 + i));
    }
    for (int i : order) {
        ref_perm.push_back(ref[i]);
        gen_perm.push_back(gen[i]);
    }
    MetricReport a = evaluate_metrics(ref, gen, embedders, {"psnr", "ssim", "lpips"});
    MetricReport b = evaluate_metrics(ref_perm, gen_perm, embedders, {"psnr", "ssim", "lpips"});
    for (const char* name : {"psnr", "ssim", "lpips"}) {
        CHECK(a.metrics.at(name).value == doctest::Approx(b.metrics.at(name).value).epsilon(1e-12));
    }
}

TEST_CASE("report serialization carries directions and skip reasons") {
    MetricReport report;
    report.metrics["fid"] = {12.5, "up", false, ""};
    report.metrics["fvd"] = {0.0, "up", true, "no video embedder configured"};
    auto j = report.to_json();
    CHECK(j["fid"]["value"] == 12.5);
    CHECK(j["fid"]["direction"] == "up");
    CHECK(j["fvd"]["skipped"] == true);
    CHECK(j["fvd"]["reason"] == "no video embedder configured");
}

} // TEST_SUITE
