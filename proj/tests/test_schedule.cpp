#include "doctest.h"

#include <cmath>
#include <map>

#include "posecloak/schedule.hpp"

using namespace posecloak;

TEST_SUITE("schedule") {

TEST_CASE("alpha_bar is the running product of (1 - beta)") {
    DiffusionSchedule s = schedule_from_betas({0.1, 0.2, 0.3, 0.4}, 4);
    REQUIRE(s.alpha_bar.size() == 4);
    CHECK(s.alpha_bar[0] == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(s.alpha_bar[1] == doctest::Approx(0.72).epsilon(1e-12));
    CHECK(s.alpha_bar[2] == doctest::Approx(0.504).epsilon(1e-12));
    CHECK(s.alpha_bar[3] == doctest::Approx(0.3024).epsilon(1e-12));
}

TEST_CASE("alpha_bar decreases for every supported kind") {
    for (const char* kind : {"linear", "scaled_linear"}) {
        DiffusionSchedule s = make_schedule(kind, 1000, 25);
        CHECK(s.alpha_bar.front() > 0.99 - 0.02);
        for (std::size_t t = 1; t < s.alpha_bar.size(); ++t) {
            CHECK(s.alpha_bar[t] < s.alpha_bar[t - 1]);
        }
    }
}

TEST_CASE("unknown schedule kinds are rejected") {
    CHECK_THROWS_AS(make_schedule("cosine", 1000, 25), std::invalid_argument);
}

TEST_CASE("default inference map has 25 strictly increasing entries") {
    DiffusionSchedule s = make_schedule("scaled_linear", 1000, 25);
    REQUIRE(s.inference_index_map.size() == 25);
    // stride 1000/25 = 40
    for (int i = 0; i < 25; ++i) {
        CHECK(s.inference_index_map[i] == i * 40);
    }
}

TEST_CASE("sample_timestep with window 1 always yields the lowest-noise step") {
    DiffusionSchedule s = make_schedule("scaled_linear", 1000, 25);
    SplitRng rng(0);
    for (int i = 0; i < 50; ++i) {
        CHECK(sample_timestep(s, 1, rng) == s.inference_index_map.front());
    }
    for (int i = 0; i < 50; ++i) {
        CHECK(sample_timestep(s, 1, rng, WindowEnd::kHighNoise) == s.inference_index_map.back());
    }
}

TEST_CASE("sample_timestep support is exactly the declared window") {
    DiffusionSchedule s = make_schedule("scaled_linear", 1000, 25);
    SplitRng rng(2);
    std::map<int, int> counts;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        counts[sample_timestep(s, 10, rng)]++;
    }
    REQUIRE(counts.size() == 10);
    // all draws fall on the ten lowest-noise mapped timesteps
    for (const auto& [t, c] : counts) {
        bool in_window = false;
        for (int j = 0; j < 10; ++j) {
            in_window |= t == s.inference_index_map[j];
        }
        CHECK(in_window);
        // 3 sigma around n/10 for a multinomial cell
        double sigma = std::sqrt(n * 0.1 * 0.9);
        CHECK(std::abs(c - n * 0.1) < 3 * sigma);
    }

    // nothing outside the window over a million draws
    int max_in_window = s.inference_index_map[9];
    int outside = 0;
    for (int i = 0; i < 1000000; ++i) {
        int t = sample_timestep(s, 10, rng);
        if (t > max_in_window || t % 40 != 0) {
            ++outside;
        }
    }
    CHECK(outside == 0);
}

TEST_CASE("sample_timestep rejects oversized windows") {
    DiffusionSchedule s = make_schedule("scaled_linear", 1000, 25);
    SplitRng rng(0);
    CHECK_THROWS_AS(sample_timestep(s, 26, rng), std::invalid_argument);
}

TEST_CASE("latent frames are seeded and standard normal") {
    LatentShape shape{4, 4, 4};
    SplitRng a(7), b(7);
    auto fa = sample_latent_frames(5, shape, a);
    auto fb = sample_latent_frames(5, shape, b);
    REQUIRE(fa.size() == 5);
    for (int f = 0; f < 5; ++f) {
        for (std::size_t i = 0; i < fa[f].size(); ++i) {
            CHECK(fa[f].values()[i] == fb[f].values()[i]);
        }
    }

    SplitRng rng(5);
    auto frames = sample_latent_frames(100000 / 64, {4, 4, 4}, rng);
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (const auto& z : frames) {
        for (double v : z.values()) {
            sum += v;
            sq += v * v;
            ++n;
        }
    }
    double mean = sum / n;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(sq / n - mean * mean - 1.0) < 0.02);
}

TEST_CASE("estimate_z0 inverts the forward reparameterization") {
    DiffusionSchedule s = schedule_from_betas({0.1, 0.2, 0.3, 0.4}, 4);
    SplitRng rng(3);
    LatentShape shape{2, 4, 4};
    auto z0 = sample_latent_frames(1, shape, rng)[0];
    auto eps = sample_latent_frames(1, shape, rng)[0];
    for (int t = 0; t < s.train_steps; ++t) {
        LatentTensor zt = diffuse_forward(z0, eps, s.alpha_bar[t]);
        LatentTensor rec = estimate_z0(zt, eps, t, s);
        for (std::size_t i = 0; i < rec.size(); ++i) {
            CHECK(rec.values()[i] == doctest::Approx(z0.values()[i]).epsilon(1e-6));
        }
    }
}

TEST_CASE("estimate_z0 zero-noise limit returns the input") {
    LatentTensor z({1, 1, 1});
    z.at(0, 0, 0) = 0.75;
    LatentTensor eps({1, 1, 1});
    eps.at(0, 0, 0) = -2.0;
    LatentTensor out = estimate_z0(z, eps, 1.0);
    CHECK(out.at(0, 0, 0) == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("estimate_z0 scalar hand case") {
    LatentTensor z({1, 1, 1});
    z.at(0, 0, 0) = 1.0;
    LatentTensor eps({1, 1, 1});
    eps.at(0, 0, 0) = 0.5;
    LatentTensor out = estimate_z0(z, eps, 0.25);
    // (1 - sqrt(0.75) * 0.5) / 0.5
    CHECK(out.at(0, 0, 0) == doctest::Approx(1.1339746).epsilon(1e-6));
}

TEST_CASE("estimate_z0 rejects a vanishing alpha_bar") {
    LatentTensor z({1, 1, 1}), eps({1, 1, 1});
    CHECK_THROWS_AS(estimate_z0(z, eps, 0.0), std::domain_error);
}

} // TEST_SUITE
