#pragma once

#include <cstdint>
#include <string_view>

namespace posecloak {

/// Deterministic random stream with tag-keyed splitting.
///
/// Every run owns one root stream seeded from the configured seed; each
/// consumer works on its own child obtained via fork(tag). Split order:
/// the optimizer forks "init", "eot", "timestep" and "latents", in that
/// order, before the first iteration. Because children are keyed by tag
/// rather than draw position, adding a consumer does not shift the
/// streams of existing ones.
///
/// The generator is splitmix64 with hand-rolled uniform/normal mappings,
/// so sequences are identical across platforms and standard libraries.
class SplitRng {
public:
    explicit SplitRng(std::uint64_t seed);

    /// Child stream derived from this stream's seed and the tag.
    SplitRng fork(std::string_view tag) const;

    std::uint64_t next_u64();

    /// Uniform double in [0, 1).
    double uniform();

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi);

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_int(std::uint64_t n);

    /// Standard normal via Box-Muller.
    double normal();

private:
    std::uint64_t state_;
    std::uint64_t origin_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace posecloak
