#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vendor_json.hpp"

#include "posecloak/extractors.hpp"
#include "posecloak/tensor.hpp"

namespace posecloak {

/// Peak signal-to-noise ratio in dB over a unit data range, capped at
/// 100 dB for identical inputs.
double psnr(const ImageTensor& a, const ImageTensor& b);
inline constexpr double kPsnrCap = 100.0;

/// Mean local SSIM with an 11x11 Gaussian window (sigma 1.5), k1=0.01,
/// k2=0.03, unit data range, averaged over channels. Requires both sides
/// of the image to be at least the window size.
double ssim(const ImageTensor& a, const ImageTensor& b);

/// n x d matrix of embeddings tagged with the producing embedder.
struct EmbeddingSet {
    Eigen::MatrixXd embeddings; // one row per sample
    std::string embedder_id;

    Eigen::Index count() const { return embeddings.rows(); }
    Eigen::Index dim() const { return embeddings.cols(); }
};

/// Squared Gaussian Fréchet distance:
/// |mu1-mu2|^2 + Tr(S1 + S2 - 2 (S1 S2)^{1/2}), with the matrix root taken
/// through symmetric eigendecompositions and negative eigenvalues clipped
/// at zero.
double frechet_distance(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& cov1,
                        const Eigen::VectorXd& mu2, const Eigen::MatrixXd& cov2);

/// Fits a Gaussian (mean, unbiased covariance) to each set and returns
/// their Fréchet distance. Requires at least two samples per set and a
/// shared embedder.
double fid_from_embeddings(const EmbeddingSet& ref, const EmbeddingSet& gen);

/// Mean cosine similarity over all ref x gen pairs. Zero vectors are
/// rejected.
double cosine_similarity_mean(const EmbeddingSet& ref, const EmbeddingSet& gen);

/// Number of complete chunks of `chunk` consecutive frames; the remainder
/// is discarded.
int complete_chunks(int frame_count, int chunk = 16);

/// Embeds a single frame for image-level Fréchet/cosine metrics.
class ImageEmbedder {
public:
    virtual ~ImageEmbedder() = default;
    virtual Eigen::VectorXd embed(const ImageTensor& img) const = 0;
    virtual std::string id() const = 0;
};

/// Embeds one clip (a run of consecutive frames) for video-level metrics.
class VideoEmbedder {
public:
    virtual ~VideoEmbedder() = default;
    virtual Eigen::VectorXd embed_clip(const std::vector<ImageTensor>& clip) const = 0;
    virtual std::string id() const = 0;
    virtual int clip_length() const { return 16; }
};

/// Embeds every frame of a sequence.
EmbeddingSet embed_frames(const FrameSequence& frames, const ImageEmbedder& embedder);

/// Embeds every complete clip of `embedder.clip_length()` consecutive
/// frames; remainder frames are discarded.
EmbeddingSet embed_clips(const FrameSequence& frames, const VideoEmbedder& embedder);

/// Adapts a semantic encoder into an image embedder.
std::shared_ptr<ImageEmbedder> embedder_from_semantic(std::shared_ptr<const SemanticEncoder> sem,
                                                      std::string id);

/// Clip embedder that averages per-frame embeddings across the clip.
std::shared_ptr<VideoEmbedder> mean_clip_embedder(std::shared_ptr<ImageEmbedder> frame_embedder,
                                                  int clip_length = 16);

/// Plugins consumed by evaluate_metrics; any absent entry makes the
/// corresponding metric come back skipped-with-reason.
struct EvalEmbedders {
    std::shared_ptr<ImageEmbedder> image;   // FID
    std::shared_ptr<ImageEmbedder> clip_i;  // CLIP-I cosine
    std::shared_ptr<ImageEmbedder> dino;    // DINO cosine
    std::shared_ptr<VideoEmbedder> fid_vid; // FID-VID
    std::shared_ptr<VideoEmbedder> fvd;     // FVD
    std::shared_ptr<const PerceptualDistance> lpips;
};

struct MetricValue {
    double value = 0.0;
    std::string direction; // "up" or "down": which way means stronger protection
    bool skipped = false;
    std::string reason;
};

struct MetricReport {
    std::map<std::string, MetricValue> metrics;

    nlohmann::json to_json() const;
};

inline const std::vector<std::string> kAllMetrics = {"psnr", "ssim",    "lpips", "fid",
                                                     "fid_vid", "fvd", "clip_i", "dino"};

/// Computes the requested metrics for one generated sequence against a
/// reference sequence (or a single reference image, broadcast framewise).
/// Frame-wise metrics are averaged over aligned frames; distribution
/// metrics are computed over embedded frames/clips. A metric whose
/// embedder is missing is marked skipped and the run continues.
MetricReport evaluate_metrics(const FrameSequence& reference, const FrameSequence& generated,
                              const EvalEmbedders& embedders,
                              const std::vector<std::string>& requested = kAllMetrics);

} // namespace posecloak
