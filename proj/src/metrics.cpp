#include "posecloak/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace posecloak {

namespace {

constexpr int kC = ImageTensor::kChannels;
constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimK1 = 0.01;
constexpr double kSsimK2 = 0.03;

void require_same_shape(const ImageTensor& a, const ImageTensor& b) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument("metric operands must share a shape");
    }
}

std::vector<double> ssim_window_weights() {
    std::vector<double> w(kSsimWindow);
    int r = kSsimWindow / 2;
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        double d = i - r;
        w[i] = std::exp(-0.5 * d * d / (kSsimSigma * kSsimSigma));
        sum += w[i];
    }
    for (double& v : w) {
        v /= sum;
    }
    return w;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (m + m.transpose()));
    Eigen::VectorXd ev = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return solver.eigenvectors() * ev.asDiagonal() * solver.eigenvectors().transpose();
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> fit_gaussian(const EmbeddingSet& set) {
    if (set.count() < 2) {
        throw std::invalid_argument("Gaussian fit requires at least two embeddings");
    }
    if (!set.embeddings.allFinite()) {
        throw std::invalid_argument("embedding sets must hold finite values");
    }
    Eigen::VectorXd mu = set.embeddings.colwise().mean();
    Eigen::MatrixXd centered = set.embeddings.rowwise() - mu.transpose();
    Eigen::MatrixXd cov =
        centered.transpose() * centered / static_cast<double>(set.count() - 1);
    return {mu, cov};
}

} // namespace

double psnr(const ImageTensor& a, const ImageTensor& b) {
    require_same_shape(a, b);
    double mse = 0.0;
    auto av = a.values();
    auto bv = b.values();
    for (std::size_t i = 0; i < av.size(); ++i) {
        double d = av[i] - bv[i];
        mse += d * d;
    }
    mse /= static_cast<double>(av.size());
    if (mse == 0.0) {
        return kPsnrCap;
    }
    return std::min(-10.0 * std::log10(mse), kPsnrCap);
}

double ssim(const ImageTensor& a, const ImageTensor& b) {
    require_same_shape(a, b);
    const int h = a.height(), w = a.width();
    if (h < kSsimWindow || w < kSsimWindow) {
        throw std::invalid_argument("image smaller than the SSIM window");
    }
    static const std::vector<double> win = ssim_window_weights();
    const int r = kSsimWindow / 2;
    const double c1 = kSsimK1 * kSsimK1;
    const double c2 = kSsimK2 * kSsimK2;

    // Separable Gaussian filtering of the five moment maps, evaluated on
    // the valid (uncropped) interior.
    double acc = 0.0;
    std::size_t count = 0;
    std::vector<double> row_a(kSsimWindow), row_b(kSsimWindow);
    for (int c = 0; c < kC; ++c) {
        for (int y = r; y < h - r; ++y) {
            for (int x = r; x < w - r; ++x) {
                double ma = 0, mb = 0, maa = 0, mbb = 0, mab = 0;
                for (int dy = -r; dy <= r; ++dy) {
                    double wa = 0, wb = 0, waa = 0, wbb = 0, wab = 0;
                    for (int dx = -r; dx <= r; ++dx) {
                        double pa = a.at(y + dy, x + dx, c);
                        double pb = b.at(y + dy, x + dx, c);
                        double wt = win[dx + r];
                        wa += wt * pa;
                        wb += wt * pb;
                        waa += wt * pa * pa;
                        wbb += wt * pb * pb;
                        wab += wt * pa * pb;
                    }
                    double wt = win[dy + r];
                    ma += wt * wa;
                    mb += wt * wb;
                    maa += wt * waa;
                    mbb += wt * wbb;
                    mab += wt * wab;
                }
                double va = maa - ma * ma;
                double vb = mbb - mb * mb;
                double cov = mab - ma * mb;
                double num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
                double den = (ma * ma + mb * mb + c1) * (va + vb + c2);
                acc += num / den;
                ++count;
            }
        }
    }
    return acc / static_cast<double>(count);
}

double frechet_distance(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& cov1,
                        const Eigen::VectorXd& mu2, const Eigen::MatrixXd& cov2) {
    if (mu1.size() != mu2.size() || cov1.rows() != mu1.size() || cov1.cols() != mu1.size() ||
        cov2.rows() != mu2.size() || cov2.cols() != mu2.size()) {
        throw std::invalid_argument("Gaussian parameter dimensions must match");
    }
    // Tr((S1 S2)^{1/2}) == Tr((A S1 A)^{1/2}) with A = S2^{1/2}; the inner
    // matrix is symmetric PSD so its root comes from one more symmetric
    // eigendecomposition.
    Eigen::MatrixXd a = psd_sqrt(cov2);
    Eigen::MatrixXd inner = a * cov1 * a;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (inner + inner.transpose()));
    double tr_sqrt = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    double mean_term = (mu1 - mu2).squaredNorm();
    double value = mean_term + cov1.trace() + cov2.trace() - 2.0 * tr_sqrt;
    return std::max(value, 0.0);
}

double fid_from_embeddings(const EmbeddingSet& ref, const EmbeddingSet& gen) {
    if (ref.embedder_id != gen.embedder_id) {
        throw std::invalid_argument("embedding sets come from different embedders");
    }
    if (ref.dim() != gen.dim()) {
        throw std::invalid_argument("embedding dimensions must match");
    }
    auto [mu1, cov1] = fit_gaussian(ref);
    auto [mu2, cov2] = fit_gaussian(gen);
    return frechet_distance(mu1, cov1, mu2, cov2);
}

double cosine_similarity_mean(const EmbeddingSet& ref, const EmbeddingSet& gen) {
    if (ref.dim() != gen.dim()) {
        throw std::invalid_argument("embedding dimensions must match");
    }
    if (ref.count() < 1 || gen.count() < 1) {
        throw std::invalid_argument("cosine similarity requires non-empty sets");
    }
    double acc = 0.0;
    for (Eigen::Index i = 0; i < ref.count(); ++i) {
        double ni = ref.embeddings.row(i).norm();
        if (ni == 0.0) {
            throw std::invalid_argument("cosine similarity is undefined for zero vectors");
        }
        for (Eigen::Index j = 0; j < gen.count(); ++j) {
            double nj = gen.embeddings.row(j).norm();
            if (nj == 0.0) {
                throw std::invalid_argument("cosine similarity is undefined for zero vectors");
            }
            acc += ref.embeddings.row(i).dot(gen.embeddings.row(j)) / (ni * nj);
        }
    }
    return acc / static_cast<double>(ref.count() * gen.count());
}

int complete_chunks(int frame_count, int chunk) {
    if (chunk < 1) {
        throw std::invalid_argument("chunk length must be positive");
    }
    return frame_count / chunk;
}

EmbeddingSet embed_frames(const FrameSequence& frames, const ImageEmbedder& embedder) {
    if (frames.empty()) {
        throw std::invalid_argument("cannot embed an empty sequence");
    }
    Eigen::VectorXd first = embedder.embed(frames[0]);
    EmbeddingSet set;
    set.embedder_id = embedder.id();
    set.embeddings.resize(static_cast<Eigen::Index>(frames.size()), first.size());
    set.embeddings.row(0) = first;
    for (std::size_t i = 1; i < frames.size(); ++i) {
        set.embeddings.row(static_cast<Eigen::Index>(i)) = embedder.embed(frames[i]);
    }
    return set;
}

EmbeddingSet embed_clips(const FrameSequence& frames, const VideoEmbedder& embedder) {
    int chunk = embedder.clip_length();
    int n = complete_chunks(static_cast<int>(frames.size()), chunk);
    if (n < 1) {
        throw std::invalid_argument("sequence shorter than one clip");
    }
    EmbeddingSet set;
    set.embedder_id = embedder.id();
    for (int i = 0; i < n; ++i) {
        std::vector<ImageTensor> clip;
        clip.reserve(chunk);
        for (int f = 0; f < chunk; ++f) {
            clip.push_back(frames[static_cast<std::size_t>(i) * chunk + f]);
        }
        Eigen::VectorXd e = embedder.embed_clip(clip);
        if (set.embeddings.size() == 0) {
            set.embeddings.resize(n, e.size());
        }
        set.embeddings.row(i) = e;
    }
    return set;
}

namespace {

class SemanticImageEmbedder final : public ImageEmbedder {
public:
    SemanticImageEmbedder(std::shared_ptr<const SemanticEncoder> sem, std::string id)
        : sem_(std::move(sem)), id_(std::move(id)) {}

    Eigen::VectorXd embed(const ImageTensor& img) const override { return sem_->embed(img); }
    std::string id() const override { return id_; }

private:
    std::shared_ptr<const SemanticEncoder> sem_;
    std::string id_;
};

class MeanClipEmbedder final : public VideoEmbedder {
public:
    MeanClipEmbedder(std::shared_ptr<ImageEmbedder> frame, int clip_length)
        : frame_(std::move(frame)), clip_length_(clip_length) {}

    Eigen::VectorXd embed_clip(const std::vector<ImageTensor>& clip) const override {
        if (clip.empty()) {
            throw std::invalid_argument("cannot embed an empty clip");
        }
        Eigen::VectorXd acc = frame_->embed(clip[0]);
        for (std::size_t i = 1; i < clip.size(); ++i) {
            acc += frame_->embed(clip[i]);
        }
        return acc / static_cast<double>(clip.size());
    }

    std::string id() const override { return frame_->id() + ".clip-mean"; }
    int clip_length() const override { return clip_length_; }

private:
    std::shared_ptr<ImageEmbedder> frame_;
    int clip_length_;
};

} // namespace

std::shared_ptr<ImageEmbedder> embedder_from_semantic(std::shared_ptr<const SemanticEncoder> sem,
                                                      std::string id) {
    return std::make_shared<SemanticImageEmbedder>(std::move(sem), std::move(id));
}

std::shared_ptr<VideoEmbedder> mean_clip_embedder(std::shared_ptr<ImageEmbedder> frame_embedder,
                                                  int clip_length) {
    return std::make_shared<MeanClipEmbedder>(std::move(frame_embedder), clip_length);
}

nlohmann::json MetricReport::to_json() const {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [name, v] : metrics) {
        nlohmann::json entry = {{"direction", v.direction}};
        if (v.skipped) {
            entry["skipped"] = true;
            entry["reason"] = v.reason;
        } else {
            entry["value"] = v.value;
        }
        out[name] = entry;
    }
    return out;
}

MetricReport evaluate_metrics(const FrameSequence& reference, const FrameSequence& generated,
                              const EvalEmbedders& embedders,
                              const std::vector<std::string>& requested) {
    if (generated.empty()) {
        throw std::invalid_argument("generated sequence must be non-empty");
    }
    if (reference.empty()) {
        throw std::invalid_argument("reference must be non-empty");
    }
    bool broadcast_ref = reference.size() == 1;
    if (!broadcast_ref && reference.size() != generated.size()) {
        throw std::invalid_argument(
            "reference and generated sequences must align framewise (or reference must be a "
            "single image)");
    }

    auto aligned_ref = [&](std::size_t i) -> const ImageTensor& {
        return broadcast_ref ? reference[0] : reference[i];
    };

    MetricReport report;
    auto skip = [&](const std::string& name, const std::string& dir, const std::string& reason) {
        report.metrics[name] = {0.0, dir, true, reason};
    };
    auto computed = [](double value, const char* dir) {
        return MetricValue{value, dir, false, ""};
    };

    for (const std::string& name : requested) {
        if (name == "psnr") {
            double acc = 0.0;
            for (std::size_t i = 0; i < generated.size(); ++i) {
                acc += psnr(aligned_ref(i), generated[i]);
            }
            report.metrics["psnr"] = computed(acc / static_cast<double>(generated.size()), "down");
        } else if (name == "ssim") {
            double acc = 0.0;
            for (std::size_t i = 0; i < generated.size(); ++i) {
                acc += ssim(aligned_ref(i), generated[i]);
            }
            report.metrics["ssim"] = computed(acc / static_cast<double>(generated.size()), "down");
        } else if (name == "lpips") {
            if (!embedders.lpips) {
                skip("lpips", "up", "no perceptual distance configured");
                continue;
            }
            double acc = 0.0;
            for (std::size_t i = 0; i < generated.size(); ++i) {
                acc += embedders.lpips->distance(generated[i], aligned_ref(i));
            }
            report.metrics["lpips"] = computed(acc / static_cast<double>(generated.size()), "up");
        } else if (name == "fid") {
            if (!embedders.image) {
                skip("fid", "up", "no image embedder configured");
                continue;
            }
            if (reference.size() < 2 || generated.size() < 2) {
                skip("fid", "up", "needs at least two frames per side");
                continue;
            }
            report.metrics["fid"] =
                computed(fid_from_embeddings(embed_frames(reference, *embedders.image),
                                             embed_frames(generated, *embedders.image)),
                         "up");
        } else if (name == "fid_vid" || name == "fvd") {
            const auto& embedder = name == "fid_vid" ? embedders.fid_vid : embedders.fvd;
            if (!embedder) {
                skip(name, "up", "no video embedder configured");
                continue;
            }
            int chunk = embedder->clip_length();
            if (complete_chunks(static_cast<int>(reference.size()), chunk) < 2 ||
                complete_chunks(static_cast<int>(generated.size()), chunk) < 2) {
                skip(name, "up", "needs at least two complete clips per side");
                continue;
            }
            report.metrics[name] = computed(fid_from_embeddings(embed_clips(reference, *embedder),
                                                                 embed_clips(generated, *embedder)),
                                            "up");
        } else if (name == "clip_i" || name == "dino") {
            const auto& embedder = name == "clip_i" ? embedders.clip_i : embedders.dino;
            if (!embedder) {
                skip(name, "down", "no " + name + " embedder configured");
                continue;
            }
            report.metrics[name] = computed(cosine_similarity_mean(embed_frames(reference, *embedder),
                                                                    embed_frames(generated, *embedder)),
                                            "down");
        } else {
            throw std::invalid_argument("unknown metric '" + name + "'");
        }
    }
    return report;
}

} // namespace posecloak
