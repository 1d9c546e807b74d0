#include "provlab/simembed.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "provlab/rng.hpp"

namespace provlab {

PerceptualEmbedder::PerceptualEmbedder(size_t image_side, uint64_t seed) {
    if (image_side < 2 || image_side % 2 != 0) {
        throw std::invalid_argument("embedder needs an even image side >= 2, got " +
                                    std::to_string(image_side));
    }
    side_ = image_side;
    pooled_side_ = image_side / 2;
    const size_t in_dim = pooled_side_ * pooled_side_;
    proj_ = Tensor({kEmbedDim, in_dim});
    Rng rng(derive_seed(seed, "perceptual-projection"));
    for (size_t i = 0; i < proj_.numel(); ++i) {
        proj_.at(i) = rng.next_gaussian();
    }
}

Tensor PerceptualEmbedder::embed(const Tensor& image, bool* zero_norm) const {
    if (image.numel() != side_ * side_) {
        throw std::invalid_argument("image has " + std::to_string(image.numel()) +
                                    " pixels, embedder expects " +
                                    std::to_string(side_ * side_));
    }
    if (zero_norm != nullptr) *zero_norm = false;

    // 2x2 average pooling.
    const size_t ps = pooled_side_;
    Tensor pooled({ps * ps});
    for (size_t r = 0; r < ps; ++r) {
        for (size_t c = 0; c < ps; ++c) {
            float s = image.at((2 * r) * side_ + 2 * c) +
                      image.at((2 * r) * side_ + 2 * c + 1) +
                      image.at((2 * r + 1) * side_ + 2 * c) +
                      image.at((2 * r + 1) * side_ + 2 * c + 1);
            pooled.at(r * ps + c) = 0.25f * s;
        }
    }

    // Mean-centering makes the embedding ignore overall brightness and maps
    // every all-constant image to exactly zero (the documented degenerate
    // case).
    double mean = 0.0;
    for (size_t i = 0; i < pooled.numel(); ++i) mean += pooled.at(i);
    mean /= double(pooled.numel());
    for (size_t i = 0; i < pooled.numel(); ++i) {
        pooled.at(i) = float(double(pooled.at(i)) - mean);
    }

    Tensor out({kEmbedDim});
    for (size_t d = 0; d < kEmbedDim; ++d) {
        double acc = 0.0;
        const float* row = proj_.data() + d * pooled.numel();
        for (size_t i = 0; i < pooled.numel(); ++i) {
            acc += double(row[i]) * double(pooled.at(i));
        }
        out.at(d) = float(acc);
    }

    double norm = l2_norm(out.vec());
    if (norm == 0.0) {
        if (zero_norm != nullptr) *zero_norm = true;
        return out;  // all zeros
    }
    for (size_t d = 0; d < kEmbedDim; ++d) {
        out.at(d) = float(double(out.at(d)) / norm);
    }
    return out;
}

float perceptual_similarity(const PerceptualEmbedder& embedder, const Tensor& a,
                            const Tensor& b, bool* degenerate) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument("similarity shapes differ: " + a.shape_str() + " vs " +
                                    b.shape_str());
    }
    bool za = false, zb = false;
    Tensor ea = embedder.embed(a, &za);
    Tensor eb = embedder.embed(b, &zb);
    if (degenerate != nullptr) *degenerate = za || zb;
    if (za || zb) return 0.0f;
    double dot = 0.0;
    for (size_t i = 0; i < ea.numel(); ++i) {
        dot += double(ea.at(i)) * double(eb.at(i));
    }
    if (dot > 1.0) dot = 1.0;
    if (dot < -1.0) dot = -1.0;
    return float(dot);
}

float recon_distance(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument("distance shapes differ: " + a.shape_str() + " vs " +
                                    b.shape_str());
    }
    double acc = 0.0;
    for (size_t i = 0; i < a.numel(); ++i) {
        double d = double(a.at(i)) - double(b.at(i));
        acc += d * d;
    }
    return float(std::sqrt(acc / double(a.numel())));
}

}  // namespace provlab
