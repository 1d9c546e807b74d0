#pragma once

#include <cstddef>
#include <cstdint>

#include "provlab/tensor.hpp"

namespace provlab {

// Repo-wide seed for the perceptual embedder. All similarity scores in the
// lab are computed under one fixed embedder so they are comparable across
// models and runs.
inline constexpr uint64_t kEmbedderSeed = 0x53494d454d424544ull;
inline constexpr size_t kEmbedDim = 32;

// Deterministic stand-in for a learned copy-detection embedding: 2x2 average
// pooling (a mild blur, so near-duplicates with sampler noise still match),
// mean-centering, a fixed seeded Gaussian random projection to kEmbedDim
// dimensions, then L2 normalization. Pure: same image, same embedding.
class PerceptualEmbedder {
  public:
    explicit PerceptualEmbedder(size_t image_side, uint64_t seed = kEmbedderSeed);

    size_t image_side() const { return side_; }
    size_t dim() const { return kEmbedDim; }

    // Embeds a [side*side] (or [side,side]) image. The embedding has unit L2
    // norm except for the degenerate all-constant image, whose centered
    // projection is exactly zero; that case returns the zero vector and sets
    // *zero_norm when provided.
    Tensor embed(const Tensor& image, bool* zero_norm = nullptr) const;

  private:
    size_t side_ = 0;
    size_t pooled_side_ = 0;
    Tensor proj_;  // [kEmbedDim, pooled_side_^2]
};

// Cosine similarity of the two embeddings, in [-1, 1]. Symmetric. If either
// embedding is degenerate (zero norm), the similarity is defined as 0 and
// *degenerate (when provided) is set.
float perceptual_similarity(const PerceptualEmbedder& embedder, const Tensor& a,
                            const Tensor& b, bool* degenerate = nullptr);

// Per-pixel RMS distance ||a-b||_2 / sqrt(P). For images with values in
// [0,1] the result lies in [0,1]; it is a metric on pixel space.
float recon_distance(const Tensor& a, const Tensor& b);

}  // namespace provlab
