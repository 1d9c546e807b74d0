#pragma once

#include <cstdint>
#include <vector>

#include "provlab/tensor.hpp"

namespace provlab {

// Linear-beta diffusion schedule: beta runs linearly from 1e-4 to 0.02 over
// t_count steps, whatever the step count (the endpoints, not the area under
// the curve, are fixed). Short schedules therefore keep a fairly high
// terminal alpha_bar; sampling still starts from a unit Gaussian and relies
// on the learned denoiser to pull trajectories onto the data manifold.
struct NoiseSchedule {
    uint32_t t_count = 0;
    std::vector<float> beta;       // beta[i] = beta_{i+1}
    std::vector<float> alpha;      // 1 - beta
    std::vector<float> alpha_bar;  // prefix products of alpha

    static constexpr float kBetaStart = 1e-4f;
    static constexpr float kBetaEnd = 0.02f;

    static NoiseSchedule linear(uint32_t t_count);

    // alpha_bar_at(0) == 1 (the no-noise limit)
    float alpha_bar_at(uint32_t t) const;
    float beta_at(uint32_t t) const;   // t in 1..T
    float alpha_at(uint32_t t) const;  // t in 1..T

    void validate() const;
};

// z_t = sqrt(abar_t) * x0 + sqrt(1 - abar_t) * noise; t = 0 returns x0.
Tensor forward_noise(const Tensor& x0, uint32_t t, const Tensor& noise,
                     const NoiseSchedule& schedule);

// Sinusoidal features of the integer timestep, d must be even.
Tensor time_embedding(uint32_t t, size_t d);

}  // namespace provlab
