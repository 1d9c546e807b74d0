#include "provlab/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace provlab {

NoiseSchedule NoiseSchedule::linear(uint32_t t_count) {
    if (t_count < 2) {
        throw std::invalid_argument("schedule needs at least 2 steps");
    }
    NoiseSchedule s;
    s.t_count = t_count;
    const double b0 = double(kBetaStart);
    const double b1 = double(kBetaEnd);
    s.beta.resize(t_count);
    s.alpha.resize(t_count);
    s.alpha_bar.resize(t_count);
    double prod = 1.0;
    for (uint32_t i = 0; i < t_count; ++i) {
        double frac = double(i) / double(t_count - 1);
        double b = b0 + (b1 - b0) * frac;
        s.beta[i] = float(b);
        // alpha is defined off the stored float beta so the float-level
        // identity alpha == 1 - beta holds exactly; the prefix product runs
        // in double over those floats.
        s.alpha[i] = 1.0f - s.beta[i];
        prod *= double(s.alpha[i]);
        s.alpha_bar[i] = float(prod);
    }
    s.validate();
    return s;
}

float NoiseSchedule::alpha_bar_at(uint32_t t) const {
    if (t == 0) return 1.0f;
    if (t > t_count) {
        throw std::invalid_argument("timestep " + std::to_string(t) + " beyond schedule " +
                                    std::to_string(t_count));
    }
    return alpha_bar[t - 1];
}

float NoiseSchedule::beta_at(uint32_t t) const {
    if (t == 0 || t > t_count) {
        throw std::invalid_argument("timestep " + std::to_string(t) + " out of 1.." +
                                    std::to_string(t_count));
    }
    return beta[t - 1];
}

float NoiseSchedule::alpha_at(uint32_t t) const {
    if (t == 0 || t > t_count) {
        throw std::invalid_argument("timestep " + std::to_string(t) + " out of 1.." +
                                    std::to_string(t_count));
    }
    return alpha[t - 1];
}

void NoiseSchedule::validate() const {
    if (t_count == 0 || beta.size() != t_count || alpha.size() != t_count ||
        alpha_bar.size() != t_count) {
        throw std::invalid_argument("schedule arrays do not match t_count");
    }
    for (uint32_t i = 0; i < t_count; ++i) {
        if (!(beta[i] > 0.0f && beta[i] < 1.0f)) {
            throw std::invalid_argument("beta out of (0,1) at step " + std::to_string(i + 1));
        }
        if (i > 0 && !(beta[i] > beta[i - 1])) {
            throw std::invalid_argument("beta not increasing at step " + std::to_string(i + 1));
        }
        if (i > 0 && !(alpha_bar[i] < alpha_bar[i - 1])) {
            throw std::invalid_argument("alpha_bar not strictly decreasing at step " +
                                        std::to_string(i + 1));
        }
    }
    if (!(alpha_bar[0] < 1.0f)) {
        throw std::invalid_argument("alpha_bar must drop below 1 after the first step");
    }
}

Tensor forward_noise(const Tensor& x0, uint32_t t, const Tensor& noise,
                     const NoiseSchedule& schedule) {
    if (!x0.same_shape(noise)) {
        throw std::invalid_argument("noise shape " + noise.shape_str() +
                                    " does not match image shape " + x0.shape_str());
    }
    if (t > schedule.t_count) {
        throw std::invalid_argument("timestep " + std::to_string(t) + " beyond schedule " +
                                    std::to_string(schedule.t_count));
    }
    if (t == 0) return x0;
    float ab = schedule.alpha_bar_at(t);
    float c0 = std::sqrt(ab);
    float c1 = std::sqrt(1.0f - ab);
    Tensor z(x0.shape());
    for (size_t i = 0; i < z.numel(); ++i) {
        z.at(i) = c0 * x0.at(i) + c1 * noise.at(i);
    }
    return z;
}

Tensor time_embedding(uint32_t t, size_t d) {
    if (d == 0 || d % 2 != 0) {
        throw std::invalid_argument("time embedding dimension must be positive and even");
    }
    const size_t half = d / 2;
    Tensor emb({d});
    for (size_t i = 0; i < half; ++i) {
        double freq = std::exp(-std::log(10000.0) * double(i) / double(half));
        double arg = double(t) * freq;
        emb.at(2 * i) = float(std::sin(arg));
        emb.at(2 * i + 1) = float(std::cos(arg));
    }
    return emb;
}

}  // namespace provlab
