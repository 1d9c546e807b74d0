#pragma once

#include <cstdint>
#include <vector>

#include "provlab/rng.hpp"
#include "provlab/tensor.hpp"

namespace provlab {

enum class OptimizerKind : uint8_t {
    GradientDescent = 0,
    Momentum = 1,
    Adam = 2,
};

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Adam;
    float lr = 1e-3f;
    float momentum = 0.9f;   // momentum only
    float beta1 = 0.9f;      // adam only
    float beta2 = 0.999f;    // adam only
    float eps = 1e-8f;       // adam only
};

// First-order optimizer over a fixed parameter list. Moment buffers are lazily
// sized on the first step and shape-checked on every step after that.
class Optimizer {
public:
    explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {}

    void step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads);

    const OptimizerConfig& config() const { return cfg_; }
    uint64_t steps_taken() const { return t_; }

private:
    OptimizerConfig cfg_;
    uint64_t t_ = 0;
    std::vector<Tensor> m_;  // momentum / first moments
    std::vector<Tensor> v_;  // second moments (adam)
};

// Uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)] — the standard fan-in rule.
void init_uniform_fanin(Tensor& w, size_t fan_in, Rng& rng);

// Uniform in [-sqrt(6/fan_in), +sqrt(6/fan_in)] (std sqrt(2/fan_in)): keeps
// activation scale roughly stationary through rectifier-family layers, so a
// deep trunk is nonlinear from the first step instead of starting in its
// vanishing near-linear regime.
void init_he_uniform(Tensor& w, size_t fan_in, Rng& rng);

// Independent N(0, stddev^2) entries.
void init_gaussian(Tensor& w, float stddev, Rng& rng);

}  // namespace provlab
