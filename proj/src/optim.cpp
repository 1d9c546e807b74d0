#include "provlab/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace provlab {

void Optimizer::step(const std::vector<Tensor*>& params,
                     const std::vector<const Tensor*>& grads) {
    if (params.size() != grads.size()) {
        throw std::invalid_argument("optimizer step: " + std::to_string(params.size()) +
                                    " params vs " + std::to_string(grads.size()) + " grads");
    }
    if (m_.empty() && t_ == 0) {
        m_.reserve(params.size());
        for (const Tensor* p : params) m_.push_back(Tensor::zeros(p->shape()));
        if (cfg_.kind == OptimizerKind::Adam) {
            v_.reserve(params.size());
            for (const Tensor* p : params) v_.push_back(Tensor::zeros(p->shape()));
        }
    }
    if (params.size() != m_.size()) {
        throw std::invalid_argument("optimizer step: parameter list changed size");
    }
    for (size_t i = 0; i < params.size(); ++i) {
        if (!params[i]->same_shape(*grads[i])) {
            throw std::invalid_argument("optimizer step: param " + std::to_string(i) +
                                        " shape " + params[i]->shape_str() +
                                        " vs grad shape " + grads[i]->shape_str());
        }
        if (!params[i]->same_shape(m_[i])) {
            throw std::invalid_argument("optimizer step: param " + std::to_string(i) +
                                        " shape changed since first step");
        }
    }

    ++t_;
    switch (cfg_.kind) {
        case OptimizerKind::GradientDescent: {
            for (size_t i = 0; i < params.size(); ++i) {
                Tensor& p = *params[i];
                const Tensor& g = *grads[i];
                for (size_t j = 0; j < p.numel(); ++j) {
                    p.at(j) -= cfg_.lr * g.at(j);
                }
            }
            break;
        }
        case OptimizerKind::Momentum: {
            for (size_t i = 0; i < params.size(); ++i) {
                Tensor& p = *params[i];
                const Tensor& g = *grads[i];
                Tensor& mom = m_[i];
                for (size_t j = 0; j < p.numel(); ++j) {
                    mom.at(j) = cfg_.momentum * mom.at(j) + g.at(j);
                    p.at(j) -= cfg_.lr * mom.at(j);
                }
            }
            break;
        }
        case OptimizerKind::Adam: {
            float bc1 = 1.0f - std::pow(cfg_.beta1, float(t_));
            float bc2 = 1.0f - std::pow(cfg_.beta2, float(t_));
            for (size_t i = 0; i < params.size(); ++i) {
                Tensor& p = *params[i];
                const Tensor& g = *grads[i];
                Tensor& m = m_[i];
                Tensor& v = v_[i];
                for (size_t j = 0; j < p.numel(); ++j) {
                    float gj = g.at(j);
                    m.at(j) = cfg_.beta1 * m.at(j) + (1.0f - cfg_.beta1) * gj;
                    v.at(j) = cfg_.beta2 * v.at(j) + (1.0f - cfg_.beta2) * gj * gj;
                    float mhat = m.at(j) / bc1;
                    float vhat = v.at(j) / bc2;
                    p.at(j) -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
                }
            }
            break;
        }
    }
}

void init_uniform_fanin(Tensor& w, size_t fan_in, Rng& rng) {
    if (fan_in == 0) {
        throw std::invalid_argument("init_uniform_fanin: fan_in must be positive");
    }
    float bound = 1.0f / std::sqrt(float(fan_in));
    for (size_t i = 0; i < w.numel(); ++i) {
        w.at(i) = rng.next_uniform(-bound, bound);
    }
}

void init_he_uniform(Tensor& w, size_t fan_in, Rng& rng) {
    if (fan_in == 0) {
        throw std::invalid_argument("init_he_uniform: fan_in must be positive");
    }
    float bound = std::sqrt(6.0f / float(fan_in));
    for (size_t i = 0; i < w.numel(); ++i) {
        w.at(i) = rng.next_uniform(-bound, bound);
    }
}

void init_gaussian(Tensor& w, float stddev, Rng& rng) {
    for (size_t i = 0; i < w.numel(); ++i) {
        w.at(i) = stddev * rng.next_gaussian();
    }
}

}  // namespace provlab
