#pragma once

#include <cmath>
#include <vector>

#include "snowshr/params.hpp"

namespace snowshr {

struct AdamConfig {
    float lr = 1e-3f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float epsilon = 1e-8f;
};

// Adam with bias correction. One state object per parameter set; parameters
// whose gradient was never touched this step are skipped entirely.
class AdamState {
  public:
    explicit AdamState(AdamConfig cfg = {}) : cfg_(cfg) {}

    const AdamConfig& config() const { return cfg_; }
    long step_count() const { return t_; }

    void step(ParamSet& params) {
        if (m_.size() < params.size()) {
            m_.resize(params.size());
            v_.resize(params.size());
        }
        ++t_;
        const float bc1 = 1.0f - std::pow(cfg_.beta1, static_cast<float>(t_));
        const float bc2 = 1.0f - std::pow(cfg_.beta2, static_cast<float>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            Tensor& p = params.tensor(i);
            if (!p.has_grad()) continue;
            auto& m = m_[i];
            auto& v = v_[i];
            if (m.size() != p.size()) {
                m.assign(p.size(), 0.0f);
                v.assign(p.size(), 0.0f);
            }
            const float* g = p.grad();
            float* x = p.data();
            for (std::size_t j = 0; j < p.size(); ++j) {
                m[j] = cfg_.beta1 * m[j] + (1.0f - cfg_.beta1) * g[j];
                v[j] = cfg_.beta2 * v[j] + (1.0f - cfg_.beta2) * g[j] * g[j];
                const float mh = m[j] / bc1;
                const float vh = v[j] / bc2;
                x[j] -= cfg_.lr * mh / (std::sqrt(vh) + cfg_.epsilon);
            }
        }
    }

  private:
    AdamConfig cfg_;
    long t_ = 0;
    std::vector<std::vector<float>> m_, v_;
};

}  // namespace snowshr
