// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "chanpred/errors.hpp"
#include "chanpred/tensor.hpp"

namespace chanpred {

struct Param {
    std::string name;
    Tensor value;
};

using ParamSet = std::vector<Param>;

inline long long param_count(const ParamSet& params) {
    long long n = 0;
    for (const auto& p : params) n += p.value.numel();
    return n;
}

inline void zero_grads(ParamSet& params) {
    for (auto& p : params) p.value.zero_grad();
}

// Adam with bias correction (Kingma & Ba). Moments are kept per parameter
// in registration order; t counts completed steps.
class AdamState {
  public:
    AdamState(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        if (lr <= 0.0 || beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0 || eps <= 0.0)
            throw config_error("AdamState: invalid hyperparameters");
    }

    std::uint64_t step_count() const { return t_; }
    double lr() const { return lr_; }

    // One update over all parameters; grads are read from each tensor's
    // grad buffer (absent grad counts as zero).
    void step(ParamSet& params) {
        if (m_.empty()) {
            m_.resize(params.size());
            v_.resize(params.size());
            for (std::size_t i = 0; i < params.size(); ++i) {
                m_[i].assign(static_cast<std::size_t>(params[i].value.numel()), 0.0);
                v_[i].assign(static_cast<std::size_t>(params[i].value.numel()), 0.0);
            }
        }
        if (m_.size() != params.size()) throw shape_error("AdamState::step: parameter set size changed");
        t_ += 1;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            Tensor& p = params[i].value;
            if (m_[i].size() != static_cast<std::size_t>(p.numel()))
                throw shape_error("AdamState::step: shape of parameter '" + params[i].name + "' changed");
            if (!p.has_grad()) continue;  // no gradient seen: zero update, moments decay is a no-op too
            const auto& g = p.grad_or_empty();
            double* w = p.data();
            for (std::size_t j = 0; j < g.size(); ++j) {
                if (!std::isfinite(g[j]))
                    throw numeric_error("AdamState::step: non-finite gradient in parameter '" + params[i].name + "'");
                m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g[j];
                v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g[j] * g[j];
                const double mhat = m_[i][j] / bc1;
                const double vhat = v_[i][j] / bc2;
                w[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

  private:
    double lr_, beta1_, beta2_, eps_;
    std::uint64_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

}  // namespace chanpred
