#pragma once

#include "gazerl/common.hpp"

namespace gazerl::nn {

/// Adam with bias correction. Moment buffers live in the same precision as
/// the parameters; the per-step scalars are computed in double.
template <class Real>
struct Adam {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long long t = 0;
    std::vector<Real> m, v;

    void reset(std::size_t n) {
        m.assign(n, Real(0));
        v.assign(n, Real(0));
        t = 0;
    }

    void step(std::vector<Real>& params, const std::vector<Real>& grads) {
        if (m.size() != params.size()) reset(params.size());
        ++t;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        const Real b1 = Real(beta1), b2 = Real(beta2);
        const Real one_m_b1 = Real(1.0 - beta1), one_m_b2 = Real(1.0 - beta2);
        const Real scale = Real(lr / bc1);
        const Real vscale = Real(1.0 / bc2);
        const Real e = Real(eps);
        for (std::size_t i = 0; i < params.size(); ++i) {
            const Real g = grads[i];
            m[i] = b1 * m[i] + one_m_b1 * g;
            v[i] = b2 * v[i] + one_m_b2 * g * g;
            params[i] -= scale * m[i] / (std::sqrt(v[i] * vscale) + e);
        }
    }
};

}  // namespace gazerl::nn
