#pragma once

#include <cmath>
#include <cstdint>

#include "csae/losses.hpp"
#include "csae/sae.hpp"

namespace csae {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adaptive-moment state mirroring SaeParams. Moments kept in double; the
// parameters stay in 32-bit storage.
struct AdamState {
    MatD m_w_enc, v_w_enc;
    VecD m_b_enc, v_b_enc;
    MatD m_w_dec, v_w_dec;
    VecD m_b_pre, v_b_pre;
    std::int64_t step = 0;

    explicit AdamState(const SaeParams& p)
        : m_w_enc(p.n(), p.d()),
          v_w_enc(p.n(), p.d()),
          m_b_enc(p.n(), 0.0),
          v_b_enc(p.n(), 0.0),
          m_w_dec(p.d(), p.n()),
          v_w_dec(p.d(), p.n()),
          m_b_pre(p.d(), 0.0),
          v_b_pre(p.d(), 0.0) {}

    void update(SaeParams& p, const ParamGrads& g, const AdamConfig& cfg) {
        ++step;
        const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
        auto apply = [&](float& param, double grad, double& m, double& v) {
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad * grad;
            const double mhat = m / c1;
            const double vhat = v / c2;
            param = static_cast<float>(static_cast<double>(param) -
                                       cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
        };
        for (std::size_t i = 0; i < p.w_enc.data.size(); ++i) {
            apply(p.w_enc.data[i], g.w_enc.data[i], m_w_enc.data[i], v_w_enc.data[i]);
        }
        for (std::size_t i = 0; i < p.b_enc.size(); ++i) {
            apply(p.b_enc[i], g.b_enc[i], m_b_enc[i], v_b_enc[i]);
        }
        for (std::size_t i = 0; i < p.w_dec.data.size(); ++i) {
            apply(p.w_dec.data[i], g.w_dec.data[i], m_w_dec.data[i], v_w_dec.data[i]);
        }
        for (std::size_t i = 0; i < p.b_pre.size(); ++i) {
            apply(p.b_pre[i], g.b_pre[i], m_b_pre[i], v_b_pre[i]);
        }
    }
};

// Rescales every decoder column to unit L2 norm.
inline void renormalize_decoder(SaeParams& p) {
    const std::size_t n = p.n();
    const std::size_t d = p.d();
    for (std::size_t j = 0; j < n; ++j) {
        double norm2 = 0.0;
        for (std::size_t r = 0; r < d; ++r) {
            const double w = static_cast<double>(p.w_dec(r, j));
            norm2 += w * w;
        }
        if (norm2 <= 0.0) continue;  // leave an all-zero column alone
        const double inv = 1.0 / std::sqrt(norm2);
        for (std::size_t r = 0; r < d; ++r) {
            p.w_dec(r, j) = static_cast<float>(static_cast<double>(p.w_dec(r, j)) * inv);
        }
    }
}

}  // namespace csae
