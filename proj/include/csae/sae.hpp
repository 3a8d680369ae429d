#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "csae/errors.hpp"
#include "csae/numerics.hpp"
#include "csae/rng.hpp"

namespace csae {

// TopK sparse autoencoder parameters. This is the entire trainable state.
// Decoder columns are kept at unit L2 norm by the optimizer after every step.
struct SaeParams {
    MatF w_enc;  // n x d
    VecF b_enc;  // n
    MatF w_dec;  // d x n
    VecF b_pre;  // d
    std::size_t k = 0;
    std::size_t k_aux = 0;

    std::size_t n() const { return w_enc.rows; }
    std::size_t d() const { return w_enc.cols; }

    void validate() const {
        const std::size_t nn = n();
        const std::size_t dd = d();
        if (nn == 0 || dd == 0) throw ValidationError("SaeParams: empty dimensions");
        if (b_enc.size() != nn) throw ValidationError("SaeParams: b_enc size mismatch");
        if (w_dec.rows != dd || w_dec.cols != nn) {
            throw ValidationError("SaeParams: w_dec must be d x n");
        }
        if (b_pre.size() != dd) throw ValidationError("SaeParams: b_pre size mismatch");
        if (k < 1 || k > nn) throw ValidationError("SaeParams: k out of range");
        if (k_aux < 1 || k_aux > nn) throw ValidationError("SaeParams: k_aux out of range");
        if (!w_enc.all_finite() || !w_dec.all_finite()) {
            throw ValidationError("SaeParams: non-finite weights");
        }
    }

    bool operator==(const SaeParams&) const = default;
};

// One forward pass. v holds the linear pre-activations (the logits that the
// supervised losses operate on); z is ReLU(v) restricted to the TopK support.
// Intermediates are kept in double so gradient checks stay tight.
struct EncodeResult {
    VecD v;                            // n
    std::vector<std::size_t> support;  // exactly k indices, ascending
    VecD z_values;                     // ReLU(v) at support positions
    VecD x_hat;                        // d
};

inline VecD decode(const SaeParams& p, std::span<const std::size_t> support,
                   std::span<const double> values) {
    if (support.size() != values.size()) {
        throw ValidationError("decode: support/values size mismatch");
    }
    VecD x_hat(p.b_pre.begin(), p.b_pre.end());
    const std::size_t n = p.n();
    const std::size_t d = p.d();
    for (std::size_t s = 0; s < support.size(); ++s) {
        const std::size_t j = support[s];
        if (j >= n) throw ValidationError("decode: latent index out of range");
        const double zj = values[s];
        if (zj == 0.0) continue;
        for (std::size_t r = 0; r < d; ++r) {
            x_hat[r] += zj * static_cast<double>(p.w_dec(r, j));
        }
    }
    return x_hat;
}

inline EncodeResult encode(const SaeParams& p, std::span<const float> x) {
    if (x.size() != p.d()) {
        throw ValidationError("encode: input has " + std::to_string(x.size()) +
                              " entries, expected " + std::to_string(p.d()));
    }
    EncodeResult out;
    VecD centered(p.d());
    for (std::size_t r = 0; r < p.d(); ++r) {
        centered[r] = static_cast<double>(x[r]) - static_cast<double>(p.b_pre[r]);
    }
    out.v = matvec_wide(p.w_enc, std::span<const double>(centered));
    for (std::size_t j = 0; j < p.n(); ++j) out.v[j] += static_cast<double>(p.b_enc[j]);

    VecD relu(p.n());
    for (std::size_t j = 0; j < p.n(); ++j) relu[j] = out.v[j] > 0.0 ? out.v[j] : 0.0;
    out.support = topk_mask(std::span<const double>(relu), p.k);
    out.z_values.resize(p.k);
    for (std::size_t s = 0; s < p.k; ++s) out.z_values[s] = relu[out.support[s]];
    out.x_hat = decode(p, out.support, out.z_values);
    return out;
}

// Decoder columns drawn at random and normalized; encoder starts as the
// decoder transpose; b_pre starts at the data mean.
inline SaeParams init_params(std::size_t d, std::size_t n, std::size_t k, std::size_t k_aux,
                             std::span<const float> data_mean, Rng& rng) {
    if (d == 0 || n == 0) throw ValidationError("init_params: empty dimensions");
    if (data_mean.size() != d) throw ValidationError("init_params: data_mean size mismatch");
    SaeParams p;
    p.k = k;
    p.k_aux = k_aux;
    p.w_dec = MatF(d, n);
    p.w_enc = MatF(n, d);
    p.b_enc.assign(n, 0.0f);
    p.b_pre.assign(data_mean.begin(), data_mean.end());
    VecD col(d);
    for (std::size_t j = 0; j < n; ++j) {
        double norm2 = 0.0;
        for (std::size_t r = 0; r < d; ++r) {
            col[r] = rng.next_normal();
            norm2 += col[r] * col[r];
        }
        const double inv = 1.0 / std::sqrt(norm2);
        for (std::size_t r = 0; r < d; ++r) {
            const float w = static_cast<float>(col[r] * inv);
            p.w_dec(r, j) = w;
            p.w_enc(j, r) = w;
        }
    }
    p.validate();
    return p;
}

// Counts samples since each latent last produced a nonzero post-TopK value.
// A latent is dead once the counter reaches the window.
struct DeadLatentTracker {
    std::vector<std::uint32_t> since_fired;
    std::uint32_t window;

    explicit DeadLatentTracker(std::size_t n, std::uint32_t win = 1000)
        : since_fired(n, 0), window(win) {}

    void observe(std::span<const std::size_t> support, std::span<const double> values) {
        std::vector<bool> fired(since_fired.size(), false);
        for (std::size_t s = 0; s < support.size(); ++s) {
            if (values[s] != 0.0) fired[support[s]] = true;
        }
        for (std::size_t j = 0; j < since_fired.size(); ++j) {
            since_fired[j] = fired[j] ? 0 : since_fired[j] + 1;
        }
    }

    bool is_dead(std::size_t j) const { return since_fired[j] >= window; }

    std::vector<std::size_t> dead_set() const {
        std::vector<std::size_t> dead;
        for (std::size_t j = 0; j < since_fired.size(); ++j) {
            if (is_dead(j)) dead.push_back(j);
        }
        return dead;
    }

    std::size_t dead_count() const { return dead_set().size(); }
};

}  // namespace csae
