#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "csae/dataset.hpp"
#include "csae/errors.hpp"
#include "csae/numerics.hpp"
#include "csae/sae.hpp"

namespace csae {

inline constexpr std::size_t kNoClass = static_cast<std::size_t>(-1);

// Composite objective weights: total = recon + alpha*aux + beta*(sup + gamma*oc) + lambda*l1,
// where sup is the concept-assignment term (or its global cross-entropy variant).
struct LossWeights {
    double alpha = 1.0 / 32.0;
    double beta = 0.0;
    double gamma = 0.0;
    double lambda = 0.0;

    void validate() const {
        if (alpha < 0 || beta < 0 || gamma < 0 || lambda < 0) {
            throw ValidationError("LossWeights: weights must be >= 0");
        }
    }
};

enum class SupervisedTerm { concept_assignment, global_cross_entropy };

// One training mini-batch. targets[i] lists the latents assigned to concepts
// present in sample i; object_latents / style_latents are the assigned sets
// used by the decorrelation term; gce_class[i] is the class latent for the
// global cross-entropy variant (kNoClass when the sample has none).
struct Batch {
    MatF x;  // B x d
    std::vector<std::vector<std::size_t>> targets;
    std::vector<std::size_t> object_latents;
    std::vector<std::size_t> style_latents;
    std::vector<std::uint16_t> timesteps;
    std::vector<std::size_t> gce_class;

    std::size_t size() const { return x.rows; }
};

struct LossReport {
    double recon = 0.0;
    double aux = 0.0;
    double ca = 0.0;  // supervised assignment term (CA, or global-CE when that variant is active)
    double oc = 0.0;
    double l1 = 0.0;
    double total = 0.0;
};

struct ParamGrads {
    MatD w_enc;
    VecD b_enc;
    MatD w_dec;
    VecD b_pre;

    explicit ParamGrads(const SaeParams& p)
        : w_enc(p.n(), p.d()), b_enc(p.n(), 0.0), w_dec(p.d(), p.n()), b_pre(p.d(), 0.0) {}

    double global_norm() const {
        double s = 0.0;
        for (double g : w_enc.data) s += g * g;
        for (double g : b_enc) s += g * g;
        for (double g : w_dec.data) s += g * g;
        for (double g : b_pre) s += g * g;
        return std::sqrt(s);
    }

    void scale(double c) {
        for (double& g : w_enc.data) g *= c;
        for (double& g : b_enc) g *= c;
        for (double& g : w_dec.data) g *= c;
        for (double& g : b_pre) g *= c;
    }
};

// Per-sample forward artifacts the trainer needs for dead-latent bookkeeping.
struct BatchTrace {
    std::vector<std::vector<std::size_t>> supports;
    std::vector<VecD> z_values;
};

// ---------------------------------------------------------------------------
// Individual loss terms
// ---------------------------------------------------------------------------

// Squared L2 reconstruction error of one sample. Batch values are means.
template <typename TX>
double recon_loss(std::span<const TX> x, std::span<const double> x_hat) {
    if (x.size() != x_hat.size()) throw ValidationError("recon_loss: length mismatch");
    double s = 0.0;
    for (std::size_t r = 0; r < x.size(); ++r) {
        const double diff = static_cast<double>(x[r]) - x_hat[r];
        s += diff * diff;
    }
    return s;
}

// Top k_aux dead latents ranked by ReLU(v), ties toward the lower latent index.
inline std::vector<std::size_t> aux_selection(std::span<const double> v,
                                              std::span<const std::size_t> dead,
                                              std::size_t k_aux) {
    if (dead.empty()) return {};
    if (dead.size() <= k_aux) return {dead.begin(), dead.end()};
    VecD relu(dead.size());
    for (std::size_t s = 0; s < dead.size(); ++s) {
        relu[s] = v[dead[s]] > 0.0 ? v[dead[s]] : 0.0;
    }
    auto picked = topk_mask(std::span<const double>(relu), k_aux);
    std::vector<std::size_t> out(picked.size());
    for (std::size_t s = 0; s < picked.size(); ++s) out[s] = dead[picked[s]];
    return out;
}

// Residual-fitting auxiliary loss: how well the strongest dead latents
// reconstruct the residual x - x_hat. Zero when no latent is dead.
inline double aux_loss(const SaeParams& p, std::span<const float> x, const EncodeResult& enc,
                       std::span<const std::size_t> dead) {
    if (dead.empty()) return 0.0;
    const auto sel = aux_selection(std::span<const double>(enc.v), dead, p.k_aux);
    VecD e(p.d());
    for (std::size_t r = 0; r < p.d(); ++r) {
        e[r] = static_cast<double>(x[r]) - enc.x_hat[r];
    }
    for (std::size_t j : sel) {
        const double zj = enc.v[j] > 0.0 ? enc.v[j] : 0.0;
        if (zj == 0.0) continue;
        for (std::size_t r = 0; r < p.d(); ++r) e[r] -= zj * static_cast<double>(p.w_dec(r, j));
    }
    double s = 0.0;
    for (double er : e) s += er * er;
    return s;
}

// Mean -log sigmoid(v) over all (sample, assigned latent) target pairs.
inline double ca_loss(const MatD& v_batch, const std::vector<std::vector<std::size_t>>& targets) {
    if (targets.size() != v_batch.rows) throw ValidationError("ca_loss: targets size mismatch");
    std::size_t pairs = 0;
    double s = 0.0;
    for (std::size_t i = 0; i < v_batch.rows; ++i) {
        for (std::size_t j : targets[i]) {
            if (j >= v_batch.cols) throw ValidationError("ca_loss: target latent out of range");
            s -= log_sigmoid(v_batch(i, j));
            ++pairs;
        }
    }
    return pairs == 0 ? 0.0 : s / static_cast<double>(pairs);
}

// Mean squared Pearson correlation between object-latent and style-latent
// pre-activation columns across the batch.
inline double oc_loss(const MatD& v_batch, std::span<const std::size_t> object_latents,
                      std::span<const std::size_t> style_latents) {
    if (object_latents.empty() || style_latents.empty()) return 0.0;
    if (v_batch.rows < 2) return 0.0;
    const std::size_t b = v_batch.rows;
    VecD col_o(b);
    VecD col_s(b);
    double s = 0.0;
    for (std::size_t o : object_latents) {
        for (std::size_t i = 0; i < b; ++i) col_o[i] = v_batch(i, o);
        for (std::size_t st : style_latents) {
            for (std::size_t i = 0; i < b; ++i) col_s[i] = v_batch(i, st);
            const double rho = pearson(std::span<const double>(col_o), std::span<const double>(col_s));
            s += rho * rho;
        }
    }
    return s / static_cast<double>(object_latents.size() * style_latents.size());
}

// Mean absolute pre-activation per latent, averaged over the batch.
inline double l1_loss(const MatD& v_batch) {
    if (v_batch.rows == 0 || v_batch.cols == 0) return 0.0;
    double s = 0.0;
    for (double v : v_batch.data) s += std::abs(v);
    return s / (static_cast<double>(v_batch.rows) * static_cast<double>(v_batch.cols));
}

// Softmax cross-entropy over the whole latent space, mean over samples that
// carry a class latent.
inline double global_ce_loss(const MatD& v_batch, std::span<const std::size_t> class_latent) {
    if (class_latent.size() != v_batch.rows) {
        throw ValidationError("global_ce_loss: class size mismatch");
    }
    std::size_t m = 0;
    double s = 0.0;
    for (std::size_t i = 0; i < v_batch.rows; ++i) {
        const std::size_t c = class_latent[i];
        if (c == kNoClass) continue;
        if (c >= v_batch.cols) throw ValidationError("global_ce_loss: class latent out of range");
        double mx = v_batch(i, 0);
        for (std::size_t j = 1; j < v_batch.cols; ++j) mx = std::max(mx, v_batch(i, j));
        double lse = 0.0;
        for (std::size_t j = 0; j < v_batch.cols; ++j) lse += std::exp(v_batch(i, j) - mx);
        s += mx + std::log(lse) - v_batch(i, c);
        ++m;
    }
    return m == 0 ? 0.0 : s / static_cast<double>(m);
}

// ---------------------------------------------------------------------------
// Composite loss with analytic gradients
// ---------------------------------------------------------------------------
//
// The TopK support, the ReLU activation pattern and the aux selection are
// treated as fixed for the backward pass; selection is piecewise constant, so
// this is the exact gradient almost everywhere. The supervised terms flow
// through the pre-TopK v into w_enc, b_enc and b_pre only.
inline std::pair<LossReport, ParamGrads> total_loss_and_grads(
    const SaeParams& p, const Batch& batch, const LossWeights& w,
    std::span<const std::size_t> dead, SupervisedTerm term = SupervisedTerm::concept_assignment,
    BatchTrace* trace = nullptr) {
    p.validate();
    w.validate();
    const std::size_t b = batch.size();
    const std::size_t n = p.n();
    const std::size_t d = p.d();
    if (b == 0) throw ValidationError("total_loss_and_grads: empty batch");
    if (batch.x.cols != d) throw ValidationError("total_loss_and_grads: batch dim mismatch");
    if (batch.targets.size() != b) throw ValidationError("total_loss_and_grads: targets mismatch");

    ParamGrads g(p);
    LossReport rep;
    const double inv_b = 1.0 / static_cast<double>(b);

    MatD v(b, n);
    MatD xc(b, d);
    MatD res(b, d);
    MatD aux_e(b, d);
    std::vector<std::vector<std::size_t>> supports(b);
    std::vector<VecD> zvals(b);
    std::vector<std::vector<std::size_t>> aux_sel(b);
    const bool have_dead = !dead.empty();

    // forward
    for (std::size_t i = 0; i < b; ++i) {
        EncodeResult enc = encode(p, batch.x.row(i));
        for (std::size_t j = 0; j < n; ++j) v(i, j) = enc.v[j];
        supports[i] = std::move(enc.support);
        zvals[i] = std::move(enc.z_values);
        for (std::size_t r = 0; r < d; ++r) {
            xc(i, r) = static_cast<double>(batch.x(i, r)) - static_cast<double>(p.b_pre[r]);
            res(i, r) = static_cast<double>(batch.x(i, r)) - enc.x_hat[r];
        }
        rep.recon += recon_loss(batch.x.row(i), std::span<const double>(enc.x_hat)) * inv_b;
        if (have_dead) {
            aux_sel[i] = aux_selection(v.row(i), dead, p.k_aux);
            for (std::size_t r = 0; r < d; ++r) aux_e(i, r) = res(i, r);
            for (std::size_t j : aux_sel[i]) {
                const double zj = v(i, j) > 0.0 ? v(i, j) : 0.0;
                if (zj == 0.0) continue;
                for (std::size_t r = 0; r < d; ++r) {
                    aux_e(i, r) -= zj * static_cast<double>(p.w_dec(r, j));
                }
            }
            double s = 0.0;
            for (std::size_t r = 0; r < d; ++r) s += aux_e(i, r) * aux_e(i, r);
            rep.aux += s * inv_b;
        }
    }

    // v-level losses and their gradients into gv
    MatD gv(b, n);

    std::size_t pairs = 0;
    for (const auto& t : batch.targets) pairs += t.size();
    if (term == SupervisedTerm::concept_assignment) {
        rep.ca = ca_loss(v, batch.targets);
        if (w.beta > 0.0 && pairs > 0) {
            const double coeff = w.beta / static_cast<double>(pairs);
            for (std::size_t i = 0; i < b; ++i) {
                for (std::size_t j : batch.targets[i]) {
                    gv(i, j) += coeff * (sigmoid(v(i, j)) - 1.0);
                }
            }
        }
    } else {
        if (batch.gce_class.size() != b) {
            throw ValidationError("total_loss_and_grads: gce_class size mismatch");
        }
        rep.ca = global_ce_loss(v, batch.gce_class);
        std::size_t m = 0;
        for (std::size_t c : batch.gce_class) {
            if (c != kNoClass) ++m;
        }
        if (w.beta > 0.0 && m > 0) {
            const double coeff = w.beta / static_cast<double>(m);
            VecD prob(n);
            for (std::size_t i = 0; i < b; ++i) {
                const std::size_t c = batch.gce_class[i];
                if (c == kNoClass) continue;
                double mx = v(i, 0);
                for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, v(i, j));
                double z = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    prob[j] = std::exp(v(i, j) - mx);
                    z += prob[j];
                }
                for (std::size_t j = 0; j < n; ++j) {
                    gv(i, j) += coeff * (prob[j] / z - (j == c ? 1.0 : 0.0));
                }
            }
        }
    }

    rep.oc = oc_loss(v, batch.object_latents, batch.style_latents);
    if (w.beta > 0.0 && w.gamma > 0.0 && !batch.object_latents.empty() &&
        !batch.style_latents.empty() && b >= 2) {
        const double pair_coeff =
            w.beta * w.gamma /
            static_cast<double>(batch.object_latents.size() * batch.style_latents.size());
        // centered columns of the participating latents
        auto centered = [&](std::size_t j, VecD& out, double& sumsq) {
            double mean = 0.0;
            for (std::size_t i = 0; i < b; ++i) mean += v(i, j);
            mean *= inv_b;
            sumsq = 0.0;
            for (std::size_t i = 0; i < b; ++i) {
                out[i] = v(i, j) - mean;
                sumsq += out[i] * out[i];
            }
        };
        VecD co(b);
        VecD cs(b);
        double sq_o = 0.0;
        double sq_s = 0.0;
        for (std::size_t o : batch.object_latents) {
            centered(o, co, sq_o);
            if (sq_o == 0.0) continue;  // zero-variance column: rho = 0, no gradient
            for (std::size_t st : batch.style_latents) {
                centered(st, cs, sq_s);
                if (sq_s == 0.0) continue;
                double dot = 0.0;
                for (std::size_t i = 0; i < b; ++i) dot += co[i] * cs[i];
                const double denom = std::sqrt(sq_o * sq_s);
                const double rho = dot / denom;
                const double c2 = pair_coeff * 2.0 * rho;
                for (std::size_t i = 0; i < b; ++i) {
                    gv(i, o) += c2 * (cs[i] / denom - rho * co[i] / sq_o);
                    gv(i, st) += c2 * (co[i] / denom - rho * cs[i] / sq_s);
                }
            }
        }
    }

    rep.l1 = l1_loss(v);
    if (w.lambda > 0.0) {
        const double coeff = w.lambda / (static_cast<double>(b) * static_cast<double>(n));
        for (std::size_t i = 0; i < b; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                const double vij = v(i, j);
                if (vij > 0.0) {
                    gv(i, j) += coeff;
                } else if (vij < 0.0) {
                    gv(i, j) -= coeff;
                }
            }
        }
    }

    // decoder paths, then the encoder accumulation per sample
    VecD g_xhat(d);
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t r = 0; r < d; ++r) {
            g_xhat[r] = -2.0 * inv_b * res(i, r);
            if (have_dead && w.alpha > 0.0) g_xhat[r] += -2.0 * inv_b * w.alpha * aux_e(i, r);
        }
        // w_dec through the reconstruction support
        for (std::size_t s = 0; s < supports[i].size(); ++s) {
            const std::size_t j = supports[i][s];
            const double zj = zvals[i][s];
            double gz = 0.0;
            for (std::size_t r = 0; r < d; ++r) {
                const double wd = static_cast<double>(p.w_dec(r, j));
                if (zj != 0.0) g.w_dec(r, j) += g_xhat[r] * zj;
                gz += wd * g_xhat[r];
            }
            if (v(i, j) > 0.0) gv(i, j) += gz;
        }
        // w_dec and z through the explicit aux reconstruction
        if (have_dead && w.alpha > 0.0) {
            const double ac = -2.0 * inv_b * w.alpha;
            for (std::size_t j : aux_sel[i]) {
                const double zj = v(i, j) > 0.0 ? v(i, j) : 0.0;
                double gz = 0.0;
                for (std::size_t r = 0; r < d; ++r) {
                    const double er = aux_e(i, r);
                    if (zj != 0.0) g.w_dec(r, j) += ac * er * zj;
                    gz += static_cast<double>(p.w_dec(r, j)) * ac * er;
                }
                if (v(i, j) > 0.0) gv(i, j) += gz;
            }
        }
        for (std::size_t r = 0; r < d; ++r) g.b_pre[r] += g_xhat[r];

        // encoder: v = w_enc (x - b_pre) + b_enc
        for (std::size_t j = 0; j < n; ++j) {
            const double gvij = gv(i, j);
            if (gvij == 0.0) continue;
            g.b_enc[j] += gvij;
            double* gw = g.w_enc.data.data() + j * d;
            const double* xci = xc.data.data() + i * d;
            const float* we = p.w_enc.data.data() + j * d;
            for (std::size_t r = 0; r < d; ++r) {
                gw[r] += gvij * xci[r];
                g.b_pre[r] -= gvij * static_cast<double>(we[r]);
            }
        }
    }

    rep.total = rep.recon + w.alpha * rep.aux + w.beta * (rep.ca + w.gamma * rep.oc) +
                w.lambda * rep.l1;

    if (trace != nullptr) {
        trace->supports = std::move(supports);
        trace->z_values = std::move(zvals);
    }
    return {rep, std::move(g)};
}

}  // namespace csae
