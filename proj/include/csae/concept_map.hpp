#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "csae/dataset.hpp"
#include "csae/errors.hpp"
#include "csae/numerics.hpp"
#include "csae/sae.hpp"

namespace csae {

// Mean post-TopK activation of every latent, per timestep, over the whole
// dataset and per concept stratum. Kept as sums plus counts so complement
// strata come out exact.
struct ActivationStats {
    std::size_t n_latents = 0;
    std::size_t timesteps = 0;
    std::vector<ConceptKey> concepts;

    MatD sum_all;                          // n x T
    std::vector<std::size_t> count_all;    // per t
    std::vector<MatD> sum_concept;         // [concept] n x T
    std::vector<std::vector<std::size_t>> count_concept;

    std::size_t concept_pos(ConceptKey c) const {
        for (std::size_t i = 0; i < concepts.size(); ++i) {
            if (concepts[i] == c) return i;
        }
        throw ValidationError("ActivationStats: concept not covered");
    }

    double mu_all(std::size_t latent, std::size_t t) const {
        if (count_all.at(t) == 0) {
            throw ValidationError("ActivationStats: empty stratum at t=" + std::to_string(t));
        }
        return sum_all(latent, t) / static_cast<double>(count_all[t]);
    }

    double mu_concept(std::size_t ci, std::size_t latent, std::size_t t) const {
        if (count_concept.at(ci).at(t) == 0) {
            throw ValidationError("ActivationStats: empty concept stratum at t=" +
                                  std::to_string(t));
        }
        return sum_concept[ci](latent, t) / static_cast<double>(count_concept[ci][t]);
    }

    double mu_complement(std::size_t ci, std::size_t latent, std::size_t t) const {
        const std::size_t cnt = count_all.at(t) - count_concept.at(ci).at(t);
        if (cnt == 0) {
            throw ValidationError("ActivationStats: empty complement stratum at t=" +
                                  std::to_string(t));
        }
        return (sum_all(latent, t) - sum_concept[ci](latent, t)) / static_cast<double>(cnt);
    }
};

inline ActivationStats compute_stats(const SaeParams& model, const Dataset& data,
                                     std::span<const EncodeResult> encodings = {}) {
    if (data.size() == 0) throw ValidationError("compute_stats: empty dataset");
    if (!encodings.empty() && encodings.size() != data.size()) {
        throw ValidationError("compute_stats: encodings size mismatch");
    }
    ActivationStats st;
    st.n_latents = model.n();
    st.timesteps = data.timesteps;
    st.concepts = data.all_concepts();
    st.sum_all = MatD(st.n_latents, st.timesteps);
    st.count_all.assign(st.timesteps, 0);
    st.sum_concept.assign(st.concepts.size(), MatD(st.n_latents, st.timesteps));
    st.count_concept.assign(st.concepts.size(), std::vector<std::size_t>(st.timesteps, 0));

    const std::size_t num_objects = data.object_names.size();
    for (std::size_t si = 0; si < data.size(); ++si) {
        const auto& sample = data.samples[si];
        const std::size_t t = sample.timestep;
        EncodeResult local;
        const EncodeResult& enc =
            encodings.empty() ? (local = encode(model, sample.x), local) : encodings[si];
        st.count_all[t] += 1;
        std::size_t ci_obj = st.concepts.size();
        std::size_t ci_sty = st.concepts.size();
        if (sample.object != kUnlabeled) {
            ci_obj = sample.object;  // objects come first in all_concepts()
            st.count_concept[ci_obj][t] += 1;
        }
        if (sample.style != kUnlabeled) {
            ci_sty = num_objects + sample.style;
            st.count_concept[ci_sty][t] += 1;
        }
        for (std::size_t s = 0; s < enc.support.size(); ++s) {
            const double z = enc.z_values[s];
            if (z == 0.0) continue;
            const std::size_t j = enc.support[s];
            st.sum_all(j, t) += z;
            if (ci_obj < st.concepts.size()) st.sum_concept[ci_obj](j, t) += z;
            if (ci_sty < st.concepts.size()) st.sum_concept[ci_sty](j, t) += z;
        }
    }
    return st;
}

// Normalized activation contrast between the concept stratum and its
// complement for one latent at one timestep.
inline double score(const ActivationStats& st, std::size_t ci, std::size_t latent, std::size_t t,
                    double delta = 1e-8) {
    double sum_c = 0.0;
    double sum_not = 0.0;
    for (std::size_t j = 0; j < st.n_latents; ++j) {
        sum_c += st.mu_concept(ci, j, t);
        sum_not += st.mu_complement(ci, j, t);
    }
    return st.mu_concept(ci, latent, t) / (sum_c + delta) -
           st.mu_complement(ci, latent, t) / (sum_not + delta);
}

struct ScoreTable {
    std::size_t n_latents = 0;
    std::size_t timesteps = 0;
    double delta = 1e-8;
    std::vector<ConceptKey> concepts;
    std::vector<MatD> scores;  // [concept] n x T

    std::size_t concept_pos(ConceptKey c) const {
        for (std::size_t i = 0; i < concepts.size(); ++i) {
            if (concepts[i] == c) return i;
        }
        throw ValidationError("ScoreTable: concept not covered");
    }

    const MatD& for_concept(ConceptKey c) const { return scores[concept_pos(c)]; }

    // Mean over timesteps; the aggregate behind assignment and reports.
    VecD aggregate(ConceptKey c) const {
        const MatD& m = for_concept(c);
        VecD out(n_latents, 0.0);
        for (std::size_t i = 0; i < n_latents; ++i) {
            double s = 0.0;
            for (std::size_t t = 0; t < timesteps; ++t) s += m(i, t);
            out[i] = s / static_cast<double>(timesteps);
        }
        return out;
    }
};

inline ScoreTable compute_scores(const ActivationStats& st, double delta = 1e-8) {
    ScoreTable table;
    table.n_latents = st.n_latents;
    table.timesteps = st.timesteps;
    table.delta = delta;
    table.concepts = st.concepts;
    table.scores.assign(st.concepts.size(), MatD(st.n_latents, st.timesteps));
    for (std::size_t ci = 0; ci < st.concepts.size(); ++ci) {
        for (std::size_t t = 0; t < st.timesteps; ++t) {
            double sum_c = 0.0;
            double sum_not = 0.0;
            for (std::size_t j = 0; j < st.n_latents; ++j) {
                sum_c += st.mu_concept(ci, j, t);
                sum_not += st.mu_complement(ci, j, t);
            }
            for (std::size_t i = 0; i < st.n_latents; ++i) {
                table.scores[ci](i, t) = st.mu_concept(ci, i, t) / (sum_c + delta) -
                                         st.mu_complement(ci, i, t) / (sum_not + delta);
            }
        }
    }
    return table;
}

// The map from each concept to its single assigned latent.
struct ConceptAssignment {
    std::map<ConceptKey, std::size_t> phi;

    std::size_t latent_of(ConceptKey c) const {
        auto it = phi.find(c);
        if (it == phi.end()) throw ValidationError("ConceptAssignment: concept not assigned");
        return it->second;
    }

    bool contains(ConceptKey c) const { return phi.count(c) > 0; }

    std::vector<std::size_t> domain_latents(Domain dom) const {
        std::vector<std::size_t> out;
        for (const auto& [key, latent] : phi) {
            if (key.domain == dom) out.push_back(latent);
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    std::vector<std::size_t> object_latents() const { return domain_latents(Domain::object); }
    std::vector<std::size_t> style_latents() const { return domain_latents(Domain::style); }
};

inline std::size_t argmax_latent(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;  // ties keep the lower index
    }
    return best;
}

// Phi(c) = argmax over latents of the timestep-mean score, ties toward the
// lower latent index.
inline ConceptAssignment assign(const ScoreTable& table) {
    ConceptAssignment a;
    for (ConceptKey c : table.concepts) {
        const VecD agg = table.aggregate(c);
        a.phi[c] = argmax_latent(agg);
    }
    return a;
}

struct CentralizationRow {
    ConceptKey key;
    std::size_t top_latent = 0;
    double top_score = 0.0;
    double runner_up_score = 0.0;
    double ratio = 0.0;
    bool dominant = false;
};

// Per-concept dominance of the assigned latent over the runner-up, measured
// on the timestep-mean score.
inline std::vector<CentralizationRow> centralization_report(const ScoreTable& table,
                                                            const ConceptAssignment& assignment,
                                                            double margin = 2.0,
                                                            double delta = 1e-8) {
    std::vector<CentralizationRow> rows;
    for (ConceptKey c : table.concepts) {
        const VecD agg = table.aggregate(c);
        CentralizationRow row;
        row.key = c;
        row.top_latent = argmax_latent(agg);
        row.top_score = agg[row.top_latent];
        double runner = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < agg.size(); ++i) {
            if (i != row.top_latent) runner = std::max(runner, agg[i]);
        }
        row.runner_up_score = runner;
        row.ratio = row.top_score / std::max(runner, delta);
        row.dominant = assignment.contains(c) && row.top_latent == assignment.latent_of(c) &&
                       row.ratio >= margin;
        rows.push_back(row);
    }
    return rows;
}

// Number of timesteps at which two concepts share the same top-scoring latent.
inline std::size_t overlap_timesteps(const ScoreTable& table, ConceptKey a, ConceptKey b) {
    const MatD& sa = table.for_concept(a);
    const MatD& sb = table.for_concept(b);
    std::size_t overlap = 0;
    VecD col(table.n_latents);
    for (std::size_t t = 0; t < table.timesteps; ++t) {
        for (std::size_t i = 0; i < table.n_latents; ++i) col[i] = sa(i, t);
        const std::size_t ia = argmax_latent(col);
        for (std::size_t i = 0; i < table.n_latents; ++i) col[i] = sb(i, t);
        const std::size_t ib = argmax_latent(col);
        if (ia == ib) ++overlap;
    }
    return overlap;
}

}  // namespace csae
