#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "csae/concept_map.hpp"
#include "csae/dataset.hpp"
#include "csae/errors.hpp"
#include "csae/sae.hpp"

namespace csae {

// Everything needed to suppress one concept at inference time: its single
// assigned latent, a negative multiplier, the per-timestep firing gate
// (mean activation over all data) and the per-timestep rescale factor
// (mean activation over the concept's own data).
struct ConceptIntervention {
    std::size_t latent = 0;
    double gamma = -1.0;  // < 0
    VecD gate;            // per timestep
    VecD scale;           // per timestep
};

struct SteeringPlan {
    std::size_t n_latents = 0;
    std::size_t timesteps = 0;
    std::map<ConceptKey, ConceptIntervention> interventions;

    bool empty() const { return interventions.empty(); }

    const ConceptIntervention& for_concept(ConceptKey c) const {
        auto it = interventions.find(c);
        if (it == interventions.end()) {
            throw ValidationError("SteeringPlan: concept not in plan");
        }
        return it->second;
    }
};

inline SteeringPlan build_plan(const ActivationStats& stats, const ConceptAssignment& assignment,
                               std::span<const ConceptKey> concepts,
                               const std::map<ConceptKey, double>& multipliers) {
    SteeringPlan plan;
    plan.n_latents = stats.n_latents;
    plan.timesteps = stats.timesteps;
    for (ConceptKey c : concepts) {
        auto it = multipliers.find(c);
        if (it == multipliers.end()) {
            throw ValidationError("build_plan: missing multiplier for a requested concept");
        }
        if (it->second >= 0.0) {
            throw ValidationError("build_plan: multiplier must be negative, got " +
                                  std::to_string(it->second));
        }
        ConceptIntervention iv;
        iv.latent = assignment.latent_of(c);
        iv.gamma = it->second;
        iv.gate.resize(stats.timesteps);
        iv.scale.resize(stats.timesteps);
        const std::size_t ci = stats.concept_pos(c);
        for (std::size_t t = 0; t < stats.timesteps; ++t) {
            iv.gate[t] = stats.mu_all(iv.latent, t);
            iv.scale[t] = stats.mu_concept(ci, iv.latent, t);
        }
        plan.interventions[c] = std::move(iv);
    }
    return plan;
}

struct SteeredResult {
    std::vector<std::size_t> support;
    VecD original;                         // z values on the support
    VecD modified;                         // z values after intervention
    std::vector<std::size_t> intervened;   // latent indices that changed
};

// Applies every active concept's rule to the encode result at timestep t.
// Gates are checked against the original activations and the multiplicative
// factors commute, so composition order cannot matter.
inline SteeredResult apply(const SteeringPlan& plan, const EncodeResult& enc, std::size_t t,
                           std::span<const ConceptKey> active) {
    if (!active.empty() && t >= plan.timesteps) {
        throw ValidationError("steering apply: timestep outside the plan's stats range");
    }
    SteeredResult out;
    out.support = enc.support;
    out.original = enc.z_values;
    out.modified = enc.z_values;
    for (ConceptKey c : active) {
        const ConceptIntervention& iv = plan.for_concept(c);
        for (std::size_t s = 0; s < out.support.size(); ++s) {
            if (out.support[s] != iv.latent) continue;
            if (out.original[s] > iv.gate[t]) {
                out.modified[s] *= iv.gamma * iv.scale[t];
                out.intervened.push_back(iv.latent);
            }
        }
    }
    std::sort(out.intervened.begin(), out.intervened.end());
    out.intervened.erase(std::unique(out.intervened.begin(), out.intervened.end()),
                         out.intervened.end());
    return out;
}

inline VecD steered_reconstruction(const SaeParams& p, const SteeredResult& steered) {
    return decode(p, steered.support, steered.modified);
}

// Per-concept multiplier search: exactly one evaluation per candidate value,
// keeping the single assigned latent fixed. The metric callback scores a
// single-concept plan; higher is better.
struct SweepRecord {
    ConceptKey key;
    std::vector<double> candidates;
    std::vector<double> metrics;
    double best_gamma = 0.0;
    double best_metric = 0.0;
    std::size_t evaluations = 0;
};

using PlanMetric = std::function<double(const SteeringPlan&, ConceptKey)>;

inline std::vector<SweepRecord> multiplier_sweep(const ActivationStats& stats,
                                                 const ConceptAssignment& assignment,
                                                 std::span<const ConceptKey> concepts,
                                                 std::span<const double> candidates,
                                                 const PlanMetric& metric) {
    if (candidates.empty()) throw ValidationError("multiplier_sweep: no candidates");
    std::vector<SweepRecord> records;
    for (ConceptKey c : concepts) {
        SweepRecord rec;
        rec.key = c;
        for (double gamma : candidates) {
            std::map<ConceptKey, double> mult{{c, gamma}};
            const ConceptKey one[] = {c};
            SteeringPlan plan = build_plan(stats, assignment, one, mult);
            const double m = metric(plan, c);
            rec.candidates.push_back(gamma);
            rec.metrics.push_back(m);
            ++rec.evaluations;
            if (rec.evaluations == 1 || m > rec.best_metric) {
                rec.best_metric = m;
                rec.best_gamma = gamma;
            }
        }
        records.push_back(std::move(rec));
    }
    return records;
}

// The Table-6 value set; the default search grid.
inline const std::vector<double> kDefaultMultiplierCandidates = {-1.0,  -5.0,  -10.0, -15.0,
                                                                 -20.0, -25.0, -30.0};

}  // namespace csae
