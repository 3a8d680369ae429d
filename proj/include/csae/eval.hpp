#pragma once

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "csae/concept_map.hpp"
#include "csae/dataset.hpp"
#include "csae/errors.hpp"
#include "csae/probe.hpp"
#include "csae/sae.hpp"
#include "csae/steering.hpp"

namespace csae {

struct UnlearnReport {
    ConceptKey target;
    double ua = 0.0;   // 1 - probe accuracy on the erased concept under steering
    double ira = 0.0;  // retained same-domain accuracy under steering
    double cra = 0.0;  // cross-domain accuracy under steering
    double average = 0.0;
    std::size_t evaluation_count = 1;
};

struct SweepPoint {
    double gamma = 0.0;
    double ua = 0.0;
    double ira = 0.0;
    double cra = 0.0;
    double average = 0.0;
};

struct SweepCurve {
    std::vector<SweepPoint> points;
};

struct SequentialTask {
    std::size_t task_index = 0;
    std::vector<ConceptKey> erased;
    double ua = 0.0;         // macro over the erased set
    double retention = 0.0;  // macro accuracy over non-erased object concepts
};

struct SequentialReport {
    std::vector<SequentialTask> tasks;
};

// Caches encodings, reconstruction features and the probes for one
// (model, dataset) pair so that sweeps reuse them across plan evaluations.
// The probes are trained on unsteered reconstructions, not on raw inputs,
// so reconstruction error cannot masquerade as unlearning.
class Evaluator {
  public:
    Evaluator(const SaeParams& model, const Dataset& data) : model_(model), data_(data) {
        model.validate();
        data.validate();
        enc_.reserve(data.size());
        for (const auto& sample : data.samples) enc_.push_back(encode(model, sample.x));
        stats_ = compute_stats(model, data, enc_);
        const Representation recon = [this](const ActivationSample& s) {
            return enc_[static_cast<std::size_t>(&s - data_.samples.data())].x_hat;
        };
        object_probe_ = probe_train(data, Domain::object, recon);
        if (data.style_names.size() >= 2) {
            style_probe_ = probe_train(data, Domain::style, recon);
            have_style_probe_ = true;
        }
        const SteeringPlan no_op;
        clean_ = steered_accuracies(no_op, {});
    }

    const ActivationStats& stats() const { return stats_; }
    const Dataset& data() const { return data_; }
    const SaeParams& model() const { return model_; }

    double clean_accuracy(ConceptKey c) const {
        const auto& acc = c.domain == Domain::object ? clean_.object : clean_.style;
        return acc.at(c.index);
    }

    UnlearnReport evaluate(const SteeringPlan& plan, ConceptKey target) const {
        const ConceptKey active[] = {target};
        const Accuracies acc = steered_accuracies(plan, active);
        UnlearnReport rep;
        rep.target = target;
        const auto& same = target.domain == Domain::object ? acc.object : acc.style;
        const auto& cross = target.domain == Domain::object ? acc.style : acc.object;
        rep.ua = 1.0 - same.at(target.index);
        rep.ira = macro_except(same, target.index);
        rep.cra = macro(cross);
        rep.average = (rep.ua + rep.ira + rep.cra) / 3.0;
        return rep;
    }

    struct MultiReport {
        double ua = 0.0;
        double retention = 0.0;
    };

    MultiReport evaluate_multi(const SteeringPlan& plan,
                               std::span<const ConceptKey> erased) const {
        const Accuracies acc = steered_accuracies(plan, erased);
        MultiReport rep;
        double ua_sum = 0.0;
        std::vector<bool> is_erased(data_.object_names.size(), false);
        for (ConceptKey c : erased) {
            const auto& same = c.domain == Domain::object ? acc.object : acc.style;
            ua_sum += 1.0 - same.at(c.index);
            if (c.domain == Domain::object) is_erased[c.index] = true;
        }
        rep.ua = erased.empty() ? 0.0 : ua_sum / static_cast<double>(erased.size());
        double keep_sum = 0.0;
        std::size_t keep_count = 0;
        for (std::size_t c = 0; c < acc.object.size(); ++c) {
            if (is_erased[c] || acc.object[c] < 0.0) continue;
            keep_sum += acc.object[c];
            ++keep_count;
        }
        rep.retention = keep_count == 0 ? 1.0 : keep_sum / static_cast<double>(keep_count);
        return rep;
    }

    // Mean of UA/IRA/CRA; the selection metric for multiplier sweeps.
    double composite_metric(const SteeringPlan& plan, ConceptKey target) const {
        return evaluate(plan, target).average;
    }

  private:
    struct Accuracies {
        std::vector<double> object;  // per class, -1 when absent
        std::vector<double> style;
    };

    static double macro(const std::vector<double>& acc) {
        double sum = 0.0;
        std::size_t count = 0;
        for (double a : acc) {
            if (a < 0.0) continue;
            sum += a;
            ++count;
        }
        return count == 0 ? 1.0 : sum / static_cast<double>(count);
    }

    static double macro_except(const std::vector<double>& acc, std::size_t skip) {
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t c = 0; c < acc.size(); ++c) {
            if (c == skip || acc[c] < 0.0) continue;
            sum += acc[c];
            ++count;
        }
        return count == 0 ? 1.0 : sum / static_cast<double>(count);
    }

    Accuracies steered_accuracies(const SteeringPlan& plan,
                                  std::span<const ConceptKey> active) const {
        const std::size_t d = model_.d();
        std::vector<std::size_t> obj_hits(data_.object_names.size(), 0);
        std::vector<std::size_t> obj_totals(data_.object_names.size(), 0);
        std::vector<std::size_t> sty_hits(data_.style_names.size(), 0);
        std::vector<std::size_t> sty_totals(data_.style_names.size(), 0);
        VecD feat(d);
        for (std::size_t i = 0; i < data_.size(); ++i) {
            const auto& sample = data_.samples[i];
            const EncodeResult& enc = enc_[i];
            feat.assign(enc.x_hat.begin(), enc.x_hat.end());
            if (!active.empty()) {
                const SteeredResult steered = apply(plan, enc, sample.timestep, active);
                for (std::size_t s = 0; s < steered.support.size(); ++s) {
                    const double delta = steered.modified[s] - steered.original[s];
                    if (delta == 0.0) continue;
                    const std::size_t j = steered.support[s];
                    for (std::size_t r = 0; r < d; ++r) {
                        feat[r] += delta * static_cast<double>(model_.w_dec(r, j));
                    }
                }
            }
            if (sample.object != kUnlabeled) {
                obj_totals[sample.object] += 1;
                if (object_probe_.predict(feat) == sample.object) obj_hits[sample.object] += 1;
            }
            if (have_style_probe_ && sample.style != kUnlabeled) {
                sty_totals[sample.style] += 1;
                if (style_probe_.predict(feat) == sample.style) sty_hits[sample.style] += 1;
            }
        }
        Accuracies acc;
        acc.object.assign(data_.object_names.size(), -1.0);
        acc.style.assign(data_.style_names.size(), -1.0);
        for (std::size_t c = 0; c < obj_totals.size(); ++c) {
            if (obj_totals[c] > 0) {
                acc.object[c] = static_cast<double>(obj_hits[c]) /
                                static_cast<double>(obj_totals[c]);
            }
        }
        for (std::size_t c = 0; c < sty_totals.size(); ++c) {
            if (sty_totals[c] > 0) {
                acc.style[c] = static_cast<double>(sty_hits[c]) /
                               static_cast<double>(sty_totals[c]);
            }
        }
        return acc;
    }

    const SaeParams& model_;
    const Dataset& data_;
    std::vector<EncodeResult> enc_;
    ActivationStats stats_;
    LinearProbe object_probe_;
    LinearProbe style_probe_;
    bool have_style_probe_ = false;
    Accuracies clean_;
};

// Steering active only for the target; everything else measures retention.
inline UnlearnReport evaluate_unlearning(const SaeParams& model, const SteeringPlan& plan,
                                         ConceptKey target, const Dataset& data) {
    Evaluator ev(model, data);
    return ev.evaluate(plan, target);
}

// One aggregate report per uniform multiplier, averaging single-concept
// erasure runs over all object concepts.
inline SweepCurve uniform_sweep(const Evaluator& ev, const ConceptAssignment& assignment,
                                std::span<const double> candidates) {
    if (candidates.empty()) throw ValidationError("uniform_sweep: no candidates");
    SweepCurve curve;
    const std::size_t num_objects = ev.data().object_names.size();
    for (double gamma : candidates) {
        SweepPoint pt;
        pt.gamma = gamma;
        for (std::size_t c = 0; c < num_objects; ++c) {
            const ConceptKey key{Domain::object, static_cast<std::uint16_t>(c)};
            std::map<ConceptKey, double> mult{{key, gamma}};
            const ConceptKey one[] = {key};
            const SteeringPlan plan = build_plan(ev.stats(), assignment, one, mult);
            const UnlearnReport rep = ev.evaluate(plan, key);
            pt.ua += rep.ua;
            pt.ira += rep.ira;
            pt.cra += rep.cra;
        }
        const double inv = 1.0 / static_cast<double>(num_objects);
        pt.ua *= inv;
        pt.ira *= inv;
        pt.cra *= inv;
        pt.average = (pt.ua + pt.ira + pt.cra) / 3.0;
        curve.points.push_back(pt);
    }
    return curve;
}

// Erases a growing prefix of `order`, one object per task.
inline SequentialReport sequential_unlearning(const Evaluator& ev,
                                              const ConceptAssignment& assignment,
                                              std::span<const ConceptKey> order,
                                              const std::map<ConceptKey, double>& multipliers) {
    for (ConceptKey c : order) {
        if (c.domain != Domain::object || c.index >= ev.data().object_names.size()) {
            throw ValidationError("sequential_unlearning: order must name known object concepts");
        }
    }
    SequentialReport report;
    for (std::size_t j = 0; j < order.size(); ++j) {
        std::vector<ConceptKey> erased(order.begin(), order.begin() + j + 1);
        const SteeringPlan plan = build_plan(ev.stats(), assignment, erased, multipliers);
        const Evaluator::MultiReport mr = ev.evaluate_multi(plan, erased);
        SequentialTask task;
        task.task_index = j;
        task.erased = std::move(erased);
        task.ua = mr.ua;
        task.retention = mr.retention;
        report.tasks.push_back(std::move(task));
    }
    return report;
}

// Hyperparameter-search accounting: the single-latent method tries only the
// multiplier grid; the baseline also searches over latent-combination counts.
enum class SearchMode { single_latent, baseline_grid };

inline constexpr std::size_t kMultiplierGridSize = 7;
inline constexpr std::size_t kBaselineLatentCombos = 30;

inline std::size_t search_cost(SearchMode mode) {
    return mode == SearchMode::single_latent ? kMultiplierGridSize
                                             : kMultiplierGridSize * kBaselineLatentCombos;
}

inline double search_reduction_percent() {
    const double single = static_cast<double>(search_cost(SearchMode::single_latent));
    const double grid = static_cast<double>(search_cost(SearchMode::baseline_grid));
    return 100.0 * (1.0 - single / grid);
}

}  // namespace csae
