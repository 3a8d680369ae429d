#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "csae/concept_map.hpp"
#include "csae/dataset.hpp"
#include "csae/errors.hpp"
#include "csae/losses.hpp"
#include "csae/optim.hpp"
#include "csae/rng.hpp"
#include "csae/sae.hpp"

namespace csae {

enum class Phase { unsupervised, supervised };

struct TrainConfig {
    Phase phase = Phase::unsupervised;
    int epochs = 12;
    int batch_size = 64;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    LossWeights weights;
    SupervisedTerm supervised_term = SupervisedTerm::concept_assignment;
    std::uint32_t dead_window = 1000;
    double grad_clip = 1.0;
    std::uint64_t seed = 0;
    std::string log_path;  // empty disables the JSONL log file

    void validate() const {
        weights.validate();
        if (epochs < 0) throw ValidationError("TrainConfig: epochs must be >= 0");
        if (batch_size < 1) throw ValidationError("TrainConfig: batch_size must be >= 1");
        if (learning_rate <= 0) throw ValidationError("TrainConfig: learning_rate must be > 0");
        if (weights.gamma > 0 && weights.beta > 0 && batch_size < 2) {
            throw ValidationError(
                "TrainConfig: batch_size must be >= 2 when the decorrelation term is active");
        }
        if (dead_window < 1) throw ValidationError("TrainConfig: dead_window must be >= 1");
    }
};

struct EpochRecord {
    int epoch = 0;
    LossReport mean;
    std::size_t dead_count = 0;
};

struct TrainResult {
    SaeParams params;
    std::vector<EpochRecord> log;
};

namespace detail {

inline void append_log_line(std::ofstream& out, const EpochRecord& rec) {
    out << "{\"epoch\":" << rec.epoch << ",\"recon\":" << rec.mean.recon
        << ",\"aux\":" << rec.mean.aux << ",\"ca\":" << rec.mean.ca << ",\"oc\":" << rec.mean.oc
        << ",\"l1\":" << rec.mean.l1 << ",\"total\":" << rec.mean.total
        << ",\"dead\":" << rec.dead_count << "}\n";
}

// Builds the supervision fields of a batch from sample labels and the frozen
// assignment. Samples whose concepts are absent from phi contribute only
// unsupervised terms.
inline Batch make_batch(const Dataset& data, std::span<const std::size_t> idx,
                        const ConceptAssignment* assignment) {
    Batch b;
    b.x = MatF(idx.size(), data.d);
    b.targets.resize(idx.size());
    b.timesteps.resize(idx.size());
    b.gce_class.assign(idx.size(), kNoClass);
    if (assignment != nullptr) {
        b.object_latents = assignment->object_latents();
        b.style_latents = assignment->style_latents();
        for (std::size_t o : b.object_latents) {
            for (std::size_t s : b.style_latents) {
                if (o == s) {
                    throw ValidationError(
                        "make_batch: an object and a style concept share latent " +
                        std::to_string(o));
                }
            }
        }
    }
    for (std::size_t row = 0; row < idx.size(); ++row) {
        const auto& sample = data.samples[idx[row]];
        for (std::size_t r = 0; r < data.d; ++r) b.x(row, r) = sample.x[r];
        b.timesteps[row] = sample.timestep;
        if (assignment == nullptr) continue;
        if (sample.object != kUnlabeled) {
            const ConceptKey key{Domain::object, sample.object};
            if (assignment->contains(key)) {
                const std::size_t latent = assignment->latent_of(key);
                b.targets[row].push_back(latent);
                b.gce_class[row] = latent;
            }
        }
        if (sample.style != kUnlabeled) {
            const ConceptKey key{Domain::style, sample.style};
            if (assignment->contains(key)) b.targets[row].push_back(assignment->latent_of(key));
        }
    }
    return b;
}

}  // namespace detail

// One optimization phase over shuffled mini-batches. Decoder columns are
// renormalized after every step; a non-finite total aborts with a diagnostic.
inline TrainResult train_phase(SaeParams params, const Dataset& data, const TrainConfig& cfg,
                               const ConceptAssignment* assignment = nullptr) {
    cfg.validate();
    params.validate();
    data.validate();
    if (data.size() == 0) throw ValidationError("train_phase: empty dataset");
    if (data.d != params.d()) throw ValidationError("train_phase: dataset dim mismatch");
    if (cfg.phase == Phase::supervised && assignment == nullptr) {
        throw ValidationError("train_phase: supervised phase requires an assignment");
    }

    TrainResult result;
    if (cfg.epochs == 0) {
        result.params = std::move(params);
        return result;
    }

    std::ofstream log_file;
    if (!cfg.log_path.empty()) {
        log_file.open(cfg.log_path, std::ios::app);
        if (!log_file) throw ValidationError("train_phase: cannot open log file " + cfg.log_path);
    }

    AdamConfig adam_cfg{cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};
    AdamState adam(params);
    DeadLatentTracker tracker(params.n(), cfg.dead_window);
    Rng rng(cfg.seed);
    const ConceptAssignment* sup =
        cfg.phase == Phase::supervised ? assignment : nullptr;

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng epoch_rng = rng.fork(1000 + static_cast<std::uint64_t>(epoch));
        shuffle(order, epoch_rng);

        LossReport sums;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            std::span<const std::size_t> idx(order.data() + start, stop - start);
            Batch batch = detail::make_batch(data, idx, sup);
            const auto dead = tracker.dead_set();
            BatchTrace trace;
            auto [rep, grads] = total_loss_and_grads(params, batch, cfg.weights, dead,
                                                     cfg.supervised_term, &trace);
            if (!std::isfinite(rep.total)) {
                throw DivergenceError("training diverged at epoch " + std::to_string(epoch) +
                                      ", batch " + std::to_string(batches) +
                                      ": total=" + std::to_string(rep.total) +
                                      " recon=" + std::to_string(rep.recon));
            }
            if (cfg.grad_clip > 0.0) {
                const double gn = grads.global_norm();
                if (gn > cfg.grad_clip) grads.scale(cfg.grad_clip / gn);
            }
            adam.update(params, grads, adam_cfg);
            renormalize_decoder(params);
            for (std::size_t s = 0; s < trace.supports.size(); ++s) {
                tracker.observe(trace.supports[s], trace.z_values[s]);
            }
            sums.recon += rep.recon;
            sums.aux += rep.aux;
            sums.ca += rep.ca;
            sums.oc += rep.oc;
            sums.l1 += rep.l1;
            sums.total += rep.total;
            ++batches;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        const double inv = 1.0 / static_cast<double>(batches);
        rec.mean = {sums.recon * inv, sums.aux * inv,   sums.ca * inv,
                    sums.oc * inv,    sums.l1 * inv,    sums.total * inv};
        rec.dead_count = tracker.dead_count();
        if (log_file.is_open()) detail::append_log_line(log_file, rec);
        result.log.push_back(rec);
    }

    result.params = std::move(params);
    return result;
}

struct ModelConfig {
    std::size_t latents = 1024;
    std::size_t k = 8;
    std::size_t k_aux = 32;

    void validate() const {
        if (latents == 0) throw ValidationError("ModelConfig: latents must be > 0");
        if (k < 1 || k > latents) throw ValidationError("ModelConfig: k out of range");
        if (k_aux < 1 || k_aux > latents) throw ValidationError("ModelConfig: k_aux out of range");
    }
};

struct PipelineResult {
    SaeParams phase1;
    SaeParams params;
    ConceptAssignment assignment;
    ScoreTable phase1_scores;
    std::vector<EpochRecord> log_unsup;
    std::vector<EpochRecord> log_sup;
};

// Unsupervised pretraining, assignment from the pretrained model's scores,
// then supervised fine-tuning against that frozen assignment.
inline PipelineResult run_pipeline(const Dataset& data, const ModelConfig& model,
                                   const TrainConfig& cfg_unsup, const TrainConfig& cfg_sup) {
    model.validate();
    if (data.size() == 0) throw ValidationError("run_pipeline: empty dataset");
    if (cfg_unsup.phase != Phase::unsupervised || cfg_sup.phase != Phase::supervised) {
        throw ValidationError("run_pipeline: config phases must be unsupervised then supervised");
    }

    Rng init_rng = Rng(cfg_unsup.seed).fork(7);
    const VecF mean = data.mean();
    SaeParams start = init_params(data.d, model.latents, model.k, model.k_aux, mean, init_rng);

    PipelineResult out;
    TrainResult unsup = train_phase(std::move(start), data, cfg_unsup, nullptr);
    out.phase1 = unsup.params;
    out.log_unsup = std::move(unsup.log);

    const ActivationStats stats = compute_stats(out.phase1, data);
    out.phase1_scores = compute_scores(stats);
    out.assignment = assign(out.phase1_scores);

    TrainResult sup = train_phase(out.phase1, data, cfg_sup, &out.assignment);
    out.params = std::move(sup.params);
    out.log_sup = std::move(sup.log);
    return out;
}

}  // namespace csae
