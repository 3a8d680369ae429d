#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "csae/errors.hpp"
#include "csae/steering.hpp"
#include "csae/synth.hpp"
#include "csae/train.hpp"

namespace csae {

using json = nlohmann::json;

// Whole-run configuration: generator, model shape, both training phases and
// steering. Unknown keys are rejected up front so typos cannot silently fall
// back to defaults.
struct RunConfig {
    struct DataSection {
        std::size_t d = 64;
        std::size_t objects = 20;
        std::size_t styles = 10;
        std::size_t timesteps = 10;
        std::size_t samples_per_pair = 20;
        double noise_sigma = 0.05;
        double coeff_min = 0.75;
        double coeff_max = 1.25;
        double mod_base = 0.6;
        double mod_slope = 0.8;
        double max_pairwise_dot = 0.5;
        std::uint64_t seed = 1;
        // optional near-duplicate request: object pair by name plus cosine
        std::optional<std::string> near_dup_a;
        std::optional<std::string> near_dup_b;
        double near_dup_cosine = 0.95;
    } data;

    ModelConfig model;
    TrainConfig train_unsup;
    TrainConfig train_sup;

    struct SteeringSection {
        std::vector<double> candidates = kDefaultMultiplierCandidates;
        std::map<std::string, double> multipliers;  // by concept name
        double default_gamma = -10.0;
    } steering;

    json resolved() const {
        auto train_json = [](const TrainConfig& t) {
            return json{{"epochs", t.epochs},
                        {"batch_size", t.batch_size},
                        {"learning_rate", t.learning_rate},
                        {"adam_beta1", t.adam_beta1},
                        {"adam_beta2", t.adam_beta2},
                        {"adam_eps", t.adam_eps},
                        {"alpha", t.weights.alpha},
                        {"beta", t.weights.beta},
                        {"gamma", t.weights.gamma},
                        {"lambda", t.weights.lambda},
                        {"supervised_term",
                         t.supervised_term == SupervisedTerm::concept_assignment ? "ca"
                                                                                 : "global_ce"},
                        {"dead_window", t.dead_window},
                        {"grad_clip", t.grad_clip},
                        {"seed", t.seed},
                        {"log_path", t.log_path}};
        };
        json data_json = {{"d", data.d},
                          {"objects", data.objects},
                          {"styles", data.styles},
                          {"timesteps", data.timesteps},
                          {"samples_per_pair", data.samples_per_pair},
                          {"noise_sigma", data.noise_sigma},
                          {"coeff_min", data.coeff_min},
                          {"coeff_max", data.coeff_max},
                          {"mod_base", data.mod_base},
                          {"mod_slope", data.mod_slope},
                          {"max_pairwise_dot", data.max_pairwise_dot},
                          {"seed", data.seed}};
        if (data.near_dup_a && data.near_dup_b) {
            data_json["near_duplicate"] = {{"a", *data.near_dup_a},
                                           {"b", *data.near_dup_b},
                                           {"cosine", data.near_dup_cosine}};
        }
        return json{
            {"data", std::move(data_json)},
            {"model", {{"latents", model.latents}, {"k", model.k}, {"k_aux", model.k_aux}}},
            {"train_unsup", train_json(train_unsup)},
            {"train_sup", train_json(train_sup)},
            {"steering",
             {{"candidates", steering.candidates},
              {"multipliers", steering.multipliers},
              {"default_gamma", steering.default_gamma}}},
        };
    }

    SynthSpec make_spec() const {
        SynthSpec spec = make_default_spec(data.seed, data.objects, data.styles, data.d,
                                           data.timesteps, data.samples_per_pair);
        spec.noise_sigma = data.noise_sigma;
        spec.coeff_min = data.coeff_min;
        spec.coeff_max = data.coeff_max;
        spec.mod_base = data.mod_base;
        spec.mod_slope = data.mod_slope;
        spec.max_pairwise_dot = data.max_pairwise_dot;
        if (data.near_dup_a && data.near_dup_b) {
            std::size_t a = spec.num_objects();
            std::size_t b = spec.num_objects();
            for (std::size_t i = 0; i < spec.object_names.size(); ++i) {
                if (spec.object_names[i] == *data.near_dup_a) a = i;
                if (spec.object_names[i] == *data.near_dup_b) b = i;
            }
            if (a >= spec.num_objects() || b >= spec.num_objects()) {
                throw ValidationError("config: near_duplicate names not in the object vocabulary");
            }
            spec = make_near_duplicates(std::move(spec), a, b, data.near_dup_cosine);
        }
        spec.validate();
        return spec;
    }
};

namespace detail {

inline void expect_keys(const json& obj, std::initializer_list<const char*> allowed,
                        const std::string& where) {
    if (!obj.is_object()) throw ValidationError("config: " + where + " must be an object");
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            if (key == a) {
                ok = true;
                break;
            }
        }
        if (!ok) throw ValidationError("config: unknown key \"" + key + "\" in " + where);
    }
}

template <typename T>
void maybe(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

inline void parse_train_section(const json& j, TrainConfig& t, const std::string& where) {
    expect_keys(j,
                {"epochs", "batch_size", "learning_rate", "adam_beta1", "adam_beta2", "adam_eps",
                 "alpha", "beta", "gamma", "lambda", "supervised_term", "dead_window", "grad_clip",
                 "seed", "log_path"},
                where);
    maybe(j, "epochs", t.epochs);
    maybe(j, "batch_size", t.batch_size);
    maybe(j, "learning_rate", t.learning_rate);
    maybe(j, "adam_beta1", t.adam_beta1);
    maybe(j, "adam_beta2", t.adam_beta2);
    maybe(j, "adam_eps", t.adam_eps);
    maybe(j, "alpha", t.weights.alpha);
    maybe(j, "beta", t.weights.beta);
    maybe(j, "gamma", t.weights.gamma);
    maybe(j, "lambda", t.weights.lambda);
    maybe(j, "dead_window", t.dead_window);
    maybe(j, "grad_clip", t.grad_clip);
    maybe(j, "seed", t.seed);
    maybe(j, "log_path", t.log_path);
    if (j.contains("supervised_term")) {
        const std::string term = j.at("supervised_term").get<std::string>();
        if (term == "ca") {
            t.supervised_term = SupervisedTerm::concept_assignment;
        } else if (term == "global_ce") {
            t.supervised_term = SupervisedTerm::global_cross_entropy;
        } else {
            throw ValidationError("config: supervised_term must be \"ca\" or \"global_ce\"");
        }
    }
}

}  // namespace detail

inline RunConfig default_run_config() {
    RunConfig cfg;
    cfg.train_unsup.phase = Phase::unsupervised;
    cfg.train_unsup.epochs = 15;
    cfg.train_unsup.learning_rate = 1e-3;
    cfg.train_unsup.weights = {1.0 / 32.0, 0.0, 0.0, 0.0};
    cfg.train_sup.phase = Phase::supervised;
    cfg.train_sup.epochs = 15;
    cfg.train_sup.learning_rate = 3e-4;
    cfg.train_sup.weights = {1.0 / 32.0, 3.0, 0.1, 0.01};
    return cfg;
}

// Parses and fully validates a config document. Every value has a default;
// unknown keys anywhere are an error.
inline RunConfig parse_run_config(const json& j) {
    RunConfig cfg = default_run_config();
    detail::expect_keys(j, {"data", "model", "train_unsup", "train_sup", "steering"}, "config");
    if (j.contains("data")) {
        const json& d = j.at("data");
        detail::expect_keys(d,
                            {"d", "objects", "styles", "timesteps", "samples_per_pair",
                             "noise_sigma", "coeff_min", "coeff_max", "mod_base", "mod_slope",
                             "max_pairwise_dot", "seed", "near_duplicate"},
                            "data");
        detail::maybe(d, "d", cfg.data.d);
        detail::maybe(d, "objects", cfg.data.objects);
        detail::maybe(d, "styles", cfg.data.styles);
        detail::maybe(d, "timesteps", cfg.data.timesteps);
        detail::maybe(d, "samples_per_pair", cfg.data.samples_per_pair);
        detail::maybe(d, "noise_sigma", cfg.data.noise_sigma);
        detail::maybe(d, "coeff_min", cfg.data.coeff_min);
        detail::maybe(d, "coeff_max", cfg.data.coeff_max);
        detail::maybe(d, "mod_base", cfg.data.mod_base);
        detail::maybe(d, "mod_slope", cfg.data.mod_slope);
        detail::maybe(d, "max_pairwise_dot", cfg.data.max_pairwise_dot);
        detail::maybe(d, "seed", cfg.data.seed);
        if (d.contains("near_duplicate")) {
            const json& nd = d.at("near_duplicate");
            detail::expect_keys(nd, {"a", "b", "cosine"}, "data.near_duplicate");
            cfg.data.near_dup_a = nd.at("a").get<std::string>();
            cfg.data.near_dup_b = nd.at("b").get<std::string>();
            detail::maybe(nd, "cosine", cfg.data.near_dup_cosine);
        }
    }
    if (j.contains("model")) {
        const json& m = j.at("model");
        detail::expect_keys(m, {"latents", "k", "k_aux"}, "model");
        detail::maybe(m, "latents", cfg.model.latents);
        detail::maybe(m, "k", cfg.model.k);
        detail::maybe(m, "k_aux", cfg.model.k_aux);
    }
    if (j.contains("train_unsup")) {
        detail::parse_train_section(j.at("train_unsup"), cfg.train_unsup, "train_unsup");
    }
    if (j.contains("train_sup")) {
        detail::parse_train_section(j.at("train_sup"), cfg.train_sup, "train_sup");
    }
    if (j.contains("steering")) {
        const json& s = j.at("steering");
        detail::expect_keys(s, {"candidates", "multipliers", "default_gamma"}, "steering");
        detail::maybe(s, "candidates", cfg.steering.candidates);
        detail::maybe(s, "default_gamma", cfg.steering.default_gamma);
        if (s.contains("multipliers")) {
            // free-form: keys are concept names
            if (!s.at("multipliers").is_object()) {
                throw ValidationError("config: steering.multipliers must be an object");
            }
            for (const auto& [name, value] : s.at("multipliers").items()) {
                cfg.steering.multipliers[name] = value.get<double>();
            }
        }
    }
    cfg.model.validate();
    cfg.train_unsup.validate();
    cfg.train_sup.validate();
    if (cfg.steering.candidates.empty()) {
        throw ValidationError("config: steering.candidates must not be empty");
    }
    for (double g : cfg.steering.candidates) {
        if (g >= 0) throw ValidationError("config: steering candidates must be negative");
    }
    if (cfg.steering.default_gamma >= 0) {
        throw ValidationError("config: steering.default_gamma must be negative");
    }
    for (const auto& [name, g] : cfg.steering.multipliers) {
        if (g >= 0) {
            throw ValidationError("config: multiplier for " + name + " must be negative");
        }
    }
    return cfg;
}

}  // namespace csae
