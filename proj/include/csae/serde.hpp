#pragma once

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "csae/concept_map.hpp"
#include "csae/dataset.hpp"
#include "csae/errors.hpp"
#include "csae/eval.hpp"
#include "csae/steering.hpp"
#include "csae/store.hpp"

// JSON forms of the text artifacts (assignments, score tables, plans,
// reports). Concepts serialize by name + domain so files stand on their own;
// loading resolves names against the dataset vocabulary.

namespace csae {

namespace detail {

inline json concept_json(const Dataset& data, ConceptKey c) {
    return {{"name", data.concept_name(c)}, {"domain", domain_name(c.domain)}};
}

inline ConceptKey concept_from_json(const json& j, const Dataset& data, const std::string& where) {
    const std::string name = j.at("name").get<std::string>();
    const std::string dom = j.at("domain").get<std::string>();
    const auto& vocab = dom == "object" ? data.object_names : data.style_names;
    if (dom != "object" && dom != "style") {
        throw StoreError(StoreError::Kind::corrupt, where + ": unknown domain " + dom);
    }
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        if (vocab[i] == name) {
            return {dom == "object" ? Domain::object : Domain::style,
                    static_cast<std::uint16_t>(i)};
        }
    }
    throw StoreError(StoreError::Kind::corrupt,
                     where + ": concept " + name + " not in the dataset vocabulary");
}

inline void check_artifact(const json& j, const std::string& type, const std::string& where) {
    if (!j.is_object() || !j.contains("type") || !j.contains("version")) {
        throw StoreError(StoreError::Kind::corrupt, where + ": missing type/version");
    }
    if (j.at("type").get<std::string>() != type) {
        throw StoreError(StoreError::Kind::corrupt,
                         where + ": expected a " + type + " artifact, got " +
                             j.at("type").get<std::string>());
    }
    if (j.at("version").get<int>() != 1) {
        throw StoreError(StoreError::Kind::bad_version, where + ": unsupported artifact version");
    }
}

}  // namespace detail

// ----- assignment -----

inline json assignment_to_json(const ConceptAssignment& a, const Dataset& data) {
    json concepts = json::array();
    for (const auto& [key, latent] : a.phi) {
        json c = detail::concept_json(data, key);
        c["latent"] = latent;
        concepts.push_back(std::move(c));
    }
    return {{"version", 1}, {"type", "assignment"}, {"concepts", std::move(concepts)}};
}

inline ConceptAssignment assignment_from_json(const json& j, const Dataset& data,
                                              const std::string& where = "assignment") {
    detail::check_artifact(j, "assignment", where);
    ConceptAssignment a;
    for (const json& c : j.at("concepts")) {
        a.phi[detail::concept_from_json(c, data, where)] = c.at("latent").get<std::size_t>();
    }
    return a;
}

// ----- score table -----

inline json score_table_to_json(const ScoreTable& t, const Dataset& data) {
    json concepts = json::array();
    for (std::size_t ci = 0; ci < t.concepts.size(); ++ci) {
        json c = detail::concept_json(data, t.concepts[ci]);
        json rows = json::array();
        for (std::size_t ts = 0; ts < t.timesteps; ++ts) {
            json row = json::array();
            for (std::size_t i = 0; i < t.n_latents; ++i) row.push_back(t.scores[ci](i, ts));
            rows.push_back(std::move(row));
        }
        c["scores"] = std::move(rows);  // [timestep][latent]
        concepts.push_back(std::move(c));
    }
    return {{"version", 1},
            {"type", "score_table"},
            {"n_latents", t.n_latents},
            {"timesteps", t.timesteps},
            {"delta", t.delta},
            {"concepts", std::move(concepts)}};
}

inline ScoreTable score_table_from_json(const json& j, const Dataset& data,
                                        const std::string& where = "score_table") {
    detail::check_artifact(j, "score_table", where);
    ScoreTable t;
    t.n_latents = j.at("n_latents").get<std::size_t>();
    t.timesteps = j.at("timesteps").get<std::size_t>();
    t.delta = j.at("delta").get<double>();
    for (const json& c : j.at("concepts")) {
        t.concepts.push_back(detail::concept_from_json(c, data, where));
        MatD m(t.n_latents, t.timesteps);
        const json& rows = c.at("scores");
        if (rows.size() != t.timesteps) {
            throw StoreError(StoreError::Kind::corrupt, where + ": score row count mismatch");
        }
        for (std::size_t ts = 0; ts < t.timesteps; ++ts) {
            const json& row = rows[ts];
            if (row.size() != t.n_latents) {
                throw StoreError(StoreError::Kind::corrupt, where + ": score column mismatch");
            }
            for (std::size_t i = 0; i < t.n_latents; ++i) m(i, ts) = row[i].get<double>();
        }
        t.scores.push_back(std::move(m));
    }
    return t;
}

// ----- steering plan -----

inline json plan_to_json(const SteeringPlan& plan, const Dataset& data) {
    json concepts = json::array();
    for (const auto& [key, iv] : plan.interventions) {
        json c = detail::concept_json(data, key);
        c["latent"] = iv.latent;
        c["gamma"] = iv.gamma;
        c["gate"] = iv.gate;
        c["scale"] = iv.scale;
        concepts.push_back(std::move(c));
    }
    return {{"version", 1},
            {"type", "steering_plan"},
            {"n_latents", plan.n_latents},
            {"timesteps", plan.timesteps},
            {"concepts", std::move(concepts)}};
}

inline SteeringPlan plan_from_json(const json& j, const Dataset& data,
                                   const std::string& where = "steering_plan") {
    detail::check_artifact(j, "steering_plan", where);
    SteeringPlan plan;
    plan.n_latents = j.at("n_latents").get<std::size_t>();
    plan.timesteps = j.at("timesteps").get<std::size_t>();
    for (const json& c : j.at("concepts")) {
        ConceptIntervention iv;
        iv.latent = c.at("latent").get<std::size_t>();
        iv.gamma = c.at("gamma").get<double>();
        iv.gate = c.at("gate").get<VecD>();
        iv.scale = c.at("scale").get<VecD>();
        if (iv.gamma >= 0.0) {
            throw StoreError(StoreError::Kind::corrupt, where + ": multiplier must be negative");
        }
        if (iv.gate.size() != plan.timesteps || iv.scale.size() != plan.timesteps) {
            throw StoreError(StoreError::Kind::corrupt, where + ": gate/scale length mismatch");
        }
        plan.interventions[detail::concept_from_json(c, data, where)] = std::move(iv);
    }
    return plan;
}

// ----- reports -----

inline json report_to_json(const UnlearnReport& r, const Dataset& data) {
    json j = detail::concept_json(data, r.target);
    return {{"version", 1},
            {"type", "unlearn_report"},
            {"target", std::move(j)},
            {"ua", r.ua},
            {"ira", r.ira},
            {"cra", r.cra},
            {"average", r.average},
            {"evaluations", r.evaluation_count}};
}

inline json sweep_records_to_json(const std::vector<SweepRecord>& records, const Dataset& data) {
    json concepts = json::array();
    for (const auto& rec : records) {
        json c = detail::concept_json(data, rec.key);
        c["candidates"] = rec.candidates;
        c["metrics"] = rec.metrics;
        c["best_gamma"] = rec.best_gamma;
        c["best_metric"] = rec.best_metric;
        c["evaluations"] = rec.evaluations;
        concepts.push_back(std::move(c));
    }
    return {{"version", 1}, {"type", "multiplier_sweep"}, {"concepts", std::move(concepts)}};
}

// Reads the per-concept best multipliers back from a sweep artifact.
inline std::map<ConceptKey, double> multipliers_from_sweep_json(const json& j, const Dataset& data,
                                                                const std::string& where =
                                                                    "multiplier_sweep") {
    detail::check_artifact(j, "multiplier_sweep", where);
    std::map<ConceptKey, double> out;
    for (const json& c : j.at("concepts")) {
        out[detail::concept_from_json(c, data, where)] = c.at("best_gamma").get<double>();
    }
    return out;
}

inline json curve_to_json(const SweepCurve& curve) {
    json points = json::array();
    for (const auto& p : curve.points) {
        points.push_back({{"gamma", p.gamma},
                          {"ua", p.ua},
                          {"ira", p.ira},
                          {"cra", p.cra},
                          {"average", p.average}});
    }
    return {{"version", 1}, {"type", "uniform_sweep"}, {"points", std::move(points)}};
}

inline json sequential_to_json(const SequentialReport& r, const Dataset& data) {
    json tasks = json::array();
    for (const auto& t : r.tasks) {
        json erased = json::array();
        for (ConceptKey c : t.erased) erased.push_back(data.concept_name(c));
        tasks.push_back({{"task", t.task_index},
                         {"erased", std::move(erased)},
                         {"ua", t.ua},
                         {"retention", t.retention}});
    }
    return {{"version", 1}, {"type", "sequential_report"}, {"tasks", std::move(tasks)}};
}

inline json centralization_to_json(const std::vector<CentralizationRow>& rows,
                                   const Dataset& data) {
    json concepts = json::array();
    for (const auto& row : rows) {
        json c = detail::concept_json(data, row.key);
        c["top_latent"] = row.top_latent;
        c["top_score"] = row.top_score;
        c["runner_up_score"] = row.runner_up_score;
        c["ratio"] = row.ratio;
        c["dominant"] = row.dominant;
        concepts.push_back(std::move(c));
    }
    return {{"version", 1}, {"type", "centralization_report"}, {"concepts", std::move(concepts)}};
}

// ----- delimited tables for external plotting -----

inline std::string curve_tsv(const SweepCurve& curve) {
    std::ostringstream out;
    out << "gamma\tua\tira\tcra\taverage\n";
    for (const auto& p : curve.points) {
        out << p.gamma << '\t' << p.ua << '\t' << p.ira << '\t' << p.cra << '\t' << p.average
            << '\n';
    }
    return out.str();
}

inline std::string sequential_tsv(const SequentialReport& r) {
    std::ostringstream out;
    out << "task\terased_count\tua\tretention\n";
    for (const auto& t : r.tasks) {
        out << t.task_index << '\t' << t.erased.size() << '\t' << t.ua << '\t' << t.retention
            << '\n';
    }
    return out.str();
}

inline std::string sweep_records_tsv(const std::vector<SweepRecord>& records,
                                     const Dataset& data) {
    std::ostringstream out;
    out << "concept\tdomain\tgamma\tmetric\tbest\n";
    for (const auto& rec : records) {
        for (std::size_t i = 0; i < rec.candidates.size(); ++i) {
            out << data.concept_name(rec.key) << '\t' << domain_name(rec.key.domain)
                << '\t' << rec.candidates[i] << '\t' << rec.metrics[i] << '\t'
                << (rec.candidates[i] == rec.best_gamma ? 1 : 0) << '\n';
        }
    }
    return out.str();
}

inline std::string centralization_tsv(const std::vector<CentralizationRow>& rows,
                                      const Dataset& data) {
    std::ostringstream out;
    out << "concept\tdomain\ttop_latent\ttop_score\trunner_up\tratio\tdominant\n";
    for (const auto& row : rows) {
        out << data.concept_name(row.key) << '\t' << domain_name(row.key.domain) << '\t'
            << row.top_latent << '\t' << row.top_score << '\t' << row.runner_up_score << '\t'
            << row.ratio << '\t' << (row.dominant ? 1 : 0) << '\n';
    }
    return out.str();
}

}  // namespace csae
