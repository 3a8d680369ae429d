#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "csae/errors.hpp"
#include "csae/numerics.hpp"

namespace csae {

inline constexpr std::uint16_t kUnlabeled = 0xFFFF;

enum class Domain : std::uint8_t { object, style };

inline const char* domain_name(Domain d) { return d == Domain::object ? "object" : "style"; }

// A concept is identified by its domain and its index into that domain's
// vocabulary. Names live on the Dataset.
struct ConceptKey {
    Domain domain = Domain::object;
    std::uint16_t index = 0;

    auto operator<=>(const ConceptKey&) const = default;
};

// One d-dimensional activation vector with timestep and concept labels.
struct ActivationSample {
    VecF x;
    std::uint16_t timestep = 0;
    std::uint16_t object = kUnlabeled;
    std::uint16_t style = kUnlabeled;
};

struct Dataset {
    std::vector<ActivationSample> samples;
    std::vector<std::string> object_names;
    std::vector<std::string> style_names;
    std::size_t d = 0;
    std::size_t timesteps = 0;

    std::size_t size() const { return samples.size(); }

    const std::vector<std::string>& names(Domain dom) const {
        return dom == Domain::object ? object_names : style_names;
    }

    std::string concept_name(ConceptKey c) const { return names(c.domain).at(c.index); }

    // All concepts present in the vocabularies, objects first.
    std::vector<ConceptKey> all_concepts() const {
        std::vector<ConceptKey> out;
        for (std::size_t i = 0; i < object_names.size(); ++i) {
            out.push_back({Domain::object, static_cast<std::uint16_t>(i)});
        }
        for (std::size_t i = 0; i < style_names.size(); ++i) {
            out.push_back({Domain::style, static_cast<std::uint16_t>(i)});
        }
        return out;
    }

    ConceptKey find_concept(const std::string& name) const {
        for (std::size_t i = 0; i < object_names.size(); ++i) {
            if (object_names[i] == name) return {Domain::object, static_cast<std::uint16_t>(i)};
        }
        for (std::size_t i = 0; i < style_names.size(); ++i) {
            if (style_names[i] == name) return {Domain::style, static_cast<std::uint16_t>(i)};
        }
        throw ValidationError("unknown concept: " + name);
    }

    static std::uint16_t label_of(const ActivationSample& s, Domain dom) {
        return dom == Domain::object ? s.object : s.style;
    }

    bool has_concept(const ActivationSample& s, ConceptKey c) const {
        return label_of(s, c.domain) == c.index;
    }

    void validate() const {
        for (const auto& s : samples) {
            if (s.x.size() != d) throw ValidationError("Dataset: sample dimension mismatch");
            if (s.timestep >= timesteps) throw ValidationError("Dataset: timestep out of range");
            if (s.object != kUnlabeled && s.object >= object_names.size()) {
                throw ValidationError("Dataset: object id out of vocabulary");
            }
            if (s.style != kUnlabeled && s.style >= style_names.size()) {
                throw ValidationError("Dataset: style id out of vocabulary");
            }
            for (float v : s.x) {
                if (!std::isfinite(v)) throw ValidationError("Dataset: non-finite sample value");
            }
        }
    }

    VecF mean() const {
        VecD acc(d, 0.0);
        for (const auto& s : samples) {
            for (std::size_t r = 0; r < d; ++r) acc[r] += static_cast<double>(s.x[r]);
        }
        VecF out(d);
        const double inv = samples.empty() ? 0.0 : 1.0 / static_cast<double>(samples.size());
        for (std::size_t r = 0; r < d; ++r) out[r] = static_cast<float>(acc[r] * inv);
        return out;
    }
};

}  // namespace csae
