#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "csae/dataset.hpp"
#include "csae/errors.hpp"
#include "csae/numerics.hpp"
#include "csae/rng.hpp"

namespace csae {

// Labeled activation generator: every sample is a timestep-modulated mix of
// one planted object direction and one planted style direction plus isotropic
// noise. A stand-in for captured model activations, not a simulation of them.
struct SynthSpec {
    std::size_t d = 64;
    std::size_t timesteps = 10;
    std::size_t samples_per_pair = 20;
    MatF object_dirs;  // num_objects x d, unit rows
    MatF style_dirs;   // num_styles x d, unit rows
    std::vector<std::string> object_names;
    std::vector<std::string> style_names;
    double coeff_min = 0.75;
    double coeff_max = 1.25;
    double mod_base = 0.6;   // m(t) = mod_base + mod_slope * t / (T - 1)
    double mod_slope = 0.8;
    double noise_sigma = 0.05;
    double max_pairwise_dot = 0.5;  // planted separation bound for drawn directions
    std::uint64_t seed = 0;

    std::size_t num_objects() const { return object_dirs.rows; }
    std::size_t num_styles() const { return style_dirs.rows; }

    double modulation(std::size_t t) const {
        const double T = static_cast<double>(timesteps);
        return mod_base + mod_slope * (timesteps > 1 ? static_cast<double>(t) / (T - 1.0) : 0.0);
    }

    void validate() const {
        if (d == 0 || timesteps == 0) throw ValidationError("SynthSpec: empty dimensions");
        if (num_objects() == 0 || num_styles() == 0) {
            throw ValidationError("SynthSpec: need at least one object and one style");
        }
        if (object_dirs.cols != d || style_dirs.cols != d) {
            throw ValidationError("SynthSpec: direction dims mismatch");
        }
        if (object_names.size() != num_objects() || style_names.size() != num_styles()) {
            throw ValidationError("SynthSpec: vocabulary size mismatch");
        }
        if (samples_per_pair == 0) throw ValidationError("SynthSpec: samples_per_pair must be > 0");
        if (samples_per_pair < timesteps) {
            throw ValidationError("SynthSpec: samples_per_pair must be >= timesteps");
        }
        if (coeff_min <= 0 || coeff_max < coeff_min) {
            throw ValidationError("SynthSpec: coefficient range must be positive");
        }
        if (noise_sigma < 0) throw ValidationError("SynthSpec: noise_sigma must be >= 0");
        for (std::size_t t = 0; t < timesteps; ++t) {
            if (modulation(t) <= 0) throw ValidationError("SynthSpec: modulation must stay > 0");
        }
        auto check_rows = [&](const MatF& dirs, const char* what) {
            for (std::size_t i = 0; i < dirs.rows; ++i) {
                double norm2 = 0.0;
                for (std::size_t r = 0; r < d; ++r) {
                    norm2 += static_cast<double>(dirs(i, r)) * static_cast<double>(dirs(i, r));
                }
                if (std::abs(norm2 - 1.0) > 1e-4) {
                    throw ValidationError(std::string("SynthSpec: ") + what +
                                          " direction rows must be unit norm");
                }
            }
        };
        check_rows(object_dirs, "object");
        check_rows(style_dirs, "style");
    }
};

namespace detail {

inline void draw_separated_directions(MatF& dirs, std::size_t count, std::size_t d,
                                      double max_dot, Rng rng) {
    dirs = MatF(count, d);
    VecD row(d);
    for (std::size_t i = 0; i < count; ++i) {
        for (int attempt = 0;; ++attempt) {
            if (attempt > 10000) {
                throw ValidationError("direction sampling: separation constraint unsatisfiable");
            }
            double norm2 = 0.0;
            for (std::size_t r = 0; r < d; ++r) {
                row[r] = rng.next_normal();
                norm2 += row[r] * row[r];
            }
            const double inv = 1.0 / std::sqrt(norm2);
            for (std::size_t r = 0; r < d; ++r) row[r] *= inv;
            bool ok = true;
            for (std::size_t p = 0; p < i && ok; ++p) {
                double dot = 0.0;
                for (std::size_t r = 0; r < d; ++r) {
                    dot += row[r] * static_cast<double>(dirs(p, r));
                }
                ok = std::abs(dot) <= max_dot;
            }
            if (ok) {
                for (std::size_t r = 0; r < d; ++r) dirs(i, r) = static_cast<float>(row[r]);
                break;
            }
        }
    }
}

inline const std::array<const char*, 20> kDefaultObjects = {
    "Architectures", "Bears",   "Birds",      "Butterfly", "Cats",
    "Dogs",          "Fishes",  "Flame",      "Flowers",   "Frogs",
    "Horses",        "Human",   "Jellyfish",  "Rabbits",   "Sandwiches",
    "Sea",           "Statues", "Towers",     "Trees",     "Waterfalls"};

inline const std::array<const char*, 10> kDefaultStyles = {
    "Abstractionism", "Baroque",  "Cubism",      "Impressionism", "Minimalism",
    "Pointillism",    "Realism",  "Surrealism",  "Ukiyoe",        "Watercolor"};

}  // namespace detail

inline SynthSpec make_default_spec(std::uint64_t seed, std::size_t num_objects = 20,
                                   std::size_t num_styles = 10, std::size_t d = 64,
                                   std::size_t timesteps = 10,
                                   std::size_t samples_per_pair = 20) {
    SynthSpec spec;
    spec.d = d;
    spec.timesteps = timesteps;
    spec.samples_per_pair = samples_per_pair;
    spec.seed = seed;
    Rng rng(seed);
    detail::draw_separated_directions(spec.object_dirs, num_objects, d, spec.max_pairwise_dot,
                                      rng.fork(101));
    detail::draw_separated_directions(spec.style_dirs, num_styles, d, spec.max_pairwise_dot,
                                      rng.fork(202));
    spec.object_names.resize(num_objects);
    for (std::size_t i = 0; i < num_objects; ++i) {
        spec.object_names[i] = i < detail::kDefaultObjects.size()
                                   ? detail::kDefaultObjects[i]
                                   : "Object" + std::to_string(i);
    }
    spec.style_names.resize(num_styles);
    for (std::size_t i = 0; i < num_styles; ++i) {
        spec.style_names[i] = i < detail::kDefaultStyles.size() ? detail::kDefaultStyles[i]
                                                                : "Style" + std::to_string(i);
    }
    spec.validate();
    return spec;
}

// Rewrites object direction b as a mix of direction a and its own orthogonal
// remainder so that cos(dir_a, dir_b) equals the requested value.
inline SynthSpec make_near_duplicates(SynthSpec spec, std::size_t a, std::size_t b,
                                      double cosine = 0.95) {
    if (a >= spec.num_objects() || b >= spec.num_objects() || a == b) {
        throw ValidationError("make_near_duplicates: bad object pair");
    }
    if (cosine < 0.9 || cosine >= 1.0) {
        throw ValidationError("make_near_duplicates: cosine must be in [0.9, 1)");
    }
    const std::size_t d = spec.d;
    VecD da(d);
    VecD db(d);
    for (std::size_t r = 0; r < d; ++r) {
        da[r] = static_cast<double>(spec.object_dirs(a, r));
        db[r] = static_cast<double>(spec.object_dirs(b, r));
    }
    double dot = 0.0;
    for (std::size_t r = 0; r < d; ++r) dot += da[r] * db[r];
    double perp2 = 0.0;
    for (std::size_t r = 0; r < d; ++r) {
        db[r] -= dot * da[r];
        perp2 += db[r] * db[r];
    }
    if (perp2 <= 0.0) throw ValidationError("make_near_duplicates: degenerate pair");
    const double pscale = std::sqrt(1.0 - cosine * cosine) / std::sqrt(perp2);
    for (std::size_t r = 0; r < d; ++r) {
        spec.object_dirs(b, r) = static_cast<float>(cosine * da[r] + pscale * db[r]);
    }
    return spec;
}

// Deterministic under the spec seed: each (object, style) cell draws from its
// own forked stream, so the result does not depend on generation order.
inline Dataset generate(const SynthSpec& spec) {
    spec.validate();
    Dataset data;
    data.d = spec.d;
    data.timesteps = spec.timesteps;
    data.object_names = spec.object_names;
    data.style_names = spec.style_names;
    data.samples.reserve(spec.num_objects() * spec.num_styles() * spec.samples_per_pair);

    const std::size_t per_cell = spec.samples_per_pair / spec.timesteps;
    const std::size_t remainder = spec.samples_per_pair % spec.timesteps;
    Rng root(spec.seed);
    for (std::size_t o = 0; o < spec.num_objects(); ++o) {
        for (std::size_t s = 0; s < spec.num_styles(); ++s) {
            Rng cell = root.fork(1'000'000 + o * spec.num_styles() + s);
            for (std::size_t t = 0; t < spec.timesteps; ++t) {
                // leftover samples (if any) go to the earliest timesteps
                const std::size_t reps = per_cell + (t < remainder ? 1 : 0);
                const double m = spec.modulation(t);
                for (std::size_t rep = 0; rep < reps; ++rep) {
                    ActivationSample sample;
                    sample.timestep = static_cast<std::uint16_t>(t);
                    sample.object = static_cast<std::uint16_t>(o);
                    sample.style = static_cast<std::uint16_t>(s);
                    sample.x.resize(spec.d);
                    const double ca = cell.next_uniform(spec.coeff_min, spec.coeff_max);
                    const double cb = cell.next_uniform(spec.coeff_min, spec.coeff_max);
                    for (std::size_t r = 0; r < spec.d; ++r) {
                        double v = m * (ca * static_cast<double>(spec.object_dirs(o, r)) +
                                        cb * static_cast<double>(spec.style_dirs(s, r)));
                        if (spec.noise_sigma > 0) v += spec.noise_sigma * cell.next_normal();
                        sample.x[r] = static_cast<float>(v);
                    }
                    data.samples.push_back(std::move(sample));
                }
            }
        }
    }
    data.validate();
    return data;
}

}  // namespace csae
