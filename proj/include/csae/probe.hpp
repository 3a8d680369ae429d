#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <set>
#include <span>
#include <vector>

#include "csae/dataset.hpp"
#include "csae/errors.hpp"
#include "csae/numerics.hpp"

namespace csae {

using Representation = std::function<VecD(const ActivationSample&)>;

// One-vs-rest least-squares linear classifier over a sample representation.
struct LinearProbe {
    Domain domain = Domain::object;
    MatD w;  // classes x (feature_dim + 1), bias in the last column
    std::size_t feature_dim = 0;

    std::size_t predict(std::span<const double> feat) const {
        std::size_t best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < w.rows; ++c) {
            double s = w(c, feature_dim);
            for (std::size_t r = 0; r < feature_dim; ++r) s += w(c, r) * feat[r];
            if (s > best_score) {
                best_score = s;
                best = c;
            }
        }
        return best;
    }
};

inline LinearProbe probe_train(const Dataset& data, Domain domain, const Representation& repr) {
    std::vector<std::size_t> rows;
    std::set<std::uint16_t> present;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const std::uint16_t label = Dataset::label_of(data.samples[i], domain);
        if (label == kUnlabeled) continue;
        rows.push_back(i);
        present.insert(label);
    }
    if (present.size() < 2) {
        throw ValidationError("probe_train: need at least 2 classes with labeled samples");
    }
    const std::size_t classes = data.names(domain).size();
    const VecD first = repr(data.samples[rows.front()]);
    const std::size_t dim = first.size();
    const std::size_t m = dim + 1;

    // normal equations: (A^T A + ridge I) W^T = A^T Y
    MatD gram(m, m);
    MatD rhs(m, classes);
    VecD feat;
    for (std::size_t i : rows) {
        feat = repr(data.samples[i]);
        if (feat.size() != dim) throw ValidationError("probe_train: representation dim varies");
        const std::uint16_t label = Dataset::label_of(data.samples[i], domain);
        auto at = [&](std::size_t r) { return r < dim ? feat[r] : 1.0; };
        for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t c = r; c < m; ++c) gram(r, c) += at(r) * at(c);
            rhs(r, label) += at(r);
        }
    }
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < r; ++c) gram(r, c) = gram(c, r);
    }
    double trace = 0.0;
    for (std::size_t r = 0; r < m; ++r) trace += gram(r, r);
    const double ridge = 1e-8 * trace / static_cast<double>(m) + 1e-12;
    for (std::size_t r = 0; r < m; ++r) gram(r, r) += ridge;

    const MatD solution = cholesky_solve(gram, rhs);  // m x classes
    LinearProbe probe;
    probe.domain = domain;
    probe.feature_dim = dim;
    probe.w = MatD(classes, m);
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t r = 0; r < m; ++r) probe.w(c, r) = solution(r, c);
    }
    return probe;
}

struct ProbeAccuracy {
    std::vector<double> per_class;  // indexed by class id; NaN-free, classes with no samples get -1
    double macro = 0.0;             // mean over classes that have samples
};

inline ProbeAccuracy probe_eval(const LinearProbe& probe, const Dataset& data,
                                const Representation& repr) {
    const std::size_t classes = probe.w.rows;
    std::vector<std::size_t> hits(classes, 0);
    std::vector<std::size_t> totals(classes, 0);
    for (const auto& sample : data.samples) {
        const std::uint16_t label = Dataset::label_of(sample, probe.domain);
        if (label == kUnlabeled) continue;
        const VecD feat = repr(sample);
        totals[label] += 1;
        if (probe.predict(feat) == label) hits[label] += 1;
    }
    ProbeAccuracy acc;
    acc.per_class.assign(classes, -1.0);
    double sum = 0.0;
    std::size_t covered = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        if (totals[c] == 0) continue;
        acc.per_class[c] = static_cast<double>(hits[c]) / static_cast<double>(totals[c]);
        sum += acc.per_class[c];
        ++covered;
    }
    if (covered == 0) throw ValidationError("probe_eval: no labeled samples");
    acc.macro = sum / static_cast<double>(covered);
    return acc;
}

}  // namespace csae
