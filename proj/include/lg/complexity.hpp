#pragma once

#include <cmath>

#include "lg/flow.hpp"
#include "lg/parallel.hpp"
#include "lg/solver.hpp"

namespace lg {

/// Explicit input families; used where the promise restricts the domain to a
/// strict subset of [m]^n.
struct Domain {
    std::vector<InputPoint> positives;
    std::vector<InputPoint> negatives;

    static Domain full_cube(const FunctionSpec& f, std::size_t cap = kDefaultInputCap) {
        Domain d;
        d.positives = enumerate_inputs(f, InputClass::Positive, cap);
        d.negatives = enumerate_inputs(f, InputClass::Negative, cap);
        return d;
    }
};

template <class T>
struct ComplexityReport {
    std::vector<std::pair<InputPoint, T>> negative;  // N(G(y)) per input
    std::vector<std::pair<InputPoint, T>> positive;  // optimal flow cost per input
    T N{};
    T P{};

    double total() const { return std::sqrt(to_double(N) * to_double(P)); }
};

/// N = max over negatives of the realized weight sum, P = max over positives
/// of the optimal flow cost, C = sqrt(N * P).
template <class T>
ComplexityReport<T> graph_complexity(const LearningGraph& g, const WeightFn<T>& wf,
                                     const FunctionSpec& f, const Domain& domain,
                                     const SolveOptions& opts = {}, int jobs = 1) {
    if (domain.positives.empty()) throw InputError("complexity needs at least one positive input");
    if (domain.negatives.empty()) throw InputError("complexity needs at least one negative input");
    ComplexityReport<T> rep;
    rep.negative.resize(domain.negatives.size());
    rep.positive.resize(domain.positives.size());

    std::vector<std::string> errors(domain.positives.size());
    parallel_for_index(domain.negatives.size(), jobs, [&](std::size_t i) {
        auto inst = realize(g, wf, domain.negatives[i]);
        rep.negative[i] = {domain.negatives[i], negative_complexity(inst)};
    });
    parallel_for_index(domain.positives.size(), jobs, [&](std::size_t i) {
        try {
            auto inst = realize(g, wf, domain.positives[i]);
            auto acc = accepting_vertices(g, f, domain.positives[i]);
            auto res = optimal_flow(g, inst, acc, opts);
            rep.positive[i] = {domain.positives[i], res.cost};
        } catch (const Error& e) {
            errors[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < errors.size(); ++i)
        if (!errors[i].empty())
            throw InfeasibleError("positive input " + domain.positives[i].to_string() + ": " +
                                  errors[i]);

    rep.N = rep.negative.front().second;
    for (auto& [x, v] : rep.negative)
        if (v > rep.N) rep.N = v;
    rep.P = rep.positive.front().second;
    for (auto& [x, v] : rep.positive)
        if (v > rep.P) rep.P = v;
    return rep;
}

}  // namespace lg
