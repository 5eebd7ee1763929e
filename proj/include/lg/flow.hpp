#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lg/graph.hpp"

namespace lg {

/// Real-valued arc flow for one positive input: unit source at the empty set,
/// conservation at non-accepting vertices, nonnegative absorption at
/// accepting ones.
template <class T>
struct Flow {
    InputPoint x;
    std::vector<T> p;  // by arc id

    T at(int arc) const { return p[static_cast<std::size_t>(arc)]; }
};

template <class T>
T negative_complexity(const GraphInstance<T>& inst) {
    T sum = T(0);
    for (const T& w : inst.w) sum += w;
    return sum;
}

/// Sum p_e^2 / w_e with the 0/0 = 0 convention.  A nonzero flow on a
/// zero-weight arc makes the instance infeasible.
template <class T>
T flow_cost(const GraphInstance<T>& inst, const Flow<T>& flow) {
    T cost = T(0);
    for (std::size_t i = 0; i < inst.w.size(); ++i) {
        const T& p = flow.p[i];
        if (p == T(0)) continue;
        if (inst.w[i] == T(0))
            throw InfeasibleError("flow crosses a zero-weight arc " + std::to_string(i) +
                                  " (infinite cost)");
        cost += p * p / inst.w[i];
    }
    return cost;
}

template <class T>
struct FlowValidation {
    T source_intensity{};
    std::vector<std::pair<int, T>> conservation_residuals;  // non-accepting vertex, net in - out
    std::vector<std::pair<int, T>> absorptions;             // accepting vertex, net in - out
    std::vector<int> zero_weight_violations;                // arcs with p != 0, w == 0
    T max_residual{};
    T min_absorption{};

    bool clean(const T& tol = T(0)) const {
        if (!zero_weight_violations.empty()) return false;
        T dev = source_intensity - T(1);
        if (dev < T(0)) dev = -dev;
        if (dev > tol) return false;
        if (max_residual > tol) return false;
        if (min_absorption < -tol) return false;
        return true;
    }
};

template <class T>
T net_inflow(const LearningGraph& g, const Flow<T>& flow, int v) {
    T net = T(0);
    for (int a : g.in_arcs(v)) net += flow.p[static_cast<std::size_t>(a)];
    for (int a : g.out_arcs(v)) net -= flow.p[static_cast<std::size_t>(a)];
    return net;
}

/// Flow through a vertex: sum of p over incoming arcs (for the root, the
/// outgoing sum).
template <class T>
T vertex_flow(const LearningGraph& g, const Flow<T>& flow, int v) {
    T sum = T(0);
    if (g.mask(v) == 0) {
        for (int a : g.out_arcs(v)) sum += flow.p[static_cast<std::size_t>(a)];
    } else {
        for (int a : g.in_arcs(v)) sum += flow.p[static_cast<std::size_t>(a)];
    }
    return sum;
}

template <class T>
FlowValidation<T> validate_flow(const LearningGraph& g, const GraphInstance<T>& inst,
                                const std::vector<char>& accepting, const Flow<T>& flow) {
    FlowValidation<T> rep;
    rep.source_intensity = -net_inflow(g, flow, 0);
    rep.max_residual = T(0);
    rep.min_absorption = T(0);
    bool first_abs = true;
    for (int v = 1; v < g.vertex_count(); ++v) {
        T net = net_inflow(g, flow, v);
        if (accepting[static_cast<std::size_t>(v)]) {
            rep.absorptions.emplace_back(v, net);
            if (first_abs || net < rep.min_absorption) {
                rep.min_absorption = net;
                first_abs = false;
            }
        } else if (net != T(0)) {
            rep.conservation_residuals.emplace_back(v, net);
            T mag = net < T(0) ? T(-net) : net;
            if (mag > rep.max_residual) rep.max_residual = mag;
        }
    }
    for (std::size_t i = 0; i < inst.w.size(); ++i)
        if (flow.p[i] != T(0) && inst.w[i] == T(0))
            rep.zero_weight_violations.push_back(static_cast<int>(i));
    return rep;
}

/// Conditioning: restrict a unit flow ending at antichain V onto W subset of V,
/// rescaling by t = sum of the flow into W.  The returned flow satisfies
/// p'_S = p_S / t on W, 0 on V - W, and cost(p') <= cost(p) / t^2.
/// Requires nonnegative arc flows (the construction follows the flow as a
/// random walk conditioned on ending in W).
template <class T>
Flow<T> condition_flow(const LearningGraph& g, const Flow<T>& flow, const std::vector<int>& V,
                       const std::vector<int>& W) {
    // V must be an antichain under inclusion.
    for (std::size_t i = 0; i < V.size(); ++i)
        for (std::size_t j = 0; j < V.size(); ++j) {
            if (i == j) continue;
            uint64_t a = g.mask(V[i]), b = g.mask(V[j]);
            if ((a & b) == a)
                throw ValidationError("conditioning set V is not an antichain");
        }
    std::vector<char> inV(static_cast<std::size_t>(g.vertex_count()), 0);
    std::vector<char> inW(static_cast<std::size_t>(g.vertex_count()), 0);
    for (int v : V) inV[static_cast<std::size_t>(v)] = 1;
    for (int w : W) {
        if (!inV[static_cast<std::size_t>(w)]) throw InputError("W must be a subset of V");
        inW[static_cast<std::size_t>(w)] = 1;
    }
    for (const T& p : flow.p)
        if (p < T(0)) throw ValidationError("conditioning requires nonnegative arc flows");
    for (int v : V)
        for (int a : g.out_arcs(v))
            if (flow.p[static_cast<std::size_t>(a)] != T(0))
                throw ValidationError("flow does not end at V: flow leaves vertex " +
                                      std::to_string(v));

    T t = T(0);
    for (int w : W) t += vertex_flow(g, flow, w);
    if (t <= T(0)) throw InfeasibleError("conditioning impossible: no flow reaches W");

    // s(v) = fraction of the flow through v that ends in W.
    std::vector<T> s(static_cast<std::size_t>(g.vertex_count()), T(0));
    for (int v = 0; v < g.vertex_count(); ++v)
        if (inV[static_cast<std::size_t>(v)]) s[static_cast<std::size_t>(v)] = inW[static_cast<std::size_t>(v)] ? T(1) : T(0);
    for (int size = g.depth() - 1; size >= 0; --size) {
        for (int v : g.layer_vertices(size)) {
            if (inV[static_cast<std::size_t>(v)]) continue;
            T outflow = T(0), weighted = T(0);
            for (int a : g.out_arcs(v)) {
                const T& pe = flow.p[static_cast<std::size_t>(a)];
                outflow += pe;
                weighted += pe * s[static_cast<std::size_t>(g.arc(a).target)];
            }
            if (outflow != T(0)) s[static_cast<std::size_t>(v)] = weighted / outflow;
        }
    }

    Flow<T> out;
    out.x = flow.x;
    out.p.resize(flow.p.size(), T(0));
    for (const Arc& a : g.arcs()) {
        const T& pe = flow.p[static_cast<std::size_t>(a.id)];
        if (pe == T(0)) continue;
        out.p[static_cast<std::size_t>(a.id)] = pe * s[static_cast<std::size_t>(a.target)] / t;
    }
    return out;
}

}  // namespace lg
