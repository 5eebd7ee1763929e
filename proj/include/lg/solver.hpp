#pragma once

#include "lg/flow.hpp"
#include "lg/graph.hpp"
#include "lg/rational.hpp"

namespace lg {

struct SolveOptions {
    int dense_limit = 2000;      // direct factorization up to this many nodes
    double cg_tolerance = 1e-12; // iterative path above dense_limit
    std::size_t exact_limit = 512;  // node cap for the exact-rational path
};

template <class T>
struct OptimalFlowResult {
    Flow<T> flow;
    T cost;
};

/// Minimum-cost unit flow from the empty set into the accepting set, for the
/// realized instance.  Zero-weight arcs are deleted, accepting vertices merge
/// into one sink, each remaining arc becomes a conductor of conductance w_e,
/// and the potential equation for a unit source/sink pair is solved; arc
/// flows are read off potential differences.  Cost equals the effective
/// resistance between source and sink.
OptimalFlowResult<double> optimal_flow(const LearningGraph& g, const GraphInstance<double>& inst,
                                       const std::vector<char>& accepting,
                                       const SolveOptions& opts = {});

/// Exact-rational variant of the same electrical solve (Gaussian elimination);
/// intended for small graphs used as equality oracles.
OptimalFlowResult<Rational> optimal_flow(const LearningGraph& g,
                                         const GraphInstance<Rational>& inst,
                                         const std::vector<char>& accepting,
                                         const SolveOptions& opts = {});

}  // namespace lg
