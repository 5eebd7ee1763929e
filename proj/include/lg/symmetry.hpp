#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "lg/flow.hpp"
#include "lg/graph.hpp"
#include "lg/rng.hpp"

namespace lg {

/// Maximal equal-value groups of an input, each below size k being a
/// t-subtuple when restricted to a vertex.
struct TupleStructure {
    struct Tuple {
        uint64_t mask;
        int value;
        int size;
    };
    std::vector<Tuple> tuples;  // sorted by (value)

    static TupleStructure of(const InputPoint& x);
};

/// Subtuple counts (b_1, ..., b_{k-1}) of a vertex; a group of size >= k
/// makes the vertex accepting instead.
struct Specification {
    int k = 2;
    std::vector<int> b;  // b[t-1] = number of t-subtuples
    bool accepting = false;

    int mass() const;  // sum t * b_t
    std::string key() const;
    bool operator==(const Specification&) const = default;
};

Specification specification_of(const InputPoint& x, uint64_t subset, int k);

/// Specification computed from an origin assignment's values alone (the form
/// weight functions can use: values on S in index order).
Specification specification_of_values(std::span<const int> values, int k);

/// Index blocks of a promised layout: A_s holds the selected s-tuples,
/// column k is the k-tuple M.
struct BlockLayout {
    int k = 2;
    std::vector<std::vector<uint64_t>> blocks;  // blocks[s-1] = tuple masks in A_s
    uint64_t m_mask = 0;

    uint64_t a_ge1() const;
    uint64_t a_block(int s) const;  // union of A_s
};

/// (k-1) x k matrix of subtuple placements; entry (t, s) counts t-subtuples
/// of the vertex inside A_s, with column k standing for M.
struct TypeMatrix {
    int k = 2;
    std::vector<int> b;  // row-major (k-1) rows, k cols

    static TypeMatrix zero(int k);
    int& at(int t, int s);
    int at(int t, int s) const;
    std::vector<int> row_sums() const;
    bool operator==(const TypeMatrix&) const = default;
    std::string key() const;
};

struct TypeResult {
    TypeMatrix type;
    bool supported = true;  // false iff the vertex leaves A_{>=1} union M
};

TypeResult type_of(const InputPoint& x, uint64_t subset, const BlockLayout& layout);

/// Entrywise max absolute difference.
int type_distance(const TypeMatrix& a, const TypeMatrix& b);

enum class ClassMode { BySize, BySpecification };

/// Equivalence-class key of an arc: origin cardinality, or the specification
/// of the origin assignment.
std::string class_key(const LearningGraph& g, const Arc& a, const InputPoint& x, ClassMode mode,
                      int k);

struct ClassStats {
    std::string key;
    int step = 0;     // arcs of one class sit inside one step
    double pi = 0;    // typical per-arc flow scale
    double tau = 0;   // speciality
    double mu = 0;    // pi * max |G(E, x)|
    long count = 0;   // max |E(y)| over negatives
};

struct WeightRule {
    std::unordered_map<std::string, double> weight_by_class;  // pi / sqrt(tau)
    double estimate = 0;        // sum mu * sqrt(tau)
    double per_step_bound = 0;  // sum over steps of sqrt(max tau on the step)
    std::map<int, double> step_max_tau;
};

WeightRule weight_from_class_stats(const std::vector<ClassStats>& stats);

/// Full product group S_n x S_m; throws ResourceError above the cap.
std::vector<SymmetryElement> full_group(int n, int m, std::size_t cap = 100000);
SymmetryElement sample_symmetry(int n, int m, CounterRng& rng);

struct GroupSpec {
    enum class Mode { Full, Sampled } mode = Mode::Full;
    std::size_t sample_size = 64;
    uint64_t seed = 1;
    std::size_t full_cap = 100000;
};

std::vector<SymmetryElement> group_elements(int n, int m, const GroupSpec& spec);

/// Image of an arc under a symmetry; requires the image to exist in g.
int map_arc(const LearningGraph& g, const SymmetryElement& sigma, const Arc& a);

template <class T>
struct SymmetrizeResult {
    std::shared_ptr<TableWeights<T>> weights;
    std::vector<Flow<T>> flows;  // aligned with the input positives
};

/// Group-average weights and flows (the construction that makes equivalent
/// arcs share weight and strongly equivalent arcs share flow, without
/// increasing the complexity in full-group mode).  Needs a layer-complete
/// graph and a flow for every positive input of f.
template <class T>
SymmetrizeResult<T> symmetrize(const LearningGraph& g, const WeightFn<T>& wf,
                               const FunctionSpec& f, const std::vector<InputPoint>& positives,
                               const std::vector<Flow<T>>& flows, const GroupSpec& group);

/// Moves a flow for x onto sigma(x) arc by arc; checks that weights agree on
/// every flow-carrying arc so the cost is preserved exactly.
template <class T>
Flow<T> transport_flow(const LearningGraph& g, const SymmetryElement& sigma, const WeightFn<T>& wf,
                       const Flow<T>& flow, const T& tol = T(0));

}  // namespace lg
