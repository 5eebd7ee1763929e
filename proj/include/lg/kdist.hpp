#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "lg/complexity.hpp"
#include "lg/symmetry.hpp"

namespace lg {

/// Exact exponent schedule: rho_0 = 1, rho_k = 1/2, consecutive differences
/// halving, which gives rho_1 = 1 - 2^{k-2}/(2^k - 1).
std::vector<Rational> rho_exponents(int k);

/// Round n^rho with a floor of 1.
long r_from_exponent(long n, const Rational& rho);

struct StageParams {
    int k = 2;
    long n = 0;
    std::vector<long> r;  // r_1..r_{k-1}

    static StageParams from_exponents(int k, long n);
    static StageParams with_r(int k, long n, std::vector<long> r);
    long r_at(int i) const;  // r_0 = n
};

/// Promised input layout: ell_s s-tuples per block A_s, a k-tuple M, and
/// slack indices holding fresh singleton values.
struct PromisedInstance {
    int k = 2;
    int n = 0;
    int m = 0;
    std::vector<int> ell;  // ell_1..ell_{k-1}
    BlockLayout layout;    // blocks + M mask
    uint64_t slack_mask = 0;
    InputPoint positive, negative;

    int n_prime() const;  // |A_{>=1}|
};

PromisedInstance build_promised_instance(int k, int n, const std::vector<int>& ell, uint64_t seed);

/// Seeded symmetric images of the canonical variants (the canonical input is
/// always first).  Negative families can include one near-miss where the
/// witness tuple is broken into a (k-1)-tuple and a singleton.
std::vector<InputPoint> positive_variants(const PromisedInstance&, int count, uint64_t seed);
std::vector<InputPoint> negative_variants(const PromisedInstance&, int count, uint64_t seed,
                                          bool include_near_miss = true);

/// Number of subsets of A_{>=1} with the given specification: the nested
/// binomial sum over all type matrices consistent with it.
BigInt count_by_specification(const std::vector<int>& ell, const std::vector<int>& spec);

/// Expected number of t-subtuples of a uniform r-subset of A_{>=1}:
/// sum_s ell_s C(s,t) C(n'-s, r-t) / C(n', r).
Rational expected_subtuples(const std::vector<int>& ell, long r, int t);

/// Exact ratio of subset counts under two promises, same specification.
Rational tuple_count_ratio(const std::vector<int>& ell, const std::vector<int>& ell_prime,
                           const std::vector<int>& spec);

struct StepLabel {
    enum class Stage { First, Prep, Last };
    Stage stage = Stage::First;
    int i = 0;  // prep stage index
    int j = 0;  // round (first stage: step number; last stage: step 1..k)
    int l = 0;  // level within a prep round

    std::string to_string() const;
};

struct StepInfo {
    int index = 0;  // 1-based; arcs of this step end in layer `index`
    StepLabel label;
    double speciality = 1.0;       // stage table value: 1, n/r_{l-1}, n^2/r_{j-1}
    bool unconstrained = false;    // first-stage steps admit every specification
    std::set<std::vector<int>> valid_origins;
};

/// Dead-end thresholds and the per-step valid-specification sets of the
/// staged construction.  cap_t = 2 (k-2) E[b_t] makes a uniform first-stage
/// subset valid with probability at least 1/2 by Markov's inequality.
struct Schedule {
    StageParams params;
    std::vector<int> ell;
    std::vector<Rational> caps;      // threshold on b_t, index t-2
    std::vector<Rational> c_consts;  // caps normalized by r_1^t / n^{t-1}
    std::vector<StepInfo> steps;

    int depth() const { return static_cast<int>(steps.size()); }
    const StepInfo& step(int index) const;  // 1-based
    bool spec_valid_at(int index, const std::vector<int>& spec) const;

    static Schedule build(const StageParams&, const std::vector<int>& ell);
};

/// Transition of a specification when an element of level l is loaded.
std::vector<int> spec_after_load(const std::vector<int>& spec, int level);

/// Inverse trace of a prep-step vertex specification back to its original
/// (post-dead-end-line) specification.
std::vector<int> trace_to_original(const StageParams&, const StepLabel&,
                                   const std::vector<int>& spec_after_step);

/// Number of i-subtuples available to extend a vertex when z_s s-tuples are
/// already used: sum_{s>=i} (ell_s - z_s) C(s, i).
long long D_function(const std::vector<int>& ell, int i, const std::vector<long>& z);

/// Flow through a prep arc loading the l-th element of an s-tuple, from the
/// flow of the preceding key vertex: C(s,i)/C(s,l) * key_flow / (l N).
Rational flow_on_arc(long s, int i, int l, const Rational& key_flow, const BigInt& N);

/// A constructed learning graph bundled with its weighting, the per-input
/// flows and the class statistics that produced the weights.
struct ConstructionArtifacts {
    LearningGraph graph;
    FunctionSpec f;
    Domain domain;
    std::vector<Flow<Rational>> flows_exact;  // aligned with domain.positives
    std::vector<Flow<double>> flows;
    std::shared_ptr<WeightFn<double>> weights;
    std::shared_ptr<WeightFn<Rational>> weight_sq;  // squared weights, exact
    std::vector<ClassStats> stats;
    Schedule schedule;  // alg1 only; empty steps for the baseline
};

/// Unstructured construction: r free loading steps, then the k witness
/// elements; per-step weights from specialities (1,...,1, n, n^2/r, ...).
ConstructionArtifacts build_baseline_graph(int k, int n, int m, long r,
                                           std::size_t vertex_cap = kDefaultVertexCap);

struct DomainConfig {
    int positives = 6;
    int negatives = 5;
    bool near_miss = true;
    uint64_t seed = 1;
};

/// Staged construction on an explicit lattice, with flows built from the
/// key-vertex splitting rule and weights from realized class statistics.
ConstructionArtifacts build_alg1_full(const StageParams&, const PromisedInstance&,
                                      const DomainConfig& domain = {},
                                      std::size_t vertex_cap = kDefaultVertexCap);

struct CollapsedStep {
    int index = 0;
    std::string label;
    double speciality = 1.0;
    double sqrt_tau = 1.0;
    BigInt class_size;  // valid vertices at the origin layer inside A_{>=1}
    bool has_size = false;
};

struct CollapsedReport {
    std::vector<CollapsedStep> steps;
    double estimate = 0.0;  // sum over steps of sqrt(speciality)
};

CollapsedReport collapsed_baseline(int k, long n, long r);

/// Class-collapsed evaluation of the staged construction; when ell is given
/// and the spec sets are small, per-step valid-vertex counts are included.
CollapsedReport collapsed_alg1(const StageParams&, const std::vector<int>* ell = nullptr);

struct ScalingPoint {
    long n;
    long r1;
    double estimate;
};

struct ScalingFit {
    double slope = 0;
    double intercept = 0;
    double max_residual = 0;
    std::vector<ScalingPoint> points;
};

/// Log-log least squares of the collapsed complexity estimate over an n-grid.
/// construction: "baseline" (r = round(n^{k/(k+1)})) or "alg1".
ScalingFit scaling_experiment(const std::string& construction, int k,
                              const std::vector<long>& n_grid);

}  // namespace lg
