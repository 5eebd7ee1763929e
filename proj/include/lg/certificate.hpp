#pragma once

#include <cmath>
#include <unordered_map>

#include "lg/complexity.hpp"
#include "lg/flow.hpp"

namespace lg {

/// Feasible family of dual adversary vectors compiled from a weighted
/// learning graph with flows.  Vectors are stored sparsely keyed by arc; the
/// assignment coordinate is implicitly the owner's restriction to the arc's
/// origin, every other coordinate being zero.
struct CertificateBundle {
    const LearningGraph* graph = nullptr;
    FunctionSpec f;
    std::vector<InputPoint> positives, negatives;
    // u-coordinates by arc id; positives are sparse (flow support), negative
    // vectors touch every realized arc.
    std::vector<std::vector<std::pair<int, double>>> u_pos;
    std::vector<std::vector<double>> u_neg;
    double pos_max_sq = 0.0;  // max over positives of sum_j ||u_{x,j}||^2
    double neg_max_sq = 0.0;

    double objective() const { return std::sqrt(pos_max_sq * neg_max_sq); }
    double side_sq(bool positive, std::size_t idx) const;
};

/// u_{y,j,e} = sqrt(w_e(y)) on the negative side and p_e(x)/sqrt(w_e(x)) on
/// the positive side, with 0/0 = 0.
CertificateBundle build_certificate(const LearningGraph& g, const WeightFn<double>& wf,
                                    const FunctionSpec& f,
                                    const std::vector<InputPoint>& positives,
                                    const std::vector<Flow<double>>& flows,
                                    const std::vector<InputPoint>& negatives);

struct PairDeviation {
    InputPoint x, y;
    double sum;
    double deviation;  // |sum - 1|
};

struct FeasibilityReport {
    double max_deviation = 0.0;
    PairDeviation worst;
    std::vector<PairDeviation> rows;  // one per (positive, negative) pair
};

/// Checks sum over j with x_j != y_j of <u_{x,j}, u_{y,j}> against 1 for every
/// differently-valued pair.  Pairs are independent tasks reduced by max.
FeasibilityReport verify_feasibility(const CertificateBundle& bundle, int jobs = 1,
                                     std::size_t pair_cap = kDefaultInputCap);

/// Positive vectors scale by c, negative vectors by 1/c; the feasibility sums
/// and the geometric-mean objective are invariant.
CertificateBundle rescale_balance(const CertificateBundle& bundle, double c);

/// Balancing constant (neg_max / pos_max)^(1/4) that equalizes the two sides.
double balancing_constant(const CertificateBundle& bundle);

/// Exact-rational verifier.  Weights enter through their squares, which stay
/// rational when arc weights have the form q * sqrt(s); the cross term
/// p_e(x) * sqrt(w_e(y)/w_e(x)) reduces to p_e(x) once the squared weights on
/// the agreeing assignment are checked equal.
struct ExactFeasibilityReport {
    Rational max_deviation;
    InputPoint worst_x, worst_y;
    bool exact_ones = false;  // every pair sum equals 1 exactly
};

ExactFeasibilityReport verify_feasibility_exact(const LearningGraph& g,
                                                const WeightFn<Rational>& weight_sq,
                                                const std::vector<InputPoint>& positives,
                                                const std::vector<Flow<Rational>>& flows,
                                                const std::vector<InputPoint>& negatives);

}  // namespace lg
