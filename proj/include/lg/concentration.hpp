#pragma once

#include <optional>

#include "lg/kdist.hpp"
#include "lg/rng.hpp"

namespace lg {

struct SamplerConfig {
    uint64_t seed = 1;
    long trials = 100000;
    int jobs = 1;
};

struct TailRow {
    double lambda = 0;
    double empirical = 0;  // exceedance fraction
    double bound = 0;      // reference bound at this lambda (0 when none)
    double stderr_ = 0;    // binomial standard error of `empirical`
    long exceed_count = 0;
};

struct TailReport {
    std::vector<TailRow> rows;
    bool monotone = true;       // exceedance non-increasing in lambda
    bool fitted = false;
    double fitted_rate = 0;     // a in exp(-a lambda^2 / scale)
    double fit_r2 = 0;
    double fit_scale = 1;       // the r_1 used in the fit
    uint64_t seed = 0;
    long trials = 0;
};

/// Azuma tail bound e^{-lambda^2/2} for a unit-increment martingale.
double azuma_bound(double lambda);

/// +-1 random walk of m steps; empirical Pr[X_m > lambda sqrt(m)] against the
/// Azuma bound on the lambda grid.
TailReport martingale_tail_check(int m, const SamplerConfig& cfg,
                                 const std::vector<double>& lambda_grid = {});

struct MeanTypeEstimate {
    int k = 2;
    std::vector<std::vector<double>> mean;    // (k-1) x k
    std::vector<std::vector<double>> stderr_;  // zero when exact
    bool exact = false;
    long accepted = 0;
    long attempted = 0;
};

/// Mean type matrix over uniform subsets of A_{>=1} satisfying the
/// specification.  Rejection sampling from uniform subsets of matching
/// cardinality; exact enumeration when n' <= 12.
MeanTypeEstimate estimate_mean_type(const PromisedInstance& inst, const std::vector<int>& spec,
                                    const SamplerConfig& cfg, double min_accept_rate = 1e-4);

/// Exact mean row e_{t,s} over the marginal ensemble of subsets having
/// exactly b_t t-subtuples and nothing else, at any instance size:
/// e_{t,s} = b_t * ell_s C(s,t) K_s / sum_s' ell_s' C(s',t) K_s', where K_s
/// counts completions with one s-tuple removed from the promise.
std::vector<Rational> exact_marginal_mean_row(const std::vector<int>& ell, int t, int b_t);

/// Reference matrix eps_beta assembled from the exact marginal rows.
std::vector<std::vector<Rational>> mean_type_reference(const PromisedInstance& inst,
                                                       const std::vector<int>& spec);

/// Tail of || type(S) - eps_beta ||_inf over uniform spec-satisfying subsets,
/// with an exponential-rate fit in lambda^2 / r_1.
TailReport type_deviation_tail(const PromisedInstance& inst, const std::vector<int>& spec,
                               const SamplerConfig& cfg, const std::vector<double>& lambda_grid = {});

struct FlowRatioReport {
    int rounds = 0;              // completed key rounds at the sampled layer
    long sampled = 0;            // accepted key vertices
    long distinct_types = 0;
    bool zero_distance_exact = true;   // same type implies identical flow
    std::vector<std::pair<int, double>> max_log_ratio_by_d;  // same-spec pairs
    double slope = 0;            // LS through origin of max |log ratio| vs d
    double fitted_c = 0;         // slope * n / r_2
    bool linear_ok = false;      // residuals stay within the linear envelope
    double typical_band = 0;     // max/min flow ratio over typical types
    double typical_band_bound = 0;
    bool band_ok = false;
    long insufficient_pairs = 0;
};

/// Key-vertex flow concentration for staged k=3 instances: flows are exact
/// per-type values of the splitting recurrence, compared across same-spec
/// types at increasing type distance.
FlowRatioReport key_flow_ratio_check(const StageParams& params, const PromisedInstance& inst,
                                     const SamplerConfig& cfg, int rounds = 3);

}  // namespace lg
