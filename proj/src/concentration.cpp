#include "lg/concentration.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace lg {

double azuma_bound(double lambda) {
    if (!(lambda > 0)) throw InputError("Azuma bound needs lambda > 0 (trivial otherwise)");
    return std::exp(-lambda * lambda / 2.0);
}

namespace {

constexpr uint64_t kStreamWalk = 0xa1;
constexpr uint64_t kStreamMeanType = 0xa2;
constexpr uint64_t kStreamDeviation = 0xa3;
constexpr uint64_t kStreamFlowRatio = 0xa4;

std::vector<double> default_walk_grid() {
    std::vector<double> grid;
    for (double l = 0.0; l <= 3.01; l += 0.25) grid.push_back(l);
    return grid;
}

void fill_monotone(TailReport& rep) {
    rep.monotone = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
        if (rep.rows[i].empirical > rep.rows[i - 1].empirical + 1e-15) rep.monotone = false;
}

// ln p = c - a lambda^2 / scale over rows with enough exceedances.
void fit_rate(TailReport& rep, double scale, long min_events) {
    std::vector<std::pair<double, double>> pts;
    for (auto& row : rep.rows)
        if (row.exceed_count >= min_events && row.empirical < 1.0)
            pts.emplace_back(row.lambda * row.lambda / scale, std::log(row.empirical));
    rep.fit_scale = scale;
    if (pts.size() < 3) return;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, n = static_cast<double>(pts.size());
    for (auto& [x, y] : pts) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double denom = n * sxx - sx * sx;
    if (denom == 0) return;
    double slope = (n * sxy - sx * sy) / denom;
    double intercept = (sy - slope * sx) / n;
    double ss_res = 0, ss_tot = 0, ybar = sy / n;
    for (auto& [x, y] : pts) {
        double pred = intercept + slope * x;
        ss_res += (y - pred) * (y - pred);
        ss_tot += (y - ybar) * (y - ybar);
    }
    rep.fitted = true;
    rep.fitted_rate = -slope;
    rep.fit_r2 = ss_tot == 0 ? 1.0 : 1.0 - ss_res / ss_tot;
}

}  // namespace

TailReport martingale_tail_check(int m, const SamplerConfig& cfg,
                                 const std::vector<double>& lambda_grid) {
    if (m < 1) throw InputError("martingale length must be positive");
    if (cfg.trials < 1) throw InputError("need at least one trial");
    std::vector<double> grid = lambda_grid.empty() ? default_walk_grid() : lambda_grid;

    std::vector<int> finals(static_cast<std::size_t>(cfg.trials));
    parallel_for_index(static_cast<std::size_t>(cfg.trials), cfg.jobs, [&](std::size_t trial) {
        CounterRng rng = CounterRng::for_trial(cfg.seed, kStreamWalk, trial);
        int x = 0;
        for (int i = 0; i < m; ++i) x += (rng.next_u64() & 1) ? 1 : -1;
        finals[trial] = x;
    });

    TailReport rep;
    rep.seed = cfg.seed;
    rep.trials = cfg.trials;
    double sqrt_m = std::sqrt(static_cast<double>(m));
    for (double lambda : grid) {
        TailRow row;
        row.lambda = lambda;
        double threshold = lambda * sqrt_m;
        for (int x : finals)
            if (static_cast<double>(x) > threshold) ++row.exceed_count;
        row.empirical = static_cast<double>(row.exceed_count) / static_cast<double>(cfg.trials);
        row.bound = lambda > 0 ? azuma_bound(lambda) : 1.0;
        row.stderr_ =
            std::sqrt(row.empirical * (1.0 - row.empirical) / static_cast<double>(cfg.trials));
        rep.rows.push_back(row);
    }
    fill_monotone(rep);
    fit_rate(rep, 2.0, 10);  // the Azuma rate has scale 2 in lambda^2
    return rep;
}

namespace {

std::vector<int> mask_to_indices(uint64_t mask, int n) {
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
        if ((mask >> i) & 1) idx.push_back(i);
    return idx;
}

// Uniform size-`take` subset of `pool` by partial Fisher-Yates.
uint64_t sample_subset(std::vector<int>& pool, int take, CounterRng& rng) {
    int n = static_cast<int>(pool.size());
    uint64_t mask = 0;
    for (int i = 0; i < take; ++i) {
        long j = rng.uniform_int(i, n - 1);
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
        mask |= uint64_t(1) << pool[static_cast<std::size_t>(i)];
    }
    return mask;
}

int spec_mass(const std::vector<int>& spec) {
    int mass = 0;
    for (std::size_t t = 0; t < spec.size(); ++t) mass += static_cast<int>(t + 1) * spec[t];
    return mass;
}

}  // namespace

MeanTypeEstimate estimate_mean_type(const PromisedInstance& inst, const std::vector<int>& spec,
                                    const SamplerConfig& cfg, double min_accept_rate) {
    int k = inst.k;
    if (static_cast<int>(spec.size()) != k - 1) throw InputError("specification needs k-1 entries");
    int mass = spec_mass(spec);
    uint64_t a_mask = inst.layout.a_ge1();
    int nprime = std::popcount(a_mask);
    if (mass > nprime) throw InputError("specification does not fit inside A_{>=1}");

    MeanTypeEstimate est;
    est.k = k;
    est.mean.assign(static_cast<std::size_t>(k - 1), std::vector<double>(static_cast<std::size_t>(k), 0.0));
    est.stderr_ = est.mean;

    auto spec_of = [&](uint64_t mask) { return specification_of(inst.positive, mask, k); };

    if (nprime <= 12) {
        // Exact enumeration over all mass-subsets of A_{>=1}.
        est.exact = true;
        auto idx = mask_to_indices(a_mask, inst.n);
        std::vector<int> comb(static_cast<std::size_t>(mass));
        std::vector<Rational> sums(static_cast<std::size_t>((k - 1) * k), Rational(0));
        long hits = 0;
        auto rec = [&](auto&& self, int pos, int start) -> void {
            if (pos == mass) {
                uint64_t mask = 0;
                for (int c : comb) mask |= uint64_t(1) << c;
                auto sp = spec_of(mask);
                if (sp.accepting || sp.b != spec) return;
                ++hits;
                auto tr = type_of(inst.positive, mask, inst.layout);
                for (std::size_t i = 0; i < tr.type.b.size(); ++i) sums[i] += tr.type.b[i];
                return;
            }
            for (int i = start; i < static_cast<int>(idx.size()); ++i) {
                comb[static_cast<std::size_t>(pos)] = idx[static_cast<std::size_t>(i)];
                self(self, pos + 1, i + 1);
            }
        };
        rec(rec, 0, 0);
        if (hits == 0) throw InputError("no subset of A_{>=1} satisfies the specification");
        est.accepted = hits;
        est.attempted = hits;
        for (int t = 1; t <= k - 1; ++t)
            for (int s = 1; s <= k; ++s)
                est.mean[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(s - 1)] =
                    to_double(sums[static_cast<std::size_t>((t - 1) * k + (s - 1))] / hits);
        return est;
    }

    auto pool_master = mask_to_indices(a_mask, inst.n);
    long max_attempts = static_cast<long>(static_cast<double>(cfg.trials) / min_accept_rate);
    std::vector<std::vector<long long>> sum(static_cast<std::size_t>(k - 1),
                                            std::vector<long long>(static_cast<std::size_t>(k), 0));
    auto sumsq = sum;
    long accepted = 0, attempt = 0;
    for (; accepted < cfg.trials && attempt < max_attempts; ++attempt) {
        CounterRng rng = CounterRng::for_trial(cfg.seed, kStreamMeanType, static_cast<uint64_t>(attempt));
        std::vector<int> pool = pool_master;
        uint64_t mask = sample_subset(pool, mass, rng);
        auto sp = spec_of(mask);
        if (sp.accepting || sp.b != spec) continue;
        ++accepted;
        auto tr = type_of(inst.positive, mask, inst.layout);
        for (int t = 1; t <= k - 1; ++t)
            for (int s = 1; s <= k; ++s) {
                int v = tr.type.at(t, s);
                sum[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(s - 1)] += v;
                sumsq[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(s - 1)] +=
                    static_cast<long long>(v) * v;
            }
    }
    if (accepted < cfg.trials)
        throw ValidationError("rejection rate beyond cap while sampling specification " +
                              Specification{k, spec, false}.key() + "; use a smaller instance");
    est.accepted = accepted;
    est.attempted = attempt;
    for (int t = 1; t <= k - 1; ++t)
        for (int s = 1; s <= k; ++s) {
            double n = static_cast<double>(accepted);
            double mean = static_cast<double>(sum[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(s - 1)]) / n;
            double var =
                static_cast<double>(sumsq[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(s - 1)]) / n -
                mean * mean;
            est.mean[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(s - 1)] = mean;
            est.stderr_[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(s - 1)] =
                std::sqrt(std::max(var, 0.0) / n);
        }
    return est;
}

std::vector<Rational> exact_marginal_mean_row(const std::vector<int>& ell, int t, int b_t) {
    int k = static_cast<int>(ell.size()) + 1;
    if (t < 1 || t > k - 1) throw InputError("subtuple size outside [1, k-1]");
    std::vector<Rational> row(static_cast<std::size_t>(k), Rational(0));
    if (b_t == 0) return row;
    std::vector<int> rest(static_cast<std::size_t>(k - 1), 0);
    rest[static_cast<std::size_t>(t - 1)] = b_t - 1;
    // Host counts: the first subtuple occupies one tuple of block s, the
    // remaining b_t - 1 spread over the promise with that tuple removed.
    std::vector<BigInt> hosts(static_cast<std::size_t>(k), BigInt(0));
    BigInt total = 0;
    for (int s = t; s <= k - 1; ++s) {
        if (ell[static_cast<std::size_t>(s - 1)] == 0) continue;
        std::vector<int> reduced = ell;
        reduced[static_cast<std::size_t>(s - 1)] -= 1;
        BigInt ways = BigInt(ell[static_cast<std::size_t>(s - 1)]) * binomial(s, t) *
                      count_by_specification(reduced, rest);
        hosts[static_cast<std::size_t>(s - 1)] = ways;
        total += ways;
    }
    if (total == 0) throw InputError("marginal specification unsatisfiable on this promise");
    for (int s = 1; s <= k - 1; ++s)
        row[static_cast<std::size_t>(s - 1)] = Rational(BigInt(b_t) * hosts[static_cast<std::size_t>(s - 1)], total);
    return row;
}

std::vector<std::vector<Rational>> mean_type_reference(const PromisedInstance& inst,
                                                       const std::vector<int>& spec) {
    int k = inst.k;
    if (static_cast<int>(spec.size()) != k - 1) throw InputError("specification needs k-1 entries");
    std::vector<std::vector<Rational>> ref;
    for (int t = 1; t <= k - 1; ++t)
        ref.push_back(exact_marginal_mean_row(inst.ell, t, spec[static_cast<std::size_t>(t - 1)]));
    return ref;
}

TailReport type_deviation_tail(const PromisedInstance& inst, const std::vector<int>& spec,
                               const SamplerConfig& cfg, const std::vector<double>& lambda_grid) {
    int k = inst.k;
    int mass = spec_mass(spec);
    uint64_t a_mask = inst.layout.a_ge1();
    auto pool_master = mask_to_indices(a_mask, inst.n);
    if (mass > static_cast<int>(pool_master.size()))
        throw InputError("specification does not fit inside A_{>=1}");
    auto ref = mean_type_reference(inst, spec);

    std::vector<double> grid = lambda_grid;
    if (grid.empty())
        for (double l = 0.0; l <= 10.01; l += 1.0) grid.push_back(l);

    std::vector<double> deviations;
    deviations.reserve(static_cast<std::size_t>(cfg.trials));
    long max_attempts = static_cast<long>(cfg.trials) * 200;
    long attempt = 0;
    for (; static_cast<long>(deviations.size()) < cfg.trials && attempt < max_attempts; ++attempt) {
        CounterRng rng =
            CounterRng::for_trial(cfg.seed, kStreamDeviation, static_cast<uint64_t>(attempt));
        std::vector<int> pool = pool_master;
        uint64_t mask = sample_subset(pool, mass, rng);
        auto sp = specification_of(inst.positive, mask, k);
        if (sp.accepting || sp.b != spec) continue;
        auto tr = type_of(inst.positive, mask, inst.layout);
        double dev = 0;
        for (int t = 1; t <= k - 1; ++t)
            for (int s = 1; s <= k; ++s) {
                double e = s <= k - 1
                               ? to_double(ref[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(s - 1)])
                               : 0.0;
                dev = std::max(dev, std::abs(static_cast<double>(tr.type.at(t, s)) - e));
            }
        deviations.push_back(dev);
    }
    if (static_cast<long>(deviations.size()) < cfg.trials)
        throw ValidationError("rejection rate beyond cap while sampling the joint specification");

    TailReport rep;
    rep.seed = cfg.seed;
    rep.trials = cfg.trials;
    for (double lambda : grid) {
        TailRow row;
        row.lambda = lambda;
        for (double d : deviations)
            if (d > lambda) ++row.exceed_count;
        row.empirical = static_cast<double>(row.exceed_count) / static_cast<double>(cfg.trials);
        row.stderr_ =
            std::sqrt(row.empirical * (1.0 - row.empirical) / static_cast<double>(cfg.trials));
        rep.rows.push_back(row);
    }
    fill_monotone(rep);
    fit_rate(rep, static_cast<double>(mass), 10);
    return rep;
}

FlowRatioReport key_flow_ratio_check(const StageParams& params, const PromisedInstance& inst,
                                     const SamplerConfig& cfg, int rounds) {
    if (params.k != 3)
        throw InputError("key-flow ratio sampling is implemented for k = 3 instances");
    int k = 3;
    long r1 = params.r_at(1), r2 = params.r_at(2);
    long n = params.n;
    int j_rounds = static_cast<int>(std::min<long>(rounds, r2 - 1));
    if (j_rounds < 1)
        throw InputError("need at least one completed key round (r_2 >= 2)");

    Rational cap2 = Rational(2 * (k - 2)) * expected_subtuples(inst.ell, r1, 2);
    long cap2_floor = (numerator(cap2) / denominator(cap2)).convert_to<long>();
    long ell2 = inst.ell[1];

    uint64_t a_mask = inst.layout.a_ge1();
    auto pool_master = mask_to_indices(a_mask, inst.n);
    const auto& tuples2 = inst.layout.blocks[1];

    struct TypeEntry {
        TypeMatrix type;
        Rational p;
        double logp;
    };
    std::map<std::string, TypeEntry> by_type;

    FlowRatioReport rep;
    rep.rounds = j_rounds;
    long max_attempts = cfg.trials * 50;
    long accepted = 0;
    for (long attempt = 0; accepted < cfg.trials && attempt < max_attempts; ++attempt) {
        CounterRng rng =
            CounterRng::for_trial(cfg.seed, kStreamFlowRatio, static_cast<uint64_t>(attempt));
        std::vector<int> pool = pool_master;
        uint64_t s0 = sample_subset(pool, static_cast<int>(r1), rng);
        auto sp = specification_of(inst.positive, s0, k);
        if (sp.accepting || sp.b[1] > cap2_floor) continue;
        // Untouched 2-tuples available for the key rounds.
        std::vector<uint64_t> untouched;
        for (uint64_t t : tuples2)
            if (!(t & s0)) untouched.push_back(t);
        if (static_cast<int>(untouched.size()) < j_rounds) continue;
        uint64_t added = 0;
        for (int c = 0; c < j_rounds; ++c) {
            long pick = rng.uniform_int(c, static_cast<long>(untouched.size()) - 1);
            std::swap(untouched[static_cast<std::size_t>(c)], untouched[static_cast<std::size_t>(pick)]);
            added |= untouched[static_cast<std::size_t>(c)];
        }
        uint64_t s_mask = s0 | added;
        ++accepted;

        auto tr = type_of(inst.positive, s_mask, inst.layout);
        long b22 = tr.type.at(2, 2);
        long z2 = tr.type.at(1, 2) + b22;
        // Exact key-vertex flow of the even-splitting recurrence, up to the
        // common conditioned first-stage value: all loading histories give
        // the same denominator chain, so the flow depends on the type only.
        Rational p = Rational(binomial(b22, j_rounds) * factorial(j_rounds));
        bool ok = true;
        for (int h = 0; h < j_rounds; ++h) {
            long denom = ell2 - (z2 - j_rounds) - h;
            if (denom <= 0) {
                ok = false;
                break;
            }
            p /= denom;
        }
        if (!ok || p == 0) continue;
        auto [it, fresh] = by_type.try_emplace(tr.type.key(), TypeEntry{tr.type, p, 0.0});
        if (!fresh && it->second.p != p) rep.zero_distance_exact = false;
    }
    rep.sampled = accepted;
    rep.distinct_types = static_cast<long>(by_type.size());

    for (auto& [key, entry] : by_type) entry.logp = std::log(to_double(entry.p));

    // Group by specification; compare same-spec types at each distance.
    std::map<std::string, std::vector<const TypeEntry*>> by_spec;
    for (auto& [key, entry] : by_type) {
        auto sums = entry.type.row_sums();
        std::string skey;
        for (int v : sums) skey += std::to_string(v) + ",";
        by_spec[skey].push_back(&entry);
    }
    std::map<int, double> max_by_d;
    for (auto& [skey, entries] : by_spec) {
        if (entries.size() < 2) {
            ++rep.insufficient_pairs;
            continue;
        }
        for (std::size_t i = 0; i < entries.size(); ++i)
            for (std::size_t j = i + 1; j < entries.size(); ++j) {
                int d = type_distance(entries[i]->type, entries[j]->type);
                double lr = std::abs(entries[i]->logp - entries[j]->logp);
                auto [it, fresh] = max_by_d.try_emplace(d, lr);
                if (!fresh) it->second = std::max(it->second, lr);
            }
    }
    for (auto& [d, y] : max_by_d) rep.max_log_ratio_by_d.emplace_back(d, y);
    // Per-unit growth anchored at the smallest distance; at-most-linear
    // growth means no point escapes the linear envelope from that anchor.
    for (auto& [d, y] : max_by_d)
        if (d > 0) {
            rep.slope = y / static_cast<double>(d);
            break;
        }
    if (rep.slope > 0) {
        rep.fitted_c = rep.slope * static_cast<double>(n) / static_cast<double>(r2);
        rep.linear_ok = true;
        for (auto& [d, y] : max_by_d)
            if (d > 0 && y > rep.slope * static_cast<double>(d) * 1.25 + 0.05) rep.linear_ok = false;
    }

    // Typical band: types within sqrt(r_1) of the mean type of the largest
    // specification group should carry flows within the linear envelope at
    // distance 2 sqrt(r_1).
    const std::vector<const TypeEntry*>* biggest = nullptr;
    for (auto& [skey, entries] : by_spec)
        if (!biggest || entries.size() > biggest->size()) biggest = &entries;
    if (biggest && biggest->size() >= 2) {
        auto spec = (*biggest)[0]->type.row_sums();
        auto ref = mean_type_reference(inst, spec);
        double radius = std::sqrt(static_cast<double>(r1));
        double lo = 0, hi = 0;
        bool any = false;
        for (auto* e : *biggest) {
            double dev = 0;
            for (int t = 1; t <= k - 1; ++t)
                for (int s = 1; s <= k; ++s) {
                    double m = s <= k - 1 ? to_double(ref[static_cast<std::size_t>(t - 1)]
                                                         [static_cast<std::size_t>(s - 1)])
                                          : 0.0;
                    dev = std::max(dev, std::abs(static_cast<double>(e->type.at(t, s)) - m));
                }
            if (dev > radius) continue;
            if (!any) {
                lo = hi = e->logp;
                any = true;
            } else {
                lo = std::min(lo, e->logp);
                hi = std::max(hi, e->logp);
            }
        }
        if (any) {
            rep.typical_band = std::exp(hi - lo);
            rep.typical_band_bound = std::exp(rep.slope * 2.0 * radius * 1.25 + 0.05);
            rep.band_ok = rep.typical_band <= rep.typical_band_bound;
        }
    }
    return rep;
}

}  // namespace lg
