// Acceptance suite: one line per criterion, exit code = number of failures.
// Every tolerance is pinned here, in code.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <vector>

#include "lg/certificate.hpp"
#include "lg/concentration.hpp"
#include "lg/io.hpp"
#include "lg/kdist.hpp"
#include "support/generators.hpp"
#include "support/oracle_qp.hpp"

using namespace lg;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("criterion %2d: %s -- %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

void guarded(int criterion, const std::function<std::pair<bool, std::string>()>& body) {
    auto start = std::chrono::steady_clock::now();
    try {
        auto [pass, detail] = body();
        auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        char buf[32];
        std::snprintf(buf, sizeof(buf), " [%.1fs]", secs);
        report(criterion, pass, detail + buf);
    } catch (const std::exception& e) {
        report(criterion, false, std::string("exception: ") + e.what());
    }
}

struct Instances {
    std::vector<ConstructionArtifacts> arts;
    std::vector<std::string> names;
};

Instances acceptance_instances() {
    Instances set;
    set.arts.push_back(build_baseline_graph(2, 3, 3, 1));
    set.names.push_back("baseline k=2 n=3");
    set.arts.push_back(build_baseline_graph(2, 4, 4, 2));
    set.names.push_back("baseline k=2 n=4");
    {
        StageParams params = StageParams::with_r(3, 12, {2, 1});
        auto inst = build_promised_instance(3, 12, {2, 2}, 1);
        set.arts.push_back(build_alg1_full(params, inst, DomainConfig{6, 5, true, 1}));
        set.names.push_back("alg1 fullTiny k=3 n=12 l=(2,2) r=(2,1)");
    }
    return set;
}

// Criterion 1: pair sums of the compiled dual vectors equal 1 -- within 1e-9
// in floating point and exactly along the rational path.
std::pair<bool, std::string> crit1() {
    auto set = acceptance_instances();
    bool pass = true;
    std::ostringstream detail;
    for (std::size_t i = 0; i < set.arts.size(); ++i) {
        auto& art = set.arts[i];
        auto bundle = build_certificate(art.graph, *art.weights, art.f, art.domain.positives,
                                        art.flows, art.domain.negatives);
        auto rep = verify_feasibility(bundle, default_jobs());
        auto exact = verify_feasibility_exact(art.graph, *art.weight_sq, art.domain.positives,
                                              art.flows_exact, art.domain.negatives);
        bool ok = rep.max_deviation <= 1e-9 && exact.exact_ones;
        pass = pass && ok;
        detail << set.names[i] << ": " << rep.rows.size() << " pairs, max dev "
               << format_double(rep.max_deviation) << (exact.exact_ones ? ", exact 1" : ", NOT exact")
               << "; ";
    }
    return {pass, detail.str()};
}

// Criterion 2: certificate objective vs sqrt(N P) within 1e-9, flows optimal.
std::pair<bool, std::string> crit2() {
    auto set = acceptance_instances();
    bool pass = true;
    std::ostringstream detail;
    for (std::size_t i = 0; i < set.arts.size(); ++i) {
        auto& art = set.arts[i];
        auto rep = graph_complexity(art.graph, *art.weights, art.f, art.domain, {}, default_jobs());
        std::vector<Flow<double>> flows(art.domain.positives.size());
        for (std::size_t x = 0; x < art.domain.positives.size(); ++x) {
            auto inst = realize(art.graph, *art.weights, art.domain.positives[x]);
            auto acc = accepting_vertices(art.graph, art.f, art.domain.positives[x]);
            flows[x] = optimal_flow(art.graph, inst, acc).flow;
        }
        auto bundle = build_certificate(art.graph, *art.weights, art.f, art.domain.positives,
                                        flows, art.domain.negatives);
        double diff = std::abs(bundle.objective() - rep.total());
        pass = pass && diff <= 1e-9;
        detail << set.names[i] << ": |objective - C| = " << format_double(diff) << "; ";
    }
    return {pass, detail.str()};
}

// Criterion 3: electrical solve vs dense QP on 200 random小 graphs, plus the
// asymmetric-parallel worked value 2/3 within 1e-12.
std::pair<bool, std::string> crit3() {
    double worst = 0;
    for (uint64_t i = 0; i < 200; ++i) {
        auto rinst = lgtest::random_instance(2024, i);
        lgtest::ArcWeights<double> wf(rinst.weights);
        InputPoint x;
        x.values.assign(static_cast<std::size_t>(rinst.graph.n()), 1);
        auto inst = realize(rinst.graph, wf, x);
        auto mine = optimal_flow(rinst.graph, inst, rinst.accepting);
        auto oracle = lgtest::qp_optimal_flow(rinst.graph, inst, rinst.accepting);
        worst = std::max(worst, std::abs(mine.cost - oracle.cost));
    }

    auto g = LearningGraph::layered(2, 2);
    int a1 = g.out_arcs(0)[0], b1 = g.out_arcs(0)[1];
    if (g.arc(a1).loaded != 0) std::swap(a1, b1);
    int a2 = g.out_arcs(g.arc(a1).target)[0];
    int b2 = g.out_arcs(g.arc(b1).target)[0];
    std::vector<double> w(4, 1.0);
    w[static_cast<std::size_t>(b1)] = w[static_cast<std::size_t>(b2)] = 2.0;
    lgtest::ArcWeights<double> wf(w);
    InputPoint x;
    x.values = {2, 2};
    auto inst = realize(g, wf, x);
    std::vector<char> acc(static_cast<std::size_t>(g.vertex_count()), 0);
    acc[static_cast<std::size_t>(g.vertex_id(0b11))] = 1;
    double cost = optimal_flow(g, inst, acc).cost;
    double asym = std::abs(cost - 2.0 / 3.0);

    bool pass = worst <= 1e-9 && asym <= 1e-12;
    std::ostringstream detail;
    detail << "200 graphs, worst |electrical - QP| = " << format_double(worst)
           << "; asymmetric-parallel |cost - 2/3| = " << format_double(asym);
    return {pass, detail.str()};
}

// Criterion 4: exact counting against exhaustive enumeration on every promise
// with n' <= 12 (k = 2, 3, 4), all specifications.
std::pair<bool, std::string> crit4() {
    long promises = 0, specs = 0;
    bool pass = true;

    auto check_promise = [&](const std::vector<int>& ell) {
        int k = static_cast<int>(ell.size()) + 1;
        int nprime = 0;
        for (std::size_t s = 0; s < ell.size(); ++s) nprime += static_cast<int>(s + 1) * ell[s];
        if (nprime > 12) return;
        ++promises;
        // Values per index; tuple i gets value i.
        std::vector<int> value_of;
        int vid = 0;
        for (int s = 1; s <= k - 1; ++s)
            for (int t = 0; t < ell[static_cast<std::size_t>(s - 1)]; ++t) {
                for (int c = 0; c < s; ++c) value_of.push_back(vid);
                ++vid;
            }
        std::map<std::vector<int>, BigInt> census;
        for (uint64_t mask = 0; mask < (uint64_t(1) << nprime); ++mask) {
            std::map<int, int> mult;
            for (int i = 0; i < nprime; ++i)
                if ((mask >> i) & 1) ++mult[value_of[static_cast<std::size_t>(i)]];
            std::vector<int> spec(static_cast<std::size_t>(k - 1), 0);
            bool over = false;
            for (auto& [v, c] : mult) {
                if (c >= k) {
                    over = true;
                    break;
                }
                ++spec[static_cast<std::size_t>(c - 1)];
            }
            if (!over) census[spec] += 1;
        }
        // Formula must reproduce the census and vanish on absent specs.
        std::vector<int> spec(static_cast<std::size_t>(k - 1), 0);
        auto rec = [&](auto&& self, int t) -> void {
            if (!pass) return;
            if (t > k - 1) {
                ++specs;
                BigInt want = census.contains(spec) ? census[spec] : BigInt(0);
                if (count_by_specification(ell, spec) != want) pass = false;
                return;
            }
            for (int b = 0; b * t <= nprime; ++b) {
                spec[static_cast<std::size_t>(t - 1)] = b;
                self(self, t + 1);
            }
            spec[static_cast<std::size_t>(t - 1)] = 0;
        };
        rec(rec, 1);
    };

    for (int l1 = 0; l1 <= 12; ++l1) check_promise({l1});
    for (int l1 = 0; l1 <= 12; ++l1)
        for (int l2 = 0; 2 * l2 + l1 <= 12; ++l2) check_promise({l1, l2});
    for (int l1 = 0; l1 <= 12; ++l1)
        for (int l2 = 0; 2 * l2 + l1 <= 12; ++l2)
            for (int l3 = 0; 3 * l3 + 2 * l2 + l1 <= 12; ++l3) check_promise({l1, l2, l3});

    bool worked = count_by_specification({2, 2}, {1, 1}) == 8;
    pass = pass && worked;
    std::ostringstream detail;
    detail << promises << " promises, " << specs << " specifications checked; l=(2,2) spec=(1,1) -> "
           << count_by_specification({2, 2}, {1, 1}).str();
    return {pass, detail.str()};
}

// Criterion 5: expected subtuples -- exact worked value, Monte Carlo within
// 3 sigma, and the two asymptotic slopes within +-0.1.
std::pair<bool, std::string> crit5() {
    bool exact_ok = expected_subtuples({2, 2}, 3, 2) == Rational(2, 5);

    // 1e5-trial Monte Carlo over uniform 3-subsets of the 6 promised indices.
    CounterRng master(515);
    const int indices[6] = {0, 1, 2, 3, 4, 5};
    const int value_of[6] = {1, 2, 3, 3, 4, 4};  // two singles, two pairs
    long trials = 100000;
    double sum = 0, sumsq = 0;
    for (long t = 0; t < trials; ++t) {
        CounterRng rng = CounterRng::for_trial(515, 1, static_cast<uint64_t>(t));
        int pick[6] = {0, 1, 2, 3, 4, 5};
        for (int i = 0; i < 3; ++i) {
            long j = rng.uniform_int(i, 5);
            std::swap(pick[i], pick[j]);
        }
        std::map<int, int> mult;
        for (int i = 0; i < 3; ++i) ++mult[value_of[pick[i]]];
        int b2 = 0;
        for (auto& [v, c] : mult)
            if (c == 2) ++b2;
        sum += b2;
        sumsq += static_cast<double>(b2) * b2;
    }
    (void)indices;
    double mean = sum / static_cast<double>(trials);
    double var = sumsq / static_cast<double>(trials) - mean * mean;
    double se = std::sqrt(var / static_cast<double>(trials));
    bool mc_ok = std::abs(mean - 0.4) <= 3.0 * se;

    // Slope in log r at fixed promise.
    std::vector<int> big{500, 500};
    double sx = 0, sy = 0, sxx = 0, sxy = 0, npts = 0;
    for (long r : {8, 16, 32, 64, 128, 256}) {
        double lx = std::log(static_cast<double>(r));
        double ly = std::log(to_double(expected_subtuples(big, r, 2)));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        npts += 1;
    }
    double slope_r = (npts * sxy - sx * sy) / (npts * sxx - sx * sx);

    // Slope in log n at fixed r (promise scaled with n).
    sx = sy = sxx = sxy = npts = 0;
    for (long L : {64, 128, 256, 512, 1024}) {
        std::vector<int> ell{static_cast<int>(L), static_cast<int>(L)};
        double lx = std::log(static_cast<double>(3 * L));
        double ly = std::log(to_double(expected_subtuples(ell, 32, 2)));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        npts += 1;
    }
    double slope_n = (npts * sxy - sx * sy) / (npts * sxx - sx * sx);

    bool slopes_ok = std::abs(slope_r - 2.0) <= 0.1 && std::abs(slope_n - (-1.0)) <= 0.1;
    std::ostringstream detail;
    detail << "exact 2/5 " << (exact_ok ? "ok" : "BAD") << "; MC mean " << format_double(mean)
           << " (3se " << format_double(3 * se) << "); r-slope " << format_double(slope_r)
           << ", n-slope " << format_double(slope_n);
    return {exact_ok && mc_ok && slopes_ok, detail.str()};
}

// Criterion 6: collapsed-estimate exponent fits.
std::pair<bool, std::string> crit6() {
    std::vector<long> grid;
    for (int e = 6; e <= 14; ++e) grid.push_back(1L << e);
    auto base = scaling_experiment("baseline", 2, grid);
    auto alg = scaling_experiment("alg1", 3, grid);
    bool pass = std::abs(base.slope - 0.667) <= 0.05 && std::abs(alg.slope - 0.714) <= 0.05;
    std::ostringstream detail;
    detail << "baseline k=2 slope " << format_double(base.slope) << " (target 0.667 +- 0.05); "
           << "alg1 k=3 slope " << format_double(alg.slope) << " (target 0.714 +- 0.05)";
    return {pass, detail.str()};
}

// Criterion 7: exponent schedule as exact rationals.
std::pair<bool, std::string> crit7() {
    bool pass = rho_exponents(2) == std::vector<Rational>{1, Rational(2, 3), Rational(1, 2)} &&
                rho_exponents(3) ==
                    std::vector<Rational>{1, Rational(5, 7), Rational(4, 7), Rational(1, 2)} &&
                rho_exponents(4)[1] == Rational(11, 15);
    return {pass, "rho(2) = (1,2/3,1/2); rho(3) = (1,5/7,4/7,1/2); rho_1(4) = 11/15"};
}

// Criterion 8: conditioning bound, exact, on 100 random instances.
std::pair<bool, std::string> crit8() {
    long checked = 0;
    for (uint64_t i = 0; checked < 100 && i < 1000; ++i) {
        auto rinst = lgtest::random_instance(808, i);
        const auto& g = rinst.graph;
        auto paths = lgtest::all_paths(g, rinst.accepting, rinst.weights);
        if (paths.empty()) continue;
        CounterRng rng = CounterRng::for_trial(808, 99, i);
        Flow<Rational> p;
        p.p.assign(static_cast<std::size_t>(g.arc_count()), Rational(0));
        Rational total(0);
        std::vector<Rational> coeff(paths.size());
        for (auto& c : coeff) {
            c = Rational(rng.uniform_int(1, 30), rng.uniform_int(1, 7));
            total += c;
        }
        std::vector<char> reached(static_cast<std::size_t>(g.vertex_count()), 0);
        for (std::size_t pi = 0; pi < paths.size(); ++pi) {
            for (int a : paths[pi]) p.p[static_cast<std::size_t>(a)] += coeff[pi] / total;
            reached[static_cast<std::size_t>(g.arc(paths[pi].back()).target)] = 1;
        }
        std::vector<int> V;
        for (int v = 1; v < g.vertex_count(); ++v)
            if (reached[static_cast<std::size_t>(v)]) V.push_back(v);
        bool antichain = true;
        for (int a : V)
            for (int b : V)
                if (a != b && (g.mask(a) & g.mask(b)) == g.mask(a)) antichain = false;
        if (!antichain) continue;
        std::vector<int> W;
        for (std::size_t vi = 0; vi < V.size(); vi += 2) W.push_back(V[vi]);
        GraphInstance<Rational> ri{&g, p.x, rinst.weights_exact};
        Rational t(0);
        for (int wv : W) t += vertex_flow(g, p, wv);
        if (t == 0) continue;
        auto q = condition_flow(g, p, V, W);
        if (!(flow_cost(ri, q) <= flow_cost(ri, p) / (t * t))) {
            return {false, "bound violated on instance " + std::to_string(i)};
        }
        ++checked;
    }
    return {checked == 100, std::to_string(checked) + " instances, cost(p') <= cost(p)/t^2 exact"};
}

// Criterion 9: full-group symmetrization never increases C, exactly, over 50
// random weightings of n <= 3, m <= 3 cubes.
std::pair<bool, std::string> crit9() {
    struct Config {
        int k, n, m;
    };
    std::vector<Config> configs{{2, 2, 2}, {2, 3, 3}, {3, 3, 3}, {3, 3, 2}};
    long done = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const Config& cfg = configs[static_cast<std::size_t>(trial) % configs.size()];
        auto f = FunctionSpec::k_distinctness(cfg.k, cfg.n, cfg.m);
        auto g = LearningGraph::layered(cfg.n, cfg.n);
        Domain dom = Domain::full_cube(f);
        if (dom.negatives.empty() || dom.positives.empty()) return {false, "degenerate config"};
        LambdaWeights<Rational> wf([trial](const LearningGraph&, const Arc& a,
                                           std::span<const int> vals) {
            uint64_t h = CounterRng::mix(static_cast<uint64_t>(trial) * 7919 +
                                         static_cast<uint64_t>(a.id) * 131);
            for (int v : vals) h = CounterRng::mix(h ^ static_cast<uint64_t>(v));
            return Rational(1 + (h % 12), 1 + ((h >> 6) % 5));
        });
        std::vector<Flow<Rational>> flows;
        for (const InputPoint& x : dom.positives) {
            auto inst = realize(g, wf, x);
            flows.push_back(optimal_flow(g, inst, accepting_vertices(g, f, x)).flow);
        }
        auto res = symmetrize(g, wf, f, dom.positives, flows, GroupSpec{});
        auto csq = [&](const WeightFn<Rational>& w, const std::vector<Flow<Rational>>& fl) {
            Rational worstN(0), worstP(0);
            for (const InputPoint& y : dom.negatives) {
                Rational nv = negative_complexity(realize(g, w, y));
                if (nv > worstN) worstN = nv;
            }
            for (std::size_t i = 0; i < fl.size(); ++i) {
                Rational c = flow_cost(realize(g, w, dom.positives[i]), fl[i]);
                if (c > worstP) worstP = c;
            }
            return worstN * worstP;
        };
        if (!(csq(*res.weights, res.flows) <= csq(wf, flows)))
            return {false, "complexity increased on trial " + std::to_string(trial)};
        ++done;
    }
    return {done == 50, "50 instances, full group, C'^2 <= C^2 exact"};
}

// Criterion 10: concentration suite.
std::pair<bool, std::string> crit10() {
    std::ostringstream detail;
    bool pass = true;

    SamplerConfig azuma_cfg{101, 100000, default_jobs()};
    auto walk = martingale_tail_check(100, azuma_cfg);
    bool azuma_ok = walk.monotone;
    for (auto& row : walk.rows)
        if (row.lambda > 0 && row.empirical > row.bound + 3.0 * row.stderr_) azuma_ok = false;
    pass = pass && azuma_ok;
    detail << "azuma(m=100,1e5): " << (azuma_ok ? "under bound" : "VIOLATED") << "; ";

    auto inst = build_promised_instance(3, 63, {20, 20}, 0);  // n' = 60
    SamplerConfig dev_cfg{102, 20000, 1};
    auto tail = type_deviation_tail(inst, {14, 3}, dev_cfg);
    bool dev_ok = tail.monotone && tail.fitted && tail.fitted_rate > 0 && tail.fit_r2 >= 0.9;
    pass = pass && dev_ok;
    detail << "type-dev(n'=60): rate " << format_double(tail.fitted_rate) << ", R2 "
           << format_double(tail.fit_r2) << (dev_ok ? "" : " BAD") << "; ";

    StageParams params = StageParams::from_exponents(3, 60);
    auto finst = build_promised_instance(3, 60, {19, 19}, 0);
    SamplerConfig flow_cfg{103, 20000, 1};
    auto ratio = key_flow_ratio_check(params, finst, flow_cfg, 3);
    bool flow_ok = ratio.zero_distance_exact && ratio.linear_ok && ratio.band_ok && ratio.slope > 0;
    pass = pass && flow_ok;
    detail << "key-flow(n=60): slope " << format_double(ratio.slope) << ", c-hat "
           << format_double(ratio.fitted_c) << ", linear " << (ratio.linear_ok ? "ok" : "BAD")
           << ", band " << (ratio.band_ok ? "ok" : "BAD");
    return {pass, detail.str()};
}

}  // namespace

int main() {
    auto t0 = std::chrono::steady_clock::now();
    guarded(1, crit1);
    guarded(2, crit2);
    guarded(3, crit3);
    guarded(4, crit4);
    guarded(5, crit5);
    guarded(6, crit6);
    guarded(7, crit7);
    guarded(8, crit8);
    guarded(9, crit9);
    guarded(10, crit10);
    double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("acceptance: %d of 10 criteria passed in %.1fs\n", 10 - failures, total);
    return failures;
}
