#include <doctest.h>

#include "lg/certificate.hpp"
#include "support/generators.hpp"

using namespace lg;
using lgtest::ArcWeights;

namespace {

InputPoint pt(std::initializer_list<int> vals) { return InputPoint{std::vector<int>(vals)}; }

// Bundle from optimal flows for every positive input of a full cube.
CertificateBundle optimal_bundle(const LearningGraph& g, const WeightFn<double>& wf,
                                 const FunctionSpec& f) {
    Domain dom = Domain::full_cube(f);
    std::vector<Flow<double>> flows;
    for (const InputPoint& x : dom.positives) {
        auto inst = realize(g, wf, x);
        flows.push_back(optimal_flow(g, inst, accepting_vertices(g, f, x)).flow);
    }
    return build_certificate(g, wf, f, dom.positives, flows, dom.negatives);
}

}  // namespace

TEST_CASE("single-arc bundle: coordinates 1, objective 1, pair sum 1") {
    auto g = LearningGraph::layered(1, 1);
    auto f = FunctionSpec::custom(1, 2, {0, 1});
    auto bundle = optimal_bundle(g, UniformWeights<double>(1.0), f);
    REQUIRE(bundle.positives.size() == 1);
    REQUIRE(bundle.negatives.size() == 1);
    REQUIRE(bundle.u_pos[0].size() == 1);
    CHECK(bundle.u_pos[0][0].second == doctest::Approx(1.0));
    CHECK(bundle.u_neg[0][0] == doctest::Approx(1.0));
    CHECK(bundle.objective() == doctest::Approx(1.0));
    auto rep = verify_feasibility(bundle);
    CHECK(rep.rows.size() == 1);
    CHECK(rep.rows[0].sum == doctest::Approx(1.0));
    CHECK(rep.max_deviation < 1e-12);
}

TEST_CASE("OR-like bundle: objective sqrt(2), every pair sums to 1") {
    auto g = LearningGraph::layered(2, 1);
    auto f = FunctionSpec::custom(2, 2, {0, 1, 1, 1});
    auto bundle = optimal_bundle(g, UniformWeights<double>(1.0), f);
    CHECK(bundle.objective() == doctest::Approx(std::sqrt(2.0)));
    auto rep = verify_feasibility(bundle);
    CHECK(rep.max_deviation < 1e-9);
    // Hand value: pair x=(2,1), y=(1,1) meets only on the arc loading index 1.
    for (auto& row : rep.rows)
        if (row.x == pt({2, 1}) && row.y == pt({1, 1})) CHECK(row.sum == doctest::Approx(1.0));
    // Agreement with the complexity report.
    auto crep = graph_complexity(g, UniformWeights<double>(1.0), f, Domain::full_cube(f));
    CHECK(bundle.objective() == doctest::Approx(crep.total()).epsilon(1e-10));
}

TEST_CASE("zero-flow arcs carry no certificate coordinate") {
    auto g = LearningGraph::layered(2, 1);
    auto f = FunctionSpec::custom(2, 2, {0, 1, 1, 1});
    auto bundle = optimal_bundle(g, UniformWeights<double>(1.0), f);
    for (std::size_t i = 0; i < bundle.positives.size(); ++i) {
        if (bundle.positives[i] == pt({2, 1})) {
            CHECK(bundle.u_pos[i].size() == 1);  // only the arc into the single sink
        }
    }
}

TEST_CASE("flow on a zero-weight arc is rejected at build time") {
    auto g = LearningGraph::layered(1, 1);
    auto f = FunctionSpec::custom(1, 2, {0, 1});
    std::vector<Flow<double>> flows{Flow<double>{pt({2}), {1.0}}};
    CHECK_THROWS_AS(build_certificate(g, UniformWeights<double>(0.0), f, {pt({2})}, flows,
                                      {pt({1})}),
                    InfeasibleError);
}

TEST_CASE("rescaling: identity, side scaling, balancing, feasibility invariance") {
    auto g = LearningGraph::layered(2, 1);
    auto f = FunctionSpec::custom(2, 2, {0, 1, 1, 1});
    auto bundle = optimal_bundle(g, UniformWeights<double>(1.0), f);

    auto same = rescale_balance(bundle, 1.0);
    CHECK(same.pos_max_sq == doctest::Approx(bundle.pos_max_sq));
    CHECK(same.neg_max_sq == doctest::Approx(bundle.neg_max_sq));

    auto scaled = rescale_balance(bundle, 2.0);
    CHECK(scaled.pos_max_sq == doctest::Approx(4.0 * bundle.pos_max_sq));
    CHECK(scaled.neg_max_sq == doctest::Approx(bundle.neg_max_sq / 4.0));
    CHECK(scaled.objective() == doctest::Approx(bundle.objective()));

    double c = balancing_constant(bundle);
    auto balanced = rescale_balance(bundle, c);
    CHECK(balanced.pos_max_sq == doctest::Approx(balanced.neg_max_sq));
    CHECK(balanced.pos_max_sq == doctest::Approx(std::sqrt(2.0)));

    CHECK_THROWS_AS(rescale_balance(bundle, 0.0), InputError);
    CHECK_THROWS_AS(rescale_balance(bundle, -1.0), InputError);

    CounterRng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        double cr = 0.1 + 9.9 * rng.next_unit();
        auto b2 = rescale_balance(bundle, cr);
        CHECK(b2.objective() == doctest::Approx(bundle.objective()));
        auto rep = verify_feasibility(b2);
        CHECK(rep.max_deviation < 1e-9);
    }
}

TEST_CASE("single-arc bundle under c=2: side maxima 4 and 1/4") {
    auto g = LearningGraph::layered(1, 1);
    auto f = FunctionSpec::custom(1, 2, {0, 1});
    auto bundle = optimal_bundle(g, UniformWeights<double>(1.0), f);
    auto scaled = rescale_balance(bundle, 2.0);
    CHECK(scaled.pos_max_sq == doctest::Approx(4.0));
    CHECK(scaled.neg_max_sq == doctest::Approx(0.25));
    CHECK(scaled.objective() == doctest::Approx(1.0));
}

TEST_CASE("worsening a flow by a circulation never helps the positive side") {
    // Two parallel length-2 routes; shifting delta from the optimum is a
    // circulation.  The positive-side maximum must not decrease.
    auto g = LearningGraph::layered(2, 2);
    auto f = FunctionSpec::k_distinctness(2, 2, 2);
    Domain dom = Domain::full_cube(f);
    auto wf = UniformWeights<double>(1.0);
    std::vector<Flow<double>> flows;
    for (const InputPoint& x : dom.positives) {
        auto inst = realize(g, wf, x);
        flows.push_back(optimal_flow(g, inst, accepting_vertices(g, f, x)).flow);
    }
    auto base = build_certificate(g, wf, f, dom.positives, flows, dom.negatives);

    CounterRng rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        double delta = (rng.next_unit() - 0.5) * 0.8;
        auto bent = flows;
        for (auto& fl : bent) {
            // route A arcs +delta, route B arcs -delta
            int a1 = g.out_arcs(0)[0], b1 = g.out_arcs(0)[1];
            int a2 = g.out_arcs(g.arc(a1).target)[0];
            int b2 = g.out_arcs(g.arc(b1).target)[0];
            fl.p[static_cast<std::size_t>(a1)] += delta;
            fl.p[static_cast<std::size_t>(a2)] += delta;
            fl.p[static_cast<std::size_t>(b1)] -= delta;
            fl.p[static_cast<std::size_t>(b2)] -= delta;
        }
        auto worse = build_certificate(g, wf, f, dom.positives, bent, dom.negatives);
        CHECK(worse.pos_max_sq >= base.pos_max_sq - 1e-12);
        // Feasibility survives: circulations do not change cut values.
        CHECK(verify_feasibility(worse).max_deviation < 1e-9);
    }
}

TEST_CASE("property: optimal-flow bundles are feasible on random k-distinctness cubes") {
    for (auto [k, n, m] : {std::tuple{2, 3, 3}, {2, 4, 4}, {3, 4, 2}}) {
        auto f = FunctionSpec::k_distinctness(k, n, m);
        auto g = LearningGraph::layered(n, std::min(n, k + 1));
        auto bundle = optimal_bundle(g, UniformWeights<double>(1.0), f);
        auto rep = verify_feasibility(bundle);
        CHECK(rep.max_deviation < 1e-9);
        auto crep = graph_complexity(g, UniformWeights<double>(1.0), f, Domain::full_cube(f));
        CHECK(bundle.objective() == doctest::Approx(crep.total()).epsilon(1e-10));
    }
}

TEST_CASE("property: exact verification over random rational weights") {
    // Random value-dependent rational weights on a full small cube; exact
    // optimal flows; pair sums must equal 1 exactly.
    auto f = FunctionSpec::k_distinctness(2, 3, 3);
    auto g = LearningGraph::layered(3, 2);
    Domain dom = Domain::full_cube(f);
    REQUIRE(!dom.negatives.empty());
    for (uint64_t trial = 0; trial < 5; ++trial) {
        // Weight of an arc depends on the restricted assignment through a
        // seeded hash, exercising value-dependent locality.
        LambdaWeights<Rational> wsq([trial](const LearningGraph&, const Arc& a,
                                            std::span<const int> vals) {
            uint64_t h = CounterRng::mix(trial * 1000003 + static_cast<uint64_t>(a.id) * 131);
            for (int v : vals) h = CounterRng::mix(h ^ static_cast<uint64_t>(v));
            return Rational(1 + (h % 16), 1 + ((h >> 8) % 4));
        });
        std::vector<Flow<Rational>> flows;
        for (const InputPoint& x : dom.positives) {
            auto inst = realize(g, wsq, x);
            // Solve on the squared weights themselves (any positive local
            // weights do), so flows match the wsq evaluator exactly.
            flows.push_back(optimal_flow(g, inst, accepting_vertices(g, f, x)).flow);
        }
        auto rep = verify_feasibility_exact(g, wsq, dom.positives, flows, dom.negatives);
        CHECK(rep.exact_ones);
        CHECK(rep.max_deviation == 0);
    }
}
