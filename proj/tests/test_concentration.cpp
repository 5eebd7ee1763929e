#include <doctest.h>

#include <sstream>

#include "lg/concentration.hpp"
#include "lg/io.hpp"

using namespace lg;

TEST_CASE("azuma_bound values") {
    CHECK(azuma_bound(1.0) == doctest::Approx(std::exp(-0.5)));
    CHECK(azuma_bound(2.0) == doctest::Approx(std::exp(-2.0)));
    CHECK(azuma_bound(40.0) < 1e-300);
    CHECK_THROWS_AS(azuma_bound(0.0), InputError);
    CHECK_THROWS_AS(azuma_bound(-1.0), InputError);
}

TEST_CASE("martingale tails sit under the Azuma bound") {
    SamplerConfig cfg{11, 20000, 2};
    auto rep = martingale_tail_check(100, cfg);
    CHECK(rep.monotone);
    for (auto& row : rep.rows) {
        if (row.lambda == 0.0) {
            // Symmetric walk: about half the mass is above zero.
            CHECK(row.empirical == doctest::Approx(0.5).epsilon(0.05));
        } else {
            CHECK(row.empirical <= row.bound + 3.0 * row.stderr_);
        }
    }
    CHECK(rep.fitted);
    CHECK(rep.fitted_rate > 0);
}

TEST_CASE("standard error follows the 1/sqrt(trials) law") {
    SamplerConfig small{5, 10000, 2}, big{5, 40000, 2};
    auto a = martingale_tail_check(100, small);
    auto b = martingale_tail_check(100, big);
    // Quadrupling the trials halves the binomial standard error band.
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        if (a.rows[i].empirical < 0.05 || a.rows[i].empirical > 0.95) continue;
        CHECK(b.rows[i].stderr_ ==
              doctest::Approx(a.rows[i].stderr_ / 2.0).epsilon(0.2));
    }
}

TEST_CASE("reports are bit-identical for identical sampler configs") {
    SamplerConfig cfg{99, 5000, 2};
    auto r1 = martingale_tail_check(50, cfg);
    auto r2 = martingale_tail_check(50, cfg);
    std::ostringstream s1, s2;
    write_tail_csv(s1, r1, "x", cfg.seed);
    write_tail_csv(s2, r2, "x", cfg.seed);
    CHECK(s1.str() == s2.str());

    SamplerConfig cfg_jobs = cfg;
    cfg_jobs.jobs = 1;
    auto r3 = martingale_tail_check(50, cfg_jobs);
    std::ostringstream s3;
    write_tail_csv(s3, r3, "x", cfg.seed);
    CHECK(s1.str() == s3.str());  // job count cannot change the report
}

TEST_CASE("estimate_mean_type: exact enumeration vs Monte Carlo within 3 sigma") {
    auto inst = build_promised_instance(3, 12, {2, 2}, 0);  // n' = 6 <= 12: exact
    std::vector<int> spec{1, 1};
    SamplerConfig cfg{3, 4000, 1};
    auto exact = estimate_mean_type(inst, spec, cfg);
    REQUIRE(exact.exact);

    // Force the sampling path on the same instance via a bigger twin.
    auto big = build_promised_instance(3, 26, {4, 4}, 0);  // n' = 12 boundary
    REQUIRE(std::popcount(big.layout.a_ge1()) == 12);
    auto exact_big = estimate_mean_type(big, spec, cfg);
    CHECK(exact_big.exact);

    auto bigger = build_promised_instance(3, 30, {5, 5}, 0);  // n' = 15: sampled
    auto mc = estimate_mean_type(bigger, spec, cfg);
    CHECK_FALSE(mc.exact);
    auto ref = mean_type_reference(bigger, spec);
    for (int t = 1; t <= 2; ++t)
        for (int s = 1; s <= 2; ++s) {
            double e = to_double(ref[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(s - 1)]);
            double got = mc.mean[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(s - 1)];
            double se = mc.stderr_[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(s - 1)];
            CHECK(std::abs(got - e) <= std::max(3.0 * se, 0.08));
        }
}

TEST_CASE("estimate_mean_type: hopeless rejection rates are a sampler error") {
    // Three full pairs in a uniform 6-subset of 30 indices is rare; with the
    // acceptance-rate floor pushed up, the sampler must give up loudly.
    auto inst = build_promised_instance(3, 30, {5, 5}, 0);
    SamplerConfig cfg{19, 2000, 1};
    CHECK_THROWS_AS(estimate_mean_type(inst, {0, 3}, cfg, /*min_accept_rate=*/0.5),
                    ValidationError);
}

TEST_CASE("estimate_mean_type: zero specification gives the zero matrix") {
    auto inst = build_promised_instance(3, 12, {2, 2}, 0);
    SamplerConfig cfg{3, 100, 1};
    auto est = estimate_mean_type(inst, {0, 0}, cfg);
    for (auto& row : est.mean)
        for (double v : row) CHECK(v == 0.0);
}

TEST_CASE("exact marginal mean rows match enumeration on small instances") {
    // Oracle: enumerate subsets holding exactly (0,..,b_t,..,0) and average
    // the type row.  n' = 6 instance, marginal b_2 = 1 and b_1 = 2.
    auto inst = build_promised_instance(3, 12, {2, 2}, 0);
    SamplerConfig cfg{3, 100, 1};
    {
        auto est = estimate_mean_type(inst, {0, 1}, cfg);  // exact path
        auto row = exact_marginal_mean_row(inst.ell, 2, 1);
        REQUIRE(est.exact);
        for (int s = 1; s <= 3; ++s)
            CHECK(to_double(row[static_cast<std::size_t>(s - 1)]) ==
                  doctest::Approx(est.mean[1][static_cast<std::size_t>(s - 1)]));
    }
    {
        auto est = estimate_mean_type(inst, {2, 0}, cfg);
        auto row = exact_marginal_mean_row(inst.ell, 1, 2);
        for (int s = 1; s <= 3; ++s)
            CHECK(to_double(row[static_cast<std::size_t>(s - 1)]) ==
                  doctest::Approx(est.mean[0][static_cast<std::size_t>(s - 1)]));
    }
    // b_t = 0 rows vanish.
    auto zero = exact_marginal_mean_row(inst.ell, 2, 0);
    for (auto& v : zero) CHECK(v == 0);
}

TEST_CASE("type deviation tails: full exceedance at zero, monotone decay") {
    auto inst = build_promised_instance(3, 60, {19, 19}, 0);
    std::vector<int> spec{10, 3};
    SamplerConfig cfg{13, 4000, 1};
    auto rep = type_deviation_tail(inst, spec, cfg);
    REQUIRE(!rep.rows.empty());
    // The mean type has fractional entries, so the deviation never vanishes.
    CHECK(rep.rows[0].lambda == 0.0);
    CHECK(rep.rows[0].empirical == 1.0);
    CHECK(rep.monotone);
    CHECK(rep.fitted);
    CHECK(rep.fitted_rate > 0);
}

TEST_CASE("key flow ratios: same type, same flow; linear growth in distance") {
    StageParams params = StageParams::from_exponents(3, 60);
    auto inst = build_promised_instance(3, 60, {19, 19}, 0);
    SamplerConfig cfg{17, 4000, 1};
    auto rep = key_flow_ratio_check(params, inst, cfg, 3);
    CHECK(rep.sampled > 1000);
    CHECK(rep.distinct_types >= 10);
    CHECK(rep.zero_distance_exact);
    CHECK(rep.slope > 0);
    CHECK(rep.linear_ok);
    CHECK(rep.band_ok);
    REQUIRE(!rep.max_log_ratio_by_d.empty());
    CHECK(rep.max_log_ratio_by_d.front().first >= 1);

    // Determinism.
    auto rep2 = key_flow_ratio_check(params, inst, cfg, 3);
    CHECK(rep2.sampled == rep.sampled);
    CHECK(rep2.slope == rep.slope);

    CHECK_THROWS_AS(key_flow_ratio_check(StageParams::from_exponents(2, 60),
                                         build_promised_instance(2, 60, {20}, 0), cfg, 3),
                    InputError);
}
