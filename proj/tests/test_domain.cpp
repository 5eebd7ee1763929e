#include <doctest.h>

#include "lg/domain.hpp"
#include "lg/rng.hpp"

using namespace lg;

namespace {

InputPoint pt(std::initializer_list<int> vals) { return InputPoint{std::vector<int>(vals)}; }

uint64_t mask_of(std::initializer_list<int> idx1based) {
    uint64_t m = 0;
    for (int i : idx1based) m |= uint64_t(1) << (i - 1);
    return m;
}

}  // namespace

TEST_CASE("evaluate: k-distinctness") {
    CHECK(evaluate(FunctionSpec::k_distinctness(2, 3, 2), pt({1, 2, 1})) == 1);
    CHECK(evaluate(FunctionSpec::k_distinctness(3, 3, 2), pt({1, 1, 2})) == 0);
    CHECK(evaluate(FunctionSpec::k_distinctness(3, 4, 9), pt({4, 4, 4, 9})) == 1);
}

TEST_CASE("evaluate: dimension mismatch is an input error") {
    auto f = FunctionSpec::k_distinctness(2, 3, 3);
    CHECK_THROWS_AS(evaluate(f, pt({1, 2})), InputError);
    CHECK_THROWS_AS(evaluate(f, pt({1, 2, 4})), InputError);
}

TEST_CASE("is_accepting on subsets") {
    auto f2 = FunctionSpec::k_distinctness(2, 3, 3);
    CHECK(is_accepting(f2, pt({1, 2, 1}), mask_of({1, 3})));
    CHECK_FALSE(is_accepting(f2, pt({1, 2, 1}), mask_of({1, 2})));
    auto f3 = FunctionSpec::k_distinctness(3, 4, 9);
    CHECK(is_accepting(f3, pt({5, 5, 5, 7}), mask_of({1, 2, 3})));
}

TEST_CASE("custom functions accept through forced completions") {
    // OR of [x_i = 2] on two binary variables.
    std::vector<uint8_t> table(4, 1);
    table[0] = 0;  // (1,1)
    auto f = FunctionSpec::custom(2, 2, table);
    CHECK(evaluate(f, pt({1, 1})) == 0);
    CHECK(evaluate(f, pt({2, 1})) == 1);
    CHECK(is_accepting(f, pt({2, 1}), mask_of({1})));
    CHECK_FALSE(is_accepting(f, pt({2, 1}), mask_of({2})));
    CHECK_FALSE(is_accepting(f, pt({1, 1}), mask_of({1})));
}

TEST_CASE("apply_symmetry examples") {
    auto id = SymmetryElement::identity(3, 3);
    CHECK(apply_symmetry(id, pt({1, 2, 1})) == pt({1, 2, 1}));

    SymmetryElement swap12 = id;
    std::swap(swap12.index_perm[0], swap12.index_perm[1]);
    CHECK(apply_symmetry(swap12, pt({1, 2, 1})) == pt({2, 1, 1}));

    SymmetryElement relabel = id;
    relabel.value_perm = {3, 2, 1};
    CHECK(apply_symmetry(relabel, pt({1, 2, 1})) == pt({3, 2, 3}));
}

TEST_CASE("enumerate_inputs by class") {
    auto f = FunctionSpec::k_distinctness(2, 2, 2);
    auto pos = enumerate_inputs(f, InputClass::Positive);
    auto neg = enumerate_inputs(f, InputClass::Negative);
    REQUIRE(pos.size() == 2);
    REQUIRE(neg.size() == 2);
    CHECK(std::find(pos.begin(), pos.end(), pt({1, 1})) != pos.end());
    CHECK(std::find(pos.begin(), pos.end(), pt({2, 2})) != pos.end());
    CHECK(std::find(neg.begin(), neg.end(), pt({1, 2})) != neg.end());
    CHECK(std::find(neg.begin(), neg.end(), pt({2, 1})) != neg.end());
}

TEST_CASE("enumerate_inputs: no positives when n < k is rejected at construction") {
    CHECK_THROWS_AS(FunctionSpec::k_distinctness(3, 2, 2), InputError);
}

TEST_CASE("enumerate_inputs: cap exceeded is a resource error") {
    auto f = FunctionSpec::k_distinctness(2, 10, 10);
    CHECK_THROWS_AS(enumerate_inputs(f, InputClass::All, 1000), ResourceError);
}

TEST_CASE("property: symmetry invariance of evaluation") {
    for (auto [k, n, m] : {std::tuple{2, 3, 3}, {2, 4, 2}, {3, 4, 3}}) {
        auto f = FunctionSpec::k_distinctness(k, n, m);
        CounterRng rng(42 + static_cast<uint64_t>(n));
        for (int trial = 0; trial < 20; ++trial) {
            SymmetryElement sigma = SymmetryElement::identity(n, m);
            for (int i = n - 1; i > 0; --i)
                std::swap(sigma.index_perm[static_cast<std::size_t>(i)],
                          sigma.index_perm[static_cast<std::size_t>(rng.uniform_int(0, i))]);
            for (int i = m - 1; i > 0; --i)
                std::swap(sigma.value_perm[static_cast<std::size_t>(i)],
                          sigma.value_perm[static_cast<std::size_t>(rng.uniform_int(0, i))]);
            for (const InputPoint& x : enumerate_inputs(f, InputClass::All))
                CHECK(evaluate(f, apply_symmetry(sigma, x)) == evaluate(f, x));
        }
    }
}

TEST_CASE("property: acceptance is monotone and consistent with evaluation") {
    auto f = FunctionSpec::k_distinctness(2, 4, 3);
    CounterRng rng(7);
    for (const InputPoint& x : enumerate_inputs(f, InputClass::All)) {
        uint64_t full = (uint64_t(1) << 4) - 1;
        CHECK(is_accepting(f, x, full) == (evaluate(f, x) == 1));
        for (int trial = 0; trial < 5; ++trial) {
            uint64_t s = rng.next_u64() & full;
            uint64_t sup = s | (rng.next_u64() & full);
            if (is_accepting(f, x, s)) CHECK(is_accepting(f, x, sup));
        }
    }
}

TEST_CASE("input point and function spec round-trip through strings") {
    auto f = FunctionSpec::parse("kdist:k=3,n=6,m=6");
    CHECK(f.k == 3);
    CHECK(f.n == 6);
    CHECK(f.m == 6);
    CHECK(FunctionSpec::parse(f.to_string()).to_string() == f.to_string());
    CHECK(InputPoint::parse("1,2,1") == pt({1, 2, 1}));
    CHECK(pt({1, 2, 1}).to_string() == "1,2,1");

    auto g = FunctionSpec::parse("table:n=2,m=2,bits=0111");
    CHECK(evaluate(g, pt({1, 1})) == 0);
    CHECK(evaluate(g, pt({2, 2})) == 1);
}
