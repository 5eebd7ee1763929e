#include "lg/kdist.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <unordered_map>

namespace lg {

std::vector<Rational> rho_exponents(int k) {
    if (k < 2) throw InputError("rho exponents need k >= 2");
    // rho_0 = 1, rho_k = 1/2, differences halving; the first difference is
    // 2^{k-2} / (2^k - 1).
    Rational d = Rational(BigInt(1) << (k - 2), (BigInt(1) << k) - 1);
    std::vector<Rational> rho;
    rho.push_back(1);
    for (int i = 1; i <= k; ++i) {
        rho.push_back(rho.back() - d);
        d /= 2;
    }
    if (rho.back() != Rational(1, 2)) throw ValidationError("exponent recurrence broke");
    return rho;
}

long r_from_exponent(long n, const Rational& rho) {
    if (n < 1) throw InputError("n must be positive");
    long r = std::llround(std::pow(static_cast<double>(n), to_double(rho)));
    return std::max<long>(1, r);
}

StageParams StageParams::from_exponents(int k, long n) {
    auto rho = rho_exponents(k);
    StageParams p;
    p.k = k;
    p.n = n;
    for (int i = 1; i <= k - 1; ++i) p.r.push_back(r_from_exponent(n, rho[static_cast<std::size_t>(i)]));
    return StageParams::with_r(k, n, std::move(p.r));
}

StageParams StageParams::with_r(int k, long n, std::vector<long> r) {
    if (k < 2) throw InputError("stage parameters need k >= 2");
    if (static_cast<int>(r.size()) != k - 1) throw InputError("need r_1..r_{k-1}");
    StageParams p;
    p.k = k;
    p.n = n;
    p.r = std::move(r);
    long prev = n;
    for (long ri : p.r) {
        if (ri < 1) throw InputError("every r_i must be at least 1");
        if (ri > prev) throw InputError("r values must be non-increasing");
        prev = ri;
    }
    return p;
}

long StageParams::r_at(int i) const {
    if (i == 0) return n;
    return r.at(static_cast<std::size_t>(i - 1));
}

int PromisedInstance::n_prime() const {
    int s = 0;
    for (std::size_t t = 0; t < ell.size(); ++t) s += static_cast<int>(t + 1) * ell[t];
    return s;
}

PromisedInstance build_promised_instance(int k, int n, const std::vector<int>& ell, uint64_t seed) {
    if (k < 2) throw InputError("promised instance needs k >= 2");
    if (static_cast<int>(ell.size()) != k - 1) throw InputError("need ell_1..ell_{k-1}");
    for (int l : ell)
        if (l < 0) throw InputError("tuple counts must be nonnegative");
    int used = 0;
    for (std::size_t t = 0; t < ell.size(); ++t) used += static_cast<int>(t + 1) * ell[t];
    if (used + k > n)
        throw InputError("promise does not fit: sum t*ell_t + k exceeds n");
    if (n > 63) throw InputError("instance needs n <= 63");

    // Deterministic index layout: a seeded shuffle of [n], cut into the
    // blocks A_1..A_{k-1}, then M, then slack.
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    if (seed != 0) {
        CounterRng rng = CounterRng::for_trial(seed, /*stream=*/0x1a, 0);
        for (int i = n - 1; i > 0; --i)
            std::swap(order[static_cast<std::size_t>(i)],
                      order[static_cast<std::size_t>(rng.uniform_int(0, i))]);
    }

    PromisedInstance inst;
    inst.k = k;
    inst.n = n;
    inst.m = n;
    inst.ell = ell;
    inst.layout.k = k;
    inst.layout.blocks.resize(static_cast<std::size_t>(k - 1));

    std::size_t cursor = 0;
    auto take = [&](int count) {
        uint64_t mask = 0;
        for (int c = 0; c < count; ++c) mask |= uint64_t(1) << order[cursor++];
        return mask;
    };

    int next_value = 1;
    InputPoint pos;
    pos.values.assign(static_cast<std::size_t>(n), 0);
    auto paint = [&](uint64_t mask, int value) {
        for (int i = 0; i < n; ++i)
            if ((mask >> i) & 1) pos.values[static_cast<std::size_t>(i)] = value;
    };

    for (int s = 1; s <= k - 1; ++s) {
        for (int t = 0; t < ell[static_cast<std::size_t>(s - 1)]; ++t) {
            uint64_t mask = take(s);
            inst.layout.blocks[static_cast<std::size_t>(s - 1)].push_back(mask);
            paint(mask, next_value++);
        }
    }
    inst.layout.m_mask = take(k);
    int witness_value = next_value++;
    paint(inst.layout.m_mask, witness_value);
    inst.slack_mask = 0;
    while (cursor < static_cast<std::size_t>(n)) {
        uint64_t mask = take(1);
        inst.slack_mask |= mask;
        paint(mask, next_value++);
    }

    inst.positive = pos;
    inst.negative = pos;
    // The negative variant breaks M into fresh singletons; the abandoned
    // witness value is reused so the budget of m = n values always suffices.
    {
        int fresh = witness_value;
        for (int i = 0; i < n; ++i)
            if ((inst.layout.m_mask >> i) & 1) {
                inst.negative.values[static_cast<std::size_t>(i)] = fresh;
                fresh = fresh == witness_value ? next_value : fresh + 1;
            }
        if (fresh - 1 > inst.m) throw ValidationError("value budget exceeded in negative variant");
    }
    return inst;
}

std::vector<InputPoint> positive_variants(const PromisedInstance& inst, int count, uint64_t seed) {
    std::vector<InputPoint> out;
    out.push_back(inst.positive);
    for (int i = 1; i < count; ++i) {
        CounterRng rng = CounterRng::for_trial(seed, /*stream=*/0x2b, static_cast<uint64_t>(i));
        out.push_back(apply_symmetry(sample_symmetry(inst.n, inst.m, rng), inst.positive));
    }
    return out;
}

std::vector<InputPoint> negative_variants(const PromisedInstance& inst, int count, uint64_t seed,
                                          bool include_near_miss) {
    std::vector<InputPoint> out;
    out.push_back(inst.negative);
    for (int i = 1; i < count; ++i) {
        CounterRng rng = CounterRng::for_trial(seed, /*stream=*/0x3c, static_cast<uint64_t>(i));
        out.push_back(apply_symmetry(sample_symmetry(inst.n, inst.m, rng), inst.negative));
    }
    if (include_near_miss) {
        // Break the witness into a (k-1)-tuple plus one fresh singleton: the
        // closest negative to the canonical positive.
        InputPoint near = inst.positive;
        int max_used = 0;
        for (int v : near.values) max_used = std::max(max_used, v);
        if (max_used + 1 <= inst.m) {
            for (int i = 0; i < inst.n; ++i)
                if ((inst.layout.m_mask >> i) & 1) {
                    near.values[static_cast<std::size_t>(i)] = max_used + 1;
                    break;
                }
            out.push_back(near);
        }
    }
    return out;
}

namespace {

// Per-block factor product of the nested binomial formula, summed over all
// type columns consistent with the remaining specification.
BigInt count_block_recurse(const std::vector<int>& ell, std::vector<int>& remaining, int s, int k) {
    if (s > k - 1) {
        for (int b : remaining)
            if (b != 0) return 0;
        return 1;
    }
    long cap = ell[static_cast<std::size_t>(s - 1)];
    // Choose b_{t,s} for t = 1..s.
    std::vector<int> col(static_cast<std::size_t>(s), 0);
    BigInt total = 0;
    auto rec = [&](auto&& self, int t, long used, BigInt factor) -> void {
        if (t > s) {
            for (int tt = 1; tt <= s; ++tt)
                remaining[static_cast<std::size_t>(tt - 1)] -= col[static_cast<std::size_t>(tt - 1)];
            total += factor * count_block_recurse(ell, remaining, s + 1, k);
            for (int tt = 1; tt <= s; ++tt)
                remaining[static_cast<std::size_t>(tt - 1)] += col[static_cast<std::size_t>(tt - 1)];
            return;
        }
        long limit = std::min<long>(remaining[static_cast<std::size_t>(t - 1)], cap - used);
        BigInt choose_t = binomial(s, t);
        for (long bts = 0; bts <= limit; ++bts) {
            col[static_cast<std::size_t>(t - 1)] = static_cast<int>(bts);
            BigInt f = factor * binomial(cap - used, bts);
            for (long c = 0; c < bts; ++c) f *= choose_t;
            self(self, t + 1, used + bts, f);
        }
        col[static_cast<std::size_t>(t - 1)] = 0;
    };
    rec(rec, 1, 0, BigInt(1));
    return total;
}

}  // namespace

BigInt count_by_specification(const std::vector<int>& ell, const std::vector<int>& spec) {
    if (ell.size() != spec.size()) throw InputError("spec and promise must have k-1 entries each");
    for (int b : spec)
        if (b < 0) throw InputError("specification entries must be nonnegative");
    int k = static_cast<int>(ell.size()) + 1;
    std::vector<int> remaining = spec;
    return count_block_recurse(ell, remaining, 1, k);
}

Rational expected_subtuples(const std::vector<int>& ell, long r, int t) {
    int k = static_cast<int>(ell.size()) + 1;
    if (t < 1 || t >= k) throw InputError("subtuple size must lie in [1, k-1]");
    long nprime = 0;
    for (std::size_t s = 0; s < ell.size(); ++s)
        nprime += static_cast<long>(s + 1) * ell[s];
    if (r < 0 || r > nprime) throw InputError("subset size must lie in [0, n']");
    if (r - t < 0) return 0;
    BigInt denom = binomial(nprime, r);
    if (denom == 0) return 0;
    BigInt num = 0;
    for (int s = t; s <= k - 1; ++s)
        num += BigInt(ell[static_cast<std::size_t>(s - 1)]) * binomial(s, t) *
               binomial(nprime - s, r - t);
    return Rational(num, denom);
}

Rational tuple_count_ratio(const std::vector<int>& ell, const std::vector<int>& ell_prime,
                           const std::vector<int>& spec) {
    BigInt a = count_by_specification(ell, spec);
    BigInt b = count_by_specification(ell_prime, spec);
    if (b == 0) throw InputError("undefined ratio: zero subsets under the second promise");
    return Rational(a, b);
}

std::string StepLabel::to_string() const {
    switch (stage) {
        case Stage::First: return "first:" + std::to_string(j);
        case Stage::Prep:
            return "prep:(" + std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(l) + ")";
        case Stage::Last: return "last:" + std::to_string(j);
    }
    return "?";
}

const StepInfo& Schedule::step(int index) const {
    return steps.at(static_cast<std::size_t>(index - 1));
}

bool Schedule::spec_valid_at(int index, const std::vector<int>& spec) const {
    const StepInfo& si = step(index);
    int mass = 0;
    for (std::size_t t = 0; t < spec.size(); ++t) mass += static_cast<int>(t + 1) * spec[t];
    if (mass != index - 1) return false;
    if (si.unconstrained) return true;
    return si.valid_origins.contains(spec);
}

std::vector<int> spec_after_load(const std::vector<int>& spec, int level) {
    if (level < 1 || level > static_cast<int>(spec.size()))
        throw InputError("load level outside [1, k-1]");
    std::vector<int> out = spec;
    out[static_cast<std::size_t>(level - 1)] += 1;
    if (level >= 2) {
        out[static_cast<std::size_t>(level - 2)] -= 1;
        if (out[static_cast<std::size_t>(level - 2)] < 0)
            throw InputError("transition needs a (l-1)-subtuple to extend");
    }
    return out;
}

std::vector<int> trace_to_original(const StageParams& params, const StepLabel& label,
                                   const std::vector<int>& spec_after_step) {
    if (label.stage != StepLabel::Stage::Prep)
        throw InputError("original-specification trace applies to prep steps");
    std::vector<int> out = spec_after_step;
    for (int t = 2; t < label.i; ++t)
        out[static_cast<std::size_t>(t - 1)] -= static_cast<int>(params.r_at(t));
    out[static_cast<std::size_t>(label.i - 1)] -= label.j - 1;
    out[static_cast<std::size_t>(label.l - 1)] -= 1;
    for (int b : out)
        if (b < 0) throw InputError("trace produced a negative specification entry");
    return out;
}

long long D_function(const std::vector<int>& ell, int i, const std::vector<long>& z) {
    int k = static_cast<int>(ell.size()) + 1;
    if (i < 1 || i >= k) throw InputError("level outside [1, k-1]");
    if (z.size() != ell.size()) throw InputError("usage vector needs k-1 entries");
    long long sum = 0;
    for (int s = i; s <= k - 1; ++s) {
        long avail = ell[static_cast<std::size_t>(s - 1)] - z[static_cast<std::size_t>(s - 1)];
        if (avail < 0) throw InputError("usage exceeds the promise");
        sum += avail * binomial(s, i).convert_to<long long>();
    }
    return sum;
}

Rational flow_on_arc(long s, int i, int l, const Rational& key_flow, const BigInt& N) {
    if (N == 0) throw InfeasibleError("no succeeding key vertices (N = 0)");
    if (l < 1 || l > s) throw InputError("partial-subtuple size outside [1, s]");
    if (s < i) return 0;
    Rational num = Rational(binomial(s, i), binomial(s, l));
    return num * key_flow / (Rational(l) * Rational(N));
}

namespace {

std::set<std::vector<int>> original_specs(const StageParams& params,
                                          const std::vector<Rational>& caps) {
    int k = params.k;
    long r1 = params.r_at(1);
    std::vector<long> cap_floor(static_cast<std::size_t>(k - 1), r1);
    for (int t = 2; t <= k - 1; ++t) {
        const Rational& c = caps[static_cast<std::size_t>(t - 2)];
        // valid means b_t <= cap_t
        cap_floor[static_cast<std::size_t>(t - 1)] =
            numerator(c) >= 0 ? (numerator(c) / denominator(c)).convert_to<long>() : -1;
    }
    std::set<std::vector<int>> out;
    std::vector<int> spec(static_cast<std::size_t>(k - 1), 0);
    auto rec = [&](auto&& self, int t, long mass_left) -> void {
        if (t > k - 1) return;
        if (t == 1) {
            // b_1 is forced by the mass.
            spec[0] = static_cast<int>(mass_left);
            out.insert(spec);
            return;
        }
        for (long bt = 0; bt <= std::min<long>(cap_floor[static_cast<std::size_t>(t - 1)], mass_left / t);
             ++bt) {
            spec[static_cast<std::size_t>(t - 1)] = static_cast<int>(bt);
            self(self, t - 1, mass_left - bt * t);
        }
        spec[static_cast<std::size_t>(t - 1)] = 0;
    };
    rec(rec, k - 1, r1);
    return out;
}

}  // namespace

Schedule Schedule::build(const StageParams& params, const std::vector<int>& ell) {
    if (static_cast<int>(ell.size()) != params.k - 1)
        throw InputError("promise needs k-1 tuple counts");
    Schedule sched;
    sched.params = params;
    sched.ell = ell;
    int k = params.k;
    long n = params.n;
    long r1 = params.r_at(1);

    // Markov thresholds: cap_t = 2 (k-2) E[b_t] keeps the total dead-end
    // probability of a uniform r_1-subset below 1/2.
    for (int t = 2; t <= k - 1; ++t) {
        Rational cap = Rational(2 * (k - 2)) * expected_subtuples(ell, r1, t);
        sched.caps.push_back(cap);
        // cap_t = c_t r_1^t / n^{t-1}
        BigInt r1t = 1, nt = 1;
        for (int e = 0; e < t; ++e) r1t *= r1;
        for (int e = 0; e + 1 < t; ++e) nt *= n;
        sched.c_consts.push_back(cap * Rational(nt, r1t));
    }

    auto v0 = original_specs(params, sched.caps);

    int index = 0;
    for (long j = 1; j <= r1; ++j) {
        StepInfo si;
        si.index = ++index;
        si.label = {StepLabel::Stage::First, 0, static_cast<int>(j), 0};
        si.speciality = 1.0;
        si.unconstrained = true;
        sched.steps.push_back(std::move(si));
    }

    // Accumulated valid set entering the current step.
    std::set<std::vector<int>> current = v0;
    for (int i = 2; i <= k - 1; ++i) {
        long rounds = params.r_at(i) - (i == k - 1 ? 1 : 0);
        for (long j = 1; j <= rounds; ++j) {
            for (int l = 1; l <= i; ++l) {
                StepInfo si;
                si.index = ++index;
                si.label = {StepLabel::Stage::Prep, i, static_cast<int>(j), l};
                si.speciality = static_cast<double>(n) / static_cast<double>(params.r_at(l - 1));
                si.valid_origins = current;
                sched.steps.push_back(si);
                // Loading level l moves every valid spec by the b' rule.
                std::set<std::vector<int>> next;
                for (auto spec : current) next.insert(spec_after_load(spec, l));
                current = std::move(next);
            }
        }
    }
    for (int j = 1; j <= k; ++j) {
        StepInfo si;
        si.index = ++index;
        si.label = {StepLabel::Stage::Last, 0, j, 0};
        si.speciality = static_cast<double>(n) * static_cast<double>(n) /
                        static_cast<double>(params.r_at(j - 1));
        si.valid_origins = current;
        sched.steps.push_back(si);
        if (j < k) {
            std::set<std::vector<int>> next;
            for (auto spec : current) next.insert(spec_after_load(spec, j));
            current = std::move(next);
        }
    }
    return sched;
}

namespace {

int find_arc(const LearningGraph& g, uint64_t origin_mask, int j) {
    int v = g.vertex_id(origin_mask);
    if (v < 0) throw ValidationError("flow construction hit a vertex outside the graph");
    for (int a : g.out_arcs(v))
        if (g.arc(a).loaded == j) return a;
    throw ValidationError("flow construction hit a missing arc");
}

// Uniform spread from the root through `layers` layers, restricted to
// `allowed` indices.  Returns the per-vertex flow at the final layer.
void spread_uniform(const LearningGraph& g, uint64_t allowed, int layers, Flow<Rational>& flow,
                    std::unordered_map<uint64_t, Rational>& frontier) {
    frontier.clear();
    frontier[0] = 1;
    int pool = std::popcount(allowed);
    if (layers > pool)
        throw InfeasibleError("uniform stage needs more free indices than the layout offers");
    for (int d = 0; d < layers; ++d) {
        std::unordered_map<uint64_t, Rational> next;
        Rational share(1, pool - d);
        for (auto& [mask, f] : frontier) {
            Rational p = f * share;
            uint64_t free = allowed & ~mask;
            for (int j = 0; j < g.n(); ++j) {
                if (!((free >> j) & 1)) continue;
                int arc = find_arc(g, mask, j);
                flow.p[static_cast<std::size_t>(arc)] += p;
                next[mask | (uint64_t(1) << j)] += p;
            }
        }
        frontier = std::move(next);
    }
}

// Loads the witness tuple in every order, splitting each vertex's flow
// evenly over the remaining witness elements.
void load_witness_all_orders(const LearningGraph& g, uint64_t m_mask, int k,
                             const std::unordered_map<uint64_t, Rational>& keys,
                             Flow<Rational>& flow) {
    BigInt kfact = factorial(k);
    for (auto& [kmask, pk] : keys) {
        if (pk == 0) continue;
        // Subsets Q of M define the loaded prefix; v closes it.
        for (uint64_t q = m_mask; q != 0; q = (q - 1) & m_mask) {
            int qs = std::popcount(q);
            Rational coeff = pk * Rational(factorial(qs - 1) * factorial(k - qs), kfact);
            for (int v = 0; v < g.n(); ++v) {
                if (!((q >> v) & 1)) continue;
                uint64_t origin = kmask | (q & ~(uint64_t(1) << v));
                int arc = find_arc(g, origin, v);
                flow.p[static_cast<std::size_t>(arc)] += coeff;
            }
        }
    }
}

// Witness: k indices of equal value (smallest such value, smallest indices).
uint64_t select_witness(const InputPoint& x, int k) {
    auto ts = TupleStructure::of(x);
    for (auto& t : ts.tuples) {
        if (t.size < k) continue;
        uint64_t m = 0;
        int left = k;
        for (int i = 0; i < x.n() && left > 0; ++i)
            if ((t.mask >> i) & 1) {
                m |= uint64_t(1) << i;
                --left;
            }
        return m;
    }
    throw InfeasibleError("positive input has no k equal elements");
}

// Selected blocks of an input under the promise: for each s, the ell_s
// s-tuples of smallest value.  Must avoid the witness for positives.
BlockLayout select_blocks(const InputPoint& x, int k, const std::vector<int>& ell,
                          uint64_t witness) {
    auto ts = TupleStructure::of(x);
    BlockLayout layout;
    layout.k = k;
    layout.m_mask = witness;
    layout.blocks.resize(static_cast<std::size_t>(k - 1));
    for (int s = 1; s <= k - 1; ++s) {
        auto& blk = layout.blocks[static_cast<std::size_t>(s - 1)];
        for (auto& t : ts.tuples) {
            if (static_cast<int>(blk.size()) == ell[static_cast<std::size_t>(s - 1)]) break;
            if (t.size != s || (t.mask & witness)) continue;
            blk.push_back(t.mask);
        }
        if (static_cast<int>(blk.size()) != ell[static_cast<std::size_t>(s - 1)])
            throw InfeasibleError("input violates the promise: fewer than ell_" +
                                  std::to_string(s) + " " + std::to_string(s) + "-tuples");
    }
    return layout;
}

// Weight table keyed by (step, origin specification); first-stage steps use
// one class per step, dead-end origins get weight zero.
template <class T>
class ScheduleWeights final : public WeightFn<T> {
  public:
    ScheduleWeights(std::shared_ptr<const Schedule> sched, int first_steps,
                    std::unordered_map<std::string, T> values)
        : sched_(std::move(sched)), first_steps_(first_steps), values_(std::move(values)) {}

    static std::string key_of(int step, const std::string& spec_key) {
        return std::to_string(step) + "|" + spec_key;
    }

    T eval(const LearningGraph& g, const Arc& a, std::span<const int> vals) const override {
        int step = g.layer(a.target);
        auto spec = specification_of_values(vals, sched_->params.k);
        if (spec.accepting) return T(0);
        std::string key;
        if (step <= first_steps_) {
            key = key_of(step, "*");
        } else {
            if (!sched_->spec_valid_at(step, spec.b)) return T(0);
            key = key_of(step, spec.key());
        }
        auto it = values_.find(key);
        return it == values_.end() ? T(0) : it->second;
    }

  private:
    std::shared_ptr<const Schedule> sched_;
    int first_steps_;
    std::unordered_map<std::string, T> values_;
};

struct ClassAccum {
    int step = 0;
    long max_ey = 0;      // largest arc count over negative instances
    long max_gx = 0;      // largest flow-support size over positive inputs
    long min_gx = 0;      // smallest nonzero flow-support size
    Rational pi = 0;      // largest |p_e| over the class
};

}  // namespace

ConstructionArtifacts build_baseline_graph(int k, int n, int m, long r, std::size_t vertex_cap) {
    if (r < 0 || r + k > n) throw InputError("baseline needs 0 <= r and r + k <= n");
    FunctionSpec f = FunctionSpec::k_distinctness(k, n, m);
    ConstructionArtifacts art{LearningGraph::layered(n, static_cast<int>(r) + k, {}, vertex_cap),
                              f,
                              Domain::full_cube(f),
                              {},
                              {},
                              nullptr,
                              nullptr,
                              {},
                              {}};
    const LearningGraph& g = art.graph;

    int steps = static_cast<int>(r) + k;
    std::vector<Rational> pi(static_cast<std::size_t>(steps), Rational(0));
    std::vector<long> max_gx(static_cast<std::size_t>(steps), 0);

    for (const InputPoint& x : art.domain.positives) {
        Flow<Rational> flow;
        flow.x = x;
        flow.p.assign(static_cast<std::size_t>(g.arc_count()), Rational(0));
        uint64_t witness = select_witness(x, k);
        uint64_t allowed = ((uint64_t(1) << n) - 1) & ~witness;
        std::unordered_map<uint64_t, Rational> frontier;
        spread_uniform(g, allowed, static_cast<int>(r), flow, frontier);
        load_witness_all_orders(g, witness, k, frontier, flow);

        std::vector<long> gx(static_cast<std::size_t>(steps), 0);
        for (const Arc& a : g.arcs()) {
            const Rational& p = flow.p[static_cast<std::size_t>(a.id)];
            if (p == 0) continue;
            int step = g.layer(a.target);
            Rational mag = p < 0 ? Rational(-p) : p;
            if (mag > pi[static_cast<std::size_t>(step - 1)]) pi[static_cast<std::size_t>(step - 1)] = mag;
            ++gx[static_cast<std::size_t>(step - 1)];
        }
        for (int s = 0; s < steps; ++s) max_gx[static_cast<std::size_t>(s)] = std::max(max_gx[static_cast<std::size_t>(s)], gx[static_cast<std::size_t>(s)]);
        art.flows_exact.push_back(std::move(flow));
    }

    // Specialities of the unstructured construction: 1 on the free steps,
    // n^i / r^{i-1} on the i-th witness step.
    std::vector<Rational> tau(static_cast<std::size_t>(steps), Rational(1));
    for (int i = 1; i <= k; ++i) {
        BigInt num = 1, den = 1;
        for (int e = 0; e < i; ++e) num *= n;
        for (int e = 0; e + 1 < i; ++e) den *= (r > 0 ? r : 1);
        tau[static_cast<std::size_t>(r + i - 1)] = Rational(num, den);
    }

    std::vector<double> w_step(static_cast<std::size_t>(steps));
    std::vector<Rational> wsq_step(static_cast<std::size_t>(steps));
    for (int s = 0; s < steps; ++s) {
        if (pi[static_cast<std::size_t>(s)] == 0)
            throw ValidationError("baseline flow misses step " + std::to_string(s + 1));
        w_step[static_cast<std::size_t>(s)] =
            to_double(pi[static_cast<std::size_t>(s)]) / std::sqrt(to_double(tau[static_cast<std::size_t>(s)]));
        wsq_step[static_cast<std::size_t>(s)] =
            pi[static_cast<std::size_t>(s)] * pi[static_cast<std::size_t>(s)] / tau[static_cast<std::size_t>(s)];
        ClassStats cs;
        cs.key = "s" + std::to_string(s + 1) + ":*";
        cs.step = s + 1;
        cs.pi = to_double(pi[static_cast<std::size_t>(s)]);
        cs.tau = to_double(tau[static_cast<std::size_t>(s)]);
        cs.mu = cs.pi * static_cast<double>(max_gx[static_cast<std::size_t>(s)]);
        long arcs_at_step = 0;
        for (const Arc& a : g.arcs())
            if (g.layer(a.target) == s + 1) ++arcs_at_step;
        cs.count = arcs_at_step;
        art.stats.push_back(cs);
    }
    art.weights = std::make_shared<StepWeights<double>>(w_step);
    art.weight_sq = std::make_shared<StepWeights<Rational>>(wsq_step);

    art.flows.reserve(art.flows_exact.size());
    for (auto& fe : art.flows_exact) {
        Flow<double> fd;
        fd.x = fe.x;
        fd.p.reserve(fe.p.size());
        for (auto& p : fe.p) fd.p.push_back(to_double(p));
        art.flows.push_back(std::move(fd));
    }
    return art;
}

ConstructionArtifacts build_alg1_full(const StageParams& params, const PromisedInstance& inst,
                                      const DomainConfig& domcfg, std::size_t vertex_cap) {
    int k = params.k;
    if (k != inst.k) throw InputError("stage parameters and instance disagree on k");
    auto sched = std::make_shared<Schedule>(Schedule::build(params, inst.ell));
    int depth = sched->depth();
    if (depth > inst.n)
        throw InputError("construction depth " + std::to_string(depth) + " exceeds n");

    FunctionSpec f = FunctionSpec::k_distinctness(k, inst.n, inst.m);
    ConstructionArtifacts art{LearningGraph::layered(inst.n, depth, {}, vertex_cap),
                              f,
                              {},
                              {},
                              {},
                              nullptr,
                              nullptr,
                              {},
                              *sched};
    const LearningGraph& g = art.graph;
    art.domain.positives = positive_variants(inst, domcfg.positives, domcfg.seed);
    art.domain.negatives = negative_variants(inst, domcfg.negatives, domcfg.seed, domcfg.near_miss);

    long r1 = params.r_at(1);

    for (const InputPoint& x : art.domain.positives) {
        Flow<Rational> flow;
        flow.x = x;
        flow.p.assign(static_cast<std::size_t>(g.arc_count()), Rational(0));

        uint64_t witness = select_witness(x, k);
        BlockLayout blocks = select_blocks(x, k, inst.ell, witness);
        uint64_t a_mask = blocks.a_ge1();

        // First stage: uniform over A_{>=1}, then conditioning onto the
        // valid original specifications.
        std::unordered_map<uint64_t, Rational> frontier;
        spread_uniform(g, a_mask, static_cast<int>(r1), flow, frontier);
        std::vector<int> V, W;
        for (auto& [mask, p] : frontier) {
            int v = g.vertex_id(mask);
            V.push_back(v);
            auto spec = specification_of(x, mask, k);
            if (!spec.accepting && sched->spec_valid_at(static_cast<int>(r1) + 1, spec.b))
                W.push_back(v);
        }
        if (W.empty())
            throw InfeasibleError("every first-stage vertex is a dead-end for input " +
                                  x.to_string());
        flow = condition_flow(g, flow, V, W);

        std::unordered_map<uint64_t, Rational> keys;
        for (int v : W) {
            Rational p = vertex_flow(g, flow, v);
            if (p != 0) keys[g.mask(v)] = p;
        }

        // Preparatory stages: each round extends every key vertex by one
        // i-subtuple from an untouched tuple, flow split evenly across the
        // N(S) successors; arc values follow the prefactor formula.
        for (int i = 2; i <= k - 1; ++i) {
            long rounds = params.r_at(i) - (i == k - 1 ? 1 : 0);
            for (long j = 1; j <= rounds; ++j) {
                std::unordered_map<uint64_t, Rational> next_keys;
                for (auto& [kmask, pk] : keys) {
                    std::vector<long> z(static_cast<std::size_t>(k - 1), 0);
                    for (int s = 1; s <= k - 1; ++s)
                        for (uint64_t tup : blocks.blocks[static_cast<std::size_t>(s - 1)])
                            if (tup & kmask) ++z[static_cast<std::size_t>(s - 1)];
                    BigInt N(D_function(inst.ell, i, z));
                    if (N == 0)
                        throw InfeasibleError("promise too tight: no untouched tuple to extend " +
                                              std::to_string(i) + "-stage round");
                    for (int s = i; s <= k - 1; ++s) {
                        for (uint64_t tup : blocks.blocks[static_cast<std::size_t>(s - 1)]) {
                            if (tup & kmask) continue;
                            // Every partial subtuple Q of the untouched tuple,
                            // every closing element v.
                            for (uint64_t q = tup; q != 0; q = (q - 1) & tup) {
                                int qs = std::popcount(q);
                                if (qs > i) continue;
                                Rational pe = flow_on_arc(s, i, qs, pk, N);
                                if (pe == 0) continue;
                                for (int v = 0; v < g.n(); ++v) {
                                    if (!((q >> v) & 1)) continue;
                                    uint64_t origin = kmask | (q & ~(uint64_t(1) << v));
                                    int arc = find_arc(g, origin, v);
                                    flow.p[static_cast<std::size_t>(arc)] += pe;
                                }
                                if (qs == i) next_keys[kmask | q] += pk / Rational(N);
                            }
                        }
                    }
                }
                keys = std::move(next_keys);
                if (keys.empty())
                    throw InfeasibleError("flow died out during the preparatory phase");
            }
        }

        load_witness_all_orders(g, witness, k, keys, flow);
        art.flows_exact.push_back(std::move(flow));
    }

    // Class statistics over the realized domain.
    std::map<std::string, ClassAccum> classes;
    int first_steps = static_cast<int>(r1);
    auto class_of = [&](int step, const Specification& spec) {
        return ScheduleWeights<double>::key_of(step, step <= first_steps ? "*" : spec.key());
    };

    for (std::size_t xi = 0; xi < art.domain.positives.size(); ++xi) {
        const InputPoint& x = art.domain.positives[xi];
        std::map<std::string, long> gx;
        for (const Arc& a : g.arcs()) {
            const Rational& p = art.flows_exact[xi].p[static_cast<std::size_t>(a.id)];
            if (p == 0) continue;
            int step = g.layer(a.target);
            auto spec = specification_of(x, g.mask(a.origin), k);
            if (spec.accepting || (step > first_steps && !sched->spec_valid_at(step, spec.b)))
                throw ValidationError("constructed flow crosses a dead-end origin");
            std::string key = class_of(step, spec);
            ++gx[key];
            auto& acc = classes[key];
            acc.step = step;
            Rational mag = p < 0 ? Rational(-p) : p;
            if (mag > acc.pi) acc.pi = mag;
        }
        for (auto& [key, cnt] : gx) {
            auto& acc = classes[key];
            acc.max_gx = std::max(acc.max_gx, cnt);
            acc.min_gx = acc.min_gx == 0 ? cnt : std::min(acc.min_gx, cnt);
        }
    }
    for (const InputPoint& y : art.domain.negatives) {
        std::map<std::string, long> ey;
        for (const Arc& a : g.arcs()) {
            int step = g.layer(a.target);
            auto spec = specification_of(y, g.mask(a.origin), k);
            if (spec.accepting) continue;
            if (step > first_steps && !sched->spec_valid_at(step, spec.b)) continue;
            ++ey[class_of(step, spec)];
        }
        for (auto& [key, cnt] : ey) {
            auto it = classes.find(key);
            if (it != classes.end()) it->second.max_ey = std::max(it->second.max_ey, cnt);
        }
    }

    std::unordered_map<std::string, double> w_values;
    std::unordered_map<std::string, Rational> wsq_values;
    for (auto& [key, acc] : classes) {
        // A class absent from every negative instance contributes nothing to
        // the negative complexity; clamp its count so the weight stays finite.
        long ey = std::max<long>(acc.max_ey, 1);
        Rational tau = Rational(ey, acc.min_gx);
        w_values[key] = to_double(acc.pi) / std::sqrt(to_double(tau));
        wsq_values[key] = acc.pi * acc.pi / tau;
        ClassStats cs;
        cs.key = key;
        cs.step = acc.step;
        cs.pi = to_double(acc.pi);
        cs.tau = to_double(tau);
        cs.mu = cs.pi * static_cast<double>(acc.max_gx);
        cs.count = acc.max_ey;
        art.stats.push_back(cs);
    }
    art.weights = std::make_shared<ScheduleWeights<double>>(sched, first_steps, std::move(w_values));
    art.weight_sq =
        std::make_shared<ScheduleWeights<Rational>>(sched, first_steps, std::move(wsq_values));

    art.flows.reserve(art.flows_exact.size());
    for (auto& fe : art.flows_exact) {
        Flow<double> fd;
        fd.x = fe.x;
        fd.p.reserve(fe.p.size());
        for (auto& p : fe.p) fd.p.push_back(to_double(p));
        art.flows.push_back(std::move(fd));
    }
    return art;
}

CollapsedReport collapsed_baseline(int k, long n, long r) {
    if (k < 2 || n < 1 || r < 0) throw InputError("collapsed baseline needs k >= 2, n >= 1, r >= 0");
    CollapsedReport rep;
    for (long j = 1; j <= r; ++j) {
        CollapsedStep st;
        st.index = static_cast<int>(j);
        st.label = "first:" + std::to_string(j);
        st.speciality = 1.0;
        st.sqrt_tau = 1.0;
        rep.steps.push_back(st);
        rep.estimate += 1.0;
    }
    for (int i = 1; i <= k; ++i) {
        CollapsedStep st;
        st.index = static_cast<int>(r) + i;
        st.label = "witness:" + std::to_string(i);
        st.speciality = std::pow(static_cast<double>(n), i) /
                        std::pow(static_cast<double>(r > 0 ? r : 1), i - 1);
        st.sqrt_tau = std::sqrt(st.speciality);
        rep.steps.push_back(st);
        rep.estimate += st.sqrt_tau;
    }
    return rep;
}

CollapsedReport collapsed_alg1(const StageParams& params, const std::vector<int>* ell) {
    CollapsedReport rep;
    std::unique_ptr<Schedule> sched;
    if (ell) sched = std::make_unique<Schedule>(Schedule::build(params, *ell));
    int k = params.k;
    long n = params.n;
    int index = 0;
    auto push = [&](const std::string& label, double tau) {
        CollapsedStep st;
        st.index = ++index;
        st.label = label;
        st.speciality = tau;
        st.sqrt_tau = std::sqrt(tau);
        if (sched) {
            const StepInfo& si = sched->step(st.index);
            if (!si.unconstrained) {
                st.class_size = 0;
                for (auto& spec : si.valid_origins) st.class_size += count_by_specification(*ell, spec);
                st.has_size = true;
            }
        }
        rep.steps.push_back(st);
        rep.estimate += st.sqrt_tau;
    };
    for (long j = 1; j <= params.r_at(1); ++j) push("first:" + std::to_string(j), 1.0);
    for (int i = 2; i <= k - 1; ++i) {
        long rounds = params.r_at(i) - (i == k - 1 ? 1 : 0);
        for (long j = 1; j <= rounds; ++j)
            for (int l = 1; l <= i; ++l)
                push(StepLabel{StepLabel::Stage::Prep, i, static_cast<int>(j), l}.to_string(),
                     static_cast<double>(n) / static_cast<double>(params.r_at(l - 1)));
    }
    for (int j = 1; j <= k; ++j)
        push("last:" + std::to_string(j), static_cast<double>(n) * static_cast<double>(n) /
                                              static_cast<double>(params.r_at(j - 1)));
    return rep;
}

ScalingFit scaling_experiment(const std::string& construction, int k,
                              const std::vector<long>& n_grid) {
    if (n_grid.size() < 5) throw InputError("scaling needs a grid of at least 5 sizes");
    ScalingFit fit;
    for (long n : n_grid) {
        ScalingPoint pt;
        pt.n = n;
        if (construction == "baseline") {
            Rational expo(k, k + 1);
            pt.r1 = r_from_exponent(n, expo);
            pt.estimate = collapsed_baseline(k, n, pt.r1).estimate;
        } else if (construction == "alg1" || construction == "alg1-collapsed") {
            StageParams params = StageParams::from_exponents(k, n);
            pt.r1 = params.r_at(1);
            pt.estimate = collapsed_alg1(params).estimate;
        } else {
            throw InputError("unknown construction: " + construction);
        }
        fit.points.push_back(pt);
    }
    // Least squares on (ln n, ln estimate).
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    auto N = static_cast<double>(fit.points.size());
    for (auto& pt : fit.points) {
        double lx = std::log(static_cast<double>(pt.n)), ly = std::log(pt.estimate);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    fit.slope = (N * sxy - sx * sy) / (N * sxx - sx * sx);
    fit.intercept = (sy - fit.slope * sx) / N;
    for (auto& pt : fit.points) {
        double resid = std::log(pt.estimate) -
                       (fit.intercept + fit.slope * std::log(static_cast<double>(pt.n)));
        fit.max_residual = std::max(fit.max_residual, std::abs(resid));
    }
    return fit;
}

}  // namespace lg
