#include "lg/symmetry.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace lg {

TupleStructure TupleStructure::of(const InputPoint& x) {
    std::map<int, uint64_t> by_value;
    for (int i = 0; i < x.n(); ++i) by_value[x[i]] |= uint64_t(1) << i;
    TupleStructure ts;
    for (auto& [value, mask] : by_value)
        ts.tuples.push_back({mask, value, std::popcount(mask)});
    return ts;
}

int Specification::mass() const {
    int m = 0;
    for (std::size_t t = 0; t < b.size(); ++t) m += static_cast<int>(t + 1) * b[t];
    return m;
}

std::string Specification::key() const {
    if (accepting) return "acc";
    std::string s;
    for (std::size_t t = 0; t < b.size(); ++t) {
        if (t) s += ',';
        s += std::to_string(b[t]);
    }
    return s;
}

Specification specification_of_values(std::span<const int> values, int k) {
    if (k < 2) throw InputError("specification needs k >= 2");
    std::map<int, int> mult;
    for (int v : values) ++mult[v];
    Specification spec;
    spec.k = k;
    spec.b.assign(static_cast<std::size_t>(k - 1), 0);
    for (auto& [value, count] : mult) {
        if (count >= k) {
            spec.accepting = true;
        } else {
            ++spec.b[static_cast<std::size_t>(count - 1)];
        }
    }
    return spec;
}

Specification specification_of(const InputPoint& x, uint64_t subset, int k) {
    auto vals = restrict_values(x, subset);
    return specification_of_values(vals, k);
}

uint64_t BlockLayout::a_ge1() const {
    uint64_t u = 0;
    for (auto& blk : blocks)
        for (uint64_t t : blk) u |= t;
    return u;
}

uint64_t BlockLayout::a_block(int s) const {
    uint64_t u = 0;
    for (uint64_t t : blocks.at(static_cast<std::size_t>(s - 1))) u |= t;
    return u;
}

TypeMatrix TypeMatrix::zero(int k) {
    TypeMatrix t;
    t.k = k;
    t.b.assign(static_cast<std::size_t>((k - 1) * k), 0);
    return t;
}

int& TypeMatrix::at(int t, int s) { return b[static_cast<std::size_t>((t - 1) * k + (s - 1))]; }
int TypeMatrix::at(int t, int s) const {
    return b[static_cast<std::size_t>((t - 1) * k + (s - 1))];
}

std::vector<int> TypeMatrix::row_sums() const {
    std::vector<int> sums(static_cast<std::size_t>(k - 1), 0);
    for (int t = 1; t <= k - 1; ++t)
        for (int s = 1; s <= k; ++s) sums[static_cast<std::size_t>(t - 1)] += at(t, s);
    return sums;
}

std::string TypeMatrix::key() const {
    std::string s;
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(b[i]);
    }
    return s;
}

TypeResult type_of(const InputPoint& x, uint64_t subset, const BlockLayout& layout) {
    int k = layout.k;
    TypeResult res;
    res.type = TypeMatrix::zero(k);
    uint64_t support = layout.a_ge1() | layout.m_mask;
    if ((subset & ~support) != 0) {
        res.supported = false;  // the flow is zero outside A_{>=1} union M
        return res;
    }
    // Equal values occur only within one tuple of the layout, so each
    // subtuple is located by its host tuple.
    auto ts = TupleStructure::of(x);
    for (auto& tuple : ts.tuples) {
        int t = std::popcount(tuple.mask & subset);
        if (t == 0 || t >= k) continue;
        if (tuple.mask & layout.m_mask) {
            res.type.at(t, k) += 1;
            continue;
        }
        bool placed = false;
        for (int s = 1; s <= k - 1 && !placed; ++s)
            for (uint64_t host : layout.blocks[static_cast<std::size_t>(s - 1)])
                if (tuple.mask & host) {
                    res.type.at(t, s) += 1;
                    placed = true;
                    break;
                }
        if (!placed) res.supported = false;
    }
    return res;
}

int type_distance(const TypeMatrix& a, const TypeMatrix& b) {
    if (a.k != b.k || a.b.size() != b.b.size())
        throw InputError("type matrices have different dimensions");
    int d = 0;
    for (std::size_t i = 0; i < a.b.size(); ++i) d = std::max(d, std::abs(a.b[i] - b.b[i]));
    return d;
}

std::string class_key(const LearningGraph& g, const Arc& a, const InputPoint& x, ClassMode mode,
                      int k) {
    if (mode == ClassMode::BySize) return "size:" + std::to_string(g.layer(a.origin));
    return "spec:" + specification_of(x, g.mask(a.origin), k).key();
}

WeightRule weight_from_class_stats(const std::vector<ClassStats>& stats) {
    WeightRule rule;
    for (const ClassStats& cs : stats) {
        if (!(cs.tau > 0)) throw InputError("class " + cs.key + " has tau <= 0");
        if (!(cs.pi > 0)) throw InputError("class " + cs.key + " has pi <= 0");
        rule.weight_by_class[cs.key] = cs.pi / std::sqrt(cs.tau);
        rule.estimate += cs.mu * std::sqrt(cs.tau);
        auto [it, fresh] = rule.step_max_tau.try_emplace(cs.step, cs.tau);
        if (!fresh) it->second = std::max(it->second, cs.tau);
    }
    for (auto& [step, tau] : rule.step_max_tau) rule.per_step_bound += std::sqrt(tau);
    return rule;
}

std::vector<SymmetryElement> full_group(int n, int m, std::size_t cap) {
    double size = 1;
    for (int i = 2; i <= n; ++i) size *= i;
    for (int i = 2; i <= m; ++i) size *= i;
    if (size > static_cast<double>(cap))
        throw ResourceError("full group of size n!*m! exceeds cap " + std::to_string(cap));

    std::vector<std::vector<int>> iperms, vperms;
    std::vector<int> ip(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ip[static_cast<std::size_t>(i)] = i;
    do iperms.push_back(ip);
    while (std::next_permutation(ip.begin(), ip.end()));
    std::vector<int> vp(static_cast<std::size_t>(m));
    for (int v = 0; v < m; ++v) vp[static_cast<std::size_t>(v)] = v + 1;
    do vperms.push_back(vp);
    while (std::next_permutation(vp.begin(), vp.end()));

    std::vector<SymmetryElement> out;
    out.reserve(iperms.size() * vperms.size());
    for (auto& i2 : iperms)
        for (auto& v2 : vperms) out.push_back(SymmetryElement{i2, v2});
    return out;
}

SymmetryElement sample_symmetry(int n, int m, CounterRng& rng) {
    SymmetryElement s = SymmetryElement::identity(n, m);
    for (int i = n - 1; i > 0; --i)
        std::swap(s.index_perm[static_cast<std::size_t>(i)],
                  s.index_perm[static_cast<std::size_t>(rng.uniform_int(0, i))]);
    for (int i = m - 1; i > 0; --i)
        std::swap(s.value_perm[static_cast<std::size_t>(i)],
                  s.value_perm[static_cast<std::size_t>(rng.uniform_int(0, i))]);
    return s;
}

std::vector<SymmetryElement> group_elements(int n, int m, const GroupSpec& spec) {
    if (spec.mode == GroupSpec::Mode::Full) return full_group(n, m, spec.full_cap);
    std::vector<SymmetryElement> out;
    out.push_back(SymmetryElement::identity(n, m));
    CounterRng rng = CounterRng::for_trial(spec.seed, /*stream=*/0x5b, 0);
    for (std::size_t i = 1; i < spec.sample_size; ++i) out.push_back(sample_symmetry(n, m, rng));
    return out;
}

int map_arc(const LearningGraph& g, const SymmetryElement& sigma, const Arc& a) {
    uint64_t origin = sigma.map_vertex(g.mask(a.origin));
    int vo = g.vertex_id(origin);
    if (vo < 0) throw ValidationError("arc image leaves the graph (graph is not orbit-closed)");
    int j = sigma.map_index(a.loaded);
    for (int cand : g.out_arcs(vo))
        if (g.arc(cand).loaded == j) return cand;
    throw ValidationError("arc image missing from the graph");
}

namespace {

// All assignments on a set of given size, as value vectors in index order.
std::vector<std::vector<int>> all_assignments(int set_size, int m) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(static_cast<std::size_t>(set_size), 1);
    for (;;) {
        out.push_back(cur);
        int i = 0;
        while (i < set_size && cur[static_cast<std::size_t>(i)] == m) {
            cur[static_cast<std::size_t>(i)] = 1;
            ++i;
        }
        if (i == set_size) break;
        ++cur[static_cast<std::size_t>(i)];
    }
    return out;
}

}  // namespace

template <class T>
SymmetrizeResult<T> symmetrize(const LearningGraph& g, const WeightFn<T>& wf,
                               const FunctionSpec& f, const std::vector<InputPoint>& positives,
                               const std::vector<Flow<T>>& flows, const GroupSpec& group) {
    if (!g.is_layer_complete())
        throw ValidationError("symmetrize needs a layer-complete graph (orbit closure)");
    if (positives.size() != flows.size()) throw InputError("one flow per positive input required");
    auto sigmas = group_elements(f.n, f.m, group);

    std::unordered_map<std::string, std::size_t> pos_index;
    for (std::size_t i = 0; i < positives.size(); ++i) pos_index[positives[i].to_string()] = i;

    SymmetrizeResult<T> res;
    res.weights = std::make_shared<TableWeights<T>>();
    T inv(1);
    inv /= T(static_cast<int>(sigmas.size()));

    // w'_e(alpha) = average over sigma of w_{sigma e}(sigma alpha).
    for (const Arc& a : g.arcs()) {
        auto idx = g.label(a.origin);
        for (auto& alpha : all_assignments(static_cast<int>(idx.size()), f.m)) {
            T acc(0);
            for (const SymmetryElement& sigma : sigmas) {
                const Arc& ia = g.arc(map_arc(g, sigma, a));
                auto iidx = g.label(ia.origin);
                // (sigma alpha)(i) = value_perm(alpha(index_perm(i))).
                std::vector<int> ivals(iidx.size());
                for (std::size_t p = 0; p < iidx.size(); ++p) {
                    int pre = sigma.index_perm[static_cast<std::size_t>(iidx[p])];
                    auto pos = std::lower_bound(idx.begin(), idx.end(), pre) - idx.begin();
                    ivals[p] = sigma.value_perm[static_cast<std::size_t>(
                        alpha[static_cast<std::size_t>(pos)] - 1)];
                }
                acc += wf.eval(g, ia, ivals);
            }
            res.weights->set(a.id, assignment_key(0, alpha), acc * inv);
        }
    }

    // p'_e(x) = average over sigma of p_{sigma e}(sigma x).
    res.flows.reserve(positives.size());
    for (std::size_t i = 0; i < positives.size(); ++i) {
        Flow<T> avg;
        avg.x = positives[i];
        avg.p.assign(static_cast<std::size_t>(g.arc_count()), T(0));
        for (const SymmetryElement& sigma : sigmas) {
            InputPoint sx = apply_symmetry(sigma, positives[i]);
            auto it = pos_index.find(sx.to_string());
            if (it == pos_index.end())
                throw InputError("missing flow for symmetric image " + sx.to_string());
            const Flow<T>& fsx = flows[it->second];
            for (const Arc& a : g.arcs()) {
                int ia = map_arc(g, sigma, a);
                avg.p[static_cast<std::size_t>(a.id)] += fsx.p[static_cast<std::size_t>(ia)];
            }
        }
        for (T& v : avg.p) v *= inv;
        res.flows.push_back(std::move(avg));
    }
    return res;
}

template <class T>
Flow<T> transport_flow(const LearningGraph& g, const SymmetryElement& sigma, const WeightFn<T>& wf,
                       const Flow<T>& flow, const T& tol) {
    Flow<T> out;
    out.x = apply_symmetry(sigma, flow.x);
    out.p.assign(flow.p.size(), T(0));
    for (const Arc& a : g.arcs()) {
        const T& p = flow.p[static_cast<std::size_t>(a.id)];
        if (p == T(0)) continue;
        int ia = map_arc(g, sigma, a);
        const Arc& image = g.arc(ia);
        auto origin_vals = restrict_values(flow.x, g.mask(a.origin));
        auto image_vals = restrict_values(out.x, g.mask(image.origin));
        T wx = wf.eval(g, a, origin_vals);
        T wsx = wf.eval(g, image, image_vals);
        T diff = wx - wsx;
        if (diff < T(0)) diff = -diff;
        if (diff > tol)
            throw ValidationError("transport unsound: weights differ on arc " +
                                  std::to_string(a.id) + " and its image");
        out.p[static_cast<std::size_t>(ia)] = p;
    }
    return out;
}

template SymmetrizeResult<double> symmetrize(const LearningGraph&, const WeightFn<double>&,
                                             const FunctionSpec&, const std::vector<InputPoint>&,
                                             const std::vector<Flow<double>>&, const GroupSpec&);
template SymmetrizeResult<Rational> symmetrize(const LearningGraph&, const WeightFn<Rational>&,
                                               const FunctionSpec&, const std::vector<InputPoint>&,
                                               const std::vector<Flow<Rational>>&,
                                               const GroupSpec&);
template Flow<double> transport_flow(const LearningGraph&, const SymmetryElement&,
                                     const WeightFn<double>&, const Flow<double>&, const double&);
template Flow<Rational> transport_flow(const LearningGraph&, const SymmetryElement&,
                                       const WeightFn<Rational>&, const Flow<Rational>&,
                                       const Rational&);

}  // namespace lg
