#include "lg/certificate.hpp"

#include <algorithm>

namespace lg {

double CertificateBundle::side_sq(bool positive, std::size_t idx) const {
    double s = 0.0;
    if (positive) {
        for (auto& [arc, u] : u_pos[idx]) s += u * u;
    } else {
        for (double u : u_neg[idx]) s += u * u;
    }
    return s;
}

CertificateBundle build_certificate(const LearningGraph& g, const WeightFn<double>& wf,
                                    const FunctionSpec& f,
                                    const std::vector<InputPoint>& positives,
                                    const std::vector<Flow<double>>& flows,
                                    const std::vector<InputPoint>& negatives) {
    if (positives.size() != flows.size())
        throw InputError("one flow per positive input required");
    CertificateBundle b;
    b.graph = &g;
    b.f = f;
    b.positives = positives;
    b.negatives = negatives;
    b.u_pos.resize(positives.size());
    b.u_neg.resize(negatives.size());

    for (std::size_t i = 0; i < positives.size(); ++i) {
        auto inst = realize(g, wf, positives[i]);
        double sq = 0.0;
        for (const Arc& a : g.arcs()) {
            double p = flows[i].p[static_cast<std::size_t>(a.id)];
            if (p == 0.0) continue;  // 0/0 = 0 convention
            double w = inst.w[static_cast<std::size_t>(a.id)];
            if (w <= 0.0)
                throw InfeasibleError("positive input " + positives[i].to_string() +
                                      " puts flow on zero-weight arc " + std::to_string(a.id));
            double u = p / std::sqrt(w);
            b.u_pos[i].emplace_back(a.id, u);
            sq += u * u;
        }
        b.pos_max_sq = std::max(b.pos_max_sq, sq);
    }
    for (std::size_t i = 0; i < negatives.size(); ++i) {
        auto inst = realize(g, wf, negatives[i]);
        double sq = 0.0;
        auto& vec = b.u_neg[i];
        vec.assign(static_cast<std::size_t>(g.arc_count()), 0.0);
        for (const Arc& a : g.arcs()) {
            double w = inst.w[static_cast<std::size_t>(a.id)];
            if (w < 0.0) throw InputError("negative arc weight");
            if (w == 0.0) continue;
            vec[static_cast<std::size_t>(a.id)] = std::sqrt(w);
            sq += w;
        }
        b.neg_max_sq = std::max(b.neg_max_sq, sq);
    }
    return b;
}

namespace {

// Bitmask of positions where x and y agree.  An arc contributes to the pair
// sum iff its origin lies inside the agreement set and its loaded index
// outside: exactly the cut between {S : x_S = y_S} and the rest.
uint64_t agreement_mask(const InputPoint& x, const InputPoint& y) {
    uint64_t m = 0;
    for (int i = 0; i < x.n(); ++i)
        if (x[i] == y[i]) m |= uint64_t(1) << i;
    return m;
}

}  // namespace

FeasibilityReport verify_feasibility(const CertificateBundle& bundle, int jobs,
                                     std::size_t pair_cap) {
    const LearningGraph& g = *bundle.graph;
    FeasibilityReport rep;
    std::size_t np = bundle.positives.size(), nn = bundle.negatives.size();
    if (nn != 0 && np > pair_cap / nn)
        throw ResourceError("pair verification exceeds the cap of " + std::to_string(pair_cap) +
                            " pairs");
    rep.rows.resize(np * nn);
    parallel_for_index(np * nn, jobs, [&](std::size_t pair) {
        std::size_t i = pair / nn, j = pair % nn;
        const InputPoint& x = bundle.positives[i];
        const InputPoint& y = bundle.negatives[j];
        uint64_t agree = agreement_mask(x, y);
        double sum = 0.0;
        for (auto& [arc, ux] : bundle.u_pos[i]) {
            const Arc& a = g.arc(arc);
            uint64_t origin = g.mask(a.origin);
            if ((origin & agree) != origin) continue;   // x_S != y_S
            if ((agree >> a.loaded) & 1) continue;      // x_j == y_j
            sum += ux * bundle.u_neg[j][static_cast<std::size_t>(arc)];
        }
        rep.rows[pair] = PairDeviation{x, y, sum, std::abs(sum - 1.0)};
    });
    for (auto& row : rep.rows) {
        if (row.deviation >= rep.max_deviation) {
            rep.max_deviation = row.deviation;
            rep.worst = row;
        }
    }
    return rep;
}

CertificateBundle rescale_balance(const CertificateBundle& bundle, double c) {
    if (!(c > 0.0)) throw InputError("rescale constant must be positive");
    CertificateBundle out = bundle;
    for (auto& vec : out.u_pos)
        for (auto& [arc, u] : vec) u *= c;
    for (auto& vec : out.u_neg)
        for (double& u : vec) u /= c;
    out.pos_max_sq = bundle.pos_max_sq * c * c;
    out.neg_max_sq = bundle.neg_max_sq / (c * c);
    return out;
}

double balancing_constant(const CertificateBundle& bundle) {
    if (bundle.pos_max_sq <= 0.0 || bundle.neg_max_sq <= 0.0)
        throw InputError("cannot balance a degenerate certificate");
    return std::pow(bundle.neg_max_sq / bundle.pos_max_sq, 0.25);
}

ExactFeasibilityReport verify_feasibility_exact(const LearningGraph& g,
                                                const WeightFn<Rational>& weight_sq,
                                                const std::vector<InputPoint>& positives,
                                                const std::vector<Flow<Rational>>& flows,
                                                const std::vector<InputPoint>& negatives) {
    if (positives.size() != flows.size())
        throw InputError("one flow per positive input required");
    ExactFeasibilityReport rep;
    rep.max_deviation = 0;
    rep.exact_ones = true;
    std::vector<GraphInstance<Rational>> wsq_pos, wsq_neg;
    wsq_pos.reserve(positives.size());
    for (auto& x : positives) wsq_pos.push_back(realize(g, weight_sq, x));
    wsq_neg.reserve(negatives.size());
    for (auto& y : negatives) wsq_neg.push_back(realize(g, weight_sq, y));

    for (std::size_t i = 0; i < positives.size(); ++i) {
        for (std::size_t j = 0; j < negatives.size(); ++j) {
            uint64_t agree = agreement_mask(positives[i], negatives[j]);
            Rational sum = 0;
            for (const Arc& a : g.arcs()) {
                const Rational& p = flows[i].p[static_cast<std::size_t>(a.id)];
                if (p == 0) continue;
                const Rational& wx = wsq_pos[i].w[static_cast<std::size_t>(a.id)];
                if (wx == 0)
                    throw InfeasibleError("positive input " + positives[i].to_string() +
                                          " puts flow on zero-weight arc " + std::to_string(a.id));
                uint64_t origin = g.mask(a.origin);
                if ((origin & agree) != origin) continue;
                if ((agree >> a.loaded) & 1) continue;
                const Rational& wy = wsq_neg[j].w[static_cast<std::size_t>(a.id)];
                if (wy != wx)
                    throw ValidationError(
                        "weight locality violated: agreeing assignments give different weights "
                        "on arc " +
                        std::to_string(a.id));
                // u_x u_y = (p/sqrt(w)) sqrt(w) = p once the weights match.
                sum += p;
            }
            Rational dev = sum - 1;
            if (dev < 0) dev = -dev;
            if (dev != 0) rep.exact_ones = false;
            if (dev > rep.max_deviation) {
                rep.max_deviation = dev;
                rep.worst_x = positives[i];
                rep.worst_y = negatives[j];
            }
        }
    }
    return rep;
}

}  // namespace lg
