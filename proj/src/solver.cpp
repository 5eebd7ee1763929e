#include "lg/solver.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include <queue>

namespace lg {
namespace {

// Shared preprocessing: undirected connectivity over positive-weight arcs
// from the root, with all accepting vertices fused into one sink node.
template <class T>
struct Network {
    std::vector<int> node_of;   // vertex -> compact node id, -1 if unreachable
    int node_count = 0;
    int sink = -1;
    std::vector<int> live_arcs;  // arcs inside the component with w > 0, not sink loops
};

template <class T>
Network<T> build_network(const LearningGraph& g, const GraphInstance<T>& inst,
                         const std::vector<char>& accepting) {
    if (accepting[0])
        throw InfeasibleError("degenerate instance: the empty set is accepting");

    std::vector<std::vector<int>> touching(static_cast<std::size_t>(g.vertex_count()));
    for (const Arc& a : g.arcs()) {
        if (inst.w[static_cast<std::size_t>(a.id)] == T(0)) continue;
        touching[static_cast<std::size_t>(a.origin)].push_back(a.id);
        touching[static_cast<std::size_t>(a.target)].push_back(a.id);
    }

    std::vector<char> reached(static_cast<std::size_t>(g.vertex_count()), 0);
    std::queue<int> q;
    q.push(0);
    reached[0] = 1;
    bool found_accepting = false;
    while (!q.empty()) {
        int v = q.front();
        q.pop();
        if (accepting[static_cast<std::size_t>(v)]) {
            // Flow stops at the sink; do not explore through it.
            found_accepting = true;
            continue;
        }
        for (int a : touching[static_cast<std::size_t>(v)]) {
            int other = g.arc(a).origin == v ? g.arc(a).target : g.arc(a).origin;
            if (!reached[static_cast<std::size_t>(other)]) {
                reached[static_cast<std::size_t>(other)] = 1;
                q.push(other);
            }
        }
    }
    if (!found_accepting)
        throw InfeasibleError("no accepting vertex reachable from the empty set for input " +
                              inst.x.to_string());

    Network<T> net;
    net.node_of.assign(static_cast<std::size_t>(g.vertex_count()), -1);
    net.sink = 0;  // node 0 reserved for the merged accepting sink
    net.node_count = 1;
    for (int v = 0; v < g.vertex_count(); ++v) {
        if (!reached[static_cast<std::size_t>(v)]) continue;
        if (accepting[static_cast<std::size_t>(v)]) {
            net.node_of[static_cast<std::size_t>(v)] = net.sink;
        } else {
            net.node_of[static_cast<std::size_t>(v)] = net.node_count++;
        }
    }
    for (const Arc& a : g.arcs()) {
        if (inst.w[static_cast<std::size_t>(a.id)] == T(0)) continue;
        int u = net.node_of[static_cast<std::size_t>(a.origin)];
        int v = net.node_of[static_cast<std::size_t>(a.target)];
        if (u < 0 || v < 0) continue;
        if (u == net.sink) continue;  // arcs out of accepting vertices carry no flow
        net.live_arcs.push_back(a.id);
    }
    return net;
}

}  // namespace

OptimalFlowResult<double> optimal_flow(const LearningGraph& g, const GraphInstance<double>& inst,
                                       const std::vector<char>& accepting,
                                       const SolveOptions& opts) {
    for (double w : inst.w)
        if (w < 0.0) throw InputError("negative arc weight");
    Network<double> net = build_network(g, inst, accepting);
    int root = net.node_of[0];

    // Grounded Laplacian: sink row/column removed, unit current injected at
    // the root.  Unknowns are potentials of nodes 1..node_count-1.
    int dim = net.node_count - 1;
    auto unknown = [&](int node) { return node - 1; };

    Eigen::VectorXd phi(dim);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
    rhs[unknown(root)] = 1.0;

    if (dim <= opts.dense_limit) {
        Eigen::MatrixXd L = Eigen::MatrixXd::Zero(dim, dim);
        for (int aid : net.live_arcs) {
            const Arc& a = g.arc(aid);
            double w = inst.w[static_cast<std::size_t>(aid)];
            int u = net.node_of[static_cast<std::size_t>(a.origin)];
            int v = net.node_of[static_cast<std::size_t>(a.target)];
            if (u != net.sink) L(unknown(u), unknown(u)) += w;
            if (v != net.sink) L(unknown(v), unknown(v)) += w;
            if (u != net.sink && v != net.sink) {
                L(unknown(u), unknown(v)) -= w;
                L(unknown(v), unknown(u)) -= w;
            }
        }
        phi = L.ldlt().solve(rhs);
    } else {
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(net.live_arcs.size() * 4);
        for (int aid : net.live_arcs) {
            const Arc& a = g.arc(aid);
            double w = inst.w[static_cast<std::size_t>(aid)];
            int u = net.node_of[static_cast<std::size_t>(a.origin)];
            int v = net.node_of[static_cast<std::size_t>(a.target)];
            if (u != net.sink) trips.emplace_back(unknown(u), unknown(u), w);
            if (v != net.sink) trips.emplace_back(unknown(v), unknown(v), w);
            if (u != net.sink && v != net.sink) {
                trips.emplace_back(unknown(u), unknown(v), -w);
                trips.emplace_back(unknown(v), unknown(u), -w);
            }
        }
        Eigen::SparseMatrix<double> L(dim, dim);
        L.setFromTriplets(trips.begin(), trips.end());
        Eigen::ConjugateGradient<Eigen::SparseMatrix<double>,
                                 Eigen::Lower | Eigen::Upper,
                                 Eigen::DiagonalPreconditioner<double>>
            cg;
        cg.setTolerance(opts.cg_tolerance);
        cg.setMaxIterations(20L * dim);
        cg.compute(L);
        phi = cg.solve(rhs);
        if (cg.info() != Eigen::Success)
            throw ValidationError("iterative potential solve did not converge");
    }

    auto potential = [&](int node) { return node == 0 ? 0.0 : phi[unknown(node)]; };

    OptimalFlowResult<double> res;
    res.flow.x = inst.x;
    res.flow.p.assign(static_cast<std::size_t>(g.arc_count()), 0.0);
    for (int aid : net.live_arcs) {
        const Arc& a = g.arc(aid);
        double w = inst.w[static_cast<std::size_t>(aid)];
        double du = potential(net.node_of[static_cast<std::size_t>(a.origin)]) -
                    potential(net.node_of[static_cast<std::size_t>(a.target)]);
        res.flow.p[static_cast<std::size_t>(aid)] = w * du;
    }
    res.cost = potential(root);  // effective resistance times unit current
    return res;
}

OptimalFlowResult<Rational> optimal_flow(const LearningGraph& g,
                                         const GraphInstance<Rational>& inst,
                                         const std::vector<char>& accepting,
                                         const SolveOptions& opts) {
    for (const Rational& w : inst.w)
        if (w < 0) throw InputError("negative arc weight");
    Network<Rational> net = build_network(g, inst, accepting);
    if (static_cast<std::size_t>(net.node_count) > opts.exact_limit)
        throw ResourceError("exact-rational solve limited to " + std::to_string(opts.exact_limit) +
                            " nodes");
    int root = net.node_of[0];
    int dim = net.node_count - 1;
    auto unknown = [&](int node) { return static_cast<std::size_t>(node - 1); };

    std::vector<std::vector<Rational>> aug(
        static_cast<std::size_t>(dim), std::vector<Rational>(static_cast<std::size_t>(dim) + 1, Rational(0)));
    for (int aid : net.live_arcs) {
        const Arc& a = g.arc(aid);
        const Rational& w = inst.w[static_cast<std::size_t>(aid)];
        int u = net.node_of[static_cast<std::size_t>(a.origin)];
        int v = net.node_of[static_cast<std::size_t>(a.target)];
        if (u != net.sink) aug[unknown(u)][unknown(u)] += w;
        if (v != net.sink) aug[unknown(v)][unknown(v)] += w;
        if (u != net.sink && v != net.sink) {
            aug[unknown(u)][unknown(v)] -= w;
            aug[unknown(v)][unknown(u)] -= w;
        }
    }
    aug[unknown(root)][static_cast<std::size_t>(dim)] = 1;

    // Gaussian elimination with partial (first nonzero) pivoting; the grounded
    // Laplacian of a connected network is nonsingular, so pivots exist.
    for (int col = 0; col < dim; ++col) {
        int pivot = -1;
        for (int row = col; row < dim; ++row)
            if (aug[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)] != 0) {
                pivot = row;
                break;
            }
        if (pivot < 0) throw ValidationError("singular potential system in exact solve");
        std::swap(aug[static_cast<std::size_t>(col)], aug[static_cast<std::size_t>(pivot)]);
        const Rational pv = aug[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)];
        for (int row = 0; row < dim; ++row) {
            if (row == col) continue;
            Rational factor = aug[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)] / pv;
            if (factor == 0) continue;
            for (int c2 = col; c2 <= dim; ++c2)
                aug[static_cast<std::size_t>(row)][static_cast<std::size_t>(c2)] -=
                    factor * aug[static_cast<std::size_t>(col)][static_cast<std::size_t>(c2)];
        }
    }
    std::vector<Rational> phi(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i)
        phi[static_cast<std::size_t>(i)] = aug[static_cast<std::size_t>(i)][static_cast<std::size_t>(dim)] /
                                           aug[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];

    auto potential = [&](int node) { return node == 0 ? Rational(0) : phi[unknown(node)]; };

    OptimalFlowResult<Rational> res;
    res.flow.x = inst.x;
    res.flow.p.assign(static_cast<std::size_t>(g.arc_count()), Rational(0));
    for (int aid : net.live_arcs) {
        const Arc& a = g.arc(aid);
        const Rational& w = inst.w[static_cast<std::size_t>(aid)];
        res.flow.p[static_cast<std::size_t>(aid)] =
            w * (potential(net.node_of[static_cast<std::size_t>(a.origin)]) -
                 potential(net.node_of[static_cast<std::size_t>(a.target)]));
    }
    res.cost = potential(root);
    return res;
}

}  // namespace lg
