#include "lg/graph.hpp"

#include <bit>

namespace lg {

LearningGraph LearningGraph::layered(int n, int depth, const Filter& filter,
                                     std::size_t vertex_cap) {
    if (n < 1 || n > 62) throw InputError("layered graph needs 1 <= n <= 62");
    if (depth < 0 || depth > n) throw InputError("depth must lie in [0, n]");
    if (filter && !filter(0)) throw InputError("vertex filter must admit the empty set");

    LearningGraph g;
    g.n_ = n;
    g.depth_ = depth;
    g.layers_.resize(static_cast<std::size_t>(depth) + 1);

    auto add_vertex = [&](uint64_t mask) {
        if (g.masks_.size() >= vertex_cap)
            throw ResourceError("vertex cap of " + std::to_string(vertex_cap) + " exceeded");
        int id = static_cast<int>(g.masks_.size());
        g.masks_.push_back(mask);
        g.ids_.emplace(mask, id);
        g.layers_[static_cast<std::size_t>(std::popcount(mask))].push_back(id);
        return id;
    };

    add_vertex(0);
    // Enumerate each layer from the previous one; a subset may be reachable
    // from several parents, so dedupe through the id map.
    for (int size = 1; size <= depth; ++size) {
        for (int parent : g.layers_[static_cast<std::size_t>(size - 1)]) {
            uint64_t pm = g.masks_[static_cast<std::size_t>(parent)];
            for (int j = 0; j < n; ++j) {
                if ((pm >> j) & 1) continue;
                uint64_t cm = pm | (uint64_t(1) << j);
                if (g.ids_.contains(cm)) continue;
                if (filter && !filter(cm)) continue;
                add_vertex(cm);
            }
        }
    }

    g.out_.resize(g.masks_.size());
    g.in_.resize(g.masks_.size());
    for (int size = 0; size < depth; ++size) {
        for (int origin : g.layers_[static_cast<std::size_t>(size)]) {
            uint64_t om = g.masks_[static_cast<std::size_t>(origin)];
            for (int j = 0; j < n; ++j) {
                if ((om >> j) & 1) continue;
                auto it = g.ids_.find(om | (uint64_t(1) << j));
                if (it == g.ids_.end()) continue;
                int id = static_cast<int>(g.arcs_.size());
                g.arcs_.push_back(Arc{id, origin, it->second, j});
                g.out_[static_cast<std::size_t>(origin)].push_back(id);
                g.in_[static_cast<std::size_t>(it->second)].push_back(id);
            }
        }
    }
    return g;
}

LearningGraph LearningGraph::from_parts(int n, const std::vector<uint64_t>& vertex_masks,
                                        const std::vector<std::pair<uint64_t, int>>& arc_list) {
    if (n < 1 || n > 62) throw InputError("graph needs 1 <= n <= 62");
    if (vertex_masks.empty() || vertex_masks[0] != 0)
        throw InputError("vertex 0 must be the empty set");
    LearningGraph g;
    g.n_ = n;
    for (uint64_t mask : vertex_masks) {
        if (mask >> n) throw InputError("vertex label outside [n]");
        if (g.ids_.contains(mask)) throw InputError("duplicate vertex label");
        int id = static_cast<int>(g.masks_.size());
        g.masks_.push_back(mask);
        g.ids_.emplace(mask, id);
        g.depth_ = std::max(g.depth_, std::popcount(mask));
    }
    g.layers_.resize(static_cast<std::size_t>(g.depth_) + 1);
    for (int v = 0; v < g.vertex_count(); ++v)
        g.layers_[static_cast<std::size_t>(std::popcount(g.masks_[static_cast<std::size_t>(v)]))]
            .push_back(v);
    g.out_.resize(g.masks_.size());
    g.in_.resize(g.masks_.size());
    for (auto& [origin_mask, j] : arc_list) {
        auto it = g.ids_.find(origin_mask);
        if (it == g.ids_.end()) throw InputError("arc origin is not a vertex");
        if (j < 0 || j >= n || ((origin_mask >> j) & 1))
            throw InputError("arc loads an index inside its origin");
        auto t = g.ids_.find(origin_mask | (uint64_t(1) << j));
        if (t == g.ids_.end()) throw InputError("arc target is not a vertex");
        int id = static_cast<int>(g.arcs_.size());
        g.arcs_.push_back(Arc{id, it->second, t->second, j});
        g.out_[static_cast<std::size_t>(it->second)].push_back(id);
        g.in_[static_cast<std::size_t>(t->second)].push_back(id);
    }
    return g;
}

int LearningGraph::layer(int v) const { return std::popcount(masks_[static_cast<std::size_t>(v)]); }

int LearningGraph::vertex_id(uint64_t mask) const {
    auto it = ids_.find(mask);
    return it == ids_.end() ? -1 : it->second;
}

const std::vector<int>& LearningGraph::layer_vertices(int size) const {
    return layers_.at(static_cast<std::size_t>(size));
}

bool LearningGraph::is_layer_complete() const {
    for (int size = 0; size <= depth_; ++size) {
        BigInt expect = binomial(n_, size);
        if (BigInt(layers_[static_cast<std::size_t>(size)].size()) != expect) return false;
    }
    return true;
}

std::vector<int> LearningGraph::label(int v) const {
    std::vector<int> idx;
    uint64_t m = masks_[static_cast<std::size_t>(v)];
    for (int i = 0; i < n_; ++i)
        if ((m >> i) & 1) idx.push_back(i);
    return idx;
}

std::vector<int> restrict_values(const InputPoint& x, uint64_t subset) {
    std::vector<int> vals;
    for (int i = 0; i < x.n(); ++i)
        if ((subset >> i) & 1) vals.push_back(x[i]);
    return vals;
}

std::string assignment_key(uint64_t, std::span<const int> values) {
    std::string key;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) key += ',';
        key += std::to_string(values[i]);
    }
    return key.empty() ? "-" : key;
}

std::vector<char> accepting_vertices(const LearningGraph& g, const FunctionSpec& f,
                                     const InputPoint& x) {
    std::vector<char> acc(static_cast<std::size_t>(g.vertex_count()), 0);
    for (int v = 0; v < g.vertex_count(); ++v)
        acc[static_cast<std::size_t>(v)] = is_accepting(f, x, g.mask(v)) ? 1 : 0;
    return acc;
}

}  // namespace lg
