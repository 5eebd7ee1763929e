#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "lg/domain.hpp"
#include "lg/errors.hpp"
#include "lg/rational.hpp"

namespace lg {

constexpr std::size_t kDefaultVertexCap = 2'000'000;

/// Arc from `origin` (vertex id) to `target` = origin + loaded index.
struct Arc {
    int id;
    int origin;
    int target;
    int loaded;  // 0-based index j, not in origin's label
};

/// Layered DAG on subset-labeled vertices.  Vertex 0 is always the empty set;
/// arcs connect S to S + {j} only, so layer = popcount of the label.
class LearningGraph {
  public:
    using Filter = std::function<bool(uint64_t)>;

    static LearningGraph layered(int n, int depth, const Filter& filter = {},
                                 std::size_t vertex_cap = kDefaultVertexCap);

    /// Rebuilds a graph from explicit vertex labels and (origin, loaded)
    /// arcs, e.g. when reading an exchange file.  Vertex 0 must be the empty
    /// set; arcs must step one layer up.
    static LearningGraph from_parts(int n, const std::vector<uint64_t>& vertex_masks,
                                    const std::vector<std::pair<uint64_t, int>>& arc_list);

    int n() const { return n_; }
    int depth() const { return depth_; }
    int vertex_count() const { return static_cast<int>(masks_.size()); }
    int arc_count() const { return static_cast<int>(arcs_.size()); }

    uint64_t mask(int v) const { return masks_[static_cast<std::size_t>(v)]; }
    int layer(int v) const;
    int vertex_id(uint64_t mask) const;  // -1 if absent
    const std::vector<int>& layer_vertices(int size) const;

    const Arc& arc(int a) const { return arcs_[static_cast<std::size_t>(a)]; }
    const std::vector<Arc>& arcs() const { return arcs_; }
    const std::vector<int>& out_arcs(int v) const { return out_[static_cast<std::size_t>(v)]; }
    const std::vector<int>& in_arcs(int v) const { return in_[static_cast<std::size_t>(v)]; }

    /// True when every subset of every included layer is present (needed for
    /// orbit-closed operations such as group averaging).
    bool is_layer_complete() const;

    /// Sorted 0-based indices of a vertex label.
    std::vector<int> label(int v) const;

  private:
    int n_ = 0;
    int depth_ = 0;
    std::vector<uint64_t> masks_;
    std::unordered_map<uint64_t, int> ids_;
    std::vector<Arc> arcs_;
    std::vector<std::vector<int>> out_, in_;
    std::vector<std::vector<int>> layers_;
};

/// Restriction of x to a vertex label: values listed in increasing index
/// order.  This is the only view weight functions ever see.
std::vector<int> restrict_values(const InputPoint& x, uint64_t subset);

/// Weight assignment: per-arc nonnegative function of the origin assignment.
/// Locality is structural -- eval receives the restricted values only.
template <class T>
class WeightFn {
  public:
    virtual ~WeightFn() = default;
    virtual T eval(const LearningGraph& g, const Arc& a, std::span<const int> origin_values) const = 0;
};

template <class T>
class UniformWeights final : public WeightFn<T> {
  public:
    explicit UniformWeights(T value) : value_(std::move(value)) {}
    T eval(const LearningGraph&, const Arc&, std::span<const int>) const override { return value_; }

  private:
    T value_;
};

/// One constant per step (arcs ending in layer i have step index i, 1-based).
template <class T>
class StepWeights final : public WeightFn<T> {
  public:
    explicit StepWeights(std::vector<T> per_step) : per_step_(std::move(per_step)) {}
    T eval(const LearningGraph& g, const Arc& a, std::span<const int>) const override {
        int step = g.layer(a.target);
        return per_step_.at(static_cast<std::size_t>(step - 1));
    }

  private:
    std::vector<T> per_step_;
};

template <class T>
class LambdaWeights final : public WeightFn<T> {
  public:
    using Fn = std::function<T(const LearningGraph&, const Arc&, std::span<const int>)>;
    explicit LambdaWeights(Fn fn) : fn_(std::move(fn)) {}
    T eval(const LearningGraph& g, const Arc& a, std::span<const int> vals) const override {
        return fn_(g, a, vals);
    }

  private:
    Fn fn_;
};

std::string assignment_key(uint64_t subset, std::span<const int> values);

/// Explicit (arc, origin assignment) -> weight table.  The representation
/// used for symmetrized weights and for graph files read back from disk.
template <class T>
class TableWeights final : public WeightFn<T> {
  public:
    void set(int arc, const std::string& key, T value) { table_[{arc, key}] = std::move(value); }
    T eval(const LearningGraph&, const Arc& a, std::span<const int> origin_values) const override {
        auto it = table_.find({a.id, assignment_key(0, origin_values)});
        if (it == table_.end())
            throw ValidationError("weight table has no entry for arc " + std::to_string(a.id));
        return it->second;
    }
    const auto& entries() const { return table_; }

  private:
    struct KeyHash {
        std::size_t operator()(const std::pair<int, std::string>& k) const {
            return std::hash<std::string>()(k.second) * 1000003u ^ static_cast<std::size_t>(k.first);
        }
    };
    std::unordered_map<std::pair<int, std::string>, T, KeyHash> table_;
};

/// Realized weights w_e(x) for one input.
template <class T>
struct GraphInstance {
    const LearningGraph* graph = nullptr;
    InputPoint x;
    std::vector<T> w;  // by arc id
};

template <class T>
GraphInstance<T> realize(const LearningGraph& g, const WeightFn<T>& wf, const InputPoint& x) {
    GraphInstance<T> inst;
    inst.graph = &g;
    inst.x = x;
    inst.w.resize(static_cast<std::size_t>(g.arc_count()));
    for (const Arc& a : g.arcs()) {
        auto vals = restrict_values(x, g.mask(a.origin));
        inst.w[static_cast<std::size_t>(a.id)] = wf.eval(g, a, vals);
    }
    return inst;
}

/// Accepting-vertex bitmap for input x.
std::vector<char> accepting_vertices(const LearningGraph& g, const FunctionSpec& f, const InputPoint& x);

}  // namespace lg
