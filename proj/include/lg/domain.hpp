#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lg/errors.hpp"

namespace lg {

constexpr std::size_t kDefaultInputCap = 2'000'000;

/// A point of [m]^n.  Indices are 0-based internally, symbols 1-based.
struct InputPoint {
    std::vector<int> values;

    int n() const { return static_cast<int>(values.size()); }
    int operator[](int i) const { return values[static_cast<std::size_t>(i)]; }
    bool operator==(const InputPoint&) const = default;

    std::string to_string() const;              // "1,2,1"
    static InputPoint parse(const std::string&);
};

struct FunctionSpec {
    enum class Kind { KDistinctness, Custom };

    Kind kind = Kind::KDistinctness;
    int n = 0;
    int m = 0;
    int k = 2;                    // k-distinctness only
    std::vector<uint8_t> table;   // custom only, length m^n

    static FunctionSpec k_distinctness(int k, int n, int m);
    static FunctionSpec element_distinctness(int n, int m) { return k_distinctness(2, n, m); }
    static FunctionSpec custom(int n, int m, std::vector<uint8_t> table);

    /// "kdist:k=3,n=6,m=6" or "table:n=2,m=2,bits=0111".
    static FunctionSpec parse(const std::string&);
    std::string to_string() const;

    /// Table index of x: sum (x_i - 1) m^i.
    std::size_t table_index(const InputPoint& x) const;
};

void check_point(const FunctionSpec& f, const InputPoint& x);

int evaluate(const FunctionSpec& f, const InputPoint& x);

/// Does x restricted to `subset` contain a 1-certificate?  For k-distinctness
/// this is the k-collision rule; for custom functions, every completion of
/// x_S must evaluate to 1.
bool is_accepting(const FunctionSpec& f, const InputPoint& x, uint64_t subset);

/// Permutation pair acting on inputs: (sigma x)_i = value_perm(x_{index_perm(i)}).
struct SymmetryElement {
    std::vector<int> index_perm;  // 0-based permutation of [n]
    std::vector<int> value_perm;  // value_perm[v-1] in [1..m]

    static SymmetryElement identity(int n, int m);
    bool is_valid(int n, int m) const;

    /// Vertex S maps to the preimage of S under index_perm, so that the
    /// assignment of sigma(x) on sigma(S) is determined by x_S.
    uint64_t map_vertex(uint64_t subset) const;
    int map_index(int j) const;  // position whose image under index_perm is j
};

InputPoint apply_symmetry(const SymmetryElement& sigma, const InputPoint& x);

enum class InputClass { Positive, Negative, All };

/// Calls fn for each input of the class, in lexicographic order (x_0 fastest).
void for_each_input(const FunctionSpec& f, InputClass cls,
                    const std::function<void(const InputPoint&)>& fn,
                    std::size_t cap = kDefaultInputCap);

std::vector<InputPoint> enumerate_inputs(const FunctionSpec& f, InputClass cls,
                                         std::size_t cap = kDefaultInputCap);

}  // namespace lg
