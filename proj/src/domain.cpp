#include "lg/domain.hpp"

#include <algorithm>
#include <array>
#include <sstream>

namespace lg {

std::string InputPoint::to_string() const {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(values[i]);
    }
    return s;
}

InputPoint InputPoint::parse(const std::string& text) {
    InputPoint x;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) throw InputError("empty symbol in input point: " + text);
        x.values.push_back(std::stoi(tok));
    }
    if (x.values.empty()) throw InputError("empty input point");
    return x;
}

FunctionSpec FunctionSpec::k_distinctness(int k, int n, int m) {
    if (n < 1) throw InputError("k-distinctness needs n >= 1");
    if (m < 1) throw InputError("k-distinctness needs m >= 1");
    if (k < 2 || k > n) throw InputError("k-distinctness needs 2 <= k <= n");
    FunctionSpec f;
    f.kind = Kind::KDistinctness;
    f.n = n;
    f.m = m;
    f.k = k;
    return f;
}

FunctionSpec FunctionSpec::custom(int n, int m, std::vector<uint8_t> table) {
    if (n < 1 || m < 1) throw InputError("custom function needs n, m >= 1");
    std::size_t want = 1;
    for (int i = 0; i < n; ++i) {
        if (want > (std::size_t(1) << 48) / static_cast<std::size_t>(m))
            throw ResourceError("custom truth table too large");
        want *= static_cast<std::size_t>(m);
    }
    if (table.size() != want)
        throw InputError("custom truth table must have m^n entries");
    FunctionSpec f;
    f.kind = Kind::Custom;
    f.n = n;
    f.m = m;
    f.table = std::move(table);
    return f;
}

static int parse_kv_int(const std::string& body, const std::string& key) {
    auto pos = body.find(key + "=");
    if (pos == std::string::npos) throw InputError("function spec missing " + key + "=");
    pos += key.size() + 1;
    auto end = body.find(',', pos);
    return std::stoi(body.substr(pos, end == std::string::npos ? std::string::npos : end - pos));
}

FunctionSpec FunctionSpec::parse(const std::string& text) {
    auto colon = text.find(':');
    if (colon == std::string::npos) throw InputError("function spec must look like kdist:k=..,n=..,m=..");
    std::string head = text.substr(0, colon), body = text.substr(colon + 1);
    if (head == "kdist") {
        return k_distinctness(parse_kv_int(body, "k"), parse_kv_int(body, "n"), parse_kv_int(body, "m"));
    }
    if (head == "table") {
        int n = parse_kv_int(body, "n"), m = parse_kv_int(body, "m");
        auto pos = body.find("bits=");
        if (pos == std::string::npos) throw InputError("table spec missing bits=");
        std::string bits = body.substr(pos + 5);
        std::vector<uint8_t> table;
        table.reserve(bits.size());
        for (char c : bits) {
            if (c != '0' && c != '1') throw InputError("table bits must be 0/1");
            table.push_back(static_cast<uint8_t>(c - '0'));
        }
        return custom(n, m, std::move(table));
    }
    throw InputError("unknown function kind: " + head);
}

std::string FunctionSpec::to_string() const {
    if (kind == Kind::KDistinctness) {
        return "kdist:k=" + std::to_string(k) + ",n=" + std::to_string(n) + ",m=" + std::to_string(m);
    }
    std::string bits(table.size(), '0');
    for (std::size_t i = 0; i < table.size(); ++i)
        if (table[i]) bits[i] = '1';
    return "table:n=" + std::to_string(n) + ",m=" + std::to_string(m) + ",bits=" + bits;
}

std::size_t FunctionSpec::table_index(const InputPoint& x) const {
    std::size_t idx = 0, stride = 1;
    for (int i = 0; i < n; ++i) {
        idx += stride * static_cast<std::size_t>(x[i] - 1);
        stride *= static_cast<std::size_t>(m);
    }
    return idx;
}

void check_point(const FunctionSpec& f, const InputPoint& x) {
    if (x.n() != f.n)
        throw InputError("input has " + std::to_string(x.n()) + " symbols, function expects " +
                         std::to_string(f.n));
    for (int v : x.values)
        if (v < 1 || v > f.m) throw InputError("symbol " + std::to_string(v) + " outside [1," + std::to_string(f.m) + "]");
}

int evaluate(const FunctionSpec& f, const InputPoint& x) {
    check_point(f, x);
    if (f.kind == FunctionSpec::Kind::Custom) return f.table[f.table_index(x)] ? 1 : 0;
    std::vector<int> mult(static_cast<std::size_t>(f.m), 0);
    for (int v : x.values)
        if (++mult[static_cast<std::size_t>(v - 1)] >= f.k) return 1;
    return 0;
}

bool is_accepting(const FunctionSpec& f, const InputPoint& x, uint64_t subset) {
    check_point(f, x);
    if (f.kind == FunctionSpec::Kind::KDistinctness) {
        std::vector<int> mult(static_cast<std::size_t>(f.m), 0);
        for (int i = 0; i < f.n; ++i)
            if ((subset >> i) & 1)
                if (++mult[static_cast<std::size_t>(x[i] - 1)] >= f.k) return true;
        return false;
    }
    // Custom: x_S contains a 1-certificate iff every completion evaluates to 1.
    std::vector<int> free_idx;
    for (int i = 0; i < f.n; ++i)
        if (!((subset >> i) & 1)) free_idx.push_back(i);
    InputPoint y = x;
    std::size_t total = 1;
    for (std::size_t i = 0; i < free_idx.size(); ++i) total *= static_cast<std::size_t>(f.m);
    for (std::size_t c = 0; c < total; ++c) {
        std::size_t rest = c;
        for (int i : free_idx) {
            y.values[static_cast<std::size_t>(i)] = static_cast<int>(rest % static_cast<std::size_t>(f.m)) + 1;
            rest /= static_cast<std::size_t>(f.m);
        }
        if (!f.table[f.table_index(y)]) return false;
    }
    return true;
}

SymmetryElement SymmetryElement::identity(int n, int m) {
    SymmetryElement s;
    s.index_perm.resize(static_cast<std::size_t>(n));
    s.value_perm.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < n; ++i) s.index_perm[static_cast<std::size_t>(i)] = i;
    for (int v = 0; v < m; ++v) s.value_perm[static_cast<std::size_t>(v)] = v + 1;
    return s;
}

static bool is_perm(const std::vector<int>& p, int lo, int hi) {
    if (static_cast<int>(p.size()) != hi - lo + 1) return false;
    std::vector<char> seen(p.size(), 0);
    for (int v : p) {
        if (v < lo || v > hi || seen[static_cast<std::size_t>(v - lo)]) return false;
        seen[static_cast<std::size_t>(v - lo)] = 1;
    }
    return true;
}

bool SymmetryElement::is_valid(int n, int m) const {
    return is_perm(index_perm, 0, n - 1) && is_perm(value_perm, 1, m);
}

uint64_t SymmetryElement::map_vertex(uint64_t subset) const {
    uint64_t out = 0;
    for (std::size_t i = 0; i < index_perm.size(); ++i)
        if ((subset >> index_perm[i]) & 1) out |= uint64_t(1) << i;
    return out;
}

int SymmetryElement::map_index(int j) const {
    for (std::size_t i = 0; i < index_perm.size(); ++i)
        if (index_perm[i] == j) return static_cast<int>(i);
    throw InputError("index outside permutation range");
}

InputPoint apply_symmetry(const SymmetryElement& sigma, const InputPoint& x) {
    if (!sigma.is_valid(x.n(), 0) && sigma.index_perm.size() != x.values.size())
        throw InputError("symmetry dimensions do not match input");
    InputPoint y;
    y.values.resize(x.values.size());
    for (std::size_t i = 0; i < x.values.size(); ++i) {
        int src = sigma.index_perm[i];
        if (src < 0 || src >= x.n()) throw InputError("index permutation outside [n]");
        int v = x[src];
        if (v < 1 || v > static_cast<int>(sigma.value_perm.size()))
            throw InputError("value permutation does not cover symbol " + std::to_string(v));
        y.values[i] = sigma.value_perm[static_cast<std::size_t>(v - 1)];
    }
    return y;
}

void for_each_input(const FunctionSpec& f, InputClass cls,
                    const std::function<void(const InputPoint&)>& fn, std::size_t cap) {
    std::size_t total = 1;
    for (int i = 0; i < f.n; ++i) {
        if (total > cap / static_cast<std::size_t>(f.m) && f.m > 1)
            throw ResourceError("m^n exceeds enumeration cap of " + std::to_string(cap) + " inputs");
        total *= static_cast<std::size_t>(f.m);
    }
    if (total > cap)
        throw ResourceError("m^n exceeds enumeration cap of " + std::to_string(cap) + " inputs");
    InputPoint x;
    x.values.assign(static_cast<std::size_t>(f.n), 1);
    for (;;) {
        int v = evaluate(f, x);
        if (cls == InputClass::All || (cls == InputClass::Positive && v == 1) ||
            (cls == InputClass::Negative && v == 0))
            fn(x);
        int i = 0;
        while (i < f.n && x.values[static_cast<std::size_t>(i)] == f.m) {
            x.values[static_cast<std::size_t>(i)] = 1;
            ++i;
        }
        if (i == f.n) break;
        ++x.values[static_cast<std::size_t>(i)];
    }
}

std::vector<InputPoint> enumerate_inputs(const FunctionSpec& f, InputClass cls, std::size_t cap) {
    std::vector<InputPoint> out;
    for_each_input(f, cls, [&](const InputPoint& x) { out.push_back(x); }, cap);
    return out;
}

}  // namespace lg
