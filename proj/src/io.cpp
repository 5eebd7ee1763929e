#include "lg/io.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace lg {

void write_provenance(std::ostream& os, const std::string& command, uint64_t seed) {
    os << "# lgraph " << kToolVersion << " | " << command << " | seed=" << seed << "\n";
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::string vertex_label(const LearningGraph& g, int v) {
    auto idx = g.label(v);
    if (idx.empty()) return "-";
    std::string s;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(idx[i] + 1);
    }
    return s;
}

uint64_t parse_label(const std::string& text, int n) {
    if (text == "-") return 0;
    uint64_t mask = 0;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        int i = std::stoi(tok);
        if (i < 1 || i > n) throw InputError("vertex index outside [1, n]: " + tok);
        mask |= uint64_t(1) << (i - 1);
    }
    return mask;
}

// Assignment on a vertex as "i=v" pairs sorted by i, or "-" when empty.
std::string assignment_text(const LearningGraph& g, int v, const InputPoint& x) {
    auto idx = g.label(v);
    if (idx.empty()) return "-";
    std::string s;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(idx[i] + 1) + "=" + std::to_string(x[idx[i]]);
    }
    return s;
}

std::string csv_quote(const std::string& s) { return "\"" + s + "\""; }

}  // namespace

void write_graph_file(std::ostream& os, const LearningGraph& g, const FunctionSpec& f,
                      const Domain& domain, const WeightFn<double>& weights,
                      const std::vector<Flow<double>>& flows, const std::string& command,
                      uint64_t seed) {
    if (flows.size() != domain.positives.size())
        throw InputError("one flow per positive input required");
    write_provenance(os, command, seed);
    os << "lg n=" << g.n() << " depth=" << g.depth() << "\n";
    os << "f " << f.to_string() << "\n";
    for (int v = 0; v < g.vertex_count(); ++v) os << "v " << vertex_label(g, v) << "\n";
    for (const Arc& a : g.arcs())
        os << "a " << vertex_label(g, a.origin) << " " << (a.loaded + 1) << "\n";

    // One weight row per (arc, assignment) realized by the domain.
    std::set<std::pair<int, std::string>> seen;
    auto emit = [&](const InputPoint& x) {
        for (const Arc& a : g.arcs()) {
            std::string key = assignment_text(g, a.origin, x);
            if (!seen.emplace(a.id, key).second) continue;
            double w = weights.eval(g, a, restrict_values(x, g.mask(a.origin)));
            os << "w " << a.id << " " << key << " " << format_double(w) << "\n";
        }
    };
    for (const InputPoint& x : domain.positives) emit(x);
    for (const InputPoint& y : domain.negatives) emit(y);

    for (const InputPoint& x : domain.positives) os << "input positive " << x.to_string() << "\n";
    for (const InputPoint& y : domain.negatives) os << "input negative " << y.to_string() << "\n";

    for (std::size_t i = 0; i < flows.size(); ++i) {
        os << "flow x=" << domain.positives[i].to_string() << "\n";
        for (std::size_t a = 0; a < flows[i].p.size(); ++a)
            if (flows[i].p[a] != 0.0)
                os << "p " << a << " " << format_double(flows[i].p[a]) << "\n";
    }
}

GraphFile read_graph_file(std::istream& is) {
    std::string line;
    int n = -1, depth = -1;
    bool have_f = false;
    FunctionSpec f;
    std::vector<uint64_t> vertices;
    std::vector<std::pair<uint64_t, int>> arcs;
    struct WRow {
        int arc;
        std::string assignment;
        double value;
    };
    std::vector<WRow> wrows;
    std::vector<std::pair<bool, InputPoint>> inputs;
    std::vector<std::pair<InputPoint, std::vector<std::pair<int, double>>>> flows;

    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "lg") {
            std::string kv;
            while (ss >> kv) {
                if (kv.starts_with("n=")) n = std::stoi(kv.substr(2));
                if (kv.starts_with("depth=")) depth = std::stoi(kv.substr(6));
            }
        } else if (tag == "f") {
            std::string spec;
            ss >> spec;
            f = FunctionSpec::parse(spec);
            have_f = true;
        } else if (tag == "v") {
            std::string label;
            ss >> label;
            vertices.push_back(parse_label(label, n));
        } else if (tag == "a") {
            std::string label;
            int j;
            ss >> label >> j;
            arcs.emplace_back(parse_label(label, n), j - 1);
        } else if (tag == "w") {
            WRow row;
            std::string value;
            ss >> row.arc >> row.assignment >> value;
            row.value = std::strtod(value.c_str(), nullptr);
            wrows.push_back(std::move(row));
        } else if (tag == "input") {
            std::string cls, csv;
            ss >> cls >> csv;
            inputs.emplace_back(cls == "positive", InputPoint::parse(csv));
        } else if (tag == "flow") {
            std::string kv;
            ss >> kv;
            if (!kv.starts_with("x=")) throw InputError("flow header must carry x=<input>");
            flows.emplace_back(InputPoint::parse(kv.substr(2)),
                               std::vector<std::pair<int, double>>{});
        } else if (tag == "p") {
            if (flows.empty()) throw InputError("p row outside a flow block");
            int arc;
            std::string value;
            ss >> arc >> value;
            flows.back().second.emplace_back(arc, std::strtod(value.c_str(), nullptr));
        } else {
            throw InputError("unknown line tag in graph file: " + tag);
        }
    }
    if (n < 1 || depth < 0) throw InputError("graph file missing lg header");
    if (!have_f) throw InputError("graph file missing f line");

    GraphFile gf{LearningGraph::from_parts(n, vertices, arcs), f, {}, nullptr, {}};
    gf.weights = std::make_shared<TableWeights<double>>();
    for (auto& row : wrows) {
        if (row.arc < 0 || row.arc >= gf.graph.arc_count())
            throw InputError("weight row names a missing arc");
        // Translate "i=v" pairs into the values-only key used internally.
        std::string values_key;
        if (row.assignment != "-") {
            std::stringstream as(row.assignment);
            std::string pair;
            std::vector<int> vals;
            while (std::getline(as, pair, ',')) {
                auto eq = pair.find('=');
                if (eq == std::string::npos) throw InputError("bad assignment pair: " + pair);
                vals.push_back(std::stoi(pair.substr(eq + 1)));
            }
            values_key = assignment_key(0, vals);
        } else {
            values_key = "-";
        }
        gf.weights->set(row.arc, values_key, row.value);
    }
    for (auto& [pos, x] : inputs)
        (pos ? gf.domain.positives : gf.domain.negatives).push_back(x);
    gf.flows.resize(gf.domain.positives.size());
    for (auto& [x, rows] : flows) {
        auto it = std::find(gf.domain.positives.begin(), gf.domain.positives.end(), x);
        if (it == gf.domain.positives.end())
            throw InputError("flow block for an input outside the positive domain");
        auto& fl = gf.flows[static_cast<std::size_t>(it - gf.domain.positives.begin())];
        fl.x = x;
        fl.p.assign(static_cast<std::size_t>(gf.graph.arc_count()), 0.0);
        for (auto& [arc, value] : rows) {
            if (arc < 0 || arc >= gf.graph.arc_count())
                throw InputError("flow row names a missing arc");
            fl.p[static_cast<std::size_t>(arc)] = value;
        }
    }
    for (std::size_t i = 0; i < gf.flows.size(); ++i)
        if (gf.flows[i].p.empty())
            throw InputError("missing flow block for positive input " +
                             gf.domain.positives[i].to_string());
    return gf;
}

void write_certificate(std::ostream& os, const CertificateBundle& bundle,
                       const std::string& command, uint64_t seed) {
    write_provenance(os, command, seed);
    os << "certificate f=" << bundle.f.to_string() << "\n";
    const LearningGraph& g = *bundle.graph;
    for (std::size_t i = 0; i < bundle.positives.size(); ++i)
        for (auto& [arc, u] : bundle.u_pos[i])
            os << "u " << bundle.positives[i].to_string() << " " << (g.arc(arc).loaded + 1) << " "
               << arc << " " << format_double(u) << "\n";
    for (std::size_t i = 0; i < bundle.negatives.size(); ++i)
        for (std::size_t arc = 0; arc < bundle.u_neg[i].size(); ++arc)
            if (bundle.u_neg[i][arc] != 0.0)
                os << "u " << bundle.negatives[i].to_string() << " "
                   << (g.arc(static_cast<int>(arc)).loaded + 1) << " " << arc << " "
                   << format_double(bundle.u_neg[i][arc]) << "\n";
}

void write_feasibility_csv(std::ostream& os, const FeasibilityReport& rep,
                           const std::string& command, uint64_t seed) {
    write_provenance(os, command, seed);
    os << "x,y,sum,deviation\n";
    for (auto& row : rep.rows)
        os << csv_quote(row.x.to_string()) << "," << csv_quote(row.y.to_string()) << ","
           << format_double(row.sum) << "," << format_double(row.deviation) << "\n";
}

void write_class_stats_csv(std::ostream& os, const std::vector<ClassStats>& stats,
                           const std::string& command, uint64_t seed) {
    write_provenance(os, command, seed);
    os << "classKey,pi,tau,mu,count\n";
    for (auto& cs : stats)
        os << cs.key << "," << format_double(cs.pi) << "," << format_double(cs.tau) << ","
           << format_double(cs.mu) << "," << cs.count << "\n";
}

void write_tail_csv(std::ostream& os, const TailReport& rep, const std::string& command,
                    uint64_t seed) {
    write_provenance(os, command, seed);
    os << "# trials=" << rep.trials << " monotone=" << (rep.monotone ? 1 : 0);
    if (rep.fitted)
        os << " fitted_rate=" << format_double(rep.fitted_rate)
           << " r2=" << format_double(rep.fit_r2) << " scale=" << format_double(rep.fit_scale);
    os << "\n";
    os << "lambda,empirical,bound,stderr\n";
    for (auto& row : rep.rows)
        os << format_double(row.lambda) << "," << format_double(row.empirical) << ","
           << format_double(row.bound) << "," << format_double(row.stderr_) << "\n";
}

void write_collapsed_csv(std::ostream& os, const CollapsedReport& rep, const std::string& command,
                         uint64_t seed) {
    write_provenance(os, command, seed);
    os << "# estimate=" << format_double(rep.estimate) << "\n";
    os << "step,class,size,speciality,sqrtT\n";
    for (auto& st : rep.steps)
        os << st.index << "," << st.label << "," << (st.has_size ? st.class_size.str() : "") << ","
           << format_double(st.speciality) << "," << format_double(st.sqrt_tau) << "\n";
}

void write_scaling_csv(std::ostream& os, const ScalingFit& fit, const std::string& command,
                       uint64_t seed) {
    write_provenance(os, command, seed);
    os << "# slope=" << format_double(fit.slope) << " intercept=" << format_double(fit.intercept)
       << " max_residual=" << format_double(fit.max_residual) << "\n";
    os << "n,r1,estimate\n";
    for (auto& pt : fit.points)
        os << pt.n << "," << pt.r1 << "," << format_double(pt.estimate) << "\n";
}

void write_tail_plot_script(std::ostream& os, const std::string& csv_path) {
    os << "set datafile separator ','\n"
       << "set logscale y\n"
       << "set xlabel 'lambda'\n"
       << "set ylabel 'Pr[exceed]'\n"
       << "plot '" << csv_path << "' using 1:2 with linespoints title 'empirical', \\\n"
       << "     '" << csv_path << "' using 1:3 with lines title 'bound'\n";
}

}  // namespace lg
