#include "lg/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "lg/io.hpp"

namespace lg {
namespace {

struct CommonOpts {
    uint64_t seed = 1;
    long trials = 100000;
    int jobs = default_jobs();
    std::size_t cap_vertices = kDefaultVertexCap;
    double tolerance = 1e-9;
    bool exact = false;
    std::string out;
    std::string in;
    std::string params_file;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--seed", opts.seed, "RNG seed");
    cmd->add_option("--trials", opts.trials, "Monte Carlo trials");
    cmd->add_option("--jobs", opts.jobs, "concurrent tasks");
    cmd->add_option("--cap-vertices", opts.cap_vertices, "vertex cap for graph builds");
    cmd->add_option("--tolerance", opts.tolerance, "numeric tolerance");
    cmd->add_flag("--exact", opts.exact, "exact-rational path where available");
    cmd->add_option("--out", opts.out, "output file (default: stdout)");
    cmd->add_option("--in", opts.in, "input file");
    cmd->add_option("--params-file", opts.params_file, "plain-text key=value parameter file");
}

using KvMap = std::map<std::string, std::string>;

KvMap parse_kv(const std::vector<std::string>& tokens,
               std::initializer_list<const char*> allowed,
               const std::string& params_file = {}) {
    std::vector<std::string> all;
    if (!params_file.empty()) {
        std::ifstream pf(params_file);
        if (!pf) throw InputError("cannot open parameter file " + params_file);
        std::string tok;
        while (pf >> tok)
            if (tok[0] != '#') all.push_back(tok);
    }
    all.insert(all.end(), tokens.begin(), tokens.end());
    KvMap kv;
    for (const std::string& tok : all) {
        auto eq = tok.find('=');
        if (eq == std::string::npos)
            throw InputError("expected key=value, got '" + tok + "'");
        std::string key = tok.substr(0, eq);
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* a) { return key == a; }) == allowed.end())
            throw InputError("unknown option " + key + "=...");
        kv[key] = tok.substr(eq + 1);  // later tokens override the file
    }
    return kv;
}

const std::string& kv_need(const KvMap& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw InputError("missing required argument " + key + "=...");
    return it->second;
}

long kv_long(const KvMap& kv, const std::string& key) { return std::stol(kv_need(kv, key)); }

long kv_long_or(const KvMap& kv, const std::string& key, long fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : std::stol(it->second);
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
    return out;
}

std::vector<long> parse_long_list(const std::string& text) {
    std::vector<long> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stol(tok));
    return out;
}

std::string join_args(const std::string& name, const std::vector<std::string>& tokens) {
    std::string s = name;
    for (auto& t : tokens) s += " " + t;
    return s;
}

// Output helper: --out file or stdout.
struct Sink {
    std::ofstream file;
    std::ostream& os;
    explicit Sink(const std::string& path)
        : file(path.empty() ? std::ofstream() : std::ofstream(path)), os(path.empty() ? std::cout : file) {
        if (!path.empty() && !file) throw InputError("cannot open output file " + path);
    }
};

ConstructionArtifacts build_from_kv(const KvMap& kv, const CommonOpts& opts) {
    std::string construction = kv_need(kv, "construction");
    if (construction == "baseline") {
        int k = static_cast<int>(kv_long(kv, "k"));
        int n = static_cast<int>(kv_long(kv, "n"));
        int m = static_cast<int>(kv_long_or(kv, "m", n));
        long r = kv_long_or(kv, "r", -1);
        if (r < 0) {
            r = r_from_exponent(n, Rational(k, k + 1));
            r = std::min<long>(r, n - k);
            r = std::max<long>(r, 1);
        }
        return build_baseline_graph(k, n, m, r, opts.cap_vertices);
    }
    if (construction == "alg1") {
        int k = static_cast<int>(kv_long(kv, "k"));
        int n = static_cast<int>(kv_long(kv, "n"));
        auto ell = parse_int_list(kv_need(kv, "l"));
        StageParams params = kv.contains("r")
                                 ? StageParams::with_r(k, n, parse_long_list(kv.at("r")))
                                 : StageParams::from_exponents(k, n);
        PromisedInstance inst = build_promised_instance(k, n, ell, opts.seed);
        DomainConfig dom;
        dom.positives = static_cast<int>(kv_long_or(kv, "dpos", dom.positives));
        dom.negatives = static_cast<int>(kv_long_or(kv, "dneg", dom.negatives));
        dom.seed = opts.seed;
        return build_alg1_full(params, inst, dom, opts.cap_vertices);
    }
    throw InputError("construction must be baseline or alg1");
}

int cmd_params(const std::vector<std::string>& tokens) {
    auto kv = parse_kv(tokens, {"k", "n"});
    int k = static_cast<int>(kv_long(kv, "k"));
    auto rho = rho_exponents(k);
    std::cout << "rho = ";
    for (std::size_t i = 0; i < rho.size(); ++i)
        std::cout << (i ? ", " : "") << to_string(rho[i]);
    std::cout << "; exponent = " << to_string(rho[1]) << "\n";
    if (kv.contains("n")) {
        long n = kv_long(kv, "n");
        StageParams p = StageParams::from_exponents(k, n);
        std::cout << "r =";
        for (long ri : p.r) std::cout << " " << ri;
        std::cout << "\n";
    }
    return 0;
}

int cmd_count(const std::vector<std::string>& tokens) {
    auto kv = parse_kv(tokens, {"l", "spec"});
    auto ell = parse_int_list(kv_need(kv, "l"));
    auto spec = parse_int_list(kv_need(kv, "spec"));
    std::cout << count_by_specification(ell, spec).str() << "\n";
    return 0;
}

int cmd_expect(const std::vector<std::string>& tokens) {
    auto kv = parse_kv(tokens, {"l", "r", "t"});
    auto ell = parse_int_list(kv_need(kv, "l"));
    long r = kv_long(kv, "r");
    int t = static_cast<int>(kv_long(kv, "t"));
    Rational e = expected_subtuples(ell, r, t);
    std::cout << to_string(e) << " (" << format_double(to_double(e)) << ")\n";
    return 0;
}

int cmd_build(const std::vector<std::string>& tokens, const CommonOpts& opts) {
    auto kv = parse_kv(tokens, {"construction", "k", "n", "m", "r", "l", "dpos", "dneg"}, opts.params_file);
    auto art = build_from_kv(kv, opts);
    Sink sink(opts.out);
    write_graph_file(sink.os, art.graph, art.f, art.domain, *art.weights, art.flows,
                     join_args("build", tokens), opts.seed);
    std::cerr << "graph: " << art.graph.vertex_count() << " vertices, " << art.graph.arc_count()
              << " arcs, " << art.domain.positives.size() << "+" << art.domain.negatives.size()
              << " domain inputs\n";
    return 0;
}

template <class T>
void print_complexity(const ComplexityReport<T>& rep) {
    std::cout << "N = " << format_double(to_double(rep.N)) << "\n";
    std::cout << "P = " << format_double(to_double(rep.P)) << "\n";
    std::cout << "C = " << format_double(rep.total()) << "\n";
}

int cmd_complexity(const std::vector<std::string>& tokens, const CommonOpts& opts) {
    if (!opts.in.empty()) {
        std::ifstream in(opts.in);
        if (!in) throw InputError("cannot open " + opts.in);
        GraphFile gf = read_graph_file(in);
        auto rep = graph_complexity(gf.graph, *gf.weights, gf.f, gf.domain, {}, opts.jobs);
        print_complexity(rep);
        return 0;
    }
    auto kv = parse_kv(tokens, {"construction", "k", "n", "m", "r", "l", "dpos", "dneg", "mode"}, opts.params_file);
    if (kv.contains("mode") && kv.at("mode") == "collapsed") {
        std::string construction = kv_need(kv, "construction");
        int k = static_cast<int>(kv_long(kv, "k"));
        long n = kv_long(kv, "n");
        CollapsedReport rep;
        if (construction == "baseline") {
            long r = kv_long_or(kv, "r", r_from_exponent(n, Rational(k, k + 1)));
            rep = collapsed_baseline(k, n, r);
        } else if (construction == "alg1") {
            StageParams params = kv.contains("r")
                                     ? StageParams::with_r(k, n, parse_long_list(kv.at("r")))
                                     : StageParams::from_exponents(k, n);
            std::vector<int> ell;
            bool with_sizes = kv.contains("l");
            if (with_sizes) ell = parse_int_list(kv.at("l"));
            rep = collapsed_alg1(params, with_sizes ? &ell : nullptr);
        } else {
            throw InputError("construction must be baseline or alg1");
        }
        Sink sink(opts.out);
        write_collapsed_csv(sink.os, rep, join_args("complexity", tokens), opts.seed);
        std::cerr << "estimate = " << format_double(rep.estimate) << "\n";
        return 0;
    }
    auto art = build_from_kv(kv, opts);
    auto rep = graph_complexity(art.graph, *art.weights, art.f, art.domain, {}, opts.jobs);
    print_complexity(rep);
    return 0;
}

// Flows for the certificate: the construction's own, or fresh optimal ones.
std::vector<Flow<double>> certificate_flows(const ConstructionArtifacts& art, bool optimal,
                                            int jobs) {
    if (!optimal) return art.flows;
    std::vector<Flow<double>> flows(art.domain.positives.size());
    std::vector<std::string> errs(flows.size());
    parallel_for_index(flows.size(), jobs, [&](std::size_t i) {
        try {
            auto inst = realize(art.graph, *art.weights, art.domain.positives[i]);
            auto acc = accepting_vertices(art.graph, art.f, art.domain.positives[i]);
            flows[i] = optimal_flow(art.graph, inst, acc).flow;
        } catch (const Error& e) {
            errs[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < errs.size(); ++i)
        if (!errs[i].empty()) throw InfeasibleError(errs[i]);
    return flows;
}

int cmd_certify(const std::vector<std::string>& tokens, const CommonOpts& opts) {
    auto kv = parse_kv(tokens, {"construction", "k", "n", "m", "r", "l", "dpos", "dneg", "flows"}, opts.params_file);
    auto art = build_from_kv(kv, opts);
    bool optimal = kv.contains("flows") && kv.at("flows") == "optimal";
    auto bundle = build_certificate(art.graph, *art.weights, art.f, art.domain.positives,
                                    certificate_flows(art, optimal, opts.jobs),
                                    art.domain.negatives);
    Sink sink(opts.out);
    write_certificate(sink.os, bundle, join_args("certify", tokens), opts.seed);
    std::cerr << "objective = " << format_double(bundle.objective()) << "\n";
    return 0;
}

int cmd_verify(const std::vector<std::string>& tokens, const CommonOpts& opts) {
    auto kv = parse_kv(tokens, {"construction", "k", "n", "m", "r", "l", "dpos", "dneg"}, opts.params_file);
    auto art = build_from_kv(kv, opts);
    if (opts.exact) {
        auto rep = verify_feasibility_exact(art.graph, *art.weight_sq, art.domain.positives,
                                            art.flows_exact, art.domain.negatives);
        std::cout << "max deviation = " << to_string(rep.max_deviation)
                  << (rep.exact_ones ? " (all pair sums exactly 1)" : "") << "\n";
        if (!rep.exact_ones)
            throw ValidationError("exact verification found pair sums different from 1");
        return 0;
    }
    auto bundle = build_certificate(art.graph, *art.weights, art.f, art.domain.positives,
                                    art.flows, art.domain.negatives);
    auto rep = verify_feasibility(bundle, opts.jobs);
    if (!opts.out.empty()) {
        Sink sink(opts.out);
        write_feasibility_csv(sink.os, rep, join_args("verify", tokens), opts.seed);
    }
    std::cout << "pairs = " << rep.rows.size()
              << ", max deviation = " << format_double(rep.max_deviation) << "\n";
    if (rep.max_deviation > opts.tolerance)
        throw ValidationError("feasibility deviation exceeds tolerance");
    return 0;
}

int cmd_scaling(const std::vector<std::string>& tokens, const CommonOpts& opts) {
    auto kv = parse_kv(tokens, {"construction", "k", "grid"}, opts.params_file);
    std::string construction = kv_need(kv, "construction");
    int k = static_cast<int>(kv_long(kv, "k"));
    std::vector<long> grid;
    if (kv.contains("grid")) {
        grid = parse_long_list(kv.at("grid"));
    } else {
        for (int e = 6; e <= 14; ++e) grid.push_back(1L << e);
    }
    auto fit = scaling_experiment(construction, k, grid);
    Sink sink(opts.out);
    write_scaling_csv(sink.os, fit, join_args("scaling", tokens), opts.seed);
    std::cerr << "slope = " << format_double(fit.slope) << "\n";
    return 0;
}

int cmd_mc_tail(const std::vector<std::string>& tokens, const CommonOpts& opts) {
    auto kv = parse_kv(tokens, {"kind", "m", "k", "n", "l", "spec"}, opts.params_file);
    std::string kind = kv_need(kv, "kind");
    SamplerConfig cfg{opts.seed, opts.trials, opts.jobs};
    TailReport rep;
    if (kind == "azuma") {
        int m = static_cast<int>(kv_long_or(kv, "m", 100));
        rep = martingale_tail_check(m, cfg);
    } else if (kind == "type-dev") {
        int k = static_cast<int>(kv_long(kv, "k"));
        int n = static_cast<int>(kv_long(kv, "n"));
        auto ell = parse_int_list(kv_need(kv, "l"));
        auto spec = parse_int_list(kv_need(kv, "spec"));
        auto inst = build_promised_instance(k, n, ell, opts.seed);
        rep = type_deviation_tail(inst, spec, cfg);
    } else {
        throw InputError("kind must be azuma or type-dev");
    }
    Sink sink(opts.out);
    write_tail_csv(sink.os, rep, join_args("mc-tail", tokens), opts.seed);
    if (!opts.out.empty()) {
        std::ofstream plot(opts.out + ".gnuplot");
        write_tail_plot_script(plot, opts.out);
    }
    return 0;
}

int cmd_flow_ratio(const std::vector<std::string>& tokens, const CommonOpts& opts) {
    auto kv = parse_kv(tokens, {"k", "n", "l", "r", "rounds"}, opts.params_file);
    int k = static_cast<int>(kv_long(kv, "k"));
    int n = static_cast<int>(kv_long(kv, "n"));
    auto ell = parse_int_list(kv_need(kv, "l"));
    StageParams params = kv.contains("r") ? StageParams::with_r(k, n, parse_long_list(kv.at("r")))
                                          : StageParams::from_exponents(k, n);
    auto inst = build_promised_instance(k, n, ell, opts.seed);
    SamplerConfig cfg{opts.seed, opts.trials, opts.jobs};
    int rounds = static_cast<int>(kv_long_or(kv, "rounds", 3));
    auto rep = key_flow_ratio_check(params, inst, cfg, rounds);
    std::cout << "sampled = " << rep.sampled << ", types = " << rep.distinct_types
              << ", rounds = " << rep.rounds << ", skipped spec groups = "
              << rep.insufficient_pairs << "\n";
    std::cout << "zero-distance exact: " << (rep.zero_distance_exact ? "yes" : "no") << "\n";
    std::cout << "slope = " << format_double(rep.slope)
              << ", fitted c = " << format_double(rep.fitted_c)
              << ", linear envelope: " << (rep.linear_ok ? "ok" : "violated") << "\n";
    std::cout << "typical band = " << format_double(rep.typical_band) << " (bound "
              << format_double(rep.typical_band_bound) << ", " << (rep.band_ok ? "ok" : "violated")
              << ")\n";
    if (!opts.out.empty()) {
        Sink sink(opts.out);
        write_provenance(sink.os, join_args("flow-ratio", tokens), opts.seed);
        sink.os << "d,max_log_ratio\n";
        for (auto& [d, y] : rep.max_log_ratio_by_d)
            sink.os << d << "," << format_double(y) << "\n";
    }
    return 0;
}

int cmd_symmetrize(const std::vector<std::string>& tokens, const CommonOpts& opts,
                   bool dump_orbits) {
    auto kv = parse_kv(tokens, {"sample"}, opts.params_file);
    if (opts.in.empty()) throw InputError("symmetrize needs --in <graph file>");
    std::ifstream in(opts.in);
    if (!in) throw InputError("cannot open " + opts.in);
    GraphFile gf = read_graph_file(in);

    GroupSpec group;
    if (kv.contains("sample")) {
        group.mode = GroupSpec::Mode::Sampled;
        group.sample_size = static_cast<std::size_t>(std::stol(kv.at("sample")));
        group.seed = opts.seed;
    }

    auto before_cost = [&](const WeightFn<double>& w, const std::vector<Flow<double>>& flows) {
        double worstN = 0, worstP = 0;
        for (auto& y : gf.domain.negatives)
            worstN = std::max(worstN, negative_complexity(realize(gf.graph, w, y)));
        for (std::size_t i = 0; i < flows.size(); ++i)
            worstP = std::max(worstP,
                              flow_cost(realize(gf.graph, w, gf.domain.positives[i]), flows[i]));
        return std::sqrt(worstN * worstP);
    };

    double c0 = before_cost(*gf.weights, gf.flows);
    auto res = symmetrize(gf.graph, *gf.weights, gf.f, gf.domain.positives, gf.flows, group);
    double c1 = before_cost(*res.weights, res.flows);
    std::cout << "C before = " << format_double(c0) << ", C after = " << format_double(c1) << "\n";

    if (dump_orbits) {
        auto sigmas = group_elements(gf.f.n, gf.f.m, group);
        std::vector<int> orbit(static_cast<std::size_t>(gf.graph.arc_count()), -1);
        int next = 0;
        for (const Arc& a : gf.graph.arcs()) {
            if (orbit[static_cast<std::size_t>(a.id)] >= 0) continue;
            int id = next++;
            for (auto& sigma : sigmas) orbit[static_cast<std::size_t>(map_arc(gf.graph, sigma, a))] = id;
        }
        std::cerr << "arc orbits (index -> orbit):";
        for (std::size_t i = 0; i < orbit.size(); ++i) std::cerr << " " << i << "->" << orbit[i];
        std::cerr << "\n";
    }

    if (!opts.out.empty()) {
        Sink sink(opts.out);
        write_graph_file(sink.os, gf.graph, gf.f, gf.domain, *res.weights, res.flows,
                         join_args("symmetrize", tokens), opts.seed);
    }
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"learning-graph complexity toolkit"};
    app.require_subcommand(1);

    struct Sub {
        CLI::App* cmd;
        std::vector<std::string> tokens;
        CommonOpts opts;
    };
    std::map<std::string, Sub> subs;
    for (const char* name :
         {"params", "count", "expect", "build", "complexity", "certify", "verify", "scaling",
          "mc-tail", "flow-ratio", "symmetrize"}) {
        auto& sub = subs[name];
        sub.cmd = app.add_subcommand(name);
        sub.cmd->add_option("args", sub.tokens, "key=value arguments");
        add_common(sub.cmd, sub.opts);
    }
    bool dump_orbits = false;
    subs["symmetrize"].cmd->add_flag("--dump-orbits", dump_orbits, "print arc orbit ids");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        for (auto& [name, sub] : subs) {
            if (!sub.cmd->parsed()) continue;
            std::cerr << "config: " << join_args(name, sub.tokens) << " seed=" << sub.opts.seed
                      << " trials=" << sub.opts.trials << " jobs=" << sub.opts.jobs
                      << " cap-vertices=" << sub.opts.cap_vertices
                      << " tolerance=" << sub.opts.tolerance
                      << " exact=" << (sub.opts.exact ? 1 : 0) << "\n";
            if (name == "params") return cmd_params(sub.tokens);
            if (name == "count") return cmd_count(sub.tokens);
            if (name == "expect") return cmd_expect(sub.tokens);
            if (name == "build") return cmd_build(sub.tokens, sub.opts);
            if (name == "complexity") return cmd_complexity(sub.tokens, sub.opts);
            if (name == "certify") return cmd_certify(sub.tokens, sub.opts);
            if (name == "verify") return cmd_verify(sub.tokens, sub.opts);
            if (name == "scaling") return cmd_scaling(sub.tokens, sub.opts);
            if (name == "mc-tail") return cmd_mc_tail(sub.tokens, sub.opts);
            if (name == "flow-ratio") return cmd_flow_ratio(sub.tokens, sub.opts);
            if (name == "symmetrize") return cmd_symmetrize(sub.tokens, sub.opts, dump_orbits);
        }
        throw InputError("no subcommand given");
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace lg
