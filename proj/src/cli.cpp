#include "spreadband/cli.hpp"

#include "spreadband/errors.hpp"
#include "spreadband/oracle.hpp"
#include "spreadband/sim.hpp"
#include "spreadband/solver.hpp"
#include "spreadband/valuefn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

namespace spreadband::cli {

namespace {

const std::set<std::string> kModelKeys = {"kind", "mu",     "L",      "sigma",
                                          "rho",  "lambda", "epsilon"};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "': cannot parse number '" + value + "'");
    }
}

std::string fmt6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string fmt6(const std::optional<double>& v) { return v ? fmt6(*v) : ""; }

/// Restrict the extras to a command's allowed keys.
void check_extras(const RunConfig& cfg, const std::set<std::string>& allowed,
                  const std::string& command) {
    for (const auto& [key, value] : cfg.extras) {
        if (!allowed.count(key)) {
            throw ValidationError("unknown config key '" + key + "' for command " + command);
        }
    }
}

class CsvSink {
public:
    CsvSink(const Options& opt, std::ostream& fallback) : fallback_(fallback) {
        if (opt.out_path) {
            file_.open(*opt.out_path);
            if (!file_) throw ValidationError("cannot open output file " + *opt.out_path);
        }
    }

    std::ostream& stream() { return file_.is_open() ? file_ : fallback_; }
    bool to_file() const { return file_.is_open(); }

private:
    std::ofstream file_;
    std::ostream& fallback_;
};

PathConfig path_config(const RunConfig& cfg, const Options& opt) {
    PathConfig pc;
    pc.horizon = opt.horizon.value_or(cfg.extra_number("horizon", 10.0 / cfg.params.rho));
    pc.dt = opt.dt.value_or(cfg.extra_number("dt", 1e-3 / cfg.params.mu));
    pc.n_paths = opt.paths.value_or(static_cast<int>(cfg.extra_number("paths", 10000)));
    pc.seed = opt.seed.value_or(
        static_cast<std::uint64_t>(cfg.extra_number("seed", 1)));
    return pc;
}

}  // namespace

RunConfig RunConfig::parse(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("config line " + std::to_string(lineno) +
                                  ": expected key=value");
        }
        const std::string key = trim(line.substr(0, eq));
        if (kv.count(key)) throw ValidationError("duplicate config key '" + key + "'");
        kv[key] = trim(line.substr(eq + 1));
    }

    RunConfig cfg;
    for (const auto& key : {"kind", "mu", "L", "sigma", "rho", "lambda", "epsilon"}) {
        if (!kv.count(key)) throw ValidationError(std::string("missing config key '") + key + "'");
    }
    cfg.params.kind = model_kind_from_string(kv["kind"]);
    cfg.params.mu = parse_number("mu", kv["mu"]);
    cfg.params.L = parse_number("L", kv["L"]);
    cfg.params.sigma = parse_number("sigma", kv["sigma"]);
    cfg.params.rho = parse_number("rho", kv["rho"]);
    cfg.params.lambda = parse_number("lambda", kv["lambda"]);
    cfg.params.epsilon = parse_number("epsilon", kv["epsilon"]);
    cfg.params.validate();
    for (const auto& [key, value] : kv) {
        if (!kModelKeys.count(key)) cfg.extras[key] = value;
    }
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file " + path);
    return parse(in);
}

double RunConfig::extra_number(const std::string& key, double fallback) const {
    const auto it = extras.find(key);
    return it == extras.end() ? fallback : parse_number(key, it->second);
}

std::string RunConfig::extra_string(const std::string& key, const std::string& fallback) const {
    const auto it = extras.find(key);
    return it == extras.end() ? fallback : it->second;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ValidationError*>(&e)) return 2;
    if (dynamic_cast<const DomainError*>(&e)) return 2;
    if (dynamic_cast<const VerifyError*>(&e)) return 4;
    return 3;
}

namespace {

void write_solve_csv(std::ostream& os, const ModelParams& p, const SolveReport& rep) {
    os << "kind,case,open_buy,close_buy,close_sell,open_sell,"
          "x01_bar,xm1_bar,x1_bar,x0m1_bar,"
          "coef_flat_plus,coef_flat_minus,coef_long_plus,coef_short_minus,"
          "max_residual,cond_value,cond_slope,sell_to_close_everywhere\n";
    const auto& c = rep.cutoffs;
    double max_res = 0.0;
    for (double r : rep.residuals) max_res = std::max(max_res, std::abs(r));
    const auto neg = [](const std::optional<double>& v) {
        return v ? std::optional<double>(-*v) : std::nullopt;
    };
    os << to_string(p.kind) << ',' << to_string(c.case_tag) << ',' << fmt6(c.open_buy) << ','
       << fmt6(c.close_buy) << ',' << fmt6(c.close_sell) << ',' << fmt6(c.open_sell) << ','
       << fmt6(neg(c.open_buy)) << ',' << fmt6(neg(c.close_buy)) << ',' << fmt6(c.close_sell)
       << ',' << fmt6(c.open_sell) << ',' << fmt6(rep.coeffs.flat_plus) << ','
       << fmt6(rep.coeffs.flat_minus) << ',' << fmt6(rep.coeffs.long_plus) << ','
       << fmt6(rep.coeffs.short_minus) << ',' << fmt6(max_res) << ','
       << fmt6(rep.cond_value_matrix) << ',' << fmt6(rep.cond_slope_matrix) << ','
       << (c.sell_to_close_everywhere ? 1 : 0) << '\n';
}

void print_solve_table(std::ostream& out, const ModelParams& p, const SolveReport& rep) {
    const auto& c = rep.cutoffs;
    out << "model " << to_string(p.kind) << ", structure " << to_string(c.case_tag) << "\n";
    out << "region edges (natural coordinates / bar-symbol convention):\n";
    const auto row = [&](const char* name, const std::optional<double>& edge, const char* sym,
                         bool negate) {
        out << "  " << name << "  ";
        if (edge) {
            out << fmt6(*edge) << "   (" << sym << " = " << fmt6(negate ? -*edge : *edge)
                << ")\n";
        } else {
            out << "region empty\n";
        }
    };
    row("open_buy  ", c.open_buy, "x01_bar ", true);
    row("close_buy ", c.close_buy, "xm1_bar ", true);
    row("close_sell",
        c.sell_to_close_everywhere ? std::optional<double>() : std::optional(c.close_sell),
        "x1_bar  ", false);
    if (c.sell_to_close_everywhere) {
        out << "  (selling to close is optimal on the whole domain)\n";
    }
    row("open_sell ", c.open_sell, "x0m1_bar", false);
    out << "coefficients: flat_plus=" << fmt6(rep.coeffs.flat_plus)
        << " flat_minus=" << fmt6(rep.coeffs.flat_minus)
        << " long_plus=" << fmt6(rep.coeffs.long_plus)
        << " short_minus=" << fmt6(rep.coeffs.short_minus) << "\n";
    double max_res = 0.0;
    for (double r : rep.residuals) max_res = std::max(max_res, std::abs(r));
    out << "max smooth-fit residual (relative): " << fmt6(max_res) << "\n";
    if (rep.cond_value_matrix > 0) {
        out << "condition estimates: value matrix " << fmt6(rep.cond_value_matrix)
            << ", slope matrix " << fmt6(rep.cond_slope_matrix) << "\n";
    }
}

}  // namespace

int run_solve(const RunConfig& cfg, const Options& opt, std::ostream& out) {
    check_extras(cfg, {}, "solve");
    const SolveReport rep = solve_cutoffs(cfg.params);
    print_solve_table(out, cfg.params, rep);
    if (opt.out_path) {
        CsvSink sink(opt, out);
        write_solve_csv(sink.stream(), cfg.params, rep);
        out << "csv written to " << *opt.out_path << "\n";
    }
    return 0;
}

int run_verify(const RunConfig& cfg, const Options& opt, std::ostream& out) {
    check_extras(cfg, {"grid_n"}, "verify");
    const int n = opt.grid_n.value_or(static_cast<int>(cfg.extra_number("grid_n", 1000)));
    const SolveReport rep = solve_cutoffs(cfg.params);
    const ValueTriple v = assemble_value_functions(cfg.params, rep);

    double max_value_jump = 0.0, max_deriv_jump = 0.0;
    for (const auto& r : smooth_fit_residuals(v)) {
        max_value_jump = std::max(max_value_jump, std::abs(r.value_jump) / r.scale);
        max_deriv_jump = std::max(max_deriv_jump, std::abs(r.derivative_jump) / r.scale);
    }
    const auto grid = qvi_grid(v, n);
    const auto q = qvi_residual(v, grid, 1e-7);

    out << "smooth-fit max value jump (relative):      " << fmt6(max_value_jump) << "\n";
    out << "smooth-fit max derivative jump (relative): " << fmt6(max_deriv_jump) << "\n";
    out << "variational-inequality max violation:      " << fmt6(q.max_violation) << " over "
        << grid.size() << " points\n";
    if (opt.out_path) {
        CsvSink sink(opt, out);
        sink.stream() << "max_value_jump,max_derivative_jump,qvi_max_violation,points\n"
                      << fmt6(max_value_jump) << ',' << fmt6(max_deriv_jump) << ','
                      << fmt6(q.max_violation) << ',' << grid.size() << '\n';
    }
    if (max_value_jump > 1e-9 || max_deriv_jump > 1e-9 || !q.pass) {
        throw VerifyError("verification tolerances exceeded");
    }
    out << "verification passed\n";
    return 0;
}

int run_oracle(const RunConfig& cfg, const Options& opt, std::ostream& out) {
    check_extras(cfg, {"grid_n"}, "oracle");
    const int n = opt.grid_n.value_or(static_cast<int>(cfg.extra_number("grid_n", 2001)));

    const SolveReport rep = solve_cutoffs(cfg.params);
    const ValueTriple v = assemble_value_functions(cfg.params, rep);
    const OracleGrid grid = default_oracle_grid(cfg.params, n);
    const OracleSolution sol = solve_qvi_fd(cfg.params, grid);
    const OracleEdges edges = extract_edges(sol);
    const double h = grid.spacing();

    CsvSink sink(opt, out);
    std::ostream& csv = sink.stream();
    csv << "quantity,closed_form,oracle,delta,tolerance,ok\n";
    bool all_ok = true;

    const auto edge_row = [&](const char* name, const std::optional<double>& solver_edge,
                              const std::optional<double>& oracle_edge) {
        bool ok;
        std::string closed = fmt6(solver_edge), fd = fmt6(oracle_edge), delta;
        if (solver_edge && oracle_edge) {
            const double d = std::abs(*solver_edge - *oracle_edge);
            ok = d <= 2 * h;
            delta = fmt6(d);
        } else {
            ok = !solver_edge && !oracle_edge;  // both must agree the region is empty
        }
        csv << name << ',' << closed << ',' << fd << ',' << delta << ',' << fmt6(2 * h) << ','
            << (ok ? 1 : 0) << '\n';
        all_ok = all_ok && ok;
    };
    const auto& c = rep.cutoffs;
    edge_row("open_buy", c.open_buy, edges.open_buy);
    edge_row("close_buy", c.close_buy, edges.close_buy);
    edge_row("close_sell",
             c.sell_to_close_everywhere ? std::optional<double>(sol.x.front())
                                        : std::optional(c.close_sell),
             edges.close_sell);
    edge_row("open_sell", std::optional(c.open_sell), edges.open_sell);

    // sup-norm agreement of the value functions over the interior nodes
    double sup = 0.0;
    const int skip = 5;  // end rows carry the truncation of the scheme
    for (int i = skip; i < grid.n - skip; ++i) {
        const double x = sol.x[i];
        const double dv0 = std::abs(sol.v0[i] - v.value(0, x)) / (1 + std::abs(v.value(0, x)));
        const double dv1 = std::abs(sol.v1[i] - v.value(1, x)) / (1 + std::abs(v.value(1, x)));
        const double dvm = std::abs(sol.vm1[i] - v.value(-1, x)) / (1 + std::abs(v.value(-1, x)));
        sup = std::max({sup, dv0, dv1, dvm});
    }
    const bool value_ok = sup < 5e-3;
    csv << "value_supnorm_relative,," << fmt6(sup) << ",," << fmt6(5e-3) << ','
        << (value_ok ? 1 : 0) << '\n';
    all_ok = all_ok && value_ok;

    if (sink.to_file()) {
        out << "oracle comparison written to " << *opt.out_path << " (sweeps=" << sol.sweeps
            << ")\n";
    }
    if (!all_ok) throw VerifyError("oracle disagreement beyond tolerance");
    out << "oracle agreement within tolerance (sweeps=" << sol.sweeps << ")\n";
    return 0;
}

int run_simulate(const RunConfig& cfg, const Options& opt, std::ostream& out) {
    check_extras(cfg, {"x0", "start_regime", "paths", "horizon", "dt", "seed", "trace_paths",
                       "trace_out"},
                 "simulate");
    const double x0 = cfg.extra_number("x0", cfg.params.L);
    const int regime = static_cast<int>(cfg.extra_number("start_regime", 0));
    const PathConfig pc = path_config(cfg, opt);

    const SolveReport rep = solve_cutoffs(cfg.params);
    const ValueTriple v = assemble_value_functions(cfg.params, rep);
    const StrategyOutcome res = estimate_gain(cfg.params, x0, regime, rep.cutoffs, pc);

    CsvSink sink(opt, out);
    std::ostream& csv = sink.stream();
    csv << "x0,start_regime,paths,horizon,dt,seed,mean_gain,std_error,n_switches_mean,"
           "occ_short,occ_flat,occ_long,discount_tail,value_fn\n";
    csv << fmt6(x0) << ',' << regime << ',' << pc.n_paths << ',' << fmt6(pc.horizon) << ','
        << fmt6(pc.dt) << ',' << pc.seed << ',' << fmt6(res.mean_gain) << ','
        << fmt6(res.std_error) << ',' << fmt6(res.n_switches_mean) << ','
        << fmt6(res.regime_occupancy[0]) << ',' << fmt6(res.regime_occupancy[1]) << ','
        << fmt6(res.regime_occupancy[2]) << ',' << fmt6(res.discount_tail) << ','
        << fmt6(v.value(regime, x0)) << '\n';

    const int trace_paths = static_cast<int>(cfg.extra_number("trace_paths", 0));
    if (trace_paths > 0) {
        const std::string trace_path = cfg.extra_string("trace_out", "");
        if (trace_path.empty()) {
            throw ValidationError("trace_paths requires trace_out=<path>");
        }
        std::ofstream trace(trace_path);
        if (!trace) throw ValidationError("cannot open trace file " + trace_path);
        trace << "path,t,x\n";
        std::vector<double> buf;
        for (int ipath = 0; ipath < trace_paths; ++ipath) {
            simulate_path_into(buf, cfg.params, x0, pc, ipath);
            for (std::size_t k = 0; k < buf.size(); ++k) {
                trace << ipath << ',' << fmt6(k * pc.dt) << ',' << fmt6(buf[k]) << '\n';
            }
        }
        out << "trace written to " << trace_path << "\n";
    }
    if (sink.to_file()) out << "simulation csv written to " << *opt.out_path << "\n";
    return 0;
}

int run_sweep(const RunConfig& cfg, const Options& opt, std::ostream& out) {
    check_extras(cfg, {"param", "from", "to", "steps"}, "sweep");
    const std::string param = cfg.extra_string("param", "");
    const std::set<std::string> sweepable = {"mu", "sigma", "L", "epsilon", "lambda"};
    if (!sweepable.count(param)) {
        throw ValidationError("sweep requires param in {mu, sigma, L, epsilon, lambda}");
    }
    if (!cfg.extras.count("from") || !cfg.extras.count("to")) {
        throw ValidationError("sweep requires 'from' and 'to'");
    }
    const double from = cfg.extra_number("from", 0);
    const double to = cfg.extra_number("to", 0);
    const int steps = static_cast<int>(cfg.extra_number("steps", 11));
    if (steps < 2) throw ValidationError("sweep requires steps >= 2");

    CsvSink sink(opt, out);
    std::ostream& csv = sink.stream();
    csv << "param,value,ok,case,open_buy,close_buy,close_sell,open_sell\n";
    for (int i = 0; i < steps; ++i) {
        const double value = from + (to - from) * i / (steps - 1.0);
        ModelParams p = cfg.params;
        if (param == "mu") p.mu = value;
        if (param == "sigma") p.sigma = value;
        if (param == "L") p.L = value;
        if (param == "epsilon") p.epsilon = value;
        if (param == "lambda") p.lambda = value;
        csv << param << ',' << fmt6(value) << ',';
        try {
            const SolveReport rep = solve_cutoffs(p);
            const auto& c = rep.cutoffs;
            csv << "1," << to_string(c.case_tag) << ',' << fmt6(c.open_buy) << ','
                << fmt6(c.close_buy) << ',' << fmt6(c.close_sell) << ',' << fmt6(c.open_sell)
                << '\n';
        } catch (const Error&) {
            csv << "0,,,,,\n";  // failed point; the sweep continues
        }
    }
    if (sink.to_file()) out << "sweep csv written to " << *opt.out_path << "\n";
    return 0;
}

}  // namespace spreadband::cli
