#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crossnorm/crossnorm.hpp"

#ifndef CROSSNORM_VERSION
#define CROSSNORM_VERSION "dev"
#endif

namespace crossnorm::cli {

using json = nlohmann::ordered_json;

enum exit_code : int { ok = 0, check_failed = 1, usage = 2 };

class usage_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Parsing

inline double parse_real(const std::string& text) {
    std::string s = text;
    s.erase(0, s.find_first_not_of(" \t"));
    s.erase(s.find_last_not_of(" \t") + 1);
    if (s == "inf" || s == "+inf" || s == "Inf" || s == "infinity") return infinity;
    if (s.empty()) throw usage_error("empty number");
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || std::isnan(v)) throw usage_error("malformed number '" + text + "'");
    return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

/// "a,b,c"
inline std::vector<double> parse_vector(const std::string& s) {
    if (s.empty()) throw usage_error("empty vector");
    std::vector<double> out;
    for (const auto& part : split(s, ',')) out.push_back(parse_real(part));
    return out;
}

/// "a,b;c,d", rows separated by ';'.
inline Eigen::MatrixXd parse_matrix(const std::string& s) {
    std::vector<std::vector<double>> rows;
    for (const auto& row : split(s, ';')) rows.push_back(parse_vector(row));
    if (rows.empty()) throw usage_error("empty matrix");
    const std::size_t cols = rows.front().size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != cols) throw usage_error("matrix rows have different lengths");
        for (std::size_t j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
}

/// "2:100,200,500" -> 2..100, 200, 500.
inline std::vector<std::size_t> parse_index_list(const std::string& s) {
    std::vector<std::size_t> out;
    auto as_index = [](const std::string& t) {
        const double v = parse_real(t);
        if (!(v >= 0.0) || std::floor(v) != v || v > 1e15) throw usage_error("not a nonnegative integer: '" + t + "'");
        return static_cast<std::size_t>(v);
    };
    for (const auto& part : split(s, ',')) {
        const auto colon = part.find(':');
        if (colon == std::string::npos) {
            out.push_back(as_index(part));
        } else {
            const std::size_t lo = as_index(part.substr(0, colon));
            const std::size_t hi = as_index(part.substr(colon + 1));
            if (hi < lo) throw usage_error("empty range '" + part + "'");
            for (std::size_t k = lo; k <= hi; ++k) out.push_back(k);
        }
    }
    return out;
}

/// JSON number, or "inf"/"-inf"/"nan" for non-finite values.
inline json num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

inline json num_vector(std::span<const double> v) {
    json a = json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

inline std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Output

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<json>> rows;
};

struct Outcome {
    json inputs = json::object();
    json results = json::object();
    std::optional<Table> table;
    /// (x, y) pairs for the plot data file.
    std::vector<std::pair<double, double>> plot;
    int code = exit_code::ok;
};

inline std::string csv_cell(const json& v) {
    if (v.is_number_float()) return format_real(v.get<double>());
    if (v.is_number()) return v.dump();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
        return q + "\"";
    }
    if (v.is_null()) return "";
    return csv_cell(json(v.dump()));
}

inline void write_csv(std::ostream& os, const Outcome& o) {
    if (o.table) {
        for (std::size_t i = 0; i < o.table->columns.size(); ++i) os << (i ? "," : "") << o.table->columns[i];
        os << '\n';
        for (const auto& row : o.table->rows) {
            for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_cell(row[i]);
            os << '\n';
        }
        return;
    }
    os << "key,value\n";
    for (const auto& [k, v] : o.results.items()) os << k << ',' << csv_cell(v) << '\n';
}

// ---------------------------------------------------------------------------
// Commands

struct Globals {
    std::string format = "json";
    std::string output;
    std::string plot_data;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    double rel_tol = 1e-12;
    double abs_tol = 1e-13;
    double tail_epsilon = 1e-14;

    QuadratureConfig quadrature() const {
        QuadratureConfig c{rel_tol, abs_tol, tail_epsilon};
        c.validate();
        return c;
    }
    McParams mc(std::size_t samples) const {
        McParams p{samples, seed, threads};
        p.validate();
        return p;
    }
};

inline json expectation_json(const ExpectationResult& r) {
    return json{{"value", num(r.value)},
                {"error_bound", num(r.error_bound)},
                {"method", to_string(r.method)},
                {"detail", r.detail}};
}

inline json critical_point_json(const CriticalPoint& c) {
    return json{{"location", c.location}, {"type", to_string(c.type)}, {"x", num(c.x)},
                {"a", num(c.a)},          {"b", num(c.b)},              {"value", num(c.value)},
                {"residual", num(c.residual)}};
}

inline json threshold_json(const Threshold& t) {
    return json{{"value", num(t.value)}, {"bracket", json::array({num(t.lo), num(t.hi)})}};
}

inline json optimization_json(const OptimizationResult& r) {
    json runs = json::array();
    for (const auto& run : r.runs) {
        runs.push_back(json{{"origin", run.origin},
                            {"point", num_vector(run.point)},
                            {"value", num(run.value)},
                            {"residual", num(run.residual)},
                            {"iterations", run.iterations},
                            {"converged", run.converged}});
    }
    return json{{"point", num_vector(r.point.entries())},
                {"value", expectation_json(r.value)},
                {"residual", num(r.residual)},
                {"iterations", r.iterations},
                {"converged", r.converged},
                {"constant_landscape", r.constant_landscape},
                {"best_run", r.best_run},
                {"runs", runs}};
}

/// Runs the command line `args` (without the program name). Structured output
/// goes to `out` (or --output), diagnostics to `err`.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Expected norms of scaled Gaussian vectors, l_q-sphere landscapes and cross-polytope bounds",
                 "crossnorm"};
    app.set_version_flag("--version", std::string(CROSSNORM_VERSION));
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    if (const char* env = std::getenv("CROSSNORM_SEED")) {
        try {
            std::size_t used = 0;
            g.seed = std::stoull(env, &used, 0);
            if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            err << "crossnorm: CROSSNORM_SEED is not an unsigned integer: '" << env << "'\n";
            return exit_code::usage;
        }
    }
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--output", g.output, "Write the document to this file instead of stdout");
    app.add_option("--plot-data", g.plot_data, "Write x,y plot data here (landscape, c-table)");
    app.add_option("--seed", g.seed, "Random seed (default: $CROSSNORM_SEED or 0)");
    app.add_option("--threads", g.threads, "Monte Carlo substreams; never changes results")->check(CLI::PositiveNumber);
    app.add_option("--rel-tol", g.rel_tol, "Quadrature relative tolerance");
    app.add_option("--abs-tol", g.abs_tol, "Quadrature absolute tolerance");
    app.add_option("--tail-eps", g.tail_epsilon, "Quadrature truncation tail bound (<= abs-tol/10)");

    std::map<CLI::App*, std::function<Outcome()>> handlers;
    auto command = [&](const char* name, const char* help) {
        CLI::App* sub = app.add_subcommand(name, help);
        return sub;
    };

    // expectation ---------------------------------------------------------
    std::string u_text;
    std::string p_text = "inf";
    std::string q_text = "2";
    std::string method_text = "auto";
    std::size_t samples = 200000;
    {
        auto* s = command("expectation", "E||u . xi||_p for a weight vector u");
        s->add_option("--u", u_text, "Weights, comma separated")->required();
        s->add_option("--p", p_text, "Norm exponent p > 1 or inf");
        s->add_option("--q", q_text, "Declared l_q normalization of u (checked if given)");
        s->add_option("--method", method_text, "auto | quadrature | mc")->check(CLI::IsMember({"auto", "quadrature", "mc"}));
        s->add_option("--samples", samples, "Monte Carlo samples")->check(CLI::PositiveNumber);
        handlers[s] = [&, s] {
            Outcome o;
            const auto u = parse_vector(u_text);
            const double p = parse_real(p_text);
            const bool q_given = s->count("--q") > 0;
            const double q = parse_real(q_text);
            o.inputs = {{"u", num_vector(u)}, {"p", num(p)}, {"method", method_text}};
            if (q_given) o.inputs["q"] = num(q);
            const WeightVector w(u, q_given ? std::optional<double>(q) : std::nullopt);
            PnormOptions opts;
            opts.method = method_text == "auto"         ? EvalMethod::automatic
                          : method_text == "quadrature" ? EvalMethod::quadrature
                                                        : EvalMethod::monte_carlo;
            opts.quadrature = g.quadrature();
            opts.mc = g.mc(samples);
            if (opts.method == EvalMethod::monte_carlo) o.inputs["samples"] = samples;
            o.results = expectation_json(expected_pnorm(w, {p, q, u.size()}, opts));
            return o;
        };
    }

    // ek-table / ekq-table ------------------------------------------------
    std::size_t n_max = 10;
    auto table_outcome = [](const EkTable& t, double q) {
        Outcome o;
        o.table = Table{{"k", "value", "asymptotic_ratio"}, {}};
        json rows = json::array();
        for (const auto& r : t.rows) {
            o.table->rows.push_back({r.k, num(r.value), num(r.asymptotic_ratio)});
            rows.push_back(json{{"k", r.k}, {"value", num(r.value)}, {"asymptotic_ratio", num(r.asymptotic_ratio)}});
        }
        const bool head_ok = q != 2.0 || t.rows.size() < 2 || t.head_gap <= 1e-9;
        const bool monotone = t.strictly_decreasing && head_ok;
        o.results = {{"q", num(q)},
                     {"monotone", monotone},
                     {"strictly_decreasing", t.strictly_decreasing},
                     {"head_gap", num(t.head_gap)},
                     {"min_step", num(t.min_step)},
                     {"rows", rows}};
        if (!monotone) o.code = exit_code::check_failed;
        return o;
    };
    {
        auto* s = command("ek-table", "E_k = k^(-1/2) E||xi_k||_inf for k = 1..n");
        s->add_option("--n", n_max, "Largest k")->required()->check(CLI::PositiveNumber);
        handlers[s] = [&] {
            Outcome o = table_outcome(ek_table(n_max, g.quadrature()), 2.0);
            o.inputs = {{"n", n_max}};
            return o;
        };
    }
    std::string ekq_q = "1.5";
    {
        auto* s = command("ekq-table", "E_{k,q} = k^(-1/q) E||xi_k||_inf for k = 1..n, 0 < q <= 2");
        s->add_option("--n", n_max, "Largest k")->required()->check(CLI::PositiveNumber);
        s->add_option("--q", ekq_q, "Exponent q in (0, 2]")->required();
        handlers[s] = [&] {
            const double q = parse_real(ekq_q);
            Outcome o = table_outcome(ekq_table(n_max, q, g.quadrature()), q);
            o.inputs = {{"n", n_max}, {"q", num(q)}};
            return o;
        };
    }

    // median ----------------------------------------------------------------
    std::string n_list_text;
    {
        auto* s = command("median", "Median of ||xi||_inf in dimension n and its ratio to sqrt(2 log n)");
        s->add_option("--n", n_list_text, "Dimensions, e.g. 100,10000 or 2:50")->required();
        handlers[s] = [&] {
            Outcome o;
            const auto ns = parse_index_list(n_list_text);
            o.inputs = {{"n", ns}};
            o.table = Table{{"n", "median", "ratio_to_sqrt_2_log_n"}, {}};
            json rows = json::array();
            for (std::size_t n : ns) {
                const double mu = median_supnorm(n);
                const double ratio = n >= 2 ? mu / std::sqrt(2.0 * std::log(static_cast<double>(n))) : infinity;
                o.table->rows.push_back({n, num(mu), num(ratio)});
                rows.push_back(json{{"n", n}, {"median", num(mu)}, {"ratio_to_sqrt_2_log_n", num(ratio)}});
            }
            o.results = {{"rows", rows}};
            return o;
        };
    }

    // critical-residual -----------------------------------------------------
    std::size_t idx_i = 0;
    std::size_t idx_j = 1;
    {
        auto* s = command("critical-residual", "(1/u_i) dE/du_i - (1/u_j) dE/du_j (positive when u_i > u_j)");
        s->add_option("--u", u_text, "Weights")->required();
        s->add_option("--i", idx_i, "First index (0-based)");
        s->add_option("--j", idx_j, "Second index (0-based)");
        handlers[s] = [&] {
            Outcome o;
            const auto u = parse_vector(u_text);
            o.inputs = {{"u", num_vector(u)}, {"i", idx_i}, {"j", idx_j}};
            const WeightVector w(u);
            const auto cfg = g.quadrature();
            o.results = {{"residual", num(critical_point_residual(w, idx_i, idx_j, cfg))},
                         {"partial_i", num(partial_derivative(w, idx_i, cfg))},
                         {"partial_j", num(partial_derivative(w, idx_j, cfg))}};
            return o;
        };
    }

    // r-rho -----------------------------------------------------------------
    std::size_t rr_n = 3;
    std::string rho_text;
    std::size_t rho_points = 11;
    std::string t_text;
    {
        auto* s = command("r-rho", "R(rho) along the bridge from E_n to E_{n+1}, with R' integrand signs");
        s->add_option("--n", rr_n, "n")->required()->check(CLI::PositiveNumber);
        s->add_option("--rho", rho_text, "rho values (default: evenly spaced on [0, 1/sqrt(n+1)])");
        s->add_option("--points", rho_points, "Grid size when --rho is absent")->check(CLI::Range(2, 100000));
        s->add_option("--t", t_text, "t values at which the R' integrand sign is reported");
        handlers[s] = [&] {
            Outcome o;
            const double rho_max = 1.0 / std::sqrt(static_cast<double>(rr_n + 1));
            std::vector<double> rhos;
            if (!rho_text.empty()) {
                rhos = parse_vector(rho_text);
            } else {
                for (std::size_t i = 0; i < rho_points; ++i) {
                    rhos.push_back(rho_max * static_cast<double>(i) / static_cast<double>(rho_points - 1));
                }
            }
            const auto ts = t_text.empty() ? std::vector<double>{} : parse_vector(t_text);
            o.inputs = {{"n", rr_n}, {"rho", num_vector(rhos)}, {"t", num_vector(ts)}};
            o.table = Table{{"rho", "R", "error_bound"}, {}};
            json rows = json::array();
            bool decreasing = true;
            double prev = infinity;
            for (double rho : rhos) {
                const auto r = r_rho(rr_n, rho, g.quadrature());
                o.table->rows.push_back({num(rho), num(r.value), num(r.error_bound)});
                json row{{"rho", num(rho)}, {"R", expectation_json(r)}};
                if (!ts.empty() && rho > 0.0) {
                    json signs = json::array();
                    for (double t : ts) {
                        const auto sg = rder_integrand_sign(rr_n, rho, t);
                        signs.push_back(json{{"t", num(t)},
                                             {"bracket", num(sg.bracket)},
                                             {"integrand", num(sg.integrand)},
                                             {"sign", sg.sign}});
                    }
                    row["rder"] = signs;
                }
                rows.push_back(row);
                if (rr_n >= 2 && !(r.value < prev)) decreasing = false;
                prev = r.value;
            }
            o.results = {{"rho_max", num(rho_max)}, {"strictly_decreasing", decreasing}, {"rows", rows}};
            return o;
        };
    }

    // optimize --------------------------------------------------------------
    std::size_t opt_n = 3;
    std::string mode_text = "min";
    OptimizerOptions opt;
    bool no_candidates = false;
    std::size_t opt_samples = 20000;
    {
        auto* s = command("optimize", "Extremize E||u . xi||_p over the l_q sphere");
        s->add_option("--p", p_text, "p > 1 or inf");
        s->add_option("--q", q_text, "q > 0 or inf");
        s->add_option("--n", opt_n, "Dimension")->required()->check(CLI::PositiveNumber);
        s->add_option("--mode", mode_text, "min | max")->check(CLI::IsMember({"min", "max"}));
        s->add_option("--starts", opt.starts, "Random starts");
        s->add_flag("--no-candidates", no_candidates, "Do not start from the candidate family u_q^k");
        s->add_option("--max-iter", opt.max_iterations, "Iteration cap per start");
        s->add_option("--tol", opt.tolerance, "Projected gradient tolerance");
        s->add_option("--samples", opt_samples, "Monte Carlo samples for the objective when needed");
        handlers[s] = [&] {
            Outcome o;
            const PQSpec spec{parse_real(p_text), parse_real(q_text), opt_n};
            opt.seed = g.seed;
            opt.include_candidates = !no_candidates;
            opt.eval.mc = g.mc(opt_samples);
            o.inputs = {{"p", num(spec.p)},       {"q", num(spec.q)},
                        {"n", spec.n},            {"mode", mode_text},
                        {"starts", opt.starts},   {"include_candidates", opt.include_candidates},
                        {"max_iter", opt.max_iterations}, {"tol", num(opt.tolerance)}};
            const Mode mode = mode_text == "min" ? Mode::minimize : Mode::maximize;
            try {
                o.results = optimization_json(optimize_on_lq_sphere(spec, mode, opt));
            } catch (const crossnorm::convergence_error& e) {
                o.results = {{"converged", false},
                             {"error", e.what()},
                             {"best_point", num_vector(e.best_point())},
                             {"best_value", num(e.best_value())}};
                o.code = exit_code::check_failed;
            }
            return o;
        };
    }

    // landscape -------------------------------------------------------------
    std::size_t grid = 256;
    std::size_t curve_points = 201;
    {
        auto* s = command("landscape", "Critical points of E||u . xi||_p on the n = 2 l_q arc");
        s->add_option("--p", p_text, "p > 1 or inf");
        s->add_option("--q", q_text, "q > 0")->required();
        s->add_option("--grid", grid, "Scan grid size (>= 64)");
        s->add_option("--curve-points", curve_points, "Points in the plot data curve")->check(CLI::Range(2, 1000000));
        handlers[s] = [&] {
            Outcome o;
            const double p = parse_real(p_text);
            const double q = parse_real(q_text);
            o.inputs = {{"p", num(p)}, {"q", num(q)}, {"grid", grid}};
            const auto cfg = g.quadrature();
            const auto row = scan_landscape_n2(p, q, grid, cfg);
            json pts = json::array();
            o.table = Table{{"location", "type", "x", "a", "b", "value", "residual"}, {}};
            for (const auto& c : row.points) {
                pts.push_back(critical_point_json(c));
                o.table->rows.push_back({c.location, to_string(c.type), num(c.x), num(c.a), num(c.b), num(c.value),
                                         num(c.residual)});
            }
            o.results = {{"constant", row.constant},
                         {"reach", num(row.reach)},
                         {"count", row.points.size()},
                         {"points", pts}};
            // Curve: angle of (a, b) against the expected norm.
            for (std::size_t i = 0; i < curve_points; ++i) {
                const double theta = 0.5 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(curve_points - 1);
                std::vector<double> v{std::cos(theta), std::sin(theta)};
                if (i + 1 == curve_points) v[0] = 0.0;
                const double norm = lq_norm(v, q);
                const WeightVector w({v[0] / norm, v[1] / norm});
                PnormOptions po;
                po.quadrature = cfg;
                o.plot.emplace_back(theta, expected_pnorm(w, {p, q, 2}, po).value);
            }
            return o;
        };
    }

    // phase -----------------------------------------------------------------
    bool n2p2 = false;
    std::string q_grid_text;
    {
        auto* s = command("phase", "Phase thresholds (n = 2) and the per-q classification");
        s->add_flag("--n2p2", n2p2, "Detect q_L, q_M, q_U for n = 2, p = 2");
        s->add_option("--p", p_text, "p for a q-grid report");
        s->add_option("--q-grid", q_grid_text, "q values for the per-q classification");
        s->add_option("--grid", grid, "Scan grid size (>= 64)");
        handlers[s] = [&] {
            Outcome o;
            const auto cfg = g.quadrature();
            if (n2p2 && q_grid_text.empty()) {
                o.inputs = {{"n2p2", true}};
                const auto t = phase_thresholds_n2_p2(cfg);
                o.results = {{"q_L", threshold_json(t.q_L)}, {"q_M", threshold_json(t.q_M)}, {"q_U", threshold_json(t.q_U)}};
                o.table = Table{{"threshold", "value", "lo", "hi"},
                                {{"q_L", num(t.q_L.value), num(t.q_L.lo), num(t.q_L.hi)},
                                 {"q_M", num(t.q_M.value), num(t.q_M.lo), num(t.q_M.hi)},
                                 {"q_U", num(t.q_U.value), num(t.q_U.lo), num(t.q_U.hi)}}};
                return o;
            }
            const double p = n2p2 ? 2.0 : parse_real(p_text);
            const auto qs = q_grid_text.empty() ? std::vector<double>{1.2, 1.5, 1.8, 2.0, 2.5} : parse_vector(q_grid_text);
            o.inputs = {{"p", num(p)}, {"q_grid", num_vector(qs)}, {"grid", grid}};
            const auto rep = phase_report(p, qs, grid, cfg);
            json rows = json::array();
            o.table = Table{{"q", "count", "minima", "maxima", "constant"}, {}};
            for (std::size_t i = 0; i < rep.rows.size(); ++i) {
                const auto& row = rep.rows[i];
                json pts = json::array();
                for (const auto& c : row.points) pts.push_back(critical_point_json(c));
                rows.push_back(json{{"q", num(rep.q_values[i])}, {"constant", row.constant}, {"points", pts}});
                o.table->rows.push_back({num(rep.q_values[i]), row.points.size(), row.count(CriticalType::minimum),
                                         row.count(CriticalType::maximum), row.constant});
            }
            o.results = {{"rows", rows}};
            if (rep.thresholds) {
                o.results["thresholds"] = {{"q_L", threshold_json(rep.thresholds->q_L)},
                                           {"q_M", threshold_json(rep.thresholds->q_M)},
                                           {"q_U", threshold_json(rep.thresholds->q_U)}};
            } else if (rep.q_L) {
                o.results["q_L_detected"] = threshold_json(*rep.q_L);
            }
            if (!rep.note.empty()) o.results["note"] = rep.note;
            return o;
        };
    }

    // explore-qgt2 ----------------------------------------------------------
    std::size_t ex_n = 3;
    std::size_t ex_starts = 4;
    {
        auto* s = command("explore-qgt2", "Exploratory p = inf, q > 2 scan (reported, never asserted)");
        s->add_option("--n", ex_n, "Dimension")->check(CLI::PositiveNumber);
        s->add_option("--q", q_grid_text, "q values > 2 (inf allowed)")->required();
        s->add_option("--starts", ex_starts, "Random starts per optimization");
        handlers[s] = [&] {
            Outcome o;
            const auto qs = parse_vector(q_grid_text);
            o.inputs = {{"n", ex_n}, {"q", num_vector(qs)}, {"starts", ex_starts}};
            const auto rows = exploratory_scan_pinf_qgt2(ex_n, qs, ex_starts, g.seed, g.quadrature());
            json out_rows = json::array();
            o.table = Table{{"q", "candidate_argmin_k", "candidate_argmax_k", "min_equal_nonzero", "max_equal_nonzero"}, {}};
            for (const auto& r : rows) {
                json row{{"q", num(r.q)},
                         {"candidate_values", num_vector(r.candidate_values)},
                         {"candidate_argmin_k", r.candidate_argmin},
                         {"candidate_argmax_k", r.candidate_argmax}};
                if (r.minimum) row["minimum"] = {{"point", num_vector(r.minimum->point.entries())}, {"value", num(r.minimum->value.value)}};
                if (r.maximum) row["maximum"] = {{"point", num_vector(r.maximum->point.entries())}, {"value", num(r.maximum->value.value)}};
                row["min_equal_nonzero"] = r.min_equal_nonzero ? json(*r.min_equal_nonzero) : json(nullptr);
                row["max_equal_nonzero"] = r.max_equal_nonzero ? json(*r.max_equal_nonzero) : json(nullptr);
                if (!r.note.empty()) row["note"] = r.note;
                out_rows.push_back(row);
                o.table->rows.push_back({num(r.q), r.candidate_argmin, r.candidate_argmax, row["min_equal_nonzero"],
                                         row["max_equal_nonzero"]});
            }
            o.results = {{"rows", out_rows}};
            return o;
        };
    }

    // mc-norm / sidak / theorem2 -------------------------------------------
    std::string cov_text;
    {
        auto* s = command("mc-norm", "Monte Carlo E||X||_p for X ~ N(0, cov), trace(cov) = 1");
        s->add_option("--cov", cov_text, "Covariance, rows separated by ';'")->required();
        s->add_option("--p", p_text, "p > 0 or inf");
        s->add_option("--samples", samples, "Samples")->check(CLI::PositiveNumber);
        handlers[s] = [&] {
            Outcome o;
            const CovarianceSpec cov(parse_matrix(cov_text));
            const double p = parse_real(p_text);
            o.inputs = {{"cov", cov_text}, {"p", num(p)}, {"samples", samples}};
            const auto e = mc_expected_norm(cov, p, g.mc(samples));
            o.results = {{"mean", num(e.mean)}, {"std_error", num(e.std_error)}, {"samples", e.samples}};
            return o;
        };
    }
    {
        auto* s = command("sidak", "Empirical P(||X||_inf <= t) against prod phi(t / u_i)");
        s->add_option("--cov", cov_text, "Covariance, rows separated by ';'")->required();
        s->add_option("--t", t_text, "t grid (default: 20 points on [0.05, 2.5])");
        s->add_option("--samples", samples, "Samples")->check(CLI::PositiveNumber);
        handlers[s] = [&] {
            Outcome o;
            const CovarianceSpec cov(parse_matrix(cov_text));
            std::vector<double> ts;
            if (t_text.empty()) {
                for (int i = 0; i < 20; ++i) ts.push_back(0.05 + 2.45 * i / 19.0);
            } else {
                ts = parse_vector(t_text);
            }
            o.inputs = {{"cov", cov_text}, {"t", num_vector(ts)}, {"samples", samples}};
            const auto rep = sidak_check(cov, ts, g.mc(samples));
            o.table = Table{{"t", "empirical", "product", "margin", "std_error", "violation"}, {}};
            json rows = json::array();
            for (const auto& r : rep.rows) {
                o.table->rows.push_back({num(r.t), num(r.empirical), num(r.product), num(r.margin), num(r.std_error), r.violation});
                rows.push_back(json{{"t", num(r.t)}, {"empirical", num(r.empirical)}, {"product", num(r.product)},
                                    {"margin", num(r.margin)}, {"std_error", num(r.std_error)}, {"violation", r.violation}});
            }
            o.results = {{"violations", rep.violations}, {"samples", rep.samples}, {"rows", rows}};
            if (rep.violations > 0) o.code = exit_code::check_failed;
            return o;
        };
    }
    {
        auto* s = command("theorem2", "Check sqrt(2/(n pi)) <= E||X||_inf <= sqrt(2/pi) up to 3 standard errors");
        s->add_option("--cov", cov_text, "Covariance, rows separated by ';'")->required();
        s->add_option("--samples", samples, "Samples")->check(CLI::PositiveNumber);
        handlers[s] = [&] {
            Outcome o;
            const CovarianceSpec cov(parse_matrix(cov_text));
            o.inputs = {{"cov", cov_text}, {"samples", samples}};
            const auto v = theorem2_bounds_check(cov, g.mc(samples));
            o.results = {{"n", v.n},
                         {"estimate", num(v.estimate.mean)},
                         {"std_error", num(v.estimate.std_error)},
                         {"lower", num(v.lower)},
                         {"upper", num(v.upper)},
                         {"holds", v.holds}};
            if (!v.holds) {
                o.results["message"] = v.message;
                o.code = exit_code::check_failed;
            }
            return o;
        };
    }

    // v1 / bound / c-table --------------------------------------------------
    {
        auto* s = command("v1", "First intrinsic volume of the cross-polytope C_n(l)");
        s->add_option("--axes", u_text, "Semi-axes, comma separated")->required();
        handlers[s] = [&] {
            Outcome o;
            const auto l = parse_vector(u_text);
            o.inputs = {{"axes", num_vector(l)}};
            o.results = expectation_json(v1_crosspolytope(CrossPolytope(l), g.quadrature()));
            return o;
        };
    }
    bool allow_unordered = false;
    {
        auto* s = command("bound", "Mean-width lower bound from successive inner radii");
        s->add_option("--radii", u_text, "r_1 >= r_2 >= ... > 0")->required();
        s->add_flag("--allow-unordered", allow_unordered, "Accept radii that are not nonincreasing");
        handlers[s] = [&] {
            Outcome o;
            const auto r = parse_vector(u_text);
            o.inputs = {{"radii", num_vector(r)}, {"allow_unordered", allow_unordered}};
            const auto b = mean_width_lower_bound(RadiiProfile(r, allow_unordered), g.quadrature());
            o.results = {{"n", b.n},
                         {"radii_norm", num(b.radii_norm)},
                         {"E_n", num(b.e_n)},
                         {"bound_exact", num(b.bound_exact)},
                         {"bound_corollary", b.bound_corollary ? num(*b.bound_corollary) : json(nullptr)},
                         {"corollary_defined", b.corollary_defined},
                         {"v1_cross_polytope", num(b.v1_cross_polytope)}};
            if (b.bound_corollary && b.bound_exact < *b.bound_corollary) o.code = exit_code::check_failed;
            return o;
        };
    }
    {
        auto* s = command("c-table", "c_n = sqrt(2 pi n / log n) E_n next to the median route");
        s->add_option("--n", n_list_text, "Dimensions >= 2, e.g. 2:100,200,500,1000")->required();
        handlers[s] = [&] {
            Outcome o;
            const auto ns = parse_index_list(n_list_text);
            o.inputs = {{"n", ns}};
            const auto t = constant_c_table(ns, g.quadrature());
            o.table = Table{{"n", "E_n", "c_exact", "median", "c_median"}, {}};
            json rows = json::array();
            for (const auto& r : t.rows) {
                o.table->rows.push_back({r.n, num(r.e_n), num(r.c_exact), num(r.median), num(r.c_median)});
                rows.push_back(json{{"n", r.n}, {"E_n", num(r.e_n)}, {"c_exact", num(r.c_exact)},
                                    {"median", num(r.median)}, {"c_median", num(r.c_median)}});
                o.plot.emplace_back(static_cast<double>(r.n), r.c_exact);
            }
            o.results = {{"constant", num(corollary_constant)},
                         {"min_c", num(t.min_c)},
                         {"argmin", t.argmin},
                         {"largest_n", t.largest_n},
                         {"c_at_largest_n", num(t.c_at_largest_n)},
                         {"below_constant", t.below_constant},
                         {"min_c_median", num(t.min_c_median)},
                         {"rows", rows}};
            if (!t.below_constant.empty()) o.code = exit_code::check_failed;
            return o;
        };
    }

    // lemma1 / lemma2 -------------------------------------------------------
    std::string x_text;
    std::string lq_text = "0.25,0.5,1,1.5,2";
    double x_max = 10.0;
    double step = 0.01;
    {
        auto* s = command("lemma1", "Monotonicity of F(x) = e^{x^2/2} x^{1-q} int_0^x e^{-t^2/2} dt and positivity of f");
        s->add_option("--x", x_text, "Evaluate F and f at these x instead of running the grid check");
        s->add_option("--q", lq_text, "q values in (0, 2]");
        s->add_option("--x-max", x_max, "Grid end")->check(CLI::PositiveNumber);
        s->add_option("--step", step, "Grid step")->check(CLI::PositiveNumber);
        handlers[s] = [&] {
            Outcome o;
            const auto qs = parse_vector(lq_text);
            if (!x_text.empty()) {
                const auto xs = parse_vector(x_text);
                o.inputs = {{"x", num_vector(xs)}, {"q", num_vector(qs)}};
                o.table = Table{{"x", "q", "F", "f"}, {}};
                json rows = json::array();
                for (double q : qs) {
                    for (double x : xs) {
                        const double F = lemma1_F({x, q});
                        const double f = lemma1_f({x, q});
                        o.table->rows.push_back({num(x), num(q), num(F), num(f)});
                        rows.push_back(json{{"x", num(x)}, {"q", num(q)}, {"F", num(F)}, {"f", num(f)}});
                    }
                }
                o.results = {{"rows", rows}};
                return o;
            }
            o.inputs = {{"q", num_vector(qs)}, {"x_max", num(x_max)}, {"step", num(step)}};
            const auto steps = static_cast<std::size_t>(std::llround(x_max / step));
            json per_q = json::array();
            std::size_t total = 0;
            o.table = Table{{"q", "points", "F_violations", "f_violations"}, {}};
            for (double q : qs) {
                std::size_t bad_F = 0;
                std::size_t bad_f = 0;
                double prev = -infinity;
                for (std::size_t i = 1; i <= steps; ++i) {
                    const double x = step * static_cast<double>(i);
                    const double F = lemma1_F({x, q});
                    if (!(F > prev)) ++bad_F;
                    if (!(lemma1_f({x, q}) > 0.0)) ++bad_f;
                    prev = F;
                }
                total += bad_F + bad_f;
                per_q.push_back(json{{"q", num(q)}, {"points", steps}, {"F_violations", bad_F}, {"f_violations", bad_f}});
                o.table->rows.push_back({num(q), steps, bad_F, bad_f});
            }
            o.results = {{"violations", total}, {"per_q", per_q}};
            if (total > 0) o.code = exit_code::check_failed;
            return o;
        };
    }
    std::string c_text;
    double c_max = 10.0;
    double c_step = 0.1;
    {
        auto* s = command("lemma2", "c + int_c^inf (1 - phi(sqrt2 t)^2) dt <= sqrt(2/pi) e^{-c^2/2} + c phi(c)");
        s->add_option("--c", c_text, "c values (default: grid 0..c-max)");
        s->add_option("--c-max", c_max, "Grid end")->check(CLI::NonNegativeNumber);
        s->add_option("--step", c_step, "Grid step")->check(CLI::PositiveNumber);
        handlers[s] = [&] {
            Outcome o;
            std::vector<double> cs;
            if (!c_text.empty()) {
                cs = parse_vector(c_text);
            } else {
                const auto steps = static_cast<std::size_t>(std::llround(c_max / c_step));
                for (std::size_t i = 0; i <= steps; ++i) cs.push_back(c_step * static_cast<double>(i));
            }
            o.inputs = {{"c", num_vector(cs)}};
            o.table = Table{{"c", "lhs", "rhs", "identity_residual", "holds"}, {}};
            json rows = json::array();
            std::size_t failures = 0;
            double worst = 0.0;
            for (double c : cs) {
                const auto r = lemma2_check(c, g.quadrature());
                o.table->rows.push_back({num(c), num(r.lhs), num(r.rhs), num(r.identity_residual), r.holds});
                rows.push_back(json{{"c", num(c)}, {"lhs", num(r.lhs)}, {"rhs", num(r.rhs)},
                                    {"identity_residual", num(r.identity_residual)}, {"holds", r.holds}});
                worst = std::max(worst, r.identity_residual);
                if (!r.holds || r.identity_residual > 1e-8) ++failures;
            }
            o.results = {{"failures", failures}, {"max_identity_residual", num(worst)}, {"rows", rows}};
            if (failures > 0) o.code = exit_code::check_failed;
            return o;
        };
    }

    // -----------------------------------------------------------------------
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? exit_code::ok : exit_code::usage;
    }

    CLI::App* chosen = app.get_subcommands().front();
    Outcome outcome;
    try {
        outcome = handlers.at(chosen)();
    } catch (const usage_error& e) {
        err << "crossnorm " << chosen->get_name() << ": " << e.what() << '\n';
        return exit_code::usage;
    } catch (const crossnorm::domain_error& e) {
        err << "crossnorm " << chosen->get_name() << ": " << e.what() << '\n';
        return exit_code::usage;
    } catch (const crossnorm::capability_error& e) {
        err << "crossnorm " << chosen->get_name() << ": " << e.what() << '\n';
        return exit_code::usage;
    } catch (const crossnorm::detection_error& e) {
        err << "crossnorm " << chosen->get_name() << ": " << e.what() << '\n';
        return exit_code::check_failed;
    } catch (const crossnorm::convergence_error& e) {
        err << "crossnorm " << chosen->get_name() << ": " << e.what() << '\n';
        return exit_code::check_failed;
    }

    std::ostringstream doc;
    if (g.format == "csv") {
        write_csv(doc, outcome);
    } else {
        json d;
        d["tool"] = "crossnorm";
        d["version"] = CROSSNORM_VERSION;
        d["command"] = chosen->get_name();
        d["seed"] = g.seed;
        d["threads"] = g.threads;
        d["quadrature"] = {{"rel_tol", num(g.rel_tol)}, {"abs_tol", num(g.abs_tol)}, {"tail_epsilon", num(g.tail_epsilon)}};
        d["inputs"] = outcome.inputs;
        d["status"] = outcome.code == exit_code::ok ? "ok" : "check_failed";
        d["results"] = outcome.results;
        doc << d.dump(2) << '\n';
    }
    if (g.output.empty()) {
        out << doc.str();
    } else {
        std::ofstream f(g.output, std::ios::binary);
        if (!f) {
            err << "crossnorm: cannot write " << g.output << '\n';
            return exit_code::usage;
        }
        f << doc.str();
    }
    if (!g.plot_data.empty()) {
        if (outcome.plot.empty()) {
            err << "crossnorm: " << chosen->get_name() << " has no plot data\n";
        } else {
            std::ofstream f(g.plot_data, std::ios::binary);
            if (!f) {
                err << "crossnorm: cannot write " << g.plot_data << '\n';
                return exit_code::usage;
            }
            f << "x,y\n";
            for (const auto& [x, y] : outcome.plot) f << format_real(x) << ',' << format_real(y) << '\n';
        }
    }
    return outcome.code;
}

}  // namespace crossnorm::cli
