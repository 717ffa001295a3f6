#pragma once

// Subcommands of the sharp_rosenthal tool. Kept in a header so the test
// suite can drive them in-process.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "rosenthal.hpp"
#include "rosenthal/io.hpp"

namespace rosenthal::cli {

enum class OutputFormat { json, csv, pretty };

enum ExitCode : int {
    kOk = 0,
    kVerifyFailed = 1,
    kUnsupported = 2,
    kParseError = 3,
    kNumericalFailure = 4,
};

struct RunConfig {
    double tol = 1e-12;
    std::size_t max_terms = 1'000'000;
    std::uint64_t seed = 0;
    OutputFormat output = OutputFormat::pretty;

    SeriesConfig series() const {
        SeriesConfig c;
        c.tol = tol;
        c.max_terms = max_terms;
        c.validate();
        return c;
    }
};

/// Default tolerance, overridable through SHARP_ROSENTHAL_TOL.
inline double default_tol() {
    if (const char* env = std::getenv("SHARP_ROSENTHAL_TOL")) {
        char* end = nullptr;
        const double v = std::strtod(env, &end);
        if (end != env && *end == '\0' && v > 0.0) return v;
        throw CLI::ValidationError("SHARP_ROSENTHAL_TOL", std::string("not a positive number: ") + env);
    }
    return 1e-12;
}

// ---------------------------------------------------------------- tables

using Cell = std::variant<double, long long, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

/// 17 significant digits: every double survives a text round trip.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string format_pretty(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline nlohmann::json cell_json(const Cell& c) {
    if (auto d = std::get_if<double>(&c)) return *d;
    if (auto i = std::get_if<long long>(&c)) return *i;
    return std::get<std::string>(c);
}

inline std::string cell_text(const Cell& c, bool pretty) {
    if (auto d = std::get_if<double>(&c)) return pretty ? format_pretty(*d) : format_double(*d);
    if (auto i = std::get_if<long long>(&c)) return std::to_string(*i);
    return std::get<std::string>(c);
}

/// json: one object per row (JSON lines); csv: header plus rows;
/// pretty: aligned columns.
inline void render(const Table& t, OutputFormat fmt, std::ostream& out) {
    switch (fmt) {
    case OutputFormat::json:
        for (const auto& row : t.rows) {
            nlohmann::json obj = nlohmann::json::object();
            for (std::size_t i = 0; i < t.columns.size(); ++i) obj[t.columns[i]] = cell_json(row[i]);
            out << obj.dump() << '\n';
        }
        break;
    case OutputFormat::csv:
        for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
        out << '\n';
        for (const auto& row : t.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << cell_text(row[i], false);
            out << '\n';
        }
        break;
    case OutputFormat::pretty: {
        std::vector<std::size_t> width(t.columns.size());
        for (std::size_t i = 0; i < t.columns.size(); ++i) width[i] = t.columns[i].size();
        for (const auto& row : t.rows)
            for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], cell_text(row[i], true).size());
        auto line = [&](auto&& text_of) {
            for (std::size_t i = 0; i < t.columns.size(); ++i) {
                const std::string s = text_of(i);
                out << (i ? "  " : "") << s << std::string(width[i] - s.size(), ' ');
            }
            out << '\n';
        };
        line([&](std::size_t i) { return t.columns[i]; });
        for (const auto& row : t.rows) line([&](std::size_t i) { return cell_text(row[i], true); });
        break;
    }
    }
}

// --------------------------------------------------------------- options

struct Options {
    RunConfig run;
    std::optional<double> p;
    std::optional<double> q;
    double A = 1.0;
    double B = 1.0;
    double A1 = 1.0;
    double B1 = 1.0;
    std::string x = "zero";
    std::string mode = "auto";
    std::string suite;
    std::size_t grid = 20;
    std::size_t cases = 0;
    std::vector<double> p_values;
    std::vector<double> gamma_values;
    double c1 = 0.01;
    std::vector<double> c2_values;
    std::vector<std::size_t> n_values;
};

inline DiscreteRV load_x(const std::string& spec) {
    if (spec == "zero") return DiscreteRV();
    return io::read_discrete_rv(spec);
}

inline Table report_table(const std::vector<CheckReport>& reports) {
    Table t{{"case_id", "seed", "p", "q", "lhs", "rhs", "slack", "status"}, {}};
    for (const auto& r : reports)
        t.rows.push_back({static_cast<long long>(r.case_id), static_cast<long long>(r.seed), r.p, r.q, r.lhs, r.rhs,
                          r.slack, std::string(to_string(r.status))});
    return t;
}

inline bool all_passed(const std::vector<CheckReport>& reports) {
    for (const auto& r : reports)
        if (r.status == CheckStatus::fail) return false;
    return true;
}

// -------------------------------------------------------------- commands

inline int cmd_bound(const Options& o, std::ostream& out) {
    if (!o.p) throw CLI::RequiredError("--p");
    const double p = *o.p;
    const double q = o.q.value_or(p);
    const DiscreteRV x = load_x(o.x);
    const SeriesConfig cfg = o.run.series();
    BoundResult r;
    if (o.mode == "auto") r = rosenthal_bound(p, q, o.A, o.B, x, cfg);
    else if (o.mode == "exact") r = exact_bound(p, q, o.A, o.B, x, cfg);
    else if (o.mode == "even") r = even_p_bound(p, o.A, o.B);
    else if (o.mode == "symmetric") r = symmetric_bound(p, q, o.A, o.B, x, cfg);
    else if (o.mode == "combined") r = combined_bound(p, q, o.A, o.B, o.A1, o.B1, x, cfg);
    else throw CLI::ValidationError("--mode", "unknown mode " + o.mode);

    if (o.run.output == OutputFormat::json) {
        out << io::to_json(r).dump() << '\n';
        return kOk;
    }
    Table t{{"value", "regime", "lambda", "c", "achieved_sign", "error_budget"}, {}};
    for (const LambdaC& lc : r.certificate)
        t.rows.push_back({r.value, std::string(to_string(r.regime)), lc.lambda, lc.c,
                          std::string(to_string(r.achieved_sign)), r.error_budget});
    render(t, o.run.output, out);
    return kOk;
}

inline int cmd_constants(const Options& o, std::ostream& out) {
    const std::vector<double> ps = o.p_values.empty() ? std::vector<double>{2.5, 3, 3.5, 4, 4.5, 5, 5.5, 6}
                                                      : o.p_values;
    const std::vector<double> gs = o.gamma_values.empty() ? std::vector<double>{1.0} : o.gamma_values;
    const SeriesConfig cfg = o.run.series();
    Table t{{"p", "gamma", "exact_C", "classical_C", "ratio"}, {}};
    for (double p : ps) {
        for (double g : gs) {
            const double classical = classical_rosenthal_constant(p);
            try {
                const double exact = best_constant(p, g, cfg);
                t.rows.push_back({p, g, exact, classical, classical / exact});
            } catch (const UnsupportedExponents&) {
                t.rows.push_back({p, g, std::string("unsupported"), classical, std::string("unsupported")});
            }
        }
    }
    render(t, o.run.output, out);
    return kOk;
}

inline int cmd_scan(const Options& o, std::ostream& out) {
    const double p = o.p.value_or(5.0);
    const double q = o.q.value_or(p);
    const DiscreteRV x = load_x(o.x);
    QGrid grid;
    grid.n = o.grid;
    const auto s = q_scan(p, q, o.A, o.B, x, grid, o.run.series());
    Table t{{"c1", "c2", "lambda1", "lambda2", "value", "on_axis", "feasible"}, {}};
    t.rows.push_back({s.best.c1, s.best.c2, s.best.lambda1, s.best.lambda2, s.best_value,
                      std::string(s.best.on_axis() ? "true" : "false"), static_cast<long long>(s.feasible)});
    render(t, o.run.output, out);
    return kOk;
}

inline int cmd_limit(const Options& o, std::ostream& out) {
    const double p = o.p.value_or(2.5);
    const DiscreteRV x = load_x(o.x);
    const std::vector<double> c2 = o.c2_values.empty() ? std::vector<double>{10, 100, 1000} : o.c2_values;
    const auto rows = q_limit_row(p, o.A, o.B, o.c1, c2, x, o.run.series());
    Table t{{"c1", "c2", "moment", "limit", "gap"}, {}};
    for (const auto& r : rows) t.rows.push_back({o.c1, r.c2, r.moment, r.limit, r.gap});
    render(t, o.run.output, out);
    return kOk;
}

inline int cmd_accompany(const Options& o, std::ostream& out) {
    const double p = o.p.value_or(4.0);
    std::vector<std::size_t> ns = o.n_values;
    if (ns.empty())
        for (int k = 4; k <= 12; ++k) ns.push_back(std::size_t{1} << k);
    const SeriesConfig cfg = o.run.series();
    Table t{{"n", "kappa", "gamma", "moment", "bound", "gap"}, {}};
    for (std::size_t n : ns) {
        const auto a = accompanying_sequence(p, o.A, o.B, n, cfg);
        t.rows.push_back({static_cast<long long>(n), a.params.kappa, a.params.gamma, a.moment, a.bound, a.gap});
    }
    render(t, o.run.output, out);
    return kOk;
}

// ----------------------------------------------------------- verify suites

namespace detail {

/// Derivative of t -> f(t) at 0, Richardson-extrapolated over the steps
/// h and h/10: central differences when `two_sided`, otherwise the
/// one-sided three-point formula.
template <class F>
double richardson_first(F&& f, double h, bool two_sided) {
    auto d = [&](double s) {
        if (two_sided) return (f(s) - f(-s)) / (2.0 * s);
        return (-3.0 * f(0.0) + 4.0 * f(s) - f(2.0 * s)) / (2.0 * s);
    };
    const double coarse = d(h);
    const double fine = d(h / 10.0);
    return (100.0 * fine - coarse) / 99.0;
}

template <class F>
double richardson_second(F&& f, double h) {
    auto d = [&](double s) { return (f(s) - 2.0 * f(0.0) + f(-s)) / (s * s); };
    return (4.0 * d(h / 2.0) - d(h)) / 3.0;
}

} // namespace detail

inline std::vector<CheckReport> suite_fuzz(const Options& o) {
    const double p = o.p.value_or(5.0);
    const double q = o.q.value_or(p);
    const std::size_t cases = o.cases ? o.cases : 1000;
    const SeriesConfig cfg = o.run.series();
    std::vector<CheckReport> reports(cases);
    rosenthal::detail::parallel_for(cases, 0, [&](std::size_t i) {
        const std::uint64_t seed = o.run.seed + i;
        const FuzzCase fc = random_fuzz_case(seed, FuzzSpec{});
        CheckReport r = check_rosenthal(fc.seq, p, q, fc.background, cfg);
        r.case_id = i;
        r.seed = seed;
        reports[i] = r;
    });
    return reports;
}

inline std::vector<CheckReport> suite_domination(const Options& o) {
    const double q = o.q.value_or(o.p.value_or(5.0));
    const std::size_t cases = o.cases ? o.cases : 1000;
    const SeriesConfig cfg = o.run.series();
    std::vector<CheckReport> reports(cases);
    rosenthal::detail::parallel_for(cases, 0, [&](std::size_t i) {
        const std::uint64_t seed = o.run.seed + i;
        FuzzSpec spec;
        spec.random_background = false;
        CheckReport r = check_domination(random_fuzz_case(seed, spec).seq, q, cfg);
        r.case_id = i;
        r.seed = seed;
        reports[i] = r;
    });
    return reports;
}

/// One row per n in 2^4..2^12: passes when E|S_n|^p stays below the bound
/// and the gap does not grow; the last row also needs a gap below 2%.
inline std::vector<CheckReport> suite_tightness(const Options& o) {
    const double p = o.p.value_or(4.0);
    const SeriesConfig cfg = o.run.series();
    std::vector<CheckReport> reports;
    double prev_gap = std::numeric_limits<double>::infinity();
    for (int k = 4; k <= 12; ++k) {
        const std::size_t n = std::size_t{1} << k;
        const auto a = accompanying_sequence(p, o.A, o.B, n, cfg);
        CheckReport r;
        r.case_id = static_cast<std::uint64_t>(k - 4);
        r.seed = n;
        r.p = r.q = p;
        r.lhs = a.moment;
        r.rhs = a.bound;
        r.slack = a.bound - a.moment;
        const bool below = r.slack >= -1e-10 * a.bound;
        const bool monotone = a.gap <= prev_gap + 1e-10;
        const bool tight = k < 12 || a.gap < 0.02;
        r.status = below && monotone && tight ? CheckStatus::pass : CheckStatus::fail;
        prev_gap = a.gap;
        reports.push_back(r);
    }
    return reports;
}

/// Random two-sided paths; lhs is the analytic derivative, rhs the
/// finite-difference estimate, slack the relative error.
inline std::vector<CheckReport> suite_variation(const Options& o, double& max_rel_error) {
    const std::size_t cases = o.cases ? o.cases : 20;
    const SeriesConfig cfg = o.run.series();
    std::vector<CheckReport> reports(cases);
    rosenthal::detail::parallel_for(cases, 0, [&](std::size_t i) {
        const std::uint64_t seed = o.run.seed + i;
        const RandomPath rp = random_two_sided_path(seed);
        std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
        const double q = 4.5 + 3.5 * static_cast<double>(rng() >> 11) * 0x1.0p-53;
        const PerturbationPath path(rp.base, rp.direction, rp.t_max);
        auto f = [&](double t) {
            return cp_abs_moment(CompoundLaw{0.0, DiscreteRV(), *perturbed(rp.base, rp.direction, t)}, q, cfg);
        };
        const double analytic = first_variation(path, q, DiscreteRV(), 0.0, cfg);
        const double fd = detail::richardson_first(f, 1e-3, true);
        CheckReport r;
        r.case_id = i;
        r.seed = seed;
        r.p = r.q = q;
        r.lhs = analytic;
        r.rhs = fd;
        r.slack = std::abs(analytic - fd) / std::max(std::abs(fd), 1e-300);
        r.status = r.slack < 1e-5 ? CheckStatus::pass : CheckStatus::fail;
        reports[i] = r;
    });
    max_rel_error = 0.0;
    for (const auto& r : reports) max_rel_error = std::max(max_rel_error, r.slack);
    return reports;
}

inline std::vector<CheckReport> suite_qscan(const Options& o) {
    const double p = o.p.value_or(5.0);
    const double q = o.q.value_or(p);
    const DiscreteRV x = load_x(o.x);
    const SeriesConfig cfg = o.run.series();
    QGrid grid;
    grid.n = o.grid;
    const auto s = q_scan(p, q, o.A, o.B, x, grid, cfg);
    const auto bound = rosenthal_bound(p, q, o.A, o.B, x, cfg);
    const LambdaC lc = solve_lambda_c(p, o.A, o.B);
    CheckReport r;
    r.seed = o.run.seed;
    r.p = p;
    r.q = q;
    r.lhs = s.best_value;
    r.rhs = bound.value;
    r.slack = r.rhs - r.lhs;
    const bool axis = s.best.on_axis() && std::abs(std::abs(s.best.c1) - lc.c) <= 1e-12 * lc.c;
    r.status = axis && r.slack >= -1e-8 * r.rhs ? CheckStatus::pass : CheckStatus::fail;
    return {r};
}

inline int cmd_verify(const Options& o, std::ostream& out) {
    std::vector<CheckReport> reports;
    std::optional<double> max_fd_error;
    if (o.suite == "fuzz") reports = suite_fuzz(o);
    else if (o.suite == "domination") reports = suite_domination(o);
    else if (o.suite == "tightness") reports = suite_tightness(o);
    else if (o.suite == "variation") {
        double e = 0.0;
        reports = suite_variation(o, e);
        max_fd_error = e;
    } else if (o.suite == "qscan") reports = suite_qscan(o);
    else throw CLI::ValidationError("suite", "unknown suite " + o.suite);

    render(report_table(reports), o.run.output, out);
    const bool ok = all_passed(reports);
    if (o.run.output == OutputFormat::pretty) {
        out << (ok ? "all cases passed" : "FAILED") << " (" << reports.size() << " cases)";
        if (max_fd_error) out << "; max relative FD error " << format_pretty(*max_fd_error);
        out << '\n';
    }
    return ok ? kOk : kVerifyFailed;
}

// ----------------------------------------------------------------- entry

/// Parses `args` (without the program name) and runs the selected
/// subcommand, writing results to `out` and diagnostics to `err`.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Exact Rosenthal-type moment bounds for sums of independent random variables"};
    app.require_subcommand(1);
    Options o;
    std::string output = "pretty";

    double tol_default = 1e-12;
    try {
        tol_default = default_tol();
    } catch (const CLI::Error& e) {
        err << e.what() << '\n';
        return kParseError;
    }
    o.run.tol = tol_default;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--tol", o.run.tol, "series / quadrature tolerance")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        sub->add_option("--max-terms", o.run.max_terms, "series term budget")->capture_default_str();
        sub->add_option("--seed", o.run.seed, "base seed; case i uses seed + i")->capture_default_str();
        sub->add_option("--output", output, "json, csv or pretty")
            ->check(CLI::IsMember({"json", "csv", "pretty"}))
            ->capture_default_str();
    };
    auto moments = [&](CLI::App* sub) {
        sub->add_option("--p", o.p, "exponent in the constraint sum E|X_i|^p = A");
        sub->add_option("--q", o.q, "moment order (defaults to p)");
        sub->add_option("--A", o.A, "sum of p-th absolute moments")->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_option("--B", o.B, "sum of variances")->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_option("--X", o.x, "JSON file {\"atoms\": [[v, w], ...]} or 'zero'")->capture_default_str();
    };

    auto* bound = app.add_subcommand("bound", "exact bound on E|X + S|^q");
    common(bound);
    moments(bound);
    bound->add_option("--mode", o.mode, "auto, exact, even, symmetric or combined")
        ->check(CLI::IsMember({"auto", "exact", "even", "symmetric", "combined"}))
        ->capture_default_str();
    bound->add_option("--A1", o.A1, "second block A (combined mode)")->check(CLI::PositiveNumber);
    bound->add_option("--B1", o.B1, "second block B (combined mode)")->check(CLI::PositiveNumber);

    auto* constants = app.add_subcommand("constants", "best constants C_{p;gamma} against the classical ones");
    common(constants);
    constants->add_option("--p", o.p_values, "exponents")->delimiter(',');
    constants->add_option("--gamma", o.gamma_values, "gamma values")->delimiter(',');

    auto* verify = app.add_subcommand("verify", "run a verification suite");
    common(verify);
    moments(verify);
    verify->add_option("suite", o.suite, "fuzz, domination, tightness, variation or qscan")
        ->required()
        ->check(CLI::IsMember({"fuzz", "domination", "tightness", "variation", "qscan"}));
    verify->add_option("--cases", o.cases, "number of random cases");
    verify->add_option("--grid", o.grid, "grid points per axis (qscan)")->capture_default_str();

    auto* scan = app.add_subcommand("scan", "maximize over the two-atom family Q_{p;A,B}");
    common(scan);
    moments(scan);
    scan->add_option("--grid", o.grid, "grid points per axis")->capture_default_str();

    auto* limit = app.add_subcommand("limit", "two-atom family as |c2| grows (p in (2,3])");
    common(limit);
    moments(limit);
    limit->add_option("--c1", o.c1, "fixed first location")->capture_default_str();
    limit->add_option("--c2", o.c2_values, "second locations")->delimiter(',');

    auto* accompany = app.add_subcommand("accompany", "binomial near-extremal sequences");
    common(accompany);
    moments(accompany);
    accompany->add_option("--n", o.n_values, "array sizes")->delimiter(',');

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        return kParseError;
    }
    o.run.output = output == "json" ? OutputFormat::json : output == "csv" ? OutputFormat::csv : OutputFormat::pretty;

    try {
        if (*bound) return cmd_bound(o, out);
        if (*constants) return cmd_constants(o, out);
        if (*verify) return cmd_verify(o, out);
        if (*scan) return cmd_scan(o, out);
        if (*limit) return cmd_limit(o, out);
        if (*accompany) return cmd_accompany(o, out);
    } catch (const UnsupportedExponents& e) {
        err << "unsupported exponents: " << e.what() << '\n';
        return kUnsupported;
    } catch (const NotZeroMean& e) {
        err << "X must have mean zero outside p in (2,3]: " << e.what() << '\n';
        return kParseError;
    } catch (const CLI::Error& e) {
        err << e.what() << '\n';
        return kParseError;
    } catch (const nlohmann::json::exception& e) {
        err << "bad JSON input: " << e.what() << '\n';
        return kParseError;
    } catch (const std::invalid_argument& e) {
        err << "invalid argument: " << e.what() << '\n';
        return kParseError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kNumericalFailure;
    }
    return kParseError;
}

} // namespace rosenthal::cli
