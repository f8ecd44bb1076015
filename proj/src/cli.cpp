#include "mwlil/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "mwlil/conditions.hpp"
#include "mwlil/decomposition.hpp"
#include "mwlil/ensemble.hpp"
#include "mwlil/output.hpp"
#include "mwlil/parallel.hpp"
#include "mwlil/path.hpp"
#include "mwlil/transfer_op.hpp"

#ifndef MWLIL_VERSION
#define MWLIL_VERSION "unknown"
#endif
#ifndef MWLIL_GIT_REV
#define MWLIL_GIT_REV "unknown"
#endif

namespace mwlil {

namespace {

double verdict_value(CheckVerdict v) {
    switch (v) {
        case CheckVerdict::Pass: return 1.0;
        case CheckVerdict::Fail: return 0.0;
        case CheckVerdict::Inconclusive: break;
    }
    return std::nan("");
}

std::string eps_label(double eps) { return "eps=" + format_double(eps); }

struct Run {
    const ExperimentConfig& c;
    ChainSpec spec;
    Functional g;
    TransferOptions opts;
    std::vector<ResultRow> rows;
    std::vector<std::pair<std::string, std::string>> files;  // name, content

    void row(std::string metric, std::optional<std::int64_t> n, double value, double se,
             std::string method) {
        rows.push_back({c.experiment_id, std::move(metric), n, value, se, std::move(method)});
    }
};

EnsembleConfig ensemble_config(const Run& run, bool decompose) {
    EnsembleConfig e;
    e.spec = run.spec;
    e.g = run.g;
    e.n = run.c.n;
    e.paths = run.c.paths;
    e.seed = run.c.seed;
    e.checkpoints = run.c.checkpoints;
    e.n0 = run.c.n0;
    e.eps_grid = effective_eps_grid(run.c);
    e.lil = run.c.n >= run.c.n0;
    e.decompose = decompose;
    e.threads = run.c.threads;
    e.opts = run.opts;
    return e;
}

void lil_rows(Run& run, const EnsembleReport& rep) {
    for (std::size_t q = 0; q < rep.lil_quantiles.size(); ++q) {
        const std::string level = std::to_string(static_cast<int>(rep.quantile_levels[q] * 100 + 0.5));
        std::vector<double> sup, sup_abs;
        for (const auto& s : rep.per_path) {
            sup.push_back(s.running_sup);
            sup_abs.push_back(s.running_sup_abs);
        }
        run.row("lil_sup_q" + level, rep.n, rep.lil_quantiles[q],
                bootstrap_quantile_se(sup, rep.quantile_levels[q], 200, run.c.seed), "ensemble_quantile");
        run.row("lil_sup_abs_q" + level, rep.n, rep.lil_abs_quantiles[q],
                bootstrap_quantile_se(sup_abs, rep.quantile_levels[q], 200, run.c.seed),
                "ensemble_quantile");
    }
}

void variance_rows(Run& run, const Curve& v) {
    for (std::size_t j = 0; j < v.values.size(); ++j)
        run.row("var_S_over_n", v.checkpoints[j], v.values[j], v.std_errors[j], "ensemble");
}

Table path_table(const EnsembleReport& rep) {
    Table t;
    t.header = {"path", "stream_id", "S_n", "running_sup", "running_sup_abs", "ergodic_H2", "limit_R_n"};
    for (std::size_t p = 0; p < rep.per_path.size(); ++p) {
        const auto& s = rep.per_path[p];
        t.rows.push_back({std::to_string(p), std::to_string(s.stream_id), format_double(s.S_n),
                          format_double(s.running_sup), format_double(s.running_sup_abs),
                          format_double(s.ergodic_H2), format_double(s.limit_R_n)});
    }
    return t;
}

void cmd_simulate(Run& run) {
    const EnsembleReport rep = run_ensemble(ensemble_config(run, true));
    const HLimitEstimate& H = *rep.H_limit;
    run.row("H_norm_ref", std::nullopt, rep.H_norm_ref, H.H_norm.std_error,
            std::string("operator_") + std::string(to_string(H.H_norm.method)));
    lil_rows(run, rep);
    variance_rows(run, rep.variance_curve);
    run.row("variance_verdict", rep.n, verdict_value(rep.variance_curve.verdict), 0.0, "verdict");
    for (std::size_t j = 0; j < rep.remainder_curve.values.size(); ++j)
        run.row("limit_R2_over_n", rep.remainder_curve.checkpoints[j], rep.remainder_curve.values[j],
                rep.remainder_curve.std_errors[j], "ensemble");
    run.row("remainder_verdict", rep.n, verdict_value(rep.remainder_curve.verdict), 0.0, "verdict");
    for (std::size_t j = 0; j < rep.scheduled_R2.size(); ++j) {
        const Eigen::ArrayXd sq = rep.scheduled_R_samples.values.col(static_cast<Eigen::Index>(j)).array().square();
        const double m = static_cast<double>(sq.size());
        const double se = m > 1 ? std::sqrt((sq - sq.mean()).square().sum() / (m - 1) / m) : 0.0;
        run.row("scheduled_R2", rep.scheduled_R_samples.checkpoints[j], rep.scheduled_R2[j], se, "ensemble");
    }
    run.row("ergodic_H2", rep.n, rep.ergodic_H2.value, rep.ergodic_H2.std_error, "path_average");
    run.files.emplace_back("paths.csv", path_table(rep).csv());
}

void cmd_lil(Run& run) {
    if (run.c.n < run.c.n0) throw std::invalid_argument("lil needs n >= n0");
    const EnsembleReport rep = run_ensemble(ensemble_config(run, false));
    lil_rows(run, rep);
    variance_rows(run, rep.variance_curve);
    run.files.emplace_back("paths.csv", path_table(rep).csv());
}

void cmd_decompose(Run& run) {
    const auto grid = effective_eps_grid(run.c);
    std::vector<Resolvent> rs;
    for (double e : grid) rs.push_back(resolvent(run.spec, run.g, e, run.opts.resolvent_tol, run.opts));
    const HLimitEstimate H = estimate_H_limit(run.spec, run.g, grid, run.opts);
    std::vector<std::int64_t> checkpoints = run.c.checkpoints;
    if (checkpoints.empty()) checkpoints = {1, run.c.n};

    Table trace;
    trace.header = {"path", "eps", "i", "S", "M_eps", "drift", "R_eps", "limit_R"};
    std::vector<double> max_residual(grid.size(), 0.0), max_ratio(grid.size(), 0.0);
    double max_discrepancy = 0.0;
    Eigen::MatrixXd limit_R(run.c.paths, static_cast<Eigen::Index>(checkpoints.size()));
    MartingaleDiagnostic first_check;
    for (std::int64_t p = 0; p < run.c.paths; ++p) {
        RngStream rng(run.c.seed, static_cast<std::uint64_t>(p));
        const Path path = simulate_path(run.spec, run.g, run.c.n, rng, true);
        const DecompositionTrace lim = limit_decompose(path, rs.back(), H.tail_budget);
        for (std::size_t j = 0; j < checkpoints.size(); ++j)
            limit_R(p, static_cast<Eigen::Index>(j)) = (*lim.limit_R)[checkpoints[j] - 1];
        if (p == 0) first_check = martingale_check(lim, path);
        for (std::size_t e = 0; e < grid.size(); ++e) {
            const DecompositionTrace t = decompose_at_eps(path, rs[e]);
            max_residual[e] = std::max(max_residual[e], t.identity_residual);
            max_ratio[e] = std::max(max_ratio[e], t.identity_residual / t.identity_tolerance);
            max_discrepancy = std::max(max_discrepancy, t.source_discrepancy);
            for (auto i : checkpoints) {
                const auto k = i - 1;
                trace.rows.push_back({std::to_string(p), format_double(grid[e]), std::to_string(i),
                                      format_double(t.S[k]), format_double(t.M_eps[k]),
                                      format_double(t.drift[k]), format_double(t.R_eps[k]),
                                      format_double((*lim.limit_R)[k])});
            }
        }
    }
    for (std::size_t e = 0; e < grid.size(); ++e) {
        run.row("identity_residual_max@" + eps_label(grid[e]), run.c.n, max_residual[e], 0.0,
                std::string(to_string(rs[e].method)));
        run.row("identity_residual_over_tolerance@" + eps_label(grid[e]), run.c.n, max_ratio[e], 0.0,
                std::string(to_string(rs[e].method)));
    }
    run.row("source_discrepancy_max", run.c.n, max_discrepancy, 0.0, "dyadic_projection");
    run.row("limit_budget", std::nullopt, H.tail_budget, 0.0, "cauchy_extrapolation");
    for (std::size_t j = 0; j < checkpoints.size(); ++j) {
        const Eigen::ArrayXd sq = limit_R.col(static_cast<Eigen::Index>(j)).array().square();
        const double m = static_cast<double>(sq.size());
        const double se = m > 1 ? std::sqrt((sq - sq.mean()).square().sum() / (m - 1) / m) : 0.0;
        run.row("limit_R2", checkpoints[j], sq.mean(), se, "ensemble");
    }
    run.row("martingale_check_path0", run.c.n, verdict_value(first_check.verdict), 0.0, "verdict");
    run.row("martingale_check_max_abs_z", run.c.n, first_check.max_abs_z, 0.0, "quantile_bins");
    run.files.emplace_back("trace.csv", trace.csv());
}

void cmd_conditions(Run& run, int& exit_code) {
    ConditionBudget budget{run.c.max_terms, run.c.max_samples};
    Table reports;
    reports.header = {"condition", "delta",          "partial_sum", "std_error", "terms_computed",
                      "tail_estimate", "decay_exponent", "verdict",   "band_1e-6", "band_1e-5",
                      "band_1e-7",  "note"};
    Table terms;
    terms.header = {"condition", "k", "term", "partial_sum"};
    bool all_inconclusive = !run.c.conditions.empty();
    for (const auto& name : run.c.conditions) {
        const ConditionId id = parse_condition_id(name);
        const ConditionReport r = check_condition(run.spec, run.g, id, run.c.delta, budget, run.opts);
        if (r.verdict != Verdict::Inconclusive) all_inconclusive = false;
        const std::string method = id == ConditionId::Bern301 ? "monte_carlo" : "series";
        run.row(name + ".partial_sum", r.terms_computed, r.partial_sum, r.std_error, method);
        run.row(name + ".tail_estimate", r.terms_computed, r.tail_estimate.value_or(std::nan("")), 0.0,
                "tail_extrapolation");
        std::vector<std::string> band_cells(3, "");
        for (std::size_t b = 0; b < r.bands.size() && b < 3; ++b) {
            run.row(name + ".band@" + format_double(r.bands[b].band), r.terms_computed, r.bands[b].value,
                    r.bands[b].std_error, "monte_carlo");
            band_cells[b] = format_double(r.bands[b].value);
        }
        std::string note = r.note;
        for (char& ch : note)
            if (ch == ',' || ch == '\n') ch = ';';
        reports.rows.push_back({name, format_double(r.delta), format_double(r.partial_sum),
                                format_double(r.std_error), std::to_string(r.terms_computed),
                                r.tail_estimate ? format_double(*r.tail_estimate) : "",
                                r.decay_exponent ? format_double(*r.decay_exponent) : "",
                                std::string(to_string(r.verdict)), band_cells[0], band_cells[1],
                                band_cells[2], note});
        for (std::size_t k = 1; k <= r.terms.size(); ++k) {
            const bool power_of_two = (k & (k - 1)) == 0;
            if (k <= 64 || power_of_two || k == r.terms.size())
                terms.rows.push_back({name, std::to_string(k), format_double(r.terms[k - 1]),
                                      format_double(r.partial_sums[k - 1])});
        }
    }
    run.files.emplace_back("conditions.csv", reports.csv());
    run.files.emplace_back("condition_terms.csv", terms.csv());
    if (all_inconclusive) exit_code = kExitBudget;
}

void cmd_norms(Run& run) {
    const NormEstimate g_norm = norm(run.spec, run.g, run.opts);
    run.row("norm_g", std::nullopt, g_norm.value, g_norm.std_error, std::string(to_string(g_norm.method)));
    const NormEstimate q_norm = norm(run.spec, apply_Q(run.spec, run.g, run.opts), run.opts);
    run.row("norm_Qg", std::nullopt, q_norm.value, q_norm.std_error, std::string(to_string(q_norm.method)));
    run.row("projection_error", std::nullopt, projection_error(run.spec, run.g, run.opts), 0.0,
            "dyadic_projection");

    const auto grid = effective_eps_grid(run.c);
    const HLimitEstimate H = estimate_H_limit(run.spec, run.g, grid, run.opts);
    run.row("H_norm", std::nullopt, H.H_norm.value, H.H_norm.std_error, std::string(to_string(H.H_norm.method)));
    for (std::size_t j = 0; j < grid.size(); ++j) {
        run.row("H_eps_norm@" + eps_label(grid[j]), std::nullopt, H.H_norms[j], 0.0, "operator");
        run.row("h_eps_norm@" + eps_label(grid[j]), std::nullopt, H.h_norms[j], 0.0, "operator");
        if (j > 0) {
            run.row("cauchy_diff@" + eps_label(grid[j]), std::nullopt, H.cauchy_diffs[j - 1], 0.0, "operator");
            run.row("r2_margin@" + eps_label(grid[j]), std::nullopt, H.r2_rhs[j - 1] - H.r2_lhs[j - 1], 0.0,
                    "operator");
        }
    }
    run.row("r2_holds", std::nullopt, H.r2_holds ? 1.0 : 0.0, 0.0, "verdict");

    std::vector<std::int64_t> n_grid;
    for (std::int64_t n = 16; n <= run.c.n; n *= 2) n_grid.push_back(n);
    const std::vector<double> vn = vn_norms(run.spec, run.g, n_grid.empty() ? 1 : n_grid.back(), run.opts);
    for (auto n : n_grid) run.row("vn_norm", n, vn[static_cast<std::size_t>(n - 1)], 0.0, "operator");
    if (n_grid.size() >= 4) {
        // eps = 1/n, so both fits see the same range.
        std::vector<double> growth_eps;
        for (auto n : n_grid) growth_eps.push_back(1.0 / static_cast<double>(n));
        const GrowthCheck gc = check_growth(run.spec, run.g, n_grid, growth_eps, 0.05, run.opts);
        run.row("alpha_hat_vn", std::nullopt, gc.vn.alpha_hat, 0.0, "log_log_fit");
        run.row("r_squared_vn", std::nullopt, gc.vn.r_squared, 0.0, "log_log_fit");
        run.row("alpha_hat_resolvent", std::nullopt, gc.resolvent.alpha_hat, 0.0, "log_log_fit");
        run.row("growth_consistent", std::nullopt, gc.consistent ? 1.0 : 0.0, 0.0, "verdict");
    }
}

std::string manifest(const ExperimentConfig& c, double wall_time) {
    nlohmann::ordered_json m;
    m["config"] = to_json(c);
    m["seed"] = c.seed;
    m["version"] = {{"mwlil", MWLIL_VERSION}, {"csv_schema", kResultSchemaVersion}};
    m["git_rev"] = MWLIL_GIT_REV;
    m["wall_time"] = wall_time;
    return m.dump(2) + "\n";
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("bad number '" + item + "' in list");
        }
    }
    return out;
}

}  // namespace

int run_experiment(const ExperimentConfig& c, std::ostream& out) {
    validate(c);
    const auto start = std::chrono::steady_clock::now();
    Run run{c, c.chain, make_functional(c.functional, c.chain), {}, {}, {}};
    int code = kExitOk;
    if (c.command == "simulate")
        cmd_simulate(run);
    else if (c.command == "lil")
        cmd_lil(run);
    else if (c.command == "decompose")
        cmd_decompose(run);
    else if (c.command == "conditions")
        cmd_conditions(run, code);
    else
        cmd_norms(run);

    const std::filesystem::path dir(c.output_dir);
    std::filesystem::create_directories(dir);
    write_file(dir / "results.csv", results_csv(run.rows));
    for (const auto& [name, content] : run.files) write_file(dir / name, content);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_file(dir / "manifest.json", manifest(c, wall));
    out << c.command << ": wrote " << run.rows.size() << " result rows to " << (dir / "results.csv").string()
        << '\n';
    return code;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Martingale approximation and LIL laboratory"};
    app.require_subcommand(1);

    std::string config_path, chain, functional, eps_grid, checkpoints, conditions, id, outdir;
    std::int64_t n = 0, paths = 0, n0 = 0, max_terms = 0, max_samples = 0;
    std::uint64_t seed = 0;
    int threads = 0;
    double delta = 0.0;
    bool dump = false;

    struct Given {
        CLI::Option *config, *chain, *functional, *n, *paths, *seed, *eps, *checkpoints, *n0,
            *conditions, *delta, *max_terms, *max_samples, *out, *id, *threads;
    };
    std::map<std::string, Given> given;
    const std::pair<const char*, const char*> commands[] = {
        {"simulate", "ensemble of paths: LIL quantiles, Var(S_n)/n, remainders, ergodic H^2"},
        {"decompose", "S = M + eps S(h) + R along paths, with identity residuals and trace.csv"},
        {"lil", "LIL suprema across an ensemble, without the decomposition"},
        {"conditions", "summability condition checkers"},
        {"norms", "operator norms, H_eps over the eps grid, growth fits"}};
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        Given g{};
        g.config = sub->add_option("--config", config_path, "JSON config or manifest");
        g.chain = sub->add_option("--chain", chain, "bernoulli | lebesgue(K)");
        g.functional = sub->add_option("--functional", functional, "catalog entry, e.g. singular_sin(0.45)");
        g.n = sub->add_option("--n", n, "path length");
        g.paths = sub->add_option("--paths", paths, "ensemble size");
        g.seed = sub->add_option("--seed", seed, "master seed");
        g.eps = sub->add_option("--eps-grid", eps_grid, "comma-separated decreasing eps values");
        g.checkpoints = sub->add_option("--checkpoints", checkpoints, "comma-separated n values");
        g.n0 = sub->add_option("--n0", n0, "first n of the LIL suprema");
        g.conditions = sub->add_option("--conditions", conditions, "comma-separated condition ids");
        g.delta = sub->add_option("--delta", delta, "delta for the condition checkers");
        g.max_terms = sub->add_option("--max-terms", max_terms, "series budget");
        g.max_samples = sub->add_option("--max-samples", max_samples, "Monte Carlo budget");
        g.out = sub->add_option("--out", outdir, "output directory");
        g.id = sub->add_option("--id", id, "experiment id");
        g.threads = sub->add_option("--threads", threads, "worker threads (0: all cores)");
        sub->add_flag("--dump-config", dump, "print the effective config as JSON and exit");
        given[name] = g;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        const std::string command = app.get_subcommands().front()->get_name();
        const Given& g = given.at(command);
        ExperimentConfig c;
        if (g.config->count()) {
            std::ifstream f(config_path);
            if (!f) throw ConfigError("cannot read config " + config_path);
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(f);
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError(std::string("config is not valid JSON: ") + e.what());
            }
            // A manifest carries the config under "config".
            if (j.is_object() && j.contains("config") && j.contains("git_rev")) j = j.at("config");
            c = config_from_json(j);
        }
        c.command = command;
        if (g.id->count()) c.experiment_id = id;
        if (g.chain->count()) c.chain = parse_chain(chain);
        if (g.functional->count()) c.functional = parse_functional_spec(functional);
        if (g.n->count()) c.n = n;
        if (g.paths->count()) c.paths = paths;
        if (g.seed->count()) c.seed = seed;
        if (g.eps->count()) c.eps_grid = parse_list(eps_grid);
        if (g.checkpoints->count()) {
            c.checkpoints.clear();
            for (double v : parse_list(checkpoints)) c.checkpoints.push_back(static_cast<std::int64_t>(v));
        }
        if (g.n0->count()) c.n0 = n0;
        if (g.conditions->count()) {
            c.conditions.clear();
            std::stringstream ss(conditions);
            std::string item;
            while (std::getline(ss, item, ',')) c.conditions.push_back(item);
        }
        if (g.delta->count()) c.delta = delta;
        if (g.max_terms->count()) c.max_terms = max_terms;
        if (g.max_samples->count()) c.max_samples = max_samples;
        if (g.out->count()) c.output_dir = outdir;
        if (g.threads->count()) c.threads = threads;
        validate(c);
        if (dump) {
            out << to_json(c).dump(2) << '\n';
            return kExitOk;
        }
        return run_experiment(c, out);
    } catch (const BudgetExceeded& e) {
        err << "budget exceeded: " << e.what() << '\n';
        return kExitBudget;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
}

}  // namespace mwlil
