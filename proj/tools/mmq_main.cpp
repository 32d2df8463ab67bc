// mmq: closed-form quoting toolkit for multi-asset market making.
// Subcommands dispatch to the library; every randomized command requires an
// explicit --seed so runs are reproducible.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mmq/closedform.hpp"
#include "mmq/errors.hpp"
#include "mmq/exact.hpp"
#include "mmq/mc.hpp"
#include "mmq/model.hpp"
#include "mmq/quotes.hpp"
#include "mmq/sim.hpp"

namespace {

using nlohmann::json;

mmq::Vec parse_q(const std::string& text, int d) {
    mmq::Vec q;
    if (!text.empty()) {
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) q.push_back(std::stod(item));
    }
    if (q.empty()) q.assign(d, 0.0);
    if (static_cast<int>(q.size()) != d)
        throw mmq::ValidationError("--q needs " + std::to_string(d) + " comma-separated values");
    return q;
}

// Artifact stream: --out file when given, else stdout. The one-line summary
// goes to the channel not carrying the artifact.
struct Output {
    std::ofstream file;
    bool to_file = false;

    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file.open(path);
            if (!file) throw mmq::IoError("cannot open output file: " + path);
            to_file = true;
        }
    }
    std::ostream& stream() { return to_file ? file : std::cout; }
    std::ostream& summary() { return to_file ? std::cout : std::cerr; }
};

json objective_json(const mmq::ObjectiveEstimate& est) {
    return json{{"mean", est.mean}, {"stderr", est.std_error}, {"n", est.n}};
}

mmq::Strategy make_strategy(const std::string& name, const mmq::CheckedSpec& spec,
                            std::optional<mmq::RiccatiSolution>& sol,
                            std::optional<mmq::AsymptoticLimits>& limits,
                            std::optional<mmq::ThetaGrid>& grid, double exact_dt) {
    auto need_solution = [&]() -> const mmq::RiccatiSolution& {
        if (!sol) sol.emplace(mmq::solve_closed_form(spec));
        return *sol;
    };
    if (name == "greedy-proxy") return mmq::Strategy::greedy_proxy(need_solution());
    if (name == "asymptotic") {
        if (!limits) limits.emplace(mmq::asymptotics(need_solution()));
        return mmq::Strategy::asymptotic(*limits);
    }
    if (name == "greedy-exact") {
        if (!grid) {
            mmq::ExactOptions opts;
            opts.dt = exact_dt;
            grid.emplace(mmq::solve_hj(spec, opts));
        }
        return mmq::Strategy::greedy_exact(*grid);
    }
    if (name == "constant-myopic") {
        // Inventory-blind baseline: delta*(0) per asset from the tier-0 curves.
        const double xi = mmq::effective_xi(spec);
        std::vector<std::pair<double, double>> offs;
        for (int i = 0; i < spec.d(); ++i) {
            const mmq::TierSpec& t = spec.tiers(i)[0];
            const double z = spec.assets()[i].z;
            offs.emplace_back(mmq::delta_star(t.bid.intensity, xi, z, 0.0, spec.delta_floor()),
                              mmq::delta_star(t.ask.intensity, xi, z, 0.0, spec.delta_floor()));
        }
        return mmq::Strategy::constant(std::move(offs));
    }
    throw mmq::ValidationError("unknown strategy '" + name + "'");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Closed-form approximations and simulation for multi-asset market making"};
    app.require_subcommand(1);

    std::string spec_path, out_path, q_text, source = "proxy", strategy_name = "greedy-proxy";
    std::string trades_out;
    double t_arg = 0.0, dt = -1.0;
    int samples = 101, nodes = 201, stride = 1;
    long long paths = 0, log_path = 0;
    std::uint64_t seed = 0;

    auto add_spec = [&](CLI::App* cmd) {
        cmd->add_option("--spec", spec_path, "market spec JSON file")->required();
        cmd->add_option("--out", out_path, "output artifact path (default: stdout)");
    };

    CLI::App* solve_closed = app.add_subcommand(
        "solve-closed", "closed-form A(t), B(t), C(t) sampled to CSV");
    add_spec(solve_closed);
    solve_closed->add_option("--samples", samples, "number of time samples (default 101)");
    solve_closed->add_option("--nodes", nodes, "quadrature nodes (default 201)");

    CLI::App* solve_exact = app.add_subcommand(
        "solve-exact", "backward RK4 solution of the Hamilton-Jacobi system to CSV");
    add_spec(solve_exact);
    solve_exact->add_option("--dt", dt, "time step (default horizon/2000)");
    solve_exact->add_option("--stride", stride, "time-node stride in the CSV (default 1)");

    CLI::App* quotes_cmd = app.add_subcommand("quotes", "greedy quotes at (t, q) to CSV");
    add_spec(quotes_cmd);
    quotes_cmd->add_option("--t", t_arg, "evaluation time (default 0)");
    quotes_cmd->add_option("--q", q_text, "inventory, comma-separated (default 0)");
    quotes_cmd->add_option("--source", source, "proxy | exact | asymptotic | corrected");
    quotes_cmd->add_option("--dt", dt, "exact-solver time step (source=exact)");
    quotes_cmd->add_option("--paths", paths, "MC paths (source=corrected)");
    quotes_cmd->add_option("--seed", seed, "MC seed (source=corrected)");

    CLI::App* asym = app.add_subcommand(
        "asymptotic", "ergodic limits A_inf, B_inf, C_rate and stationary quotes to JSON");
    add_spec(asym);
    asym->add_option("--q", q_text, "inventory for the stationary quotes (default 0)");

    CLI::App* mc_cmd = app.add_subcommand(
        "mc-correct", "Monte-Carlo first-order correction at (t, q) to JSON");
    add_spec(mc_cmd);
    mc_cmd->add_option("--t", t_arg, "evaluation time (default 0)");
    mc_cmd->add_option("--q", q_text, "inventory, comma-separated (default 0)");
    mc_cmd->add_option("--paths", paths, "number of simulated paths")->required();
    mc_cmd->add_option("--seed", seed, "RNG seed")->required();

    CLI::App* sim_cmd = app.add_subcommand("simulate", "simulate a quoting strategy to JSON");
    add_spec(sim_cmd);
    sim_cmd->add_option("--strategy", strategy_name,
                        "greedy-proxy | greedy-exact | asymptotic | constant-myopic");
    sim_cmd->add_option("--paths", paths, "number of paths")->required();
    sim_cmd->add_option("--seed", seed, "RNG seed")->required();
    sim_cmd->add_option("--dt", dt, "exact-solver time step (greedy-exact)");
    sim_cmd->add_option("--trades-out", trades_out, "CSV trade log of one path");
    sim_cmd->add_option("--log-path", log_path, "path index for --trades-out (default 0)");

    CLI::App* cmp = app.add_subcommand(
        "compare", "head-to-head objective estimates for several strategies to JSON");
    add_spec(cmp);
    cmp->add_option("--paths", paths, "number of paths per strategy")->required();
    cmp->add_option("--seed", seed, "RNG seed (shared across strategies)")->required();
    std::vector<std::string> cmp_strategies{"greedy-proxy", "asymptotic", "constant-myopic"};
    cmp->add_option("--strategies", cmp_strategies, "strategies to compare");

    CLI11_PARSE(app, argc, argv);

    try {
        const mmq::MarketSpec raw = mmq::load_market_spec(spec_path);
        const mmq::CheckedSpec spec = mmq::validate(raw);
        Output out(out_path);

        if (app.got_subcommand(solve_closed)) {
            const mmq::RiccatiSolution sol = mmq::solve_closed_form(spec, nodes);
            mmq::export_closed_form_csv(sol, out.stream(), samples);
            out.summary() << "solve-closed: d=" << spec.d() << " samples=" << samples
                          << " horizon=" << spec.horizon() << "\n";
        } else if (app.got_subcommand(solve_exact)) {
            mmq::ExactOptions opts;
            opts.dt = dt;
            const mmq::ThetaGrid grid = mmq::solve_hj(spec, opts);
            mmq::export_theta_csv(grid, out.stream(), static_cast<std::size_t>(stride));
            out.summary() << "solve-exact: states=" << grid.grid().states()
                          << " time-nodes=" << grid.times().size() << "\n";
        } else if (app.got_subcommand(quotes_cmd)) {
            const mmq::Vec q = parse_q(q_text, spec.d());
            mmq::QuoteSet quotes;
            if (source == "proxy") {
                const mmq::RiccatiSolution sol = mmq::solve_closed_form(spec);
                quotes = mmq::greedy_quotes(sol, spec, t_arg, q);
            } else if (source == "exact") {
                mmq::ExactOptions opts;
                opts.dt = dt;
                const mmq::ThetaGrid grid = mmq::solve_hj(spec, opts);
                quotes = mmq::greedy_quotes(mmq::GridTheta(grid), spec, t_arg, q);
            } else if (source == "asymptotic") {
                const mmq::RiccatiSolution sol = mmq::solve_closed_form(spec);
                quotes = mmq::asymptotic_quotes(mmq::asymptotics(sol), spec, q);
            } else if (source == "corrected") {
                if (paths <= 0)
                    throw mmq::ValidationError("--paths and --seed are required for corrected quotes");
                const mmq::RiccatiSolution sol = mmq::solve_closed_form(spec);
                const mmq::CoeffSet coeffs = mmq::taylor_coeff_set(spec);
                class Corrected final : public mmq::ThetaSource {
                public:
                    Corrected(const mmq::CheckedSpec& s, const mmq::CoeffSet& c,
                              const mmq::RiccatiSolution& r, long long n, std::uint64_t sd)
                        : spec(s), coeffs(c), sol(r), n_paths(n), seed(sd) {}
                    double theta(double t, const mmq::Vec& q) const override {
                        const auto est = mmq::estimate_eta(spec, coeffs, sol, t, q, n_paths, seed);
                        return mmq::corrected_theta(sol, est, t, q);
                    }

                private:
                    const mmq::CheckedSpec& spec;
                    const mmq::CoeffSet& coeffs;
                    const mmq::RiccatiSolution& sol;
                    long long n_paths;
                    std::uint64_t seed;
                };
                quotes = mmq::greedy_quotes(Corrected(spec, coeffs, sol, paths, seed), spec, t_arg, q);
            } else {
                throw mmq::ValidationError("unknown quote source '" + source + "'");
            }
            mmq::export_quotes_csv(quotes, t_arg, out.stream());
            out.summary() << "quotes: source=" << source << " t=" << t_arg
                          << " rows=" << quotes.size() * 2 << "\n";
        } else if (app.got_subcommand(asym)) {
            const mmq::Vec q = parse_q(q_text, spec.d());
            const mmq::RiccatiSolution sol = mmq::solve_closed_form(spec);
            const mmq::AsymptoticLimits limits = mmq::asymptotics(sol);
            json j;
            j["image_condition_ok"] = limits.image_condition_ok;
            j["A_inf"] = json::array();
            for (int i = 0; i < spec.d(); ++i) {
                json row = json::array();
                for (int k = 0; k < spec.d(); ++k) row.push_back(limits.A_inf(i, k));
                j["A_inf"].push_back(row);
            }
            if (limits.B_inf) j["B_inf"] = *limits.B_inf;
            if (limits.C_rate) j["C_rate"] = *limits.C_rate;
            if (limits.image_condition_ok) {
                const mmq::QuoteSet quotes = mmq::asymptotic_quotes(limits, spec, q);
                json rows = json::array();
                for (const auto& e : quotes) {
                    json row{{"asset", e.asset}, {"tier", e.tier}, {"size", e.size}};
                    if (!e.bid.withdrawn) row["bid_offset"] = e.bid.offset;
                    if (!e.ask.withdrawn) row["ask_offset"] = e.ask.offset;
                    rows.push_back(row);
                }
                j["quotes"] = rows;
            }
            out.stream() << j.dump(2) << "\n";
            out.summary() << "asymptotic: image_condition_ok="
                          << (limits.image_condition_ok ? "true" : "false") << "\n";
        } else if (app.got_subcommand(mc_cmd)) {
            const mmq::Vec q = parse_q(q_text, spec.d());
            const mmq::RiccatiSolution sol = mmq::solve_closed_form(spec);
            const mmq::CoeffSet coeffs = mmq::taylor_coeff_set(spec);
            const auto est = mmq::estimate_eta(spec, coeffs, sol, t_arg, q, paths, seed);
            json j{{"mean", est.mean},
                   {"stderr", est.std_error},
                   {"n", est.n_paths},
                   {"clamp_events", est.clamp_events},
                   {"majorant_violations", est.majorant_violations},
                   {"seed", est.seed},
                   {"theta_check", sol.theta_check(t_arg, q)},
                   {"corrected_theta", mmq::corrected_theta(sol, est, t_arg, q)}};
            out.stream() << j.dump(2) << "\n";
            out.summary() << "mc-correct: mean=" << est.mean << " stderr=" << est.std_error
                          << " n=" << est.n_paths << "\n";
        } else if (app.got_subcommand(sim_cmd)) {
            std::optional<mmq::RiccatiSolution> sol;
            std::optional<mmq::AsymptoticLimits> limits;
            std::optional<mmq::ThetaGrid> grid;
            const mmq::Strategy strat =
                make_strategy(strategy_name, spec, sol, limits, grid, dt);
            const auto results = mmq::simulate(spec, strat, paths, seed);
            const auto est = mmq::evaluate_objective(results, spec);
            double mean_trades = 0.0;
            long long violations = 0;
            for (const auto& r : results) {
                mean_trades += static_cast<double>(r.trades.size());
                violations += r.majorant_violations;
            }
            mean_trades /= static_cast<double>(results.size());
            json j{{"strategy", strategy_name},
                   {"objective", objective_json(est)},
                   {"mean_trades", mean_trades},
                   {"majorant_violations", violations},
                   {"seed", seed}};
            out.stream() << j.dump(2) << "\n";
            if (!trades_out.empty()) {
                std::ofstream tf(trades_out);
                if (!tf) throw mmq::IoError("cannot open output file: " + trades_out);
                mmq::export_trades_csv(results, log_path, tf);
            }
            out.summary() << "simulate: strategy=" << strategy_name << " objective=" << est.mean
                          << " +/- " << est.std_error << "\n";
        } else if (app.got_subcommand(cmp)) {
            std::optional<mmq::RiccatiSolution> sol;
            std::optional<mmq::AsymptoticLimits> limits;
            std::optional<mmq::ThetaGrid> grid;
            json j = json::array();
            for (const std::string& name : cmp_strategies) {
                const mmq::Strategy strat = make_strategy(name, spec, sol, limits, grid, dt);
                const auto results = mmq::simulate(spec, strat, paths, seed);
                const auto est = mmq::evaluate_objective(results, spec);
                double mean_trades = 0.0;
                for (const auto& r : results) mean_trades += static_cast<double>(r.trades.size());
                mean_trades /= static_cast<double>(results.size());
                j.push_back(json{{"strategy", name},
                                 {"objective", objective_json(est)},
                                 {"mean_trades", mean_trades}});
            }
            out.stream() << j.dump(2) << "\n";
            out.summary() << "compare: " << cmp_strategies.size() << " strategies, paths=" << paths
                          << " seed=" << seed << "\n";
        }
        return 0;
    } catch (const mmq::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const mmq::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const mmq::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
