// mdfcalc: scenario-driven front end for the blocking solvers, simulator and
// capacity planner.
//
// Exit codes: 0 success, 1 infeasible/unstable model or I/O failure,
// 2 malformed input (flags or scenario).

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mdf/cli/report.hpp"
#include "mdf/cli/scenario.hpp"
#include "mdf/mdf.hpp"

namespace {

using namespace mdf;
using namespace mdf::cli;

struct Options {
    std::string scenario;
    std::string output;
    std::string format;
    std::uint64_t seed = 0;
    std::string grid;
    std::string mode;
    double alpha = 1.0;
    double epsilon = 0.01;
    std::size_t capacity = 0;

    CLI::Option* seed_opt = nullptr;
    CLI::Option* alpha_opt = nullptr;
    CLI::Option* epsilon_opt = nullptr;
    CLI::Option* capacity_opt = nullptr;
};

struct Report {
    Table table;
    Json json;
    std::string summary;
    int exit_code = 0;
};

/// Flags override the scenario file.
void apply_overrides(const Options& o, Scenario& sc) {
    if (o.alpha_opt->count()) {
        if (!(o.alpha > 0.0 && o.alpha <= 1.0)) throw ScenarioError("--alpha must lie in (0, 1]", 0);
        sc.policy.alpha = o.alpha;
    }
    if (o.epsilon_opt->count()) {
        if (!(o.epsilon > 0.0 && o.epsilon <= 1.0)) throw ScenarioError("--epsilon must lie in (0, 1]", 0);
        sc.policy.epsilon = o.epsilon;
    }
    if (o.capacity_opt->count()) sc.policy.capacity = o.capacity;
    if (o.seed_opt->count()) sc.run.seed = o.seed;
    if (!o.grid.empty()) sc.run.grid = parse_grid(o.grid);
    if (!o.mode.empty()) sc.run.mode = parse_mode(o.mode, 0);
    if (auto* m = std::get_if<MdfModel>(&sc.model)) m->mode = sc.run.mode;
    if (!o.output.empty()) sc.run.output = o.output;
    if (!o.format.empty()) sc.run.format = o.format;
}

std::string output_format(const Scenario& sc) {
    if (sc.run.format) return *sc.run.format;
    const std::string out = sc.run.output.value_or("");
    if (out.size() >= 5 && out.compare(out.size() - 5, 5, ".json") == 0) return "json";
    return "csv";
}

std::size_t need_capacity(const Scenario& sc) {
    if (!sc.policy.capacity) throw ScenarioError("this command needs policy.capacity (or --capacity)", 0);
    return *sc.policy.capacity;
}

const MdfModel& need_mdf(const Scenario& sc, const char* cmd) {
    const auto* m = std::get_if<MdfModel>(&sc.model);
    if (!m) throw ScenarioError(std::string(cmd) + " needs an mdf model, got " + to_string(sc.kind), 0);
    return *m;
}

/// EMLM parameters of an emlm model, or the EMLM limit of an mdf model.
EmlmParams emlm_view(const Scenario& sc, const char* cmd) {
    if (const auto* e = std::get_if<EmlmParams>(&sc.model)) return *e;
    if (const auto* m = std::get_if<MdfModel>(&sc.model)) return emlm_equivalent(m->params, sc.mu, 1, 1.0);
    throw ScenarioError(std::string(cmd) + " needs an emlm or mdf model, got " + to_string(sc.kind), 0);
}

SimConfig sim_config(const Scenario& sc, const MdfModel& m) {
    SimConfig c{m.params};
    c.policy = sc.run.policy;
    c.alpha = sc.policy.alpha;
    c.capacity = sc.policy.capacity.value_or(1);
    c.slots = sc.run.slots.value_or(100000);
    c.burn_in = sc.run.burn_in;
    c.seed = sc.run.seed.value_or(0);
    c.replications = sc.run.replications.value_or(10);
    c.requirement_mode = sc.run.requirement_mode;
    c.threads = sc.run.threads.value_or(0);
    c.validate();
    return c;
}

Json pmf_json(const Pmf& p) {
    Json masses = Json::array();
    for (double x : p.masses()) masses.push_back(json_prob(x));
    return masses;
}

Report solve_emlm(const Scenario& sc) {
    EmlmParams p = emlm_view(sc, "solve-emlm");
    p.alpha = sc.policy.alpha;
    const Pmf q = kaufman_roberts_solve(p);
    Report r;
    r.table.header = {"j", "q"};
    for (std::size_t j = 0; j < q.size(); ++j) r.table.rows.push_back({std::to_string(j), format_real(clamp_prob(q[j]))});
    r.json = {{"model", "emlm"},
              {"offered_load", json_real(p.offered_load())},
              {"mean", json_real(q.mean())},
              {"tail_mass", json_prob(q.tail_mass())},
              {"q", pmf_json(q)}};
    r.summary = "mean demand = " + format_real(q.mean());
    if (sc.policy.capacity) {
        const double b = emlm_blocking(q, *sc.policy.capacity, p.alpha);
        r.json["capacity"] = *sc.policy.capacity;
        r.json["alpha"] = json_real(p.alpha);
        r.json["blocking"] = json_prob(b);
        r.summary += ", blocking = " + format_real(clamp_prob(b));
    }
    return r;
}

Report mdf_blocking(const Scenario& sc) {
    const MdfModel& m = need_mdf(sc, "mdf-blocking");
    const std::size_t c = need_capacity(sc);
    const Pmf s = stationary_pmf(m.params, m.mode);
    const double b = blocking_prob(s, c, sc.policy.alpha);
    Report r;
    r.table.header = {"C", "alpha", "mode", "blocking_mdf"};
    r.table.rows.push_back({std::to_string(c), format_real(sc.policy.alpha), std::string(to_string(m.mode)), format_real(clamp_prob(b))});
    r.json = {{"model", "mdf"},
              {"mode", to_string(m.mode)},
              {"capacity", c},
              {"alpha", json_real(sc.policy.alpha)},
              {"stay_prob", json_real(m.params.stay_prob)},
              {"stationary_rate", json_real(stationary_rate(m.params, m.mode))},
              {"mean_demand", json_real(s.mean())},
              {"blocking_mdf", json_prob(b)}};
    r.summary = "blocking = " + format_real(clamp_prob(b));
    return r;
}

Report timevar_blocking(const Scenario& sc) {
    const auto* m = std::get_if<TimevarModel>(&sc.model);
    if (!m) throw ScenarioError(std::string("timevar-blocking needs a timevar model, got ") + to_string(sc.kind), 0);
    const std::size_t c = need_capacity(sc);
    const double tol = tolerance_blocking(m->lambda_per_user, m->population, m->profile, c, sc.policy.alpha);
    const double non = nontolerance_blocking(m->lambda_per_user, m->population, m->profile, c);
    Report r;
    r.table.header = {"C", "alpha", "blocking_tolerance", "blocking_nontolerance"};
    r.table.rows.push_back({std::to_string(c), format_real(sc.policy.alpha), format_real(clamp_prob(tol)),
                            format_real(clamp_prob(non))});
    r.json = {{"model", "timevar"},
              {"capacity", c},
              {"alpha", json_real(sc.policy.alpha)},
              {"blocking_tolerance", json_prob(tol)},
              {"blocking_nontolerance", json_prob(non)}};
    r.summary = "blocking = " + format_real(clamp_prob(tol));
    return r;
}

Report delay_blocking_cmd(const Scenario& sc) {
    const auto* m = std::get_if<DelayChainParams>(&sc.model);
    if (!m) throw ScenarioError(std::string("delay-blocking needs a delay model, got ") + to_string(sc.kind), 0);
    DelayChainParams p = *m;
    p.capacity = need_capacity(sc);
    p.alpha = sc.policy.alpha;
    const Pmf pi = delay_stationary(p);
    const double b = tail_prob(pi, static_cast<double>(p.capacity) / p.alpha);
    Report r;
    r.table.header = {"C", "alpha", "mean_backlog", "blocking_delay"};
    r.table.rows.push_back(
        {std::to_string(p.capacity), format_real(p.alpha), format_real(pi.mean()), format_real(clamp_prob(b))});
    r.json = {{"model", "delay"},
              {"capacity", p.capacity},
              {"alpha", json_real(p.alpha)},
              {"increment_mean", json_real(p.increment.mean())},
              {"mean_backlog", json_real(pi.mean())},
              {"blocking_delay", json_prob(b)},
              {"stationary", pmf_json(pi)}};
    r.summary = "blocking = " + format_real(clamp_prob(b));
    return r;
}

Report simulate_cmd(const Scenario& sc) {
    const MdfModel& m = need_mdf(sc, "simulate");
    need_capacity(sc);
    const SimConfig cfg = sim_config(sc, m);
    const SimResult res = cfg.policy == Policy::delay ? simulate_delay(cfg) : simulate_tolerance(cfg);
    const double lo = clamp_prob(res.blocking_estimate - res.ci95_half_width);
    const double hi = clamp_prob(res.blocking_estimate + res.ci95_half_width);
    const char* policy = cfg.policy == Policy::delay ? "delay" : "tolerance";
    Report r;
    r.table.header = {"C",          "alpha", "policy", "blocking_sim_mean", "blocking_sim_ci95_lo", "blocking_sim_ci95_hi",
                      "replications", "slots_observed", "seed"};
    r.table.rows.push_back({std::to_string(cfg.capacity), format_real(cfg.alpha), policy,
                            format_real(clamp_prob(res.blocking_estimate)), format_real(lo), format_real(hi),
                            std::to_string(cfg.replications), std::to_string(res.slots_observed),
                            std::to_string(res.seed)});
    Json reps = Json::array();
    for (double e : res.replication_estimates) reps.push_back(json_prob(e));
    r.json = {{"capacity", cfg.capacity},
              {"alpha", json_real(cfg.alpha)},
              {"policy", policy},
              {"blocking_estimate", json_prob(res.blocking_estimate)},
              {"ci95_half_width", json_real(res.ci95_half_width)},
              {"slots_observed", res.slots_observed},
              {"seed", res.seed},
              {"replication_estimates", reps},
              {"mean_active_users", json_real(res.mean_active_users)},
              {"unstable", res.unstable},
              {"population_exceeded", res.population_exceeded},
              {"warnings", res.warnings},
              {"empirical_pmf", pmf_json(res.empirical_pmf)}};
    r.summary = "blocking = " + format_real(clamp_prob(res.blocking_estimate)) + " +/- " +
                format_real(res.ci95_half_width);
    for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
    if (res.unstable) {
        std::cerr << "error: simulated system is unstable\n";
        r.exit_code = 1;
    }
    return r;
}

PlanRequest plan_request(const Scenario& sc) {
    PlanRequest req{sc.model};
    req.alpha = sc.policy.alpha;
    req.epsilon = sc.policy.epsilon.value_or(0.01);
    req.c_start = sc.policy.c_start;
    req.search = sc.policy.search;
    return req;
}

Report plan_cmd(const Scenario& sc) {
    if (!sc.policy.epsilon) throw ScenarioError("plan needs policy.epsilon (or --epsilon)", 0);
    const PlanRequest req = plan_request(sc);
    const BlockingCurve curve(req);
    const std::size_t c = plan_capacity(req);
    const double b = curve(c);
    Report r;
    r.table.header = {"C", "blocking", "epsilon", "alpha"};
    r.table.rows.push_back({std::to_string(c), format_real(clamp_prob(b)), format_real(req.epsilon), format_real(req.alpha)});
    r.json = {{"model", to_string(sc.kind)},
              {"capacity", c},
              {"blocking", json_prob(b)},
              {"epsilon", json_real(req.epsilon)},
              {"alpha", json_real(req.alpha)}};
    r.summary = "C = " + std::to_string(c);
    return r;
}

Report sweep_cmd(const Scenario& sc) {
    if (!sc.run.grid) throw ScenarioError("sweep needs run.grid (or --grid a:b:step)", 0);
    if (sc.kind != ModelKind::emlm && sc.kind != ModelKind::mdf)
        throw ScenarioError(std::string("sweep needs an emlm or mdf model, got ") + to_string(sc.kind), 0);
    const PlanRequest req = plan_request(sc);
    std::optional<SimConfig> sim;
    if (sc.run.simulate) sim = sim_config(sc, need_mdf(sc, "simulated sweep"));
    const auto rows = sweep_curve(req, *sc.run.grid, sc.run.simulate, sim);

    const bool literal = sc.run.mode == RateMode::literal;
    Report r;
    r.table.header = {"C", "blocking_emlm", "blocking_mdf", "blocking_sim_mean", "blocking_sim_ci95_lo",
                      "blocking_sim_ci95_hi"};
    Json jrows = Json::array();
    for (const auto& row : rows) {
        const double mdf_col = literal ? row.blocking_mdf_literal : row.blocking_mdf_consistent;
        std::vector<std::string> cells{std::to_string(row.capacity), format_real(clamp_prob(row.blocking_emlm)),
                                       format_real(clamp_prob(mdf_col)), "", "", ""};
        Json jr = {{"capacity", row.capacity},
                   {"blocking_emlm", json_prob(row.blocking_emlm)},
                   {"blocking_mdf_consistent", json_prob(row.blocking_mdf_consistent)},
                   {"blocking_mdf_literal", json_prob(row.blocking_mdf_literal)}};
        if (row.blocking_sim_mean) {
            const double mean = *row.blocking_sim_mean, half = *row.blocking_sim_ci95;
            cells[3] = format_real(clamp_prob(mean));
            cells[4] = format_real(clamp_prob(mean - half));
            cells[5] = format_real(clamp_prob(mean + half));
            jr["blocking_sim_mean"] = json_prob(mean);
            jr["blocking_sim_ci95"] = json_real(half);
        }
        r.table.rows.push_back(std::move(cells));
        jrows.push_back(std::move(jr));
    }
    r.json = {{"model", to_string(sc.kind)}, {"mode", to_string(sc.run.mode)}, {"alpha", json_real(req.alpha)},
              {"rows", jrows}};
    r.summary = std::to_string(rows.size()) + " rows";
    return r;
}

Report convergence_cmd(const Scenario& sc) {
    const EmlmParams e = emlm_view(sc, "convergence");
    const std::size_t c = need_capacity(sc);
    const auto pts = convergence_report(e.lambda_per_user, e.mu, e.population, e.requirement, sc.run.slots_grid, c,
                                        sc.policy.alpha, sc.run.mode);
    Report r;
    r.table.header = {"slot", "stay_prob", "blocking_mdf", "blocking_emlm", "delta"};
    Json jrows = Json::array();
    for (const auto& p : pts) {
        r.table.rows.push_back({format_real(p.slot), format_real(p.stay_prob), format_real(clamp_prob(p.blocking_mdf)),
                                format_real(clamp_prob(p.blocking_emlm)), format_real(p.delta)});
        jrows.push_back({{"slot", json_real(p.slot)},
                         {"stay_prob", json_real(p.stay_prob)},
                         {"blocking_mdf", json_prob(p.blocking_mdf)},
                         {"blocking_emlm", json_prob(p.blocking_emlm)},
                         {"delta", json_real(p.delta)}});
    }
    r.json = {{"capacity", c}, {"alpha", json_real(sc.policy.alpha)}, {"mode", to_string(sc.run.mode)}, {"points", jrows}};
    r.summary = pts.empty() ? "no points" : "final delta = " + format_real(pts.back().delta);
    return r;
}

int run(const std::string& command, const Options& opts) {
    Scenario sc = load_scenario(opts.scenario);
    apply_overrides(opts, sc);

    Report r;
    if (command == "solve-emlm") r = solve_emlm(sc);
    else if (command == "mdf-blocking") r = mdf_blocking(sc);
    else if (command == "timevar-blocking") r = timevar_blocking(sc);
    else if (command == "delay-blocking") r = delay_blocking_cmd(sc);
    else if (command == "simulate") r = simulate_cmd(sc);
    else if (command == "plan") r = plan_cmd(sc);
    else if (command == "sweep") r = sweep_cmd(sc);
    else r = convergence_cmd(sc);

    const std::string path = sc.run.output.value_or("");
    emit_report(r.table, r.json, output_format(sc), path);
    if (!path.empty()) std::cout << r.summary << '\n';
    return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Blocking probability and capacity planning for multi-rate loss systems"};
    app.require_subcommand(1, 1);

    Options opts;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"solve-emlm", "Kaufman-Roberts occupancy distribution and blocking"},
        {"mdf-blocking", "stationary slotted-model blocking"},
        {"timevar-blocking", "blocking under a time-varying requirement profile"},
        {"delay-blocking", "stationary backlog blocking of the delay policy"},
        {"simulate", "Monte Carlo estimate of slotted-model blocking"},
        {"plan", "smallest capacity meeting the blocking target"},
        {"sweep", "blocking versus capacity table"},
        {"convergence", "slotted-model blocking against the EMLM limit as the slot shrinks"},
    };
    std::string chosen;
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--scenario", opts.scenario, "scenario file (YAML)")->required();
        sub->add_option("--output", opts.output, "report path (default: stdout)");
        sub->add_option("--format", opts.format, "report format")->check(CLI::IsMember({"csv", "json"}));
        opts.seed_opt = sub->add_option("--seed", opts.seed, "base seed of the simulation");
        sub->add_option("--grid", opts.grid, "capacity grid a:b:step");
        sub->add_option("--mode", opts.mode, "rate mode")->check(CLI::IsMember({"consistent", "literal"}));
        opts.alpha_opt = sub->add_option("--alpha", opts.alpha, "tolerance factor in (0, 1]");
        opts.epsilon_opt = sub->add_option("--epsilon", opts.epsilon, "blocking target in (0, 1]");
        opts.capacity_opt = sub->add_option("--capacity", opts.capacity, "capacity C");
        sub->callback([&chosen, name = name] { chosen = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    // Options of the chosen subcommand only.
    CLI::App* sub = app.get_subcommand(chosen);
    opts.seed_opt = sub->get_option("--seed");
    opts.alpha_opt = sub->get_option("--alpha");
    opts.epsilon_opt = sub->get_option("--epsilon");
    opts.capacity_opt = sub->get_option("--capacity");

    try {
        return run(chosen, opts);
    } catch (const ScenarioError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const YAML::Exception& e) {
        std::cerr << "error: line " << e.mark.line + 1 << ": " << e.msg << '\n';
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << '\n';
        return 1;
    } catch (const UnstableError& e) {
        std::cerr << "unstable: " << e.what() << '\n';
        return 1;
    } catch (const NonConvergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
