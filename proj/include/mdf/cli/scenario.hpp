#pragma once

// Scenario files: YAML with one model section, an optional policy section and
// an optional run section. See scenarios/README.md for the schema.

#include <yaml-cpp/yaml.h>

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdf/mdf.hpp"

namespace mdf::cli {

/// Malformed scenario or flag; carries the 1-based source line when known.
class ScenarioError : public std::runtime_error {
  public:
    ScenarioError(const std::string& what, int line)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    [[nodiscard]] int line() const noexcept { return line_; }

  private:
    int line_;
};

enum class ModelKind { emlm, mdf, timevar, delay };

inline const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::emlm: return "emlm";
        case ModelKind::mdf: return "mdf";
        case ModelKind::timevar: return "timevar";
        case ModelKind::delay: return "delay";
    }
    return "?";
}

struct PolicySection {
    double alpha = 1.0;
    std::optional<std::size_t> capacity;
    std::optional<double> epsilon;
    std::optional<std::size_t> c_start;
    SearchMode search = SearchMode::linear;
};

struct RunSection {
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> slots;
    std::optional<std::uint64_t> burn_in;
    std::optional<std::size_t> replications;
    std::optional<std::size_t> threads;
    std::optional<std::vector<std::size_t>> grid;
    std::optional<std::string> output;
    std::optional<std::string> format;
    RateMode mode = RateMode::consistent;
    Policy policy = Policy::tolerance;
    RequirementMode requirement_mode = RequirementMode::redraw;
    bool simulate = false;
    std::vector<double> slots_grid{0.1, 0.01, 0.001};
};

struct Scenario {
    ModelKind kind = ModelKind::emlm;
    PlanModel model{DelayChainParams{}};
    double mu = 0.0;  // mdf model: mean holding rate, given or implied by stay_prob
    PolicySection policy;
    RunSection run;
};

/// "a:b:step" -> {a, a+step, ..., <= b}.
inline std::vector<std::size_t> parse_grid(const std::string& text, int line = 0) {
    std::vector<unsigned long long> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) {
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            if (item.empty() || item[0] == '-') throw std::invalid_argument(item);
            v = std::stoull(item, &used);
        } catch (const std::exception&) {
            throw ScenarioError("grid '" + text + "' must read a:b:step with non-negative integers", line);
        }
        if (used != item.size()) throw ScenarioError("grid '" + text + "' must read a:b:step", line);
        parts.push_back(v);
    }
    if (parts.size() != 3) throw ScenarioError("grid '" + text + "' must read a:b:step", line);
    if (parts[2] == 0) throw ScenarioError("grid step must be positive", line);
    std::vector<std::size_t> grid;
    for (auto c = parts[0]; c <= parts[1]; c += parts[2]) grid.push_back(static_cast<std::size_t>(c));
    return grid;
}

inline RateMode parse_mode(const std::string& v, int line) {
    if (v == "consistent") return RateMode::consistent;
    if (v == "literal") return RateMode::literal;
    throw ScenarioError("mode must be consistent or literal, got '" + v + "'", line);
}

namespace detail {

inline int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

template <class T>
T as(const YAML::Node& n, const char* what) {
    try {
        return n.as<T>();
    } catch (const YAML::Exception&) {
        throw ScenarioError(std::string(what) + ": unexpected value '" + (n.IsScalar() ? n.Scalar() : "...") + "'",
                            line_of(n));
    }
}

inline double as_real(const YAML::Node& n, const char* what) { return as<double>(n, what); }

inline std::uint64_t as_count(const YAML::Node& n, const char* what) {
    if (n.IsScalar() && !n.Scalar().empty() && n.Scalar()[0] == '-')
        throw ScenarioError(std::string(what) + " must be a non-negative integer", line_of(n));
    return as<std::uint64_t>(n, what);
}

/// Mapping with a closed set of keys.
class Section {
  public:
    Section(const YAML::Node& node, std::string name, std::set<std::string> allowed) : node_(node), name_(std::move(name)) {
        if (!node.IsMap()) throw ScenarioError("'" + name_ + "' must be a mapping", line_of(node));
        for (const auto& kv : node) {
            const auto key = kv.first.as<std::string>();
            if (!allowed.contains(key)) throw ScenarioError("unknown key '" + key + "' in '" + name_ + "'", line_of(kv.first));
        }
    }
    [[nodiscard]] bool has(const char* key) const { return static_cast<bool>(node_[key]); }
    [[nodiscard]] YAML::Node get(const char* key) const {
        const YAML::Node n = node_[key];
        if (!n) throw ScenarioError("'" + name_ + "' needs '" + key + "'", line_of(node_));
        return n;
    }
    [[nodiscard]] YAML::Node opt(const char* key) const { return node_[key]; }
    [[nodiscard]] int line() const { return line_of(node_); }

  private:
    YAML::Node node_;
    std::string name_;
};

/// Runs a type constructor and rewrites its invariant failures with a line.
template <class F>
auto checked(const YAML::Node& where, F&& make) {
    try {
        return make();
    } catch (const ScenarioError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(e.what(), line_of(where));
    } catch (const std::domain_error& e) {
        throw ScenarioError(e.what(), line_of(where));
    }
}

inline std::vector<double> real_list(const YAML::Node& n, const char* what) {
    if (!n.IsSequence()) throw ScenarioError(std::string(what) + " must be a list", line_of(n));
    std::vector<double> v;
    for (const auto& x : n) v.push_back(as_real(x, what));
    return v;
}

inline RequirementDistribution requirement(const YAML::Node& n) {
    const Section s(n, "requirement", {"sizes", "probs", "point"});
    if (s.has("point")) {
        if (s.has("sizes") || s.has("probs")) throw ScenarioError("requirement: 'point' excludes 'sizes'/'probs'", s.line());
        const auto b = as_count(s.get("point"), "requirement.point");
        return checked(n, [&] { return RequirementDistribution::point(b); });
    }
    std::vector<std::size_t> sizes;
    const YAML::Node sn = s.get("sizes");
    if (!sn.IsSequence()) throw ScenarioError("requirement.sizes must be a list", line_of(sn));
    for (const auto& x : sn) sizes.push_back(as_count(x, "requirement.sizes"));
    const auto probs = real_list(s.get("probs"), "requirement.probs");
    return checked(s.get("probs"), [&] { return RequirementDistribution(sizes, probs); });
}

inline Pmf law(const YAML::Node& n, const char* what) {
    const auto masses = real_list(n, what);
    Pmf p = checked(n, [&] { return Pmf(masses); });
    if (!is_normalized(p)) throw ScenarioError(std::string(what) + " must sum to 1", line_of(n));
    return p;
}

inline void parse_model(const YAML::Node& node, Scenario& sc) {
    if (!node.IsMap() || node.size() != 1)
        throw ScenarioError("'model' must hold exactly one of emlm, mdf, timevar, delay", line_of(node));
    const auto kind = node.begin()->first.as<std::string>();
    const YAML::Node body = node.begin()->second;

    if (kind == "emlm") {
        const Section s(body, "emlm", {"lambda", "population", "mu", "requirement"});
        EmlmParams p{as_real(s.get("lambda"), "lambda"), as_count(s.get("population"), "population"),
                     as_real(s.get("mu"), "mu"), requirement(s.get("requirement")), 1.0, 1};
        checked(body, [&] { p.validate(); return 0; });
        sc.kind = ModelKind::emlm;
        sc.mu = p.mu;
        sc.model = std::move(p);
    } else if (kind == "mdf") {
        const Section s(body, "mdf", {"lambda", "population", "slot", "stay_prob", "mu", "requirement"});
        const double slot = as_real(s.get("slot"), "slot");
        if (s.has("stay_prob") == s.has("mu")) throw ScenarioError("mdf needs exactly one of 'stay_prob', 'mu'", s.line());
        double p_stay = 0.0;
        if (s.has("mu")) {
            const double mu = as_real(s.get("mu"), "mu");
            p_stay = checked(s.get("mu"), [&] { return slot_survival_prob(mu, slot); });
        } else {
            p_stay = as_real(s.get("stay_prob"), "stay_prob");
        }
        MdfParams p{as_real(s.get("lambda"), "lambda"), as_count(s.get("population"), "population"), slot, p_stay,
                    requirement(s.get("requirement"))};
        checked(body, [&] { p.validate(); return 0; });
        sc.kind = ModelKind::mdf;
        sc.mu = s.has("mu") ? as_real(s.get("mu"), "mu") : implied_mu(p_stay, slot);
        sc.model = MdfModel{std::move(p), RateMode::consistent};
    } else if (kind == "timevar") {
        const Section s(body, "timevar", {"lambda", "population", "profile"});
        const YAML::Node prof = s.get("profile");
        if (!prof.IsSequence()) throw ScenarioError("timevar.profile must be a list of laws", line_of(prof));
        std::vector<Pmf> laws;
        for (const auto& l : prof) laws.push_back(law(l, "timevar.profile entry"));
        TimevarModel m{as_real(s.get("lambda"), "lambda"), as_count(s.get("population"), "population"),
                       checked(prof, [&] { return TimeVaryingProfile(laws); })};
        if (!(m.lambda_per_user >= 0.0)) throw ScenarioError("lambda must be >= 0", line_of(s.get("lambda")));
        sc.kind = ModelKind::timevar;
        sc.model = std::move(m);
    } else if (kind == "delay") {
        const Section s(body, "delay", {"increment", "lambda", "population", "requirement"});
        Pmf inc;
        if (s.has("increment")) {
            if (s.has("lambda") || s.has("population") || s.has("requirement"))
                throw ScenarioError("delay: 'increment' excludes lambda/population/requirement", s.line());
            inc = law(s.get("increment"), "delay.increment");
        } else {
            const double rate = as_real(s.get("lambda"), "lambda") *
                                static_cast<double>(as_count(s.get("population"), "population"));
            const auto req = requirement(s.get("requirement"));
            inc = checked(body, [&] { return compound_poisson_pmf(rate, req); });
        }
        sc.kind = ModelKind::delay;
        sc.model = DelayChainParams{std::move(inc), 1, 1.0};
    } else {
        throw ScenarioError("unknown model '" + kind + "' (expected emlm, mdf, timevar or delay)", line_of(node.begin()->first));
    }
}

inline void parse_policy(const YAML::Node& node, PolicySection& out) {
    const Section s(node, "policy", {"alpha", "capacity", "epsilon", "c_start", "search"});
    if (s.has("alpha")) out.alpha = as_real(s.get("alpha"), "alpha");
    if (!(out.alpha > 0.0 && out.alpha <= 1.0)) throw ScenarioError("alpha must lie in (0, 1]", s.line());
    if (s.has("capacity")) out.capacity = as_count(s.get("capacity"), "capacity");
    if (s.has("epsilon")) {
        out.epsilon = as_real(s.get("epsilon"), "epsilon");
        if (!(*out.epsilon > 0.0 && *out.epsilon <= 1.0))
            throw ScenarioError("epsilon must lie in (0, 1]", line_of(s.get("epsilon")));
    }
    if (s.has("c_start")) {
        out.c_start = as_count(s.get("c_start"), "c_start");
        if (*out.c_start < 1) throw ScenarioError("c_start must be >= 1", line_of(s.get("c_start")));
    }
    if (s.has("search")) {
        const auto v = as<std::string>(s.get("search"), "search");
        if (v == "linear") out.search = SearchMode::linear;
        else if (v == "bisection") out.search = SearchMode::bisection;
        else throw ScenarioError("search must be linear or bisection", line_of(s.get("search")));
    }
}

inline void parse_run(const YAML::Node& node, RunSection& out) {
    const Section s(node, "run",
                    {"seed", "slots", "burn_in", "replications", "threads", "grid", "output", "format", "mode", "policy",
                     "requirement_mode", "simulate", "slots_grid"});
    if (s.has("seed")) out.seed = as_count(s.get("seed"), "seed");
    if (s.has("slots")) out.slots = as_count(s.get("slots"), "slots");
    if (s.has("burn_in")) out.burn_in = as_count(s.get("burn_in"), "burn_in");
    if (s.has("replications")) {
        out.replications = as_count(s.get("replications"), "replications");
        if (*out.replications < 1) throw ScenarioError("replications must be >= 1", line_of(s.get("replications")));
    }
    if (s.has("threads")) out.threads = as_count(s.get("threads"), "threads");
    if (s.has("grid")) {
        const YAML::Node g = s.get("grid");
        if (g.IsSequence()) {
            std::vector<std::size_t> grid;
            for (const auto& c : g) grid.push_back(as_count(c, "grid"));
            out.grid = std::move(grid);
        } else {
            out.grid = parse_grid(as<std::string>(g, "grid"), line_of(g));
        }
    }
    if (s.has("output")) out.output = as<std::string>(s.get("output"), "output");
    if (s.has("format")) {
        out.format = as<std::string>(s.get("format"), "format");
        if (*out.format != "csv" && *out.format != "json")
            throw ScenarioError("format must be csv or json", line_of(s.get("format")));
    }
    if (s.has("mode")) out.mode = parse_mode(as<std::string>(s.get("mode"), "mode"), line_of(s.get("mode")));
    if (s.has("policy")) {
        const auto v = as<std::string>(s.get("policy"), "policy");
        if (v == "tolerance") out.policy = Policy::tolerance;
        else if (v == "delay") out.policy = Policy::delay;
        else throw ScenarioError("run.policy must be tolerance or delay", line_of(s.get("policy")));
    }
    if (s.has("requirement_mode")) {
        const auto v = as<std::string>(s.get("requirement_mode"), "requirement_mode");
        if (v == "redraw") out.requirement_mode = RequirementMode::redraw;
        else if (v == "fixed_at_arrival") out.requirement_mode = RequirementMode::fixed_at_arrival;
        else throw ScenarioError("requirement_mode must be redraw or fixed_at_arrival", line_of(s.get("requirement_mode")));
    }
    if (s.has("simulate")) out.simulate = as<bool>(s.get("simulate"), "simulate");
    if (s.has("slots_grid")) {
        out.slots_grid = real_list(s.get("slots_grid"), "slots_grid");
        for (std::size_t i = 0; i < out.slots_grid.size(); ++i) {
            if (!(out.slots_grid[i] > 0.0) || (i > 0 && out.slots_grid[i] >= out.slots_grid[i - 1]))
                throw ScenarioError("slots_grid must be positive and strictly decreasing", line_of(s.get("slots_grid")));
        }
    }
}

}  // namespace detail

inline Scenario parse_scenario(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ScenarioError(e.msg, e.mark.line + 1);
    }
    Scenario sc;
    const detail::Section top(root, "scenario", {"model", "policy", "run"});
    detail::parse_model(top.get("model"), sc);
    if (top.has("policy")) detail::parse_policy(top.get("policy"), sc.policy);
    if (top.has("run")) detail::parse_run(top.get("run"), sc.run);
    if (auto* m = std::get_if<MdfModel>(&sc.model)) m->mode = sc.run.mode;
    return sc;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open scenario '" + path + "'", 0);
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_scenario(buf.str());
    } catch (const ScenarioError& e) {
        throw ScenarioError(path + ": " + e.what(), 0);
    }
}

}  // namespace mdf::cli
