#include "invprox/config.hpp"

#include <json.hpp>

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace invprox {

using nlohmann::json;

namespace {

const std::vector<BuiltinSystem>& registry() {
    static const std::vector<BuiltinSystem> systems{
        {"example_sec7", 2, {{-1.0, 1.0}, {-1.0, 1.0}}, {"0.9*x1", "0.4*(sin(x2)+x1^2)+0.01*x2^2"}},
    };
    return systems;
}

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

double get_number(const json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError(where + ": expected a number");
    return v.get<double>();
}

std::int64_t get_integer(const json& v, const std::string& where, std::int64_t min_value) {
    if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer");
    const auto value = v.get<std::int64_t>();
    if (value < min_value) throw ConfigError(where + ": must be at least " + std::to_string(min_value));
    return value;
}

std::uint64_t get_seed(const json& v, const std::string& where) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        throw ConfigError(where + ": expected a nonnegative integer seed");
    return v.get<std::uint64_t>();
}

std::vector<std::string> get_expressions(const json& v, const std::string& where) {
    if (!v.is_array()) throw ConfigError(where + ": expected an array of expression strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_string()) throw ConfigError(where + "[" + std::to_string(i) + "]: expected a string");
        out.push_back(v[i].get<std::string>());
    }
    return out;
}

std::vector<Interval> get_domain(const json& v) {
    if (!v.is_array() || v.empty()) throw ConfigError("domain: expected a nonempty array of [lo, hi] pairs");
    std::vector<Interval> out;
    for (std::size_t k = 0; k < v.size(); ++k) {
        const std::string where = "domain[" + std::to_string(k) + "]";
        if (!v[k].is_array() || v[k].size() != 2) throw ConfigError(where + ": expected [lo, hi]");
        out.push_back({get_number(v[k][0], where), get_number(v[k][1], where)});
    }
    return out;
}

std::string locate(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

const BuiltinSystem& builtin_system(const std::string& name) {
    for (const auto& s : registry())
        if (s.name == name) return s;
    throw ConfigError("unknown built-in system '" + name + "'");
}

Space RunConfig::make_space() const {
    if (backend == BackendKind::quadrature) return QuadratureSpace(*domain, quad_order);
    const Snapshots s = read_snapshot_csv(snapshot_path.string());
    if (s.x.cols() != state_dim)
        throw ConfigError("snapshot file has state dimension " + std::to_string(s.x.cols()) + ", config says " +
                          std::to_string(state_dim));
    return EmpiricalSpace(s.x, s.y);
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config is not valid JSON at " + locate(text, e.byte > 0 ? e.byte - 1 : 0) + ": " + e.what());
    }
    check_keys(doc, "config",
               {"name", "system", "state_dim", "domain", "field", "backend", "dynamics", "dictionary", "tolerances",
                "oracle", "experiment"});

    RunConfig cfg;
    const BuiltinSystem* system = nullptr;
    if (doc.contains("name")) {
        if (!doc["name"].is_string()) throw ConfigError("name: expected a string");
        cfg.name = doc["name"].get<std::string>();
    }
    if (doc.contains("system")) {
        if (!doc["system"].is_string()) throw ConfigError("system: expected a string");
        system = &builtin_system(doc["system"].get<std::string>());
        if (doc.contains("dynamics")) throw ConfigError("dynamics: not allowed together with a built-in system");
    }

    if (doc.contains("state_dim"))
        cfg.state_dim = static_cast<int>(get_integer(doc["state_dim"], "state_dim", 1));
    else if (system)
        cfg.state_dim = system->state_dim;
    else
        throw ConfigError("state_dim: required");
    if (system && system->state_dim != cfg.state_dim)
        throw ConfigError("state_dim: does not match built-in system '" + system->name + "'");

    if (doc.contains("domain"))
        cfg.domain = Domain(get_domain(doc["domain"]));
    else if (system)
        cfg.domain = Domain(system->domain);
    if (cfg.domain && cfg.domain->dim() != cfg.state_dim)
        throw ConfigError("domain: expected " + std::to_string(cfg.state_dim) + " intervals");

    if (doc.contains("field")) {
        if (!doc["field"].is_string()) throw ConfigError("field: expected a string");
        if (doc["field"].get<std::string>() != "real")
            throw ConfigError("field: only \"real\" function spaces are supported by the backends");
    }

    if (!doc.contains("backend")) throw ConfigError("backend: required");
    const json& backend = doc["backend"];
    if (!backend.is_object() || !backend.contains("type") || !backend["type"].is_string())
        throw ConfigError("backend: expected an object with a string \"type\"");
    const std::string type = backend["type"].get<std::string>();
    if (type == "quadrature") {
        check_keys(backend, "backend", {"type", "order"});
        cfg.backend = BackendKind::quadrature;
        if (backend.contains("order"))
            cfg.quad_order = static_cast<int>(get_integer(backend["order"], "backend.order", 1));
        if (!cfg.domain) throw ConfigError("domain: required for the quadrature backend");
    } else if (type == "empirical") {
        check_keys(backend, "backend", {"type", "snapshots"});
        cfg.backend = BackendKind::empirical;
        if (!backend.contains("snapshots") || !backend["snapshots"].is_string())
            throw ConfigError("backend.snapshots: required path string for the empirical backend");
        std::filesystem::path p = backend["snapshots"].get<std::string>();
        cfg.snapshot_path = p.is_absolute() ? p : base_dir / p;
    } else {
        throw ConfigError("backend.type: expected \"quadrature\" or \"empirical\", got \"" + type + "\"");
    }

    if (doc.contains("dynamics"))
        cfg.dynamics_src = get_expressions(doc["dynamics"], "dynamics");
    else if (system)
        cfg.dynamics_src = system->dynamics;
    if (cfg.backend == BackendKind::quadrature && cfg.dynamics_src.empty())
        throw ConfigError("dynamics: required for the quadrature backend");

    if (!doc.contains("dictionary")) throw ConfigError("dictionary: required");
    cfg.dictionary_src = get_expressions(doc["dictionary"], "dictionary");
    if (cfg.dictionary_src.empty()) throw ConfigError("dictionary: must contain at least one expression");

    if (doc.contains("tolerances")) {
        const json& t = doc["tolerances"];
        check_keys(t, "tolerances", {"rank_tol", "quad_tol"});
        if (t.contains("rank_tol")) cfg.tolerances.rank_tol = get_number(t["rank_tol"], "tolerances.rank_tol");
        if (t.contains("quad_tol")) cfg.tolerances.quad_tol = get_number(t["quad_tol"], "tolerances.quad_tol");
        if (!(cfg.tolerances.rank_tol > 0.0 && cfg.tolerances.rank_tol < 1.0))
            throw ConfigError("tolerances.rank_tol: must lie in (0, 1)");
        if (!(cfg.tolerances.quad_tol > 0.0)) throw ConfigError("tolerances.quad_tol: must be positive");
    }
    if (doc.contains("oracle")) {
        const json& o = doc["oracle"];
        check_keys(o, "oracle", {"n_samples", "seed", "refine_steps"});
        if (o.contains("n_samples"))
            cfg.oracle.n_samples = static_cast<std::size_t>(get_integer(o["n_samples"], "oracle.n_samples", 1));
        if (o.contains("seed")) cfg.oracle.seed = get_seed(o["seed"], "oracle.seed");
        if (o.contains("refine_steps"))
            cfg.oracle.refine_steps = static_cast<int>(get_integer(o["refine_steps"], "oracle.refine_steps", 0));
    }
    if (doc.contains("experiment")) {
        const json& e = doc["experiment"];
        check_keys(e, "experiment", {"n_trajectories", "horizon", "sampling_seed"});
        if (e.contains("n_trajectories"))
            cfg.experiment.n_trajectories =
                static_cast<int>(get_integer(e["n_trajectories"], "experiment.n_trajectories", 1));
        if (e.contains("horizon"))
            cfg.experiment.horizon = static_cast<int>(get_integer(e["horizon"], "experiment.horizon", 0));
        if (e.contains("sampling_seed"))
            cfg.experiment.sampling_seed = get_seed(e["sampling_seed"], "experiment.sampling_seed");
    }

    for (std::size_t i = 0; i < cfg.dictionary_src.size(); ++i) {
        try {
            cfg.atoms.push_back(Expr::parse(cfg.dictionary_src[i], cfg.state_dim));
        } catch (const ParseError& e) {
            throw ConfigError("dictionary[" + std::to_string(i) + "]: " + e.what());
        }
    }
    if (!cfg.dynamics_src.empty()) {
        if (static_cast<int>(cfg.dynamics_src.size()) != cfg.state_dim)
            throw ConfigError("dynamics: expected " + std::to_string(cfg.state_dim) + " components, got " +
                              std::to_string(cfg.dynamics_src.size()));
        std::vector<Expr> comps;
        for (std::size_t i = 0; i < cfg.dynamics_src.size(); ++i) {
            try {
                comps.push_back(Expr::parse(cfg.dynamics_src[i], cfg.state_dim));
            } catch (const ParseError& e) {
                throw ConfigError("dynamics[" + std::to_string(i) + "]: " + e.what());
            }
        }
        cfg.dynamics = DynamicsMap(std::move(comps));
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.parent_path());
}

}  // namespace invprox
