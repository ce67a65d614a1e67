#pragma once

#include <fstream>
#include <set>
#include <string>

#include "json.hpp"
#include "perfolab/slln.hpp"

namespace perfolab {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

using nlohmann::json;

// unknown keys are errors: silent typos must not change a study
inline void check_keys(const json& j, const std::string& path,
                       const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError(path + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError(path + ": unknown key '" + it.key() + "'");
}

inline MarkLaw parse_mark_law(const json& j, const std::string& path) {
    check_keys(j, path, {"type", "rho0", "rho_min", "beta", "mu", "sigma", "rho_max", "inner"});
    const std::string type = j.at("type").get<std::string>();
    if (type == "constant") return MarkLaw::constant(j.at("rho0").get<double>());
    if (type == "pareto")
        return MarkLaw::pareto(j.at("rho_min").get<double>(), j.at("beta").get<double>());
    if (type == "lognormal")
        return MarkLaw::lognormal(j.at("mu").get<double>(), j.at("sigma").get<double>());
    if (type == "truncated")
        return MarkLaw::truncated(j.at("rho_max").get<double>(),
                                  parse_mark_law(j.at("inner"), path + ".inner"));
    throw ConfigError(path + ".type: unknown mark law '" + type + "'");
}

inline DomainDescriptor parse_domain(const json& j) {
    check_keys(j, "domain", {"shape", "dim", "half_widths", "radius"});
    const std::string shape = j.at("shape").get<std::string>();
    const int dim = j.at("dim").get<int>();
    if (dim < 1 || dim > kMaxDim) throw ConfigError("domain.dim must be 1..3");
    if (shape == "box") {
        Vec hw{};
        const auto arr = j.at("half_widths");
        if (!arr.is_array() || static_cast<int>(arr.size()) != dim)
            throw ConfigError("domain.half_widths must list one entry per dimension");
        for (int d = 0; d < dim; ++d) hw[d] = arr[d].get<double>();
        return DomainDescriptor::box(dim, hw);
    }
    if (shape == "ball") return DomainDescriptor::ball(dim, j.at("radius").get<double>());
    throw ConfigError("domain.shape must be 'box' or 'ball'");
}

}  // namespace detail

struct RunConfig {
    StudyConfig study;
    double mark_sum_exponent = 1.0;
};

inline RunConfig parse_config_json(const nlohmann::json& root) {
    using detail::check_keys;
    check_keys(root, "<root>",
               {"process", "domain", "scaling", "classify", "capacity", "study", "seed"});
    RunConfig rc;
    StudyConfig& cfg = rc.study;

    const auto& dom = root.at("domain");
    cfg.domain = detail::parse_domain(dom);

    const auto& proc = root.at("process");
    check_keys(proc, "process", {"lambda", "mark_law", "correlation"});
    cfg.lambda = proc.at("lambda").get<double>();
    if (proc.contains("mark_law"))
        cfg.mark_law = detail::parse_mark_law(proc.at("mark_law"), "process.mark_law");
    if (proc.contains("correlation")) {
        const auto& corr = proc.at("correlation");
        check_keys(corr, "process.correlation", {"type", "gamma_decay"});
        const std::string type = corr.at("type").get<std::string>();
        if (type == "independent") {
            cfg.correlation.kind = Correlation::Kind::Independent;
        } else if (type == "gaussian_copula") {
            cfg.correlation.kind = Correlation::Kind::GaussianCopula;
            cfg.correlation.gamma_decay = corr.at("gamma_decay").get<double>();
        } else {
            throw ConfigError("process.correlation.type unknown: " + type);
        }
    }

    double q = 2.0;
    if (root.contains("scaling")) {
        check_keys(root.at("scaling"), "scaling", {"q"});
        q = root.at("scaling").at("q").get<double>();
    }

    Integrand::Kind kind = Integrand::Kind::Model;
    double a = 0.0, p = 1.0;
    if (root.contains("capacity")) {
        const auto& cap = root.at("capacity");
        check_keys(cap, "capacity", {"integrand", "a", "p", "c1", "c2"});
        const std::string name = cap.at("integrand").get<std::string>();
        if (name == "model") {
            kind = Integrand::Kind::Model;
        } else if (name == "power_sum") {
            kind = Integrand::Kind::PowerSum;
            a = cap.value("a", 0.0);
            p = cap.value("p", 1.0);
        } else {
            throw ConfigError("capacity.integrand must be 'model' or 'power_sum'");
        }
    }
    cfg.model = kind == Integrand::Kind::Model
                    ? CapacityModel::model(cfg.domain.dim, q)
                    : CapacityModel::power_sum(cfg.domain.dim, q, a, p);

    if (root.contains("classify")) {
        const auto& cl = root.at("classify");
        check_keys(cl, "classify", {"M", "theta", "alpha_exponent"});
        cfg.M = cl.value("M", cfg.M);
        cfg.theta = cl.value("theta", cfg.theta);
        cfg.alpha_exponent = cl.value("alpha_exponent", cfg.alpha_exponent);
    }

    if (root.contains("study")) {
        const auto& st = root.at("study");
        check_keys(st, "study", {"eps_grid", "replicas", "bump", "p_exponent"});
        if (st.contains("eps_grid"))
            cfg.eps_grid = st.at("eps_grid").get<std::vector<double>>();
        cfg.replicas = st.value("replicas", cfg.replicas);
        rc.mark_sum_exponent = st.value("p_exponent", 1.0);
        if (st.contains("bump")) {
            const auto& b = st.at("bump");
            check_keys(b, "study.bump", {"centre", "width", "amplitude"});
            if (b.contains("centre")) {
                const auto arr = b.at("centre");
                for (int d = 0; d < cfg.domain.dim && d < static_cast<int>(arr.size()); ++d)
                    cfg.bump.centre[d] = arr[d].get<double>();
            }
            cfg.bump.width = b.value("width", cfg.bump.width);
            cfg.bump.amplitude = b.value("amplitude", cfg.bump.amplitude);
        }
    }
    if (root.contains("seed")) cfg.seed = root.at("seed").get<std::uint64_t>();

    cfg.validate();
    cfg.process_for(cfg.eps_grid.front(), 0).validate();
    StudyConfig probe = cfg;  // moment condition check against the exponents
    probe.process_for(cfg.eps_grid.front(), 0)
        .validate_for_exponents(cfg.model.n, cfg.model.q);
    return rc;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    try {
        return parse_config_json(root);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

}  // namespace perfolab
