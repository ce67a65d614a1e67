// Command-line front end: generate realizations, run convergence studies,
// and tabulate capacities.  Exit codes: 0 success, 1 usage or configuration
// error, 2 numerical non-convergence.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "perfolab/config.hpp"
#include "perfolab/csvio.hpp"

namespace fs = std::filesystem;
using namespace perfolab;

namespace {

constexpr const char* kVersion = "perfolab 1.0.0";

struct Manifest {
    std::string command;
    std::string config_path;
    nlohmann::json resolved;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::vector<std::string> outputs;
    std::map<std::string, double> timings_ms;

    // the manifest is written last, after every listed output exists
    void write(const fs::path& dir) const {
        for (const auto& f : outputs)
            if (!fs::exists(dir / f))
                throw std::runtime_error("missing output listed in manifest: " + f);
        nlohmann::json j;
        j["command"] = command;
        j["config"] = config_path;
        j["parameters"] = resolved;
        j["seed"] = seed;
        j["out_dir"] = out_dir;
        j["tool_version"] = kVersion;
        j["outputs"] = outputs;
        j["timings_ms"] = timings_ms;
        std::ofstream out(dir / "manifest.json");
        out << j.dump(2) << "\n";
    }
};

class StageTimer {
  public:
    explicit StageTimer(Manifest& m, std::string name)
        : manifest_(m), name_(std::move(name)), start_(clock::now()) {}
    ~StageTimer() {
        const auto ms = std::chrono::duration<double, std::milli>(clock::now() - start_);
        manifest_.timings_ms[name_] = ms.count();
    }

  private:
    using clock = std::chrono::steady_clock;
    Manifest& manifest_;
    std::string name_;
    clock::time_point start_;
};

nlohmann::json describe_config(const StudyConfig& cfg) {
    nlohmann::json j;
    j["lambda"] = cfg.lambda;
    j["mark_law"] = cfg.mark_law.describe();
    j["domain_dim"] = cfg.domain.dim;
    j["domain_volume"] = cfg.domain.volume();
    j["q"] = cfg.model.q;
    j["integrand"] =
        cfg.model.integrand.kind == Integrand::Kind::Model ? "model" : "power_sum";
    j["eps_grid"] = cfg.eps_grid;
    j["replicas"] = cfg.replicas;
    j["M"] = cfg.M;
    j["theta"] = cfg.theta;
    j["alpha_exponent"] = cfg.alpha_exponent;
    j["bump_width"] = cfg.bump.width;
    j["bump_amplitude"] = cfg.bump.amplitude;
    j["threads"] = cfg.threads;
    return j;
}

void write_study_json(const fs::path& path, const StudyReport& rep) {
    nlohmann::json j;
    j["kind"] = rep.kind;
    j["seed"] = rep.seed;
    j["extra_columns"] = rep.extra_columns;
    auto& rows = j["rows"];
    rows = nlohmann::json::array();
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        nlohmann::json r;
        r["eps"] = rep.rows[i].eps;
        r["replicas"] = rep.rows[i].replicas;
        r["mean"] = rep.rows[i].mean;
        r["stddev"] = rep.rows[i].stddev;
        r["target"] = rep.rows[i].target;
        r["rel_err"] = rep.rows[i].rel_err;
        if (i < rep.extra_values.size()) r["extras"] = rep.extra_values[i];
        rows.push_back(r);
    }
    std::ofstream out(path);
    out << j.dump(2) << "\n";
}

struct CommonFlags {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    std::vector<double> eps_grid;
    int replicas = 0;
};

RunConfig resolve(const CommonFlags& flags) {
    RunConfig rc = load_config(flags.config_path);
    if (flags.seed_set) rc.study.seed = flags.seed;
    if (!flags.eps_grid.empty()) rc.study.eps_grid = flags.eps_grid;
    if (flags.replicas > 0) rc.study.replicas = flags.replicas;
    rc.study.threads = flags.threads > 0 ? flags.threads : default_threads();
    rc.study.validate();
    return rc;
}

int run_generate(const CommonFlags& flags) {
    Manifest man;
    man.command = "generate";
    man.config_path = flags.config_path;
    man.out_dir = flags.out_dir;
    RunConfig rc;
    {
        StageTimer t(man, "parse");
        rc = resolve(flags);
    }
    man.seed = rc.study.seed;
    man.resolved = describe_config(rc.study);
    fs::create_directories(flags.out_dir);
    const double eps = rc.study.eps_grid.front();
    {
        StageTimer t(man, "sample_and_write");
        const auto real = sample_marks(sample_points(
            rc.study.process_for(eps, derive_seed(rc.study.seed, "generate", 0, 0))));
        write_realization_csv((fs::path(flags.out_dir) / "realization.csv").string(), real);
    }
    man.outputs = {"realization.csv"};
    man.write(flags.out_dir);
    std::cout << "generate: wrote realization.csv (eps=" << eps << ")\n";
    return 0;
}

int run_study(const std::string& kind, const CommonFlags& flags) {
    Manifest man;
    man.command = "study " + kind;
    man.config_path = flags.config_path;
    man.out_dir = flags.out_dir;
    RunConfig rc;
    {
        StageTimer t(man, "parse");
        rc = resolve(flags);
    }
    man.seed = rc.study.seed;
    man.resolved = describe_config(rc.study);
    fs::create_directories(flags.out_dir);

    StudyReport rep;
    {
        StageTimer t(man, "run");
        if (kind == "counting") {
            rep = counting_study(rc.study);
        } else if (kind == "marksum") {
            rep = mark_sum_study(rc.study, rc.mark_sum_exponent);
        } else if (kind == "negligible") {
            rep = negligible_subset_study(rc.study);
        } else if (kind == "integral") {
            rep = integral_slln_study(rc.study);
        } else if (kind == "capsum") {
            rep = capacity_sum_study(rc.study);
        } else if (kind == "gamma") {
            rep = gamma_gap_study(rc.study);
        } else {
            throw ConfigError("unknown study kind: " + kind);
        }
    }
    const std::string base = "report_" + kind;
    {
        StageTimer t(man, "write");
        write_study_csv((fs::path(flags.out_dir) / (base + ".csv")).string(), rep);
        write_study_json(fs::path(flags.out_dir) / (base + ".json"), rep);
    }
    man.outputs = {base + ".csv", base + ".json"};
    man.write(flags.out_dir);

    double worst = 0;
    for (const auto& row : rep.rows) worst = std::fmax(worst, row.rel_err);
    std::cout << "study " << kind << ": " << rep.rows.size()
              << " eps levels, worst relative error " << worst << "\n";
    return 0;
}

int run_capacity_table(int n, double q, const std::vector<double>& rhos,
                       const std::vector<std::string>& radii,
                       const std::vector<double>& zs, int nodes,
                       const CommonFlags& flags) {
    Manifest man;
    man.command = "capacity-table";
    man.config_path = flags.config_path.empty() ? "<flags>" : flags.config_path;
    man.out_dir = flags.out_dir;
    man.seed = flags.seed;
    man.resolved = {{"n", n}, {"q", q}, {"nodes", nodes}};
    fs::create_directories(flags.out_dir);
    const auto model = CapacityModel::model(n, q);

    CsvWriter w((fs::path(flags.out_dir) / "capacity_table.csv").string(),
                "perfolab.capacity_table.v1",
                {"n", "q", "rho", "theta", "K", "z", "value", "closed_form", "rel_err"});
    {
        StageTimer t(man, "run");
        for (double rho : rhos) {
            for (const auto& Rtext : radii) {
                const bool infinite = Rtext == "inf" || Rtext == "INF";
                const double R = infinite ? HUGE_VAL : std::stod(Rtext);
                if (!infinite && !(R >= 2 * rho))
                    throw ConfigError("outer radius must be at least 2 rho");
                for (double z : zs) {
                    double value, closed;
                    if (infinite) {
                        closed = phi_infinite(model, rho, z);
                        value = z == 0.0 ? 0.0 : phi_infinite(model, rho, z, true);
                    } else {
                        closed = model_truncated_value(n, q, rho, R, z);
                        value = phi_truncated(model, 1.0, R, rho, z, nodes);
                    }
                    const double rel =
                        closed != 0.0 ? std::fabs(value - closed) / std::fabs(closed) : 0.0;
                    w.write_row({static_cast<double>(n), q, rho, 1.0,
                                 infinite ? HUGE_VAL : R, z, value, closed, rel});
                }
            }
        }
    }
    man.outputs = {"capacity_table.csv"};
    man.write(flags.out_dir);
    std::cout << "capacity-table: wrote capacity_table.csv\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic homogenization laboratory for perforated domains"};
    app.set_version_flag("--version", kVersion);

    CommonFlags flags;
    std::string study_kind;
    int table_n = 3;
    double table_q = 2.0;
    int table_nodes = 2000;
    std::vector<double> table_rho = {1.0};
    std::vector<std::string> table_R = {"inf"};
    std::vector<double> table_z = {1.0};

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        auto* opt = cmd->add_option("--config", flags.config_path, "configuration file (JSON)");
        if (needs_config) opt->required();
        cmd->add_option("--out", flags.out_dir, "output directory");
        cmd->add_option("--seed", flags.seed, "root seed override")
            ->each([&](const std::string&) { flags.seed_set = true; });
        cmd->add_option("--threads", flags.threads, "worker threads (default: hardware)");
        cmd->add_option("--eps-grid", flags.eps_grid, "eps grid override (decreasing)");
        cmd->add_option("--replicas", flags.replicas, "replica count override");
    };

    auto* gen = app.add_subcommand("generate", "sample one marked realization to CSV");
    add_common(gen, true);

    auto* study = app.add_subcommand("study", "run a convergence study");
    study->add_option("--kind", study_kind,
                      "counting | marksum | negligible | integral | capsum | gamma")
        ->required();
    add_common(study, true);

    auto* table = app.add_subcommand("capacity-table", "tabulate solver vs closed forms");
    table->add_option("--n", table_n, "dimension");
    table->add_option("--q", table_q, "growth exponent (1 < q < n)");
    table->add_option("--rho", table_rho, "hole radii");
    table->add_option("--R", table_R, "outer radii, or 'inf'");
    table->add_option("--z", table_z, "boundary amplitudes");
    table->add_option("--nodes", table_nodes, "radial nodes for the solver");
    add_common(table, false);

    app.require_subcommand(1);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) return run_generate(flags);
        if (study->parsed()) return run_study(study_kind, flags);
        if (table->parsed())
            return run_capacity_table(table_n, table_q, table_rho, table_R, table_z,
                                      table_nodes, flags);
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
