// Command-line front end: mesh, fem solve, eigen, simulate, infer, sweep,
// rate-study and analyze.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "diffinv/error.hpp"
#include "diffinv/experiments.hpp"
#include "diffinv/fem.hpp"
#include "diffinv/laplace_eigen.hpp"
#include "diffinv/mesh.hpp"
#include "diffinv/model.hpp"
#include "diffinv/pcn.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace diffinv;

namespace {

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::optional<int> threads;
};

ExperimentConfig resolve_config(const Globals& g) {
    ExperimentConfig cfg = g.config.empty() ? ExperimentConfig{} : load_config(g.config);
    if (g.seed) {
        cfg.data.seed = *g.seed;
        cfg.pcn.seed = *g.seed;
    }
    if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
    if (g.threads) cfg.threads = *g.threads;
    cfg.validate();
    return cfg;
}

TriangularMesh mesh_from(const std::string& path, int nodes) {
    return path.empty() ? build_disk_mesh(nodes) : load_mesh(path);
}

// "const:<c>", "four-bumps" or a field CSV.
NodalField field_from(const std::string& spec, const TriangularMesh& mesh) {
    if (spec == "four-bumps") return ground_truth_field(mesh);
    if (spec.rfind("const:", 0) == 0) return NodalField::constant(mesh, std::stod(spec.substr(6)));
    return read_field_csv(spec, mesh);
}

ScalarFunction source_from(const std::string& spec) {
    if (spec.rfind("const:", 0) != 0) throw Error("source must be const:<value>, got " + spec);
    const double c = std::stod(spec.substr(6));
    return [c](Point2) { return c; };
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << text << '\n';
}

int cmd_infer(const Globals& g) {
    const ExperimentConfig cfg = resolve_config(g);
    const TriangularMesh mesh = make_mesh(cfg);
    const NodalField f0 = ground_truth_field(mesh);
    const ObservationSet obs = make_observations(cfg, mesh, f0, cfg.data.n, cfg.data.seed);
    const double scaling = scaling_for(cfg.prior, obs.n());
    const PriorSampler prior = make_prior(mesh, cfg.prior).rescaled(scaling);

    const fs::path dir = cfg.out_dir;
    const std::vector<std::pair<std::string, std::uint64_t>> seeds{{"data", cfg.data.seed}, {"chain", cfg.pcn.seed}};
    write_run_header(dir, cfg, mesh, std::span(&obs, 1), seeds);

    const InferenceResult r = run_inference(mesh, f0, obs, prior, cfg.link, cfg.pcn);
    write_trace_csv(dir / "trace.csv", r.chain.accepted, r.chain.loglik);
    write_field_csv(dir / "posterior_mean.csv", mesh, r.mean);
    write_field_csv(dir / "truth.csv", mesh, f0);
    std::optional<std::string> band_note;
    try {
        const auto [lo, hi] = credible_band(r.chain, prior, cfg.link, cfg.band_level);
        write_field_csv(dir / "band_lower.csv", mesh, lo);
        write_field_csv(dir / "band_upper.csv", mesh, hi);
    } catch (const Error& e) {
        band_note = e.what();
        std::cerr << "credible band skipped: " << e.what() << '\n';
    }

    json s = {{"acceptance_rate", r.acceptance},
              {"acceptance_rate_all", r.chain.acceptance_rate()},
              {"l2_error", r.l2_error},
              {"prediction_error", r.prediction_error},
              {"loglik_truth", r.loglik_truth},
              {"loglik_final", r.chain.loglik.back()},
              {"failed_solves", r.chain.failures},
              {"prior_dimension", prior.dimension()},
              {"prior_scaling", scaling},
              {"jitter", prior.jitter()},
              {"nodes", mesh.node_count()},
              {"n", obs.n()},
              {"seconds", r.chain.seconds}};
    if (band_note) s["band_error"] = *band_note;
    write_text(dir / "summary.json", s.dump(2));
    std::cout << "acceptance " << r.acceptance << "  L2 error " << r.l2_error << "  prediction error "
              << r.prediction_error << "  (" << r.chain.seconds << " s)\n";
    return 0;
}

int report_rate_study(const ExperimentConfig& cfg, const RateStudyResult& res, const std::string& table_name) {
    const fs::path dir = cfg.out_dir;
    const ObservationSet* none = nullptr;
    std::vector<std::pair<std::string, std::uint64_t>> seeds;
    for (const auto& a : res.arms) {
        const std::string tag = "n" + std::to_string(a.n) + "_r" + std::to_string(a.replication);
        seeds.emplace_back(tag + "_data", a.data_seed);
        seeds.emplace_back(tag + "_chain", a.chain_seed);
    }
    write_run_header(dir, cfg, make_mesh(cfg), std::span(none, 0), seeds);
    write_rate_csv(dir / table_name, res);
    for (const auto& a : res.arms) {
        if (!a.ok) continue;
        write_trace_csv(dir / ("trace_n" + std::to_string(a.n) + "_r" + std::to_string(a.replication) + ".csv"),
                        a.accepted, a.loglik);
    }
    write_text(dir / "summary.json", rate_summary_json(res));

    std::cout << std::setw(8) << "n" << std::setw(14) << "L2 error" << std::setw(14) << "pred. error" << '\n';
    for (std::size_t i = 0; i < res.n_values.size(); ++i) {
        std::cout << std::setw(8) << res.n_values[i] << std::setw(14) << res.mean_l2_error[i] << std::setw(14)
                  << res.mean_prediction_error[i] << '\n';
    }
    std::cout << "log-log slope: L2 " << res.l2_slope << ", prediction " << res.prediction_slope << '\n'
              << "theory: prediction exponent " << res.prediction_exponent << ", inversion exponent "
              << res.inversion_exponent << " (beta = " << res.beta << ")\n";
    const std::size_t failed = res.failed_arms();
    if (failed == 0) return 0;
    std::cerr << failed << " of " << res.arms.size() << " arms failed\n";
    return failed == res.arms.size() ? 1 : 2;
}

int cmd_analyze(const std::string& trace, int burn_in, const std::string& mean_field, const std::string& mesh_path,
                int nodes) {
    std::ifstream in(trace);
    if (!in) throw Error("cannot open " + trace);
    std::string line;
    std::getline(in, line);
    std::vector<char> acc;
    std::vector<double> ll;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        long h = 0;
        int a = 0;
        double l = 0.0;
        char c1 = 0, c2 = 0;
        if (!(ss >> h >> c1 >> a >> c2 >> l)) throw Error(trace + ": malformed row " + std::to_string(acc.size() + 2));
        acc.push_back(static_cast<char>(a != 0));
        ll.push_back(l);
    }
    if (acc.empty()) throw Error(trace + ": empty trace");
    if (burn_in < 0 || static_cast<std::size_t>(burn_in) >= acc.size()) throw Error("burn-in outside the trace");
    std::size_t accepted = 0;
    for (std::size_t h = static_cast<std::size_t>(burn_in); h < acc.size(); ++h) accepted += acc[h] ? 1 : 0;
    const std::size_t tail = acc.size() - acc.size() * 4 / 5;
    double tail_mean = 0.0;
    for (std::size_t h = acc.size() - tail; h < acc.size(); ++h) tail_mean += ll[h];
    tail_mean /= static_cast<double>(tail);

    json s = {{"steps", acc.size()},
              {"acceptance_rate", static_cast<double>(accepted) / static_cast<double>(acc.size() - burn_in)},
              {"loglik_final_20pct_mean", tail_mean}};
    if (!mean_field.empty()) {
        const TriangularMesh mesh = mesh_from(mesh_path, nodes);
        const NodalField fh = read_field_csv(mean_field, mesh);
        const NodalField f0 = ground_truth_field(mesh);
        s["l2_error"] = l2_error(fh, f0, mesh);
        s["prediction_error"] = prediction_error(mesh, fh, f0);
    }
    std::cout << s.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian recovery of a diffusivity from point observations of an elliptic PDE"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config, "JSON experiment configuration")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Seed for data and chain (overrides the config)");
    app.add_option("--out-dir", g.out_dir, "Output directory");
    app.add_option("--threads", g.threads, "Concurrent sweep arms")->check(CLI::PositiveNumber);

    std::string mesh_path, out, field = "const:1", source = "const:1", method = "fem", truth = "four-bumps";
    int nodes = 1981;
    double lambda_max = 1000.0, sigma = 0.001;
    std::size_t n = 1000;
    std::uint64_t data_seed = 7;

    auto* mesh_cmd = app.add_subcommand("mesh", "Mesh construction");
    mesh_cmd->require_subcommand(1);
    auto* build = mesh_cmd->add_subcommand("build-disk", "Triangulate the unit-area disk");
    build->add_option("--nodes", nodes, "Target node count")->check(CLI::Range(3, 10000000));
    build->add_option("--out", out, "Mesh file")->required();
    build->callback([&] {
        const TriangularMesh m = build_disk_mesh(nodes);
        save_mesh(out, m);
        std::cout << m.node_count() << " nodes, " << m.triangle_count() << " triangles, area " << m.total_area()
                  << '\n';
    });

    auto* fem_cmd = app.add_subcommand("fem", "Forward solver");
    fem_cmd->require_subcommand(1);
    auto* solve = fem_cmd->add_subcommand("solve", "Solve div(f grad u) = s with u = 0 on the boundary");
    solve->add_option("--mesh", mesh_path, "Mesh file (default: disk with --nodes)");
    solve->add_option("--nodes", nodes, "Disk mesh size when no mesh file is given");
    solve->add_option("--field", field, "Diffusivity: CSV, const:<c> or four-bumps");
    solve->add_option("--source", source, "Source term const:<c>");
    solve->add_option("--out", out, "Solution CSV")->required();
    solve->callback([&] {
        const TriangularMesh m = mesh_from(mesh_path, nodes);
        const ForwardSolution sol = solve_forward(m, field_from(field, m), source_from(source));
        write_field_csv(out, m, sol.u);
        std::cout << "relative residual " << sol.residual_norm / std::max(sol.load_norm, 1e-300) << '\n';
    });

    auto* eigen_cmd = app.add_subcommand("eigen", "Dirichlet-Laplacian eigenpairs");
    eigen_cmd->add_option("--mesh", mesh_path, "Mesh file (default: disk with --nodes)");
    eigen_cmd->add_option("--nodes", nodes, "Disk mesh size when no mesh file is given");
    eigen_cmd->add_option("--lambda-max", lambda_max, "Eigenvalue cap")->check(CLI::PositiveNumber);
    eigen_cmd->add_option("--method", method, "fem or analytic")->check(CLI::IsMember({"fem", "analytic"}));
    eigen_cmd->add_option("--out", out, "Basis CSV: lambda then nodal values per row")->required();
    eigen_cmd->callback([&] {
        const TriangularMesh m = mesh_from(mesh_path, nodes);
        const EigenBasis b = method == "fem" ? eigen_fem(m, lambda_max)
                                             : eigen_disk_analytic(kUnitDiskRadius, lambda_max).on_mesh(m);
        write_basis_csv(out, b);
        std::cout << b.size() << " eigenvalues in [0, " << lambda_max << "]";
        if (b.size() >= 10) std::cout << ", Weyl fit r^2 " << weyl_fit(b.lambdas()).r_squared;
        std::cout << '\n';
    });

    auto add_simulate = [&](CLI::App* parent) {
        auto* sim = parent->add_subcommand("simulate", "Simulate observations of the four-bump truth");
        sim->add_option("--mesh", mesh_path, "Mesh file (default: disk with --nodes)");
        sim->add_option("--nodes", nodes, "Disk mesh size when no mesh file is given");
        sim->add_option("--truth", truth, "Ground truth")->check(CLI::IsMember({"four-bumps"}));
        sim->add_option("--n", n, "Number of observations")->check(CLI::PositiveNumber);
        sim->add_option("--sigma", sigma, "Noise level")->check(CLI::NonNegativeNumber);
        sim->add_option("--seed", data_seed, "Data seed");
        sim->add_option("--out", out, "Observation CSV (x,y,value)")->required();
        sim->callback([&] {
            const TriangularMesh m = mesh_from(mesh_path, nodes);
            const std::uint64_t seed = g.seed.value_or(data_seed);
            save_observations(out, generate_data(m, ground_truth_field(m), unit_source, n, sigma, seed));
            std::cout << n << " observations written to " << out << '\n';
        });
    };
    add_simulate(&app);
    auto* model_cmd = app.add_subcommand("model", "Observation model");
    model_cmd->require_subcommand(1);
    add_simulate(model_cmd);

    int status = 0;
    app.add_subcommand("infer", "Run one pCN chain and write estimates")->callback([&] { status = cmd_infer(g); });

    app.add_subcommand("sweep", "Estimation error across sample sizes")->callback([&] {
        const ExperimentConfig cfg = resolve_config(g);
        status = report_rate_study(cfg, run_sweep(cfg), "table.csv");
    });

    std::vector<std::size_t> n_list;
    int replications = 1;
    auto* rate = app.add_subcommand("rate-study", "Replicated sweep with empirical and theoretical rates");
    rate->add_option("--n", n_list, "Sample sizes (default: the sweep list)");
    rate->add_option("--replications", replications, "Replications per n")->check(CLI::PositiveNumber);
    rate->callback([&] {
        const ExperimentConfig cfg = resolve_config(g);
        status = report_rate_study(cfg, run_rate_study(cfg, n_list, replications), "rate.csv");
    });

    std::string trace, mean_field;
    int burn_in = 1000;
    auto* analyze = app.add_subcommand("analyze", "Summarise a chain trace");
    analyze->add_option("--trace", trace, "Trace CSV (iteration,accepted,loglik)")->required();
    analyze->add_option("--burn-in", burn_in, "Discarded steps");
    analyze->add_option("--mean", mean_field, "Posterior mean field CSV, compared with the four-bump truth");
    analyze->add_option("--mesh", mesh_path, "Mesh file for --mean (default: disk with --nodes)");
    analyze->add_option("--nodes", nodes, "Disk mesh size when no mesh file is given");
    analyze->callback([&] { status = cmd_analyze(trace, burn_in, mean_field, mesh_path, nodes); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return status;
}
