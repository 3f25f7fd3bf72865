#include "diffinv/experiments.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "diffinv/error.hpp"
#include "diffinv/fem.hpp"
#include "diffinv/hash.hpp"

namespace diffinv {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void config_error(const std::string& key, const std::string& what) {
    throw Error("config: " + key + ": " + what);
}

// Reads the keys of one section, rejecting anything not listed.
class Section {
public:
    Section(const json& parent, std::string name) : name_(std::move(name)) {
        if (!parent.contains(name_)) return;
        node_ = &parent.at(name_);
        if (!node_->is_object()) config_error(name_, "expected an object");
    }
    explicit Section(const json& root) : node_(&root) {
        if (!root.is_object()) config_error("<root>", "expected an object");
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.emplace_back(key);
        if (!node_ || !node_->contains(key)) return;
        try {
            out = node_->at(key).get<T>();
        } catch (const json::exception& e) {
            config_error(path(key), e.what());
        }
    }
    bool has(const char* key) const { return node_ && node_->contains(key); }
    std::string path(const char* key) const { return name_.empty() ? key : name_ + "." + key; }

    void finish(std::initializer_list<const char*> subsections = {}) const {
        if (!node_) return;
        for (const auto& [k, v] : node_->items()) {
            bool known = false;
            for (const auto& s : seen_) known = known || s == k;
            for (const char* s : subsections) known = known || k == s;
            if (!known) config_error(path(k.c_str()), "unknown key");
        }
    }

private:
    std::string name_;
    const json* node_ = nullptr;
    std::vector<std::string> seen_;
};

const char* to_string(PriorKind k) { return k == PriorKind::matern ? "matern" : "series"; }
const char* to_string(BasisKind k) { return k == BasisKind::fem ? "fem" : "analytic"; }
const char* to_string(LinkKind k) { return k == LinkKind::exp ? "exp" : "shifted_exp"; }

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << std::setprecision(17);
    return out;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return kNaN;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

void ExperimentConfig::validate() const {
    if (mesh.file.empty() && mesh.target_nodes < 3) config_error("mesh.nodes", "must be at least 3");
    if (!mesh.file.empty() && !std::filesystem::exists(mesh.file)) config_error("mesh.file", mesh.file + " not found");
    if (!data.file.empty() && !std::filesystem::exists(data.file)) config_error("data.file", data.file + " not found");
    if (data.n == 0) config_error("data.n", "must be positive");
    if (!(data.sigma > 0.0)) config_error("data.sigma", "must be positive");
    if (!(prior.alpha > 0.0)) config_error("prior.alpha", "must be positive");
    if (prior.kind == PriorKind::matern && !(prior.ell > 0.0)) config_error("prior.ell", "must be positive");
    if (prior.kind == PriorKind::series && !(prior.lambda_max > 0.0)) {
        config_error("prior.lambda_max", "must be positive");
    }
    if (link.kind == LinkKind::shifted_exp && !(link.f_min > 0.0)) config_error("link.f_min", "must be positive");
    try {
        pcn.validate();
    } catch (const Error& e) {
        config_error("pcn", e.what());
    }
    const auto& ns = sweep.n_values;
    if (ns.empty()) config_error("sweep.n", "empty");
    for (std::size_t i = 0; i < ns.size(); ++i) {
        if (ns[i] == 0) config_error("sweep.n", "values must be positive");
        if (i > 0 && ns[i] <= ns[i - 1]) config_error("sweep.n", "values must be strictly ascending");
    }
    if (sweep.deltas.size() != ns.size()) config_error("sweep.delta", "needs one step size per n");
    for (double d : sweep.deltas) {
        if (!(d > 0.0 && d < 0.5)) config_error("sweep.delta", "values must lie in (0, 1/2)");
    }
    if (sweep.replications < 1) config_error("sweep.replications", "must be at least 1");
    if (!(band_level >= 0.0 && band_level < 1.0)) config_error("band_level", "must lie in [0, 1)");
    if (threads < 1) config_error("threads", "must be at least 1");
}

ExperimentConfig parse_config(std::string_view json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(std::string("config: ") + e.what());
    }
    ExperimentConfig cfg;

    Section top(root);
    top.get("band_level", cfg.band_level);
    top.get("threads", cfg.threads);
    top.get("out_dir", cfg.out_dir);
    top.finish({"mesh", "data", "prior", "link", "pcn", "sweep"});

    Section mesh(root, "mesh");
    mesh.get("nodes", cfg.mesh.target_nodes);
    mesh.get("file", cfg.mesh.file);
    mesh.finish();

    Section data(root, "data");
    data.get("n", cfg.data.n);
    data.get("sigma", cfg.data.sigma);
    data.get("seed", cfg.data.seed);
    data.get("file", cfg.data.file);
    data.finish();

    Section prior(root, "prior");
    std::string kind = to_string(cfg.prior.kind), basis = to_string(cfg.prior.basis);
    prior.get("kind", kind);
    if (kind == "matern") {
        cfg.prior.kind = PriorKind::matern;
    } else if (kind == "series") {
        cfg.prior.kind = PriorKind::series;
        cfg.prior.alpha = 0.625;
        cfg.link = LinkFunction::exponential();
    } else {
        config_error("prior.kind", "expected matern or series, got " + kind);
    }
    prior.get("alpha", cfg.prior.alpha);
    prior.get("ell", cfg.prior.ell);
    prior.get("jitter", cfg.prior.jitter);
    prior.get("radial_taper", cfg.prior.radial_taper);
    prior.get("J", cfg.prior.J);
    prior.get("lambda_max", cfg.prior.lambda_max);
    prior.get("basis", basis);
    if (basis == "fem") {
        cfg.prior.basis = BasisKind::fem;
    } else if (basis == "analytic") {
        cfg.prior.basis = BasisKind::analytic;
    } else {
        config_error("prior.basis", "expected fem or analytic, got " + basis);
    }
    prior.get("scaling", cfg.prior.scaling);
    prior.finish();

    Section link(root, "link");
    std::string link_kind = to_string(cfg.link.kind);
    link.get("kind", link_kind);
    link.get("f_min", cfg.link.f_min);
    if (link_kind == "exp") {
        cfg.link = LinkFunction::exponential();
    } else if (link_kind == "shifted_exp") {
        cfg.link.kind = LinkKind::shifted_exp;
    } else {
        config_error("link.kind", "expected exp or shifted_exp, got " + link_kind);
    }
    link.finish();

    Section pcn(root, "pcn");
    pcn.get("delta", cfg.pcn.delta);
    pcn.get("iterations", cfg.pcn.iterations);
    pcn.get("burn_in", cfg.pcn.burn_in);
    pcn.get("seed", cfg.pcn.seed);
    pcn.get("thin", cfg.pcn.thin);
    pcn.get("max_consecutive_failures", cfg.pcn.max_consecutive_failures);
    pcn.finish();

    Section sweep(root, "sweep");
    sweep.get("n", cfg.sweep.n_values);
    sweep.get("delta", cfg.sweep.deltas);
    sweep.get("nested", cfg.sweep.nested);
    sweep.get("replications", cfg.sweep.replications);
    sweep.get("beta", cfg.sweep.beta);
    sweep.finish();

    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["mesh"] = {{"nodes", cfg.mesh.target_nodes}, {"file", cfg.mesh.file}};
    j["data"] = {{"n", cfg.data.n}, {"sigma", cfg.data.sigma}, {"seed", cfg.data.seed}, {"file", cfg.data.file}};
    j["prior"] = {{"kind", to_string(cfg.prior.kind)},
                  {"alpha", cfg.prior.alpha},
                  {"ell", cfg.prior.ell},
                  {"jitter", cfg.prior.jitter},
                  {"radial_taper", cfg.prior.radial_taper},
                  {"J", cfg.prior.J},
                  {"lambda_max", cfg.prior.lambda_max},
                  {"basis", to_string(cfg.prior.basis)},
                  {"scaling", cfg.prior.scaling}};
    j["link"] = {{"kind", to_string(cfg.link.kind)}, {"f_min", cfg.link.f_min}};
    j["pcn"] = {{"delta", cfg.pcn.delta},   {"iterations", cfg.pcn.iterations},
                {"burn_in", cfg.pcn.burn_in}, {"seed", cfg.pcn.seed},
                {"thin", cfg.pcn.thin},     {"max_consecutive_failures", cfg.pcn.max_consecutive_failures}};
    j["sweep"] = {{"n", cfg.sweep.n_values},
                  {"delta", cfg.sweep.deltas},
                  {"nested", cfg.sweep.nested},
                  {"replications", cfg.sweep.replications},
                  {"beta", cfg.sweep.beta}};
    j["band_level"] = cfg.band_level;
    j["threads"] = cfg.threads;
    j["out_dir"] = cfg.out_dir;
    return j.dump(2);
}

// ---------------------------------------------------------------------------

TriangularMesh make_mesh(const ExperimentConfig& cfg) {
    if (!cfg.mesh.file.empty()) return load_mesh(cfg.mesh.file);
    return build_disk_mesh(cfg.mesh.target_nodes);
}

ObservationSet make_observations(const ExperimentConfig& cfg, const TriangularMesh& mesh, const NodalField& f0,
                                 std::size_t n, std::uint64_t seed) {
    if (cfg.data.file.empty()) return generate_data(mesh, f0, unit_source, n, cfg.data.sigma, seed);
    ObservationSet all = load_observations(cfg.data.file, cfg.data.sigma);
    if (all.n() < n) {
        throw Error(cfg.data.file + " holds " + std::to_string(all.n()) + " observations, " + std::to_string(n) +
                    " requested");
    }
    return all.head(n);
}

EigenBasis make_series_basis(const TriangularMesh& mesh, const PriorSettings& prior) {
    if (prior.basis == BasisKind::analytic) {
        EigenBasis b = eigen_disk_analytic(kUnitDiskRadius, prior.lambda_max).on_mesh(mesh);
        if (prior.J > b.size()) {
            throw Error("analytic basis has " + std::to_string(b.size()) + " modes below lambda_max, J = " +
                        std::to_string(prior.J) + " requested");
        }
        return prior.J == 0 ? b : b.truncated(prior.J);
    }
    double cap = prior.lambda_max;
    if (prior.J > 0) {
        if (prior.J >= mesh.interior_nodes().size()) throw Error("J exceeds the number of interior nodes");
        while (count_eigenvalues_below(mesh, cap) < prior.J) cap *= 1.05;
        return eigen_fem(mesh, cap).truncated(prior.J);
    }
    return eigen_fem(mesh, cap);
}

PriorSampler make_prior(const TriangularMesh& mesh, const PriorSettings& prior) {
    if (prior.kind == PriorKind::matern) {
        return build_matern_sampler(mesh, MaternConfig{prior.alpha, prior.ell, prior.jitter, prior.radial_taper});
    }
    return build_series_sampler(SeriesPriorConfig{make_series_basis(mesh, prior), prior.alpha, 0});
}

double scaling_for(const PriorSettings& prior, std::size_t n) {
    return prior.scaling ? prior_scaling(n, prior.alpha, 2) : 1.0;
}

double prediction_error(const TriangularMesh& mesh, const NodalField& f_hat, const NodalField& f0) {
    ForwardSolver solver(mesh);
    const Eigen::VectorXd load = assemble_load(mesh, unit_source);
    const NodalField u_hat = solver.solve(f_hat, load).u;
    const NodalField u0 = solver.solve(f0, load).u;
    return l2_error(u_hat, u0, mesh);
}

InferenceResult run_inference(const TriangularMesh& mesh, const NodalField& f0, const ObservationSet& obs,
                              const PriorSampler& prior, const LinkFunction& link, const PcnConfig& pcn) {
    LogLikelihood ll(mesh, obs, unit_source);
    InferenceResult out;
    out.loglik_truth = ll(f0);
    out.chain = run_chain(pcn, prior, [&ll](const NodalField& f) { return ll(f); }, link);
    out.mean = posterior_mean(out.chain, prior, link);
    out.l2_error = l2_error(out.mean, f0, mesh);
    out.prediction_error = prediction_error(mesh, out.mean, f0);
    out.acceptance = out.chain.post_burn_in_acceptance();
    return out;
}

// ---------------------------------------------------------------------------

double prediction_rate_exponent(double alpha, int dim) { return (alpha + 1.0) / (2.0 * alpha + 2.0 + dim); }

double inversion_rate_exponent(double alpha, double beta, int dim) {
    return (alpha + 1.0) * (beta - 1.0) / ((2.0 * alpha + 2.0 + dim) * (beta + 1.0));
}

double loglog_slope(std::span<const double> n, std::span<const double> err) {
    if (n.size() != err.size()) throw Error("loglog_slope: size mismatch");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (n[i] > 0.0 && err[i] > 0.0 && std::isfinite(err[i])) {
            x.push_back(std::log(n[i]));
            y.push_back(std::log(err[i]));
        }
    }
    if (x.size() < 2) return kNaN;
    const double mx = mean_of(x), my = mean_of(y);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : kNaN;
}

std::size_t RateStudyResult::failed_arms() const {
    std::size_t k = 0;
    for (const auto& a : arms) k += a.ok ? 0 : 1;
    return k;
}

std::uint64_t arm_data_seed(const ExperimentConfig& cfg, int rep) {
    return cfg.data.seed + 1000003ULL * static_cast<std::uint64_t>(rep);
}

std::uint64_t arm_chain_seed(const ExperimentConfig& cfg, int rep, std::size_t index) {
    return cfg.pcn.seed + 1000003ULL * static_cast<std::uint64_t>(rep) + index;
}

namespace {

RateStudyResult run_arms(const ExperimentConfig& cfg, const std::vector<std::size_t>& n_list,
                         const std::vector<double>& deltas, int replications) {
    cfg.validate();
    if (replications < 1) throw Error("replications must be at least 1");
    if (deltas.size() != n_list.size()) throw Error("need one step size per n");

    const TriangularMesh mesh = make_mesh(cfg);
    const NodalField f0 = ground_truth_field(mesh);
    const PriorSampler base = make_prior(mesh, cfg.prior);

    // Nested sweeps share one pool per replication: the data file, or a
    // simulated realisation of the largest n. Arms take its leading rows.
    std::vector<ObservationSet> pools;
    if (cfg.sweep.nested) {
        for (int r = 0; r < replications; ++r) {
            pools.push_back(cfg.data.file.empty()
                                ? generate_data(mesh, f0, unit_source, n_list.back(), cfg.data.sigma, arm_data_seed(cfg, r))
                                : load_observations(cfg.data.file, cfg.data.sigma));
        }
    }

    RateStudyResult res;
    res.n_values = n_list;
    res.alpha = cfg.prior.alpha;
    res.beta = cfg.sweep.beta;
    res.prediction_exponent = prediction_rate_exponent(cfg.prior.alpha, res.dim);
    res.inversion_exponent = inversion_rate_exponent(cfg.prior.alpha, cfg.sweep.beta, res.dim);
    res.arms.resize(n_list.size() * static_cast<std::size_t>(replications));

    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto worker = [&] {
        for (std::size_t k = next++; k < res.arms.size(); k = next++) {
            const int rep = static_cast<int>(k / n_list.size());
            const std::size_t i = k % n_list.size();
            ArmResult& arm = res.arms[k];
            arm.n = n_list[i];
            arm.delta = deltas[i];
            arm.replication = rep;
            arm.data_seed = cfg.sweep.nested ? arm_data_seed(cfg, rep) : arm_data_seed(cfg, rep) + 7919 * i;
            arm.chain_seed = arm_chain_seed(cfg, rep, i);
            const auto start = std::chrono::steady_clock::now();
            try {
                const ObservationSet obs = cfg.sweep.nested
                                               ? pools[static_cast<std::size_t>(rep)].head(arm.n)
                                               : make_observations(cfg, mesh, f0, arm.n, arm.data_seed);
                PcnConfig pcn = cfg.pcn;
                pcn.delta = arm.delta;
                pcn.seed = arm.chain_seed;
                const PriorSampler prior = base.rescaled(scaling_for(cfg.prior, arm.n));
                InferenceResult r = run_inference(mesh, f0, obs, prior, cfg.link, pcn);
                arm.l2_error = r.l2_error;
                arm.prediction_error = r.prediction_error;
                arm.acceptance = r.acceptance;
                arm.loglik_truth = r.loglik_truth;
                arm.accepted = std::move(r.chain.accepted);
                arm.loglik = std::move(r.chain.loglik);
                arm.proposal_loglik = std::move(r.chain.proposal_loglik);
                arm.previous_loglik = std::move(r.chain.previous_loglik);
                arm.ok = true;
            } catch (const std::exception& e) {
                arm.ok = false;
                arm.error = e.what();
                std::lock_guard lock(log_mutex);
                std::cerr << "arm n=" << arm.n << " replication " << rep << " failed: " << e.what() << '\n';
            }
            arm.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        }
    };
    const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), res.arms.size());
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    pool.clear();

    std::vector<double> nd;
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        std::vector<double> l2, pred;
        for (int r = 0; r < replications; ++r) {
            const ArmResult& a = res.arms[static_cast<std::size_t>(r) * n_list.size() + i];
            if (a.ok) {
                l2.push_back(a.l2_error);
                pred.push_back(a.prediction_error);
            }
        }
        res.mean_l2_error.push_back(mean_of(l2));
        res.mean_prediction_error.push_back(mean_of(pred));
        nd.push_back(static_cast<double>(n_list[i]));
    }
    res.l2_slope = loglog_slope(nd, res.mean_l2_error);
    res.prediction_slope = loglog_slope(nd, res.mean_prediction_error);
    return res;
}

}  // namespace

RateStudyResult run_sweep(const ExperimentConfig& cfg) {
    return run_arms(cfg, cfg.sweep.n_values, cfg.sweep.deltas, 1);
}

RateStudyResult run_rate_study(const ExperimentConfig& cfg, std::vector<std::size_t> n_list, int replications) {
    if (n_list.empty()) n_list = cfg.sweep.n_values;
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        if (n_list[i] == 0 || (i > 0 && n_list[i] <= n_list[i - 1])) {
            throw Error("rate study: n values must be positive and strictly ascending");
        }
    }
    // Step sizes follow the sweep table where n matches, pcn.delta otherwise.
    std::vector<double> deltas;
    for (std::size_t n : n_list) {
        double d = cfg.pcn.delta;
        for (std::size_t i = 0; i < cfg.sweep.n_values.size(); ++i) {
            if (cfg.sweep.n_values[i] == n) d = cfg.sweep.deltas[i];
        }
        deltas.push_back(d);
    }
    return run_arms(cfg, n_list, deltas, replications);
}

// ---------------------------------------------------------------------------

void write_field_csv(const std::filesystem::path& path, const TriangularMesh& mesh, const NodalField& field) {
    check_field(mesh, field, "write_field_csv");
    auto out = open_output(path);
    for (Eigen::Index i = 0; i < field.values.size(); ++i) out << field.values[i] << '\n';
}

NodalField read_field_csv(const std::filesystem::path& path, const TriangularMesh& mesh) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(line, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || line.find_first_not_of(" \t\r", used) != std::string::npos || !std::isfinite(v)) {
            throw Error(path.string() + ": line " + std::to_string(values.size() + 1) + " is not a finite number");
        }
        values.push_back(v);
    }
    if (values.size() != mesh.node_count()) {
        throw Error(path.string() + ": " + std::to_string(values.size()) + " values for " +
                    std::to_string(mesh.node_count()) + " mesh nodes");
    }
    return {Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())), mesh.id()};
}

void write_trace_csv(const std::filesystem::path& path, std::span<const char> accepted,
                     std::span<const double> loglik) {
    auto out = open_output(path);
    out << "iteration,accepted,loglik\n";
    for (std::size_t h = 0; h < accepted.size(); ++h) {
        out << h + 1 << ',' << (accepted[h] ? 1 : 0) << ',' << loglik[h] << '\n';
    }
}

void write_basis_csv(const std::filesystem::path& path, const EigenBasis& basis) {
    auto out = open_output(path);
    // One row per eigenpair: lambda followed by the nodal values.
    for (std::size_t j = 0; j < basis.size(); ++j) {
        out << basis.lambda(j);
        const auto col = basis.functions().col(static_cast<Eigen::Index>(j));
        for (Eigen::Index i = 0; i < col.size(); ++i) out << ',' << col[i];
        out << '\n';
    }
}

void write_rate_csv(const std::filesystem::path& path, const RateStudyResult& result) {
    auto out = open_output(path);
    out << "n,replication,delta,data_seed,chain_seed,ok,l2_error,prediction_error,acceptance\n";
    for (const auto& a : result.arms) {
        out << a.n << ',' << a.replication << ',' << a.delta << ',' << a.data_seed << ',' << a.chain_seed << ','
            << (a.ok ? 1 : 0) << ',' << a.l2_error << ',' << a.prediction_error << ',' << a.acceptance << '\n';
    }
}

std::string rate_summary_json(const RateStudyResult& result) {
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json j;
    json rows = json::array();
    for (std::size_t i = 0; i < result.n_values.size(); ++i) {
        rows.push_back({{"n", result.n_values[i]},
                        {"mean_l2_error", num(result.mean_l2_error[i])},
                        {"mean_prediction_error", num(result.mean_prediction_error[i])}});
    }
    json arms = json::array();
    for (const auto& a : result.arms) {
        json arm = {{"n", a.n},
                    {"replication", a.replication},
                    {"ok", a.ok},
                    {"acceptance", a.acceptance},
                    {"seconds", a.seconds}};
        if (!a.ok) arm["error"] = a.error;
        arms.push_back(arm);
    }
    j["per_n"] = rows;
    j["arms"] = arms;
    j["failed_arms"] = result.failed_arms();
    j["l2_slope"] = num(result.l2_slope);
    j["prediction_slope"] = num(result.prediction_slope);
    j["theory"] = {{"alpha", result.alpha},
                   {"beta", result.beta},
                   {"dim", result.dim},
                   {"prediction_exponent", result.prediction_exponent},
                   {"inversion_exponent", result.inversion_exponent}};
    return j.dump(2);
}

void write_run_header(const std::filesystem::path& dir, const ExperimentConfig& cfg, const TriangularMesh& mesh,
                      std::span<const ObservationSet> data,
                      std::span<const std::pair<std::string, std::uint64_t>> seeds) {
    std::filesystem::create_directories(dir);
    const std::string echo = config_to_json(cfg);
    open_output(dir / "config.json") << echo << '\n';

    json s = json::object();
    for (const auto& [name, value] : seeds) s[name] = value;
    open_output(dir / "seeds.json") << s.dump(2) << '\n';

    Fnv1a h;
    h.add(std::string_view(echo));
    h.add(static_cast<std::int64_t>(mesh.id()));
    for (const auto& obs : data) {
        h.add(obs.sigma);
        for (std::size_t i = 0; i < obs.n(); ++i) {
            h.add(obs.X[i].x);
            h.add(obs.X[i].y);
            h.add(obs.Y[static_cast<Eigen::Index>(i)]);
        }
    }
    std::ostringstream hex;
    hex << std::hex << std::setw(16) << std::setfill('0') << h.value();
    open_output(dir / "inputs.hash") << hex.str() << '\n';
}

}  // namespace diffinv
