#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "diffinv/laplace_eigen.hpp"
#include "diffinv/mesh.hpp"
#include "diffinv/model.hpp"
#include "diffinv/pcn.hpp"
#include "diffinv/priors.hpp"

namespace diffinv {

struct MeshSettings {
    int target_nodes = 1981;
    std::string file;  // read instead of building a disk mesh when set
};

struct DataSettings {
    std::size_t n = 1000;
    double sigma = 0.001;
    std::uint64_t seed = 7;
    std::string file;  // x,y,value CSV used instead of simulating when set
};

enum class PriorKind { matern, series };
enum class BasisKind { fem, analytic };

struct PriorSettings {
    PriorKind kind = PriorKind::matern;
    double alpha = 10.0;
    double ell = 0.125;
    double jitter = 1e-10;
    bool radial_taper = false;
    // Series prior: the first J eigenpairs (J = 0 keeps all with
    // lambda <= lambda_max).
    std::size_t J = 0;
    double lambda_max = 1000.0;
    BasisKind basis = BasisKind::fem;
    // Multiply the prior by n^{-d/(4 alpha + 4 + 2d)}.
    bool scaling = false;
};

struct SweepSettings {
    std::vector<std::size_t> n_values{100, 200, 300, 500, 1000};
    std::vector<double> deltas{0.005, 0.0045, 0.0035, 0.002, 0.00125};
    bool nested = true;  // subsample one realisation of the largest n
    int replications = 1;
    double beta = 2.0;   // only reported, through the inversion exponent
};

struct ExperimentConfig {
    MeshSettings mesh;
    DataSettings data;
    PriorSettings prior;
    LinkFunction link = LinkFunction::shifted_exponential(1.0);
    PcnConfig pcn{.delta = 0.00125, .iterations = 10000, .burn_in = 1000, .seed = 3, .thin = 10};
    SweepSettings sweep;
    double band_level = 0.95;
    int threads = 1;
    std::string out_dir = "run";

    // Throws Error naming the offending key.
    void validate() const;
};

// JSON with optional sections mesh, data, prior, link, pcn, sweep and the
// top-level keys band_level, threads, out_dir. Missing keys keep their
// defaults; unknown keys are rejected. The Matern prior defaults to the link
// 1 + exp; the series prior defaults to exp and alpha = 0.625.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& cfg);

TriangularMesh make_mesh(const ExperimentConfig& cfg);

// Observations of the four-bump truth with s = 1 (simulated or read from file).
ObservationSet make_observations(const ExperimentConfig& cfg, const TriangularMesh& mesh, const NodalField& f0,
                                 std::size_t n, std::uint64_t seed);

// Basis for the series prior. With J > 0 the eigenvalue cap is raised until
// at least J FEM pairs are available.
EigenBasis make_series_basis(const TriangularMesh& mesh, const PriorSettings& prior);

// Unscaled prior of the configured kind.
PriorSampler make_prior(const TriangularMesh& mesh, const PriorSettings& prior);

// Scaling factor applied for n observations (1 when scaling is off).
double scaling_for(const PriorSettings& prior, std::size_t n);

struct InferenceResult {
    ChainRecord chain;
    NodalField mean;
    double l2_error = 0.0;
    double prediction_error = 0.0;
    double loglik_truth = 0.0;
    double acceptance = 0.0;  // after burn-in
};

InferenceResult run_inference(const TriangularMesh& mesh, const NodalField& f0, const ObservationSet& obs,
                              const PriorSampler& prior, const LinkFunction& link, const PcnConfig& pcn);

// ||G(f_hat) - G(f0)||_{L2} with unit source.
double prediction_error(const TriangularMesh& mesh, const NodalField& f_hat, const NodalField& f0);

struct ArmResult {
    std::size_t n = 0;
    double delta = 0.0;
    int replication = 0;
    std::uint64_t data_seed = 0;
    std::uint64_t chain_seed = 0;
    bool ok = false;
    std::string error;
    double l2_error = 0.0;
    double prediction_error = 0.0;
    double acceptance = 0.0;
    double loglik_truth = 0.0;
    double seconds = 0.0;
    // Per-step traces, as in ChainRecord.
    std::vector<char> accepted;
    std::vector<double> loglik;
    std::vector<double> proposal_loglik;
    std::vector<double> previous_loglik;
};

struct RateStudyResult {
    std::vector<ArmResult> arms;
    // Per n, means over successful replications (NaN when none succeeded).
    std::vector<std::size_t> n_values;
    std::vector<double> mean_l2_error;
    std::vector<double> mean_prediction_error;
    // Least-squares slopes of log error against log n (NaN below two points).
    double l2_slope = 0.0;
    double prediction_slope = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    int dim = 2;
    double prediction_exponent = 0.0;
    double inversion_exponent = 0.0;

    std::size_t failed_arms() const;
};

// (alpha + 1) / (2 alpha + 2 + d)
double prediction_rate_exponent(double alpha, int dim = 2);
// (alpha + 1)(beta - 1) / ((2 alpha + 2 + d)(beta + 1))
double inversion_rate_exponent(double alpha, double beta, int dim = 2);

double loglog_slope(std::span<const double> n, std::span<const double> err);

// One chain per n with the matching delta from cfg.sweep. Arm failures are
// recorded in the result rather than thrown.
RateStudyResult run_sweep(const ExperimentConfig& cfg);

// As the sweep, repeated with independent data and chain seeds and averaged.
RateStudyResult run_rate_study(const ExperimentConfig& cfg, std::vector<std::size_t> n_list, int replications);

// Seeds used by arm `index` of replication `rep`.
std::uint64_t arm_data_seed(const ExperimentConfig& cfg, int rep);
std::uint64_t arm_chain_seed(const ExperimentConfig& cfg, int rep, std::size_t index);

// Output helpers. Field CSVs hold one value per line in node order.
void write_field_csv(const std::filesystem::path& path, const TriangularMesh& mesh, const NodalField& field);
NodalField read_field_csv(const std::filesystem::path& path, const TriangularMesh& mesh);
void write_trace_csv(const std::filesystem::path& path, std::span<const char> accepted,
                     std::span<const double> loglik);
void write_basis_csv(const std::filesystem::path& path, const EigenBasis& basis);
void write_rate_csv(const std::filesystem::path& path, const RateStudyResult& result);
std::string rate_summary_json(const RateStudyResult& result);

// Creates dir and writes config.json, seeds.json and inputs.hash (FNV-1a of
// the config echo, mesh and observations).
void write_run_header(const std::filesystem::path& dir, const ExperimentConfig& cfg, const TriangularMesh& mesh,
                      std::span<const ObservationSet> data, std::span<const std::pair<std::string, std::uint64_t>> seeds);

}  // namespace diffinv
