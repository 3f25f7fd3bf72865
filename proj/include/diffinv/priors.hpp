#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

#include "diffinv/laplace_eigen.hpp"
#include "diffinv/mesh.hpp"

namespace diffinv {

using Rng = std::mt19937_64;

// Independent stream number `stream` derived from a base seed.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

struct MaternConfig {
    double alpha = 10.0;   // smoothness
    double ell = 0.125;    // length-scale
    double jitter = 1e-10; // initial diagonal regulariser, escalated up to 1e-6
    bool radial_taper = false;

    void validate() const;
};

// Matérn correlation at distance r; 1 at r = 0.
double matern_correlation(double r, const MaternConfig& cfg);
double matern_cov(Point2 x, Point2 y, const MaternConfig& cfg);

struct SeriesPriorConfig {
    EigenBasis basis;
    double alpha = 0.625;
    std::size_t J = 0;  // 0 keeps the whole basis
};

enum class LinkKind { exp, shifted_exp };

struct LinkFunction {
    LinkKind kind = LinkKind::exp;
    double f_min = 0.0;  // shifted_exp only

    static LinkFunction exponential() { return {LinkKind::exp, 0.0}; }
    static LinkFunction shifted_exponential(double f_min) { return {LinkKind::shifted_exp, f_min}; }

    // Inputs are clamped to [-kClamp, kClamp] before exponentiation.
    static constexpr double kClamp = 700.0;

    double operator()(double v) const;
    double lower_bound() const noexcept { return kind == LinkKind::shifted_exp ? f_min : 0.0; }
};

// Pointwise link; `clamped`, when given, receives the number of clamped nodes.
NodalField apply_link(const NodalField& F, const LinkFunction& link, std::size_t* clamped = nullptr);

// n^{-d/(4 alpha + 4 + 2d)}.
double prior_scaling(std::size_t n, double alpha, int dim = 2);

// Centred Gaussian prior in its native coordinates: nodal values for the
// Matérn prior, series coefficients for the eigenbasis prior. Samplers are
// immutable; randomness comes from the caller's Rng.
class PriorSampler {
public:
    enum class Kind { matern, series };

    Kind kind() const noexcept { return kind_; }
    Eigen::Index dimension() const noexcept { return dim_; }
    double scaling() const noexcept { return scaling_; }
    double jitter() const noexcept { return jitter_; }
    std::uint64_t mesh_id() const noexcept { return mesh_id_; }

    // scaling * factor * z with z standard normal.
    Eigen::VectorXd sample(Rng& rng) const;

    // Same prior with a different scaling in (0, 1].
    PriorSampler rescaled(double scaling) const;

    // Nodal field represented by native coordinates.
    NodalField to_nodal(const Eigen::VectorXd& coords) const;

    // Covariance of the native coordinates (dense; for tests and diagnostics).
    Eigen::MatrixXd covariance() const;

    // Lower-triangular Cholesky factor (Matérn only).
    const Eigen::MatrixXd& factor() const noexcept { return factor_; }
    // Per-coefficient standard deviations before scaling (series only).
    const Eigen::VectorXd& stddevs() const noexcept { return stddevs_; }

private:
    friend PriorSampler build_matern_sampler(const TriangularMesh&, const MaternConfig&, double);
    friend PriorSampler build_series_sampler(const SeriesPriorConfig&, double);

    Kind kind_ = Kind::matern;
    Eigen::Index dim_ = 0;
    double scaling_ = 1.0;
    double jitter_ = 0.0;
    std::uint64_t mesh_id_ = 0;
    Eigen::MatrixXd factor_;
    Eigen::VectorXd stddevs_;
    Eigen::MatrixXd synthesis_;  // series: nodal basis columns
};

// Node covariance C_{mm'} = C(z_m, z_m') plus jitter, Cholesky-factorised.
// Jitter is multiplied by 10 after each failed factorisation up to 1e-6.
PriorSampler build_matern_sampler(const TriangularMesh& mesh, const MaternConfig& cfg, double scaling = 1.0);

// Coefficients F_j ~ N(0, lambda_j^{-alpha}).
PriorSampler build_series_sampler(const SeriesPriorConfig& cfg, double scaling = 1.0);

// Smooth radial cut-off: 1 inside 0.8 R, 0 on the boundary circle.
double radial_taper(Point2 p, double radius = kUnitDiskRadius);

}  // namespace diffinv
