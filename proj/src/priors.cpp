#include "diffinv/priors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>

#include "diffinv/error.hpp"
#include "diffinv/special_functions.hpp"

namespace diffinv {

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x9e3779b9u};
    return Rng(seq);
}

void MaternConfig::validate() const {
    if (!(alpha > 0.0) || !(ell > 0.0) || !(jitter >= 0.0)) {
        std::ostringstream msg;
        msg << "MaternConfig: need alpha > 0, ell > 0, jitter >= 0 (got " << alpha << ", " << ell << ", "
            << jitter << ")";
        throw Error(msg.str());
    }
}

double matern_correlation(double r, const MaternConfig& cfg) {
    if (r <= 0.0) return 1.0;
    const double a = cfg.alpha;
    const double x = r * std::sqrt(2.0 * a) / cfg.ell;
    // log of 2^{1-a} / Gamma(a) * x^a * K_a(x)
    const double k = bessel_k(a, x);
    if (k == 0.0) return 0.0;
    if (!std::isfinite(k)) return 1.0;
    const double log_c = (1.0 - a) * std::log(2.0) - std::lgamma(a) + a * std::log(x) + std::log(k);
    return std::min(1.0, std::exp(log_c));
}

double matern_cov(Point2 x, Point2 y, const MaternConfig& cfg) {
    return matern_correlation(std::hypot(x.x - y.x, x.y - y.y), cfg);
}

double LinkFunction::operator()(double v) const {
    const double e = std::exp(std::clamp(v, -kClamp, kClamp));
    return kind == LinkKind::shifted_exp ? f_min + e : e;
}

NodalField apply_link(const NodalField& F, const LinkFunction& link, std::size_t* clamped) {
    if (!F.all_finite()) throw Error("apply_link: non-finite input");
    NodalField out{Eigen::VectorXd(F.values.size()), F.mesh_id};
    std::size_t n_clamped = 0;
    for (Eigen::Index i = 0; i < F.values.size(); ++i) {
        if (std::abs(F.values[i]) > LinkFunction::kClamp) ++n_clamped;
        out.values[i] = link(F.values[i]);
    }
    if (clamped) *clamped = n_clamped;
    return out;
}

double prior_scaling(std::size_t n, double alpha, int dim) {
    if (n == 0) throw Error("prior_scaling: n must be positive");
    return std::pow(static_cast<double>(n), -dim / (4.0 * alpha + 4.0 + 2.0 * dim));
}

double radial_taper(Point2 p, double radius) {
    const double t = (std::hypot(p.x, p.y) / radius - 0.8) / 0.2;
    if (t <= 0.0) return 1.0;
    if (t >= 1.0) return 0.0;
    // C-infinity step built from exp(-1/s).
    auto g = [](double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; };
    return g(1.0 - t) / (g(1.0 - t) + g(t));
}

// ---------------------------------------------------------------------------

Eigen::VectorXd PriorSampler::sample(Rng& rng) const {
    std::normal_distribution<double> normal;
    Eigen::VectorXd z(dim_);
    for (Eigen::Index i = 0; i < dim_; ++i) z[i] = normal(rng);
    if (kind_ == Kind::matern) {
        Eigen::VectorXd out = factor_.triangularView<Eigen::Lower>() * z;
        return scaling_ * out;
    }
    return scaling_ * stddevs_.cwiseProduct(z);
}

NodalField PriorSampler::to_nodal(const Eigen::VectorXd& coords) const {
    if (coords.size() != dim_) {
        throw Error("PriorSampler::to_nodal: coordinate vector has wrong length");
    }
    if (kind_ == Kind::matern) return {coords, mesh_id_};
    return {synthesis_ * coords, mesh_id_};
}

Eigen::MatrixXd PriorSampler::covariance() const {
    const double s2 = scaling_ * scaling_;
    if (kind_ == Kind::matern) {
        const Eigen::MatrixXd l = factor_.triangularView<Eigen::Lower>();
        return s2 * l * l.transpose();
    }
    return s2 * stddevs_.array().square().matrix().asDiagonal();
}

namespace {

void check_scaling(double scaling) {
    if (!(scaling > 0.0) || scaling > 1.0) {
        std::ostringstream msg;
        msg << "prior scaling must lie in (0, 1], got " << scaling;
        throw Error(msg.str());
    }
}

}  // namespace

PriorSampler PriorSampler::rescaled(double scaling) const {
    check_scaling(scaling);
    PriorSampler out = *this;
    out.scaling_ = scaling;
    return out;
}

PriorSampler build_matern_sampler(const TriangularMesh& mesh, const MaternConfig& cfg, double scaling) {
    cfg.validate();
    check_scaling(scaling);
    const auto m = static_cast<Eigen::Index>(mesh.node_count());
    Eigen::MatrixXd cov(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        cov(i, i) = 1.0;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double c = matern_cov(mesh.node(static_cast<std::size_t>(i)), mesh.node(static_cast<std::size_t>(j)), cfg);
            cov(i, j) = c;
            cov(j, i) = c;
        }
    }

    constexpr double max_jitter = 1e-6;
    double jitter = cfg.jitter;
    Eigen::LLT<Eigen::MatrixXd> llt;
    for (;;) {
        Eigen::MatrixXd reg = cov;
        reg.diagonal().array() += jitter;
        llt.compute(reg);
        if (llt.info() == Eigen::Success && llt.matrixL().toDenseMatrix().allFinite()) break;
        if (jitter >= max_jitter) {
            std::ostringstream msg;
            msg << "build_matern_sampler: covariance factorisation failed with jitter " << jitter << " (alpha "
                << cfg.alpha << ", ell " << cfg.ell << ")";
            throw SolveError(msg.str());
        }
        jitter = jitter > 0.0 ? std::min(max_jitter, jitter * 10.0) : 1e-12;
    }

    PriorSampler s;
    s.kind_ = PriorSampler::Kind::matern;
    s.dim_ = m;
    s.scaling_ = scaling;
    s.jitter_ = jitter;
    s.mesh_id_ = mesh.id();
    s.factor_ = llt.matrixL();
    if (cfg.radial_taper) {
        for (Eigen::Index i = 0; i < m; ++i) s.factor_.row(i) *= radial_taper(mesh.node(static_cast<std::size_t>(i)));
    }
    return s;
}

PriorSampler build_series_sampler(const SeriesPriorConfig& cfg, double scaling) {
    check_scaling(scaling);
    if (cfg.basis.size() == 0) throw Error("build_series_sampler: empty eigenbasis");
    if (!(cfg.alpha > 0.0)) throw Error("build_series_sampler: alpha must be positive");
    const std::size_t J = cfg.J == 0 ? cfg.basis.size() : cfg.J;
    if (J > cfg.basis.size()) {
        throw Error("build_series_sampler: J = " + std::to_string(J) + " exceeds basis size " +
                    std::to_string(cfg.basis.size()));
    }
    PriorSampler s;
    s.kind_ = PriorSampler::Kind::series;
    s.dim_ = static_cast<Eigen::Index>(J);
    s.scaling_ = scaling;
    s.mesh_id_ = cfg.basis.mesh_id();
    s.stddevs_.resize(s.dim_);
    for (std::size_t j = 0; j < J; ++j) {
        s.stddevs_[static_cast<Eigen::Index>(j)] = std::pow(cfg.basis.lambda(j), -0.5 * cfg.alpha);
    }
    s.synthesis_ = cfg.basis.functions().leftCols(s.dim_);
    return s;
}

}  // namespace diffinv
