#include "diffinv/model.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "diffinv/error.hpp"
#include "diffinv/priors.hpp"

namespace diffinv {

void ObservationSet::validate() const {
    if (static_cast<Eigen::Index>(X.size()) != Y.size()) {
        throw Error("ObservationSet: " + std::to_string(X.size()) + " design points but " +
                    std::to_string(Y.size()) + " responses");
    }
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw Error("ObservationSet: sigma must be positive");
    if (!Y.allFinite()) throw Error("ObservationSet: non-finite response");
}

ObservationSet ObservationSet::head(std::size_t count) const {
    if (count > n()) {
        throw Error("ObservationSet::head: requested " + std::to_string(count) + " of " + std::to_string(n()));
    }
    ObservationSet out;
    out.X.assign(X.begin(), X.begin() + static_cast<std::ptrdiff_t>(count));
    out.Y = Y.head(static_cast<Eigen::Index>(count));
    out.sigma = sigma;
    return out;
}

double four_bumps(Point2 p) {
    double v = 1.0;
    for (double cx : {-2.5, 2.5}) {
        for (double cy : {-2.5, 2.5}) {
            const double dx = 10.0 * p.x - cx, dy = 10.0 * p.y - cy;
            v += std::exp(-dx * dx - dy * dy);
        }
    }
    return v;
}

NodalField ground_truth_field(const TriangularMesh& mesh) { return NodalField::sample(mesh, four_bumps); }

ObservationSet generate_data(const TriangularMesh& mesh, const NodalField& f0, const ScalarFunction& source,
                             std::size_t n, double sigma, std::uint64_t seed, double radius) {
    if (n == 0) throw Error("generate_data: n must be at least 1");
    if (!(sigma >= 0.0)) throw Error("generate_data: sigma must be non-negative");
    const ForwardSolution truth = solve_forward(mesh, f0, source);

    Rng design = make_rng(seed, 0);
    Rng noise = make_rng(seed, 1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal;
    const PointLocator locator(mesh);

    ObservationSet obs;
    obs.sigma = sigma;
    obs.X.reserve(n);
    std::vector<Location> locs;
    locs.reserve(n);
    while (obs.X.size() < n) {
        const double r = radius * std::sqrt(unif(design));
        const double th = 2.0 * std::numbers::pi * unif(design);
        const Point2 p{r * std::cos(th), r * std::sin(th)};
        if (auto loc = locator.locate(p)) {
            obs.X.push_back(p);
            locs.push_back(*loc);
        }
    }
    obs.Y.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const double w = normal(noise);
        obs.Y[static_cast<Eigen::Index>(i)] = evaluate_at(truth.u, mesh, locs[i]) + sigma * w;
    }
    return obs;
}

// ---------------------------------------------------------------------------

LogLikelihood::LogLikelihood(const TriangularMesh& mesh, ObservationSet obs, const ScalarFunction& source)
    : obs_(std::move(obs)), solver_(mesh), evaluator_(mesh, obs_.X), load_(assemble_load(mesh, source)) {
    obs_.validate();
}

ForwardSolution LogLikelihood::solve(const NodalField& f) { return solver_.solve(f, load_); }

Eigen::VectorXd LogLikelihood::predict(const NodalField& f) { return evaluator_.evaluate(solve(f).u); }

double LogLikelihood::operator()(const NodalField& f) {
    const Eigen::VectorXd r = obs_.Y - predict(f);
    return -r.squaredNorm() / (2.0 * obs_.sigma * obs_.sigma);
}

double log_likelihood(const TriangularMesh& mesh, const ObservationSet& obs, const NodalField& f,
                      const ScalarFunction& source) {
    LogLikelihood ll(mesh, obs, source);
    return ll(f);
}

// ---------------------------------------------------------------------------

void save_observations(const std::string& path, const ObservationSet& obs) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << "x,y,value\n" << std::setprecision(17);
    for (std::size_t i = 0; i < obs.n(); ++i) {
        out << obs.X[i].x << ',' << obs.X[i].y << ',' << obs.Y[static_cast<Eigen::Index>(i)] << '\n';
    }
}

ObservationSet load_observations(const std::string& path, double sigma) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("x,y,value", 0) != 0) {
        throw Error(path + ": expected header 'x,y,value'");
    }
    ObservationSet obs;
    obs.sigma = sigma;
    std::vector<double> ys;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        Point2 p;
        double y = 0.0;
        char c1 = 0, c2 = 0;
        if (!(ss >> p.x >> c1 >> p.y >> c2 >> y) || c1 != ',' || c2 != ',') {
            throw Error(path + ": malformed line " + std::to_string(lineno));
        }
        obs.X.push_back(p);
        ys.push_back(y);
    }
    obs.Y = Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
    obs.validate();
    return obs;
}

}  // namespace diffinv
