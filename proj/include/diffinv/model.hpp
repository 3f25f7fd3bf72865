#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "diffinv/fem.hpp"
#include "diffinv/mesh.hpp"

namespace diffinv {

// Y_i = G(f)(X_i) + sigma W_i.
struct ObservationSet {
    std::vector<Point2> X;
    Eigen::VectorXd Y;
    double sigma = 1.0;

    std::size_t n() const noexcept { return X.size(); }

    // Sizes agree, sigma > 0, values finite. Points are checked against the
    // mesh when the likelihood is constructed.
    void validate() const;

    // The first n observations.
    ObservationSet head(std::size_t n) const;
};

// 1 + four Gaussian bumps of unit height centred at (+-0.25, +-0.25).
double four_bumps(Point2 p);

NodalField ground_truth_field(const TriangularMesh& mesh);

inline double unit_source(Point2) { return 1.0; }

// Uniform design on the disk (polar inverse CDF, r = R sqrt(U)); draws that
// fall in the thin slivers between the circle and the inscribed mesh polygon
// are redrawn. Design points and noise use separate streams of `seed`.
ObservationSet generate_data(const TriangularMesh& mesh, const NodalField& f0, const ScalarFunction& source,
                             std::size_t n, double sigma, std::uint64_t seed, double radius = kUnitDiskRadius);

// l_n(f) = -1/(2 sigma^2) sum_i (Y_i - G(f)(X_i))^2, with the design points
// located once. Calls mutate the internal solver; one instance per thread.
class LogLikelihood {
public:
    LogLikelihood(const TriangularMesh& mesh, ObservationSet obs, const ScalarFunction& source);

    double operator()(const NodalField& f);
    // G(f) at the design points.
    Eigen::VectorXd predict(const NodalField& f);
    ForwardSolution solve(const NodalField& f);

    const ObservationSet& observations() const noexcept { return obs_; }
    const TriangularMesh& mesh() const noexcept { return solver_.mesh(); }

private:
    ObservationSet obs_;
    ForwardSolver solver_;
    PointEvaluator evaluator_;
    Eigen::VectorXd load_;
};

double log_likelihood(const TriangularMesh& mesh, const ObservationSet& obs, const NodalField& f,
                      const ScalarFunction& source = unit_source);

// CSV with header "x,y,value".
void save_observations(const std::string& path, const ObservationSet& obs);
ObservationSet load_observations(const std::string& path, double sigma);

}  // namespace diffinv
