#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "ndae/dae_solver.hpp"
#include "ndae/scenario.hpp"

namespace ndae {

/// Perturbation protocol for the empirical covariances: directions {+I, -I},
/// magnitudes alpha * {0.25, 0.5, 0.75, 1.0}, sampled over [0, horizon] at
/// cadence dt.
struct PerturbationConfig {
    double alpha_u = 0.05;
    double alpha_x = 0.05;
    std::vector<double> base_magnitudes{0.25, 0.5, 0.75, 1.0};
    double horizon = 5.0;
    double dt = 0.01;  // covariance sampling interval Delta t(k)
    InputShape shape = InputShape::StepHold;
    double pulse_width = 0.0;  // 0 -> one dt sample
    SolverOptions solver;      // integration options for the perturbation runs
    int threads = 0;           // 0 -> hardware concurrency
    std::vector<int> input_indices;      // empty -> every input
    std::vector<int> state_indices;      // empty -> every dynamic state
    Eigen::MatrixXd pod_directions;      // optional n_d x m: perturb modes, not states

    std::vector<double> magnitudes_u() const;
    std::vector<double> magnitudes_x() const;

    PerturbationConfig() { solver.h = 5e-3; }
};

struct GramianError : Error {
    using Error::Error;
};

struct CovariancePair {
    Eigen::MatrixXd G_c;    // n x n
    Eigen::MatrixXd G_o11;  // n_d x n_d
};

/// Accumulates sum_k (x(k)-x0)(x(k)-x0)^T dt / (q s c^2) over every
/// (input, direction, magnitude) perturbation run. Runs fan out over a
/// thread pool; partial sums reduce in fixed index order.
Eigen::MatrixXd controllability_covariance(const DaeSystem& sys, const Eigen::VectorXd& x0,
                                           const Eigen::VectorXd& u0, const Eigen::VectorXd& w0,
                                           const PerturbationConfig& cfg);

/// Perturbs dynamic-state initial conditions (re-solving consistency first),
/// records output deviations and accumulates Psi_ij = dy_i^T dy_j.
/// `C` maps states to outputs (empty -> dynamic-state selector).
Eigen::MatrixXd observability_covariance(const DaeSystem& sys, const Eigen::MatrixXd& C,
                                         const Eigen::VectorXd& x0, const Eigen::VectorXd& u0,
                                         const Eigen::VectorXd& w0,
                                         const PerturbationConfig& cfg);

struct CovarianceBlocks {
    Eigen::MatrixXd G11, G12, G21, G22;
};

CovarianceBlocks partition(const Eigen::MatrixXd& G_c, int n_d);

/// Ridge term keeping the dynamic block comfortably definite before
/// balancing: eps = 1e-10 * trace / n_d on the diagonal.
Eigen::MatrixXd regularize_spd(const Eigen::MatrixXd& G, double rel = 1e-10);

}  // namespace ndae
