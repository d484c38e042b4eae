#pragma once

#include <memory>

#include <Eigen/Core>

#include "ndae/dae_solver.hpp"
#include "ndae/ndae_system.hpp"

namespace ndae {

/// Raw-state snapshot matrices split along the dynamic/algebraic partition,
/// plus the recomputed nonlinearity columns.
struct SnapshotSet {
    Eigen::MatrixXd X_d;  // n_d x t
    Eigen::MatrixXd X_a;  // n_a x t
    Eigen::MatrixXd X_f;  // n x t
    Eigen::VectorXd times;
    Eigen::MatrixXd u_trace;
    Eigen::MatrixXd w_trace;

    int columns() const { return static_cast<int>(times.size()); }
};

/// Splits a trajectory into X_d/X_a and recomputes each X_f column as
/// f(x_k, u_k, w_k) from the stored traces. With `deviations`, the
/// equilibrium column x0 is subtracted from the state blocks (off by
/// default; raw states are the recorded convention).
SnapshotSet collect(const Trajectory& traj, const NdaeSystem& sys, bool deviations = false,
                    const Eigen::VectorXd* x0 = nullptr);

struct ScalingError : Error {
    using Error::Error;
};

/// Diagonal scalings built from the steady state; entries below threshold
/// fall back to 1 so the matrices stay invertible.
struct ScalingSet {
    Eigen::VectorXd s_x, s_u, s_w;  // diagonals
    double zero_threshold = 1e-6;

    Eigen::VectorXd scale_x(const Eigen::VectorXd& x) const { return x.cwiseQuotient(s_x); }
    Eigen::VectorXd unscale_x(const Eigen::VectorXd& x) const { return x.cwiseProduct(s_x); }
    Eigen::VectorXd scale_u(const Eigen::VectorXd& u) const { return u.cwiseQuotient(s_u); }
    Eigen::VectorXd scale_w(const Eigen::VectorXd& w) const { return w.cwiseQuotient(s_w); }
};

ScalingSet make_scaling(const Eigen::VectorXd& x0, const Eigen::VectorXd& u0,
                        const Eigen::VectorXd& w0, double zero_threshold = 1e-6);

/// The scaled compact system: A_s = S_x^-1 A S_x, B_us = S_x^-1 B_u S_u,
/// B_ws = S_x^-1 B_w S_w, f_s(x,u,w) = S_x^-1 f(S_x x, S_u u, S_w w),
/// C_s = C S_x. Its equilibrium is the all-ones vector.
class ScaledSystem final : public DaeSystem {
public:
    ScaledSystem(const NdaeSystem& base, ScalingSet scaling);

    int n_dyn() const override { return base_->n_dyn(); }
    int n_alg() const override { return base_->n_alg(); }
    int n_inputs() const override { return base_->n_inputs(); }
    int n_disturbances() const override { return base_->n_disturbances(); }
    void rhs(const Eigen::VectorXd& x, const Eigen::VectorXd& u, const Eigen::VectorXd& w,
             Eigen::VectorXd& out) const override;

    /// Scaled nonlinearity alone (compact-form f of the scaled model).
    Eigen::VectorXd nonlinearity(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                 const Eigen::VectorXd& w) const;
    void nonlinearity_rows(std::span<const int> rows, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& u, const Eigen::VectorXd& w,
                           Eigen::VectorXd& out) const;

    const Eigen::MatrixXd& A() const { return A_; }
    const Eigen::MatrixXd& B_u() const { return B_u_; }
    const Eigen::MatrixXd& B_w() const { return B_w_; }
    const Eigen::MatrixXd& C() const { return C_; }
    const ScalingSet& scaling() const { return scaling_; }
    const NdaeSystem& base() const { return *base_; }

private:
    const NdaeSystem* base_;
    ScalingSet scaling_;
    Eigen::MatrixXd A_, B_u_, B_w_, C_;
};

ScaledSystem scale_system(const NdaeSystem& sys, const Eigen::VectorXd& x0,
                          const Eigen::VectorXd& u0, const Eigen::VectorXd& w0,
                          double zero_threshold = 1e-6);

}  // namespace ndae
