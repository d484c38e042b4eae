#pragma once

#include <Eigen/Core>

#include "ndae/gramians.hpp"
#include "ndae/pod.hpp"

namespace ndae {

struct BalanceError : Error {
    using Error::Error;
};

/// Four-step balancing of the dynamic covariance pair. W_d is the composite
/// map with W_d G_c11 W_d^T and W_d^-T G_o11 W_d^-1 in the balanced block
/// forms blkdiag(Gamma1, I, 0, 0) / blkdiag(Gamma1, 0, Gamma3, 0).
/// States split into four categories: n1 controllable-and-observable,
/// n2 controllable-only, n3 observable-only, n4 neither.
struct BalanceResult {
    Eigen::MatrixXd T1, T2, T3, T4;
    Eigen::MatrixXd W_d;      // balancing map (T4 T3 T2 T1 applied in step order)
    Eigen::MatrixXd W_d_inv;
    Eigen::VectorXd gamma1;   // HSVs, descending
    Eigen::VectorXd gamma3;
    int n1 = 0, n2 = 0, n3 = 0, n4 = 0;
    Eigen::MatrixXd G2_hat, G4_hat;  // off-diagonal couplings before step 3
    Eigen::MatrixXd L1, L2;
    bool rank_warning = false;
    std::string warning;

    Eigen::MatrixXd balanced_controllability(const Eigen::MatrixXd& G_c11) const;
    Eigen::MatrixXd balanced_observability(const Eigen::MatrixXd& G_o11) const;
};

BalanceResult balance(const Eigen::MatrixXd& G_c11, const Eigen::MatrixXd& G_o11,
                      double rank_tol = 1e-8);

/// Hierarchically ordered modes of the algebraic covariance block.
struct AlgebraicTransform {
    Eigen::MatrixXd W_gc;     // orthogonal
    Eigen::VectorXd sigma_gc; // descending
};

AlgebraicTransform algebraic_transform(const Eigen::MatrixXd& G_c22);

struct SpBpodOptions {
    double energy_d = 0.99;
    double energy_a = 0.97;
    int fixed_r_d = 0;
    int fixed_r_a = 0;
    bool with_deim = true;
    double deim_energy = 0.999;
    int fixed_p = 0;
    double rank_tol = 1e-8;
};

/// Assembles the reduction basis from precomputed covariances: the dynamic
/// block is the inverse balancing map (its leading columns reconstruct the
/// dominant balanced states), the algebraic block the G_c22 modes. DEIM
/// artifacts come from the scaled nonlinearity snapshots when provided.
ReductionBasis sp_bpod(const Eigen::MatrixXd& G_c, const Eigen::MatrixXd& G_o11, int n_d,
                       const SpBpodOptions& opts = {},
                       const Eigen::MatrixXd* X_f_scaled = nullptr);

}  // namespace ndae
