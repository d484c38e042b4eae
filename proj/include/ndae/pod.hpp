#pragma once

#include <optional>
#include <string>

#include <Eigen/Core>

#include "ndae/deim.hpp"
#include "ndae/snapshots.hpp"

namespace ndae {

enum class PodMode { DirectSvd, SnapshotEd };

/// Left modes and singular values of one snapshot block. `modes` is always a
/// full square orthonormal basis: rank-deficient snapshot spectra are
/// completed with an orthonormal complement so the block stays invertible.
struct PodSpectrum {
    Eigen::MatrixXd modes;   // n x n
    Eigen::VectorXd sigma;   // descending, length min(n, t) or the ED rank
};

/// POD modes by direct SVD or by the Gram-matrix eigen path
/// (W = X V lambda^{-1/2}); zero eigenvalues are truncated before the
/// inverse square root. Mode signs are fixed (first significant entry
/// positive) for reproducibility.
PodSpectrum pod_modes(const Eigen::MatrixXd& X, PodMode mode = PodMode::DirectSvd);

/// Smallest r whose cumulative singular-value sum reaches the fraction.
int select_order(const Eigen::VectorXd& sigma, double energy_fraction);

enum class Provenance { SpPod, SpBpod };

/// Block coordinate change W = blkdiag(W_d, W_a) with truncation r_d/r_a.
/// W_R = W T keeps the leading transformed states; W_L = T^T W^-1 projects
/// onto them, so W_L W_R = I and the transformed E stays blkdiag(I, 0).
struct ReductionBasis {
    Eigen::MatrixXd W_d, W_a;          // square blocks
    Eigen::MatrixXd W_d_inv, W_a_inv;
    int r_d = 0, r_a = 0;
    Eigen::MatrixXd W_R;               // n x r
    Eigen::MatrixXd W_L;               // r x n
    Provenance provenance = Provenance::SpPod;
    Eigen::VectorXd sigma_d, sigma_a;  // spectra behind the order choice
    std::optional<DeimArtifacts> deim;
    std::optional<ScalingSet> scaling;  // set when the basis lives in scaled coordinates
    std::string warning;

    int n_d() const { return static_cast<int>(W_d.rows()); }
    int n_a() const { return static_cast<int>(W_a.rows()); }
    int n() const { return n_d() + n_a(); }
    int r() const { return r_d + r_a; }
};

ReductionBasis build_basis(const Eigen::MatrixXd& W_d, const Eigen::MatrixXd& W_a, int r_d,
                           int r_a);

struct SpPodOptions {
    double energy_d = 0.99;
    double energy_a = 0.97;
    int fixed_r_d = 0;  // >0 overrides the energy rule
    int fixed_r_a = 0;
    bool with_deim = true;
    double deim_energy = 0.999;
    int fixed_p = 0;
    PodMode mode = PodMode::DirectSvd;
};

/// Snapshot SVD/ED of X_d and X_a, truncation from the singular-value sums,
/// and the DEIM artifacts from X_f.
ReductionBasis sp_pod(const SnapshotSet& snaps, const SpPodOptions& opts = {});

/// HSV table rows (index, sigma, cumulative fraction) for reports.
Eigen::MatrixXd hsv_table(const Eigen::VectorXd& sigma);

}  // namespace ndae
