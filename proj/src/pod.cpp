#include "ndae/pod.hpp"

#include <Eigen/Dense>

namespace ndae {

namespace {

void fix_signs(Eigen::MatrixXd& modes) {
    for (Eigen::Index j = 0; j < modes.cols(); ++j) {
        const double scale = modes.col(j).cwiseAbs().maxCoeff();
        if (scale == 0.0) continue;
        for (Eigen::Index i = 0; i < modes.rows(); ++i) {
            if (std::abs(modes(i, j)) > 1e-12 * scale) {
                if (modes(i, j) < 0.0) modes.col(j) = -modes.col(j);
                break;
            }
        }
    }
}

// orthonormal completion of a column-orthonormal block to a square basis
Eigen::MatrixXd complete_basis(const Eigen::MatrixXd& partial) {
    const Eigen::Index n = partial.rows();
    const Eigen::Index k = partial.cols();
    if (k == n) return partial;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(partial);
    const Eigen::MatrixXd q = qr.householderQ();
    Eigen::MatrixXd full(n, n);
    full.leftCols(k) = partial;
    full.rightCols(n - k) = q.rightCols(n - k);
    return full;
}

}  // namespace

PodSpectrum pod_modes(const Eigen::MatrixXd& X, PodMode mode) {
    if (X.size() == 0 || X.norm() == 0.0)
        throw Error("snapshot matrix is empty or zero: no modes");

    PodSpectrum out;
    if (mode == PodMode::DirectSvd) {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeFullU);
        out.modes = svd.matrixU();
        out.sigma = svd.singularValues();
    } else {
        const Eigen::MatrixXd gram = X.transpose() * X;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
        if (eig.info() != Eigen::Success) throw Error("Gram-matrix eigen decomposition failed");
        // ascending from Eigen; flip to descending and drop the null space
        const Eigen::Index t = gram.rows();
        Eigen::VectorXd lam(t);
        Eigen::MatrixXd vec(t, t);
        for (Eigen::Index i = 0; i < t; ++i) {
            lam[i] = eig.eigenvalues()[t - 1 - i];
            vec.col(i) = eig.eigenvectors().col(t - 1 - i);
        }
        const double lmax = lam[0];
        Eigen::Index rank = 0;
        while (rank < t && lam[rank] > 1e-12 * lmax) ++rank;
        Eigen::MatrixXd W(X.rows(), rank);
        Eigen::VectorXd sig(rank);
        for (Eigen::Index i = 0; i < rank; ++i) {
            sig[i] = std::sqrt(lam[i]);
            W.col(i) = X * vec.col(i) / sig[i];
        }
        out.modes = complete_basis(W);
        out.sigma = sig;
    }
    fix_signs(out.modes);
    return out;
}

int select_order(const Eigen::VectorXd& sigma, double energy_fraction) {
    if (sigma.size() == 0) throw Error("empty spectrum: cannot select an order");
    if (energy_fraction <= 0.0 || energy_fraction > 1.0)
        throw Error("energy fraction must lie in (0, 1]");
    const double total = sigma.sum();
    if (total <= 0.0) throw Error("spectrum sums to zero: cannot select an order");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        acc += sigma[i];
        if (acc / total >= energy_fraction - 1e-15) return static_cast<int>(i) + 1;
    }
    return static_cast<int>(sigma.size());
}

ReductionBasis build_basis(const Eigen::MatrixXd& W_d, const Eigen::MatrixXd& W_a, int r_d,
                           int r_a) {
    const int nd = static_cast<int>(W_d.rows());
    const int na = static_cast<int>(W_a.rows());
    if (W_d.cols() != nd || W_a.cols() != na)
        throw Error("basis blocks must be square and non-singular");
    if (r_d < 0 || r_d > nd || r_a < 0 || r_a > na) throw Error("retained orders out of range");
    if (r_d + r_a == 0) throw Error("retained order is zero");

    ReductionBasis b;
    b.W_d = W_d;
    b.W_a = W_a;
    b.r_d = r_d;
    b.r_a = r_a;
    b.W_d_inv = W_d.partialPivLu().inverse();
    b.W_a_inv = na > 0 ? W_a.partialPivLu().inverse() : Eigen::MatrixXd(0, 0);

    const int n = nd + na;
    const int r = r_d + r_a;
    b.W_R = Eigen::MatrixXd::Zero(n, r);
    b.W_L = Eigen::MatrixXd::Zero(r, n);
    b.W_R.topLeftCorner(nd, r_d) = W_d.leftCols(r_d);
    b.W_R.bottomRightCorner(na, r_a) = W_a.leftCols(r_a);
    b.W_L.topLeftCorner(r_d, nd) = b.W_d_inv.topRows(r_d);
    b.W_L.bottomRightCorner(r_a, na) = b.W_a_inv.topRows(r_a);
    return b;
}

ReductionBasis sp_pod(const SnapshotSet& snaps, const SpPodOptions& opts) {
    const PodSpectrum pd = pod_modes(snaps.X_d, opts.mode);
    const PodSpectrum pa = pod_modes(snaps.X_a, opts.mode);

    const int r_d = opts.fixed_r_d > 0 ? opts.fixed_r_d : select_order(pd.sigma, opts.energy_d);
    const int r_a = opts.fixed_r_a > 0 ? opts.fixed_r_a : select_order(pa.sigma, opts.energy_a);

    ReductionBasis basis = build_basis(pd.modes, pa.modes, r_d, r_a);
    basis.provenance = Provenance::SpPod;
    basis.sigma_d = pd.sigma;
    basis.sigma_a = pa.sigma;

    if (opts.with_deim) {
        const PodSpectrum pf = pod_modes(snaps.X_f, PodMode::DirectSvd);
        int p = opts.fixed_p > 0 ? opts.fixed_p : select_order(pf.sigma, opts.deim_energy);
        // cap at the numerical rank so the interpolation block stays regular
        int rank = 0;
        while (rank < pf.sigma.size() && pf.sigma[rank] > 1e-12 * pf.sigma[0]) ++rank;
        p = std::min(p, std::max(rank, 1));
        DeimArtifacts art = deim_select(pf.modes, p);
        art.sigma_f = pf.sigma;
        basis.deim = std::move(art);
    }
    return basis;
}

Eigen::MatrixXd hsv_table(const Eigen::VectorXd& sigma) {
    Eigen::MatrixXd t(sigma.size(), 3);
    const double total = sigma.sum();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        acc += sigma[i];
        t(i, 0) = static_cast<double>(i + 1);
        t(i, 1) = sigma[i];
        t(i, 2) = total > 0 ? acc / total : 0.0;
    }
    return t;
}

}  // namespace ndae
