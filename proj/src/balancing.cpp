#include "ndae/balancing.hpp"

#include <Eigen/Dense>

namespace ndae {

namespace {

// symmetric eigen-decomposition with descending eigenvalues
void eig_desc(const Eigen::MatrixXd& M, Eigen::VectorXd& lam, Eigen::MatrixXd& vec) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (M + M.transpose()));
    if (eig.info() != Eigen::Success) throw BalanceError("symmetric eigen decomposition failed");
    const Eigen::Index n = M.rows();
    lam.resize(n);
    vec.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        lam[i] = eig.eigenvalues()[n - 1 - i];
        vec.col(i) = eig.eigenvectors().col(n - 1 - i);
    }
    // deterministic signs
    for (Eigen::Index j = 0; j < n; ++j) {
        const double scale = vec.col(j).cwiseAbs().maxCoeff();
        if (scale == 0.0) continue;
        for (Eigen::Index i = 0; i < n; ++i)
            if (std::abs(vec(i, j)) > 1e-12 * scale) {
                if (vec(i, j) < 0.0) vec.col(j) = -vec.col(j);
                break;
            }
    }
}

int count_rank(const Eigen::VectorXd& lam, double tol, bool* ambiguous) {
    if (lam.size() == 0) return 0;
    const double lmax = std::max(lam[0], 0.0);
    if (lmax <= 0.0) return 0;
    int r = 0;
    while (r < lam.size() && lam[r] >= tol * lmax) ++r;
    // flag eigenvalues sitting inside the tolerance band (tie-break: counted out)
    if (ambiguous)
        for (Eigen::Index i = 0; i < lam.size(); ++i)
            if (lam[i] > 0.1 * tol * lmax && lam[i] < 10.0 * tol * lmax) *ambiguous = true;
    return r;
}

}  // namespace

Eigen::MatrixXd BalanceResult::balanced_controllability(const Eigen::MatrixXd& G_c11) const {
    return W_d * G_c11 * W_d.transpose();
}

Eigen::MatrixXd BalanceResult::balanced_observability(const Eigen::MatrixXd& G_o11) const {
    return W_d_inv.transpose() * G_o11 * W_d_inv;
}

BalanceResult balance(const Eigen::MatrixXd& G_c11, const Eigen::MatrixXd& G_o11,
                      double rank_tol) {
    const int nd = static_cast<int>(G_c11.rows());
    if (G_c11.cols() != nd || G_o11.rows() != nd || G_o11.cols() != nd)
        throw BalanceError("covariance blocks must be square and same-sized");

    BalanceResult res;
    bool ambiguous = false;

    // step 1: rotate and normalize the controllable subspace to identity
    Eigen::VectorXd lam_c;
    Eigen::MatrixXd U_c;
    eig_desc(G_c11, lam_c, U_c);
    const int k = count_rank(lam_c, rank_tol, &ambiguous);

    Eigen::VectorXd t1_scale = Eigen::VectorXd::Ones(nd);
    for (int i = 0; i < k; ++i) t1_scale[i] = 1.0 / std::sqrt(lam_c[i]);
    res.T1 = t1_scale.asDiagonal() * U_c.transpose();
    Eigen::MatrixXd T1_inv = U_c * t1_scale.cwiseInverse().asDiagonal();

    // step 2: split the observability of the controllable block
    const Eigen::MatrixXd Go1 = T1_inv.transpose() * G_o11 * T1_inv;
    const Eigen::MatrixXd Gt1 = Go1.topLeftCorner(k, k);
    Eigen::VectorXd lam_o(0);
    Eigen::MatrixXd V_o(0, 0);
    int n1 = 0;
    if (k > 0) {
        eig_desc(Gt1, lam_o, V_o);
        n1 = count_rank(lam_o, rank_tol, &ambiguous);
    }
    res.L1 = V_o.transpose();
    res.T2 = Eigen::MatrixXd::Identity(nd, nd);
    if (k > 0) res.T2.topLeftCorner(k, k) = res.L1;

    res.gamma1.resize(n1);
    for (int i = 0; i < n1; ++i) res.gamma1[i] = std::sqrt(std::max(lam_o[i], 0.0));

    // step 3: cancel the coupling between the balanced block and the
    // uncontrollable block
    const Eigen::MatrixXd Go2 = res.T2 * Go1 * res.T2.transpose();
    const int rest = nd - k;
    res.G2_hat = Go2.block(0, k, n1, rest);
    res.G4_hat = Go2.block(k, k, rest, rest);

    res.T3 = Eigen::MatrixXd::Identity(nd, nd);
    Eigen::MatrixXd T3_inv_t = Eigen::MatrixXd::Identity(nd, nd);
    if (n1 > 0 && rest > 0) {
        const Eigen::MatrixXd gamma1_inv2 =
            res.gamma1.array().square().inverse().matrix().asDiagonal();
        const Eigen::MatrixXd blk = res.G2_hat.transpose() * gamma1_inv2;  // rest x n1
        T3_inv_t.block(k, 0, rest, n1) = -blk;
        // T3 = ((T3^T)^{-1})^{-T}
        res.T3.block(0, k, n1, rest) = blk.transpose();
    }

    // step 4: order the observable-only block and normalize the HSV block
    Eigen::MatrixXd schur(0, 0);
    if (rest > 0) {
        schur = res.G4_hat;
        if (n1 > 0) {
            const Eigen::MatrixXd gamma1_inv2 =
                res.gamma1.array().square().inverse().matrix().asDiagonal();
            schur -= res.G2_hat.transpose() * gamma1_inv2 * res.G2_hat;
        }
    }
    Eigen::VectorXd lam_s(0);
    Eigen::MatrixXd V_s(0, 0);
    int n3 = 0;
    if (rest > 0) {
        eig_desc(schur, lam_s, V_s);
        n3 = count_rank(lam_s, rank_tol, &ambiguous);
    }
    res.L2 = V_s.transpose();
    res.gamma3.resize(n3);
    for (int i = 0; i < n3; ++i) res.gamma3[i] = lam_s[i];

    res.T4 = Eigen::MatrixXd::Identity(nd, nd);
    for (int i = 0; i < n1; ++i) res.T4(i, i) = std::sqrt(res.gamma1[i]);
    if (rest > 0) res.T4.bottomRightCorner(rest, rest) = res.L2;

    // composite map, steps applied in order (T1 first)
    res.W_d = res.T4 * res.T3 * res.T2 * res.T1;
    res.W_d_inv = res.W_d.partialPivLu().inverse();

    res.n1 = n1;
    res.n2 = k - n1;
    res.n3 = n3;
    res.n4 = nd - k - n3;
    res.rank_warning = ambiguous;
    if (ambiguous)
        res.warning = "eigenvalues inside the rank tolerance band; ties broken toward truncation";
    return res;
}

AlgebraicTransform algebraic_transform(const Eigen::MatrixXd& G_c22) {
    AlgebraicTransform tr;
    if (G_c22.rows() == 0) {
        tr.W_gc.resize(0, 0);
        tr.sigma_gc.resize(0);
        return tr;
    }
    eig_desc(G_c22, tr.sigma_gc, tr.W_gc);
    tr.sigma_gc = tr.sigma_gc.cwiseMax(0.0);
    return tr;
}

ReductionBasis sp_bpod(const Eigen::MatrixXd& G_c, const Eigen::MatrixXd& G_o11, int n_d,
                       const SpBpodOptions& opts, const Eigen::MatrixXd* X_f_scaled) {
    const CovarianceBlocks blocks = partition(G_c, n_d);
    const Eigen::MatrixXd G11 = regularize_spd(blocks.G11);
    const BalanceResult bal = balance(G11, G_o11, opts.rank_tol);
    const AlgebraicTransform alg = algebraic_transform(blocks.G22);

    int r_d = opts.fixed_r_d > 0 ? opts.fixed_r_d
                                 : (bal.gamma1.size() > 0 ? select_order(bal.gamma1, opts.energy_d)
                                                          : 1);
    int r_a = opts.fixed_r_a > 0 ? opts.fixed_r_a
                                 : (alg.sigma_gc.size() > 0 && alg.sigma_gc.sum() > 0
                                        ? select_order(alg.sigma_gc, opts.energy_a)
                                        : 0);

    // the dynamic block of the coordinate change reconstructs states from
    // balanced coordinates, so it is the inverse of the balancing map
    ReductionBasis basis = build_basis(bal.W_d_inv, alg.W_gc, r_d, r_a);
    basis.provenance = Provenance::SpBpod;
    basis.sigma_d = bal.gamma1;
    basis.sigma_a = alg.sigma_gc;
    if (r_d > bal.n1)
        basis.warning = "retained dynamic order " + std::to_string(r_d) +
                        " reaches past the " + std::to_string(bal.n1) +
                        " controllable-and-observable states";
    else if (bal.rank_warning)
        basis.warning = bal.warning;

    if (opts.with_deim && X_f_scaled != nullptr && X_f_scaled->size() > 0) {
        const PodSpectrum pf = pod_modes(*X_f_scaled, PodMode::DirectSvd);
        int p = opts.fixed_p > 0 ? opts.fixed_p : select_order(pf.sigma, opts.deim_energy);
        int rank = 0;
        while (rank < pf.sigma.size() && pf.sigma[rank] > 1e-12 * pf.sigma[0]) ++rank;
        p = std::min(p, std::max(rank, 1));
        DeimArtifacts art = deim_select(pf.modes, p);
        art.sigma_f = pf.sigma;
        basis.deim = std::move(art);
    }
    return basis;
}

}  // namespace ndae
