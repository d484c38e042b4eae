#include "ndae/deim.hpp"

#include <Eigen/Dense>

namespace ndae {

Eigen::MatrixXd DeimArtifacts::selector() const {
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(W_fr.rows(), p());
    for (int j = 0; j < p(); ++j) P(indices[static_cast<size_t>(j)], j) = 1.0;
    return P;
}

namespace {

int argmax_abs(const Eigen::VectorXd& v) {
    int idx = 0;
    v.cwiseAbs().maxCoeff(&idx);
    return idx;
}

}  // namespace

DeimArtifacts deim_select(const Eigen::MatrixXd& W_f, int p) {
    const int n = static_cast<int>(W_f.rows());
    if (p < 1 || p > static_cast<int>(W_f.cols()))
        throw SelectionError("interpolation point count out of range");
    if (p > n) throw SelectionError("more interpolation points than components");

    DeimArtifacts art;
    art.W_fr = W_f.leftCols(p);
    art.indices.reserve(static_cast<size_t>(p));

    // extremal entries are taken in magnitude; SVD sign conventions would
    // otherwise steer the selection
    art.indices.push_back(argmax_abs(W_f.col(0)));

    for (int j = 1; j < p; ++j) {
        Eigen::MatrixXd PtW(j, j);
        Eigen::VectorXd Ptw(j);
        for (int a = 0; a < j; ++a) {
            for (int b = 0; b < j; ++b) PtW(a, b) = W_f(art.indices[static_cast<size_t>(a)], b);
            Ptw[a] = W_f(art.indices[static_cast<size_t>(a)], j);
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(PtW);
        if (!lu.isInvertible())
            throw SelectionError("interpolation block singular at greedy step " +
                                 std::to_string(j));
        const Eigen::VectorXd c = lu.solve(Ptw);
        const Eigen::VectorXd d = W_f.col(j) - W_f.leftCols(j) * c;
        int pick = argmax_abs(d);
        if (std::find(art.indices.begin(), art.indices.end(), pick) != art.indices.end()) {
            // residual vanishes at every prior index in exact arithmetic; a
            // duplicate pick means the remaining residual is numerically zero
            Eigen::VectorXd masked = d.cwiseAbs();
            for (int used : art.indices) masked[used] = -1.0;
            masked.maxCoeff(&pick);
            if (masked[pick] < 0.0)
                throw SelectionError("no distinct interpolation point left at step " +
                                     std::to_string(j));
        }
        art.indices.push_back(pick);
    }

    Eigen::MatrixXd PtW(p, p);
    for (int a = 0; a < p; ++a)
        for (int b = 0; b < p; ++b) PtW(a, b) = art.W_fr(art.indices[static_cast<size_t>(a)], b);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(PtW);
    if (!lu.isInvertible()) throw SelectionError("final interpolation block is singular");
    art.PtW_inv = lu.inverse();
    return art;
}

}  // namespace ndae
