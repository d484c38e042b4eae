#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "ndae/grid.hpp"

namespace ndae {

struct SelectionError : Error {
    using Error::Error;
};

/// Greedy interpolation artifacts for hyper-reducing the nonlinearity:
/// leading modes of X_f, the selected component rows, and the inverse of
/// the interpolation block P_M^T W_fr.
struct DeimArtifacts {
    Eigen::MatrixXd W_fr;        // n x p
    std::vector<int> indices;    // p distinct rows, selection order
    Eigen::MatrixXd PtW_inv;     // (P_M^T W_fr)^{-1}, p x p
    Eigen::VectorXd sigma_f;     // spectrum of X_f behind the choice of p

    int p() const { return static_cast<int>(indices.size()); }
    Eigen::MatrixXd selector() const;  // P_M as a dense n x p binary matrix
};

/// Residual-greedy selection: first index at the largest-magnitude entry of
/// mode one, then each next index at the largest-magnitude entry of
/// d = w_fj - W_fr c with P^T W_fr c = P^T w_fj. Deterministic; throws
/// SelectionError if an interpolation block turns singular mid-greedy.
DeimArtifacts deim_select(const Eigen::MatrixXd& W_f, int p);

enum class DeimEvalMode { Selective, Full };

/// f_r = (P^T W_fr)^{-1} P^T f evaluated at the lifted state. `Selective`
/// computes only the selected components of f, `Full` evaluates everything
/// and picks rows; the arithmetic is identical.
///
/// `Source` must provide nonlinearity(x,u,w) and
/// nonlinearity_rows(rows,x,u,w,out).
template <typename Source>
Eigen::VectorXd deim_reduced_f(const DeimArtifacts& art, const Source& src,
                               const Eigen::VectorXd& x_lifted, const Eigen::VectorXd& u,
                               const Eigen::VectorXd& w,
                               DeimEvalMode mode = DeimEvalMode::Selective) {
    Eigen::VectorXd selected(art.p());
    if (mode == DeimEvalMode::Selective) {
        src.nonlinearity_rows(std::span<const int>(art.indices), x_lifted, u, w, selected);
    } else {
        const Eigen::VectorXd full = src.nonlinearity(x_lifted, u, w);
        if (!full.allFinite()) throw EvaluationError("non-finite nonlinearity in hyper-reduction");
        for (int k = 0; k < art.p(); ++k) selected[k] = full[art.indices[static_cast<size_t>(k)]];
    }
    if (!selected.allFinite())
        throw EvaluationError("non-finite nonlinearity in hyper-reduction");
    return art.PtW_inv * selected;
}

}  // namespace ndae
