#include "ndae/snapshots.hpp"

namespace ndae {

SnapshotSet collect(const Trajectory& traj, const NdaeSystem& sys, bool deviations,
                    const Eigen::VectorXd* x0) {
    const int nd = sys.n_dyn();
    const int na = sys.n_alg();
    const int t = traj.columns();

    SnapshotSet snap;
    snap.times = traj.times;
    snap.u_trace = traj.u_trace;
    snap.w_trace = traj.w_trace;
    snap.X_d.resize(nd, t);
    snap.X_a.resize(na, t);
    snap.X_f.resize(nd + na, t);

    for (int k = 0; k < t; ++k) {
        const Eigen::VectorXd x = traj.states.col(k);
        snap.X_d.col(k) = x.head(nd);
        snap.X_a.col(k) = x.tail(na);
        snap.X_f.col(k) = sys.nonlinearity(x, traj.u_trace.col(k), traj.w_trace.col(k));
    }
    if (deviations) {
        if (!x0) throw Error("deviation snapshots need the equilibrium point");
        snap.X_d.colwise() -= x0->head(nd);
        snap.X_a.colwise() -= x0->tail(na);
    }
    return snap;
}

ScalingSet make_scaling(const Eigen::VectorXd& x0, const Eigen::VectorXd& u0,
                        const Eigen::VectorXd& w0, double zero_threshold) {
    ScalingSet s;
    s.zero_threshold = zero_threshold;
    auto guard = [zero_threshold](const Eigen::VectorXd& v) {
        Eigen::VectorXd d = v;
        for (Eigen::Index i = 0; i < d.size(); ++i)
            if (std::abs(d[i]) < zero_threshold) d[i] = 1.0;
        return d;
    };
    s.s_x = guard(x0);
    s.s_u = guard(u0);
    s.s_w = guard(w0);
    return s;
}

ScaledSystem::ScaledSystem(const NdaeSystem& base, ScalingSet scaling)
    : base_(&base), scaling_(std::move(scaling)) {
    const Eigen::VectorXd& sx = scaling_.s_x;
    const Eigen::VectorXd& su = scaling_.s_u;
    const Eigen::VectorXd& sw = scaling_.s_w;
    A_ = sx.cwiseInverse().asDiagonal() * base.A * sx.asDiagonal();
    B_u_ = sx.cwiseInverse().asDiagonal() * base.B_u * su.asDiagonal();
    B_w_ = sx.cwiseInverse().asDiagonal() * base.B_w * sw.asDiagonal();
    C_ = base.C * sx.asDiagonal();
}

void ScaledSystem::rhs(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                       const Eigen::VectorXd& w, Eigen::VectorXd& out) const {
    base_->residual(scaling_.unscale_x(x), u.cwiseProduct(scaling_.s_u),
                    w.cwiseProduct(scaling_.s_w), out);
    out.array() /= scaling_.s_x.array();
}

Eigen::VectorXd ScaledSystem::nonlinearity(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                           const Eigen::VectorXd& w) const {
    Eigen::VectorXd f = base_->nonlinearity(scaling_.unscale_x(x), u.cwiseProduct(scaling_.s_u),
                                            w.cwiseProduct(scaling_.s_w));
    f.array() /= scaling_.s_x.array();
    return f;
}

void ScaledSystem::nonlinearity_rows(std::span<const int> rows, const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& u, const Eigen::VectorXd& w,
                                     Eigen::VectorXd& out) const {
    base_->nonlinearity_rows(rows, scaling_.unscale_x(x), u.cwiseProduct(scaling_.s_u),
                             w.cwiseProduct(scaling_.s_w), out);
    for (size_t k = 0; k < rows.size(); ++k)
        out[static_cast<Eigen::Index>(k)] /= scaling_.s_x[rows[k]];
}

ScaledSystem scale_system(const NdaeSystem& sys, const Eigen::VectorXd& x0,
                          const Eigen::VectorXd& u0, const Eigen::VectorXd& w0,
                          double zero_threshold) {
    return ScaledSystem(sys, make_scaling(x0, u0, w0, zero_threshold));
}

}  // namespace ndae
