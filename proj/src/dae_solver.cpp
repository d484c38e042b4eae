#include "ndae/dae_solver.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "ndae/ndae_system.hpp"

namespace ndae {

int NdaeView::n_dyn() const { return sys_->n_dyn(); }
int NdaeView::n_alg() const { return sys_->n_alg(); }
int NdaeView::n_inputs() const { return sys_->n_inputs(); }
int NdaeView::n_disturbances() const { return sys_->n_disturbances(); }
void NdaeView::rhs(const Eigen::VectorXd& x, const Eigen::VectorXd& u, const Eigen::VectorXd& w,
                   Eigen::VectorXd& out) const {
    sys_->residual(x, u, w, out);
}

InputSchedule constant_schedule(const Eigen::VectorXd& u0, const Eigen::VectorXd& w0) {
    InputSchedule s;
    s.inputs = [u0, w0](double, Eigen::VectorXd& u, Eigen::VectorXd& w) {
        u = u0;
        w = w0;
    };
    return s;
}

Eigen::MatrixXd fd_jacobian(const DaeSystem& sys, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& u, const Eigen::VectorXd& w) {
    const int n = sys.n_states();
    Eigen::MatrixXd J(n, n);
    Eigen::VectorXd f0(n), f1(n), xp = x;
    sys.rhs(x, u, w, f0);
    const double base = std::sqrt(std::numeric_limits<double>::epsilon());
    for (int j = 0; j < n; ++j) {
        const double dx = base * std::max(1.0, std::abs(x[j]));
        xp[j] = x[j] + dx;
        sys.rhs(xp, u, w, f1);
        J.col(j) = (f1 - f0) / dx;
        xp[j] = x[j];
    }
    return J;
}

Eigen::VectorXd solve_consistent(const DaeSystem& sys, const Eigen::VectorXd& x_guess,
                                 const Eigen::VectorXd& u, const Eigen::VectorXd& w,
                                 const SolverOptions& opts) {
    const int nd = sys.n_dyn();
    const int na = sys.n_alg();
    if (na == 0) return x_guess;

    Eigen::VectorXd x = x_guess;
    Eigen::VectorXd full(nd + na), f1(nd + na);
    const double fd = std::sqrt(std::numeric_limits<double>::epsilon());

    auto alg_residual = [&](const Eigen::VectorXd& xx) {
        sys.rhs(xx, u, w, full);
        return Eigen::VectorXd(full.tail(na));
    };

    Eigen::VectorXd r = alg_residual(x);
    double rnorm = r.lpNorm<Eigen::Infinity>();

    for (int it = 0; it < opts.max_newton; ++it) {
        if (rnorm <= opts.newton_tol) return x;

        Eigen::MatrixXd J(na, na);
        Eigen::VectorXd xp = x;
        sys.rhs(x, u, w, full);
        const Eigen::VectorXd f0a = full.tail(na);
        for (int j = 0; j < na; ++j) {
            const int col = nd + j;
            const double dx = fd * std::max(1.0, std::abs(x[col]));
            xp[col] = x[col] + dx;
            sys.rhs(xp, u, w, f1);
            J.col(j) = (f1.tail(na) - f0a) / dx;
            xp[col] = x[col];
        }

        Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
        const Eigen::VectorXd dxa = lu.solve(-r);
        if (!dxa.allFinite())
            throw IndexError("singular algebraic Jacobian: system is not index-1 here");

        // bisection damping: halve the step until the residual decreases
        double lambda = 1.0;
        bool accepted = false;
        for (int half = 0; half < 30; ++half) {
            Eigen::VectorXd xt = x;
            xt.tail(na) += lambda * dxa;
            Eigen::VectorXd rt = alg_residual(xt);
            const double rtn = rt.lpNorm<Eigen::Infinity>();
            if (rtn < rnorm || rtn <= opts.newton_tol) {
                x = xt;
                r = rt;
                rnorm = rtn;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted)
            throw ConvergenceError(
                "consistency solve stalled at residual " + std::to_string(rnorm), x, rnorm);
    }
    if (rnorm <= opts.newton_tol) return x;
    throw ConvergenceError("consistency solve did not converge, residual " + std::to_string(rnorm),
                           x, rnorm);
}

Eigen::VectorXd find_equilibrium(const DaeSystem& sys, const Eigen::VectorXd& u,
                                 const Eigen::VectorXd& w, const Eigen::VectorXd& guess,
                                 const SolverOptions& opts, int gauge_index) {
    const int n = sys.n_states();
    const int rows = gauge_index >= 0 ? n + 1 : n;
    Eigen::VectorXd x = guess;
    Eigen::VectorXd f(n), f1(n);
    const double fd = std::sqrt(std::numeric_limits<double>::epsilon());
    const double gauge_target = gauge_index >= 0 ? guess[gauge_index] : 0.0;

    auto residual = [&](const Eigen::VectorXd& xx) {
        Eigen::VectorXd r(rows);
        sys.rhs(xx, u, w, f);
        r.head(n) = f;
        if (gauge_index >= 0) r[n] = xx[gauge_index] - gauge_target;
        return r;
    };

    Eigen::VectorXd r = residual(x);
    double rnorm = r.head(n).lpNorm<Eigen::Infinity>();
    double best = rnorm;
    Eigen::VectorXd best_x = x;

    const int max_iter = 4 * opts.max_newton;
    for (int it = 0; it < max_iter; ++it) {
        if (rnorm <= opts.newton_tol) return x;

        Eigen::MatrixXd J(rows, n);
        sys.rhs(x, u, w, f);
        const Eigen::VectorXd f0 = f;
        Eigen::VectorXd xp = x;
        for (int j = 0; j < n; ++j) {
            const double dx = fd * std::max(1.0, std::abs(x[j]));
            xp[j] = x[j] + dx;
            sys.rhs(xp, u, w, f1);
            J.col(j).head(n) = (f1 - f0) / dx;
            if (gauge_index >= 0) J(n, j) = (j == gauge_index) ? 1.0 : 0.0;
            xp[j] = x[j];
        }

        const Eigen::VectorXd dx = J.colPivHouseholderQr().solve(-r);
        if (!dx.allFinite())
            throw ConvergenceError("equilibrium Jacobian is rank deficient", best_x, best);

        double lambda = 1.0;
        bool accepted = false;
        const double r2 = r.norm();
        for (int half = 0; half < 40; ++half) {
            const Eigen::VectorXd xt = x + lambda * dx;
            const Eigen::VectorXd rt = residual(xt);
            if (rt.norm() < r2 * (1.0 - 1e-4 * lambda) ||
                rt.head(n).lpNorm<Eigen::Infinity>() <= opts.newton_tol) {
                x = xt;
                r = rt;
                rnorm = r.head(n).lpNorm<Eigen::Infinity>();
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if (rnorm < best) {
            best = rnorm;
            best_x = x;
        }
        if (!accepted)
            throw ConvergenceError(
                "equilibrium search stalled at residual " + std::to_string(best), best_x, best);
    }
    if (rnorm <= opts.newton_tol) return x;
    throw ConvergenceError("equilibrium search did not converge, residual " + std::to_string(best),
                           best_x, best);
}

EquilibriumResult find_equilibrium_adjusted(const DaeSystem& sys, const Eigen::VectorXd& u,
                                            const Eigen::VectorXd& w_guess,
                                            const Eigen::VectorXd& x_guess,
                                            const SolverOptions& opts,
                                            const std::vector<int>& pinned_states,
                                            const std::vector<int>& free_disturbances) {
    const int n = sys.n_states();
    const int nf = static_cast<int>(free_disturbances.size());
    const int np = static_cast<int>(pinned_states.size());
    const int unknowns = n + nf;
    const int rows = n + np;

    // augmented unknown vector [x; w_free]
    Eigen::VectorXd z(unknowns);
    z.head(n) = x_guess;
    for (int k = 0; k < nf; ++k) z[n + k] = w_guess[free_disturbances[static_cast<size_t>(k)]];

    Eigen::VectorXd w = w_guess;
    Eigen::VectorXd f(n), f1(n);
    const double fd = std::sqrt(std::numeric_limits<double>::epsilon());

    auto residual = [&](const Eigen::VectorXd& zz) {
        Eigen::VectorXd r(rows);
        Eigen::VectorXd ww = w_guess;
        for (int k = 0; k < nf; ++k) ww[free_disturbances[static_cast<size_t>(k)]] = zz[n + k];
        sys.rhs(zz.head(n), u, ww, f);
        r.head(n) = f;
        for (int k = 0; k < np; ++k)
            r[n + k] = zz[pinned_states[static_cast<size_t>(k)]] -
                       x_guess[pinned_states[static_cast<size_t>(k)]];
        return r;
    };

    Eigen::VectorXd r = residual(z);
    double rnorm = r.head(n).lpNorm<Eigen::Infinity>();
    double best = rnorm;
    Eigen::VectorXd best_z = z;

    const int max_iter = 4 * opts.max_newton;
    for (int it = 0; it < max_iter && rnorm > opts.newton_tol; ++it) {
        Eigen::MatrixXd J(rows, unknowns);
        const Eigen::VectorXd r0 = residual(z);
        Eigen::VectorXd zp = z;
        for (int j = 0; j < unknowns; ++j) {
            const double dz = fd * std::max(1.0, std::abs(z[j]));
            zp[j] = z[j] + dz;
            J.col(j) = (residual(zp) - r0) / dz;
            zp[j] = z[j];
        }

        const Eigen::VectorXd dz = J.colPivHouseholderQr().solve(-r);
        if (!dz.allFinite())
            throw ConvergenceError("adjusted equilibrium Jacobian is rank deficient",
                                   best_z.head(n), best);

        double lambda = 1.0;
        bool accepted = false;
        const double r2 = r.norm();
        for (int half = 0; half < 40; ++half) {
            const Eigen::VectorXd zt = z + lambda * dz;
            const Eigen::VectorXd rt = residual(zt);
            if (rt.norm() < r2 * (1.0 - 1e-4 * lambda) ||
                rt.head(n).lpNorm<Eigen::Infinity>() <= opts.newton_tol) {
                z = zt;
                r = rt;
                rnorm = r.head(n).lpNorm<Eigen::Infinity>();
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if (rnorm < best) {
            best = rnorm;
            best_z = z;
        }
        if (!accepted)
            throw ConvergenceError(
                "adjusted equilibrium search stalled at residual " + std::to_string(best),
                best_z.head(n), best);
    }
    if (rnorm > opts.newton_tol)
        throw ConvergenceError(
            "adjusted equilibrium did not converge, residual " + std::to_string(best),
            best_z.head(n), best);

    EquilibriumResult res;
    res.x = z.head(n);
    res.w = w_guess;
    for (int k = 0; k < nf; ++k) res.w[free_disturbances[static_cast<size_t>(k)]] = z[n + k];
    return res;
}

EquilibriumResult grid_equilibrium(const NdaeSystem& sys, const SolverOptions& opts) {
    NdaeView view(sys);
    const Eigen::VectorXd u0 = sys.nominal_u();
    const Eigen::VectorXd w0 = sys.nominal_w();
    const Eigen::VectorXd guess = sys.flat_start();

    std::vector<int> pinned = sys.dc_link_states();
    const int gauge = sys.angle_reference();
    if (gauge >= 0) pinned.push_back(gauge);

    return find_equilibrium_adjusted(view, u0, w0, guess, opts, pinned,
                                     sys.irradiance_indices());
}

namespace {

void step_residual(const DaeSystem& sys, bool bdf_active, double h, const Eigen::VectorXd& xk,
                   const Eigen::VectorXd& fk, const Eigen::VectorXd& xkm1,
                   const Eigen::VectorXd& xi, const Eigen::VectorXd& u, const Eigen::VectorXd& w,
                   Eigen::VectorXd& fi, Eigen::VectorXd& out) {
    const int nd = sys.n_dyn();
    const int na = sys.n_alg();
    sys.rhs(xi, u, w, fi);
    out.resize(nd + na);
    if (!bdf_active)
        out.head(nd) = xi.head(nd) - xk.head(nd) - 0.5 * h * (fi.head(nd) + fk.head(nd));
    else
        out.head(nd) =
            1.5 * xi.head(nd) - 2.0 * xk.head(nd) + 0.5 * xkm1.head(nd) - h * fi.head(nd);
    out.tail(na) = fi.tail(na);
}

// iteration matrix: dynamic rows of the scheme, algebraic rows of the Jacobian
void build_step_matrix(int nd, int na, bool bdf_active, double h, const Eigen::MatrixXd& J,
                       Eigen::MatrixXd& M) {
    const int n = nd + na;
    M.resize(n, n);
    if (!bdf_active) {
        M.topRows(nd) = -0.5 * h * J.topRows(nd);
        for (int i = 0; i < nd; ++i) M(i, i) += 1.0;
    } else {
        M.topRows(nd) = -h * J.topRows(nd);
        for (int i = 0; i < nd; ++i) M(i, i) += 1.5;
    }
    M.bottomRows(na) = J.bottomRows(na);
}

struct StepWorkspace {
    Eigen::MatrixXd jac;
    Eigen::MatrixXd M;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    bool jac_valid = false;
    bool lu_valid = false;
    double lu_h = -1.0;
    bool lu_bdf = false;

    void invalidate() { jac_valid = lu_valid = false; }

    void refresh_jacobian(const DaeSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                          const Eigen::VectorXd& w, SolverStats& stats) {
        jac = fd_jacobian(sys, x, u, w);
        jac_valid = true;
        lu_valid = false;
        ++stats.jacobian_builds;
    }

    void ensure_lu(int nd, int na, bool bdf_active, double h) {
        if (lu_valid && lu_h == h && lu_bdf == bdf_active) return;
        build_step_matrix(nd, na, bdf_active, h, jac, M);
        lu.compute(M);
        lu_valid = true;
        lu_h = h;
        lu_bdf = bdf_active;
    }
};

}  // namespace

Trajectory integrate(const std::vector<const DaeSystem*>& stages, const InputSchedule& schedule,
                     const Eigen::VectorXd& x0, double t0, double t1, const SolverOptions& opts) {
    if (stages.empty()) throw Error("integrate: no system stages");
    const DaeSystem& first = *stages.front();
    const int n = first.n_states();
    const int nd = first.n_dyn();
    const int na = first.n_alg();

    SolverStats stats;

    std::vector<double> cuts{t0};
    for (double e : schedule.events)
        if (e > t0 + 1e-15 && e < t1 - 1e-15) cuts.push_back(e);
    cuts.push_back(t1);
    std::sort(cuts.begin(), cuts.end());

    const int n_rec = static_cast<int>(std::floor((t1 - t0) / opts.record_dt + 0.5)) + 1;
    Eigen::VectorXd u(first.n_inputs()), w(first.n_disturbances());
    Trajectory traj;
    traj.times.resize(n_rec);
    traj.states.resize(n, n_rec);
    traj.u_trace.resize(first.n_inputs(), n_rec);
    traj.w_trace.resize(first.n_disturbances(), n_rec);

    int rec = 0;
    auto record = [&](double t, const Eigen::VectorXd& x) {
        traj.times[rec] = t;
        traj.states.col(rec) = x;
        schedule.eval(t, u, w);
        traj.u_trace.col(rec) = u;
        traj.w_trace.col(rec) = w;
        ++rec;
    };
    // emit recording instants inside (ta, tb]; interpolated points are nudged
    // back onto the constraint manifold when they drift past the tolerance
    auto record_through = [&](const DaeSystem& sys, double ta, const Eigen::VectorXd& xa,
                              double tb, const Eigen::VectorXd& xb) {
        Eigen::VectorXd fr(n);
        while (rec < n_rec) {
            const double tr = t0 + rec * opts.record_dt;
            if (tr > tb + 1e-12) break;
            const double alpha = (tb - ta) > 0 ? (tr - ta) / (tb - ta) : 1.0;
            if (alpha > 1.0 - 1e-9) {
                record(tr, xb);
                continue;
            }
            Eigen::VectorXd xr = (1.0 - alpha) * xa + alpha * xb;
            if (na > 0) {
                schedule.eval(tr, u, w);
                sys.rhs(xr, u, w, fr);
                if (fr.tail(na).lpNorm<Eigen::Infinity>() > opts.alg_tol)
                    xr = solve_consistent(sys, xr, u, w, opts);
            }
            record(tr, xr);
        }
    };

    Eigen::VectorXd x = x0;
    Eigen::VectorXd xprev = x0;
    bool have_history = false;

    {
        schedule.eval(t0, u, w);
        const DaeSystem& sys = *stages.at(static_cast<size_t>(schedule.stage(t0)));
        Eigen::VectorXd f(n);
        sys.rhs(x, u, w, f);
        if (na > 0 && f.tail(na).lpNorm<Eigen::Infinity>() > opts.alg_tol)
            x = solve_consistent(sys, x, u, w, opts);
    }
    record(t0, x);

    StepWorkspace ws;
    Eigen::VectorXd fk(n), fi(n), rstep, xi;

    for (size_t seg = 0; seg + 1 < cuts.size(); ++seg) {
        const double ta = cuts[seg];
        const double tb = cuts[seg + 1];
        const double tmid = 0.5 * (ta + tb);
        const DaeSystem& sys = *stages.at(static_cast<size_t>(schedule.stage(tmid)));

        // event crossing: x_d continuous, x_a re-solved under the new stage
        schedule.eval(tmid, u, w);
        {
            Eigen::VectorXd f(n);
            sys.rhs(x, u, w, f);
            if (na > 0 && f.tail(na).lpNorm<Eigen::Infinity>() > opts.alg_tol) {
                x = solve_consistent(sys, x, u, w, opts);
                have_history = false;
            }
        }
        if (seg > 0) {
            ws.invalidate();
            have_history = false;
        }

        double t = ta;
        while (t < tb - 1e-12) {
            const double h_full = std::min(opts.h, tb - t);
            int halvings = 0;
            double h = h_full;
            int substeps = 1;

            for (;;) {
                bool failed = false;
                Eigen::VectorXd xs = x;
                Eigen::VectorXd xs_prev = xprev;
                bool hist = have_history;
                double ts = t;

                for (int ss = 0; ss < substeps; ++ss) {
                    schedule.eval(ts + h, u, w);
                    sys.rhs(xs, u, w, fk);
                    const bool bdf_active = opts.method == IntegrationMethod::Bdf2 && hist;

                    if (!ws.jac_valid || !opts.reuse_jacobian)
                        ws.refresh_jacobian(sys, xs, u, w, stats);
                    ws.ensure_lu(nd, na, bdf_active, h);

                    xi = xs;
                    bool converged = false;
                    bool refreshed = false;
                    int iters = 0;
                    for (int it = 0; it < opts.max_newton; ++it) {
                        step_residual(sys, bdf_active, h, xs, fk, xs_prev, xi, u, w, fi, rstep);
                        ++stats.newton_iterations;
                        iters = it + 1;
                        if (rstep.lpNorm<Eigen::Infinity>() <= opts.newton_tol) {
                            converged = true;
                            break;
                        }
                        Eigen::VectorXd dx = ws.lu.solve(-rstep);
                        if (!dx.allFinite()) break;
                        xi += dx;
                        if (it >= opts.max_newton / 2 && !refreshed) {
                            ws.refresh_jacobian(sys, xi, u, w, stats);
                            ws.ensure_lu(nd, na, bdf_active, h);
                            refreshed = true;
                        }
                    }
                    if (!converged) {
                        failed = true;
                        break;
                    }
                    // stale-Jacobian heuristic: slow contraction triggers a
                    // rebuild at the start of the next step
                    if (iters > 4) ws.invalidate();
                    xs_prev = xs;
                    hist = true;
                    xs = xi;
                    ts += h;
                    ++stats.steps;
                }

                if (!failed) {
                    record_through(sys, t, x, ts, xs);
                    xprev = xs_prev;
                    have_history = hist;
                    x = xs;
                    t = ts;
                    break;
                }
                ++halvings;
                ++stats.step_halvings;
                ws.invalidate();
                if (halvings > opts.max_halvings) {
                    traj.times.conservativeResize(rec);
                    traj.states.conservativeResize(Eigen::NoChange, rec);
                    traj.u_trace.conservativeResize(Eigen::NoChange, rec);
                    traj.w_trace.conservativeResize(Eigen::NoChange, rec);
                    traj.stats = stats;
                    throw ConvergenceError("integration failed at t = " + std::to_string(t) +
                                               " after repeated step halving",
                                           x, 0.0);
                }
                h *= 0.5;
                substeps *= 2;
            }
        }
    }

    if (rec < n_rec) record(t1, x);
    traj.times.conservativeResize(rec);
    traj.states.conservativeResize(Eigen::NoChange, rec);
    traj.u_trace.conservativeResize(Eigen::NoChange, rec);
    traj.w_trace.conservativeResize(Eigen::NoChange, rec);
    traj.stats = stats;
    return traj;
}

Trajectory integrate(const DaeSystem& sys, const InputSchedule& schedule,
                     const Eigen::VectorXd& x0, double t0, double t1, const SolverOptions& opts) {
    std::vector<const DaeSystem*> stages{&sys};
    return integrate(stages, schedule, x0, t0, t1, opts);
}

}  // namespace ndae
