#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "ndae/grid.hpp"

namespace ndae {

/// Anything integrable in the compact singular form
/// E xdot = F(x, u, w) with E = diag(1...1, 0...0):
/// the full grid model, its scaled variant, reduced models and test fixtures.
class DaeSystem {
public:
    virtual ~DaeSystem() = default;
    virtual int n_dyn() const = 0;
    virtual int n_alg() const = 0;
    virtual int n_inputs() const = 0;
    virtual int n_disturbances() const = 0;
    /// Full right-hand side; rows [n_dyn, n_dyn+n_alg) are the algebraic residual.
    virtual void rhs(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                     const Eigen::VectorXd& w, Eigen::VectorXd& out) const = 0;

    int n_states() const { return n_dyn() + n_alg(); }
};

enum class IntegrationMethod { Trapezoidal, Bdf2 };

struct SolverOptions {
    double h = 1e-3;            // fixed step, seconds
    double newton_tol = 1e-10;  // residual infinity-norm target
    double alg_tol = 1e-8;      // accepted-step algebraic residual bound
    int max_newton = 12;
    int max_halvings = 8;
    IntegrationMethod method = IntegrationMethod::Trapezoidal;
    double record_dt = 1e-2;    // snapshot cadence (interpolated)
    bool reuse_jacobian = true;
};

struct ConvergenceError : Error {
    ConvergenceError(const std::string& msg, Eigen::VectorXd iterate, double residual)
        : Error(msg), last_iterate(std::move(iterate)), best_residual(residual) {}
    Eigen::VectorXd last_iterate;
    double best_residual = 0.0;
};

struct IndexError : Error {
    using Error::Error;
};

struct SolverStats {
    long newton_iterations = 0;
    long jacobian_builds = 0;
    long step_halvings = 0;
    long steps = 0;
};

struct Trajectory {
    Eigen::VectorXd times;
    Eigen::MatrixXd states;   // n x T
    Eigen::MatrixXd u_trace;  // n_u x T
    Eigen::MatrixXd w_trace;  // n_w x T
    SolverStats stats;

    int columns() const { return static_cast<int>(times.size()); }
};

/// Piecewise inputs plus the active topology stage as functions of time.
/// `events` lists every instant where inputs or stage jump; the integrator
/// lands a step on each and re-solves algebraic consistency across it.
struct InputSchedule {
    std::function<void(double t, Eigen::VectorXd& u, Eigen::VectorXd& w)> inputs;
    std::function<int(double t)> stage_of;  // nullptr -> always stage 0
    std::vector<double> events;

    void eval(double t, Eigen::VectorXd& u, Eigen::VectorXd& w) const { inputs(t, u, w); }
    int stage(double t) const { return stage_of ? stage_of(t) : 0; }
};

InputSchedule constant_schedule(const Eigen::VectorXd& u0, const Eigen::VectorXd& w0);

/// Newton solve of the algebraic rows for x_a with x_d frozen.
/// Bisection damping on the residual norm. Throws IndexError when the
/// algebraic Jacobian is singular, ConvergenceError on stagnation.
Eigen::VectorXd solve_consistent(const DaeSystem& sys, const Eigen::VectorXd& x_guess,
                                 const Eigen::VectorXd& u, const Eigen::VectorXd& w,
                                 const SolverOptions& opts = {});

/// Damped Gauss-Newton on the full residual F(x,u,w) = 0. `gauge_index`, when
/// nonnegative, pins that state to its guess value (angle reference for grids
/// whose equilibrium set is rotation-invariant).
Eigen::VectorXd find_equilibrium(const DaeSystem& sys, const Eigen::VectorXd& u,
                                 const Eigen::VectorXd& w, const Eigen::VectorXd& guess,
                                 const SolverOptions& opts = {}, int gauge_index = -1);

struct EquilibriumResult {
    Eigen::VectorXd x;
    Eigen::VectorXd w;  // disturbance vector after free-entry adjustment
};

/// Equilibrium with selected disturbance entries treated as unknowns and
/// selected states pinned to their guess. Grids use this to back-solve the
/// irradiance that balances each DC link, which has no other closure.
EquilibriumResult find_equilibrium_adjusted(const DaeSystem& sys, const Eigen::VectorXd& u,
                                            const Eigen::VectorXd& w_guess,
                                            const Eigen::VectorXd& x_guess,
                                            const SolverOptions& opts,
                                            const std::vector<int>& pinned_states,
                                            const std::vector<int>& free_disturbances);

/// Full-grid equilibrium from the nominal set-points: flat start, angle gauge,
/// DC-link states pinned, irradiance entries adjusted for consistency.
class NdaeSystem;
EquilibriumResult grid_equilibrium(const NdaeSystem& sys, const SolverOptions& opts = {});

/// Implicit one-step integration over [t0, t1] with scheduled inputs and
/// topology stages. `stages[k]` is the system active while schedule.stage==k.
/// Every accepted step satisfies the algebraic residual bound; failed Newton
/// steps are retried on halved substeps.
Trajectory integrate(const std::vector<const DaeSystem*>& stages, const InputSchedule& schedule,
                     const Eigen::VectorXd& x0, double t0, double t1,
                     const SolverOptions& opts = {});

/// Single-stage convenience overload.
Trajectory integrate(const DaeSystem& sys, const InputSchedule& schedule,
                     const Eigen::VectorXd& x0, double t0, double t1,
                     const SolverOptions& opts = {});

/// Finite-difference Jacobian of the full right-hand side w.r.t. x.
Eigen::MatrixXd fd_jacobian(const DaeSystem& sys, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& u, const Eigen::VectorXd& w);

/// Adapter exposing an NdaeSystem (or any compact carrier) to the solver.
class NdaeSystem;
class NdaeView final : public DaeSystem {
public:
    explicit NdaeView(const NdaeSystem& sys) : sys_(&sys) {}
    int n_dyn() const override;
    int n_alg() const override;
    int n_inputs() const override;
    int n_disturbances() const override;
    void rhs(const Eigen::VectorXd& x, const Eigen::VectorXd& u, const Eigen::VectorXd& w,
             Eigen::VectorXd& out) const override;

private:
    const NdaeSystem* sys_;
};

}  // namespace ndae
