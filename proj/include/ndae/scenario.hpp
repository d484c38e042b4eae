#pragma once

#include <vector>

#include <Eigen/Core>

#include "ndae/dae_solver.hpp"
#include "ndae/ndae_system.hpp"

namespace ndae {

/// Temporal shape of an additive input perturbation.
enum class InputShape {
    StepHold,  // held from onset to the end of the horizon
    UnitPulse  // unit-area pulse: amplitude 1/width over [onset, onset+width)
};

struct Scenario {
    enum class Kind { None, LoadStep, LineFault, MechPowerStep, InputPerturbation,
                      StatePerturbation };
    Kind kind = Kind::None;

    // load step
    double delta_d = 0.0;
    double t_start = 0.0;

    // line fault (two-stage clearing)
    int branch = -1;  // index into grid.branches
    double t_apply = 0.0, t_clear_near = 0.05, t_clear_remote = 0.2;
    double fault_admittance = 1e4;
    bool restore_line = false;

    // mechanical power step (shares t_start)
    int machine = -1;
    double factor = 1.0;
    double duration = 0.0;

    // input perturbation (additive on u)
    Eigen::VectorXd input_delta;
    double onset = 0.0;
    InputShape shape = InputShape::StepHold;
    double pulse_width = 1e-3;

    // state perturbation (applied to x0 by the caller)
    Eigen::VectorXd state_delta;
};

/// Effective inputs and topology stage at time t: load steps scale the demand
/// entries of w by (1 + delta_d), mechanical steps scale one P_v* entry,
/// input perturbations add their shaped delta. Pure function of t.
struct EffectiveInputs {
    Eigen::VectorXd u;
    Eigen::VectorXd w;
    int stage = 0;
};

EffectiveInputs apply_scenario(const Scenario& sc, double t, const Eigen::VectorXd& u0,
                               const Eigen::VectorXd& w0, const NdaeSystem& sys);

/// Admittance variants per topology stage (index 0 is the base matrix).
std::vector<Eigen::MatrixXcd> scenario_ybus_stages(const Scenario& sc, const NdaeSystem& sys);

std::vector<double> scenario_events(const Scenario& sc);

/// Schedule driving the integrator for this scenario over the given system.
InputSchedule scenario_schedule(const Scenario& sc, const NdaeSystem& sys,
                                const Eigen::VectorXd& u0, const Eigen::VectorXd& w0);

/// Per-stage system variants (base system first).
std::vector<NdaeSystem> scenario_stage_systems(const Scenario& sc, const NdaeSystem& sys);

Scenario scenario_from_kv(const struct KvNode& root);
Scenario load_scenario(const std::string& path);

}  // namespace ndae
