#include "ndae/scenario.hpp"

#include <cmath>

#include "ndae/kvfile.hpp"

namespace ndae {

namespace {

int stage_at(const Scenario& sc, double t) {
    if (sc.kind != Scenario::Kind::LineFault) return 0;
    if (t < sc.t_apply) return 0;
    if (t < sc.t_clear_near) return 1;
    if (t < sc.t_clear_remote) return 2;
    return 3;
}

}  // namespace

EffectiveInputs apply_scenario(const Scenario& sc, double t, const Eigen::VectorXd& u0,
                               const Eigen::VectorXd& w0, const NdaeSystem& sys) {
    EffectiveInputs eff;
    eff.u = u0;
    eff.w = w0;
    eff.stage = stage_at(sc, t);

    switch (sc.kind) {
        case Scenario::Kind::None:
        case Scenario::Kind::LineFault:
        case Scenario::Kind::StatePerturbation:
            break;
        case Scenario::Kind::LoadStep:
            if (t > sc.t_start)
                for (int idx : sys.demand_indices()) eff.w[idx] *= 1.0 + sc.delta_d;
            break;
        case Scenario::Kind::MechPowerStep:
            if (t >= sc.t_start && t < sc.t_start + sc.duration) {
                if (sc.machine < 0 || sc.machine >= sys.layout.G)
                    throw Error("mechanical step references a machine that does not exist");
                eff.u[sc.machine] *= sc.factor;  // P_v* slot of that machine
            }
            break;
        case Scenario::Kind::InputPerturbation: {
            double shape = 0.0;
            if (sc.shape == InputShape::StepHold)
                shape = t >= sc.onset ? 1.0 : 0.0;
            else
                shape = (t >= sc.onset && t < sc.onset + sc.pulse_width) ? 1.0 / sc.pulse_width
                                                                         : 0.0;
            if (shape != 0.0) eff.u += shape * sc.input_delta;
            break;
        }
    }
    return eff;
}

std::vector<Eigen::MatrixXcd> scenario_ybus_stages(const Scenario& sc, const NdaeSystem& sys) {
    std::vector<Eigen::MatrixXcd> stages{sys.Y};
    if (sc.kind != Scenario::Kind::LineFault) return stages;

    const auto& branches = sys.grid->branches;
    if (sc.branch < 0 || sc.branch >= static_cast<int>(branches.size()))
        throw Error("fault references a branch that does not exist");
    const Branch& br = branches[static_cast<size_t>(sc.branch)];
    if (!br.in_service) throw Error("fault on an out-of-service branch");

    const int near = br.from - 1;

    // stage 1: bolted fault at the near bus, line still in service
    Eigen::MatrixXcd y_faulted = sys.Y;
    y_faulted(near, near) += Complex(sc.fault_admittance, 0.0);

    // line removed from the base topology
    auto pruned = sys.grid->branches;
    pruned[static_cast<size_t>(sc.branch)].in_service = false;
    const Eigen::MatrixXcd y_pruned = assemble_ybus(sys.grid->buses, pruned);

    // stage 2: near breaker open, fault still energized through the network
    Eigen::MatrixXcd y_pruned_faulted = y_pruned;
    y_pruned_faulted(near, near) += Complex(sc.fault_admittance, 0.0);

    stages.push_back(y_faulted);
    stages.push_back(y_pruned_faulted);
    stages.push_back(sc.restore_line ? sys.Y : y_pruned);
    return stages;
}

std::vector<double> scenario_events(const Scenario& sc) {
    switch (sc.kind) {
        case Scenario::Kind::LoadStep:
            return {sc.t_start};
        case Scenario::Kind::LineFault:
            return {sc.t_apply, sc.t_clear_near, sc.t_clear_remote};
        case Scenario::Kind::MechPowerStep:
            return {sc.t_start, sc.t_start + sc.duration};
        case Scenario::Kind::InputPerturbation:
            if (sc.shape == InputShape::UnitPulse)
                return {sc.onset, sc.onset + sc.pulse_width};
            return {sc.onset};
        default:
            return {};
    }
}

InputSchedule scenario_schedule(const Scenario& sc, const NdaeSystem& sys,
                                const Eigen::VectorXd& u0, const Eigen::VectorXd& w0) {
    InputSchedule sched;
    const NdaeSystem* sys_ptr = &sys;
    sched.inputs = [sc, u0, w0, sys_ptr](double t, Eigen::VectorXd& u, Eigen::VectorXd& w) {
        const EffectiveInputs eff = apply_scenario(sc, t, u0, w0, *sys_ptr);
        u = eff.u;
        w = eff.w;
    };
    sched.stage_of = [sc](double t) { return stage_at(sc, t); };
    sched.events = scenario_events(sc);
    return sched;
}

std::vector<NdaeSystem> scenario_stage_systems(const Scenario& sc, const NdaeSystem& sys) {
    std::vector<NdaeSystem> out;
    for (const Eigen::MatrixXcd& y : scenario_ybus_stages(sc, sys)) out.push_back(sys.with_ybus(y));
    return out;
}

Scenario scenario_from_kv(const KvNode& root) {
    const KvNode& s = root.require("scenario");
    Scenario sc;
    const std::string kind = s.str_or("kind", "none");
    if (kind == "none") {
        sc.kind = Scenario::Kind::None;
    } else if (kind == "load-step") {
        sc.kind = Scenario::Kind::LoadStep;
        sc.delta_d = s.num("delta_d");
        sc.t_start = s.num_or("t_start", 0.0);
    } else if (kind == "line-fault") {
        sc.kind = Scenario::Kind::LineFault;
        sc.branch = static_cast<int>(s.integer("branch"));
        sc.t_apply = s.num("t_apply");
        sc.t_clear_near = s.num("t_clear_near");
        sc.t_clear_remote = s.num("t_clear_remote");
        sc.fault_admittance = s.num_or("fault_admittance", 1e4);
        sc.restore_line = s.integer_or("restore_line", 0) != 0;
        if (!(sc.t_apply < sc.t_clear_near && sc.t_clear_near < sc.t_clear_remote))
            s.fail("fault times must be ordered: apply < clear_near < clear_remote");
    } else if (kind == "mech-step") {
        sc.kind = Scenario::Kind::MechPowerStep;
        sc.machine = static_cast<int>(s.integer("machine"));
        sc.factor = s.num("factor");
        sc.t_start = s.num("t_start");
        sc.duration = s.num("duration");
    } else {
        s.fail("unknown scenario kind '" + kind + "'");
    }
    return sc;
}

Scenario load_scenario(const std::string& path) { return scenario_from_kv(parse_kv_file(path)); }

}  // namespace ndae
