#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace ndae {

using Complex = std::complex<double>;

/// Global per-unit system: S_b = 100 MVA, frequency base 120*pi rad/s.
inline constexpr double kBasePowerMva = 100.0;
inline constexpr double kOmegaBase = 120.0 * 3.14159265358979323846;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed grid data: dangling branch, duplicate ids, device on a non-unit bus.
struct StructuralError : Error {
    using Error::Error;
};

/// Non-finite quantities reached an evaluation path.
struct EvaluationError : Error {
    using Error::Error;
};

enum class BusKind { Generator, Solar, Load, NonUnit };

struct Bus {
    int id = 0;  // 1-based, contiguous
    BusKind kind = BusKind::NonUnit;
    Complex shunt{0.0, 0.0};  // shunt admittance, pu
};

struct Branch {
    int from = 0;
    int to = 0;
    Complex series_admittance{0.0, 0.0};  // pu
    double charging = 0.0;                // total line charging susceptance, pu
    bool in_service = true;
};

enum class TurbineKind { Thermal, Hydro };

/// Ninth-order plant: swing pair, two transient voltages, turbine/governor,
/// DC1 exciter with exponential saturation.
struct SyncMachineParams {
    int bus = 0;
    double H = 5.0;      // inertia, pu*s
    double R_d = 0.05;   // governor droop
    double x_d = 1.8, x_q = 1.7;
    double xp_d = 0.3, xp_q = 0.55;
    double t_do = 8.0, t_qo = 0.4;
    double t_ch = 0.3;   // steam chest / gate servo
    double t_w = 1.0;    // water starting time (hydro only)
    double t_v = 0.1;    // valve time constant
    double t_fd = 0.8;   // field winding
    double t_f = 1.0;    // stabilizer
    double t_a = 0.02;   // amplifier
    double k_a = 20.0, k_e = 1.0, k_f = 0.063;
    double sat_a = 0.0;
    double sat_b = 0.0;
    TurbineKind turbine = TurbineKind::Thermal;
    // nominal operating set-points (become the default input vector)
    double p_set = 0.0;  // P_v*
    double v_set = 1.0;  // V*
};

/// Twelfth-order grid-forming PV plant: DC link, LCL filter, droop,
/// PI voltage/current regulators.
struct SolarPlantParams {
    int bus = 0;
    double B_C = 0.1;    // DC-link capacitance
    double X_f = 0.1, r_f = 0.01;
    double B_c = 0.05, r_c = 0.01;
    double k_p = 0.02;   // active-power droop
    double k_d = 0.0;    // q-current droop on the voltage reference
    double k_q = 0.0;    // reactive droop (kept for file compatibility)
    double tau_s = 0.05; // power measurement filter
    double tau_v = 0.05, tau_i = 0.01;
    double kappa_p = 1.0, kappa_pv = 1.0;
    double omega_b = kOmegaBase;
    double eta = 1.0;    // irradiance-to-DC-power gain
    double p_set = 0.0;  // P_e*
    double v_set = 1.0;  // V*
    double irradiance = 0.0;  // nominal I_s (disturbance vector entry)
};

enum class LoadKind { Motor, Impedance, Power };

struct LoadSpec {
    int bus = 0;
    LoadKind kind = LoadKind::Impedance;
    Complex impedance{1.0, 0.5};  // Z for impedance loads and the motor branch
    double p = 0.0, q = 0.0;      // constant-power demand (disturbance entries)
    double H_M = 0.5;             // motor inertia
    double torque_coeff = 1.0;    // T_M = coeff * w_M^exp
    double torque_exp = 2.0;
};

struct GridModel {
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<SyncMachineParams> machines;
    std::vector<SolarPlantParams> solar;
    std::vector<LoadSpec> loads;

    int bus_count() const { return static_cast<int>(buses.size()); }
    int machine_count() const { return static_cast<int>(machines.size()); }
    int solar_count() const { return static_cast<int>(solar.size()); }
    int motor_count() const;

    const Bus& bus(int id) const;

    /// Checks id contiguity, branch endpoints, device/bus-kind agreement and
    /// parameter positivity. Throws StructuralError.
    void validate() const;
};

/// Stamps branch and shunt admittances into the complex N x N bus matrix.
/// Out-of-service branches are skipped. Stamping order is fixed (branch list
/// order), so permuted inputs yield bit-identical matrices.
Eigen::MatrixXcd assemble_ybus(const std::vector<Bus>& buses,
                               const std::vector<Branch>& branches);

}  // namespace ndae
