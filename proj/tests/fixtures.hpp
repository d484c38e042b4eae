#pragma once

#include <memory>
#include <random>

#include "ndae/dae_solver.hpp"
#include "ndae/grid_io.hpp"
#include "ndae/ndae_system.hpp"

namespace ndae::testing {

inline std::string data_path(const std::string& name) {
    return std::string(NDAE_DATA_DIR) + "/" + name;
}

inline std::shared_ptr<GridModel> grid9() { return load_grid(data_path("grid9.txt")); }

inline const NdaeSystem& grid9_system() {
    static NdaeSystem sys = assemble_ndae(grid9());
    return sys;
}

inline const EquilibriumResult& grid9_equilibrium() {
    static EquilibriumResult eq = grid_equilibrium(grid9_system());
    return eq;
}

/// Synthetic configuration shaped like the modified 39-bus study case:
/// 9 machines, one solar plant, 4 motor loads on a 30-bus network.
inline std::shared_ptr<GridModel> grid39_like() {
    auto g = std::make_shared<GridModel>();
    const int N = 30;
    for (int id = 1; id <= N; ++id) {
        Bus b;
        b.id = id;
        if (id <= 9)
            b.kind = BusKind::Generator;
        else if (id == 10)
            b.kind = BusKind::Solar;
        else if (id <= 29)
            b.kind = BusKind::Load;
        else
            b.kind = BusKind::NonUnit;
        b.shunt = {0.0, 0.01};
        g->buses.push_back(b);
    }
    // ring over the load buses plus generator spurs
    for (int id = 11; id <= 29; ++id) {
        Branch br;
        br.from = id;
        br.to = id == 29 ? 11 : id + 1;
        br.series_admittance = 1.0 / Complex(0.01, 0.1);
        br.charging = 0.04;
        g->branches.push_back(br);
    }
    for (int id = 1; id <= 10; ++id) {
        Branch br;
        br.from = id;
        br.to = 10 + id;
        br.series_admittance = 1.0 / Complex(0.005, 0.06);
        br.charging = 0.03;
        g->branches.push_back(br);
    }
    g->branches.push_back({30, 12, 1.0 / Complex(0.01, 0.08), 0.03, true});
    g->branches.push_back({30, 20, 1.0 / Complex(0.01, 0.08), 0.03, true});

    for (int i = 0; i < 9; ++i) {
        SyncMachineParams m;
        m.bus = i + 1;
        m.p_set = 0.6;
        m.v_set = 1.02;
        m.turbine = i % 3 == 2 ? TurbineKind::Hydro : TurbineKind::Thermal;
        g->machines.push_back(m);
    }
    SolarPlantParams s;
    s.bus = 10;
    s.p_set = 0.4;
    s.irradiance = 0.42;
    g->solar.push_back(s);

    for (int id = 11; id <= 29; ++id) {
        LoadSpec l;
        l.bus = id;
        if (id <= 14) {
            l.kind = LoadKind::Motor;
            l.H_M = 0.5;
            l.impedance = {2.0, 1.0};
            l.torque_coeff = 0.4;
        } else if (id % 2 == 0) {
            l.kind = LoadKind::Power;
            l.p = 0.35;
            l.q = 0.1;
        } else {
            l.kind = LoadKind::Impedance;
            l.impedance = {2.2, 1.1};
        }
        g->loads.push_back(l);
    }
    return g;
}

/// Stable 4-state LTI ODE fixture (no algebraic part) for Gramian oracles.
class LtiFixture final : public DaeSystem {
public:
    Eigen::MatrixXd A, B, C;

    LtiFixture() {
        A.resize(4, 4);
        A << -0.5, 0.2, 0.0, 0.1,
             -0.3, -1.0, 0.4, 0.0,
              0.0, -0.2, -1.5, 0.3,
              0.1, 0.0, -0.1, -2.0;
        B.resize(4, 2);
        B << 1.0, 0.0,
             0.5, 0.3,
             0.0, 1.0,
             0.2, -0.4;
        C.resize(2, 4);
        C << 1.0, 0.0, 0.5, 0.0,
             0.0, 1.0, 0.0, -0.3;
    }

    int n_dyn() const override { return 4; }
    int n_alg() const override { return 0; }
    int n_inputs() const override { return 2; }
    int n_disturbances() const override { return 0; }
    void rhs(const Eigen::VectorXd& x, const Eigen::VectorXd& u, const Eigen::VectorXd&,
             Eigen::VectorXd& out) const override {
        out.noalias() = A * x;
        out.noalias() += B * u;
    }
};

/// Scalar test DAE xdot = -x, 0 = y - x with closed-form solution.
class ScalarDae final : public DaeSystem {
public:
    int n_dyn() const override { return 1; }
    int n_alg() const override { return 1; }
    int n_inputs() const override { return 0; }
    int n_disturbances() const override { return 0; }
    void rhs(const Eigen::VectorXd& x, const Eigen::VectorXd&, const Eigen::VectorXd&,
             Eigen::VectorXd& out) const override {
        out.resize(2);
        out[0] = -x[0];
        out[1] = x[1] - x[0];
    }
};

inline Eigen::MatrixXd random_spd(int n, std::mt19937& rng, double shift = 0.1) {
    std::normal_distribution<double> dist;
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) M(i, j) = dist(rng);
    return M * M.transpose() + shift * Eigen::MatrixXd::Identity(n, n);
}

/// Dense Kronecker-product Lyapunov solve A P + P A^T + Q = 0 (oracle only).
inline Eigen::MatrixXd lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
    const int n = static_cast<int>(A.rows());
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n * n, n * n);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                K(i * n + j, k * n + j) += A(i, k);  // A P
                K(i * n + j, i * n + k) += A(j, k);  // P A^T
            }
    Eigen::VectorXd q(n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) q[i * n + j] = Q(i, j);
    const Eigen::VectorXd p = K.partialPivLu().solve(-q);
    Eigen::MatrixXd P(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) P(i, j) = p[i * n + j];
    return P;
}

}  // namespace ndae::testing
