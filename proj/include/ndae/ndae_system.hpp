#pragma once

#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ndae/grid.hpp"

namespace ndae {

/// Species-major state layout.
///
/// x_d = [ w_g | delta_g | E_q | E_d | E_fd | T_M | P_v | r_f | v_a ]  (9G)
///       [ delta_c | E_dc | Pe~ | Qe~ | i_df | i_qf | v_dc | v_qc | z_do | z_qo | z_df | z_qf ] (12R)
///       [ w_M ] (one per motor load)
/// x_a = [ I_Re | I_Im | V_Re | V_Im ]  (4N)
struct StateLayout {
    int G = 0, R = 0, Lm = 0, N = 0;
    int n_d = 0, n_a = 0, n = 0;

    // machine species offsets (within x_d)
    int m_omega(int i) const { return 0 * G + i; }
    int m_delta(int i) const { return 1 * G + i; }
    int m_eq(int i) const { return 2 * G + i; }
    int m_ed(int i) const { return 3 * G + i; }
    int m_efd(int i) const { return 4 * G + i; }
    int m_tm(int i) const { return 5 * G + i; }
    int m_pv(int i) const { return 6 * G + i; }
    int m_rf(int i) const { return 7 * G + i; }
    int m_va(int i) const { return 8 * G + i; }

    int solar_base() const { return 9 * G; }
    int s_delta(int i) const { return solar_base() + 0 * R + i; }
    int s_edc(int i) const { return solar_base() + 1 * R + i; }
    int s_pe(int i) const { return solar_base() + 2 * R + i; }
    int s_qe(int i) const { return solar_base() + 3 * R + i; }
    int s_idf(int i) const { return solar_base() + 4 * R + i; }
    int s_iqf(int i) const { return solar_base() + 5 * R + i; }
    int s_vdc(int i) const { return solar_base() + 6 * R + i; }
    int s_vqc(int i) const { return solar_base() + 7 * R + i; }
    int s_zdo(int i) const { return solar_base() + 8 * R + i; }
    int s_zqo(int i) const { return solar_base() + 9 * R + i; }
    int s_zdf(int i) const { return solar_base() + 10 * R + i; }
    int s_zqf(int i) const { return solar_base() + 11 * R + i; }

    int motor_base() const { return 9 * G + 12 * R; }
    int motor(int i) const { return motor_base() + i; }

    // algebraic offsets, absolute within x = [x_d; x_a]; bus index 0-based
    int ire(int b) const { return n_d + 0 * N + b; }
    int iim(int b) const { return n_d + 1 * N + b; }
    int vre(int b) const { return n_d + 2 * N + b; }
    int vim(int b) const { return n_d + 3 * N + b; }

    // algebraic equation rows (absolute): current balance, then per-bus device rows
    int row_bal_re(int b) const { return n_d + 0 * N + b; }
    int row_bal_im(int b) const { return n_d + 1 * N + b; }
    int row_dev_1(int b) const { return n_d + 2 * N + b; }
    int row_dev_2(int b) const { return n_d + 3 * N + b; }
};

/// Which pairing of open-circuit time constants and reactances drives the
/// transient-voltage equations. `Paper` is the printed convention of the
/// model reference; `Textbook` is the conventional two-axis pairing.
enum class EqConvention { Paper, Textbook };

struct AssemblyOptions {
    EqConvention eq_convention = EqConvention::Paper;
};

/// Compact NDAE carrier: E xdot = A x + B_u u + f(x,u,w) + B_w w, y = C x.
///
/// E is diag([1]*n_d, [0]*n_a). A/B_u/B_w hold every linear coefficient of
/// the device and network equations; f holds products, trig and saturation
/// terms plus constant offsets. residual() returns the full right-hand side
/// [g; h] so equilibria satisfy residual == 0.
class NdaeSystem {
public:
    std::shared_ptr<const GridModel> grid;
    StateLayout layout;
    AssemblyOptions options;

    Eigen::MatrixXcd Y;  // effective bus admittance matrix
    Eigen::MatrixXd A;
    Eigen::MatrixXd B_u;
    Eigen::MatrixXd B_w;
    Eigen::MatrixXd C;

    int n_dyn() const { return layout.n_d; }
    int n_alg() const { return layout.n_a; }
    int n_states() const { return layout.n; }
    int n_inputs() const { return static_cast<int>(B_u.cols()); }
    int n_disturbances() const { return static_cast<int>(B_w.cols()); }
    int n_outputs() const { return static_cast<int>(C.rows()); }

    Eigen::MatrixXd E() const;

    /// Nominal input vector u0 = [P_v* (G); V* (G); P_e* (R); V* (R)] from the
    /// device set-points.
    Eigen::VectorXd nominal_u() const;

    /// Nominal disturbance w0 = [P,Q per constant-power load; I_s per plant].
    Eigen::VectorXd nominal_w() const;

    /// Full right-hand side [g; h]. Throws EvaluationError on non-finite input.
    void residual(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                  const Eigen::VectorXd& w, Eigen::VectorXd& out) const;

    Eigen::VectorXd residual(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                             const Eigen::VectorXd& w) const;

    /// Selected rows of the residual; evaluates only the owning device blocks.
    void residual_rows(std::span<const int> rows, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& u, const Eigen::VectorXd& w,
                       Eigen::VectorXd& out) const;

    /// f(x,u,w) = residual - A x - B_u u - B_w w.
    Eigen::VectorXd nonlinearity(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                 const Eigen::VectorXd& w) const;

    void nonlinearity_rows(std::span<const int> rows, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& u, const Eigen::VectorXd& w,
                           Eigen::VectorXd& out) const;

    /// Same grid and devices over an edited admittance matrix (fault stages).
    NdaeSystem with_ybus(const Eigen::MatrixXcd& y2) const;

    /// Indices of w entries holding (P, Q) of constant-power loads.
    const std::vector<int>& demand_indices() const { return demand_idx_; }

    /// State-space index of the first machine angle (gauge reference), or -1.
    int angle_reference() const;

    /// Indices of w entries holding plant irradiance values.
    std::vector<int> irradiance_indices() const;

    /// DC-link energy states (pure imbalance integrators).
    std::vector<int> dc_link_states() const;

    /// Heuristic initial point: flat voltage profile, convention-aware
    /// machine frame angles, set-point torques.
    Eigen::VectorXd flat_start() const;

    std::vector<std::string> state_names() const;

private:
    friend NdaeSystem assemble_ndae(std::shared_ptr<const GridModel>, AssemblyOptions);
    void stamp_linear();

    std::vector<int> demand_idx_;
    std::shared_ptr<const struct LayoutMaps> maps_;
};

NdaeSystem assemble_ndae(std::shared_ptr<const GridModel> grid,
                         AssemblyOptions options = {});

}  // namespace ndae
