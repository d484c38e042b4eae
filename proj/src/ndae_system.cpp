#include "ndae/ndae_system.hpp"

#include <cmath>
#include <unordered_map>

namespace ndae {

namespace {

// input vector layout: [P_v* (G); V* machines (G); P_e* (R); V* plants (R)]
int u_pv([[maybe_unused]] const StateLayout& L, int i) { return i; }
int u_vg(const StateLayout& L, int i) { return L.G + i; }
int u_pe(const StateLayout& L, int i) { return 2 * L.G + i; }
int u_vs(const StateLayout& L, int i) { return 2 * L.G + L.R + i; }

struct BusDevice {
    enum Kind { None, Machine, Solar, MotorLoad, ImpedanceLoad, PowerLoad } kind = None;
    int index = -1;   // index into the owning device vector
    int motor = -1;   // motor state slot (motor loads only)
    int w_p = -1, w_q = -1;  // disturbance slots (power loads only)
};

// geometric helpers: rotate a network phasor into a device dq frame anchored
// at angle `ang` (frame convention e^{j(ang - pi/2)})
struct Frame {
    double s, c;
    explicit Frame(double ang) : s(std::sin(ang)), c(std::cos(ang)) {}
    // network -> device
    double d_of(double re, double im) const { return re * s - im * c; }
    double q_of(double re, double im) const { return re * c + im * s; }
};

}  // namespace

struct LayoutMaps {
    std::vector<BusDevice> device_of_bus;  // size N
    std::vector<int> motor_load_index;     // load-vector index per motor slot
};

// one shared maps object per assembled system, rebuilt in assemble/with_ybus
static LayoutMaps build_maps(const GridModel& grid, const StateLayout& L) {
    LayoutMaps maps;
    maps.device_of_bus.assign(static_cast<size_t>(L.N), {});
    int motor_slot = 0;
    int w_slot = 0;
    for (int i = 0; i < static_cast<int>(grid.machines.size()); ++i) {
        BusDevice d;
        d.kind = BusDevice::Machine;
        d.index = i;
        maps.device_of_bus[static_cast<size_t>(grid.machines[i].bus - 1)] = d;
    }
    for (int i = 0; i < static_cast<int>(grid.solar.size()); ++i) {
        BusDevice d;
        d.kind = BusDevice::Solar;
        d.index = i;
        maps.device_of_bus[static_cast<size_t>(grid.solar[i].bus - 1)] = d;
    }
    for (int i = 0; i < static_cast<int>(grid.loads.size()); ++i) {
        const LoadSpec& l = grid.loads[i];
        BusDevice d;
        d.index = i;
        switch (l.kind) {
            case LoadKind::Motor:
                d.kind = BusDevice::MotorLoad;
                d.motor = motor_slot;
                maps.motor_load_index.push_back(i);
                ++motor_slot;
                break;
            case LoadKind::Impedance:
                d.kind = BusDevice::ImpedanceLoad;
                break;
            case LoadKind::Power:
                d.kind = BusDevice::PowerLoad;
                d.w_p = w_slot;
                d.w_q = w_slot + 1;
                w_slot += 2;
                break;
        }
        maps.device_of_bus[static_cast<size_t>(l.bus - 1)] = d;
    }
    return maps;
}


Eigen::MatrixXd NdaeSystem::E() const {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(layout.n, layout.n);
    for (int i = 0; i < layout.n_d; ++i) e(i, i) = 1.0;
    return e;
}

Eigen::VectorXd NdaeSystem::nominal_u() const {
    const StateLayout& L = layout;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(2 * L.G + 2 * L.R);
    for (int i = 0; i < L.G; ++i) {
        u[u_pv(L, i)] = grid->machines[static_cast<size_t>(i)].p_set;
        u[u_vg(L, i)] = grid->machines[static_cast<size_t>(i)].v_set;
    }
    for (int i = 0; i < L.R; ++i) {
        u[u_pe(L, i)] = grid->solar[static_cast<size_t>(i)].p_set;
        u[u_vs(L, i)] = grid->solar[static_cast<size_t>(i)].v_set;
    }
    return u;
}

Eigen::VectorXd NdaeSystem::nominal_w() const {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n_disturbances());
    int slot = 0;
    for (const LoadSpec& l : grid->loads) {
        if (l.kind != LoadKind::Power) continue;
        w[slot++] = l.p;
        w[slot++] = l.q;
    }
    for (int i = 0; i < layout.R; ++i)
        w[slot + i] = grid->solar[static_cast<size_t>(i)].irradiance;
    return w;
}

int NdaeSystem::angle_reference() const {
    if (layout.G > 0) return layout.m_delta(0);
    if (layout.R > 0) return layout.s_delta(0);
    return -1;
}

std::vector<int> NdaeSystem::irradiance_indices() const {
    std::vector<int> idx;
    const int base = static_cast<int>(demand_idx_.size());
    for (int i = 0; i < layout.R; ++i) idx.push_back(base + i);
    return idx;
}

std::vector<int> NdaeSystem::dc_link_states() const {
    std::vector<int> idx;
    for (int i = 0; i < layout.R; ++i) idx.push_back(layout.s_edc(i));
    return idx;
}

Eigen::VectorXd NdaeSystem::flat_start() const {
    const StateLayout& L = layout;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(L.n);
    const bool paper = options.eq_convention == EqConvention::Paper;

    for (int i = 0; i < L.G; ++i) {
        const auto& m = grid->machines[static_cast<size_t>(i)];
        x[L.m_omega(i)] = 1.0;
        x[L.m_delta(i)] = paper ? 1.5707963267948966 : 0.0;
        x[L.m_eq(i)] = paper ? 0.0 : 1.0;
        x[L.m_ed(i)] = paper ? 1.0 : 0.0;
        x[L.m_efd(i)] = 1.0;
        x[L.m_tm(i)] = m.p_set;
        x[L.m_pv(i)] = m.p_set;
        x[L.m_rf(i)] = m.k_f / m.t_f;
        x[L.m_va(i)] = m.k_e + m.sat_a * std::exp(m.sat_b);
        x[L.ire(m.bus - 1)] = m.p_set;
    }
    for (int i = 0; i < L.R; ++i) {
        const auto& p = grid->solar[static_cast<size_t>(i)];
        x[L.s_delta(i)] = 1.5707963267948966;
        x[L.s_edc(i)] = 1.0;
        x[L.s_pe(i)] = p.p_set;
        x[L.s_idf(i)] = p.p_set;
        x[L.s_vdc(i)] = 1.0;
        x[L.s_zdf(i)] = 1.0;
        x[L.ire(p.bus - 1)] = p.p_set;
    }
    for (int s = 0; s < L.Lm; ++s) x[L.motor(s)] = 1.0;
    for (int b = 0; b < L.N; ++b) x[L.vre(b)] = 1.0;

    for (const LoadSpec& l : grid->loads) {
        const int b = l.bus - 1;
        switch (l.kind) {
            case LoadKind::Power:
                x[L.ire(b)] = -l.p;
                x[L.iim(b)] = l.q;
                break;
            case LoadKind::Impedance:
            case LoadKind::Motor: {
                const Complex inj = -1.0 / l.impedance;  // V = 1 + j0
                x[L.ire(b)] = inj.real();
                x[L.iim(b)] = inj.imag();
                break;
            }
        }
    }
    return x;
}

namespace {

// ------------------------------------------------------------------
// device right-hand sides
// ------------------------------------------------------------------

struct MachineEval {
    double rows[9];  // species order: w, delta, Eq, Ed, Efd, TM, Pv, rf, va
    double stator1, stator2;
};

MachineEval eval_machine(const SyncMachineParams& m, EqConvention conv, const StateLayout& L,
                         int i, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    const int b = m.bus - 1;
    const double w = x[L.m_omega(i)];
    const double delta = x[L.m_delta(i)];
    const double Eq = x[L.m_eq(i)];
    const double Ed = x[L.m_ed(i)];
    const double Efd = x[L.m_efd(i)];
    const double TM = x[L.m_tm(i)];
    const double Pv = x[L.m_pv(i)];
    const double rf = x[L.m_rf(i)];
    const double va = x[L.m_va(i)];

    const Frame fr(delta);
    const double IRe = x[L.ire(b)], IIm = x[L.iim(b)];
    const double VRe = x[L.vre(b)], VIm = x[L.vim(b)];
    const double id = fr.d_of(IRe, IIm), iq = fr.q_of(IRe, IIm);
    const double vd = fr.d_of(VRe, VIm), vq = fr.q_of(VRe, VIm);
    const double Vt = std::hypot(VRe, VIm);

    const double Te = Ed * id + Eq * iq;
    const double Se = m.sat_a * std::exp(m.sat_b * Efd);
    const double ve = u[u_vg(L, i)] - Vt + rf - (m.k_f / m.t_f) * Efd;
    const double pv_set = u[u_pv(L, i)];
    const double pvdot = -(Pv - pv_set + (w - 1.0) / m.R_d) / m.t_v;

    MachineEval e{};
    e.rows[0] = (TM - Te) / (2.0 * m.H);
    e.rows[1] = kOmegaBase * (w - 1.0);
    if (conv == EqConvention::Paper) {
        e.rows[2] = -(Eq - (m.xp_q - m.x_q) * id) / m.t_qo;
        e.rows[3] = -(Ed + (m.xp_d - m.x_d) * iq - Efd) / m.t_do;
    } else {
        e.rows[2] = (-Eq - (m.x_d - m.xp_d) * id + Efd) / m.t_do;
        e.rows[3] = (-Ed + (m.x_q - m.xp_q) * iq) / m.t_qo;
    }
    e.rows[4] = -(m.k_e + Se * Efd - va) / m.t_fd;
    if (m.turbine == TurbineKind::Thermal)
        e.rows[5] = -(TM - Pv) / m.t_ch;
    else
        e.rows[5] = -2.0 * (TM - Pv + m.t_ch * pvdot) / m.t_w;
    e.rows[6] = pvdot;
    e.rows[7] = -(rf - (m.k_f / m.t_f) * Efd) / m.t_f;
    e.rows[8] = -(va - m.k_a * ve) / m.t_a;

    e.stator1 = Ed + m.xp_q * iq - vd;
    e.stator2 = Eq - m.xp_d * id - vq;
    return e;
}

struct SolarEval {
    double rows[12];  // delta_c, Edc, Pe~, Qe~, idf, iqf, vdc, vqc, zdo, zqo, zdf, zqf
    double iface1, iface2;
};

SolarEval eval_solar(const SolarPlantParams& p, const StateLayout& L, int i,
                     const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                     const Eigen::VectorXd& w, int w_is) {
    const int b = p.bus - 1;
    const double dc = x[L.s_delta(i)];
    const double Pet = x[L.s_pe(i)];
    const double Qet = x[L.s_qe(i)];
    const double idf = x[L.s_idf(i)], iqf = x[L.s_iqf(i)];
    const double vdc = x[L.s_vdc(i)], vqc = x[L.s_vqc(i)];
    const double zdo = x[L.s_zdo(i)], zqo = x[L.s_zqo(i)];
    const double zdf = x[L.s_zdf(i)], zqf = x[L.s_zqf(i)];

    const Frame fr(dc);
    const double IRe = x[L.ire(b)], IIm = x[L.iim(b)];
    const double VRe = x[L.vre(b)], VIm = x[L.vim(b)];
    const double idg = fr.d_of(IRe, IIm), iqg = fr.q_of(IRe, IIm);
    const double vdg = fr.d_of(VRe, VIm), vqg = fr.q_of(VRe, VIm);

    const double idc = idf - idg, iqc = iqf - iqg;  // filter-capacitor currents
    const double vdo = vdc + p.r_c * idc, vqo = vqc + p.r_c * iqc;
    const double Pe = vdo * idg + vqo * iqg;
    const double Qe = vqo * idg - vdo * iqg;
    const double wc = 1.0 - p.k_p * (Pet - u[u_pe(L, i)]);

    const double vdo_ref = u[u_vs(L, i)] + p.k_d * iqg;
    const double idf_ref = p.kappa_pv * (vdo_ref - vdo + zdo + idg + idc);
    const double iqf_ref = p.kappa_pv * (0.0 - vqo + zqo + iqg + iqc);
    const double vdf = p.kappa_p * (idf_ref - idf) + zdf;
    const double vqf = p.kappa_p * (iqf_ref - iqf) + zqf;
    const double Pc = vdf * idf + vqf * iqf;
    const double Ppv = p.eta * w[w_is];

    SolarEval e{};
    e.rows[0] = p.omega_b * (wc - 1.0);
    e.rows[1] = (Ppv - Pc) / p.B_C;
    e.rows[2] = (-Pet + Pe) / p.tau_s;
    e.rows[3] = (-Qet + Qe) / p.tau_s;
    e.rows[4] = (p.omega_b / p.X_f) * (-p.r_f * idf + wc * p.X_f * iqf + vdf - vdo);
    e.rows[5] = (p.omega_b / p.X_f) * (-p.r_f * iqf + wc * p.X_f * idf + vqf - vqo);
    e.rows[6] = (p.omega_b / p.B_c) * (wc * p.B_c * vqc + idf - idg);
    e.rows[7] = (p.omega_b / p.B_c) * (wc * p.B_c * vdc + iqf - iqg);
    e.rows[8] = (p.kappa_pv / p.tau_v) * (vdo_ref - vdo);
    e.rows[9] = (p.kappa_pv / p.tau_v) * (0.0 - vqo);
    e.rows[10] = (p.kappa_p / p.tau_i) * (idf_ref - idf);
    e.rows[11] = (p.kappa_p / p.tau_i) * (iqf_ref - iqf);

    e.iface1 = vdo - vdg;
    e.iface2 = vqo - vqg;
    return e;
}

double eval_motor(const LoadSpec& l, const StateLayout& L, int slot, const Eigen::VectorXd& x) {
    const int b = l.bus - 1;
    const double wm = x[L.motor(slot)];
    const double drawn = -(x[L.vre(b)] * x[L.ire(b)] + x[L.vim(b)] * x[L.iim(b)]);
    const double Tm = l.torque_coeff * std::pow(wm, l.torque_exp);
    return (drawn - Tm) / (2.0 * l.H_M);
}

void eval_device_rows(const BusDevice& dev, const GridModel& grid, const StateLayout& L, int b,
                      const Eigen::VectorXd& x, const Eigen::VectorXd& w, double& h1, double& h2) {
    const double IRe = x[L.ire(b)], IIm = x[L.iim(b)];
    const double VRe = x[L.vre(b)], VIm = x[L.vim(b)];
    switch (dev.kind) {
        case BusDevice::None:
            h1 = IRe;
            h2 = IIm;
            break;
        case BusDevice::ImpedanceLoad:
        case BusDevice::MotorLoad: {
            const Complex z = grid.loads[static_cast<size_t>(dev.index)].impedance;
            h1 = IRe * z.real() - IIm * z.imag() + VRe;
            h2 = IRe * z.imag() + IIm * z.real() + VIm;
            break;
        }
        case BusDevice::PowerLoad:
            h1 = w[dev.w_p] + IRe * VRe + IIm * VIm;
            h2 = w[dev.w_q] + IRe * VIm - IIm * VRe;
            break;
        case BusDevice::Machine:
        case BusDevice::Solar:
            // handled by the owning device evaluation
            h1 = h2 = 0.0;
            break;
    }
}

}  // namespace

void NdaeSystem::residual(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                          const Eigen::VectorXd& w, Eigen::VectorXd& out) const {
    const StateLayout& L = layout;
    if (!x.allFinite()) throw EvaluationError("non-finite state passed to residual evaluation");
    out.resize(L.n);

    const LayoutMaps& maps = *maps_;
    const int n_p = static_cast<int>(demand_idx_.size());  // 2 * power loads
    const int w_is0 = n_p;

    for (int i = 0; i < L.G; ++i) {
        const auto& m = grid->machines[static_cast<size_t>(i)];
        const MachineEval e = eval_machine(m, options.eq_convention, L, i, x, u);
        out[L.m_omega(i)] = e.rows[0];
        out[L.m_delta(i)] = e.rows[1];
        out[L.m_eq(i)] = e.rows[2];
        out[L.m_ed(i)] = e.rows[3];
        out[L.m_efd(i)] = e.rows[4];
        out[L.m_tm(i)] = e.rows[5];
        out[L.m_pv(i)] = e.rows[6];
        out[L.m_rf(i)] = e.rows[7];
        out[L.m_va(i)] = e.rows[8];
        out[L.row_dev_1(m.bus - 1)] = e.stator1;
        out[L.row_dev_2(m.bus - 1)] = e.stator2;
    }
    for (int i = 0; i < L.R; ++i) {
        const auto& p = grid->solar[static_cast<size_t>(i)];
        const SolarEval e = eval_solar(p, L, i, x, u, w, w_is0 + i);
        const int base[12] = {L.s_delta(i), L.s_edc(i), L.s_pe(i),  L.s_qe(i),
                              L.s_idf(i),   L.s_iqf(i), L.s_vdc(i), L.s_vqc(i),
                              L.s_zdo(i),   L.s_zqo(i), L.s_zdf(i), L.s_zqf(i)};
        for (int k = 0; k < 12; ++k) out[base[k]] = e.rows[k];
        out[L.row_dev_1(p.bus - 1)] = e.iface1;
        out[L.row_dev_2(p.bus - 1)] = e.iface2;
    }
    for (int s = 0; s < L.Lm; ++s) {
        const auto& l = grid->loads[static_cast<size_t>(maps.motor_load_index[static_cast<size_t>(s)])];
        out[L.motor(s)] = eval_motor(l, L, s, x);
    }

    // network current balance, I - Y V, split into real/imaginary rows
    const auto VRe = x.segment(L.vre(0), L.N);
    const auto VIm = x.segment(L.vim(0), L.N);
    const Eigen::VectorXd yv_re = Y.real() * VRe - Y.imag() * VIm;
    const Eigen::VectorXd yv_im = Y.real() * VIm + Y.imag() * VRe;
    out.segment(L.row_bal_re(0), L.N) = x.segment(L.ire(0), L.N) - yv_re;
    out.segment(L.row_bal_im(0), L.N) = x.segment(L.iim(0), L.N) - yv_im;

    for (int b = 0; b < L.N; ++b) {
        const BusDevice& dev = maps.device_of_bus[static_cast<size_t>(b)];
        if (dev.kind == BusDevice::Machine || dev.kind == BusDevice::Solar) continue;
        double h1, h2;
        eval_device_rows(dev, *grid, L, b, x, w, h1, h2);
        out[L.row_dev_1(b)] = h1;
        out[L.row_dev_2(b)] = h2;
    }
}

Eigen::VectorXd NdaeSystem::residual(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                     const Eigen::VectorXd& w) const {
    Eigen::VectorXd out;
    residual(x, u, w, out);
    return out;
}

void NdaeSystem::residual_rows(std::span<const int> rows, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& u, const Eigen::VectorXd& w,
                               Eigen::VectorXd& out) const {
    const StateLayout& L = layout;
    if (!x.allFinite()) throw EvaluationError("non-finite state passed to residual evaluation");
    out.resize(static_cast<Eigen::Index>(rows.size()));

    const LayoutMaps& maps = *maps_;
    const int n_p = static_cast<int>(demand_idx_.size());

    // scratch caches so a block feeding several requested rows is evaluated once
    std::unordered_map<int, MachineEval> mach;
    std::unordered_map<int, SolarEval> sol;

    auto machine_of = [&](int i) -> const MachineEval& {
        auto it = mach.find(i);
        if (it == mach.end())
            it = mach.emplace(i, eval_machine(grid->machines[static_cast<size_t>(i)],
                                              options.eq_convention, L, i, x, u)).first;
        return it->second;
    };
    auto solar_of = [&](int i) -> const SolarEval& {
        auto it = sol.find(i);
        if (it == sol.end())
            it = sol.emplace(i, eval_solar(grid->solar[static_cast<size_t>(i)], L, i, x, u, w,
                                           n_p + i)).first;
        return it->second;
    };

    for (size_t k = 0; k < rows.size(); ++k) {
        const int r = rows[k];
        double v = 0.0;
        if (r < 9 * L.G) {
            const int species = r / L.G;
            const int i = r % L.G;
            v = machine_of(i).rows[species];
        } else if (r < 9 * L.G + 12 * L.R) {
            const int off = r - 9 * L.G;
            const int species = off / L.R;
            const int i = off % L.R;
            v = solar_of(i).rows[species];
        } else if (r < L.n_d) {
            const int s = r - L.motor_base();
            const auto& l =
                grid->loads[static_cast<size_t>(maps.motor_load_index[static_cast<size_t>(s)])];
            v = eval_motor(l, L, s, x);
        } else if (r < L.n_d + 2 * L.N) {
            const int b = (r - L.n_d) % L.N;
            const bool re = r < L.n_d + L.N;
            const auto VRe = x.segment(L.vre(0), L.N);
            const auto VIm = x.segment(L.vim(0), L.N);
            if (re)
                v = x[L.ire(b)] - (Y.row(b).real().dot(VRe) - Y.row(b).imag().dot(VIm));
            else
                v = x[L.iim(b)] - (Y.row(b).real().dot(VIm) + Y.row(b).imag().dot(VRe));
        } else {
            const int b = (r - L.n_d - 2 * L.N) % L.N;
            const bool first = r < L.n_d + 3 * L.N;
            const BusDevice& dev = maps.device_of_bus[static_cast<size_t>(b)];
            if (dev.kind == BusDevice::Machine) {
                const MachineEval& e = machine_of(dev.index);
                v = first ? e.stator1 : e.stator2;
            } else if (dev.kind == BusDevice::Solar) {
                const SolarEval& e = solar_of(dev.index);
                v = first ? e.iface1 : e.iface2;
            } else {
                double h1, h2;
                eval_device_rows(dev, *grid, L, b, x, w, h1, h2);
                v = first ? h1 : h2;
            }
        }
        out[static_cast<Eigen::Index>(k)] = v;
    }
}

Eigen::VectorXd NdaeSystem::nonlinearity(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                         const Eigen::VectorXd& w) const {
    Eigen::VectorXd g;
    residual(x, u, w, g);
    g.noalias() -= A * x;
    g.noalias() -= B_u * u;
    g.noalias() -= B_w * w;
    return g;
}

void NdaeSystem::nonlinearity_rows(std::span<const int> rows, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& u, const Eigen::VectorXd& w,
                                   Eigen::VectorXd& out) const {
    residual_rows(rows, x, u, w, out);
    for (size_t k = 0; k < rows.size(); ++k) {
        const int r = rows[k];
        out[static_cast<Eigen::Index>(k)] -=
            A.row(r).dot(x) + B_u.row(r).dot(u) + B_w.row(r).dot(w);
    }
}

NdaeSystem NdaeSystem::with_ybus(const Eigen::MatrixXcd& y2) const {
    NdaeSystem copy = *this;
    copy.Y = y2;
    copy.stamp_linear();
    return copy;
}

std::vector<std::string> NdaeSystem::state_names() const {
    const StateLayout& L = layout;
    std::vector<std::string> names(static_cast<size_t>(L.n));
    const char* msp[9] = {"w", "delta", "Eq", "Ed", "Efd", "TM", "Pv", "rf", "va"};
    const char* ssp[12] = {"delta_c", "Edc", "Pe_f", "Qe_f", "idf", "iqf",
                           "vdc",     "vqc", "zdo",  "zqo",  "zdf", "zqf"};
    for (int i = 0; i < L.G; ++i)
        for (int s = 0; s < 9; ++s)
            names[static_cast<size_t>(s * L.G + i)] =
                std::string(msp[s]) + "_g" + std::to_string(i + 1);
    for (int i = 0; i < L.R; ++i)
        for (int s = 0; s < 12; ++s)
            names[static_cast<size_t>(L.solar_base() + s * L.R + i)] =
                std::string(ssp[s]) + "_s" + std::to_string(i + 1);
    for (int s = 0; s < L.Lm; ++s)
        names[static_cast<size_t>(L.motor(s))] = "w_m" + std::to_string(s + 1);
    for (int b = 0; b < L.N; ++b) {
        names[static_cast<size_t>(L.ire(b))] = "IRe_" + std::to_string(b + 1);
        names[static_cast<size_t>(L.iim(b))] = "IIm_" + std::to_string(b + 1);
        names[static_cast<size_t>(L.vre(b))] = "VRe_" + std::to_string(b + 1);
        names[static_cast<size_t>(L.vim(b))] = "VIm_" + std::to_string(b + 1);
    }
    return names;
}

void NdaeSystem::stamp_linear() {
    const StateLayout& L = layout;
    const int n_u = 2 * L.G + 2 * L.R;
    const int n_w = static_cast<int>(demand_idx_.size()) + L.R;
    A = Eigen::MatrixXd::Zero(L.n, L.n);
    B_u = Eigen::MatrixXd::Zero(L.n, n_u);
    B_w = Eigen::MatrixXd::Zero(L.n, n_w);

    if (!maps_) maps_ = std::make_shared<const LayoutMaps>(build_maps(*grid, L));
    const LayoutMaps& maps = *maps_;

    for (int i = 0; i < L.G; ++i) {
        const auto& m = grid->machines[static_cast<size_t>(i)];
        const int b = m.bus - 1;
        A(L.m_omega(i), L.m_tm(i)) += 1.0 / (2.0 * m.H);
        A(L.m_delta(i), L.m_omega(i)) += kOmegaBase;
        if (options.eq_convention == EqConvention::Paper) {
            A(L.m_eq(i), L.m_eq(i)) -= 1.0 / m.t_qo;
            A(L.m_ed(i), L.m_ed(i)) -= 1.0 / m.t_do;
            A(L.m_ed(i), L.m_efd(i)) += 1.0 / m.t_do;
        } else {
            A(L.m_eq(i), L.m_eq(i)) -= 1.0 / m.t_do;
            A(L.m_eq(i), L.m_efd(i)) += 1.0 / m.t_do;
            A(L.m_ed(i), L.m_ed(i)) -= 1.0 / m.t_qo;
        }
        A(L.m_efd(i), L.m_va(i)) += 1.0 / m.t_fd;
        if (m.turbine == TurbineKind::Thermal) {
            A(L.m_tm(i), L.m_tm(i)) -= 1.0 / m.t_ch;
            A(L.m_tm(i), L.m_pv(i)) += 1.0 / m.t_ch;
        } else {
            const double k = 2.0 * m.t_ch / (m.t_w * m.t_v);
            A(L.m_tm(i), L.m_tm(i)) -= 2.0 / m.t_w;
            A(L.m_tm(i), L.m_pv(i)) += 2.0 / m.t_w + k;
            A(L.m_tm(i), L.m_omega(i)) += k / m.R_d;
            B_u(L.m_tm(i), u_pv(L, i)) -= k;
        }
        A(L.m_pv(i), L.m_pv(i)) -= 1.0 / m.t_v;
        A(L.m_pv(i), L.m_omega(i)) -= 1.0 / (m.t_v * m.R_d);
        B_u(L.m_pv(i), u_pv(L, i)) += 1.0 / m.t_v;
        A(L.m_rf(i), L.m_rf(i)) -= 1.0 / m.t_f;
        A(L.m_rf(i), L.m_efd(i)) += m.k_f / (m.t_f * m.t_f);
        A(L.m_va(i), L.m_va(i)) -= 1.0 / m.t_a;
        A(L.m_va(i), L.m_rf(i)) += m.k_a / m.t_a;
        A(L.m_va(i), L.m_efd(i)) -= m.k_a * m.k_f / (m.t_a * m.t_f);
        B_u(L.m_va(i), u_vg(L, i)) += m.k_a / m.t_a;
        // stator interface rows
        A(L.row_dev_1(b), L.m_ed(i)) += 1.0;
        A(L.row_dev_2(b), L.m_eq(i)) += 1.0;
    }

    int w_is0 = static_cast<int>(demand_idx_.size());
    for (int i = 0; i < L.R; ++i) {
        const auto& p = grid->solar[static_cast<size_t>(i)];
        const int b = p.bus - 1;
        const double kpp = p.kappa_p * p.kappa_pv;
        A(L.s_delta(i), L.s_pe(i)) -= p.omega_b * p.k_p;
        B_u(L.s_delta(i), u_pe(L, i)) += p.omega_b * p.k_p;
        B_w(L.s_edc(i), w_is0 + i) += p.eta / p.B_C;
        A(L.s_pe(i), L.s_pe(i)) -= 1.0 / p.tau_s;
        A(L.s_qe(i), L.s_qe(i)) -= 1.0 / p.tau_s;

        const double wx = p.omega_b / p.X_f;
        A(L.s_idf(i), L.s_idf(i)) += wx * (-p.r_f + kpp * (1.0 - p.r_c) - p.kappa_p - p.r_c);
        A(L.s_idf(i), L.s_iqf(i)) += p.omega_b;
        A(L.s_idf(i), L.s_vdc(i)) += wx * (-kpp - 1.0);
        A(L.s_idf(i), L.s_zdo(i)) += wx * kpp;
        A(L.s_idf(i), L.s_zdf(i)) += wx;
        B_u(L.s_idf(i), u_vs(L, i)) += wx * kpp;

        A(L.s_iqf(i), L.s_iqf(i)) += wx * (-p.r_f + kpp * (1.0 - p.r_c) - p.kappa_p - p.r_c);
        A(L.s_iqf(i), L.s_idf(i)) += p.omega_b;
        A(L.s_iqf(i), L.s_vqc(i)) += wx * (-kpp - 1.0);
        A(L.s_iqf(i), L.s_zqo(i)) += wx * kpp;
        A(L.s_iqf(i), L.s_zqf(i)) += wx;

        A(L.s_vdc(i), L.s_vqc(i)) += p.omega_b;
        A(L.s_vdc(i), L.s_idf(i)) += p.omega_b / p.B_c;
        A(L.s_vqc(i), L.s_vdc(i)) += p.omega_b;
        A(L.s_vqc(i), L.s_iqf(i)) += p.omega_b / p.B_c;

        const double kv = p.kappa_pv / p.tau_v;
        A(L.s_zdo(i), L.s_vdc(i)) -= kv;
        A(L.s_zdo(i), L.s_idf(i)) -= kv * p.r_c;
        B_u(L.s_zdo(i), u_vs(L, i)) += kv;
        A(L.s_zqo(i), L.s_vqc(i)) -= kv;
        A(L.s_zqo(i), L.s_iqf(i)) -= kv * p.r_c;

        const double ki = p.kappa_p / p.tau_i;
        A(L.s_zdf(i), L.s_vdc(i)) -= ki * p.kappa_pv;
        A(L.s_zdf(i), L.s_idf(i)) += ki * (p.kappa_pv * (1.0 - p.r_c) - 1.0);
        A(L.s_zdf(i), L.s_zdo(i)) += ki * p.kappa_pv;
        B_u(L.s_zdf(i), u_vs(L, i)) += ki * p.kappa_pv;
        A(L.s_zqf(i), L.s_vqc(i)) -= ki * p.kappa_pv;
        A(L.s_zqf(i), L.s_iqf(i)) += ki * (p.kappa_pv * (1.0 - p.r_c) - 1.0);
        A(L.s_zqf(i), L.s_zqo(i)) += ki * p.kappa_pv;

        // interface rows
        A(L.row_dev_1(b), L.s_vdc(i)) += 1.0;
        A(L.row_dev_1(b), L.s_idf(i)) += p.r_c;
        A(L.row_dev_2(b), L.s_vqc(i)) += 1.0;
        A(L.row_dev_2(b), L.s_iqf(i)) += p.r_c;
    }

    for (int s = 0; s < L.Lm; ++s) {
        const auto& l =
            grid->loads[static_cast<size_t>(maps.motor_load_index[static_cast<size_t>(s)])];
        if (l.torque_exp == 1.0)
            A(L.motor(s), L.motor(s)) -= l.torque_coeff / (2.0 * l.H_M);
    }

    for (int b = 0; b < L.N; ++b) {
        A(L.row_bal_re(b), L.ire(b)) += 1.0;
        A(L.row_bal_im(b), L.iim(b)) += 1.0;
        for (int j = 0; j < L.N; ++j) {
            const double g = Y(b, j).real();
            const double bb = Y(b, j).imag();
            if (g != 0.0) {
                A(L.row_bal_re(b), L.vre(j)) -= g;
                A(L.row_bal_im(b), L.vim(j)) -= g;
            }
            if (bb != 0.0) {
                A(L.row_bal_re(b), L.vim(j)) += bb;
                A(L.row_bal_im(b), L.vre(j)) -= bb;
            }
        }
        const BusDevice& dev = maps.device_of_bus[static_cast<size_t>(b)];
        switch (dev.kind) {
            case BusDevice::None:
                A(L.row_dev_1(b), L.ire(b)) += 1.0;
                A(L.row_dev_2(b), L.iim(b)) += 1.0;
                break;
            case BusDevice::ImpedanceLoad:
            case BusDevice::MotorLoad: {
                const Complex z = grid->loads[static_cast<size_t>(dev.index)].impedance;
                A(L.row_dev_1(b), L.ire(b)) += z.real();
                A(L.row_dev_1(b), L.iim(b)) -= z.imag();
                A(L.row_dev_1(b), L.vre(b)) += 1.0;
                A(L.row_dev_2(b), L.ire(b)) += z.imag();
                A(L.row_dev_2(b), L.iim(b)) += z.real();
                A(L.row_dev_2(b), L.vim(b)) += 1.0;
                break;
            }
            case BusDevice::PowerLoad:
                B_w(L.row_dev_1(b), dev.w_p) += 1.0;
                B_w(L.row_dev_2(b), dev.w_q) += 1.0;
                break;
            case BusDevice::Machine:
            case BusDevice::Solar:
                break;  // stamped with the owning device
        }
    }
}

NdaeSystem assemble_ndae(std::shared_ptr<const GridModel> grid, AssemblyOptions options) {
    grid->validate();
    if (grid->machines.empty() && grid->solar.empty() && grid->loads.empty())
        throw StructuralError("grid carries no devices");

    NdaeSystem sys;
    sys.grid = grid;
    sys.options = options;

    StateLayout& L = sys.layout;
    L.G = grid->machine_count();
    L.R = grid->solar_count();
    L.Lm = grid->motor_count();
    L.N = grid->bus_count();
    L.n_d = 9 * L.G + 12 * L.R + L.Lm;
    L.n_a = 4 * L.N;
    L.n = L.n_d + L.n_a;

    sys.Y = assemble_ybus(grid->buses, grid->branches);

    for (int i = 0; i < static_cast<int>(grid->loads.size()); ++i)
        if (grid->loads[static_cast<size_t>(i)].kind == LoadKind::Power) {
            sys.demand_idx_.push_back(static_cast<int>(sys.demand_idx_.size()));
            sys.demand_idx_.push_back(static_cast<int>(sys.demand_idx_.size()));
        }

    sys.stamp_linear();

    // default output map: all dynamic states
    sys.C = Eigen::MatrixXd::Zero(L.n_d, L.n);
    for (int i = 0; i < L.n_d; ++i) sys.C(i, i) = 1.0;
    return sys;
}

}  // namespace ndae
