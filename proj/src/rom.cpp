#include "ndae/rom.hpp"

#include <sstream>

#include <Eigen/Dense>

namespace ndae {

namespace {

// round the projected E to the exact block pattern, refusing anything else
Eigen::MatrixXd checked_reduced_e(const Eigen::MatrixXd& W_L, const Eigen::MatrixXd& W_R, int n_d,
                                  int r_d) {
    const Eigen::MatrixXd E_r = W_L.leftCols(n_d) * W_R.topRows(n_d);
    Eigen::MatrixXd rounded = E_r;
    for (Eigen::Index i = 0; i < rounded.rows(); ++i)
        for (Eigen::Index j = 0; j < rounded.cols(); ++j) {
            double& v = rounded(i, j);
            if (std::abs(v) < 1e-12) v = 0.0;
            if (std::abs(v - 1.0) < 1e-12) v = 1.0;
        }
    Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(E_r.rows(), E_r.cols());
    for (int i = 0; i < r_d; ++i) expected(i, i) = 1.0;
    if (rounded != expected)
        throw StructureError("projected E is not blkdiag(I, 0): structure preservation failed");
    return rounded;
}

void check_regular_pair(const Eigen::MatrixXd& E_r, const Eigen::MatrixXd& A_r) {
    // fixed probe shift; a regular pair has det(shift*E - A) != 0 for almost
    // every shift
    const double shift = 0.61803398874989485;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(shift * E_r - A_r);
    if (!lu.isInvertible())
        throw StructureError("reduced pair (E_r, A_r) failed the regularity probe");
}

Rom project_core(const ReductionBasis& basis, bool use_deim, const Eigen::MatrixXd& B_u,
                 const Eigen::MatrixXd& B_w, const Eigen::MatrixXd& C) {
    Rom rom;
    rom.r_d = basis.r_d;
    rom.r_a = basis.r_a;
    rom.W_R = basis.W_R;
    rom.W_L = basis.W_L;
    rom.provenance = basis.provenance;
    rom.scaling = basis.scaling;

    checked_reduced_e(basis.W_L, basis.W_R, basis.n_d(), basis.r_d);

    rom.B_ur = basis.W_L * B_u;
    rom.B_wr = basis.W_L * B_w;
    rom.C_r = C * basis.W_R;

    if (use_deim && basis.deim) {
        rom.path = Rom::NonlinPath::Deim;
        rom.deim = basis.deim;
        rom.deim_projector = basis.W_L * basis.deim->W_fr * basis.deim->PtW_inv;
    } else {
        rom.path = Rom::NonlinPath::FullProjection;
    }
    return rom;
}

}  // namespace

Rom project(const std::vector<const NdaeSystem*>& stages, const ReductionBasis& basis,
            bool use_deim) {
    if (stages.empty()) throw Error("project: no stages");
    const NdaeSystem& s0 = *stages.front();
    if (s0.n_states() != basis.n()) throw Error("basis dimensions disagree with the system");
    Rom rom = project_core(basis, use_deim, s0.B_u, s0.B_w, s0.C);
    for (const NdaeSystem* s : stages) {
        rom.A_stages.push_back(basis.W_L * s->A * basis.W_R);
        rom.fom_stages.push_back(s);
    }
    Eigen::MatrixXd E_r = Eigen::MatrixXd::Zero(rom.r(), rom.r());
    for (int i = 0; i < rom.r_d; ++i) E_r(i, i) = 1.0;
    check_regular_pair(E_r, rom.A_stages.front());
    return rom;
}

Rom project(const std::vector<std::shared_ptr<const ScaledSystem>>& stages,
            const ReductionBasis& basis, bool use_deim) {
    if (stages.empty()) throw Error("project: no stages");
    const ScaledSystem& s0 = *stages.front();
    if (s0.n_dyn() + s0.n_alg() != basis.n())
        throw Error("basis dimensions disagree with the system");
    Rom rom = project_core(basis, use_deim, s0.B_u(), s0.B_w(), s0.C());
    for (const auto& s : stages) {
        rom.A_stages.push_back(basis.W_L * s->A() * basis.W_R);
        rom.scaled_stages.push_back(s);
    }
    Eigen::MatrixXd E_r = Eigen::MatrixXd::Zero(rom.r(), rom.r());
    for (int i = 0; i < rom.r_d; ++i) E_r(i, i) = 1.0;
    check_regular_pair(E_r, rom.A_stages.front());
    return rom;
}

void RomView::rhs(const Eigen::VectorXd& z, const Eigen::VectorXd& u, const Eigen::VectorXd& w,
                  Eigen::VectorXd& out) const {
    const Rom& rom = *rom_;
    out.noalias() = rom.A_stages[static_cast<size_t>(stage_)] * z;
    out.noalias() += rom.B_ur * u;
    out.noalias() += rom.B_wr * w;

    const Eigen::VectorXd x_lift = rom.W_R * z;
    const bool scaled = !rom.scaled_stages.empty();
    if (rom.path == Rom::NonlinPath::Deim) {
        const auto& art = *rom.deim;
        Eigen::VectorXd fsel(art.p());
        const std::span<const int> rows(art.indices);
        if (scaled)
            rom.scaled_stages[static_cast<size_t>(stage_)]->nonlinearity_rows(rows, x_lift, u, w,
                                                                              fsel);
        else
            rom.fom_stages[static_cast<size_t>(stage_)]->nonlinearity_rows(rows, x_lift, u, w,
                                                                           fsel);
        out.noalias() += rom.deim_projector * fsel;
    } else {
        Eigen::VectorXd f;
        if (scaled)
            f = rom.scaled_stages[static_cast<size_t>(stage_)]->nonlinearity(x_lift, u, w);
        else
            f = rom.fom_stages[static_cast<size_t>(stage_)]->nonlinearity(x_lift, u, w);
        out.noalias() += rom.W_L * f;
    }
}

Eigen::VectorXd reduced_initial_state(const Rom& rom, const Eigen::VectorXd& x0,
                                      const Eigen::VectorXd& u, const Eigen::VectorXd& w,
                                      const SolverOptions& opts) {
    Eigen::VectorXd z0 = rom.W_L * x0;
    if (rom.r_a == 0) return z0;
    RomView view(rom, 0);
    return solve_consistent(view, z0, u, w, opts);
}

InputSchedule rom_schedule(const Rom& rom, const InputSchedule& raw) {
    if (!rom.scaling) return raw;
    InputSchedule s = raw;
    const ScalingSet scaling = *rom.scaling;
    auto base = raw.inputs;
    s.inputs = [base, scaling](double t, Eigen::VectorXd& u, Eigen::VectorXd& w) {
        base(t, u, w);
        u = scaling.scale_u(u);
        w = scaling.scale_w(w);
    };
    return s;
}

Trajectory simulate_rom(const Rom& rom, const Eigen::VectorXd& z0, const InputSchedule& raw,
                        double t0, double t1, const SolverOptions& opts) {
    std::vector<RomView> views;
    views.reserve(static_cast<size_t>(rom.stages()));
    for (int s = 0; s < rom.stages(); ++s) views.emplace_back(rom, s);
    std::vector<const DaeSystem*> ptrs;
    for (const auto& v : views) ptrs.push_back(&v);
    return integrate(ptrs, rom_schedule(rom, raw), z0, t0, t1, opts);
}

Eigen::MatrixXd recover(const Rom& rom, const Eigen::MatrixXd& reduced_states) {
    Eigen::MatrixXd x = rom.W_R * reduced_states;
    if (rom.scaling) x = rom.scaling->s_x.asDiagonal() * x;
    return x;
}

Eigen::MatrixXd recover(const ReductionBasis& basis, const Eigen::MatrixXd& reduced_states) {
    Eigen::MatrixXd x = basis.W_R * reduced_states;
    if (basis.scaling) x = basis.scaling->s_x.asDiagonal() * x;
    return x;
}

StateGroups default_groups(const StateLayout& layout) {
    StateGroups g;
    std::vector<int> conv, sol, alg;
    for (int i = 0; i < 9 * layout.G; ++i) conv.push_back(i);
    for (int i = 0; i < 12 * layout.R; ++i) sol.push_back(layout.solar_base() + i);
    for (int i = 0; i < layout.Lm; ++i) conv.push_back(layout.motor(i));
    for (int i = layout.n_d; i < layout.n; ++i) alg.push_back(i);
    g.groups.emplace_back("conventional", std::move(conv));
    g.groups.emplace_back("solar", std::move(sol));
    g.groups.emplace_back("algebraic", std::move(alg));
    return g;
}

ComparisonReport compare(const Trajectory& fom, const Eigen::VectorXd& rec_times,
                         const Eigen::MatrixXd& rec_states, const StateGroups& groups) {
    const int n = static_cast<int>(fom.states.rows());
    const int T = fom.columns();
    if (rec_states.rows() != n) throw Error("compare: state dimension mismatch");
    if (rec_times.size() < 2) throw Error("compare: recovered trajectory has too few samples");
    if (rec_times[0] > fom.times[0] + 1e-9 ||
        rec_times[rec_times.size() - 1] < fom.times[T - 1] - 1e-9)
        throw Error("compare: recovered trajectory does not cover the reference grid");

    // interpolate the recovered states onto the reference grid
    Eigen::MatrixXd rec(n, T);
    int cursor = 0;
    for (int k = 0; k < T; ++k) {
        const double t = fom.times[k];
        while (cursor + 1 < static_cast<int>(rec_times.size()) &&
               rec_times[cursor + 1] < t - 1e-12)
            ++cursor;
        if (cursor + 1 >= static_cast<int>(rec_times.size())) {
            rec.col(k) = rec_states.col(rec_times.size() - 1);
            continue;
        }
        const double t0 = rec_times[cursor], t1 = rec_times[cursor + 1];
        const double a = t1 > t0 ? std::clamp((t - t0) / (t1 - t0), 0.0, 1.0) : 0.0;
        rec.col(k) = (1.0 - a) * rec_states.col(cursor) + a * rec_states.col(cursor + 1);
    }

    const Eigen::MatrixXd err = rec - fom.states;

    ComparisonReport rep;
    rep.rmse = std::sqrt(err.squaredNorm() / (static_cast<double>(n) * T));
    rep.error_norm_series.resize(T);
    for (int k = 0; k < T; ++k) rep.error_norm_series[k] = err.col(k).norm();
    rep.per_state_rmse.resize(n);
    for (int i = 0; i < n; ++i)
        rep.per_state_rmse[i] = std::sqrt(err.row(i).squaredNorm() / T);

    for (const auto& [name, idx] : groups.groups) {
        if (idx.empty()) {
            rep.eps_s.emplace_back(name, 0.0);
            continue;
        }
        double acc = 0.0;
        for (int i : idx) acc += err.row(i).squaredNorm();
        rep.eps_s.emplace_back(name,
                               std::sqrt(acc / (static_cast<double>(idx.size()) * T)));
    }
    return rep;
}

std::string ComparisonReport::to_text() const {
    std::ostringstream out;
    out << "rmse_all_states " << rmse << "\n";
    for (const auto& [name, v] : eps_s) out << "eps_s " << name << " " << v << "\n";
    if (fom_runtime > 0.0) out << "fom_runtime_s " << fom_runtime << "\n";
    if (rom_runtime > 0.0) out << "rom_runtime_s " << rom_runtime << "\n";
    return out.str();
}

}  // namespace ndae
