#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ndae/pod.hpp"
#include "ndae/scenario.hpp"
#include "ndae/snapshots.hpp"

namespace ndae {

struct StructureError : Error {
    using Error::Error;
};

/// Galerkin-projected reduced NDAE. E_r is exactly blkdiag(I_{r_d}, 0_{r_a})
/// (asserted at projection); A_r carries one matrix per topology stage.
/// The nonlinearity path lifts the reduced state through W_R and either
/// projects the full f or interpolates it through the stored artifacts.
struct Rom {
    int r_d = 0, r_a = 0;
    std::vector<Eigen::MatrixXd> A_stages;
    Eigen::MatrixXd B_ur, B_wr, C_r;
    Eigen::MatrixXd W_R, W_L;

    enum class NonlinPath { FullProjection, Deim };
    NonlinPath path = NonlinPath::FullProjection;
    std::optional<DeimArtifacts> deim;
    Eigen::MatrixXd deim_projector;  // W_L W_fr (P^T W_fr)^{-1}, r x p

    Provenance provenance = Provenance::SpPod;
    std::optional<ScalingSet> scaling;  // reduced model lives in scaled coordinates

    // lift targets for nonlinearity evaluation, one per stage
    std::vector<const NdaeSystem*> fom_stages;
    std::vector<std::shared_ptr<const ScaledSystem>> scaled_stages;

    int r() const { return r_d + r_a; }
    int stages() const { return static_cast<int>(A_stages.size()); }
};

/// Reduced view of one stage, integrable by the shared solver.
class RomView final : public DaeSystem {
public:
    RomView(const Rom& rom, int stage) : rom_(&rom), stage_(stage) {}
    int n_dyn() const override { return rom_->r_d; }
    int n_alg() const override { return rom_->r_a; }
    int n_inputs() const override { return static_cast<int>(rom_->B_ur.cols()); }
    int n_disturbances() const override { return static_cast<int>(rom_->B_wr.cols()); }
    void rhs(const Eigen::VectorXd& z, const Eigen::VectorXd& u, const Eigen::VectorXd& w,
             Eigen::VectorXd& out) const override;

private:
    const Rom* rom_;
    int stage_;
};

/// Projects the full system (all topology stages) through the basis.
/// Throws StructureError if E_r, after rounding entries below 1e-12, is not
/// exactly blkdiag(I_{r_d}, 0), or if the reduced pair fails a random-shift
/// regularity probe.
Rom project(const std::vector<const NdaeSystem*>& stages, const ReductionBasis& basis,
            bool use_deim = true);

/// Scaled-coordinate variant for bases built on the scaled system.
Rom project(const std::vector<std::shared_ptr<const ScaledSystem>>& stages,
            const ReductionBasis& basis, bool use_deim = true);

/// z0: dynamic part W_L x0 (head), algebraic part re-solved on the reduced
/// equations. x0 must live in the coordinates of the basis (scaled for
/// SP-BPOD bases).
Eigen::VectorXd reduced_initial_state(const Rom& rom, const Eigen::VectorXd& x0,
                                      const Eigen::VectorXd& u, const Eigen::VectorXd& w,
                                      const SolverOptions& opts = {});

/// Schedule wrapper converting raw inputs into the ROM's coordinates.
InputSchedule rom_schedule(const Rom& rom, const InputSchedule& raw);

Trajectory simulate_rom(const Rom& rom, const Eigen::VectorXd& z0, const InputSchedule& raw,
                        double t0, double t1, const SolverOptions& opts = {});

/// x ~ W_R z per column, unscaled back to raw coordinates when the ROM is
/// scaled. No re-solving.
Eigen::MatrixXd recover(const Rom& rom, const Eigen::MatrixXd& reduced_states);
Eigen::MatrixXd recover(const ReductionBasis& basis, const Eigen::MatrixXd& reduced_states);

struct StateGroups {
    std::vector<std::pair<std::string, std::vector<int>>> groups;
};

/// conventional-plant (machine + motor states), solar, algebraic.
StateGroups default_groups(const StateLayout& layout);

struct ComparisonReport {
    double rmse = 0.0;
    std::vector<std::pair<std::string, double>> eps_s;
    Eigen::VectorXd error_norm_series;  // ||x_r - x_fom||_2 over time
    Eigen::VectorXd per_state_rmse;
    double fom_runtime = 0.0, rom_runtime = 0.0;

    std::string to_text() const;
};

/// Interpolates the recovered trajectory onto the reference grid and
/// evaluates the root-mean-square metrics overall and per group.
ComparisonReport compare(const Trajectory& fom, const Eigen::VectorXd& rec_times,
                         const Eigen::MatrixXd& rec_states, const StateGroups& groups);

}  // namespace ndae
