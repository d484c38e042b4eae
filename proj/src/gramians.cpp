#include "ndae/gramians.hpp"

#include <atomic>
#include <cmath>
#include <thread>

namespace ndae {

std::vector<double> PerturbationConfig::magnitudes_u() const {
    std::vector<double> m;
    for (double b : base_magnitudes) m.push_back(alpha_u * b);
    return m;
}

std::vector<double> PerturbationConfig::magnitudes_x() const {
    std::vector<double> m;
    for (double b : base_magnitudes) m.push_back(alpha_x * b);
    return m;
}

namespace {

int thread_count(const PerturbationConfig& cfg) {
    if (cfg.threads > 0) return cfg.threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 2 : static_cast<int>(hw);
}

// sample the trajectory at the covariance grid k*dt by linear interpolation
Eigen::MatrixXd sample_at_grid(const Trajectory& traj, double dt, int K) {
    Eigen::MatrixXd out(traj.states.rows(), K + 1);
    int cursor = 0;
    const int T = traj.columns();
    for (int k = 0; k <= K; ++k) {
        const double t = k * dt;
        while (cursor + 1 < T && traj.times[cursor + 1] <= t + 1e-12) ++cursor;
        if (cursor + 1 >= T) {
            out.col(k) = traj.states.col(T - 1);
            continue;
        }
        const double t0 = traj.times[cursor], t1 = traj.times[cursor + 1];
        const double a = t1 > t0 ? (t - t0) / (t1 - t0) : 0.0;
        out.col(k) = (1.0 - a) * traj.states.col(cursor) + a * traj.states.col(cursor + 1);
    }
    return out;
}

template <typename Fn>
void run_pool(int jobs, int threads, Fn&& body) {
    std::atomic<int> next{0};
    auto worker = [&] {
        for (;;) {
            const int j = next.fetch_add(1);
            if (j >= jobs) return;
            body(j);
        }
    };
    std::vector<std::thread> pool;
    const int nt = std::min(threads, jobs);
    pool.reserve(static_cast<size_t>(nt));
    for (int i = 0; i < nt; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

}  // namespace

Eigen::MatrixXd controllability_covariance(const DaeSystem& sys, const Eigen::VectorXd& x0,
                                           const Eigen::VectorXd& u0, const Eigen::VectorXd& w0,
                                           const PerturbationConfig& cfg) {
    const int n = sys.n_states();
    std::vector<int> inputs = cfg.input_indices;
    if (inputs.empty())
        for (int i = 0; i < sys.n_inputs(); ++i) inputs.push_back(i);

    const std::vector<double> mags = cfg.magnitudes_u();
    const int q = 2;  // +I and -I
    const int s = static_cast<int>(mags.size());
    const int K = static_cast<int>(std::llround(cfg.horizon / cfg.dt));
    const double pulse = cfg.pulse_width > 0.0 ? cfg.pulse_width : cfg.dt;

    struct Job {
        int input, sign, mag;
    };
    std::vector<Job> jobs;
    for (int i : inputs)
        for (int l = 0; l < 2; ++l)
            for (int m = 0; m < s; ++m) jobs.push_back({i, l == 0 ? 1 : -1, m});

    std::vector<Eigen::MatrixXd> partial(jobs.size());
    std::vector<std::string> failures(jobs.size());

    run_pool(static_cast<int>(jobs.size()), thread_count(cfg), [&](int j) {
        const Job& job = jobs[static_cast<size_t>(j)];
        const double c = mags[static_cast<size_t>(job.mag)];
        try {
            Eigen::VectorXd delta = Eigen::VectorXd::Zero(sys.n_inputs());
            delta[job.input] = job.sign * c;

            InputSchedule sched;
            const InputShape shape = cfg.shape;
            sched.inputs = [u0, w0, delta, shape, pulse](double t, Eigen::VectorXd& u,
                                                         Eigen::VectorXd& w) {
                u = u0;
                w = w0;
                if (shape == InputShape::StepHold) {
                    if (t > 0.0) u += delta;
                } else if (t > 0.0 && t <= pulse) {
                    u += delta / pulse;
                }
            };
            if (shape == InputShape::UnitPulse) sched.events = {pulse};

            const Trajectory traj = integrate(sys, sched, x0, 0.0, cfg.horizon, cfg.solver);
            const Eigen::MatrixXd xs = sample_at_grid(traj, cfg.dt, K);

            Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
            for (int k = 0; k <= K; ++k) {
                const Eigen::VectorXd d = xs.col(k) - x0;
                acc.noalias() += d * d.transpose();
            }
            partial[static_cast<size_t>(j)] =
                acc * (cfg.dt / (static_cast<double>(q) * s * c * c));
        } catch (const std::exception& e) {
            failures[static_cast<size_t>(j)] = "input " + std::to_string(job.input) + " sign " +
                                               std::to_string(job.sign) + " magnitude " +
                                               std::to_string(c) + ": " + e.what();
        }
    });

    for (const auto& f : failures)
        if (!f.empty())
            throw GramianError("controllability perturbation run failed (" + f +
                               "); lower the perturbation magnitudes");

    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
    for (const auto& part : partial) G += part;  // fixed job order
    return G;
}

Eigen::MatrixXd observability_covariance(const DaeSystem& sys, const Eigen::MatrixXd& C_in,
                                         const Eigen::VectorXd& x0, const Eigen::VectorXd& u0,
                                         const Eigen::VectorXd& w0,
                                         const PerturbationConfig& cfg) {
    const int n = sys.n_states();
    const int nd = sys.n_dyn();

    Eigen::MatrixXd C = C_in;
    if (C.size() == 0) {
        C = Eigen::MatrixXd::Zero(nd, n);
        for (int i = 0; i < nd; ++i) C(i, i) = 1.0;
    }

    // perturbation directions: unit dynamic states by default, or POD modes
    Eigen::MatrixXd dirs;
    if (cfg.pod_directions.size() > 0) {
        if (cfg.pod_directions.rows() != nd)
            throw GramianError("mode-perturbation directions must span the dynamic block");
        dirs = cfg.pod_directions;
    } else if (!cfg.state_indices.empty()) {
        dirs = Eigen::MatrixXd::Zero(nd, static_cast<Eigen::Index>(cfg.state_indices.size()));
        for (size_t k = 0; k < cfg.state_indices.size(); ++k)
            dirs(cfg.state_indices[k], static_cast<Eigen::Index>(k)) = 1.0;
    } else {
        dirs = Eigen::MatrixXd::Identity(nd, nd);
    }
    const int nm = static_cast<int>(dirs.cols());

    const std::vector<double> mags = cfg.magnitudes_x();
    const int q = 2;
    const int s = static_cast<int>(mags.size());
    const int K = static_cast<int>(std::llround(cfg.horizon / cfg.dt));
    const int p = static_cast<int>(C.rows());

    const InputSchedule sched = constant_schedule(u0, w0);
    const Eigen::VectorXd y0 = C * x0;

    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(nm, nm);

    // deviation blocks per (sign, magnitude); runs over the perturbed
    // directions fan out concurrently
    for (int l = 0; l < 2; ++l) {
        const int sign = l == 0 ? 1 : -1;
        for (int m = 0; m < s; ++m) {
            const double c = mags[static_cast<size_t>(m)];
            // dY[k] is p x nm: output deviation of run i at sample k
            std::vector<Eigen::MatrixXd> dY(static_cast<size_t>(K + 1),
                                            Eigen::MatrixXd::Zero(p, nm));
            std::vector<std::string> failures(static_cast<size_t>(nm));

            run_pool(nm, thread_count(cfg), [&](int i) {
                try {
                    Eigen::VectorXd xi = x0;
                    xi.head(nd) += sign * c * dirs.col(i);
                    xi = solve_consistent(sys, xi, u0, w0, cfg.solver);
                    const Trajectory traj = integrate(sys, sched, xi, 0.0, cfg.horizon, cfg.solver);
                    const Eigen::MatrixXd xs = sample_at_grid(traj, cfg.dt, K);
                    for (int k = 0; k <= K; ++k)
                        dY[static_cast<size_t>(k)].col(i) = C * xs.col(k) - y0;
                } catch (const std::exception& e) {
                    failures[static_cast<size_t>(i)] =
                        "state direction " + std::to_string(i) + " sign " + std::to_string(sign) +
                        " magnitude " + std::to_string(c) + ": " + e.what();
                }
            });
            for (const auto& f : failures)
                if (!f.empty())
                    throw GramianError("observability perturbation run failed (" + f +
                                       "); lower the perturbation magnitudes");

            Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(nm, nm);
            for (int k = 0; k <= K; ++k)
                acc.noalias() += dY[static_cast<size_t>(k)].transpose() * dY[static_cast<size_t>(k)];
            G += acc * (cfg.dt / (static_cast<double>(q) * s * c * c));
        }
    }
    return G;
}

CovarianceBlocks partition(const Eigen::MatrixXd& G_c, int n_d) {
    const int n = static_cast<int>(G_c.rows());
    if (G_c.cols() != n || n_d < 0 || n_d > n) throw GramianError("partition dimensions disagree");
    const int n_a = n - n_d;
    CovarianceBlocks b;
    b.G11 = G_c.topLeftCorner(n_d, n_d);
    b.G12 = G_c.topRightCorner(n_d, n_a);
    b.G21 = G_c.bottomLeftCorner(n_a, n_d);
    b.G22 = G_c.bottomRightCorner(n_a, n_a);
    return b;
}

Eigen::MatrixXd regularize_spd(const Eigen::MatrixXd& G, double rel) {
    const int n = static_cast<int>(G.rows());
    const double eps = rel * G.trace() / std::max(n, 1);
    return G + eps * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace ndae
