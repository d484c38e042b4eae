#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "ndae/ndae_system.hpp"

using namespace ndae;
using namespace ndae::testing;

TEST_CASE("ybus stamps a single branch") {
    std::vector<Bus> buses{{1, BusKind::NonUnit, {0, 0}}, {2, BusKind::NonUnit, {0, 0}}};
    const Complex y(1.0, -5.0);
    std::vector<Branch> branches{{1, 2, y, 0.0, true}};
    const Eigen::MatrixXcd Y = assemble_ybus(buses, branches);
    CHECK(Y(0, 0) == y);
    CHECK(Y(1, 1) == y);
    CHECK(Y(0, 1) == -y);
    CHECK(Y(1, 0) == -y);
}

TEST_CASE("ybus on the equal-admittance triangle") {
    std::vector<Bus> buses{{1, BusKind::NonUnit, {0, 0}},
                           {2, BusKind::NonUnit, {0, 0}},
                           {3, BusKind::NonUnit, {0, 0}}};
    const Complex y(2.0, -8.0);
    std::vector<Branch> branches{{1, 2, y, 0.0, true}, {2, 3, y, 0.0, true}, {1, 3, y, 0.0, true}};
    const Eigen::MatrixXcd Y = assemble_ybus(buses, branches);
    // hand-summed stamps: diagonal 2y, off-diagonal -y
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(Y(i, j) == (i == j ? 2.0 * y : -y));
}

TEST_CASE("ybus with every branch out of service is shunt-only") {
    std::vector<Bus> buses{{1, BusKind::NonUnit, {0.1, 0.2}}, {2, BusKind::NonUnit, {0.0, 0.3}}};
    std::vector<Branch> branches{{1, 2, {1.0, -4.0}, 0.1, false}};
    const Eigen::MatrixXcd Y = assemble_ybus(buses, branches);
    CHECK(Y(0, 0) == Complex(0.1, 0.2));
    CHECK(Y(1, 1) == Complex(0.0, 0.3));
    CHECK(Y(0, 1) == Complex(0.0, 0.0));
}

TEST_CASE("ybus rejects dangling endpoints") {
    std::vector<Bus> buses{{1, BusKind::NonUnit, {0, 0}}};
    std::vector<Branch> branches{{1, 7, {1.0, 0.0}, 0.0, true}};
    CHECK_THROWS_AS(assemble_ybus(buses, branches), StructuralError);
}

TEST_CASE("ybus is invariant under branch permutation") {
    auto g = grid9();
    auto shuffled = g->branches;
    std::reverse(shuffled.begin(), shuffled.end());
    const Eigen::MatrixXcd a = assemble_ybus(g->buses, g->branches);
    // permuted input, same stamping arithmetic per branch
    const Eigen::MatrixXcd b = assemble_ybus(g->buses, shuffled);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("assembled dimensions match the study-case counts") {
    const NdaeSystem sys = assemble_ndae(grid39_like());
    CHECK(sys.n_dyn() == 97);
    CHECK(sys.n_alg() == 120);
    CHECK(sys.n_states() == 217);
}

TEST_CASE("assembly rejects devices on non-unit buses") {
    auto g = grid9();
    auto broken = std::make_shared<GridModel>(*g);
    broken->buses[4].kind = BusKind::NonUnit;  // bus 5 carries a load
    CHECK_THROWS_AS(assemble_ndae(broken), StructuralError);
}

TEST_CASE("E is a binary selector of rank n_d") {
    const NdaeSystem& sys = grid9_system();
    const Eigen::MatrixXd E = sys.E();
    CHECK((E * E - E).cwiseAbs().maxCoeff() == 0.0);
    CHECK(E.diagonal().sum() == doctest::Approx(sys.n_dyn()));
    CHECK(E.bottomRows(sys.n_alg()).cwiseAbs().maxCoeff() == 0.0);
    // single machine + motor count example: rank(E) = 9G + 12R + motors
    CHECK(sys.n_dyn() == 9 * 3 + 12 * 1 + 1);
}

TEST_CASE("network residual on an unloaded flat profile is -Y V") {
    auto g = std::make_shared<GridModel>();
    for (int id = 1; id <= 3; ++id) g->buses.push_back({id, BusKind::NonUnit, {0.0, 0.05}});
    g->buses.push_back({4, BusKind::Load, {0.0, 0.0}});
    g->branches.push_back({1, 2, 1.0 / Complex(0.01, 0.1), 0.02, true});
    g->branches.push_back({2, 3, 1.0 / Complex(0.01, 0.1), 0.02, true});
    g->branches.push_back({3, 4, 1.0 / Complex(0.01, 0.1), 0.02, true});
    LoadSpec l;
    l.bus = 4;
    l.kind = LoadKind::Impedance;
    g->loads.push_back(l);
    const NdaeSystem sys = assemble_ndae(g);

    Eigen::VectorXd x = Eigen::VectorXd::Zero(sys.n_states());
    const auto& L = sys.layout;
    for (int b = 0; b < L.N; ++b) x[L.vre(b)] = 1.0;  // flat profile, zero currents
    const Eigen::VectorXd r = sys.residual(x, sys.nominal_u(), sys.nominal_w());

    const Eigen::VectorXd vre = x.segment(L.vre(0), L.N);
    const Eigen::VectorXd yv_re = sys.Y.real() * vre;
    const Eigen::VectorXd yv_im = sys.Y.imag() * vre;
    for (int b = 0; b < L.N; ++b) {
        CHECK(r[L.row_bal_re(b)] == doctest::Approx(-yv_re[b]).epsilon(1e-14));
        CHECK(r[L.row_bal_im(b)] == doctest::Approx(-yv_im[b]).epsilon(1e-14));
    }
}

TEST_CASE("motor row vanishes when torques balance") {
    const NdaeSystem& sys = grid9_system();
    const auto& L = sys.layout;
    Eigen::VectorXd x = sys.flat_start();
    // pick the motor bus state so that drawn power equals the torque law
    const LoadSpec& motor = sys.grid->loads[3];
    const int b = motor.bus - 1;
    x[L.vre(b)] = 1.0;
    x[L.vim(b)] = 0.0;
    x[L.ire(b)] = -0.5;
    x[L.iim(b)] = 0.1;
    const double drawn = 0.5;  // -(VRe*IRe + VIm*IIm)
    x[L.motor(0)] = std::sqrt(drawn / motor.torque_coeff);
    const Eigen::VectorXd r = sys.residual(x, sys.nominal_u(), sys.nominal_w());
    CHECK(r[L.motor(0)] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("constant-power residual vanishes at a hand-solved point") {
    const NdaeSystem& sys = grid9_system();
    const auto& L = sys.layout;
    // bus 5 carries the P+jQ load (0.9 + j0.3); choose V, solve I from
    // P + jQ + conj(I) V = 0 by hand: conj(I) = -(P+jQ)/V
    const Complex S(0.9, 0.3);
    const Complex V(1.02, 0.05);
    const Complex I = std::conj(-S / V);
    Eigen::VectorXd x = sys.flat_start();
    const int b = 4;
    x[L.vre(b)] = V.real();
    x[L.vim(b)] = V.imag();
    x[L.ire(b)] = I.real();
    x[L.iim(b)] = I.imag();
    const Eigen::VectorXd r = sys.residual(x, sys.nominal_u(), sys.nominal_w());
    CHECK(std::abs(r[L.row_dev_1(b)]) < 1e-14);
    CHECK(std::abs(r[L.row_dev_2(b)]) < 1e-14);
}

TEST_CASE("residual equals linear part plus nonlinearity") {
    const NdaeSystem& sys = grid9_system();
    std::mt19937 rng(7);
    std::normal_distribution<double> dist(0.0, 0.3);
    for (int trial = 0; trial < 3; ++trial) {
        Eigen::VectorXd x = sys.flat_start();
        for (int i = 0; i < x.size(); ++i) x[i] += dist(rng);
        Eigen::VectorXd u = sys.nominal_u();
        Eigen::VectorXd w = sys.nominal_w();
        for (int i = 0; i < u.size(); ++i) u[i] += 0.1 * dist(rng);
        for (int i = 0; i < w.size(); ++i) w[i] += 0.1 * dist(rng);

        const Eigen::VectorXd g = sys.residual(x, u, w);
        const Eigen::VectorXd f = sys.nonlinearity(x, u, w);
        const Eigen::VectorXd recomposed = sys.A * x + sys.B_u * u + sys.B_w * w + f;
        CHECK((g - recomposed).lpNorm<Eigen::Infinity>() < 1e-11);
    }
}

TEST_CASE("selective residual rows match the full evaluation") {
    const NdaeSystem& sys = grid9_system();
    std::mt19937 rng(11);
    std::normal_distribution<double> dist(0.0, 0.2);
    Eigen::VectorXd x = sys.flat_start();
    for (int i = 0; i < x.size(); ++i) x[i] += dist(rng);
    const Eigen::VectorXd u = sys.nominal_u();
    const Eigen::VectorXd w = sys.nominal_w();

    const Eigen::VectorXd full = sys.residual(x, u, w);
    std::vector<int> rows;
    for (int i = 0; i < sys.n_states(); i += 3) rows.push_back(i);
    Eigen::VectorXd sel;
    sys.residual_rows(rows, x, u, w, sel);
    for (size_t k = 0; k < rows.size(); ++k)
        CHECK(sel[static_cast<Eigen::Index>(k)] == full[rows[k]]);
}

TEST_CASE("nonlinearity rows respond nonlinearly or not at all") {
    const NdaeSystem& sys = grid9_system();
    const int n = sys.n_states();
    std::mt19937 rng(23);
    std::normal_distribution<double> dist(0.0, 0.25);

    // probe every row over random base points and directions; a row whose
    // response is always exactly proportional to the step has a leftover
    // linear term that belongs in A/B
    std::vector<bool> responded(static_cast<size_t>(n), false);
    std::vector<bool> nonlinear(static_cast<size_t>(n), false);

    const Eigen::VectorXd u = sys.nominal_u();
    const Eigen::VectorXd w = sys.nominal_w();
    for (int trial = 0; trial < 6; ++trial) {
        Eigen::VectorXd x = sys.flat_start();
        for (int i = 0; i < n; ++i) x[i] += dist(rng);
        const Eigen::VectorXd f0 = sys.nonlinearity(x, u, w);
        for (int probe = 0; probe < 12; ++probe) {
            const int var = std::uniform_int_distribution<int>(0, n - 1)(rng);
            const double d = 0.15;
            Eigen::VectorXd x1 = x, x2 = x;
            x1[var] += d;
            x2[var] += 2.0 * d;
            const Eigen::VectorXd r1 = sys.nonlinearity(x1, u, w) - f0;
            const Eigen::VectorXd r2 = sys.nonlinearity(x2, u, w) - f0;
            for (int i = 0; i < n; ++i) {
                const double scale = std::max({std::abs(r1[i]), std::abs(r2[i]), 1e-9});
                if (std::abs(r1[i]) > 1e-10) responded[static_cast<size_t>(i)] = true;
                if (std::abs(r2[i] - 2.0 * r1[i]) > 1e-7 * scale)
                    nonlinear[static_cast<size_t>(i)] = true;
            }
        }
    }
    for (int i = 0; i < n; ++i)
        if (responded[static_cast<size_t>(i)]) CHECK(nonlinear[static_cast<size_t>(i)]);
}

TEST_CASE("equilibrium of the bundled grid") {
    const NdaeSystem& sys = grid9_system();
    const EquilibriumResult& eq = grid9_equilibrium();
    const Eigen::VectorXd r = sys.residual(eq.x, sys.nominal_u(), eq.w);
    CHECK(r.lpNorm<Eigen::Infinity>() < 1e-8);

    const auto& L = sys.layout;
    for (int i = 0; i < L.G; ++i) CHECK(eq.x[L.m_omega(i)] == doctest::Approx(1.0).epsilon(1e-9));
    // bus voltages near nominal
    for (int b = 0; b < L.N; ++b) {
        const double v = std::hypot(eq.x[L.vre(b)], eq.x[L.vim(b)]);
        CHECK(v > 0.85);
        CHECK(v < 1.15);
    }
}
