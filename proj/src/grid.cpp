#include "ndae/grid.hpp"

#include <algorithm>

namespace ndae {

int GridModel::motor_count() const {
    return static_cast<int>(std::count_if(loads.begin(), loads.end(), [](const LoadSpec& l) {
        return l.kind == LoadKind::Motor;
    }));
}

const Bus& GridModel::bus(int id) const {
    if (id < 1 || id > bus_count())
        throw StructuralError("bus id out of range: " + std::to_string(id));
    return buses[static_cast<size_t>(id - 1)];
}

void GridModel::validate() const {
    const int n = bus_count();
    if (n == 0) throw StructuralError("grid has no buses");

    std::vector<bool> seen(static_cast<size_t>(n), false);
    for (const Bus& b : buses) {
        if (b.id < 1 || b.id > n)
            throw StructuralError("bus ids must be contiguous 1..N, got " + std::to_string(b.id));
        if (seen[static_cast<size_t>(b.id - 1)])
            throw StructuralError("duplicate bus id " + std::to_string(b.id));
        seen[static_cast<size_t>(b.id - 1)] = true;
    }

    for (const Branch& br : branches) {
        if (br.from == br.to)
            throw StructuralError("branch endpoints coincide at bus " + std::to_string(br.from));
        if (br.from < 1 || br.from > n || br.to < 1 || br.to > n)
            throw StructuralError("dangling branch " + std::to_string(br.from) + "-" +
                                  std::to_string(br.to));
    }

    auto expect_kind = [&](int id, BusKind kind, const char* what) {
        const Bus& b = bus(id);
        if (b.kind == BusKind::NonUnit)
            throw StructuralError(std::string(what) + " attached to non-unit bus " +
                                  std::to_string(id));
        if (b.kind != kind)
            throw StructuralError(std::string(what) + " on bus " + std::to_string(id) +
                                  " disagrees with the bus kind");
    };

    std::vector<int> occupied(static_cast<size_t>(n), 0);
    for (const auto& m : machines) {
        expect_kind(m.bus, BusKind::Generator, "machine");
        occupied[static_cast<size_t>(m.bus - 1)]++;
        if (m.H <= 0.0) throw StructuralError("machine inertia must be positive");
        for (double t : {m.t_do, m.t_qo, m.t_ch, m.t_v, m.t_fd, m.t_f, m.t_a})
            if (t <= 0.0) throw StructuralError("machine time constants must be positive");
        if (m.turbine == TurbineKind::Hydro && m.t_w <= 0.0)
            throw StructuralError("hydro water time constant must be positive");
    }
    for (const auto& s : solar) {
        expect_kind(s.bus, BusKind::Solar, "solar plant");
        occupied[static_cast<size_t>(s.bus - 1)]++;
        for (double v : {s.B_C, s.X_f, s.B_c, s.tau_s, s.tau_v, s.tau_i, s.kappa_p, s.kappa_pv})
            if (v <= 0.0) throw StructuralError("solar plant parameters must be positive");
    }
    for (const auto& l : loads) {
        expect_kind(l.bus, BusKind::Load, "load");
        occupied[static_cast<size_t>(l.bus - 1)]++;
        if (l.kind == LoadKind::Motor && l.H_M <= 0.0)
            throw StructuralError("motor inertia must be positive");
        if ((l.kind == LoadKind::Impedance || l.kind == LoadKind::Motor) &&
            std::abs(l.impedance) == 0.0)
            throw StructuralError("load impedance must be nonzero");
    }

    for (const Bus& b : buses) {
        const int cnt = occupied[static_cast<size_t>(b.id - 1)];
        if (b.kind == BusKind::NonUnit && cnt > 0)
            throw StructuralError("device on non-unit bus " + std::to_string(b.id));
        if (b.kind != BusKind::NonUnit && cnt == 0)
            throw StructuralError("bus " + std::to_string(b.id) +
                                  " declared as a unit bus but carries no device");
        if (cnt > 1)
            throw StructuralError("bus " + std::to_string(b.id) + " carries multiple devices");
    }
}

Eigen::MatrixXcd assemble_ybus(const std::vector<Bus>& buses,
                               const std::vector<Branch>& branches) {
    const int n = static_cast<int>(buses.size());
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);

    for (const Bus& b : buses) {
        if (b.id < 1 || b.id > n) throw StructuralError("bus id out of range in ybus assembly");
        y(b.id - 1, b.id - 1) += b.shunt;
    }
    for (const Branch& br : branches) {
        if (br.from < 1 || br.from > n || br.to < 1 || br.to > n)
            throw StructuralError("dangling branch endpoint " + std::to_string(br.from) + "-" +
                                  std::to_string(br.to));
        if (!br.in_service) continue;
        const int i = br.from - 1;
        const int j = br.to - 1;
        const Complex ys = br.series_admittance;
        const Complex yc(0.0, br.charging / 2.0);
        y(i, i) += ys + yc;
        y(j, j) += ys + yc;
        y(i, j) -= ys;
        y(j, i) -= ys;
    }
    return y;
}

}  // namespace ndae
