#include "ndae/grid_io.hpp"

namespace ndae {

namespace {

BusKind bus_kind(const KvNode& n, const std::string& s) {
    if (s == "generator") return BusKind::Generator;
    if (s == "solar") return BusKind::Solar;
    if (s == "load") return BusKind::Load;
    if (s == "non-unit") return BusKind::NonUnit;
    n.fail("unknown bus kind '" + s + "'");
}

Complex complex_pair(const KvNode& owner, const std::string& name, Complex fallback) {
    const KvNode* c = owner.find(name);
    if (!c) return fallback;
    return {c->value_num(0), c->value_num(1)};
}

}  // namespace

std::shared_ptr<GridModel> grid_from_kv(const KvNode& root) {
    auto grid = std::make_shared<GridModel>();

    for (const KvNode* b : root.require("buses").all("bus")) {
        Bus bus;
        bus.id = static_cast<int>(b->integer("id"));
        bus.kind = bus_kind(*b, b->str("kind"));
        bus.shunt = complex_pair(*b, "shunt", {0.0, 0.0});
        grid->buses.push_back(bus);
    }

    if (const KvNode* bs = root.find("branches")) {
        for (const KvNode* b : bs->all("branch")) {
            Branch br;
            br.from = static_cast<int>(b->integer("from"));
            br.to = static_cast<int>(b->integer("to"));
            if (b->has("r") || b->has("x")) {
                const Complex z(b->num_or("r", 0.0), b->num_or("x", 0.0));
                if (std::abs(z) == 0.0) b->fail("branch impedance must be nonzero");
                br.series_admittance = 1.0 / z;
            } else {
                br.series_admittance = {b->num_or("g", 0.0), b->num_or("b_series", 0.0)};
            }
            br.charging = b->num_or("b", 0.0);
            br.in_service = b->integer_or("status", 1) != 0;
            grid->branches.push_back(br);
        }
    }

    if (const KvNode* ms = root.find("machines")) {
        for (const KvNode* m : ms->all("machine")) {
            SyncMachineParams p;
            p.bus = static_cast<int>(m->integer("bus"));
            p.H = m->num("H");
            p.R_d = m->num("R_d");
            p.x_d = m->num("x_d");
            p.x_q = m->num("x_q");
            p.xp_d = m->num("xp_d");
            p.xp_q = m->num("xp_q");
            p.t_do = m->num("t_do");
            p.t_qo = m->num("t_qo");
            p.t_ch = m->num("t_ch");
            p.t_w = m->num_or("t_w", 1.0);
            p.t_v = m->num("t_v");
            p.t_fd = m->num("t_fd");
            p.t_f = m->num("t_f");
            p.t_a = m->num("t_a");
            p.k_a = m->num("k_a");
            p.k_e = m->num("k_e");
            p.k_f = m->num("k_f");
            p.sat_a = m->num_or("sat_a", 0.0);
            p.sat_b = m->num_or("sat_b", 0.0);
            const std::string tk = m->str_or("turbine", "thermal");
            if (tk == "thermal")
                p.turbine = TurbineKind::Thermal;
            else if (tk == "hydro")
                p.turbine = TurbineKind::Hydro;
            else
                m->fail("unknown turbine kind '" + tk + "'");
            p.p_set = m->num_or("p_set", 0.0);
            p.v_set = m->num_or("v_set", 1.0);
            grid->machines.push_back(p);
        }
    }

    if (const KvNode* ss = root.find("solar")) {
        for (const KvNode* s : ss->all("plant")) {
            SolarPlantParams p;
            p.bus = static_cast<int>(s->integer("bus"));
            p.B_C = s->num("B_C");
            p.X_f = s->num("X_f");
            p.r_f = s->num("r_f");
            p.B_c = s->num("B_c");
            p.r_c = s->num("r_c");
            p.k_p = s->num("k_p");
            p.k_d = s->num_or("k_d", 0.0);
            p.k_q = s->num_or("k_q", 0.0);
            p.tau_s = s->num("tau_s");
            p.tau_v = s->num("tau_v");
            p.tau_i = s->num("tau_i");
            p.kappa_p = s->num("kappa_p");
            p.kappa_pv = s->num("kappa_pv");
            p.omega_b = s->num_or("omega_b", kOmegaBase);
            p.eta = s->num_or("eta", 1.0);
            p.p_set = s->num_or("p_set", 0.0);
            p.v_set = s->num_or("v_set", 1.0);
            p.irradiance = s->num_or("irradiance", p.p_set);
            grid->solar.push_back(p);
        }
    }

    if (const KvNode* ls = root.find("loads")) {
        for (const KvNode* l : ls->all("load")) {
            LoadSpec spec;
            spec.bus = static_cast<int>(l->integer("bus"));
            const std::string kind = l->str("kind");
            if (kind == "impedance") {
                spec.kind = LoadKind::Impedance;
                spec.impedance = complex_pair(*l, "z", {1.0, 0.5});
            } else if (kind == "power") {
                spec.kind = LoadKind::Power;
                spec.p = l->num("p");
                spec.q = l->num_or("q", 0.0);
            } else if (kind == "motor") {
                spec.kind = LoadKind::Motor;
                spec.H_M = l->num("H");
                spec.impedance = complex_pair(*l, "z", {1.0, 0.5});
                spec.torque_coeff = l->num_or("t0", 1.0);
                spec.torque_exp = l->num_or("t_exp", 2.0);
            } else {
                l->fail("unknown load kind '" + kind + "'");
            }
            grid->loads.push_back(spec);
        }
    }

    grid->validate();
    return grid;
}

std::shared_ptr<GridModel> load_grid(const std::string& path) {
    return grid_from_kv(parse_kv_file(path));
}

}  // namespace ndae
