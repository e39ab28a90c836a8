#pragma once

// Modified nodal analysis: assembly, DC operating point (damped Newton with
// Gmin and source-stepping continuation), fixed-step trapezoidal transient
// and small-signal AC about an operating point.
//
// Unknown ordering: node voltages (node 1..N-1) followed by branch currents
// of voltage sources, inductors and polynomial sources, in element order.
// Branch currents flow from the first terminal through the element to the
// second; a voltage source delivering power therefore reports a negative
// current.
//
// Ports are always present as z0 terminations between their two nodes. A
// PortDrive turns one of them into a Thevenin source (tones in series with
// z0).

#include "rfsim/devices.hpp"
#include "rfsim/error.hpp"
#include "rfsim/linalg.hpp"
#include "rfsim/netlist.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rfsim {

using cplx = std::complex<double>;

struct EngineSettings {
    double gmin = 1e-12;      // S, permanently from every node to ground
    double abstol = 1e-9;     // residual (A at node rows, V at branch rows)
    double vntol = 1e-6;      // V, Newton update
    int max_newton = 100;     // per continuation step (DC)
    int max_newton_tran = 50; // per time point
    int max_halvings = 8;
};

/// v(t) = amplitude * sin(2 pi freq t + phase), open-circuit voltage.
struct Tone {
    double amplitude = 0.0;
    double freq = 0.0;
    double phase_deg = 0.0;
};

struct PortDrive {
    int port = 1;
    std::vector<Tone> tones;

    [[nodiscard]] double value(double t) const {
        double v = 0.0;
        for (const auto& tone : tones)
            v += tone.amplitude * std::sin(2.0 * pi * tone.freq * t + tone.phase_deg * pi / 180.0);
        return v;
    }
};

struct AnalysisOptions {
    EngineSettings settings;
    std::optional<PortDrive> drive;
};

/// Integrator history for reactive elements.
struct ReactiveHistory {
    std::vector<double> cap_v, cap_i;
    std::vector<double> ind_v, ind_i;
};

enum class IntegrationMethod { backward_euler, trapezoidal };

struct StampContext {
    bool transient = false;
    double time = 0.0;
    double h = 0.0;
    IntegrationMethod method = IntegrationMethod::trapezoidal;
    double source_scale = 1.0;
    double extra_gmin = 0.0;
    const ReactiveHistory* history = nullptr;
};

/// A circuit compiled into stamp lists over a fixed unknown layout.
class MnaModel {
public:
    struct Conductance { int a, b; double g; };
    struct Capacitor { int a, b; double c; double ic; };
    struct Inductor { int a, b; double l; int row; double ic; };
    struct Source { int a, b; int row; const SourceSpec* spec; };
    struct Mosfet { int d, g, s; ModelCard card; MosGeometry geom; std::string name; };
    struct Switch { int a, b, cp, cm; SwitchModel model; };
    struct Poly { int op, om, ip, im; int row; PolyCoefficients coeffs; };
    struct Port { int p, m; double z0; };

    explicit MnaModel(const Circuit& c, AnalysisOptions options = {})
        : circuit_(&c), options_(std::move(options)) {
        num_node_rows_ = c.num_nodes() - 1;
        int next_row = num_node_rows_;
        for (int n = 1; n < c.num_nodes(); ++n) names_.push_back("v(" + c.node_names[n] + ")");
        auto row = [](int node) { return node - 1; };
        for (const auto& e : c.elements) {
            const auto& n = e.nodes;
            switch (e.kind) {
            case ElementKind::resistor: resistors_.push_back({row(n[0]), row(n[1]), 1.0 / e.value}); break;
            case ElementKind::capacitor:
                capacitors_.push_back({row(n[0]), row(n[1]), e.value, e.param("ic", 0.0)});
                break;
            case ElementKind::inductor:
                if (e.has_param("q"))
                    throw ArgumentError("inductor " + e.name + " carries q; elaborate the circuit first");
                inductors_.push_back({row(n[0]), row(n[1]), e.value, next_row++, e.param("ic", 0.0)});
                names_.push_back("i(" + e.name + ")");
                break;
            case ElementKind::vsource:
                vsources_.push_back({row(n[0]), row(n[1]), next_row++, &e.source});
                names_.push_back("i(" + e.name + ")");
                break;
            case ElementKind::isource: isources_.push_back({row(n[0]), row(n[1]), -1, &e.source}); break;
            case ElementKind::mosfet: {
                auto it = c.models.find(e.model);
                if (it == c.models.end()) throw ArgumentError(e.name + ": missing model " + e.model);
                Mosfet m{row(n[0]), row(n[1]), row(n[2]), it->second, mos_geometry(e), e.name};
                m.geom.validate();
                const auto caps = mosfet_capacitances(m.card, m.geom);
                if (caps.cgs > 0.0) capacitors_.push_back({m.g, m.s, caps.cgs, 0.0});
                if (caps.cgd > 0.0) capacitors_.push_back({m.g, m.d, caps.cgd, 0.0});
                mosfets_.push_back(std::move(m));
                break;
            }
            case ElementKind::ideal_switch:
                switches_.push_back({row(n[0]), row(n[1]), row(n[2]), row(n[3]), switch_model(e)});
                break;
            case ElementKind::poly:
                polys_.push_back({row(n[0]), row(n[1]), row(n[2]), row(n[3]), next_row++, poly_coefficients(e)});
                names_.push_back("i(" + e.name + ")");
                break;
            }
        }
        for (const auto& p : c.ports) ports_.push_back({row(p.plus), row(p.minus), p.z0});
        if (options_.drive) {
            const int k = options_.drive->port;
            if (k < 1 || k > static_cast<int>(ports_.size()))
                throw ArgumentError("drive references missing port " + std::to_string(k));
        }
        dimension_ = next_row;
    }

    [[nodiscard]] int dimension() const { return dimension_; }
    [[nodiscard]] int num_node_rows() const { return num_node_rows_; }
    [[nodiscard]] const std::vector<std::string>& names() const { return names_; }
    [[nodiscard]] const Circuit& circuit() const { return *circuit_; }
    [[nodiscard]] const AnalysisOptions& options() const { return options_; }
    [[nodiscard]] const std::vector<Capacitor>& capacitors() const { return capacitors_; }
    [[nodiscard]] const std::vector<Inductor>& inductors() const { return inductors_; }
    [[nodiscard]] const std::vector<Mosfet>& mosfets() const { return mosfets_; }

    [[nodiscard]] int signal_index(const std::string& name) const {
        for (std::size_t i = 0; i < names_.size(); ++i)
            if (names_[i] == name) return static_cast<int>(i);
        throw ArgumentError("unknown signal '" + name + "'");
    }

    static double at(std::span<const double> x, int row) { return row < 0 ? 0.0 : x[row]; }

    /// Residual F(x) (sum of currents leaving each node, branch equations)
    /// and its Jacobian.
    void assemble(std::span<const double> x, const StampContext& ctx, DenseMatrix<double>& jac,
                  std::vector<double>& f) const {
        const int n = dimension_;
        if (jac.rows() != n) jac = DenseMatrix<double>(n, n);
        jac.fill(0.0);
        f.assign(n, 0.0);
        auto J = [&](int r, int c, double v) {
            if (r >= 0 && c >= 0) jac(r, c) += v;
        };
        auto F = [&](int r, double v) {
            if (r >= 0) f[r] += v;
        };
        auto conductance = [&](int a, int b, double g, double i) {
            F(a, i);
            F(b, -i);
            J(a, a, g);
            J(b, b, g);
            J(a, b, -g);
            J(b, a, -g);
        };

        const double g_node = options_.settings.gmin + ctx.extra_gmin;
        for (int r = 0; r < num_node_rows_; ++r) {
            f[r] += g_node * x[r];
            jac(r, r) += g_node;
        }
        for (const auto& r : resistors_) conductance(r.a, r.b, r.g, r.g * (at(x, r.a) - at(x, r.b)));
        for (const auto& p : ports_) {
            const double g = 1.0 / p.z0;
            conductance(p.p, p.m, g, g * (at(x, p.p) - at(x, p.m)));
        }
        if (options_.drive) {
            const auto& p = ports_[options_.drive->port - 1];
            const double is = ctx.source_scale * options_.drive->value(ctx.time) / p.z0;
            F(p.p, -is);
            F(p.m, is);
        }

        if (ctx.transient) {
            const auto& hist = *ctx.history;
            const bool trap = ctx.method == IntegrationMethod::trapezoidal;
            for (std::size_t k = 0; k < capacitors_.size(); ++k) {
                const auto& c = capacitors_[k];
                const double geq = (trap ? 2.0 : 1.0) * c.c / ctx.h;
                const double v = at(x, c.a) - at(x, c.b);
                double i = geq * (v - hist.cap_v[k]);
                if (trap) i -= hist.cap_i[k];
                conductance(c.a, c.b, geq, i);
            }
            for (std::size_t k = 0; k < inductors_.size(); ++k) {
                const auto& l = inductors_[k];
                const double req = (trap ? 2.0 : 1.0) * l.l / ctx.h;
                const double i = x[l.row];
                F(l.a, i);
                F(l.b, -i);
                J(l.a, l.row, 1.0);
                J(l.b, l.row, -1.0);
                double fr = at(x, l.a) - at(x, l.b) - req * (i - hist.ind_i[k]);
                if (trap) fr += hist.ind_v[k];
                f[l.row] += fr;
                J(l.row, l.a, 1.0);
                J(l.row, l.b, -1.0);
                J(l.row, l.row, -req);
            }
        } else {
            for (const auto& l : inductors_) {
                const double i = x[l.row];
                F(l.a, i);
                F(l.b, -i);
                J(l.a, l.row, 1.0);
                J(l.b, l.row, -1.0);
                f[l.row] += at(x, l.a) - at(x, l.b);
                J(l.row, l.a, 1.0);
                J(l.row, l.b, -1.0);
            }
        }

        for (const auto& s : vsources_) {
            const double i = x[s.row];
            F(s.a, i);
            F(s.b, -i);
            J(s.a, s.row, 1.0);
            J(s.b, s.row, -1.0);
            f[s.row] += at(x, s.a) - at(x, s.b) - ctx.source_scale * s.spec->value(ctx.time);
            J(s.row, s.a, 1.0);
            J(s.row, s.b, -1.0);
        }
        for (const auto& s : isources_) {
            const double i = ctx.source_scale * s.spec->value(ctx.time);
            F(s.a, i);
            F(s.b, -i);
        }
        for (const auto& m : mosfets_) {
            const double vd = at(x, m.d), vg = at(x, m.g), vs = at(x, m.s);
            const auto ev = mosfet_ids(m.card, m.geom, vg - vs, vd - vs);
            F(m.d, ev.ids);
            F(m.s, -ev.ids);
            J(m.d, m.d, ev.gds);
            J(m.d, m.g, ev.gm);
            J(m.d, m.s, -ev.gm - ev.gds);
            J(m.s, m.d, -ev.gds);
            J(m.s, m.g, -ev.gm);
            J(m.s, m.s, ev.gm + ev.gds);
        }
        for (const auto& s : switches_) {
            const auto sw = switch_conductance(s.model, at(x, s.cp) - at(x, s.cm));
            const double v = at(x, s.a) - at(x, s.b);
            conductance(s.a, s.b, sw.g, sw.g * v);
            J(s.a, s.cp, sw.dg * v);
            J(s.a, s.cm, -sw.dg * v);
            J(s.b, s.cp, -sw.dg * v);
            J(s.b, s.cm, sw.dg * v);
        }
        for (const auto& p : polys_) {
            const double i = x[p.row];
            F(p.op, i);
            F(p.om, -i);
            J(p.op, p.row, 1.0);
            J(p.om, p.row, -1.0);
            const double u = at(x, p.ip) - at(x, p.im);
            f[p.row] += at(x, p.op) - at(x, p.om) - p.coeffs.value(u);
            J(p.row, p.op, 1.0);
            J(p.row, p.om, -1.0);
            J(p.row, p.ip, -p.coeffs.slope(u));
            J(p.row, p.im, p.coeffs.slope(u));
        }
    }

    /// Linear complex system at angular frequency w, linearized about x_op.
    /// With `sources` false every independent AC excitation is zeroed.
    [[nodiscard]] MnaSystem<cplx> assemble_ac(double w, std::span<const double> x_op, bool sources = true) const {
        MnaSystem<cplx> sys(dimension_);
        auto& A = sys.matrix;
        auto J = [&](int r, int c, cplx v) {
            if (r >= 0 && c >= 0) A(r, c) += v;
        };
        auto admittance = [&](int a, int b, cplx y) {
            J(a, a, y);
            J(b, b, y);
            J(a, b, -y);
            J(b, a, -y);
        };
        const cplx jw(0.0, w);
        for (int r = 0; r < num_node_rows_; ++r) A(r, r) += options_.settings.gmin;
        for (const auto& r : resistors_) admittance(r.a, r.b, r.g);
        for (const auto& p : ports_) admittance(p.p, p.m, 1.0 / p.z0);
        for (const auto& c : capacitors_) admittance(c.a, c.b, jw * c.c);
        for (const auto& l : inductors_) {
            J(l.a, l.row, 1.0);
            J(l.b, l.row, -1.0);
            J(l.row, l.a, 1.0);
            J(l.row, l.b, -1.0);
            J(l.row, l.row, -jw * l.l);
        }
        for (const auto& s : vsources_) {
            J(s.a, s.row, 1.0);
            J(s.b, s.row, -1.0);
            J(s.row, s.a, 1.0);
            J(s.row, s.b, -1.0);
            if (sources) sys.rhs[s.row] += std::polar(s.spec->ac_mag, s.spec->ac_phase_deg * pi / 180.0);
        }
        for (const auto& s : isources_) {
            if (!sources) continue;
            const cplx i = std::polar(s.spec->ac_mag, s.spec->ac_phase_deg * pi / 180.0);
            if (s.a >= 0) sys.rhs[s.a] -= i;
            if (s.b >= 0) sys.rhs[s.b] += i;
        }
        for (const auto& m : mosfets_) {
            const double vd = at(x_op, m.d), vg = at(x_op, m.g), vs = at(x_op, m.s);
            const auto ev = mosfet_ids(m.card, m.geom, vg - vs, vd - vs);
            J(m.d, m.d, ev.gds);
            J(m.d, m.g, ev.gm);
            J(m.d, m.s, -ev.gm - ev.gds);
            J(m.s, m.d, -ev.gds);
            J(m.s, m.g, -ev.gm);
            J(m.s, m.s, ev.gm + ev.gds);
        }
        for (const auto& s : switches_) {
            const auto sw = switch_conductance(s.model, at(x_op, s.cp) - at(x_op, s.cm));
            const double v = at(x_op, s.a) - at(x_op, s.b);
            admittance(s.a, s.b, sw.g);
            J(s.a, s.cp, sw.dg * v);
            J(s.a, s.cm, -sw.dg * v);
            J(s.b, s.cp, -sw.dg * v);
            J(s.b, s.cm, sw.dg * v);
        }
        for (const auto& p : polys_) {
            const double slope = p.coeffs.slope(at(x_op, p.ip) - at(x_op, p.im));
            J(p.op, p.row, 1.0);
            J(p.om, p.row, -1.0);
            J(p.row, p.op, 1.0);
            J(p.row, p.om, -1.0);
            J(p.row, p.ip, -slope);
            J(p.row, p.im, slope);
        }
        return sys;
    }

    /// Largest |KCL residual| over node rows.
    [[nodiscard]] double kcl_residual(std::span<const double> x, const StampContext& ctx) const {
        DenseMatrix<double> jac;
        std::vector<double> f;
        assemble(x, ctx, jac, f);
        return max_abs(std::span<const double>(f.data(), static_cast<std::size_t>(num_node_rows_)));
    }

    [[nodiscard]] ReactiveHistory initial_history(std::span<const double> x, bool use_ic) const {
        ReactiveHistory h;
        for (const auto& c : capacitors_) {
            h.cap_v.push_back(use_ic ? c.ic : at(x, c.a) - at(x, c.b));
            h.cap_i.push_back(0.0);
        }
        for (const auto& l : inductors_) {
            h.ind_v.push_back(0.0);
            h.ind_i.push_back(use_ic ? l.ic : x[l.row]);
        }
        return h;
    }

    /// Advance integrator history after an accepted step.
    void update_history(std::span<const double> x, const StampContext& ctx, ReactiveHistory& h) const {
        const bool trap = ctx.method == IntegrationMethod::trapezoidal;
        for (std::size_t k = 0; k < capacitors_.size(); ++k) {
            const auto& c = capacitors_[k];
            const double v = at(x, c.a) - at(x, c.b);
            const double geq = (trap ? 2.0 : 1.0) * c.c / ctx.h;
            double i = geq * (v - h.cap_v[k]);
            if (trap) i -= h.cap_i[k];
            h.cap_v[k] = v;
            h.cap_i[k] = i;
        }
        for (std::size_t k = 0; k < inductors_.size(); ++k) {
            const auto& l = inductors_[k];
            h.ind_v[k] = at(x, l.a) - at(x, l.b);
            h.ind_i[k] = x[l.row];
        }
    }

private:
    const Circuit* circuit_;
    AnalysisOptions options_;
    int num_node_rows_ = 0;
    int dimension_ = 0;
    std::vector<std::string> names_;
    std::vector<Conductance> resistors_;
    std::vector<Capacitor> capacitors_;
    std::vector<Inductor> inductors_;
    std::vector<Source> vsources_;
    std::vector<Source> isources_;
    std::vector<Mosfet> mosfets_;
    std::vector<Switch> switches_;
    std::vector<Poly> polys_;
    std::vector<Port> ports_;
};

// ---------------------------------------------------------------------------
// Newton

struct NewtonResult {
    bool converged = false;
    int iterations = 0;
    double residual = std::numeric_limits<double>::infinity();
    int worst_row = -1;
    std::vector<double> x;
};

/// Damped Newton: the update is halved (up to max_halvings times) while the
/// residual norm grows. Converged when |F| < abstol and |dx| < vntol.
inline NewtonResult newton_solve(const MnaModel& model, const StampContext& ctx, std::vector<double> x,
                                 int max_iterations) {
    const auto& s = model.options().settings;
    DenseMatrix<double> jac, jac_trial;
    std::vector<double> f, f_trial, trial(x.size());
    model.assemble(x, ctx, jac, f);
    double norm = max_abs<double>(f);
    NewtonResult r;
    for (int it = 1; it <= max_iterations; ++it) {
        std::vector<double> rhs(f.size());
        for (std::size_t i = 0; i < f.size(); ++i) rhs[i] = -f[i];
        std::vector<double> dx = LuFactorization<double>(jac).solve(rhs);
        double trial_norm = 0.0;
        const std::vector<double> full = dx;
        for (int halvings = 0;; ++halvings) {
            for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] + dx[i];
            model.assemble(trial, ctx, jac_trial, f_trial);
            trial_norm = max_abs<double>(f_trial);
            if (!(trial_norm > norm)) break;
            if (halvings >= s.max_halvings) {
                // damping never helped: the residual is not a good merit
                // function here (steep switch ramps), so take the plain step
                dx = full;
                for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] + dx[i];
                model.assemble(trial, ctx, jac_trial, f_trial);
                trial_norm = max_abs<double>(f_trial);
                break;
            }
            for (auto& d : dx) d *= 0.5;
        }
        std::swap(x, trial);
        std::swap(jac, jac_trial);
        std::swap(f, f_trial);
        norm = trial_norm;
        r.iterations = it;
        if (!std::isfinite(norm)) break;
        if (norm < s.abstol && max_abs<double>(dx) < s.vntol) {
            r.converged = true;
            break;
        }
    }
    r.residual = norm;
    double worst = -1.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (std::abs(f[i]) > worst) {
            worst = std::abs(f[i]);
            r.worst_row = static_cast<int>(i);
        }
    r.x = std::move(x);
    return r;
}

// ---------------------------------------------------------------------------
// DC operating point

struct OperatingPoint {
    std::vector<std::string> names;
    std::vector<double> x;
    std::map<std::string, MosRegion> regions;
    double residual = 0.0;
    std::string strategy; // "newton", "gmin", "source"

    [[nodiscard]] double value(const std::string& signal) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == signal) return x[i];
        throw ArgumentError("unknown signal '" + signal + "'");
    }
    [[nodiscard]] double voltage(const std::string& node) const {
        return Circuit::is_ground_name(node) ? 0.0 : value("v(" + node + ")");
    }
    [[nodiscard]] double current(const std::string& element) const { return value("i(" + element + ")"); }
};

/// Rejects circuits that cannot have a unique solution: nodes with a single
/// connection (a lone source, an unterminated branch).
inline void check_topology(const Circuit& c) {
    const auto counts = node_connection_counts(c);
    for (int n = 1; n < c.num_nodes(); ++n)
        if (counts[n] < 2)
            throw TopologyError("node '" + c.node_names[n] + "' has a single connection; no closed path");
    if (c.elements.empty() && c.ports.empty()) throw TopologyError("circuit has no elements");
}

namespace detail {

inline std::map<std::string, MosRegion> regions_at(const MnaModel& model, std::span<const double> x) {
    std::map<std::string, MosRegion> out;
    for (const auto& m : model.mosfets()) {
        const double vd = MnaModel::at(x, m.d), vg = MnaModel::at(x, m.g), vs = MnaModel::at(x, m.s);
        out[m.name] = mosfet_ids(m.card, m.geom, vg - vs, vd - vs).region;
    }
    return out;
}

template <class Fn>
decltype(auto) topology_guard(Fn&& fn) {
    try {
        return fn();
    } catch (const SingularMatrixError& e) {
        throw TopologyError(std::string("structurally singular circuit (") + e.what() + ")");
    }
}

} // namespace detail

inline OperatingPoint dc_operating_point(const Circuit& c, const AnalysisOptions& options = {}) {
    check_topology(c);
    MnaModel model(c, options);
    const auto& s = options.settings;
    const int n = model.dimension();

    auto finish = [&](const NewtonResult& r, const char* strategy) {
        OperatingPoint op;
        op.names = model.names();
        op.x = r.x;
        op.residual = r.residual;
        op.strategy = strategy;
        op.regions = detail::regions_at(model, op.x);
        return op;
    };

    return detail::topology_guard([&]() -> OperatingPoint {
        StampContext ctx;
        NewtonResult direct = newton_solve(model, ctx, std::vector<double>(n, 0.0), s.max_newton);
        if (direct.converged) return finish(direct, "newton");

        // Gmin stepping: 1e-3 S down to 1e-12 S in decades, then the bare circuit
        bool ok = true;
        std::vector<double> x(n, 0.0);
        for (int decade = 3; decade <= 12 && ok; ++decade) {
            ctx.extra_gmin = std::pow(10.0, -decade);
            auto r = newton_solve(model, ctx, x, s.max_newton);
            ok = r.converged;
            x = r.x;
        }
        if (ok) {
            ctx.extra_gmin = 0.0;
            auto r = newton_solve(model, ctx, x, s.max_newton);
            if (r.converged) return finish(r, "gmin");
        }

        // source stepping: 0 -> 100 % in 10 % steps
        ctx.extra_gmin = 0.0;
        x.assign(n, 0.0);
        NewtonResult last;
        for (int step = 0; step <= 10; ++step) {
            ctx.source_scale = step / 10.0;
            last = newton_solve(model, ctx, x, s.max_newton);
            if (!last.converged) break;
            x = last.x;
        }
        if (last.converged) return finish(last, "source");

        const std::string worst = last.worst_row >= 0 ? model.names()[last.worst_row] : std::string("?");
        throw ConvergenceError("DC operating point did not converge after gmin and source stepping; worst "
                               "residual " +
                                   std::to_string(last.residual) + " at " + worst,
                               worst, 0.0);
    });
}

// ---------------------------------------------------------------------------
// Transient

/// Uniformly sampled signals. samples[k][i] is signal k at time[i].
struct WaveformSet {
    std::vector<double> time;
    std::vector<std::string> names;
    std::vector<std::vector<double>> samples;

    [[nodiscard]] int index(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return static_cast<int>(i);
        throw ArgumentError("unknown signal '" + name + "'");
    }
    [[nodiscard]] const std::vector<double>& signal(const std::string& name) const {
        return samples[index(name)];
    }
    /// Node voltage by node name; ground yields zeros.
    [[nodiscard]] std::vector<double> voltage(const std::string& node) const {
        if (Circuit::is_ground_name(node)) return std::vector<double>(time.size(), 0.0);
        return signal("v(" + node + ")");
    }
};

/// Fixed-step integrator over a compiled circuit. The first step after a
/// "uic" start uses backward Euler (the trapezoidal rule needs consistent
/// reactive currents/voltages, which a user-supplied state does not give);
/// every other step is trapezoidal.
class TransientStepper {
public:
    TransientStepper(const MnaModel& model, double step, std::vector<double> x0, bool uic)
        : model_(&model), h_(step), x_(std::move(x0)), history_(model.initial_history(x_, uic)),
          first_be_(uic) {
        if (!(step > 0.0)) throw ArgumentError("time step must be > 0");
    }

    void advance() {
        StampContext ctx;
        ctx.transient = true;
        ctx.h = h_;
        ctx.time = static_cast<double>(steps_ + 1) * h_;
        ctx.method = first_be_ && steps_ == 0 ? IntegrationMethod::backward_euler : IntegrationMethod::trapezoidal;
        ctx.history = &history_;
        NewtonResult r = detail::topology_guard(
            [&] { return newton_solve(*model_, ctx, x_, model_->options().settings.max_newton_tran); });
        if (!r.converged) {
            const std::string worst = r.worst_row >= 0 ? model_->names()[r.worst_row] : std::string("?");
            throw ConvergenceError("transient Newton failed at t=" + format_number(ctx.time) + " (worst " + worst + ")",
                                   worst, ctx.time);
        }
        x_ = std::move(r.x);
        model_->update_history(x_, ctx, history_);
        ++steps_;
    }

    [[nodiscard]] double time() const { return static_cast<double>(steps_) * h_; }
    [[nodiscard]] double step() const { return h_; }
    [[nodiscard]] long steps_taken() const { return steps_; }
    [[nodiscard]] const std::vector<double>& state() const { return x_; }
    [[nodiscard]] const MnaModel& model() const { return *model_; }
    [[nodiscard]] const ReactiveHistory& history() const { return history_; }

private:
    const MnaModel* model_;
    double h_;
    std::vector<double> x_;
    ReactiveHistory history_;
    bool first_be_;
    long steps_ = 0;
};

/// Initial state for a transient run: the DC operating point with sources at
/// their t=0 values, or (uic) the zero vector with inductor initial currents.
/// With uic, capacitor ic= values live in the integrator history; a grounded
/// capacitor also seeds its node so the t=0 sample shows the initial voltage.
inline std::vector<double> transient_initial_state(const Circuit& c, const MnaModel& model, bool uic,
                                                   const AnalysisOptions& options) {
    if (!uic) return dc_operating_point(c, options).x;
    std::vector<double> x(model.dimension(), 0.0);
    for (const auto& l : model.inductors()) x[l.row] = l.ic;
    for (const auto& cap : model.capacitors()) {
        if (cap.ic == 0.0) continue;
        if (cap.b < 0 && cap.a >= 0) x[cap.a] = cap.ic;
        else if (cap.a < 0 && cap.b >= 0) x[cap.b] = -cap.ic;
    }
    return x;
}

/// Fixed-step trapezoidal transient from t = 0 to `stop` (grid rounded up to
/// a whole number of steps).
inline WaveformSet transient(const Circuit& c, double step, double stop, bool uic = false,
                             const AnalysisOptions& options = {}) {
    if (!(step > 0.0) || !(stop > 0.0) || !std::isfinite(stop)) throw ArgumentError("transient needs step > 0 and stop > 0");
    if (step > stop) throw ArgumentError("transient step exceeds stop time");
    check_topology(c);
    MnaModel model(c, options);
    const long count = static_cast<long>(std::ceil(stop / step - 1e-9));
    TransientStepper stepper(model, step, transient_initial_state(c, model, uic, options), uic);

    WaveformSet w;
    w.names = model.names();
    w.samples.assign(w.names.size(), {});
    for (auto& s : w.samples) s.reserve(count + 1);
    w.time.reserve(count + 1);
    auto record = [&] {
        w.time.push_back(stepper.time());
        const auto& x = stepper.state();
        for (std::size_t k = 0; k < x.size(); ++k) w.samples[k].push_back(x[k]);
    };
    record();
    for (long i = 0; i < count; ++i) {
        stepper.advance();
        record();
    }
    return w;
}

// ---------------------------------------------------------------------------
// AC

struct AcResult {
    std::vector<double> freqs;
    std::vector<std::string> names;
    std::vector<std::vector<cplx>> values; // [frequency][unknown]

    [[nodiscard]] int index(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return static_cast<int>(i);
        throw ArgumentError("unknown signal '" + name + "'");
    }
    [[nodiscard]] cplx voltage(std::size_t fi, const std::string& node) const {
        if (Circuit::is_ground_name(node)) return {};
        return values[fi][index("v(" + node + ")")];
    }
};

/// Small-signal solution about `op` at each frequency (one complex LU per point).
inline AcResult ac_solve(const Circuit& c, const OperatingPoint& op, std::span<const double> freqs,
                         const AnalysisOptions& options = {}) {
    MnaModel model(c, options);
    if (static_cast<int>(op.x.size()) != model.dimension())
        throw ArgumentError("operating point does not match circuit");
    AcResult out;
    out.names = model.names();
    for (double f : freqs) {
        if (!(f > 0.0)) throw ArgumentError("AC frequencies must be > 0");
        auto sys = model.assemble_ac(2.0 * pi * f, op.x);
        try {
            out.values.push_back(solve_system(sys));
        } catch (const SingularMatrixError& e) {
            throw TopologyError("singular AC matrix at f=" + format_number(f) + " Hz (" + e.what() + ")");
        }
        out.freqs.push_back(f);
    }
    return out;
}

/// Log-spaced sweep with `per_decade` points per decade, inclusive of both ends.
inline std::vector<double> decade_sweep(double fstart, double fstop, int per_decade) {
    if (!(fstart > 0.0) || !(fstart < fstop) || per_decade < 1)
        throw ArgumentError("sweep requires 0 < fstart < fstop and points >= 1");
    const double decades = std::log10(fstop / fstart);
    const int n = static_cast<int>(std::ceil(decades * per_decade - 1e-9));
    std::vector<double> f;
    for (int i = 0; i <= n; ++i) f.push_back(i == n ? fstop : fstart * std::pow(10.0, double(i) / per_decade));
    return f;
}

} // namespace rfsim
