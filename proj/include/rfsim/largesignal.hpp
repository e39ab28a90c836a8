#pragma once

// Large-signal characterization: periodic steady state (settled fixed-step
// transient plus an integer-period DFT), output power, supply power and
// efficiency, zero-voltage-switching residual and two-tone IP3.
//
// Phasor convention: x(t) = X0 + sum_k Re(X_k exp(j k w t)), so a cosine of
// amplitude A has phasor A and a sine has -jA, the same convention as ac_solve.

#include "rfsim/engine.hpp"
#include "rfsim/error.hpp"
#include "rfsim/netlist.hpp"
#include "rfsim/units.hpp"

#include <json.hpp>

#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rfsim {

struct PssOptions {
    int samples_per_period = 256;
    int max_periods = 200;
    double tol = 1e-3; // V, period-to-period change of any node voltage
    int harmonics = 10;
    bool uic = false; // start from element ic= values instead of the DC operating point
    std::optional<PortDrive> drive;
    EngineSettings settings;
};

struct SteadyStateResult {
    double fundamental = 0.0;
    int samples_per_period = 0;
    int periods = 0;        // simulated periods including the final one
    double residual = 0.0;  // last period-to-period max delta, V
    std::vector<double> residual_trace;
    std::vector<std::string> names;
    std::vector<std::vector<cplx>> phasors; // [signal][0..harmonics]
    WaveformSet final_period;               // N+1 samples, both period ends

    [[nodiscard]] int harmonics() const { return phasors.empty() ? 0 : static_cast<int>(phasors.front().size()) - 1; }

    [[nodiscard]] int index(const std::string& name) const { return final_period.index(name); }

    /// Harmonic k of a signal; harmonics beyond the stored set are computed
    /// from the final-period samples on demand.
    [[nodiscard]] cplx phasor(const std::string& name, int k) const {
        const int i = index(name);
        if (k >= 0 && k <= harmonics()) return phasors[i][k];
        return dft(final_period.samples[i], k);
    }

    [[nodiscard]] cplx voltage_phasor(const std::string& node, int k = 1) const {
        if (Circuit::is_ground_name(node)) return {};
        return phasor("v(" + node + ")", k);
    }
    [[nodiscard]] cplx voltage_phasor(const std::string& plus, const std::string& minus, int k) const {
        return voltage_phasor(plus, k) - voltage_phasor(minus, k);
    }

    /// Single-bin DFT over the first N samples (integer-period window).
    [[nodiscard]] static cplx dft(const std::vector<double>& x, int k) {
        if (k < 0) throw ArgumentError("harmonic index must be >= 0");
        const std::size_t n = x.size() - 1;
        cplx acc{};
        for (std::size_t i = 0; i < n; ++i) {
            // reduce k*i modulo n first so the angle stays accurate for high k
            const std::size_t m = (static_cast<std::size_t>(k) * i) % n;
            const double ph = -2.0 * pi * static_cast<double>(m) / static_cast<double>(n);
            acc += x[i] * cplx(std::cos(ph), std::sin(ph));
        }
        return acc * ((k == 0 ? 1.0 : 2.0) / static_cast<double>(n));
    }
};

namespace detail {

inline bool is_integer_multiple(double ratio) {
    const double r = std::round(ratio);
    return r >= 1.0 && std::abs(ratio - r) <= 1e-6 * r;
}

inline void check_periodic_sources(const Circuit& c, double f0, const std::optional<PortDrive>& drive) {
    for (const auto& e : c.elements) {
        if (e.kind != ElementKind::vsource && e.kind != ElementKind::isource) continue;
        const auto& s = e.source;
        if (s.sine && s.sine->freq != 0.0 && !is_integer_multiple(s.sine->freq / f0))
            throw ArgumentError(e.name + ": SIN frequency is not a harmonic of the PSS fundamental");
        if (s.pulse && s.pulse->period > 0.0 && !is_integer_multiple(1.0 / (f0 * s.pulse->period)))
            throw ArgumentError(e.name + ": PULSE period does not divide the PSS period");
    }
    if (drive)
        for (const auto& t : drive->tones)
            if (t.freq != 0.0 && !is_integer_multiple(t.freq / f0))
                throw ArgumentError("drive tone is not a harmonic of the PSS fundamental");
}

} // namespace detail

/// Periodic steady state at f0. Fixed step 1/(f0 N); after every period the
/// node voltages are compared sample by sample with the previous period and
/// the run stops once the largest change is below `tol`. Harmonics come from
/// a DFT over the final period.
inline SteadyStateResult run_pss(const Circuit& c, double f0, const PssOptions& opt = {}) {
    if (!(f0 > 0.0) || !std::isfinite(f0)) throw ArgumentError("PSS fundamental must be > 0");
    if (opt.samples_per_period < 256) throw ArgumentError("PSS needs at least 256 samples per period");
    if (opt.max_periods < 2) throw ArgumentError("PSS needs max_periods >= 2");
    if (opt.harmonics < 5) throw ArgumentError("PSS keeps at least 5 harmonics");
    if (2 * opt.harmonics >= opt.samples_per_period) throw ArgumentError("too many harmonics for the sample count");
    if (!(opt.tol > 0.0)) throw ArgumentError("PSS tolerance must be > 0");
    detail::check_periodic_sources(c, f0, opt.drive);

    AnalysisOptions aopt;
    aopt.settings = opt.settings;
    aopt.drive = opt.drive;
    check_topology(c);
    MnaModel model(c, aopt);
    const int n = opt.samples_per_period;
    const int dim = model.dimension();
    const int node_rows = model.num_node_rows();
    const double h = 1.0 / (f0 * n);
    TransientStepper stepper(model, h, transient_initial_state(c, model, opt.uic, aopt), opt.uic);

    std::vector<double> cur(std::size_t(n) * dim), prev(std::size_t(n) * dim);
    SteadyStateResult out;
    out.fundamental = f0;
    out.samples_per_period = n;
    bool settled = false;
    for (int p = 0; p < opt.max_periods; ++p) {
        for (int k = 0; k < n; ++k) {
            const auto& x = stepper.state();
            std::copy(x.begin(), x.end(), cur.begin() + std::size_t(k) * dim);
            stepper.advance();
        }
        out.periods = p + 1;
        if (p > 0) {
            double worst = 0.0;
            for (int k = 0; k < n; ++k)
                for (int r = 0; r < node_rows; ++r) {
                    const std::size_t i = std::size_t(k) * dim + r;
                    worst = std::max(worst, std::abs(cur[i] - prev[i]));
                }
            out.residual_trace.push_back(worst);
            out.residual = worst;
            if (worst < opt.tol) settled = true;
        }
        std::swap(cur, prev);
        if (settled) break;
    }
    if (!settled)
        throw SettlingError("PSS did not settle within " + std::to_string(opt.max_periods) +
                                " periods (last residual " + format_number(out.residual) + " V)",
                            out.residual_trace);

    // prev now holds the final period; the stepper sits on its closing sample
    auto& w = out.final_period;
    w.names = model.names();
    out.names = w.names;
    w.samples.assign(dim, std::vector<double>(std::size_t(n) + 1));
    const double t0 = static_cast<double>(out.periods - 1) / f0;
    for (int k = 0; k <= n; ++k) {
        w.time.push_back(t0 + k * h);
        for (int r = 0; r < dim; ++r)
            w.samples[r][k] = k < n ? prev[std::size_t(k) * dim + r] : stepper.state()[r];
    }
    out.phasors.assign(dim, {});
    for (int r = 0; r < dim; ++r)
        for (int k = 0; k <= opt.harmonics; ++k) out.phasors[r].push_back(SteadyStateResult::dft(w.samples[r], k));
    return out;
}

// ---------------------------------------------------------------------------
// Power and efficiency

/// Average power of harmonic k across a resistor, in dBm (-inf for zero).
inline double output_power_dbm(const SteadyStateResult& ss, const std::string& plus, const std::string& minus,
                               double r_load, int harmonic = 1) {
    if (!(r_load > 0.0)) throw ArgumentError("load resistance must be > 0");
    const cplx v = ss.voltage_phasor(plus, minus, harmonic);
    return watts_to_dbm(std::norm(v) / (2.0 * r_load));
}

/// Names of the DC supplies: voltage sources without a waveform and with a
/// nonzero DC value.
inline std::vector<std::string> dc_supplies(const Circuit& c) {
    std::vector<std::string> out;
    for (const auto& e : c.elements)
        if (e.kind == ElementKind::vsource && !e.source.has_waveform() && e.source.dc != 0.0) out.push_back(e.name);
    return out;
}

struct EfficiencyResult {
    double pdc_w = 0.0;
    double drain_eff = 0.0;
    double pae = std::numeric_limits<double>::quiet_NaN(); // needs the input drive power
};

/// pdc = sum of V * (average delivered current) over the supplies.
inline EfficiencyResult efficiency(const SteadyStateResult& ss, const Circuit& c, const std::vector<std::string>& supplies,
                                   double pout_w, std::optional<double> pin_w = std::nullopt) {
    EfficiencyResult r;
    for (const auto& name : supplies) {
        const auto& e = c.element(name);
        if (e.kind != ElementKind::vsource) throw ArgumentError(name + " is not a voltage source");
        // branch current flows + -> - through the source, so delivering is negative
        r.pdc_w += -e.source.dc * ss.phasor("i(" + name + ")", 0).real();
    }
    if (!(r.pdc_w > 0.0))
        throw MeasurementError("supplies deliver no power (pdc = " + format_number(r.pdc_w) +
                               " W); a source is absorbing power");
    r.drain_eff = pout_w / r.pdc_w;
    if (pin_w) r.pae = (pout_w - *pin_w) / r.pdc_w;
    return r;
}

struct ZvsResult {
    double residual_v = 0.0;
    int events = 0;
};

/// Switch voltage at turn-on, averaged over the turn-on events of the final
/// period. Turn-on is the upward crossing of the control voltage through the
/// onset of conduction (switch: vt - eps/2 on ctrl+ - ctrl-; mosfet: vth on
/// vgs, sign-flipped for pmos), located by linear interpolation.
inline ZvsResult zvs_residual(const SteadyStateResult& ss, const Circuit& c, const std::string& element) {
    const auto& e = c.element(element);
    const auto& w = ss.final_period;
    auto v = [&](int node) { return w.voltage(c.node_names[node]); };
    std::vector<double> ctrl, sw;
    double threshold = 0.0;
    if (e.kind == ElementKind::ideal_switch) {
        const auto a = v(e.nodes[0]), b = v(e.nodes[1]), cp = v(e.nodes[2]), cm = v(e.nodes[3]);
        for (std::size_t i = 0; i < a.size(); ++i) {
            ctrl.push_back(cp[i] - cm[i]);
            sw.push_back(a[i] - b[i]);
        }
        // conduction starts at the low edge of the transition window
        const auto m = switch_model(e);
        threshold = m.vthresh - 0.5 * m.width;
    } else if (e.kind == ElementKind::mosfet) {
        const auto d = v(e.nodes[0]), g = v(e.nodes[1]), s = v(e.nodes[2]);
        const auto& card = c.models.at(e.model);
        const double sign = card.polarity == Polarity::nmos ? 1.0 : -1.0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            ctrl.push_back(sign * (g[i] - s[i]));
            sw.push_back(d[i] - s[i]);
        }
        threshold = card.vth;
    } else {
        throw ArgumentError(element + " is not a switching device");
    }
    ZvsResult r;
    double acc = 0.0;
    for (std::size_t i = 1; i < ctrl.size(); ++i) {
        if (ctrl[i - 1] < threshold && ctrl[i] >= threshold) {
            const double frac = (threshold - ctrl[i - 1]) / (ctrl[i] - ctrl[i - 1]);
            acc += std::abs(sw[i - 1] + frac * (sw[i] - sw[i - 1]));
            ++r.events;
        }
    }
    if (r.events == 0) throw MeasurementError(element + " never turns on in steady state");
    r.residual_v = acc / r.events;
    return r;
}

/// Figures reported for one large-signal run.
struct PowerReport {
    double pout_dbm = -std::numeric_limits<double>::infinity();
    double pdc_w = 0.0;
    double drain_eff = 0.0;
    double pae = std::numeric_limits<double>::quiet_NaN();
    double zvs_residual_v = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {
// JSON has no inf/nan; such values are written as strings so data files stay
// readable by strict parsers.
inline nlohmann::ordered_json json_number(double v) {
    if (std::isfinite(v)) return v;
    return format_number(v);
}
} // namespace detail

inline nlohmann::ordered_json to_json(const PowerReport& r) {
    nlohmann::ordered_json j;
    j["pout_dbm"] = detail::json_number(r.pout_dbm);
    j["pdc_w"] = detail::json_number(r.pdc_w);
    j["drain_eff"] = detail::json_number(r.drain_eff);
    j["pae"] = detail::json_number(r.pae);
    j["zvs_residual_v"] = detail::json_number(r.zvs_residual_v);
    return j;
}

// ---------------------------------------------------------------------------
// Two-tone intermodulation

struct TwoToneOptions {
    int port_in = 1;
    int port_out = 2;
    int samples_per_cycle = 32;         // per cycle of the higher tone
    long sample_budget = 1L << 20;      // max samples per beat period
    int max_periods = 200;
    double tol = 1e-6;                  // V; IM3 products sit far below the default PSS tolerance
    double slope_tolerance = 0.3;       // dB/dB around the ideal 1 and 3
    double floor_dbm = -160.0;
    EngineSettings settings;
};

struct Ip3Level {
    double pin_dbm = 0.0;    // available power per tone
    double fund_dbm = 0.0;   // output at f1
    double im3_dbm = 0.0;    // output at 2 f1 - f2
    bool valid = false;
};

struct Ip3Result {
    double f1 = 0.0, f2 = 0.0, beat = 0.0;
    std::vector<Ip3Level> levels;
    bool immeasurable = false; // IM3 under the numeric floor at every level
    double iip3_dbm = std::numeric_limits<double>::quiet_NaN();
    double oip3_dbm = std::numeric_limits<double>::quiet_NaN();
    double single_point_iip3_dbm = std::numeric_limits<double>::quiet_NaN();
    double fund_slope = std::numeric_limits<double>::quiet_NaN();
    double im3_slope = std::numeric_limits<double>::quiet_NaN();
};

inline nlohmann::ordered_json to_json(const Ip3Result& r) {
    using detail::json_number;
    nlohmann::ordered_json j;
    j["f1_hz"] = json_number(r.f1);
    j["f2_hz"] = json_number(r.f2);
    j["immeasurably_linear"] = r.immeasurable;
    j["iip3_dbm"] = json_number(r.iip3_dbm);
    j["oip3_dbm"] = json_number(r.oip3_dbm);
    j["single_point_iip3_dbm"] = json_number(r.single_point_iip3_dbm);
    j["fund_slope"] = json_number(r.fund_slope);
    j["im3_slope"] = json_number(r.im3_slope);
    auto& lv = j["levels"] = nlohmann::ordered_json::array();
    for (const auto& l : r.levels)
        lv.push_back({{"pin_dbm", json_number(l.pin_dbm)},
                      {"fund_dbm", json_number(l.fund_dbm)},
                      {"im3_dbm", json_number(l.im3_dbm)},
                      {"valid", l.valid}});
    return j;
}

namespace detail {

inline long long integer_hz(double f) {
    const double r = std::round(f);
    if (!(r > 0.0) || std::abs(f - r) > 1e-6) throw ArgumentError("two-tone frequencies must be whole, positive Hz");
    return static_cast<long long>(r);
}

// least-squares slope of y over x
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

} // namespace detail

/// Two equal tones of available power P each (open-circuit amplitude
/// sqrt(8 z0 P)) drive port_in; powers at f1 and 2 f1 - f2 are read across
/// port_out's z0. Lines of slope 1 and 3 are fitted through the levels whose
/// local slopes are within tolerance of ideal; their crossing gives IIP3.
inline Ip3Result two_tone_ip3(const Circuit& c, double f1, double f2, std::span<const double> levels_dbm,
                              const TwoToneOptions& opt = {}) {
    if (levels_dbm.size() < 2) throw ArgumentError("two-tone sweep needs at least two drive levels");
    for (std::size_t i = 1; i < levels_dbm.size(); ++i)
        if (!(levels_dbm[i] > levels_dbm[i - 1])) throw ArgumentError("drive levels must be strictly increasing");
    const long long h1 = detail::integer_hz(f1), h2 = detail::integer_hz(f2);
    if (h1 == h2) throw ArgumentError("two-tone frequencies must differ");
    if (2 * h1 - h2 <= 0) throw ArgumentError("2 f1 - f2 must be positive");
    const long long beat = std::gcd(h1, h2);
    const long long k1 = h1 / beat, k2 = h2 / beat, k3 = 2 * k1 - k2;
    const long long n = std::max<long long>(256, opt.samples_per_cycle * std::max(k1, k2));
    if (n > opt.sample_budget)
        throw ArgumentError("tone spacing too fine: " + std::to_string(n) + " samples per beat period exceeds budget " +
                            std::to_string(opt.sample_budget));
    const int np = static_cast<int>(c.ports.size());
    if (opt.port_in < 1 || opt.port_in > np || opt.port_out < 1 || opt.port_out > np || opt.port_in == opt.port_out)
        throw ArgumentError("two-tone needs distinct input and output ports");
    const auto& pin_port = c.ports[opt.port_in - 1];
    const auto& pout_port = c.ports[opt.port_out - 1];

    Ip3Result r;
    r.f1 = f1;
    r.f2 = f2;
    r.beat = static_cast<double>(beat);
    for (double level : levels_dbm) {
        PssOptions p;
        p.samples_per_period = static_cast<int>(n);
        p.max_periods = opt.max_periods;
        p.tol = opt.tol;
        p.settings = opt.settings;
        const double vs = std::sqrt(8.0 * pin_port.z0 * dbm_to_watts(level));
        p.drive = PortDrive{opt.port_in, {Tone{vs, f1, 0.0}, Tone{vs, f2, 0.0}}};
        const auto ss = run_pss(c, r.beat, p);
        const std::string plus = c.node_names[pout_port.plus], minus = c.node_names[pout_port.minus];
        Ip3Level l;
        l.pin_dbm = level;
        l.fund_dbm = output_power_dbm(ss, plus, minus, pout_port.z0, static_cast<int>(k1));
        l.im3_dbm = output_power_dbm(ss, plus, minus, pout_port.z0, static_cast<int>(k3));
        r.levels.push_back(l);
    }

    bool any_above_floor = false;
    for (const auto& l : r.levels) any_above_floor |= l.im3_dbm >= opt.floor_dbm;
    if (!any_above_floor) {
        r.immeasurable = true;
        r.iip3_dbm = r.oip3_dbm = std::numeric_limits<double>::infinity();
        return r;
    }

    // local slopes between neighbouring levels
    const std::size_t m = r.levels.size();
    auto seg_ok = [&](std::size_t i) { // segment i joins levels i and i+1
        const auto &a = r.levels[i], &b = r.levels[i + 1];
        if (a.im3_dbm < opt.floor_dbm || b.im3_dbm < opt.floor_dbm) return false;
        const double dx = b.pin_dbm - a.pin_dbm;
        const double s1 = (b.fund_dbm - a.fund_dbm) / dx, s3 = (b.im3_dbm - a.im3_dbm) / dx;
        return std::abs(s1 - 1.0) <= opt.slope_tolerance && std::abs(s3 - 3.0) <= opt.slope_tolerance;
    };
    for (std::size_t i = 0; i < m; ++i) {
        const bool left = i > 0 && seg_ok(i - 1);
        const bool right = i + 1 < m && seg_ok(i);
        r.levels[i].valid = left || right;
    }
    std::vector<double> x, y1, y3;
    for (const auto& l : r.levels)
        if (l.valid) {
            x.push_back(l.pin_dbm);
            y1.push_back(l.fund_dbm);
            y3.push_back(l.im3_dbm);
        }
    if (x.size() < 2) throw MeasurementError("no drive levels with fundamental/IM3 slopes near 1 and 3 dB/dB");
    r.fund_slope = detail::ls_slope(x, y1);
    r.im3_slope = detail::ls_slope(x, y3);
    double c1 = 0.0, c3 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        c1 += y1[i] - x[i];
        c3 += y3[i] - 3.0 * x[i];
    }
    c1 /= static_cast<double>(x.size());
    c3 /= static_cast<double>(x.size());
    r.iip3_dbm = (c1 - c3) / 2.0;
    r.oip3_dbm = r.iip3_dbm + c1;
    // single-point estimate at the lowest valid level
    for (const auto& l : r.levels)
        if (l.valid) {
            r.single_point_iip3_dbm = l.pin_dbm + (l.fund_dbm - l.im3_dbm) / 2.0;
            break;
        }
    return r;
}

// ---------------------------------------------------------------------------
// Class-E reference design

/// Ideal-switch class-E stage at 50 % duty: supply, RF choke, switch with
/// shunt capacitor, series L-C tuned with the excess reactance needed for
/// zero-voltage switching, resistive load.
struct ClassEDesign {
    double f0 = 2.4e9;
    double r_load = 50.0;
    double q_loaded = 10.0;
    double vdd = 1.8;
    double l_choke = 10e-6; // large enough to act as a current source
    double ron = 0.1;
    double roff = 1e6;
    double rise_fraction = 1.0 / 64.0; // control edge as a fraction of the period
    double c_shunt = 0.0;
    double c_series = 0.0;
    double l_series = 0.0;
    double p_out = 0.0; // expected output power, W
};

/// Finite loaded-Q design equations (ideal choke) for the shunt and series
/// elements and the expected output power.
inline ClassEDesign class_e_design(ClassEDesign d = {}) {
    const double w = 2.0 * pi * d.f0, r = d.r_load, q = d.q_loaded;
    d.c_shunt = (1.0 / (34.2219 * d.f0 * r)) * (0.99866 + 0.91424 / q - 1.03175 / (q * q));
    d.c_series = (1.0 / (w * r)) * (1.0 / (q - 0.104823)) * (1.00121 + 1.01468 / (q - 1.7879));
    d.l_series = q * r / w;
    d.p_out = 0.576801 * d.vdd * d.vdd / r * (1.0000086 - 0.414395 / q - 0.557501 / (q * q) + 0.205967 / (q * q * q));
    return d;
}

/// Netlist text for the design; `with_shunt` false drops the shunt
/// capacitor (hard switching). The choke and the DC-blocking capacitor carry
/// their expected steady-state values as ic= so a uic start skips most of the
/// slow choke transient.
inline std::string class_e_netlist(const ClassEDesign& d, bool with_shunt = true) {
    const double period = 1.0 / d.f0;
    const double tr = d.rise_fraction * period;
    auto n = [](double v) { return format_roundtrip(v); };
    std::string s;
    s += ".title class-E reference stage\n";
    s += "VDD vdd 0 DC " + n(d.vdd) + "\n";
    s += "LCHOKE vdd d " + n(d.l_choke) + " ic=" + n(d.p_out / d.vdd) + "\n";
    s += "VCTL g 0 PULSE(0 1 0 " + n(tr) + " " + n(tr) + " " + n(0.5 * period - tr) + " " + n(period) + ")\n";
    s += "S1 d 0 g 0 ron=" + n(d.ron) + " roff=" + n(d.roff) + " vt=0.5 eps=0.1\n";
    if (with_shunt) s += "C1 d 0 " + n(d.c_shunt) + "\n";
    s += "C2 d m " + n(d.c_series) + " ic=" + n(d.vdd) + "\n";
    s += "L2 m o " + n(d.l_series) + "\n";
    s += "RL o 0 " + n(d.r_load) + "\n";
    return s;
}

} // namespace rfsim
