#pragma once

// Bundled reference circuits (cascode class-E PA, series-shunt SPDT switch)
// and the target-check harness that runs them. The netlist texts are also
// shipped as assets/pa.cir, assets/switch_on.cir and assets/switch_off.cir.

#include "rfsim/engine.hpp"
#include "rfsim/error.hpp"
#include "rfsim/largesignal.hpp"
#include "rfsim/netlist.hpp"
#include "rfsim/rfmetrics.hpp"
#include "rfsim/units.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rfsim::bench {

inline constexpr std::string_view pa_text = R"cir(* 2.4 GHz cascode class-E PA with a negative-capacitance driver stage
*
* Device sizes and passive values are the design's. Everything below that
* is not a size is chosen here:
*   VDD = 1.8 V, VG2 = 1.8 V (cascode gate), VB1 = 0.6 V (M1 gate through R2),
*   VG3 = 1.2 V (driver gate).
*   M3 is a common-gate driver fed from port 1 through R1. C1 closes the
*   negative-capacitance loop from the driver output back to its input,
*   C3 couples the driver into M1. L1 is the drain choke, L2 with C2 is the
*   series output branch into the 50 ohm load at port 2.
*   The nch card is a generic 0.18 um square-law model.
*   Harness drive: 10 dBm available power at port 1, 2.4 GHz.
.title cascode class-E PA 2.4 GHz
.model nch nmos vth=0.5 kp=170u lambda=0.05 cgs=1n cgd=0.3n
VDD vdd 0 DC 1.8
VG2 vg2 0 DC 1.8
VG3 vg3 0 DC 1.2
VB1 vb1 0 DC 0.6
R1 in s3 10.5
M3 drv vg3 s3 0 nch w=0.8u l=0.6u f=4 m=2
L3 vdd drv 20n q=20
C1 drv in 240f
C3 drv g1 11p
R2 vb1 g1 3.8k
M1 mid g1 0 0 nch w=0.3u l=0.6u f=66 m=24
M2 d vg2 mid 0 nch w=0.3u l=0.6u f=66 m=24
L1 vdd d 36n q=20
C2 d x 600f
L2 x out 20n q=20
.port 1 in 0
.port 2 out 0
.end
)cir";

inline constexpr std::string_view switch_on_text = R"cir(* series-shunt SPDT RF switch, on state
*
* Port 1 is the common node. Arm A (port 2) has series switch SA and
* shunt switch SPA; arm B (port 3) mirrors it with SB and SPB.
* VCTL drives SA and SPB, VCTLB drives SB and SPA, so exactly one arm passes.
* Chosen device values: ron = 5 ohm, roff = 1 Mohm, off capacitance 50 fF
* across every switch (CA, CPA, CB, CPB). Control swing 0 / 1.8 V, vt = 0.9 V.
* The on and off netlists differ only in the VCTL and VCTLB values.
.title series-shunt SPDT switch
VCTL ctl 0 DC 1.8
VCTLB ctlb 0 DC 0
SA p1 p2 ctl 0 ron=5 roff=1meg vt=0.9 eps=0.1
CA p1 p2 50f
SPA p2 0 ctlb 0 ron=5 roff=1meg vt=0.9 eps=0.1
CPA p2 0 50f
SB p1 p3 ctlb 0 ron=5 roff=1meg vt=0.9 eps=0.1
CB p1 p3 50f
SPB p3 0 ctl 0 ron=5 roff=1meg vt=0.9 eps=0.1
CPB p3 0 50f
.port 1 p1 0
.port 2 p2 0
.port 3 p3 0
.end
)cir";

inline constexpr std::string_view switch_off_text = R"cir(* series-shunt SPDT RF switch, off state
*
* Port 1 is the common node. Arm A (port 2) has series switch SA and
* shunt switch SPA; arm B (port 3) mirrors it with SB and SPB.
* VCTL drives SA and SPB, VCTLB drives SB and SPA, so exactly one arm passes.
* Chosen device values: ron = 5 ohm, roff = 1 Mohm, off capacitance 50 fF
* across every switch (CA, CPA, CB, CPB). Control swing 0 / 1.8 V, vt = 0.9 V.
* The on and off netlists differ only in the VCTL and VCTLB values.
.title series-shunt SPDT switch
VCTL ctl 0 DC 0
VCTLB ctlb 0 DC 1.8
SA p1 p2 ctl 0 ron=5 roff=1meg vt=0.9 eps=0.1
CA p1 p2 50f
SPA p2 0 ctlb 0 ron=5 roff=1meg vt=0.9 eps=0.1
CPA p2 0 50f
SB p1 p3 ctlb 0 ron=5 roff=1meg vt=0.9 eps=0.1
CB p1 p3 50f
SPB p3 0 ctl 0 ron=5 roff=1meg vt=0.9 eps=0.1
CPB p3 0 50f
.port 1 p1 0
.port 2 p2 0
.port 3 p3 0
.end
)cir";

enum class SwitchState { on, off };

/// Parsed (not elaborated) PA.
inline Circuit pa_netlist() { return parse_netlist(pa_text); }

inline Circuit switch_netlist(SwitchState state) {
    return parse_netlist(state == SwitchState::on ? switch_on_text : switch_off_text);
}

enum class Which { pa, rf_switch, both };

inline Which parse_which(std::string_view s) {
    if (s == "pa") return Which::pa;
    if (s == "switch") return Which::rf_switch;
    if (s == "both") return Which::both;
    throw ArgumentError("unknown harness target '" + std::string(s) + "' (expected pa, switch or both)");
}

enum class Verdict { pass, fail, not_evaluated };

inline const char* to_string(Verdict v) {
    switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::not_evaluated: return "not-evaluated";
    }
    return "?";
}

enum class Compare { at_least, at_most, above };

inline const char* to_string(Compare c) {
    switch (c) {
    case Compare::at_least: return ">=";
    case Compare::at_most: return "<=";
    case Compare::above: return ">";
    }
    return "?";
}

/// Design targets. A missing field is not checked.
struct SpecTargets {
    std::optional<double> pout_dbm = 15.0;
    std::optional<double> gain_db = 50.0;
    std::optional<double> kf_min = 1.0;
    std::optional<double> s11_db = -10.0;
    std::optional<double> insertion_db = 1.2;
    std::optional<double> isolation_db = 40.0;
    std::optional<double> iip3_dbm = 55.0; // the target's unit is ambiguous; read as dBm

    void validate() const {
        for (const auto* t : {&pout_dbm, &gain_db, &kf_min, &s11_db, &insertion_db, &isolation_db, &iip3_dbm})
            if (*t && !std::isfinite(**t)) throw ArgumentError("targets must be finite");
    }
};

/// Measured figures; a missing field was not measured by the run.
struct Measurements {
    std::optional<double> pout_dbm;
    std::optional<double> gain_db;
    std::optional<double> kf_min;
    std::optional<double> s11_db;
    std::optional<double> insertion_db;
    std::optional<double> isolation_db;
    std::optional<double> iip3_dbm;
};

struct SpecRow {
    std::string metric;
    std::string unit;
    Compare compare = Compare::at_least;
    std::optional<double> target;
    std::optional<double> measured;
    Verdict verdict = Verdict::not_evaluated;
};

inline Verdict judge(std::optional<double> measured, std::optional<double> target, Compare c) {
    if (!measured || !target || std::isnan(*measured)) return Verdict::not_evaluated;
    bool ok = false;
    switch (c) {
    case Compare::at_least: ok = *measured >= *target; break;
    case Compare::at_most: ok = *measured <= *target; break;
    case Compare::above: ok = *measured > *target; break;
    }
    return ok ? Verdict::pass : Verdict::fail;
}

/// Verdict rows in a fixed order. Pure: same inputs, same rows.
inline std::vector<SpecRow> evaluate(const Measurements& m, const SpecTargets& t) {
    std::vector<SpecRow> rows{
        {"pout_dbm", "dBm", Compare::at_least, t.pout_dbm, m.pout_dbm, {}},
        {"gain_db", "dB", Compare::at_least, t.gain_db, m.gain_db, {}},
        {"kf_min", "", Compare::above, t.kf_min, m.kf_min, {}},
        {"s11_db", "dB", Compare::at_most, t.s11_db, m.s11_db, {}},
        {"insertion_db", "dB", Compare::at_most, t.insertion_db, m.insertion_db, {}},
        {"isolation_db", "dB", Compare::at_least, t.isolation_db, m.isolation_db, {}},
        {"iip3_dbm", "dBm", Compare::at_least, t.iip3_dbm, m.iip3_dbm, {}},
    };
    for (auto& r : rows) r.verdict = judge(r.measured, r.target, r.compare);
    return rows;
}

/// Reference figure printed next to the simulated counterpart. Never judged.
struct Reference {
    std::string label;
    double value = 0.0;
    std::string unit;
    double simulated = std::numeric_limits<double>::quiet_NaN();
};

struct SpecReport {
    std::string name;       // "pa" or "switch"
    std::string netlist;    // asset file name
    std::string model_card; // device model summary
    std::vector<std::pair<std::string, std::string>> settings;
    Measurements measured;
    std::vector<SpecRow> rows;
    std::vector<std::pair<std::string, std::string>> regions; // DC bias region per MOSFET
    std::vector<std::pair<std::string, double>> details;
    std::vector<Reference> references;
};

/// An analysis inside the harness failed; `stage()` names it.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& message)
        : Error(stage + ": " + message), stage_(std::move(stage)) {}
    [[nodiscard]] const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

struct HarnessOptions {
    SpecTargets targets;
    double f0 = 2.4e9;
    double drive_dbm = 10.0; // PA available input power
    double sweep_start = 0.1e9;
    double sweep_stop = 6e9;
    double sweep_step = 0.1e9;
    double switch_high_freq = 5e9;
};

namespace detail {

template <class Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(name, e.what());
    }
}

inline std::vector<double> linear_sweep(double start, double stop, double step) {
    std::vector<double> f;
    const int n = static_cast<int>(std::floor((stop - start) / step + 0.5));
    for (int i = 0; i <= n; ++i) f.push_back(start + i * step);
    return f;
}

inline std::size_t nearest(const std::vector<double>& freqs, double f) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < freqs.size(); ++i)
        if (std::abs(freqs[i] - f) < std::abs(freqs[best] - f)) best = i;
    return best;
}

inline std::string model_summary(const Circuit& c) {
    std::string out;
    for (const auto& [name, m] : c.models) {
        if (!out.empty()) out += "; ";
        out += name + (m.polarity == Polarity::nmos ? " nmos" : " pmos") + " vth=" + format_roundtrip(m.vth) +
               " kp=" + format_roundtrip(m.kp) + " lambda=" + format_roundtrip(m.lambda) +
               " cgs=" + format_roundtrip(m.cgs_per_width) + " cgd=" + format_roundtrip(m.cgd_per_width);
    }
    return out;
}

inline std::string region_name(MosRegion r) {
    switch (r) {
    case MosRegion::cutoff: return "cutoff";
    case MosRegion::triode: return "triode";
    case MosRegion::saturation: return "saturation";
    }
    return "?";
}

} // namespace detail

inline SpecReport run_pa(const HarnessOptions& opt = {}) {
    opt.targets.validate();
    SpecReport rep;
    rep.name = "pa";
    rep.netlist = "pa.cir";
    const Circuit c = detail::stage("elaborate", [&] { return elaborate(pa_netlist(), opt.f0); });
    rep.model_card = detail::model_summary(c);
    rep.settings = {{"f0_hz", format_number(opt.f0)},
                    {"sweep_hz", format_number(opt.sweep_start) + ":" + format_number(opt.sweep_step) + ":" +
                                     format_number(opt.sweep_stop)},
                    {"drive_dbm", format_number(opt.drive_dbm)},
                    {"pss", "256 samples/period, tol 1e-3 V"}};

    const auto op = detail::stage("dc", [&] { return dc_operating_point(c); });
    const auto freqs = detail::linear_sweep(opt.sweep_start, opt.sweep_stop, opt.sweep_step);
    const auto sp = detail::stage("sparam", [&] { return extract_sparams(c, freqs, &op); });
    const auto st = detail::stage("stability", [&] { return stability(sp); });
    const std::size_t i0 = detail::nearest(freqs, opt.f0);

    const auto ss = detail::stage("pss", [&] {
        PssOptions p;
        const double vs = std::sqrt(8.0 * c.ports.front().z0 * dbm_to_watts(opt.drive_dbm));
        p.drive = PortDrive{1, {Tone{vs, opt.f0, 0.0}}};
        return run_pss(c, opt.f0, p);
    });
    const auto power = detail::stage("power", [&] {
        PowerReport pr;
        const auto& port = c.ports.back();
        pr.pout_dbm = output_power_dbm(ss, c.node_names[port.plus], c.node_names[port.minus], port.z0);
        const double pout = dbm_to_watts(pr.pout_dbm);
        const auto e = efficiency(ss, c, dc_supplies(c), std::isfinite(pr.pout_dbm) ? pout : 0.0,
                                  dbm_to_watts(opt.drive_dbm));
        pr.pdc_w = e.pdc_w;
        pr.drain_eff = e.drain_eff;
        pr.pae = e.pae;
        try {
            pr.zvs_residual_v = zvs_residual(ss, c, "M1").residual_v;
        } catch (const MeasurementError&) {
            // M1 never turns on within the period (biased on throughout)
        }
        return pr;
    });

    rep.measured.pout_dbm = power.pout_dbm;
    rep.measured.gain_db = transducer_gain_db(sp.matrices[i0]);
    rep.measured.kf_min = st.kf_min();
    rep.measured.s11_db = db20(std::abs(sp.s(i0, 1, 1)));
    rep.rows = evaluate(rep.measured, opt.targets);

    for (const auto& [name, r] : op.regions) rep.regions.emplace_back(name, detail::region_name(r));
    rep.details = {{"pss_periods", static_cast<double>(ss.periods)},
                   {"pdc_w", power.pdc_w},
                   {"drain_eff", power.drain_eff},
                   {"pae", power.pae},
                   {"zvs_residual_v", power.zvs_residual_v},
                   {"delta_mag_max", *std::max_element(st.delta_mag.begin(), st.delta_mag.end())}};
    rep.references = {{"output power", 17.0, "dBm", power.pout_dbm},
                      {"output power (alt)", 16.0, "dBm", power.pout_dbm},
                      {"power gain", 94.0, "dB", *rep.measured.gain_db},
                      {"total power consumption", 2.061, "W", power.pdc_w}};
    return rep;
}

inline SpecReport run_switch(const HarnessOptions& opt = {}) {
    opt.targets.validate();
    SpecReport rep;
    rep.name = "switch";
    rep.netlist = "switch_on.cir, switch_off.cir";
    rep.model_card = "ideal switch ron=5 roff=1e6 vt=0.9 eps=0.1, off capacitance 50f";
    rep.settings = {{"f0_hz", format_number(opt.f0)}, {"f_high_hz", format_number(opt.switch_high_freq)}};

    const Circuit on = detail::stage("elaborate", [&] { return elaborate(switch_netlist(SwitchState::on), opt.f0); });
    const Circuit off = detail::stage("elaborate", [&] { return elaborate(switch_netlist(SwitchState::off), opt.f0); });
    const std::vector<double> freqs{opt.f0, opt.switch_high_freq};
    const auto s_on = detail::stage("sparam", [&] {
        const auto op = dc_operating_point(on);
        return extract_sparams(on, freqs, &op);
    });
    const auto s_off = detail::stage("sparam", [&] {
        const auto op = dc_operating_point(off);
        return extract_sparams(off, freqs, &op);
    });
    const auto m_on = db_metrics(s_on);
    const auto m_off = db_metrics(s_off);

    // off state: port 2 is the blocked arm
    const double iso_off = -db20(std::abs(s_off.s(0, 2, 1)));
    rep.measured.s11_db = db20(std::abs(s_on.s(0, 1, 1)));
    rep.measured.insertion_db = m_on.rows[0].insertion_loss_db;
    rep.measured.isolation_db = std::min(m_on.rows[0].isolation_db, iso_off);
    rep.rows = evaluate(rep.measured, opt.targets);
    rep.details = {{"insertion_db_on_f_high", m_on.rows[1].insertion_loss_db},
                   {"isolation_db_on_s31_f0", m_on.rows[0].isolation_db},
                   {"isolation_db_off_s21_f0", iso_off},
                   {"isolation_db_on_s31_f_high", m_on.rows[1].isolation_db},
                   {"vswr_on_f0", m_on.rows[0].vswr},
                   {"s11_db_off_f0", -m_off.rows[0].return_loss_db}};
    rep.references = {{"insertion loss at 5 GHz", 1.36, "dB", m_on.rows[1].insertion_loss_db},
                      {"isolation at 5 GHz", 58.5, "dB", m_on.rows[1].isolation_db}};
    return rep;
}

inline std::vector<SpecReport> run_harness(Which which, const HarnessOptions& opt = {}) {
    std::vector<SpecReport> out;
    if (which != Which::rf_switch) out.push_back(run_pa(opt));
    if (which != Which::pa) out.push_back(run_switch(opt));
    return out;
}

inline nlohmann::ordered_json to_json(const SpecReport& r) {
    using rfsim::detail::json_number;
    nlohmann::ordered_json j;
    j["name"] = r.name;
    j["netlist"] = r.netlist;
    j["model_card"] = r.model_card;
    j["settings"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.settings) j["settings"][k] = v;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& row : r.rows) {
        nlohmann::ordered_json x;
        x["metric"] = row.metric;
        x["unit"] = row.unit;
        x["comparator"] = to_string(row.compare);
        x["target"] = row.target ? json_number(*row.target) : nullptr;
        x["measured"] = row.measured ? json_number(*row.measured) : nullptr;
        x["verdict"] = to_string(row.verdict);
        j["rows"].push_back(x);
    }
    j["regions"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.regions) j["regions"][k] = v;
    j["details"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.details) j["details"][k] = json_number(v);
    j["references"] = nlohmann::ordered_json::array();
    for (const auto& ref : r.references) {
        nlohmann::ordered_json x;
        x["label"] = ref.label;
        x["value"] = ref.value;
        x["unit"] = ref.unit;
        x["simulated"] = json_number(ref.simulated);
        j["references"].push_back(x);
    }
    return j;
}

/// Aligned plain-text rendering of a report.
inline std::string format_table(const SpecReport& r) {
    auto num = [](std::optional<double> v) {
        if (!v) return std::string("-");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", *v);
        return std::string(buf);
    };
    char line[160];
    std::ostringstream os;
    os << "== " << r.name << " (" << r.netlist << ")\n";
    os << "model: " << r.model_card << "\n";
    std::snprintf(line, sizeof line, "%-14s %12s %4s %10s %-5s %s\n", "metric", "measured", "cmp", "target", "unit",
                  "verdict");
    os << line;
    for (const auto& row : r.rows) {
        std::snprintf(line, sizeof line, "%-14s %12s %4s %10s %-5s %s\n", row.metric.c_str(),
                      num(row.measured).c_str(), to_string(row.compare), num(row.target).c_str(), row.unit.c_str(),
                      to_string(row.verdict));
        os << line;
    }
    if (!r.regions.empty()) {
        os << "bias:";
        for (const auto& [k, v] : r.regions) os << " " << k << "=" << v;
        os << "\n";
    }
    os << "details:\n";
    for (const auto& [k, v] : r.details) {
        std::snprintf(line, sizeof line, "  %-28s %s\n", k.c_str(), num(v).c_str());
        os << line;
    }
    os << "reference values (not judged):\n";
    for (const auto& ref : r.references) {
        std::snprintf(line, sizeof line, "  %-26s %8s %-4s simulated %s\n", ref.label.c_str(),
                      format_roundtrip(ref.value).c_str(), ref.unit.c_str(), num(ref.simulated).c_str());
        os << line;
    }
    return os.str();
}

} // namespace rfsim::bench
