#pragma once

// Command-line front end logic. tools/rfsim_cli.cpp only parses arguments;
// everything that touches circuits and files lives here so it can be driven
// in-process.
//
// Exit codes: 0 success, 1 usage error, 2 parse/analysis error (error JSON
// on stderr and in <out>/error.json), 3 I/O error.

#include "rfsim/bench.hpp"
#include "rfsim/engine.hpp"
#include "rfsim/error.hpp"
#include "rfsim/largesignal.hpp"
#include "rfsim/netlist.hpp"
#include "rfsim/rfmetrics.hpp"
#include "rfsim/units.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace rfsim::cli {

inline constexpr const char* version = "0.1.0";

class UsageError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

enum class Format { csv, json, touchstone };

inline Format parse_format(const std::string& s) {
    if (s == "csv") return Format::csv;
    if (s == "json") return Format::json;
    if (s == "touchstone") return Format::touchstone;
    throw UsageError("unknown format '" + s + "' (expected csv, json or touchstone)");
}

inline const char* to_string(Format f) {
    switch (f) {
    case Format::csv: return "csv";
    case Format::json: return "json";
    case Format::touchstone: return "touchstone";
    }
    return "?";
}

struct RunConfig {
    std::string command; // run, sparam, pss, ip3, repro
    std::string input;   // netlist path, or the repro target
    std::filesystem::path out_dir = ".";
    std::optional<Format> format;
    std::vector<std::string> overrides; // key=value

    double f0 = 2.4e9; // design frequency (inductor Q) and PSS fundamental
    std::optional<double> fstart, fstop;
    std::optional<int> pts; // per decade
    std::optional<int> periods;
    std::optional<double> tol;
    std::optional<int> samples;
    std::optional<double> pin_dbm; // pss: drive port 1 at f0 with this available power
    std::string load;              // pss: resistor element or "port<N>" that receives output power
    std::string zvs_element;       // pss: switch or MOSFET for the ZVS residual
    double f1 = 2.4e9, f2 = 2.41e9;
    std::vector<double> levels{-30, -25, -20, -15, -10};
};

// ---------------------------------------------------------------------------
// Overrides

/// --set keys:
///   f_design, gmin, abstol, vntol, max_newton, max_newton_tran, max_halvings,
///   pss.periods, pss.tol, pss.samples, pss.harmonics,
///   sparam.fstart, sparam.fstop, sparam.points,
///   twotone.samples_per_cycle, twotone.tol,
///   model.<card>.<vth|kp|lambda|cgs|cgd>
struct Overrides {
    std::map<std::string, double> values;
    std::map<std::string, std::map<std::string, double>> models;

    [[nodiscard]] std::optional<double> get(const std::string& key) const {
        auto it = values.find(key);
        if (it == values.end()) return std::nullopt;
        return it->second;
    }
};

inline Overrides parse_overrides(const std::vector<std::string>& raw) {
    static const std::vector<std::string> known{
        "f_design",     "gmin",         "abstol",        "vntol",
        "max_newton",   "max_newton_tran", "max_halvings", "pss.periods",
        "pss.tol",      "pss.samples",  "pss.harmonics", "sparam.fstart",
        "sparam.fstop", "sparam.points", "twotone.samples_per_cycle", "twotone.tol"};
    static const std::vector<std::string> model_keys{"vth", "kp", "lambda", "cgs", "cgd"};
    Overrides o;
    for (const auto& item : raw) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + item + "'");
        const std::string key = item.substr(0, eq);
        double v = 0.0;
        try {
            v = parse_value(item.substr(eq + 1));
        } catch (const ParseError& e) {
            throw UsageError("--set " + key + ": " + e.detail());
        }
        if (key.rfind("model.", 0) == 0) {
            const auto dot = key.rfind('.');
            const std::string card = key.substr(6, dot - 6), param = key.substr(dot + 1);
            if (dot <= 6 || std::find(model_keys.begin(), model_keys.end(), param) == model_keys.end())
                throw UsageError("unknown override '" + key + "'");
            o.models[card][param] = v;
        } else if (std::find(known.begin(), known.end(), key) != known.end()) {
            o.values[key] = v;
        } else {
            throw UsageError("unknown override '" + key + "'");
        }
    }
    return o;
}

inline EngineSettings engine_settings(const Overrides& o) {
    EngineSettings s;
    if (auto v = o.get("gmin")) s.gmin = *v;
    if (auto v = o.get("abstol")) s.abstol = *v;
    if (auto v = o.get("vntol")) s.vntol = *v;
    if (auto v = o.get("max_newton")) s.max_newton = static_cast<int>(*v);
    if (auto v = o.get("max_newton_tran")) s.max_newton_tran = static_cast<int>(*v);
    if (auto v = o.get("max_halvings")) s.max_halvings = static_cast<int>(*v);
    return s;
}

inline void apply_model_overrides(Circuit& c, const Overrides& o) {
    for (const auto& [card, params] : o.models) {
        auto it = c.models.find(card);
        if (it == c.models.end()) throw UsageError("--set names unknown model '" + card + "'");
        for (const auto& [k, v] : params) {
            if (k == "vth") it->second.vth = v;
            else if (k == "kp") it->second.kp = v;
            else if (k == "lambda") it->second.lambda = v;
            else if (k == "cgs") it->second.cgs_per_width = v;
            else if (k == "cgd") it->second.cgd_per_width = v;
        }
        it->second.validate();
    }
}

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read '" + p.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write '" + p.string() + "'");
    out << text;
    if (!out) throw IoError("write failed for '" + p.string() + "'");
}

inline void ensure_dir(const std::filesystem::path& p) {
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec || !std::filesystem::is_directory(p)) throw IoError("cannot create directory '" + p.string() + "'");
}

// ---------------------------------------------------------------------------
// Artifact text

inline std::string op_json(const OperatingPoint& op) {
    nlohmann::ordered_json j;
    j["strategy"] = op.strategy;
    j["residual"] = rfsim::detail::json_number(op.residual);
    j["values"] = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < op.names.size(); ++i) j["values"][op.names[i]] = rfsim::detail::json_number(op.x[i]);
    j["regions"] = nlohmann::ordered_json::object();
    for (const auto& [name, r] : op.regions) j["regions"][name] = bench::detail::region_name(r);
    return j.dump(2) + "\n";
}

inline std::string op_csv(const OperatingPoint& op) {
    std::string s = "signal,value\n";
    for (std::size_t i = 0; i < op.names.size(); ++i) s += op.names[i] + "," + format_number(op.x[i]) + "\n";
    return s;
}

inline std::string waveform_csv(const WaveformSet& w) {
    std::string s = "time";
    for (const auto& n : w.names) s += "," + n;
    s += "\n";
    for (std::size_t i = 0; i < w.time.size(); ++i) {
        s += format_number(w.time[i]);
        for (const auto& sig : w.samples) s += "," + format_number(sig[i]);
        s += "\n";
    }
    return s;
}

inline std::string waveform_json(const WaveformSet& w) {
    nlohmann::ordered_json j;
    j["time"] = w.time;
    j["signals"] = nlohmann::ordered_json::object();
    for (std::size_t k = 0; k < w.names.size(); ++k) j["signals"][w.names[k]] = w.samples[k];
    return j.dump() + "\n";
}

inline std::string ac_csv(const AcResult& ac) {
    std::string s = "freq_hz";
    for (const auto& n : ac.names) s += "," + n + "_re," + n + "_im";
    s += "\n";
    for (std::size_t f = 0; f < ac.freqs.size(); ++f) {
        s += format_number(ac.freqs[f]);
        for (const auto& v : ac.values[f]) s += "," + format_number(v.real()) + "," + format_number(v.imag());
        s += "\n";
    }
    return s;
}

inline std::string ac_json(const AcResult& ac) {
    nlohmann::ordered_json j;
    j["freq_hz"] = ac.freqs;
    j["signals"] = nlohmann::ordered_json::object();
    for (std::size_t k = 0; k < ac.names.size(); ++k) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& row : ac.values) arr.push_back({row[k].real(), row[k].imag()});
        j["signals"][ac.names[k]] = arr;
    }
    return j.dump() + "\n";
}

inline std::string sparam_json(const SParameterSet& s) {
    nlohmann::ordered_json j;
    j["z0"] = s.z0;
    j["ports"] = s.num_ports();
    j["freq_hz"] = s.freqs;
    auto mats = nlohmann::ordered_json::array();
    for (std::size_t f = 0; f < s.size(); ++f) {
        auto m = nlohmann::ordered_json::array();
        for (int i = 1; i <= s.num_ports(); ++i) {
            auto row = nlohmann::ordered_json::array();
            for (int k = 1; k <= s.num_ports(); ++k) row.push_back({s.s(f, i, k).real(), s.s(f, i, k).imag()});
            m.push_back(row);
        }
        mats.push_back(m);
    }
    j["s"] = mats;
    return j.dump() + "\n";
}

inline std::string pss_csv(const SteadyStateResult& ss) {
    std::string s = "harmonic,freq_hz";
    for (const auto& n : ss.names) s += "," + n + "_re," + n + "_im";
    s += "\n";
    for (int k = 0; k <= ss.harmonics(); ++k) {
        s += std::to_string(k) + "," + format_number(k * ss.fundamental);
        for (std::size_t i = 0; i < ss.names.size(); ++i)
            s += "," + format_number(ss.phasors[i][k].real()) + "," + format_number(ss.phasors[i][k].imag());
        s += "\n";
    }
    return s;
}

// ---------------------------------------------------------------------------
// Analyses

struct Context {
    RunConfig config;
    Overrides overrides;
    std::vector<std::string> artifacts;

    [[nodiscard]] double f_design() const { return overrides.get("f_design").value_or(config.f0); }

    void emit(const std::string& name, const std::string& text) {
        write_file(config.out_dir / name, text);
        artifacts.push_back(name);
    }
};

inline Format pick(const Context& ctx, Format fallback, std::initializer_list<Format> allowed, const char* what) {
    const Format f = ctx.config.format.value_or(fallback);
    for (Format a : allowed)
        if (a == f) return f;
    throw UsageError(std::string(what) + " cannot be written as " + to_string(f));
}

inline Circuit load_circuit(Context& ctx) {
    Circuit parsed = parse_netlist(read_file(ctx.config.input));
    apply_model_overrides(parsed, ctx.overrides);
    return parsed;
}

inline std::string stem(const Context& ctx) {
    return std::filesystem::path(ctx.config.input).stem().string();
}

inline void do_sparam(Context& ctx, const Circuit& c, const std::vector<double>& freqs, const std::string& base) {
    AnalysisOptions ao;
    ao.settings = engine_settings(ctx.overrides);
    const auto op = dc_operating_point(c, ao);
    const auto s = extract_sparams(c, freqs, &op, ao);
    const Format f = pick(ctx, Format::touchstone, {Format::touchstone, Format::csv, Format::json}, "sparam");
    std::ostringstream metrics;
    write_metrics_csv(metrics, s);
    if (f == Format::touchstone) {
        std::ostringstream ts;
        write_touchstone(ts, s);
        ctx.emit(base + ".s" + std::to_string(s.num_ports()) + "p", ts.str());
        ctx.emit(base + "_metrics.csv", metrics.str());
    } else if (f == Format::csv) {
        ctx.emit(base + "_metrics.csv", metrics.str());
    } else {
        ctx.emit(base + ".json", sparam_json(s));
    }
}

/// Resolves "port<N>" or a resistor name to (plus, minus, r).
inline std::tuple<std::string, std::string, double> load_terminals(const Circuit& c, const std::string& load) {
    if (load.empty()) {
        if (c.ports.empty()) throw ArgumentError("no load: netlist has no ports and --load was not given");
        const auto* best = &c.ports.front();
        for (const auto& p : c.ports)
            if (p.index > best->index) best = &p;
        return {c.node_names[best->plus], c.node_names[best->minus], best->z0};
    }
    if (load.rfind("port", 0) == 0) {
        const int idx = std::atoi(load.c_str() + 4);
        for (const auto& p : c.ports)
            if (p.index == idx) return {c.node_names[p.plus], c.node_names[p.minus], p.z0};
        throw ArgumentError("no port " + load.substr(4));
    }
    const auto& e = c.element(load);
    if (e.kind != ElementKind::resistor) throw ArgumentError("load '" + load + "' is not a resistor");
    return {c.node_names[e.nodes[0]], c.node_names[e.nodes[1]], e.value};
}

inline void do_pss(Context& ctx, const Circuit& c, double f0, const AnalysisDirective* d, const std::string& base) {
    PssOptions p;
    p.settings = engine_settings(ctx.overrides);
    auto set_int = [](int& target, std::optional<double> v) {
        if (v) target = static_cast<int>(*v);
    };
    if (d) {
        if (d->params.count("periods")) p.max_periods = static_cast<int>(d->param("periods", 0));
        if (d->params.count("tol")) p.tol = d->param("tol", 0);
        if (d->params.count("samples")) p.samples_per_period = static_cast<int>(d->param("samples", 0));
    }
    if (ctx.config.periods) p.max_periods = *ctx.config.periods;
    if (ctx.config.tol) p.tol = *ctx.config.tol;
    if (ctx.config.samples) p.samples_per_period = *ctx.config.samples;
    set_int(p.max_periods, ctx.overrides.get("pss.periods"));
    if (auto v = ctx.overrides.get("pss.tol")) p.tol = *v;
    set_int(p.samples_per_period, ctx.overrides.get("pss.samples"));
    set_int(p.harmonics, ctx.overrides.get("pss.harmonics"));
    std::optional<double> pin_w;
    if (ctx.config.pin_dbm) {
        if (c.ports.empty()) throw ArgumentError("--pin needs a port 1 to drive");
        const double z0 = c.ports.front().z0;
        p.drive = PortDrive{1, {Tone{std::sqrt(8.0 * z0 * dbm_to_watts(*ctx.config.pin_dbm)), f0, 0.0}}};
        pin_w = dbm_to_watts(*ctx.config.pin_dbm);
    }
    const auto ss = run_pss(c, f0, p);

    PowerReport pr;
    const bool has_load = !ctx.config.load.empty() || !c.ports.empty();
    if (has_load) {
        const auto [plus, minus, r] = load_terminals(c, ctx.config.load);
        pr.pout_dbm = output_power_dbm(ss, plus, minus, r);
    } else {
        pr.pout_dbm = std::numeric_limits<double>::quiet_NaN();
    }
    const auto supplies = dc_supplies(c);
    if (!supplies.empty()) {
        const double pout = std::isfinite(pr.pout_dbm) ? dbm_to_watts(pr.pout_dbm) : 0.0;
        const auto e = efficiency(ss, c, supplies, pout, pin_w);
        pr.pdc_w = e.pdc_w;
        pr.drain_eff = e.drain_eff;
        pr.pae = e.pae;
    } else {
        pr.pdc_w = 0.0;
        pr.drain_eff = std::numeric_limits<double>::quiet_NaN();
    }
    if (!ctx.config.zvs_element.empty()) pr.zvs_residual_v = zvs_residual(ss, c, ctx.config.zvs_element).residual_v;

    const Format f = pick(ctx, Format::json, {Format::json, Format::csv}, "pss");
    if (f == Format::csv) {
        ctx.emit(base + ".csv", pss_csv(ss));
        return;
    }
    nlohmann::ordered_json j = to_json(pr);
    j["f0_hz"] = f0;
    j["periods"] = ss.periods;
    j["residual_v"] = rfsim::detail::json_number(ss.residual);
    j["harmonics"] = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < ss.names.size(); ++i) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& v : ss.phasors[i]) arr.push_back({v.real(), v.imag()});
        j["harmonics"][ss.names[i]] = arr;
    }
    ctx.emit(base + ".json", j.dump(2) + "\n");
}

inline void do_ip3(Context& ctx, const Circuit& c, double f1, double f2, const std::vector<double>& levels,
                   const std::string& base) {
    TwoToneOptions o;
    o.settings = engine_settings(ctx.overrides);
    if (auto v = ctx.overrides.get("twotone.samples_per_cycle")) o.samples_per_cycle = static_cast<int>(*v);
    if (auto v = ctx.overrides.get("twotone.tol")) o.tol = *v;
    const auto r = two_tone_ip3(c, f1, f2, levels, o);
    const Format f = pick(ctx, Format::json, {Format::json, Format::csv}, "ip3");
    if (f == Format::json) {
        ctx.emit(base + ".json", to_json(r).dump(2) + "\n");
        return;
    }
    std::string s = "pin_dbm,fund_dbm,im3_dbm,valid\n";
    for (const auto& l : r.levels)
        s += format_number(l.pin_dbm) + "," + format_number(l.fund_dbm) + "," + format_number(l.im3_dbm) + "," +
             (l.valid ? "1" : "0") + "\n";
    ctx.emit(base + ".csv", s);
}

inline void cmd_run(Context& ctx) {
    const Circuit parsed = load_circuit(ctx);
    const Circuit c = elaborate(parsed, ctx.f_design());
    const std::string base = stem(ctx);
    AnalysisOptions ao;
    ao.settings = engine_settings(ctx.overrides);
    int n = 0;
    for (const auto& d : c.directives) {
        const std::string name = base + "_" + std::to_string(++n) + "_" + to_string(d.kind);
        switch (d.kind) {
        case DirectiveKind::op: {
            const auto op = dc_operating_point(c, ao);
            if (pick(ctx, Format::json, {Format::json, Format::csv}, "op") == Format::json)
                ctx.emit(name + ".json", op_json(op));
            else
                ctx.emit(name + ".csv", op_csv(op));
            break;
        }
        case DirectiveKind::tran: {
            const auto w = transient(c, d.param("step", 0), d.param("stop", 0), d.param("uic", 0) != 0.0, ao);
            if (pick(ctx, Format::csv, {Format::csv, Format::json}, "tran") == Format::csv)
                ctx.emit(name + ".csv", waveform_csv(w));
            else
                ctx.emit(name + ".json", waveform_json(w));
            break;
        }
        case DirectiveKind::ac: {
            const auto op = dc_operating_point(c, ao);
            const auto f = decade_sweep(d.param("fstart", 0), d.param("fstop", 0), static_cast<int>(d.param("points", 0)));
            const auto ac = ac_solve(c, op, f, ao);
            if (pick(ctx, Format::csv, {Format::csv, Format::json}, "ac") == Format::csv)
                ctx.emit(name + ".csv", ac_csv(ac));
            else
                ctx.emit(name + ".json", ac_json(ac));
            break;
        }
        case DirectiveKind::sparam:
            do_sparam(ctx, c,
                      decade_sweep(d.param("fstart", 0), d.param("fstop", 0), static_cast<int>(d.param("points", 0))),
                      name);
            break;
        case DirectiveKind::pss: do_pss(ctx, c, d.param("f0", 0), &d, name); break;
        case DirectiveKind::twotone: do_ip3(ctx, c, d.param("f1", 0), d.param("f2", 0), d.levels, name); break;
        }
    }
    if (n == 0) throw ArgumentError("netlist has no analysis directives");
}

inline void cmd_sparam(Context& ctx) {
    const Circuit c = elaborate(load_circuit(ctx), ctx.f_design());
    const double fstart = ctx.config.fstart.value_or(ctx.overrides.get("sparam.fstart").value_or(1e8));
    const double fstop = ctx.config.fstop.value_or(ctx.overrides.get("sparam.fstop").value_or(6e9));
    const int pts = ctx.config.pts.value_or(static_cast<int>(ctx.overrides.get("sparam.points").value_or(20)));
    do_sparam(ctx, c, decade_sweep(fstart, fstop, pts), stem(ctx) + "_sparam");
}

inline void cmd_pss(Context& ctx) {
    const Circuit c = elaborate(load_circuit(ctx), ctx.f_design());
    do_pss(ctx, c, ctx.config.f0, nullptr, stem(ctx) + "_pss");
}

inline void cmd_ip3(Context& ctx) {
    const Circuit c = elaborate(load_circuit(ctx), ctx.f_design());
    do_ip3(ctx, c, ctx.config.f1, ctx.config.f2, ctx.config.levels, stem(ctx) + "_ip3");
}

inline void cmd_repro(Context& ctx, std::ostream& out) {
    bench::Which which{};
    try {
        which = bench::parse_which(ctx.config.input);
    } catch (const ArgumentError& e) {
        throw UsageError(e.what());
    }
    bench::HarnessOptions opt;
    opt.f0 = ctx.config.f0;
    if (ctx.config.pin_dbm) opt.drive_dbm = *ctx.config.pin_dbm;
    for (const auto& r : bench::run_harness(which, opt)) {
        const std::string table = bench::format_table(r);
        out << table;
        ctx.emit("repro_" + r.name + ".json", bench::to_json(r).dump(2) + "\n");
        ctx.emit("repro_" + r.name + ".txt", table);
    }
}

// ---------------------------------------------------------------------------
// Errors

inline nlohmann::ordered_json error_json(const std::exception& ex) {
    nlohmann::ordered_json e;
    if (const auto* p = dynamic_cast<const ParseError*>(&ex)) {
        e["type"] = "parse";
        e["kind"] = rfsim::to_string(p->kind());
        e["message"] = p->detail();
        e["line"] = p->line();
        e["column"] = p->column();
    } else if (const auto* s = dynamic_cast<const bench::StageError*>(&ex)) {
        e["type"] = "stage";
        e["stage"] = s->stage();
        e["message"] = s->what();
    } else if (const auto* cv = dynamic_cast<const ConvergenceError*>(&ex)) {
        e["type"] = "convergence";
        e["message"] = cv->what();
        e["signal"] = cv->worst_signal();
        e["where"] = cv->where();
    } else {
        const char* type = "error";
        if (dynamic_cast<const ElaborationError*>(&ex)) type = "elaboration";
        else if (dynamic_cast<const TopologyError*>(&ex)) type = "topology";
        else if (dynamic_cast<const SingularMatrixError*>(&ex)) type = "singular_matrix";
        else if (dynamic_cast<const SettlingError*>(&ex)) type = "settling";
        else if (dynamic_cast<const ArgumentError*>(&ex)) type = "argument";
        else if (dynamic_cast<const MeasurementError*>(&ex)) type = "measurement";
        else if (dynamic_cast<const IoError*>(&ex)) type = "io";
        else if (dynamic_cast<const UsageError*>(&ex)) type = "usage";
        e["type"] = type;
        e["message"] = ex.what();
    }
    nlohmann::ordered_json j;
    j["error"] = e;
    return j;
}

/// Runs one command; returns the process exit code.
inline int execute(const RunConfig& config, std::ostream& out, std::ostream& err) {
    const auto t0 = std::chrono::steady_clock::now();
    Context ctx{config, {}, {}};
    auto fail = [&](const std::exception& ex, int code) {
        const std::string text = error_json(ex).dump() + "\n";
        err << text;
        if (code == 2) {
            try {
                write_file(config.out_dir / "error.json", text);
            } catch (const IoError&) {
            }
        }
        return code;
    };
    try {
        ctx.overrides = parse_overrides(config.overrides);
        ensure_dir(config.out_dir);
        if (config.command == "run") cmd_run(ctx);
        else if (config.command == "sparam") cmd_sparam(ctx);
        else if (config.command == "pss") cmd_pss(ctx);
        else if (config.command == "ip3") cmd_ip3(ctx);
        else if (config.command == "repro") cmd_repro(ctx, out);
        else throw UsageError("unknown command '" + config.command + "'");
    } catch (const UsageError& e) {
        return fail(e, 1);
    } catch (const IoError& e) {
        return fail(e, 3);
    } catch (const Error& e) {
        return fail(e, 2);
    }

    // run metadata stays out of the data artifacts
    nlohmann::ordered_json m;
    m["rfsim_version"] = version;
    m["command"] = config.command;
    m["input"] = config.input;
    m["artifacts"] = ctx.artifacts;
    m["elapsed_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    try {
        write_file(config.out_dir / "manifest.json", m.dump(2) + "\n");
    } catch (const IoError& e) {
        return fail(e, 3);
    }
    for (const auto& a : ctx.artifacts) out << (config.out_dir / a).string() << "\n";
    return 0;
}

} // namespace rfsim::cli
