#pragma once

// Netlist data model, text parser, serializer and elaboration.
//
// Grammar (one logical line per element or directive):
//   * comment                 '*' as first non-blank character
//   + continuation            appended to the previous logical line
//   Rname n1 n2 value
//   Lname n1 n2 value [q=<Q>] [ic=<A>]
//   Cname n1 n2 value [ic=<V>]
//   Vname n+ n- [DC v] [SIN(off amp freq [phase_deg])]
//               [PULSE(v1 v2 delay rise fall width period)] [AC mag [phase_deg]]
//   Iname n+ n- (same source syntax, current flows n+ -> n- inside the source)
//   Mname d g s b model w=<m> l=<m> [f=<fingers>] [m=<multiplier>]
//   Sname in out ctrl+ ctrl- ron=<ohm> roff=<ohm> vt=<V> [eps=<V>]
//   Ename out+ out- in+ in- [a1=] [a2=] [a3=]     (polynomial VCVS, test element)
//   .title text
//   .model name nmos|pmos [vth=] [kp=] [lambda=] [cgs=] [cgd=]
//   .port idx node+ node- [z0=50]
//   .op | .tran step stop [uic] | .ac dec pts fstart fstop
//   .sparam dec pts fstart fstop | .pss f0 [periods=n] [tol=v] [samples=n]
//   .twotone f1 f2 level[,level...]
//   .end

#include "rfsim/devices.hpp"
#include "rfsim/error.hpp"
#include "rfsim/units.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace rfsim {

enum class ElementKind { resistor, inductor, capacitor, vsource, isource, mosfet, ideal_switch, poly };

inline const char* to_string(ElementKind k) {
    switch (k) {
    case ElementKind::resistor: return "resistor";
    case ElementKind::inductor: return "inductor";
    case ElementKind::capacitor: return "capacitor";
    case ElementKind::vsource: return "vsource";
    case ElementKind::isource: return "isource";
    case ElementKind::mosfet: return "mosfet";
    case ElementKind::ideal_switch: return "switch";
    case ElementKind::poly: return "poly";
    }
    return "?";
}

struct SineWave {
    double offset = 0.0;
    double amplitude = 0.0;
    double freq = 0.0;
    double phase_deg = 0.0;
    friend bool operator==(const SineWave&, const SineWave&) = default;
};

struct PulseWave {
    double v1 = 0.0, v2 = 0.0, delay = 0.0, rise = 0.0, fall = 0.0, width = 0.0, period = 0.0;
    friend bool operator==(const PulseWave&, const PulseWave&) = default;
};

/// Independent source description. The time-domain value is the waveform
/// when one is given, otherwise the DC value.
struct SourceSpec {
    double dc = 0.0;
    std::optional<SineWave> sine;
    std::optional<PulseWave> pulse;
    double ac_mag = 0.0;
    double ac_phase_deg = 0.0;

    [[nodiscard]] bool has_waveform() const { return sine.has_value() || pulse.has_value(); }

    [[nodiscard]] double value(double t) const {
        if (sine) {
            return sine->offset +
                   sine->amplitude * std::sin(2.0 * pi * sine->freq * t + sine->phase_deg * pi / 180.0);
        }
        if (pulse) return pulse_value(*pulse, t);
        return dc;
    }

    static double pulse_value(const PulseWave& p, double t) {
        if (t < p.delay) return p.v1;
        double tl = t - p.delay;
        if (p.period > 0.0) tl = std::fmod(tl, p.period);
        if (tl < p.rise) return p.v1 + (p.v2 - p.v1) * tl / p.rise;
        tl -= p.rise;
        if (tl < p.width) return p.v2;
        tl -= p.width;
        if (tl < p.fall) return p.v2 + (p.v1 - p.v2) * tl / p.fall;
        return p.v1;
    }

    friend bool operator==(const SourceSpec&, const SourceSpec&) = default;
};

struct Element {
    std::string name;
    ElementKind kind = ElementKind::resistor;
    std::vector<int> nodes;
    double value = 0.0;
    std::map<std::string, double> params;
    std::string model;
    SourceSpec source;
    int line = 0; // source line, not part of identity

    [[nodiscard]] double param(const std::string& key, double fallback) const {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }
    [[nodiscard]] bool has_param(const std::string& key) const { return params.count(key) != 0; }
};

struct PortDef {
    int index = 1;
    int plus = 0;
    int minus = 0;
    double z0 = 50.0;
};

enum class DirectiveKind { op, tran, ac, sparam, pss, twotone };

inline const char* to_string(DirectiveKind k) {
    switch (k) {
    case DirectiveKind::op: return "op";
    case DirectiveKind::tran: return "tran";
    case DirectiveKind::ac: return "ac";
    case DirectiveKind::sparam: return "sparam";
    case DirectiveKind::pss: return "pss";
    case DirectiveKind::twotone: return "twotone";
    }
    return "?";
}

/// Keys by kind:
///   tran: step, stop, uic (0/1)
///   ac, sparam: points (per decade), fstart, fstop
///   pss: f0 and optional periods, tol, samples
///   twotone: f1, f2; drive levels in `levels`
struct AnalysisDirective {
    DirectiveKind kind = DirectiveKind::op;
    std::map<std::string, double> params;
    std::vector<double> levels;
    int line = 0;

    [[nodiscard]] double param(const std::string& key, double fallback) const {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }
};

/// Parsed circuit. Node 0 is ground; "0" and "gnd" (any case) alias to it.
struct Circuit {
    std::string title;
    std::vector<Element> elements;
    std::vector<std::string> node_names{"0"};
    std::map<std::string, int> node_index{{"0", 0}};
    std::vector<PortDef> ports;
    std::map<std::string, ModelCard> models;
    std::vector<AnalysisDirective> directives;

    [[nodiscard]] int num_nodes() const { return static_cast<int>(node_names.size()); }

    static bool is_ground_name(std::string_view name) {
        return name == "0" || detail::lowercase(name) == "gnd";
    }

    int add_node(const std::string& name) {
        if (is_ground_name(name)) return 0;
        auto it = node_index.find(name);
        if (it != node_index.end()) return it->second;
        const int idx = num_nodes();
        node_names.push_back(name);
        node_index.emplace(name, idx);
        return idx;
    }

    /// Throws if the node does not exist.
    [[nodiscard]] int node(const std::string& name) const {
        if (is_ground_name(name)) return 0;
        auto it = node_index.find(name);
        if (it == node_index.end()) throw ArgumentError("unknown node '" + name + "'");
        return it->second;
    }

    [[nodiscard]] const Element* find_element(std::string_view name) const {
        for (const auto& e : elements)
            if (e.name == name) return &e;
        return nullptr;
    }

    [[nodiscard]] const Element& element(std::string_view name) const {
        if (const auto* e = find_element(name)) return *e;
        throw ArgumentError("unknown element '" + std::string(name) + "'");
    }

    [[nodiscard]] std::size_t count(ElementKind kind) const {
        return static_cast<std::size_t>(std::count_if(
            elements.begin(), elements.end(), [kind](const Element& e) { return e.kind == kind; }));
    }
};

/// Structural equality by names; node numbering and source line numbers are
/// not part of a circuit's identity.
inline bool operator==(const Circuit& a, const Circuit& b) {
    if (a.title != b.title || a.models != b.models) return false;
    if (a.elements.size() != b.elements.size() || a.ports.size() != b.ports.size() ||
        a.directives.size() != b.directives.size())
        return false;
    for (std::size_t i = 0; i < a.elements.size(); ++i) {
        const auto& x = a.elements[i];
        const auto& y = b.elements[i];
        if (x.name != y.name || x.kind != y.kind || x.value != y.value || x.params != y.params ||
            x.model != y.model || !(x.source == y.source) || x.nodes.size() != y.nodes.size())
            return false;
        for (std::size_t k = 0; k < x.nodes.size(); ++k)
            if (a.node_names[x.nodes[k]] != b.node_names[y.nodes[k]]) return false;
    }
    for (std::size_t i = 0; i < a.ports.size(); ++i) {
        const auto& x = a.ports[i];
        const auto& y = b.ports[i];
        if (x.index != y.index || x.z0 != y.z0 || a.node_names[x.plus] != b.node_names[y.plus] ||
            a.node_names[x.minus] != b.node_names[y.minus])
            return false;
    }
    for (std::size_t i = 0; i < a.directives.size(); ++i) {
        const auto& x = a.directives[i];
        const auto& y = b.directives[i];
        if (x.kind != y.kind || x.params != y.params || x.levels != y.levels) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Device views of elements

inline MosGeometry mos_geometry(const Element& e) {
    MosGeometry g;
    g.w_finger = e.param("w", 1e-6);
    g.l = e.param("l", 1e-6);
    g.fingers = e.param("f", 1.0);
    g.multiplier = e.param("m", 1.0);
    return g;
}

inline SwitchModel switch_model(const Element& e) {
    SwitchModel s;
    s.ron = e.param("ron", s.ron);
    s.roff = e.param("roff", s.roff);
    s.vthresh = e.param("vt", s.vthresh);
    s.width = e.param("eps", s.width);
    return s;
}

inline PolyCoefficients poly_coefficients(const Element& e) {
    PolyCoefficients p;
    p.a1 = e.param("a1", 1.0);
    p.a2 = e.param("a2", 0.0);
    p.a3 = e.param("a3", 0.0);
    return p;
}

// ---------------------------------------------------------------------------
// Parser

namespace detail {

struct Token {
    std::string text;
    int line = 0;
    int column = 0;
};

struct LogicalLine {
    std::vector<Token> tokens;
    int line = 0;
};

inline void tokenize_into(std::string_view raw, int line_no, std::vector<Token>& out) {
    std::size_t i = 0;
    while (i < raw.size()) {
        const char c = raw[i];
        if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
            // commas only separate list items inside .twotone; keep them as tokens there
            if (c == ',') out.push_back({",", line_no, static_cast<int>(i) + 1});
            ++i;
            continue;
        }
        if (c == '(' || c == ')') {
            out.push_back({std::string(1, c), line_no, static_cast<int>(i) + 1});
            ++i;
            continue;
        }
        const std::size_t start = i;
        while (i < raw.size() && !std::isspace(static_cast<unsigned char>(raw[i])) && raw[i] != '(' &&
               raw[i] != ')' && raw[i] != ',' && raw[i] != '=')
            ++i;
        std::string word(raw.substr(start, i - start));
        // glue "key = value" into a single "key=value" token
        std::size_t j = i;
        while (j < raw.size() && std::isspace(static_cast<unsigned char>(raw[j]))) ++j;
        if (j < raw.size() && raw[j] == '=') {
            ++j;
            while (j < raw.size() && std::isspace(static_cast<unsigned char>(raw[j]))) ++j;
            std::size_t vstart = j;
            while (j < raw.size() && !std::isspace(static_cast<unsigned char>(raw[j])) &&
                   raw[j] != '(' && raw[j] != ')' && raw[j] != ',')
                ++j;
            word += "=" + std::string(raw.substr(vstart, j - vstart));
            i = j;
        }
        out.push_back({std::move(word), line_no, static_cast<int>(start) + 1});
    }
}

inline std::vector<LogicalLine> split_lines(std::string_view text) {
    std::vector<LogicalLine> lines;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view raw = text.substr(pos, nl - pos);
        ++line_no;
        pos = nl + 1;
        if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
        std::size_t first = 0;
        while (first < raw.size() && std::isspace(static_cast<unsigned char>(raw[first]))) ++first;
        if (first == raw.size() || raw[first] == '*') {
            if (nl == text.size()) break;
            continue;
        }
        if (raw[first] == '+') {
            if (lines.empty())
                throw ParseError(ParseErrorKind::bad_directive, "continuation without a preceding line",
                                 line_no, static_cast<int>(first) + 1);
            std::string blank(first + 1, ' ');
            tokenize_into(std::string(blank) + std::string(raw.substr(first + 1)), line_no,
                          lines.back().tokens);
        } else {
            LogicalLine l;
            l.line = line_no;
            tokenize_into(raw, line_no, l.tokens);
            lines.push_back(std::move(l));
        }
        if (nl == text.size()) break;
    }
    return lines;
}

inline double value_at(const Token& t) {
    try {
        return parse_value(t.text);
    } catch (const ParseError& e) {
        throw e.at(t.line, t.column + std::max(0, e.column() - 1));
    }
}

inline bool looks_numeric(std::string_view s) {
    if (s.empty()) return false;
    std::size_t i = 0;
    if (s[i] == '+' || s[i] == '-') ++i;
    if (i < s.size() && s[i] == '.') ++i;
    return i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]));
}

inline std::pair<std::string, std::string> split_key(const Token& t) {
    const auto eq = t.text.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ParseError(ParseErrorKind::arity_mismatch, "expected key=value, got '" + t.text + "'",
                         t.line, t.column);
    return {lowercase(t.text.substr(0, eq)), t.text.substr(eq + 1)};
}

inline double key_value(const Token& t, const std::string& raw_value) {
    if (raw_value.empty())
        throw ParseError(ParseErrorKind::malformed_number, "missing value in '" + t.text + "'", t.line,
                         t.column);
    Token v{raw_value, t.line, t.column + static_cast<int>(t.text.size() - raw_value.size())};
    return value_at(v);
}

inline void parse_params(const std::vector<Token>& tokens, std::size_t from, Element& e,
                         const std::set<std::string>& allowed) {
    for (std::size_t i = from; i < tokens.size(); ++i) {
        const auto& t = tokens[i];
        if (t.text.find('=') == std::string::npos)
            throw ParseError(ParseErrorKind::arity_mismatch,
                             "unexpected token '" + t.text + "' for " + e.name, t.line, t.column);
        auto [key, raw] = split_key(t);
        if (!allowed.count(key))
            throw ParseError(ParseErrorKind::unknown_parameter,
                             "unknown parameter '" + key + "' for " + e.name, t.line, t.column);
        e.params[key] = key_value(t, raw);
    }
}

inline std::vector<double> paren_args(const std::vector<Token>& tokens, std::size_t& i,
                                      const std::string& what) {
    const Token& head = tokens[i];
    if (i + 1 >= tokens.size() || tokens[i + 1].text != "(")
        throw ParseError(ParseErrorKind::arity_mismatch, what + " requires '('", head.line, head.column);
    i += 2;
    std::vector<double> args;
    while (i < tokens.size() && tokens[i].text != ")") {
        if (tokens[i].text != ",") args.push_back(value_at(tokens[i]));
        ++i;
    }
    if (i >= tokens.size())
        throw ParseError(ParseErrorKind::arity_mismatch, what + " missing ')'", head.line, head.column);
    ++i; // past ')'
    return args;
}

inline SourceSpec parse_source(const std::vector<Token>& tokens, std::size_t i, const std::string& name) {
    SourceSpec s;
    bool any = false;
    while (i < tokens.size()) {
        const Token& t = tokens[i];
        const std::string key = lowercase(t.text);
        if (key == "dc") {
            if (i + 1 >= tokens.size())
                throw ParseError(ParseErrorKind::arity_mismatch, name + ": DC needs a value", t.line,
                                 t.column);
            s.dc = value_at(tokens[i + 1]);
            i += 2;
        } else if (key == "sin") {
            auto a = paren_args(tokens, i, "SIN");
            if (a.size() < 3 || a.size() > 4)
                throw ParseError(ParseErrorKind::arity_mismatch,
                                 name + ": SIN takes (offset amp freq [phase])", t.line, t.column);
            SineWave w{a[0], a[1], a[2], a.size() == 4 ? a[3] : 0.0};
            if (!(w.freq > 0.0))
                throw ParseError(ParseErrorKind::invalid_value, name + ": SIN frequency must be > 0",
                                 t.line, t.column);
            s.sine = w;
        } else if (key == "pulse") {
            auto a = paren_args(tokens, i, "PULSE");
            if (a.size() != 7)
                throw ParseError(ParseErrorKind::arity_mismatch,
                                 name + ": PULSE takes (v1 v2 delay rise fall width period)", t.line,
                                 t.column);
            PulseWave p{a[0], a[1], a[2], a[3], a[4], a[5], a[6]};
            if (p.rise < 0 || p.fall < 0 || p.width < 0 || p.period < 0 || p.delay < 0)
                throw ParseError(ParseErrorKind::invalid_value, name + ": PULSE times must be >= 0",
                                 t.line, t.column);
            s.pulse = p;
        } else if (key == "ac") {
            if (i + 1 >= tokens.size())
                throw ParseError(ParseErrorKind::arity_mismatch, name + ": AC needs a magnitude", t.line,
                                 t.column);
            s.ac_mag = value_at(tokens[i + 1]);
            i += 2;
            if (i < tokens.size() && looks_numeric(tokens[i].text)) {
                s.ac_phase_deg = value_at(tokens[i]);
                ++i;
            }
        } else if (!any && looks_numeric(t.text)) {
            s.dc = value_at(t);
            ++i;
        } else {
            throw ParseError(ParseErrorKind::arity_mismatch,
                             name + ": unexpected token '" + t.text + "'", t.line, t.column);
        }
        any = true;
    }
    if (s.sine && s.pulse)
        throw ParseError(ParseErrorKind::arity_mismatch, name + ": SIN and PULSE are exclusive",
                         tokens.front().line, tokens.front().column);
    return s;
}

inline void require_arity(const LogicalLine& l, std::size_t at_least, const std::string& what) {
    if (l.tokens.size() < at_least)
        throw ParseError(ParseErrorKind::arity_mismatch,
                         what + " expects at least " + std::to_string(at_least - 1) + " fields", l.line,
                         l.tokens.front().column);
}

inline void parse_sweep(const LogicalLine& l, AnalysisDirective& d) {
    const auto& t = l.tokens;
    if (t.size() != 5 || lowercase(t[1].text) != "dec")
        throw ParseError(ParseErrorKind::bad_directive,
                         t[0].text + " expects: dec <points> <fstart> <fstop>", l.line, t[0].column);
    d.params["points"] = value_at(t[2]);
    d.params["fstart"] = value_at(t[3]);
    d.params["fstop"] = value_at(t[4]);
    if (!(d.params["points"] >= 1.0) || !(d.params["fstart"] > 0.0) ||
        !(d.params["fstart"] < d.params["fstop"]))
        throw ParseError(ParseErrorKind::bad_directive,
                         t[0].text + " requires points >= 1 and 0 < fstart < fstop", l.line, t[0].column);
}

inline void parse_directive(const LogicalLine& l, Circuit& c) {
    const auto& t = l.tokens;
    const std::string word = lowercase(t[0].text);
    auto bad = [&](const std::string& msg) {
        return ParseError(ParseErrorKind::bad_directive, msg, l.line, t[0].column);
    };
    if (word == ".end" || word == ".ends") return;
    if (word == ".title") {
        std::string title;
        for (std::size_t i = 1; i < t.size(); ++i) title += (i > 1 ? " " : "") + t[i].text;
        c.title = title;
        return;
    }
    if (word == ".model") {
        if (t.size() < 3) throw bad(".model expects: name nmos|pmos [params]");
        ModelCard card = ModelCard::default_nmos(t[1].text);
        const std::string type = lowercase(t[2].text);
        if (type == "nmos") card.polarity = Polarity::nmos;
        else if (type == "pmos") card.polarity = Polarity::pmos;
        else throw ParseError(ParseErrorKind::bad_directive, "model type must be nmos or pmos", l.line,
                             t[2].column);
        for (std::size_t i = 3; i < t.size(); ++i) {
            auto [key, raw] = split_key(t[i]);
            const double v = key_value(t[i], raw);
            if (key == "vth") card.vth = v;
            else if (key == "kp") card.kp = v;
            else if (key == "lambda") card.lambda = v;
            else if (key == "cgs") card.cgs_per_width = v;
            else if (key == "cgd") card.cgd_per_width = v;
            else throw ParseError(ParseErrorKind::unknown_parameter, "unknown model parameter '" + key + "'",
                                  t[i].line, t[i].column);
        }
        try {
            card.validate();
        } catch (const ArgumentError& e) {
            throw ParseError(ParseErrorKind::invalid_value, e.what(), l.line, t[0].column);
        }
        if (c.models.count(card.name)) throw bad("duplicate model '" + card.name + "'");
        c.models.emplace(card.name, card);
        return;
    }
    if (word == ".port") {
        if (t.size() < 4 || t.size() > 5) throw bad(".port expects: idx node+ node- [z0=]");
        PortDef p;
        const double idx = value_at(t[1]);
        if (idx < 1 || idx != std::floor(idx))
            throw ParseError(ParseErrorKind::bad_port, "port index must be a positive integer", l.line,
                             t[1].column);
        p.index = static_cast<int>(idx);
        p.plus = c.add_node(t[2].text);
        p.minus = c.add_node(t[3].text);
        if (t.size() == 5) {
            auto [key, raw] = split_key(t[4]);
            if (key != "z0")
                throw ParseError(ParseErrorKind::unknown_parameter, "unknown port parameter '" + key + "'",
                                 t[4].line, t[4].column);
            p.z0 = key_value(t[4], raw);
        }
        if (!(p.z0 > 0.0) || !std::isfinite(p.z0))
            throw ParseError(ParseErrorKind::bad_port, "port z0 must be > 0", l.line, t[0].column);
        for (const auto& q : c.ports)
            if (q.index == p.index)
                throw ParseError(ParseErrorKind::bad_port, "duplicate port " + std::to_string(p.index),
                                 l.line, t[1].column);
        c.ports.push_back(p);
        return;
    }

    AnalysisDirective d;
    d.line = l.line;
    if (word == ".op") {
        d.kind = DirectiveKind::op;
        if (t.size() != 1) throw bad(".op takes no arguments");
    } else if (word == ".tran") {
        d.kind = DirectiveKind::tran;
        if (t.size() < 3 || t.size() > 4) throw bad(".tran expects: step stop [uic]");
        d.params["step"] = value_at(t[1]);
        d.params["stop"] = value_at(t[2]);
        d.params["uic"] = 0.0;
        if (t.size() == 4) {
            if (lowercase(t[3].text) != "uic") throw bad(".tran: unknown option '" + t[3].text + "'");
            d.params["uic"] = 1.0;
        }
        if (!(d.params["step"] > 0.0) || !(d.params["step"] < d.params["stop"]))
            throw bad(".tran requires 0 < step < stop");
    } else if (word == ".ac") {
        d.kind = DirectiveKind::ac;
        parse_sweep(l, d);
    } else if (word == ".sparam") {
        d.kind = DirectiveKind::sparam;
        parse_sweep(l, d);
    } else if (word == ".pss") {
        d.kind = DirectiveKind::pss;
        if (t.size() < 2) throw bad(".pss expects: f0 [periods=] [tol=] [samples=]");
        d.params["f0"] = value_at(t[1]);
        if (!(d.params["f0"] > 0.0)) throw bad(".pss f0 must be > 0");
        for (std::size_t i = 2; i < t.size(); ++i) {
            auto [key, raw] = split_key(t[i]);
            if (key != "periods" && key != "tol" && key != "samples")
                throw ParseError(ParseErrorKind::unknown_parameter, "unknown .pss option '" + key + "'",
                                 t[i].line, t[i].column);
            d.params[key] = key_value(t[i], raw);
        }
    } else if (word == ".twotone") {
        d.kind = DirectiveKind::twotone;
        if (t.size() < 4) throw bad(".twotone expects: f1 f2 level[,level...]");
        d.params["f1"] = value_at(t[1]);
        d.params["f2"] = value_at(t[2]);
        for (std::size_t i = 3; i < t.size(); ++i)
            if (t[i].text != ",") d.levels.push_back(value_at(t[i]));
        if (!(d.params["f1"] > 0.0) || !(d.params["f2"] > 0.0) || d.params["f1"] == d.params["f2"])
            throw bad(".twotone requires distinct positive tone frequencies");
        if (d.levels.empty()) throw bad(".twotone needs at least one drive level");
    } else {
        throw bad("unknown directive '" + t[0].text + "'");
    }
    c.directives.push_back(std::move(d));
}

inline void parse_element(const LogicalLine& l, Circuit& c, std::set<std::string>& names) {
    const auto& t = l.tokens;
    const Token& head = t[0];
    Element e;
    e.name = head.text;
    e.line = l.line;
    const char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(head.text[0])));
    auto nodes = [&](std::size_t count) {
        require_arity(l, count + 1, e.name);
        for (std::size_t i = 1; i <= count; ++i) {
            if (t[i].text.find('=') != std::string::npos || t[i].text == "(")
                throw ParseError(ParseErrorKind::arity_mismatch,
                                 e.name + " expects " + std::to_string(count) + " nodes", t[i].line,
                                 t[i].column);
            e.nodes.push_back(c.add_node(t[i].text));
        }
    };
    auto passive = [&](ElementKind kind, const std::set<std::string>& allowed) {
        e.kind = kind;
        nodes(2);
        if (t.size() < 4)
            throw ParseError(ParseErrorKind::arity_mismatch, e.name + " expects: n1 n2 value", l.line,
                             head.column);
        e.value = value_at(t[3]);
        if (!(e.value > 0.0) || !std::isfinite(e.value))
            throw ParseError(ParseErrorKind::invalid_value, e.name + ": value must be positive and finite",
                             t[3].line, t[3].column);
        parse_params(t, 4, e, allowed);
    };
    switch (letter) {
    case 'R': passive(ElementKind::resistor, {}); break;
    case 'L':
        passive(ElementKind::inductor, {"q", "ic"});
        if (e.has_param("q") && !(e.params["q"] > 0.0))
            throw ParseError(ParseErrorKind::invalid_value, e.name + ": Q must be > 0", l.line, head.column);
        break;
    case 'C': passive(ElementKind::capacitor, {"ic"}); break;
    case 'V':
    case 'I':
        e.kind = letter == 'V' ? ElementKind::vsource : ElementKind::isource;
        nodes(2);
        e.source = parse_source(t, 3, e.name);
        break;
    case 'M': {
        e.kind = ElementKind::mosfet;
        nodes(4);
        if (t.size() < 6 || t[5].text.find('=') != std::string::npos)
            throw ParseError(ParseErrorKind::arity_mismatch, e.name + " expects: d g s b model [params]",
                             l.line, head.column);
        e.model = t[5].text;
        parse_params(t, 6, e, {"w", "l", "f", "m"});
        for (const auto& [k, v] : e.params)
            if (!(v > 0.0))
                throw ParseError(ParseErrorKind::invalid_value, e.name + ": " + k + " must be > 0", l.line,
                                 head.column);
        break;
    }
    case 'S': {
        e.kind = ElementKind::ideal_switch;
        nodes(4);
        parse_params(t, 5, e, {"ron", "roff", "vt", "eps"});
        try {
            switch_model(e).validate();
        } catch (const ArgumentError& err) {
            throw ParseError(ParseErrorKind::invalid_value, e.name + ": " + err.what(), l.line, head.column);
        }
        break;
    }
    case 'E':
        e.kind = ElementKind::poly;
        nodes(4);
        parse_params(t, 5, e, {"a1", "a2", "a3"});
        break;
    default:
        throw ParseError(ParseErrorKind::unknown_element, "unknown element type '" + head.text + "'", l.line,
                         head.column);
    }
    if (!names.insert(e.name).second)
        throw ParseError(ParseErrorKind::duplicate_name, "duplicate element name '" + e.name + "'", l.line,
                         head.column);
    c.elements.push_back(std::move(e));
}

} // namespace detail

/// Parses netlist text into a Circuit satisfying the data-model invariants.
inline Circuit parse_netlist(std::string_view text) {
    Circuit c;
    std::set<std::string> names;
    for (const auto& l : detail::split_lines(text)) {
        if (l.tokens.empty()) continue;
        if (l.tokens.front().text.front() == '.') detail::parse_directive(l, c);
        else detail::parse_element(l, c, names);
    }
    for (const auto& e : c.elements) {
        if (e.kind == ElementKind::mosfet && !c.models.count(e.model))
            throw ParseError(ParseErrorKind::missing_model,
                             e.name + " references undefined model '" + e.model + "'", e.line, 1);
    }
    std::sort(c.ports.begin(), c.ports.end(),
              [](const PortDef& a, const PortDef& b) { return a.index < b.index; });
    for (std::size_t i = 0; i < c.ports.size(); ++i)
        if (c.ports[i].index != static_cast<int>(i) + 1)
            throw ParseError(ParseErrorKind::bad_port, "port indices must be contiguous from 1");
    return c;
}

// ---------------------------------------------------------------------------
// Serializer

inline std::string serialize(const Circuit& c) {
    std::ostringstream out;
    auto num = [](double v) { return format_roundtrip(v); };
    auto node = [&](int idx) { return c.node_names[idx]; };
    if (!c.title.empty()) out << ".title " << c.title << '\n';
    for (const auto& [name, m] : c.models) {
        out << ".model " << name << (m.polarity == Polarity::nmos ? " nmos" : " pmos") << " vth=" << num(m.vth)
            << " kp=" << num(m.kp) << " lambda=" << num(m.lambda) << " cgs=" << num(m.cgs_per_width)
            << " cgd=" << num(m.cgd_per_width) << '\n';
    }
    for (const auto& e : c.elements) {
        out << e.name;
        for (int n : e.nodes) out << ' ' << node(n);
        switch (e.kind) {
        case ElementKind::resistor:
        case ElementKind::inductor:
        case ElementKind::capacitor: out << ' ' << num(e.value); break;
        case ElementKind::vsource:
        case ElementKind::isource: {
            const auto& s = e.source;
            out << " DC " << num(s.dc);
            if (s.sine)
                out << " SIN(" << num(s.sine->offset) << ' ' << num(s.sine->amplitude) << ' '
                    << num(s.sine->freq) << ' ' << num(s.sine->phase_deg) << ')';
            if (s.pulse) {
                const auto& p = *s.pulse;
                out << " PULSE(" << num(p.v1) << ' ' << num(p.v2) << ' ' << num(p.delay) << ' '
                    << num(p.rise) << ' ' << num(p.fall) << ' ' << num(p.width) << ' ' << num(p.period)
                    << ')';
            }
            if (s.ac_mag != 0.0 || s.ac_phase_deg != 0.0)
                out << " AC " << num(s.ac_mag) << ' ' << num(s.ac_phase_deg);
            break;
        }
        case ElementKind::mosfet: out << ' ' << e.model; break;
        default: break;
        }
        for (const auto& [k, v] : e.params) out << ' ' << k << '=' << num(v);
        out << '\n';
    }
    for (const auto& p : c.ports)
        out << ".port " << p.index << ' ' << node(p.plus) << ' ' << node(p.minus) << " z0=" << num(p.z0)
            << '\n';
    for (const auto& d : c.directives) {
        switch (d.kind) {
        case DirectiveKind::op: out << ".op"; break;
        case DirectiveKind::tran:
            out << ".tran " << num(d.param("step", 0)) << ' ' << num(d.param("stop", 0));
            if (d.param("uic", 0) != 0.0) out << " uic";
            break;
        case DirectiveKind::ac:
        case DirectiveKind::sparam:
            out << (d.kind == DirectiveKind::ac ? ".ac" : ".sparam") << " dec " << num(d.param("points", 0))
                << ' ' << num(d.param("fstart", 0)) << ' ' << num(d.param("fstop", 0));
            break;
        case DirectiveKind::pss:
            out << ".pss " << num(d.param("f0", 0));
            for (const auto& [k, v] : d.params)
                if (k != "f0") out << ' ' << k << '=' << num(v);
            break;
        case DirectiveKind::twotone:
            out << ".twotone " << num(d.param("f1", 0)) << ' ' << num(d.param("f2", 0)) << ' ';
            for (std::size_t i = 0; i < d.levels.size(); ++i) out << (i ? "," : "") << num(d.levels[i]);
            break;
        }
        out << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Elaboration

/// Number of element/port terminals attached to each node.
inline std::vector<int> node_connection_counts(const Circuit& c) {
    std::vector<int> count(c.node_names.size(), 0);
    for (const auto& e : c.elements)
        for (int n : e.nodes) ++count[n];
    for (const auto& p : c.ports) {
        ++count[p.plus];
        ++count[p.minus];
    }
    return count;
}

/// Flattens a parsed circuit for analysis at `f_design`:
///  - every inductor carrying q=Q becomes an ideal L in series with
///    R = 2 pi f_design L / Q (the q parameter is consumed),
///  - nodes are renumbered densely in order of first use,
///  - nodes with a single connection that are not port terminals are rejected.
inline Circuit elaborate(const Circuit& in, double f_design) {
    if (!(f_design > 0.0) || !std::isfinite(f_design))
        throw ArgumentError("elaboration frequency must be > 0");

    Circuit out;
    out.title = in.title;
    out.models = in.models;
    out.directives = in.directives;
    std::set<std::string> names;
    for (const auto& e : in.elements) names.insert(e.name);

    auto remap = [&](int idx) { return out.add_node(in.node_names[idx]); };
    for (const auto& e : in.elements) {
        Element copy = e;
        for (auto& n : copy.nodes) n = remap(n);
        if (e.kind == ElementKind::inductor && e.has_param("q")) {
            const double q = e.params.at("q");
            const std::string mid = e.name + "#q";
            const std::string rname = "RQ#" + e.name;
            if (in.node_index.count(mid) || names.count(rname))
                throw ElaborationError("name clash while expanding Q of " + e.name, mid);
            const int tail = copy.nodes[1];
            copy.nodes[1] = out.add_node(mid);
            copy.params.erase("q");
            Element loss;
            loss.name = rname;
            loss.kind = ElementKind::resistor;
            loss.nodes = {copy.nodes[1], tail};
            loss.value = 2.0 * pi * f_design * e.value / q;
            loss.line = e.line;
            out.elements.push_back(std::move(copy));
            out.elements.push_back(std::move(loss));
        } else {
            out.elements.push_back(std::move(copy));
        }
    }
    for (const auto& p : in.ports) {
        PortDef q = p;
        q.plus = remap(p.plus);
        q.minus = remap(p.minus);
        out.ports.push_back(q);
    }

    const auto counts = node_connection_counts(out);
    for (int n = 1; n < out.num_nodes(); ++n)
        if (counts[n] < 2)
            throw ElaborationError("dangling node '" + out.node_names[n] + "' has a single connection",
                                   out.node_names[n]);
    return out;
}

} // namespace rfsim
