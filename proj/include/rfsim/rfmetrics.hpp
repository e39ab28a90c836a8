#pragma once

// Multi-port S-parameters from the linearized circuit, and the small-signal
// figures of merit built on them (return/insertion loss, isolation, VSWR,
// Rollett stability, transducer gain). Touchstone v1 and CSV I/O.

#include "rfsim/engine.hpp"
#include "rfsim/error.hpp"
#include "rfsim/linalg.hpp"
#include "rfsim/netlist.hpp"
#include "rfsim/units.hpp"

#include <cmath>
#include <complex>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace rfsim {

using SMatrix = DenseMatrix<cplx>;

/// S-parameters on a common real reference impedance.
struct SParameterSet {
    std::vector<double> freqs;
    std::vector<SMatrix> matrices;
    double z0 = 50.0;

    [[nodiscard]] int num_ports() const { return matrices.empty() ? 0 : matrices.front().rows(); }
    [[nodiscard]] std::size_t size() const { return freqs.size(); }
    /// 1-based port indices, S_ij at frequency index fi.
    [[nodiscard]] cplx s(std::size_t fi, int i, int j) const { return matrices.at(fi)(i - 1, j - 1); }

    void validate() const {
        if (matrices.size() != freqs.size()) throw ArgumentError("S-parameter set: matrix/frequency count mismatch");
        if (!(z0 > 0.0)) throw ArgumentError("S-parameter set: z0 must be > 0");
        for (const auto& m : matrices)
            if (m.rows() != num_ports() || m.cols() != num_ports())
                throw ArgumentError("S-parameter set: inconsistent matrix size");
    }
};

namespace detail {

inline void check_ports(const Circuit& c) {
    if (c.ports.empty()) throw ArgumentError("S-parameter extraction needs at least one .port");
    for (std::size_t i = 0; i < c.ports.size(); ++i) {
        const auto& p = c.ports[i];
        if (p.plus == p.minus) throw ArgumentError("port " + std::to_string(p.index) + " is shorted (same node twice)");
        if (p.z0 != c.ports.front().z0)
            throw ArgumentError("ports must share one reference impedance");
        for (std::size_t k = 0; k < i; ++k) {
            const auto& q = c.ports[k];
            for (int n : {p.plus, p.minus})
                if (n != 0 && (n == q.plus || n == q.minus))
                    throw ArgumentError("ports " + std::to_string(q.index) + " and " + std::to_string(p.index) +
                                        " overlap at node '" + c.node_names[n] + "'");
        }
    }
}

} // namespace detail

/// Each column j: port j driven by a Norton source with incident wave a_j = 1,
/// every port terminated in z0, all independent sources zeroed. Power waves
/// a = (V + z0 I)/(2 sqrt z0), b = (V - z0 I)/(2 sqrt z0), I into the port.
/// The circuit is linearized at `op` (computed when absent).
inline SParameterSet extract_sparams(const Circuit& c, std::span<const double> freqs,
                                     const OperatingPoint* op = nullptr, const AnalysisOptions& options = {}) {
    detail::check_ports(c);
    AnalysisOptions lin = options;
    lin.drive.reset();
    std::optional<OperatingPoint> own;
    if (!op) {
        own = dc_operating_point(c, lin);
        op = &*own;
    }
    MnaModel model(c, lin);
    if (static_cast<int>(op->x.size()) != model.dimension())
        throw ArgumentError("operating point does not match circuit");

    const int np = static_cast<int>(c.ports.size());
    const double z0 = c.ports.front().z0;
    const double sq = std::sqrt(z0);
    auto row = [](int node) { return node - 1; };

    SParameterSet out;
    out.z0 = z0;
    for (double f : freqs) {
        if (!(f > 0.0)) throw ArgumentError("S-parameter frequencies must be > 0");
        const auto sys = model.assemble_ac(2.0 * pi * f, op->x, false);
        std::optional<LuFactorization<cplx>> lu;
        try {
            lu.emplace(sys.matrix);
        } catch (const SingularMatrixError& e) {
            throw TopologyError("singular S-parameter system at f=" + format_number(f) + " Hz (" + e.what() + ")");
        }
        SMatrix s(np, np);
        for (int j = 0; j < np; ++j) {
            const auto& pj = c.ports[j];
            // open-circuit source 2 sqrt(z0) behind z0 gives a_j = 1
            const cplx is = 2.0 * sq / z0;
            std::vector<cplx> rhs(model.dimension(), cplx{});
            if (row(pj.plus) >= 0) rhs[row(pj.plus)] += is;
            if (row(pj.minus) >= 0) rhs[row(pj.minus)] -= is;
            const auto x = lu->solve(rhs);
            for (int i = 0; i < np; ++i) {
                const auto& pi_ = c.ports[i];
                const cplx v = (row(pi_.plus) >= 0 ? x[row(pi_.plus)] : cplx{}) -
                               (row(pi_.minus) >= 0 ? x[row(pi_.minus)] : cplx{});
                // current into the network at port i: source minus termination
                const cplx cur = (i == j ? is : cplx{}) - v / z0;
                s(i, j) = (v - z0 * cur) / (2.0 * sq);
            }
        }
        out.freqs.push_back(f);
        out.matrices.push_back(std::move(s));
    }
    return out;
}

/// Same network on a new common real reference impedance:
/// S' = (S - g I)(I - g S)^-1 with g = (z_new - z0)/(z_new + z0).
inline SParameterSet renormalize(const SParameterSet& in, double z_new) {
    if (!(z_new > 0.0)) throw ArgumentError("reference impedance must be > 0");
    const double g = (z_new - in.z0) / (z_new + in.z0);
    SParameterSet out;
    out.freqs = in.freqs;
    out.z0 = z_new;
    for (const auto& s : in.matrices) {
        const int n = s.rows();
        SMatrix num = s, den = SMatrix::identity(n);
        for (int r = 0; r < n; ++r) {
            num(r, r) -= g;
            for (int c = 0; c < n; ++c) den(r, c) -= g * s(r, c);
        }
        // S' = num * den^-1, solved as den^T S'^T = num^T
        SMatrix den_t(n, n), res(n, n);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) den_t(r, c) = den(c, r);
        LuFactorization<cplx> lu(den_t);
        for (int r = 0; r < n; ++r) {
            std::vector<cplx> rhs(n);
            for (int c = 0; c < n; ++c) rhs[c] = num(r, c);
            const auto x = lu.solve(rhs);
            for (int c = 0; c < n; ++c) res(r, c) = x[c];
        }
        out.matrices.push_back(std::move(res));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stability

struct RollettResult {
    double kf = 0.0;
    double delta_mag = 0.0;
    bool unilateral = false; // kf is then +infinity
};

/// Rollett factor of a 2x2 matrix. |S12 S21| < 1e-18 is treated as
/// unilateral and reported as kf = +inf.
inline RollettResult rollett_k(const SMatrix& s) {
    if (s.rows() != 2 || s.cols() != 2) throw ArgumentError("rollett_k needs a 2x2 matrix");
    const cplx s11 = s(0, 0), s12 = s(0, 1), s21 = s(1, 0), s22 = s(1, 1);
    const cplx delta = s11 * s22 - s12 * s21;
    RollettResult r;
    r.delta_mag = std::abs(delta);
    const double loop = std::abs(s12 * s21);
    if (loop < 1e-18) {
        r.unilateral = true;
        r.kf = std::numeric_limits<double>::infinity();
        return r;
    }
    r.kf = (1.0 - std::norm(s11) - std::norm(s22) + r.delta_mag * r.delta_mag) / (2.0 * loop);
    return r;
}

struct StabilityResult {
    std::vector<double> freqs;
    std::vector<double> kf;
    std::vector<double> delta_mag;
    std::vector<bool> unconditional; // kf > 1 and |delta| < 1

    [[nodiscard]] double kf_min() const {
        double m = std::numeric_limits<double>::infinity();
        for (double k : kf) m = std::min(m, k);
        return m;
    }
    [[nodiscard]] bool all_unconditional() const {
        for (bool u : unconditional)
            if (!u) return false;
        return !unconditional.empty();
    }
};

/// Per-frequency Rollett factor of ports 1 and 2.
inline StabilityResult stability(const SParameterSet& s) {
    if (s.num_ports() < 2) throw ArgumentError("stability needs two ports");
    StabilityResult out;
    for (std::size_t fi = 0; fi < s.size(); ++fi) {
        SMatrix m(2, 2);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) m(i, j) = s.matrices[fi](i, j);
        const auto r = rollett_k(m);
        out.freqs.push_back(s.freqs[fi]);
        out.kf.push_back(r.kf);
        out.delta_mag.push_back(r.delta_mag);
        out.unconditional.push_back(r.kf > 1.0 && r.delta_mag < 1.0);
    }
    return out;
}

// ---------------------------------------------------------------------------
// dB metrics

struct DbRow {
    double freq = 0.0;
    double return_loss_db = 0.0;                                     // -20 log|S11|
    double insertion_loss_db = std::numeric_limits<double>::quiet_NaN(); // -20 log|S21|
    double isolation_db = std::numeric_limits<double>::quiet_NaN();      // -20 log|S31|
    double vswr = 1.0;
};

struct DbMetrics {
    std::vector<DbRow> rows;
    std::vector<std::string> warnings;
};

inline double vswr_from_gamma(double mag) {
    if (mag >= 1.0) return std::numeric_limits<double>::infinity();
    return (1.0 + mag) / (1.0 - mag);
}

/// Insertion loss needs two ports and isolation three; absent entries stay
/// NaN. For a network declared passive, |S11| > 1 + 1e-9 adds a warning.
inline DbMetrics db_metrics(const SParameterSet& s, bool passive = true) {
    DbMetrics out;
    const int np = s.num_ports();
    for (std::size_t fi = 0; fi < s.size(); ++fi) {
        DbRow r;
        r.freq = s.freqs[fi];
        const double g = std::abs(s.s(fi, 1, 1));
        r.return_loss_db = -db20(g);
        r.vswr = vswr_from_gamma(g);
        if (np >= 2) r.insertion_loss_db = -db20(std::abs(s.s(fi, 2, 1)));
        if (np >= 3) r.isolation_db = -db20(std::abs(s.s(fi, 3, 1)));
        if (passive && g > 1.0 + 1e-9)
            out.warnings.push_back("passivity violation: |S11| = " + format_number(g) + " at " +
                                   format_number(r.freq) + " Hz");
        out.rows.push_back(r);
    }
    return out;
}

/// Matched-termination transducer gain 20 log10 |S21|.
inline double transducer_gain_db(const SMatrix& s) {
    if (s.rows() < 2) throw ArgumentError("transducer gain needs two ports");
    return db20(std::abs(s(1, 0)));
}

// ---------------------------------------------------------------------------
// Touchstone v1

/// "# HZ S RI R <z0>", one line per frequency with the matrix in row-major
/// order, except 2-ports which use the conventional S11 S21 S12 S22 order.
inline void write_touchstone(std::ostream& os, const SParameterSet& s) {
    s.validate();
    const int n = s.num_ports();
    os << "! rfsim " << n << "-port S-parameters\n";
    os << "# HZ S RI R " << format_roundtrip(s.z0) << '\n';
    for (std::size_t fi = 0; fi < s.size(); ++fi) {
        os << format_number(s.freqs[fi]);
        auto put = [&](int i, int j) {
            const cplx v = s.matrices[fi](i, j);
            os << ' ' << format_number(v.real()) << ' ' << format_number(v.imag());
        };
        if (n == 2) {
            put(0, 0);
            put(1, 0);
            put(0, 1);
            put(1, 1);
        } else {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) put(i, j);
        }
        os << '\n';
    }
}

/// Reads what write_touchstone emits plus the common v1 variants: MA/DB/RI
/// formats, HZ/KHZ/MHZ/GHZ units, '!' comments, rows wrapped over lines.
inline SParameterSet read_touchstone(std::istream& is, int num_ports) {
    if (num_ports < 1) throw ArgumentError("touchstone: port count must be >= 1");
    SParameterSet out;
    double unit = 1e9; // v1 default GHz
    std::string format = "MA";
    bool have_options = false;
    std::vector<double> values;
    std::string line;
    while (std::getline(is, line)) {
        if (auto bang = line.find('!'); bang != std::string::npos) line.erase(bang);
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;
        if (tok == "#") {
            if (have_options) continue; // only the first option line counts
            have_options = true;
            std::string t;
            while (ls >> t) {
                std::string u = t;
                for (auto& ch : u) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
                if (u == "HZ") unit = 1.0;
                else if (u == "KHZ") unit = 1e3;
                else if (u == "MHZ") unit = 1e6;
                else if (u == "GHZ") unit = 1e9;
                else if (u == "MA" || u == "DB" || u == "RI") format = u;
                else if (u == "S") continue;
                else if (u == "R") {
                    if (!(ls >> t)) throw ArgumentError("touchstone: missing reference impedance");
                    out.z0 = std::stod(t);
                } else throw ArgumentError("touchstone: unsupported option '" + t + "'");
            }
            continue;
        }
        ls.clear();
        ls.str(line);
        while (ls >> tok) {
            try {
                values.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw ArgumentError("touchstone: bad number '" + tok + "'");
            }
        }
    }
    const std::size_t per = 1 + 2 * std::size_t(num_ports) * num_ports;
    if (values.size() % per != 0) throw ArgumentError("touchstone: data count does not match port count");
    for (std::size_t k = 0; k < values.size(); k += per) {
        out.freqs.push_back(values[k] * unit);
        SMatrix m(num_ports, num_ports);
        for (int e = 0; e < num_ports * num_ports; ++e) {
            const double a = values[k + 1 + 2 * e], b = values[k + 2 + 2 * e];
            cplx v;
            if (format == "RI") v = {a, b};
            else if (format == "MA") v = std::polar(a, b * pi / 180.0);
            else v = std::polar(std::pow(10.0, a / 20.0), b * pi / 180.0);
            int i = e / num_ports, j = e % num_ports;
            if (num_ports == 2) std::swap(i, j); // S11 S21 S12 S22
            m(i, j) = v;
        }
        out.matrices.push_back(std::move(m));
    }
    out.validate();
    return out;
}

/// Per-frequency metric table. Stability columns are present for 2+ ports.
inline void write_metrics_csv(std::ostream& os, const SParameterSet& s) {
    const auto db = db_metrics(s, false);
    const bool two = s.num_ports() >= 2;
    std::optional<StabilityResult> st;
    if (two) st = stability(s);
    os << "freq_hz,s11_db,return_loss_db,vswr";
    if (two) os << ",s21_db,insertion_loss_db,kf,delta_mag";
    if (s.num_ports() >= 3) os << ",s31_db,isolation_db";
    os << '\n';
    for (std::size_t fi = 0; fi < s.size(); ++fi) {
        const auto& r = db.rows[fi];
        os << format_number(r.freq) << ',' << format_number(-r.return_loss_db) << ','
           << format_number(r.return_loss_db) << ',' << format_number(r.vswr);
        if (two)
            os << ',' << format_number(-r.insertion_loss_db) << ',' << format_number(r.insertion_loss_db) << ','
               << format_number(st->kf[fi]) << ',' << format_number(st->delta_mag[fi]);
        if (s.num_ports() >= 3) os << ',' << format_number(-r.isolation_db) << ',' << format_number(r.isolation_db);
        os << '\n';
    }
}

} // namespace rfsim
