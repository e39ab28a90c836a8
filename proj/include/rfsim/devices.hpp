#pragma once

// Nonlinear device evaluation: square-law MOSFET, control-voltage switch and
// the memoryless polynomial test source. All functions are pure.

#include "rfsim/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rfsim {

enum class Polarity { nmos, pmos };

/// Level-1 style MOSFET parameters. `vth` is a magnitude for both
/// polarities; pmos devices are evaluated on negated terminal voltages.
struct ModelCard {
    std::string name = "default";
    Polarity polarity = Polarity::nmos;
    double vth = 0.5;             // V
    double kp = 170e-6;           // A/V^2
    double lambda = 0.05;         // 1/V
    double cgs_per_width = 1e-9;  // F/m  (1 fF/um)
    double cgd_per_width = 0.3e-9;

    /// Representative 0.18 um card used when the netlist does not override
    /// a parameter.
    static ModelCard default_nmos(std::string name = "default") {
        ModelCard card;
        card.name = std::move(name);
        return card;
    }

    void validate() const {
        if (!(kp > 0.0) || !std::isfinite(kp))
            throw ArgumentError("model " + name + ": kp must be > 0");
        if (!(lambda >= 0.0) || !std::isfinite(lambda))
            throw ArgumentError("model " + name + ": lambda must be >= 0");
        if (!(cgs_per_width >= 0.0) || !(cgd_per_width >= 0.0))
            throw ArgumentError("model " + name + ": capacitances must be >= 0");
        if (!std::isfinite(vth)) throw ArgumentError("model " + name + ": vth must be finite");
    }

    friend bool operator==(const ModelCard&, const ModelCard&) = default;
};

/// Multi-finger geometry; effective width is finger width x fingers x multiplier.
struct MosGeometry {
    double w_finger = 1e-6;
    double l = 1e-6;
    double fingers = 1;
    double multiplier = 1;

    [[nodiscard]] double w_eff() const { return w_finger * fingers * multiplier; }
    [[nodiscard]] double aspect() const { return w_eff() / l; }

    void validate() const {
        if (!(w_finger > 0.0) || !(l > 0.0) || !(fingers > 0.0) || !(multiplier > 0.0))
            throw ArgumentError("mosfet geometry values must be strictly positive");
    }
};

enum class MosRegion { cutoff, triode, saturation };

inline const char* to_string(MosRegion r) {
    switch (r) {
    case MosRegion::cutoff: return "cutoff";
    case MosRegion::triode: return "triode";
    case MosRegion::saturation: return "saturation";
    }
    return "?";
}

/// Drain current (drain -> source, through the channel) with its partials
/// with respect to vgs and vds, all in the device's own terminal coordinates.
struct MosEvaluation {
    double ids = 0.0;
    double gm = 0.0;
    double gds = 0.0;
    MosRegion region = MosRegion::cutoff;
};

namespace detail {

// nmos square law for vds >= 0
inline MosEvaluation square_law_forward(double beta, double vth, double lambda, double vgs,
                                        double vds) {
    MosEvaluation e;
    const double vov = vgs - vth;
    if (vov <= 0.0) return e;
    const double clm = 1.0 + lambda * vds;
    if (vds < vov) {
        const double core = vov * vds - 0.5 * vds * vds;
        e.region = MosRegion::triode;
        e.ids = beta * core * clm;
        e.gm = beta * vds * clm;
        e.gds = beta * ((vov - vds) * clm + core * lambda);
    } else {
        const double core = 0.5 * vov * vov;
        e.region = MosRegion::saturation;
        e.ids = beta * core * clm;
        e.gm = beta * vov * clm;
        e.gds = beta * core * lambda;
    }
    return e;
}

// Source and drain are interchangeable; for vds < 0 the roles swap.
inline MosEvaluation square_law(double beta, double vth, double lambda, double vgs, double vds) {
    if (vds >= 0.0) return square_law_forward(beta, vth, lambda, vgs, vds);
    // ids(vgs, vds) = -f(vgs - vds, -vds)
    const MosEvaluation r = square_law_forward(beta, vth, lambda, vgs - vds, -vds);
    MosEvaluation e;
    e.region = r.region;
    e.ids = -r.ids;
    e.gm = -r.gm;
    e.gds = r.gm + r.gds;
    return e;
}

} // namespace detail

/// Square-law drain current with channel-length modulation.
/// cutoff:     vgs <= vth                 ids = 0
/// triode:     vds <  vgs - vth           ids = kp W/L ((vgs-vth) vds - vds^2/2)(1 + lambda vds)
/// saturation: otherwise                  ids = kp/2 W/L (vgs-vth)^2 (1 + lambda vds)
/// gm and gds are the exact partials of the same piecewise expression.
inline MosEvaluation mosfet_ids(const ModelCard& model, const MosGeometry& geom, double vgs,
                                double vds) {
    const double beta = model.kp * geom.aspect();
    if (model.polarity == Polarity::nmos)
        return detail::square_law(beta, model.vth, model.lambda, vgs, vds);
    // pmos: evaluate on negated voltages and negate the current; the partials
    // keep their sign (d(-f(-x))/dx = f'(-x)).
    MosEvaluation e = detail::square_law(beta, model.vth, model.lambda, -vgs, -vds);
    e.ids = -e.ids;
    return e;
}

struct MosCapacitances {
    double cgs = 0.0;
    double cgd = 0.0;
};

inline MosCapacitances mosfet_capacitances(const ModelCard& model, const MosGeometry& geom) {
    return {model.cgs_per_width * geom.w_eff(), model.cgd_per_width * geom.w_eff()};
}

struct MosCharges {
    double qgs = 0.0;
    double qgd = 0.0;
};

/// Linear gate charges q = C v.
inline MosCharges mosfet_charges(const ModelCard& model, const MosGeometry& geom, double vgs,
                                 double vgd) {
    const auto c = mosfet_capacitances(model, geom);
    return {c.cgs * vgs, c.cgd * vgd};
}

/// Voltage-controlled two-state resistor.
struct SwitchModel {
    double ron = 1.0;
    double roff = 1e6;
    double vthresh = 0.5;
    double width = 10e-3; // control-voltage span of the on/off transition

    void validate() const {
        if (!(ron > 0.0) || !(roff > ron) || !std::isfinite(roff))
            throw ArgumentError("switch requires 0 < ron < roff");
        if (!(width > 0.0)) throw ArgumentError("switch transition width must be > 0");
    }
};

struct SwitchEvaluation {
    double g = 0.0;  // S
    double dg = 0.0; // dG/dVctrl
};

/// Conductance ramps between 1/roff and 1/ron as vctrl crosses vthresh.
/// Inside the window vthresh +- width/2 the log of the conductance follows a
/// cubic smoothstep, so the midpoint is the geometric mean of the two states
/// and the derivative is continuous at both ends.
inline SwitchEvaluation switch_conductance(const SwitchModel& model, double vctrl) {
    const double g_on = 1.0 / model.ron;
    const double g_off = 1.0 / model.roff;
    const double u = (vctrl - (model.vthresh - 0.5 * model.width)) / model.width;
    if (u <= 0.0) return {g_off, 0.0};
    if (u >= 1.0) return {g_on, 0.0};
    const double s = u * u * (3.0 - 2.0 * u);
    const double ds = 6.0 * u * (1.0 - u) / model.width;
    const double log_ratio = std::log(g_on / g_off);
    const double g = g_off * std::exp(s * log_ratio);
    return {g, g * log_ratio * ds};
}

/// y = a1 x + a2 x^2 + a3 x^3, the test-only memoryless nonlinearity.
struct PolyCoefficients {
    double a1 = 1.0;
    double a2 = 0.0;
    double a3 = 0.0;

    [[nodiscard]] double value(double x) const { return x * (a1 + x * (a2 + x * a3)); }
    [[nodiscard]] double slope(double x) const { return a1 + x * (2.0 * a2 + 3.0 * a3 * x); }
};

} // namespace rfsim
