#include <gtest/gtest.h>

#include "rfsim/devices.hpp"

#include <cmath>
#include <random>

using namespace rfsim;

namespace {

ModelCard card(double lambda) {
    ModelCard m = ModelCard::default_nmos();
    m.kp = 170e-6;
    m.vth = 0.5;
    m.lambda = lambda;
    return m;
}

MosGeometry aspect100() {
    MosGeometry g;
    g.w_finger = 100e-6;
    g.l = 1e-6;
    return g;
}

} // namespace

TEST(Mosfet, CutoffBoundary) {
    const auto e = mosfet_ids(card(0.05), aspect100(), 0.5, 1.0);
    EXPECT_EQ(e.ids, 0.0);
    EXPECT_EQ(e.gm, 0.0);
    EXPECT_EQ(e.region, MosRegion::cutoff);
}

TEST(Mosfet, HandEvaluatedSquareLaw) {
    // saturation: 0.5 * 170e-6 * 100 * 0.5^2
    const auto sat = mosfet_ids(card(0.0), aspect100(), 1.0, 1.0);
    EXPECT_NEAR(sat.ids, 2.125e-3, 1e-15);
    EXPECT_EQ(sat.region, MosRegion::saturation);
    // triode: 170e-6 * 100 * (0.5*0.1 - 0.1^2/2)
    const auto tri = mosfet_ids(card(0.0), aspect100(), 1.0, 0.1);
    EXPECT_NEAR(tri.ids, 0.765e-3, 1e-15);
    EXPECT_EQ(tri.region, MosRegion::triode);
}

TEST(Mosfet, EffectiveWidthUsesFingersAndMultiplier) {
    MosGeometry g{0.3e-6, 0.6e-6, 66, 24};
    EXPECT_NEAR(g.w_eff(), 475.2e-6, 1e-18);
    MosGeometry q3{0.8e-6, 0.6e-6, 4, 2};
    EXPECT_NEAR(q3.w_eff(), 6.4e-6, 1e-18);
}

TEST(Mosfet, GradientsMatchCentralDifferences) {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> vgs_dist(-0.5, 2.0), vds_dist(-1.8, 1.8), lam(0.0, 0.2);
    const MosGeometry geom{0.3e-6, 0.6e-6, 66, 24};
    const double h = 1e-7;
    int checked = 0;
    while (checked < 100) {
        ModelCard m = card(lam(rng));
        if (checked % 4 == 3) m.polarity = Polarity::pmos;
        const double vgs = vgs_dist(rng) * (m.polarity == Polarity::pmos ? -1.0 : 1.0);
        const double vds = vds_dist(rng);
        // stay away from region boundaries (both orientations of the channel)
        const double s = m.polarity == Polarity::pmos ? -1.0 : 1.0;
        const double vgsn = s * vgs, vdsn = s * vds;
        const double vov_fwd = vgsn - m.vth, vov_rev = vgsn - vdsn - m.vth;
        if (std::abs(vov_fwd) < 1e-3 || std::abs(vov_rev) < 1e-3 || std::abs(vdsn) < 1e-3 ||
            std::abs(vdsn - vov_fwd) < 1e-3 || std::abs(-vdsn - vov_rev) < 1e-3)
            continue;
        const auto e = mosfet_ids(m, geom, vgs, vds);
        const double gm_fd =
            (mosfet_ids(m, geom, vgs + h, vds).ids - mosfet_ids(m, geom, vgs - h, vds).ids) / (2 * h);
        const double gds_fd =
            (mosfet_ids(m, geom, vgs, vds + h).ids - mosfet_ids(m, geom, vgs, vds - h).ids) / (2 * h);
        // relative to the larger of the two conductances so that zero partials
        // (cutoff, lambda = 0 in saturation) are compared on the device's scale
        const double scale = std::max({std::abs(e.gm), std::abs(e.gds), 1e-12});
        EXPECT_LT(std::abs(gm_fd - e.gm) / scale, 1e-6) << "vgs=" << vgs << " vds=" << vds;
        EXPECT_LT(std::abs(gds_fd - e.gds) / scale, 1e-6) << "vgs=" << vgs << " vds=" << vds;
        ++checked;
    }
}

TEST(Mosfet, ContinuousAcrossRegionBoundaries) {
    const MosGeometry geom = aspect100();
    const double d = 1e-9;
    for (double lambda : {0.0, 0.05, 0.2}) {
        const ModelCard m = card(lambda);
        for (double vov : {0.1, 0.5, 1.2}) {
            const double vgs = m.vth + vov;
            // triode/saturation edge in vds; a jump would survive subtracting the
            // first-order change over the 2*delta interval
            const auto lo = mosfet_ids(m, geom, vgs, vov - d);
            const auto hi = mosfet_ids(m, geom, vgs, vov + d);
            const double slope_part = d * (std::abs(lo.gds) + std::abs(hi.gds));
            EXPECT_LE(std::abs(hi.ids - lo.ids) - slope_part, 1e-12 * std::max(1.0, std::abs(hi.ids)));
            // source/drain swap edge at vds = 0
            const auto neg = mosfet_ids(m, geom, vgs, -d);
            const auto pos = mosfet_ids(m, geom, vgs, d);
            EXPECT_LE(std::abs(pos.ids - neg.ids) - d * (std::abs(neg.gds) + std::abs(pos.gds)), 1e-12);
        }
        // cutoff edge: current vanishes quadratically
        const auto above = mosfet_ids(m, geom, m.vth + d, 1.0);
        EXPECT_LE(std::abs(above.ids), 1e-12);
    }
}

TEST(Mosfet, NonNegativeCurrentInFirstQuadrant) {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> vov(0.0, 2.0), vds(0.0, 3.0), lam(0.0, 0.3);
    for (int i = 0; i < 1000; ++i) {
        const ModelCard m = card(lam(rng));
        EXPECT_GE(mosfet_ids(m, aspect100(), m.vth + vov(rng), vds(rng)).ids, 0.0);
    }
}

TEST(Mosfet, PmosMirrorsNmos) {
    ModelCard n = card(0.05);
    ModelCard p = n;
    p.polarity = Polarity::pmos;
    for (double vgs : {-1.5, -0.8, 0.2}) {
        for (double vds : {-1.2, -0.2, 0.3}) {
            const auto ep = mosfet_ids(p, aspect100(), vgs, vds);
            const auto en = mosfet_ids(n, aspect100(), -vgs, -vds);
            EXPECT_DOUBLE_EQ(ep.ids, -en.ids);
            EXPECT_DOUBLE_EQ(ep.gm, en.gm);
            EXPECT_DOUBLE_EQ(ep.gds, en.gds);
        }
    }
}

TEST(MosCharges, LinearInWidthAndVoltage) {
    ModelCard m = ModelCard::default_nmos();
    const MosGeometry q1{0.3e-6, 0.6e-6, 66, 24};
    // 1 fF/um * 475.2 um * 1 V
    EXPECT_NEAR(mosfet_charges(m, q1, 1.0, 0.0).qgs, 475.2e-15, 1e-24);
    MosGeometry doubled = q1;
    doubled.multiplier *= 2;
    const auto a = mosfet_charges(m, q1, 0.7, -0.4);
    const auto b = mosfet_charges(m, doubled, 0.7, -0.4);
    EXPECT_NEAR(b.qgs, 2 * a.qgs, 1e-27);
    EXPECT_NEAR(b.qgd, 2 * a.qgd, 1e-27);
    m.cgs_per_width = 0.0;
    EXPECT_EQ(mosfet_charges(m, q1, 1.3, 0.2).qgs, 0.0);
}

TEST(Switch, OnOffAndMidpoint) {
    SwitchModel s{5.0, 1e6, 0.9, 10e-3};
    EXPECT_DOUBLE_EQ(switch_conductance(s, 1.9).g, 0.2);
    EXPECT_DOUBLE_EQ(switch_conductance(s, -0.1).g, 1e-6);
    // log-space midpoint of the ramp: sqrt(gon*goff)
    EXPECT_NEAR(switch_conductance(s, 0.9).g, std::sqrt(0.2 * 1e-6), 1e-15);
}

TEST(Switch, MonotoneWithMatchingDerivative) {
    SwitchModel s{5.0, 1e6, 0.9, 10e-3};
    double prev = 0.0;
    for (int i = 0; i <= 4000; ++i) {
        const double v = 0.88 + 4e-2 * i / 4000.0;
        const auto e = switch_conductance(s, v);
        EXPECT_GE(e.g, prev);
        prev = e.g;
        const double h = 1e-9;
        if (std::abs(v - 0.895) > 1e-6 && std::abs(v - 0.905) > 1e-6) {
            const double fd = (switch_conductance(s, v + h).g - switch_conductance(s, v - h).g) / (2 * h);
            EXPECT_NEAR(fd, e.dg, 1e-5 * std::max(1.0, std::abs(e.dg)));
        }
    }
}

TEST(Poly, ValueAndSlope) {
    PolyCoefficients p{10.0, 0.0, -1.0};
    EXPECT_DOUBLE_EQ(p.value(2.0), 12.0);
    EXPECT_DOUBLE_EQ(p.slope(2.0), -2.0);
}
