#include <gtest/gtest.h>

#include "rfsim/engine.hpp"

#include <cmath>

using namespace rfsim;

namespace {

Circuit ckt(const std::string& text) { return elaborate(parse_netlist(text), 2.4e9); }

double rc_step_rms_error(double step) {
    const Circuit c = ckt("V1 in 0 DC 1\nR1 in out 1k\nC1 out 0 1n\n");
    const double tau = 1e-6;
    const auto w = transient(c, step, 5 * tau, true);
    const auto& v = w.signal("v(out)");
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double e = v[i] - (1.0 - std::exp(-w.time[i] / tau));
        acc += e * e;
    }
    return std::sqrt(acc / static_cast<double>(v.size()));
}

} // namespace

TEST(DcOp, ResistiveDivider) {
    const Circuit c = ckt("V1 in 0 DC 1.8\nR1 in mid 1k\nR2 mid 0 1k\n");
    const auto op = dc_operating_point(c);
    EXPECT_NEAR(op.voltage("mid"), 0.9, 1e-9);
    EXPECT_NEAR(op.voltage("in"), 1.8, 1e-12);
    // delivering source reports negative branch current; the 1e-12 S node
    // shunts add a few pA
    EXPECT_NEAR(op.current("V1"), -0.9e-3, 1e-11);
    EXPECT_EQ(op.strategy, "newton");
}

TEST(DcOp, LoneSourceIsTopologyError) {
    const Circuit c = parse_netlist("V1 a 0 DC 1\n");
    EXPECT_THROW(dc_operating_point(c), TopologyError);
}

TEST(DcOp, DiodeConnectedNmosMatchesQuadratic) {
    const Circuit c = ckt(".model nch nmos vth=0.5 kp=170u lambda=0\n"
                          "V1 vdd 0 DC 1.8\nR1 vdd d 10k\nM1 d d 0 0 nch w=10u l=1u\n");
    const auto op = dc_operating_point(c);
    // (1.8 - v)/R = beta/2 (v - vth)^2  ->  a u^2 + u - (1.8 - vth) = 0, u = v - vth
    const double beta = 170e-6 * 10.0, a = 0.5 * beta * 10e3;
    const double u = (-1.0 + std::sqrt(1.0 + 4.0 * a * 1.3)) / (2.0 * a);
    // Newton stops once updates fall below 1 uV
    EXPECT_NEAR(op.voltage("d"), 0.5 + u, 1e-6);
    EXPECT_EQ(op.regions.at("M1"), MosRegion::saturation);
}

TEST(DcOp, InductorIsShortAndCapacitorOpen) {
    const Circuit c = ckt("V1 a 0 DC 1\nR1 a b 10\nL1 b 0 1u\nC1 a 0 1p\n");
    const auto op = dc_operating_point(c);
    EXPECT_NEAR(op.current("L1"), 0.1, 1e-12);
    EXPECT_NEAR(op.voltage("b"), 0.0, 1e-12);
}

TEST(DcOp, QualityFactorResistorAppearsInSeries) {
    // 20 nH, Q=20 at 2.4 GHz -> 15.08 ohm in series with the ideal inductor
    const Circuit c = ckt("V1 a 0 DC 1\nL1 a b 20n q=20\nR1 b 0 100\n");
    const auto op = dc_operating_point(c);
    const double rq = 2 * pi * 2.4e9 * 20e-9 / 20.0;
    EXPECT_NEAR(op.voltage("b"), 100.0 / (100.0 + rq), 1e-9);
}

TEST(DcOp, PolySourceAndSwitch) {
    const Circuit c = ckt("V1 in 0 DC 0.5\nE1 out 0 in 0 a1=2 a3=-1\nR1 out 0 1k\n"
                          "VC c 0 DC 1.8\nVS s 0 DC 1\nR2 s x 5\nS1 x 0 c 0 ron=5 roff=1meg vt=0.9\n");
    const auto op = dc_operating_point(c);
    EXPECT_NEAR(op.voltage("out"), 0.875, 1e-9);
    EXPECT_NEAR(op.voltage("x"), 0.5, 1e-9);
}

TEST(DcOp, KclResidualIsSmall) {
    const Circuit c = ckt(".model nch nmos\nV1 vdd 0 DC 1.8\nVG g 0 DC 0.9\nR1 vdd d 1k\n"
                          "M1 d g s 0 nch w=20u l=0.5u\nR2 s 0 100\n");
    const auto op = dc_operating_point(c);
    MnaModel model(c);
    EXPECT_LT(model.kcl_residual(op.x, StampContext{}), 1e-9);
}

TEST(Transient, RcStepMatchesClosedForm) {
    const double tau = 1e-6;
    const double e1 = rc_step_rms_error(tau / 1000);
    const double e2 = rc_step_rms_error(tau / 2000);
    EXPECT_LT(e1, 1e-3);
    EXPECT_GE(e1 / e2, 3.5);
    EXPECT_LE(e1 / e2, 4.5);
}

TEST(Transient, LcTankRingsAtResonance) {
    const Circuit c = ckt("C1 a 0 1n ic=1\nL1 a 0 1u\n");
    const double f0 = 1.0 / (2 * pi * std::sqrt(1e-6 * 1e-9));
    const double period = 1.0 / f0;
    const auto w = transient(c, period / 1000, 10 * period, true);
    const auto& v = w.signal("v(a)");
    EXPECT_DOUBLE_EQ(v.front(), 1.0);
    std::vector<double> rising;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i - 1] < 0.0 && v[i] >= 0.0)
            rising.push_back(w.time[i - 1] + (w.time[i] - w.time[i - 1]) * (-v[i - 1]) / (v[i] - v[i - 1]));
    ASSERT_GE(rising.size(), 5u);
    const double measured = (rising.back() - rising.front()) / static_cast<double>(rising.size() - 1);
    EXPECT_LT(std::abs(1.0 / measured - f0) / f0, 1e-3);
    EXPECT_NEAR(f0, 5.033e6, 1e3);
}

TEST(Transient, SourcelessCircuitStaysAtZero) {
    const Circuit c = ckt("R1 a 0 1k\nC1 a 0 1n\nL1 a b 1u\nR2 b 0 10\n");
    const auto w = transient(c, 1e-9, 1e-7);
    for (const auto& s : w.samples)
        for (double v : s) EXPECT_EQ(v, 0.0);
}

TEST(Transient, StoredEnergyNeverGrowsInRcDischarge) {
    const Circuit c = ckt("C1 a 0 1n ic=2\nR1 a 0 1k\n");
    const auto w = transient(c, 1e-8, 5e-6, true);
    const auto& v = w.signal("v(a)");
    for (std::size_t i = 1; i < v.size(); ++i) EXPECT_LE(v[i] * v[i], v[i - 1] * v[i - 1] * (1 + 1e-12));
}

TEST(Transient, PortDriveSeesMatchedLoad) {
    const Circuit c = ckt("R1 a 0 50\n.port 1 a 0\n");
    AnalysisOptions opt;
    opt.drive = PortDrive{1, {Tone{1.0, 1e6, 0.0}}};
    const auto w = transient(c, 1e-9, 2e-6, false, opt);
    const auto& v = w.signal("v(a)");
    for (std::size_t i = 0; i < v.size(); ++i)
        EXPECT_NEAR(v[i], 0.5 * std::sin(2 * pi * 1e6 * w.time[i]), 1e-9);
}

TEST(Transient, ArgumentValidation) {
    const Circuit c = ckt("V1 a 0 DC 1\nR1 a 0 1k\n");
    EXPECT_THROW(transient(c, 2e-6, 1e-6), ArgumentError);
    EXPECT_THROW(transient(c, 0.0, 1e-6), ArgumentError);
    const auto w = transient(c, 3e-7, 1e-6);
    EXPECT_EQ(w.time.size(), 5u); // 0 .. ceil(1/0.3) steps
}

TEST(Ac, RcLowpassAtCorner) {
    const Circuit c = ckt("V1 in 0 DC 0 AC 1\nR1 in out 1k\nC1 out 0 1n\n");
    const auto op = dc_operating_point(c);
    const double fc = 1.0 / (2 * pi * 1e-6);
    const std::vector<double> f{fc};
    const auto r = ac_solve(c, op, f);
    const cplx h = r.voltage(0, "out");
    EXPECT_NEAR(std::abs(h), 1.0 / std::sqrt(2.0), 1e-9);
    EXPECT_NEAR(std::arg(h) * 180 / pi, -45.0, 1e-7);
}

TEST(Ac, SeriesCapIntoLoadAtLowFrequency) {
    const Circuit c = ckt("V1 in 0 AC 1\nC1 in out 1p\nR1 out 0 50\n");
    const auto op = dc_operating_point(c);
    const std::vector<double> f{1.0};
    const auto r = ac_solve(c, op, f);
    const cplx jwrc(0.0, 2 * pi * 50e-12);
    const cplx exact = jwrc / (1.0 + jwrc);
    EXPECT_LT(std::abs(r.voltage(0, "out") - exact) / std::abs(exact), 1e-6);
}

TEST(Ac, ResistiveDividerIsFlatAndLinear) {
    const Circuit c1 = ckt("V1 in 0 AC 1\nR1 in out 1k\nR2 out 0 3k\n");
    const Circuit c2 = ckt("V1 in 0 AC 2.5 30\nR1 in out 1k\nR2 out 0 3k\n");
    const auto f = decade_sweep(1e3, 1e9, 3);
    const auto r1 = ac_solve(c1, dc_operating_point(c1), f);
    const auto r2 = ac_solve(c2, dc_operating_point(c2), f);
    const cplx scale = std::polar(2.5, 30 * pi / 180);
    for (std::size_t i = 0; i < f.size(); ++i) {
        EXPECT_NEAR(std::abs(r1.voltage(i, "out") - 0.75), 0.0, 1e-9);
        EXPECT_LT(std::abs(r2.voltage(i, "out") - scale * r1.voltage(i, "out")), 1e-12);
    }
}

TEST(Ac, MosfetSmallSignalGain) {
    const Circuit c = ckt(".model nch nmos vth=0.5 kp=170u lambda=0\nV1 vdd 0 DC 1.8\n"
                          "VG g 0 DC 0.7 AC 1\nR1 vdd d 1k\nM1 d g 0 0 nch w=10u l=1u\n");
    MosGeometry g{10e-6, 1e-6, 1, 1};
    ModelCard m = ModelCard::default_nmos();
    m.lambda = 0;
    const double gm = mosfet_ids(m, g, 0.7, 1.0).gm;
    const auto op = dc_operating_point(c);
    ASSERT_EQ(op.regions.at("M1"), MosRegion::saturation);
    // low frequency: gate caps negligible
    const std::vector<double> f{1.0};
    const auto r = ac_solve(c, op, f);
    EXPECT_NEAR(r.voltage(0, "d").real(), -gm * 1e3, 1e-6);
}

TEST(Sweep, DecadeGrid) {
    const auto f = decade_sweep(1e8, 6e9, 10);
    EXPECT_DOUBLE_EQ(f.front(), 1e8);
    EXPECT_DOUBLE_EQ(f.back(), 6e9);
    for (std::size_t i = 1; i < f.size(); ++i) EXPECT_GT(f[i], f[i - 1]);
    EXPECT_THROW(decade_sweep(1e9, 1e8, 10), ArgumentError);
}
