#include <gtest/gtest.h>

#include "rfsim/bench.hpp"

#include <array>
#include <complex>
#include <fstream>
#include <sstream>

using namespace rfsim;
using namespace rfsim::bench;

namespace {

std::string slurp(const std::string& name) {
    std::ifstream in(std::string(RFSIM_ASSET_DIR) + "/" + name, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Hand-built nodal model of the SPDT at one frequency: node admittances for
// p1, p2, p3 with every port terminated in 50 ohm; returns S_k1.
cplx spdt_s(double f, bool on, int k) {
    const double z0 = 50.0, ron = 5.0, roff = 1e6, coff = 50e-15;
    const cplx yc(0.0, 2 * pi * f * coff);
    const cplx y_on = 1.0 / ron + yc, y_off = 1.0 / roff + yc;
    const cplx ya = on ? y_on : y_off;  // SA, SPB
    const cplx yb = on ? y_off : y_on;  // SB, SPA
    std::array<std::array<cplx, 4>, 3> m{};
    const double g0 = 1.0 / z0;
    m[0] = {g0 + ya + yb, -ya, -yb, 0.0};
    m[1] = {-ya, g0 + ya + yb, 0.0, 0.0};
    m[2] = {-yb, 0.0, g0 + yb + ya, 0.0};
    // Norton drive: open-circuit 2 sqrt(z0) behind z0 -> 2/sqrt(z0) amps
    m[0][3] = 2.0 / std::sqrt(z0);
    for (int c = 0; c < 3; ++c)
        for (int r = c + 1; r < 3; ++r) {
            const cplx f = m[r][c] / m[c][c];
            for (int j = c; j < 4; ++j) m[r][j] -= f * m[c][j];
        }
    std::array<cplx, 3> v{};
    for (int r = 2; r >= 0; --r) {
        cplx s = m[r][3];
        for (int j = r + 1; j < 3; ++j) s -= m[r][j] * v[j];
        v[r] = s / m[r][r];
    }
    // b = (V - z0 I) / (2 sqrt z0), I into the port = -V/z0 on undriven ports
    if (k == 1) return (v[0] - z0 * (2.0 / std::sqrt(z0) - v[0] / z0)) / (2 * std::sqrt(z0));
    return v[k - 1] / std::sqrt(z0);
}

} // namespace

TEST(Assets, EmbeddedTextsMatchShippedFiles) {
    EXPECT_EQ(slurp("pa.cir"), std::string(pa_text));
    EXPECT_EQ(slurp("switch_on.cir"), std::string(switch_on_text));
    EXPECT_EQ(slurp("switch_off.cir"), std::string(switch_off_text));
}

TEST(PaNetlist, ElementInventory) {
    const Circuit c = pa_netlist();
    EXPECT_EQ(c.count(ElementKind::mosfet), 3u);
    EXPECT_EQ(c.count(ElementKind::inductor), 3u);
    EXPECT_EQ(c.count(ElementKind::capacitor), 3u);
    EXPECT_EQ(c.count(ElementKind::resistor), 2u);
    for (const auto& e : c.elements) {
        if (e.kind != ElementKind::inductor) continue;
        EXPECT_EQ(e.param("q", 0.0), 20.0) << e.name;
    }
    EXPECT_DOUBLE_EQ(c.element("L1").value, 36e-9);
    EXPECT_DOUBLE_EQ(c.element("L2").value, 20e-9);
    EXPECT_DOUBLE_EQ(c.element("L3").value, 20e-9);
    EXPECT_DOUBLE_EQ(c.element("C1").value, 240e-15);
    EXPECT_DOUBLE_EQ(c.element("C2").value, 600e-15);
    EXPECT_DOUBLE_EQ(c.element("C3").value, 11e-12);
    EXPECT_DOUBLE_EQ(c.element("R1").value, 10.5);
    EXPECT_DOUBLE_EQ(c.element("R2").value, 3.8e3);
    EXPECT_NEAR(mos_geometry(c.element("M1")).w_eff(), 0.3e-6 * 66 * 24, 1e-15);
    EXPECT_NEAR(mos_geometry(c.element("M2")).w_eff(), 475.2e-6, 1e-15);
    EXPECT_NEAR(mos_geometry(c.element("M3")).w_eff(), 0.8e-6 * 4 * 2, 1e-15);
    EXPECT_EQ(c.ports.size(), 2u);

    const Circuit e = elaborate(c, 2.4e9);
    EXPECT_EQ(e.count(ElementKind::resistor), 5u);
}

TEST(PaNetlist, CascodeDeviceBiasedInSaturationAndStable) {
    const Circuit c = elaborate(pa_netlist(), 2.4e9);
    const auto op = dc_operating_point(c);
    EXPECT_EQ(op.regions.at("M2"), MosRegion::saturation);
    EXPECT_GT(op.current("VDD") * -1.0, 0.0);
    std::vector<double> f;
    for (int i = 1; i <= 60; ++i) f.push_back(i * 1e8);
    const auto st = stability(extract_sparams(c, f, &op));
    EXPECT_GT(st.kf_min(), 1.0);
}

TEST(SwitchNetlist, StatesDifferOnlyInControlValues) {
    Circuit on = switch_netlist(SwitchState::on);
    Circuit off = switch_netlist(SwitchState::off);
    EXPECT_FALSE(on == off);
    EXPECT_EQ(on.element("VCTL").source.dc, 1.8);
    EXPECT_EQ(on.element("VCTLB").source.dc, 0.0);
    for (auto* c : {&on, &off})
        for (auto& e : c->elements)
            if (e.name == "VCTL" || e.name == "VCTLB") e.source.dc = 0.0;
    EXPECT_TRUE(on == off);
}

TEST(SwitchNetlist, OnStateLowFrequencyInsertionLoss) {
    const Circuit c = elaborate(switch_netlist(SwitchState::on), 2.4e9);
    const auto op = dc_operating_point(c);
    const std::vector<double> f{1e3};
    const auto s = extract_sparams(c, f, &op);
    // series ron between two 50 ohm ports
    EXPECT_NEAR(-db20(std::abs(s.s(0, 2, 1))), -20 * std::log10(100.0 / 105.0), 1e-3);
    EXPECT_NEAR(-20 * std::log10(100.0 / 105.0), 0.424, 5e-4);
}

TEST(SwitchNetlist, MatchesHandNodalModel) {
    for (auto state : {SwitchState::on, SwitchState::off}) {
        const Circuit c = elaborate(switch_netlist(state), 2.4e9);
        const auto op = dc_operating_point(c);
        const std::vector<double> f{2.4e9, 5e9};
        const auto s = extract_sparams(c, f, &op);
        for (std::size_t i = 0; i < f.size(); ++i)
            for (int k = 1; k <= 3; ++k) {
                const cplx want = spdt_s(f[i], state == SwitchState::on, k);
                EXPECT_LT(std::abs(s.s(i, k, 1) - want), 1e-6) << f[i] << " S" << k << "1";
            }
    }
    const double iso = -db20(std::abs(spdt_s(2.4e9, true, 3)));
    EXPECT_GT(iso, 40.0);
    EXPECT_LT(-db20(std::abs(spdt_s(2.4e9, true, 2))), 1.5);
}

TEST(Verdicts, PureFunctionOfMeasurementsAndTargets) {
    Measurements m;
    m.pout_dbm = 15.0;
    m.kf_min = 1.0;
    m.s11_db = -12.0;
    SpecTargets t;
    const auto a = evaluate(m, t);
    const auto b = evaluate(m, t);
    ASSERT_EQ(a.size(), 7u);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].verdict, b[i].verdict);
    EXPECT_EQ(a[0].verdict, Verdict::pass);          // 15 >= 15
    EXPECT_EQ(a[1].verdict, Verdict::not_evaluated); // gain not measured
    EXPECT_EQ(a[2].verdict, Verdict::fail);          // kf must exceed 1
    EXPECT_EQ(a[3].verdict, Verdict::pass);
    t.s11_db.reset();
    EXPECT_EQ(evaluate(m, t)[3].verdict, Verdict::not_evaluated);
    EXPECT_EQ(judge(std::nan(""), 1.0, Compare::at_least), Verdict::not_evaluated);
    t.gain_db = std::numeric_limits<double>::infinity();
    EXPECT_THROW(t.validate(), ArgumentError);
}

TEST(Harness, BothReportsWithReferences) {
    const auto reports = run_harness(Which::both);
    ASSERT_EQ(reports.size(), 2u);
    const auto& pa = reports[0];
    const auto& sw = reports[1];
    EXPECT_EQ(pa.name, "pa");
    EXPECT_EQ(sw.name, "switch");
    EXPECT_GT(*pa.measured.kf_min, 1.0);
    EXPECT_NE(std::find(pa.regions.begin(), pa.regions.end(), std::pair<std::string, std::string>{"M2", "saturation"}),
              pa.regions.end());
    EXPECT_EQ(pa.rows[2].verdict, Verdict::pass);
    EXPECT_EQ(pa.rows[6].verdict, Verdict::not_evaluated);
    EXPECT_EQ(sw.rows[4].verdict, Verdict::pass);
    EXPECT_EQ(sw.rows[5].verdict, Verdict::pass);
    EXPECT_LT(*sw.measured.insertion_db, 1.5);
    EXPECT_GT(*sw.measured.isolation_db, 40.0);

    const std::string t = format_table(pa) + format_table(sw);
    for (const char* s : {"17 ", "16 ", "94 ", "2.061", "1.36", "58.5", "not-evaluated"})
        EXPECT_NE(t.find(s), std::string::npos) << s;
    const auto j = to_json(sw);
    EXPECT_EQ(j["references"][0]["value"], 1.36);
    EXPECT_EQ(j["references"][1]["value"], 58.5);
    EXPECT_EQ(to_json(pa).dump(), to_json(run_pa()).dump());
}

TEST(Harness, StageErrorsNameTheStage) {
    try {
        (void)bench::detail::stage("pss", []() -> int { throw SettlingError("no", {}); });
        FAIL();
    } catch (const StageError& e) {
        EXPECT_EQ(e.stage(), "pss");
    }
    EXPECT_THROW(parse_which("amp"), ArgumentError);
    EXPECT_EQ(parse_which("switch"), Which::rf_switch);
}
