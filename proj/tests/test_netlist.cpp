#include <gtest/gtest.h>

#include "rfsim/netlist.hpp"

#include <random>

using namespace rfsim;

namespace {

ParseErrorKind parse_kind(const std::string& text, int* line = nullptr) {
    try {
        parse_netlist(text);
    } catch (const ParseError& e) {
        if (line) *line = e.line();
        return e.kind();
    }
    ADD_FAILURE() << "no parse error for:\n" << text;
    return ParseErrorKind::bad_directive;
}

// Driver-stage inventory: three devices, three Q=20 inductors, three
// capacitors, two resistors.
const char* kPaComponents = R"(
.title driver stage
.model nch nmos vth=0.5 kp=170u lambda=0.05
VDD vdd 0 DC 1.8
VB vb 0 DC 0.7
VG2 vg2 0 DC 1.5
VG3 vg3 0 DC 1.6
M1 x g1 0 0 nch w=0.3u l=0.6u f=66 m=24
M2 d vg2 x 0 nch w=0.3u l=0.6u f=66 m=24
M3 n3 vg3 x 0 nch w=0.8u l=0.6u f=4 m=2
L1 vdd d 36nH q=20
L2 d o1 20nH q=20
L3 vb g1 20nH q=20
C1 n3 x 240fH
C2 o1 out 600fH
C3 in n1 11pF
R1 n1 g1 10.5ohm
R2 vdd n3 3.8Kohm
.port 1 in 0
.port 2 out gnd
)";

} // namespace

TEST(ParseNetlist, MinimalResistor) {
    const Circuit c = parse_netlist("R1 in out 50");
    ASSERT_EQ(c.elements.size(), 1u);
    EXPECT_EQ(c.elements[0].kind, ElementKind::resistor);
    EXPECT_DOUBLE_EQ(c.elements[0].value, 50.0);
    EXPECT_EQ(c.num_nodes() - 1, 2); // two non-ground nodes
}

TEST(ParseNetlist, PaComponentInventory) {
    const Circuit c = parse_netlist(kPaComponents);
    EXPECT_EQ(c.count(ElementKind::mosfet), 3u);
    EXPECT_EQ(c.count(ElementKind::inductor), 3u);
    EXPECT_EQ(c.count(ElementKind::capacitor), 3u);
    EXPECT_EQ(c.count(ElementKind::resistor), 2u);
    EXPECT_EQ(c.title, "driver stage");
    EXPECT_DOUBLE_EQ(c.element("C1").value, 240e-15);
    EXPECT_DOUBLE_EQ(c.element("L1").params.at("q"), 20.0);
    const auto g = mos_geometry(c.element("M1"));
    EXPECT_NEAR(g.w_eff(), 475.2e-6, 1e-18);
    ASSERT_EQ(c.ports.size(), 2u);
    EXPECT_EQ(c.ports[1].minus, 0);
}

TEST(ParseNetlist, GroundAliasesUnify) {
    const Circuit c = parse_netlist("R1 a 0 1k\nR2 a gnd 1k\nR3 a GND 1k");
    EXPECT_EQ(c.num_nodes(), 2);
    EXPECT_EQ(c.elements[1].nodes[1], 0);
    EXPECT_EQ(c.elements[2].nodes[1], 0);
}

TEST(ParseNetlist, CommentsAndContinuations) {
    const Circuit c = parse_netlist("* header\n  \nV1 a 0\n+ DC 1.8\n* mid comment\nR1 a 0\n+ 1k\n");
    ASSERT_EQ(c.elements.size(), 2u);
    EXPECT_DOUBLE_EQ(c.elements[0].source.dc, 1.8);
    EXPECT_DOUBLE_EQ(c.elements[1].value, 1000.0);
}

TEST(ParseNetlist, SourceWaveforms) {
    const Circuit c = parse_netlist(
        "V1 a 0 SIN(0.5 1 2.4g 90) AC 1 45\nV2 b 0 PULSE(0 1.8 0 1p 1p 200p 416.6p)\nI1 a b 1m\n"
        "R1 a 0 1\nR2 b 0 1");
    const auto& s = c.element("V1").source;
    ASSERT_TRUE(s.sine.has_value());
    EXPECT_DOUBLE_EQ(s.sine->freq, 2.4e9);
    EXPECT_DOUBLE_EQ(s.sine->phase_deg, 90.0);
    EXPECT_DOUBLE_EQ(s.ac_mag, 1.0);
    EXPECT_DOUBLE_EQ(s.ac_phase_deg, 45.0);
    EXPECT_NEAR(s.value(0.0), 1.5, 1e-12);
    const auto& p = c.element("V2").source;
    ASSERT_TRUE(p.pulse.has_value());
    EXPECT_DOUBLE_EQ(p.value(100e-12), 1.8);
    EXPECT_DOUBLE_EQ(c.element("I1").source.dc, 1e-3);
}

TEST(ParseNetlist, Directives) {
    const Circuit c = parse_netlist(
        "R1 a 0 1k\nC1 a 0 1u\n.op\n.tran 10u 5m uic\n.ac dec 10 1 1meg\n.sparam dec 5 100meg 6g\n"
        ".pss 2.4g periods=50 tol=1m\n.twotone 2.4g 2.41g -30,-25,-20\n");
    ASSERT_EQ(c.directives.size(), 6u);
    EXPECT_EQ(c.directives[1].kind, DirectiveKind::tran);
    EXPECT_DOUBLE_EQ(c.directives[1].param("uic", 0), 1.0);
    EXPECT_DOUBLE_EQ(c.directives[2].param("fstop", 0), 1e6);
    EXPECT_DOUBLE_EQ(c.directives[4].param("periods", 0), 50.0);
    EXPECT_EQ(c.directives[5].levels, (std::vector<double>{-30, -25, -20}));
}

TEST(ParseNetlist, DirectiveValidation) {
    EXPECT_EQ(parse_kind("R1 a 0 1\n.tran 1m 1u"), ParseErrorKind::bad_directive);
    EXPECT_EQ(parse_kind("R1 a 0 1\n.ac dec 10 1meg 1k"), ParseErrorKind::bad_directive);
    EXPECT_EQ(parse_kind("R1 a 0 1\n.ac dec 0 1 1k"), ParseErrorKind::bad_directive);
    EXPECT_EQ(parse_kind("R1 a 0 1\n.bogus"), ParseErrorKind::bad_directive);
    EXPECT_EQ(parse_kind("R1 a 0 1\n.port 1 a 0 z0=-5"), ParseErrorKind::bad_port);
    EXPECT_EQ(parse_kind("R1 a 0 1\n.port 2 a 0"), ParseErrorKind::bad_port);
}

TEST(ParseNetlist, DistinctErrorsCarryLineNumbers) {
    int line = 0;
    EXPECT_EQ(parse_kind("R1 a b 50\nR1 b c 50", &line), ParseErrorKind::duplicate_name);
    EXPECT_EQ(line, 2);
    EXPECT_EQ(parse_kind("R1 a 0 1\nQ1 a b c", &line), ParseErrorKind::unknown_element);
    EXPECT_EQ(line, 2);
    EXPECT_EQ(parse_kind("R1 a 0", &line), ParseErrorKind::arity_mismatch);
    EXPECT_EQ(line, 1);
    EXPECT_EQ(parse_kind("R1 a 0 1\n\nM1 a a 0 0 nfet w=1u l=1u", &line), ParseErrorKind::missing_model);
    EXPECT_EQ(line, 3);
    EXPECT_EQ(parse_kind("R1 a 0 0"), ParseErrorKind::invalid_value);
    EXPECT_EQ(parse_kind("L1 a 0 1n q=0"), ParseErrorKind::invalid_value);
    EXPECT_EQ(parse_kind("R1 a 0 1k foo=2"), ParseErrorKind::unknown_parameter);
    EXPECT_EQ(parse_kind("S1 a 0 c 0 ron=10 roff=1"), ParseErrorKind::invalid_value);
}

TEST(ParseNetlist, ValueErrorReportsColumnInLine) {
    try {
        parse_netlist("R1 a 0 1k\nR2 a 0 12x");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.kind(), ParseErrorKind::unknown_suffix);
        EXPECT_EQ(e.line(), 2);
        EXPECT_EQ(e.column(), 10);
    }
}

TEST(Serialize, ParseSerializeParseIsAFixedPoint) {
    const Circuit first = parse_netlist(kPaComponents);
    const std::string text = serialize(first);
    const Circuit second = parse_netlist(text);
    EXPECT_TRUE(first == second);
    EXPECT_EQ(serialize(second), text);
}

TEST(Serialize, RandomCircuitsRoundTrip) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> mag(-15.0, 6.0);
    std::uniform_int_distribution<int> node(0, 6), kind(0, 4);
    for (int trial = 0; trial < 50; ++trial) {
        std::string text = ".title random " + std::to_string(trial) + "\n";
        for (int i = 0; i < 12; ++i) {
            const int a = node(rng);
            int b = node(rng);
            if (b == a) b = (a + 1) % 7;
            const double v = std::pow(10.0, mag(rng)) * 1.2345678901234;
            const std::string nodes = " n" + std::to_string(a) + " n" + std::to_string(b) + " ";
            switch (kind(rng)) {
            case 0: text += "R" + std::to_string(i) + nodes + format_roundtrip(v) + "\n"; break;
            case 1: text += "L" + std::to_string(i) + nodes + format_roundtrip(v) + " q=12.5\n"; break;
            case 2: text += "C" + std::to_string(i) + nodes + format_roundtrip(v) + " ic=0.25\n"; break;
            case 3: text += "V" + std::to_string(i) + nodes + "SIN(0 " + format_roundtrip(v) + " 1e6 12) AC 1\n"; break;
            default: text += "I" + std::to_string(i) + nodes + "PULSE(0 1 1n 1n 1n 5n 20n)\n"; break;
            }
        }
        text += ".port 1 n1 0 z0=75\n.tran 1n 1u\n.pss 1meg tol=1e-4\n";
        const Circuit a = parse_netlist(text);
        const Circuit b = parse_netlist(serialize(a));
        EXPECT_TRUE(a == b) << text;
        EXPECT_EQ(serialize(a), serialize(b));
    }
}

TEST(Elaborate, FiniteQInductorBecomesSeriesLoss) {
    const Circuit c = parse_netlist("V1 a 0 1\nL1 a b 20n q=20\nR1 b 0 50");
    const Circuit e = elaborate(c, 2.4e9);
    const Element* loss = e.find_element("RQ#L1");
    ASSERT_NE(loss, nullptr);
    // R = 2 pi f L / Q by hand: 2*pi*2.4e9*20e-9/20 = 15.0796447...
    EXPECT_NEAR(loss->value, 15.079644737231007, 1e-9);
    EXPECT_FALSE(e.element("L1").has_param("q"));
    EXPECT_EQ(e.elements.size(), c.elements.size() + 1);
}

TEST(Elaborate, IdealInductorUnchanged) {
    const Circuit c = parse_netlist("V1 a 0 1\nL1 a b 20n\nR1 b 0 50");
    const Circuit e = elaborate(c, 2.4e9);
    EXPECT_EQ(e.elements.size(), 3u);
    EXPECT_TRUE(c == e);
}

TEST(Elaborate, PreservesPortsAndAddsOneResistorPerFiniteQ) {
    const Circuit c = parse_netlist(kPaComponents);
    const Circuit e = elaborate(c, 2.4e9);
    EXPECT_EQ(e.count(ElementKind::resistor), c.count(ElementKind::resistor) + 3);
    ASSERT_EQ(e.ports.size(), c.ports.size());
    for (std::size_t i = 0; i < c.ports.size(); ++i) {
        EXPECT_EQ(e.node_names[e.ports[i].plus], c.node_names[c.ports[i].plus]);
        EXPECT_EQ(e.node_names[e.ports[i].minus], c.node_names[c.ports[i].minus]);
        EXPECT_EQ(e.ports[i].z0, c.ports[i].z0);
    }
    // dense, and idempotent once the q parameters are consumed
    EXPECT_EQ(static_cast<std::size_t>(e.num_nodes()), e.node_index.size());
    EXPECT_EQ(elaborate(e, 2.4e9).elements.size(), e.elements.size());
}

TEST(Elaborate, DanglingNodeRejectedByName) {
    const Circuit c = parse_netlist("V1 a 0 1\nR1 a b 1k\nR2 b c 1k");
    try {
        elaborate(c, 1e9);
        FAIL();
    } catch (const ElaborationError& e) {
        EXPECT_EQ(e.node(), "c");
    }
    // a port terminal counts as a connection
    EXPECT_NO_THROW(elaborate(parse_netlist("V1 a 0 1\nR1 a b 1k\n.port 1 b 0"), 1e9));
    EXPECT_THROW(elaborate(c, 0.0), ArgumentError);
}
