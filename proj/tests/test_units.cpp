#include <gtest/gtest.h>

#include "rfsim/units.hpp"

#include <cmath>

using namespace rfsim;

TEST(ParseValue, TypicalComponentValues) {
    EXPECT_DOUBLE_EQ(parse_value("36n"), 3.6e-8);
    EXPECT_DOUBLE_EQ(parse_value("36nH"), 3.6e-8);
    EXPECT_DOUBLE_EQ(parse_value("0"), 0.0);
    EXPECT_DOUBLE_EQ(parse_value("3.8K"), 3.8e3);
    EXPECT_DOUBLE_EQ(parse_value("3.8Kohm"), 3.8e3);
    EXPECT_DOUBLE_EQ(parse_value("11p"), 1.1e-11);
    EXPECT_DOUBLE_EQ(parse_value("11pF"), 1.1e-11);
}

TEST(ParseValue, SuffixRoundsLikeTheEquivalentExponent) {
    // bit-exact, not just within an ulp
    EXPECT_EQ(parse_value("170u"), 170e-6);
    EXPECT_EQ(parse_value("0.3n"), 0.3e-9);
    EXPECT_EQ(parse_value("1.5e2k"), 1.5e5);
    EXPECT_EQ(parse_value("-7.7meg"), -7.7e6);
}

TEST(ParseValue, SuffixKeysTheScaleNotTheUnitLetter) {
    // capacitor rows written "240fH": femto, whatever the trailing unit letter says
    EXPECT_DOUBLE_EQ(parse_value("240fH"), 240e-15);
    EXPECT_DOUBLE_EQ(parse_value("600fH"), 600e-15);
}

TEST(ParseValue, MegIsDistinctFromMilli) {
    EXPECT_DOUBLE_EQ(parse_value("1meg"), 1e6);
    EXPECT_DOUBLE_EQ(parse_value("1MEG"), 1e6);
    EXPECT_DOUBLE_EQ(parse_value("1m"), 1e-3);
    EXPECT_DOUBLE_EQ(parse_value("1M"), 1e-3);
    EXPECT_DOUBLE_EQ(parse_value("2.2megohm"), 2.2e6);
}

TEST(ParseValue, ExponentsSignsAndUnits) {
    EXPECT_DOUBLE_EQ(parse_value("1e-9"), 1e-9);
    EXPECT_DOUBLE_EQ(parse_value("-2.5E3"), -2500.0);
    EXPECT_DOUBLE_EQ(parse_value("2.4GHz"), 2.4e9);
    EXPECT_DOUBLE_EQ(parse_value("1.8V"), 1.8);
    EXPECT_DOUBLE_EQ(parse_value("50ohm"), 50.0);
    EXPECT_DOUBLE_EQ(parse_value(".5u"), 0.5e-6);
    EXPECT_DOUBLE_EQ(parse_value("10.5"), 10.5);
}

TEST(ParseValue, MalformedAndUnknownSuffix) {
    try {
        parse_value("abc");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.kind(), ParseErrorKind::malformed_number);
    }
    try {
        parse_value("12x");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.kind(), ParseErrorKind::unknown_suffix);
        EXPECT_EQ(e.column(), 3);
    }
    EXPECT_THROW(parse_value(""), ParseError);
    EXPECT_THROW(parse_value("1nq"), ParseError);
    EXPECT_THROW(parse_value("-"), ParseError);
}

TEST(ParseValue, ComponentValuesRoundTripThroughText) {
    const double values[] = {0.3e-6, 0.6e-6, 0.8e-6, 36e-9, 20e-9, 240e-15, 600e-15, 11e-12, 10.5, 3.8e3};
    for (double v : values) {
        const double back = parse_value(format_roundtrip(v));
        EXPECT_LT(std::abs(back - v) / v, 1e-12) << v;
        const double back_sci = parse_value(format_number(v));
        EXPECT_LT(std::abs(back_sci - v) / v, 1e-12) << v;
    }
}

TEST(Decibels, PowerConversions) {
    EXPECT_NEAR(watts_to_dbm(10e-3), 10.0, 1e-12);
    EXPECT_TRUE(std::isinf(watts_to_dbm(0.0)));
    EXPECT_NEAR(dbm_to_watts(15.0), 0.0316227766, 1e-9);
}
