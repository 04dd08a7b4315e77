#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>
#include <string>

#include "numvar/io.hpp"

using namespace nv;

TEST(Io, ParseNumberForms) {
    EXPECT_EQ(io::parse_number("2.5"), 2.5);
    EXPECT_EQ(io::parse_number("10^3"), 1000.0);
    EXPECT_EQ(io::parse_number("5*10^-2"), 0.05);
    EXPECT_EQ(io::parse_number("1e-8"), 1e-8);
    EXPECT_THROW(io::parse_number("abc"), Error);
    EXPECT_THROW(io::parse_number(""), Error);
    EXPECT_THROW(io::parse_number("1.5x"), Error);
}

TEST(Io, LinearGrid) {
    const auto g = io::parse_grid("0.1:0.5:0.1");
    ASSERT_EQ(g.size(), 5u);
    EXPECT_NEAR(g.back(), 0.5, 1e-15);
    EXPECT_EQ(io::parse_grid("1:1:1").size(), 1u);
    EXPECT_THROW(io::parse_grid("1:0:1"), Error);
    EXPECT_THROW(io::parse_grid("0:1:0"), Error);
}

TEST(Io, GeometricGrids) {
    const auto g = io::parse_grid("log:1:100:3");
    ASSERT_EQ(g.size(), 3u);
    EXPECT_NEAR(g[1], 10.0, 1e-12);
    EXPECT_EQ(g.back(), 100.0);
    const auto d = io::parse_grid("10^2:10^4");
    EXPECT_EQ(d.size(), 21u);
    EXPECT_EQ(d.front(), 100.0);
    EXPECT_THROW(io::parse_grid("log:1:10"), Error);
    EXPECT_THROW(io::parse_grid("log:1:10:2.5"), Error);
    EXPECT_THROW(io::parse_grid("0:10"), Error);
}

TEST(Io, ListAndErrors) {
    const auto g = io::parse_grid("1,2.5,10^1");
    EXPECT_EQ(g, (std::vector<double>{1.0, 2.5, 10.0}));
    EXPECT_THROW(io::parse_grid(""), Error);
    EXPECT_THROW(io::parse_grid("1,,2"), Error);
    EXPECT_THROW(io::parse_grid("1:2:3:4"), Error);
}

TEST(Io, FormatRoundTrips) {
    for (double x : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5, 0.0}) EXPECT_EQ(std::strtod(io::fmt(x).c_str(), nullptr), x);
    EXPECT_EQ(io::fmt(0.1), "0.1");
    EXPECT_EQ(io::fmt(std::numeric_limits<double>::infinity()), "inf");
}

TEST(Io, MetaAndCsvHeader) {
    SystemConfig cfg;
    cfg.stable = {1.5, 1.0};
    const auto m = io::meta("numvar", io::json{{"config", io::config_json(cfg)}});
    EXPECT_EQ(m["version"], kVersion);
    EXPECT_EQ(m["run"]["config"]["alpha"], 1.5);
    const auto curve = numvar_curve(cfg, {1.0, 2.0});
    std::ostringstream os;
    io::write_curve_csv(os, m, curve, std::nullopt, saturation_level(cfg), std::nullopt);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    ASSERT_EQ(line.rfind("# ", 0), 0u);
    EXPECT_EQ(io::json::parse(line.substr(2)), m);
    std::getline(in, line);
    EXPECT_EQ(line, "L,V,err,saturation");
    const auto j = io::curve_json(m, curve, std::nullopt, std::nullopt, std::nullopt);
    EXPECT_EQ(j["points"].size(), 2u);
    EXPECT_EQ(j["method"], "quadrature");
}
