#include <cmath>
#include <limits>

#include "bubblelab/errors.hpp"
#include "bubblelab/format.hpp"
#include "bubblelab/io.hpp"
#include "doctest.h"

using namespace bubblelab;

TEST_CASE("family spec round trip") {
    FamilySpec s;
    s.type = "multibubble";
    s.domain_radius = 1.0;
    s.k_values = {0, 1, 2};
    s.centers = {Point4{}, Point4(1e-3, 0, 0, 0.1)};
    s.scales = {1e-6, 3e-7};
    s.laplacian = LaplacianMode::Analytic;
    const auto text = io::to_json(s);
    const auto back = io::family_from_json(text);
    CHECK(back.type == s.type);
    CHECK(back.k_values == s.k_values);
    CHECK(back.centers == s.centers);
    CHECK(back.scales == s.scales);
    CHECK(back.laplacian == LaplacianMode::Analytic);
    CHECK(io::to_json(back) == text);

    CHECK_THROWS_AS(io::family_from_json(R"({"type":"fk","bogus":1})"), ConfigError);
    CHECK_THROWS_AS(io::family_from_json(R"({"type":"nope"})"), ConfigError);
    CHECK_THROWS_AS(io::family_from_json(R"({"type":"fk","mu0":"x"})"), ConfigError);
    CHECK_THROWS_AS(io::family_from_json("{not json"), ConfigError);
    CHECK_THROWS_AS(io::family_from_json(R"({"type":"multibubble","centers":[[0,0,0,0]]})"), ConfigError);
}

TEST_CASE("config round trips and nested rejection") {
    QuantizeConfig q;
    q.ratio_threshold = 12.5;
    q.probe_ball = Ball{Point4{}, 1.0};
    q.detector.domain = Ball{Point4(0.1, 0, 0, 0), 0.5};
    q.detector.mass.shells.strata = 6;
    const auto text = io::to_json(q);
    const auto back = io::quantize_config_from_json(text);
    CHECK(back.ratio_threshold == 12.5);
    REQUIRE(back.probe_ball);
    CHECK(back.probe_ball->radius == 1.0);
    REQUIRE(back.detector.domain);
    CHECK(back.detector.domain->center == Point4(0.1, 0, 0, 0));
    CHECK(back.detector.mass.shells.strata == 6);
    CHECK(io::to_json(back) == text);
    CHECK_THROWS_AS(io::quantize_config_from_json(R"({"detector":{"mass":{"shells":{"strata":2,"x":0}}}})"),
                    ConfigError);
    CHECK_THROWS_AS(io::detector_config_from_json(R"({"max_points":0})"), ConfigError);
    CHECK_THROWS_AS(io::detector_config_from_json(R"({"max_points":1.5})"), ConfigError);
}

TEST_CASE("regions") {
    const Region a = Annulus{Point4{}, 1.0, 2.0};
    const auto r = io::region_from_json(io::to_json(a));
    REQUIRE(std::holds_alternative<Annulus>(r));
    CHECK(std::get<Annulus>(r).r_out == 2.0);
    const Region b = BallMinusBalls{Ball{Point4{}, 1.0}, {Ball{Point4(0.5, 0, 0, 0), 0.1}}};
    CHECK(std::get<BallMinusBalls>(io::region_from_json(io::to_json(b))).holes.size() == 1);
    CHECK_THROWS_AS(io::region_from_json(R"({"ball":{"radius":1},"annulus":{}})"), ConfigError);
    CHECK_THROWS_AS(io::region_from_json(R"({"ball_minus_balls":{"outer":{"radius":1},"holes":[{"center":[0.95,0,0,0],"radius":0.1}]}})"),
                    ConfigError);
}

TEST_CASE("csv doubles round trip exactly") {
    const double values[] = {0.1, 1.0 / 3.0, 16.8044208132052, 1e-300, -2.5e17, 5e-324,
                             std::numeric_limits<double>::max()};
    std::vector<io::MassRow> rows;
    int k = 0;
    for (double v : values) rows.push_back({"fk", k++, "ball(0;0;0;0)r=1", v, v * 1e-9});
    const auto t = io::parse_csv(io::masses_csv(rows));
    CHECK(t.header == std::vector<std::string>{"family", "k", "region", "value", "abs_error"});
    REQUIRE(t.rows.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(t.number(i, "value") == rows[i].value);
        CHECK(t.number(i, "abs_error") == rows[i].abs_error);
    }
    CHECK(std::isnan(io::parse_double(format_double(std::nan("")))));
    CHECK(io::parse_double(format_double(-INFINITY)) == -INFINITY);
    CHECK_THROWS_AS(io::parse_double("1.0x"), ConfigError);
    std::vector<io::MassRow> bad{{"a,b", 0, "r", 1.0, 0.0}};
    CHECK_THROWS_AS(io::masses_csv(bad), ConfigError);
}

TEST_CASE("radial summary") {
    const auto sol = shoot(constants::beta_star, 1e4, 1e-10);
    const auto j = io::radial_summary_json(sol);
    CHECK(j.find("\"classification\": \"entire-integrable\"") != std::string::npos);
    CHECK(j.find("\"energy\"") != std::string::npos);
}
