#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "sulab/lab.hpp"

using namespace sulab;
using namespace sulab::lab;

namespace {

const std::string kSource = SULAB_SOURCE_DIR;

std::size_t count(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
    return n;
}

const char* kSmallGame = R"(
[experiment]
horizon = 200
repetitions = 3
seed = 11

[environment]
kind = bernoulli
loss_means = 0.3, 0.6

[policy.exp3]
kind = exp3

[policy.ucb]
kind = ucb1
)";

}  // namespace

TEST(Aggregate, SingleRepetitionHasZeroStd) {
    const auto a = aggregate("s", {{1.0, 2.0, 4.0}});
    EXPECT_EQ(a.mean, (std::vector<double>{1.0, 2.0, 4.0}));
    EXPECT_EQ(a.std, (std::vector<double>{0.0, 0.0, 0.0}));
    EXPECT_EQ(a.x, (std::vector<double>{1.0, 2.0, 3.0}));
}

TEST(Aggregate, PopulationStd) {
    const auto a = aggregate("s", {{1.0}, {3.0}});
    EXPECT_EQ(a.mean[0], 2.0);
    EXPECT_EQ(a.std[0], 1.0);
    EXPECT_THROW(aggregate("s", {{1.0}, {1.0, 2.0}}), DimensionError);
    EXPECT_THROW(aggregate("s", {}), DomainError);
}

TEST(Csv, EmptyAndSmallTraces) {
    std::stringstream empty;
    write_csv(empty, {});
    EXPECT_EQ(empty.str(), "t,series,mean,std\n");
    std::stringstream two;
    write_csv(two, {aggregate("a", {{0.5, 0.25}})});
    EXPECT_EQ(two.str(), "t,series,mean,std\n1,a,0.5,0\n2,a,0.25,0\n");
    EXPECT_THROW(write_csv(two, {aggregate("a,b", {{0.5}})}), DomainError);
}

TEST(Csv, RoundTrip) {
    const auto a = aggregate("first", {{0.1, 1.0 / 3}, {0.3, 2.0 / 7}});
    const auto b = aggregate("second", {{1e-9, 12345.6789}});
    std::stringstream ss;
    write_csv(ss, {a, b});
    const auto back = parse_csv(ss);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].series, "first");
    EXPECT_EQ(back[1].series, "second");
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_NEAR(back[0].mean[i], a.mean[i], 1e-12);
        EXPECT_NEAR(back[0].std[i], a.std[i], 1e-12);
        EXPECT_NEAR(back[1].mean[i], b.mean[i], 1e-11 * std::max(1.0, b.mean[i]));
    }
    std::stringstream bad("t,series,mean\n");
    EXPECT_THROW(parse_csv(bad), ParseError);
}

TEST(Svg, DeterministicWithLegend) {
    const std::vector<AggregateTrace> t = {aggregate("alpha", {{1, 2, 3}, {2, 3, 5}}),
                                           aggregate("beta", {{0, 1, 1}})};
    PlotStyle st;
    st.title = "demo";
    std::stringstream a, b;
    write_svg(a, t, st);
    write_svg(b, t, st);
    EXPECT_EQ(a.str(), b.str());
    EXPECT_EQ(count(a.str(), ">alpha</text>"), 1u);
    EXPECT_EQ(count(a.str(), ">beta</text>"), 1u);
    EXPECT_EQ(count(a.str(), "<polyline"), 4u);
    EXPECT_EQ(a.str().rfind("</svg>\n"), a.str().size() - 7);
    EXPECT_THROW(write_svg(a, {}, st), DomainError);
}

TEST(Config, Defaults) {
    const auto c = parse_config_string(kSmallGame);
    EXPECT_EQ(c.delta, 0.05);
    EXPECT_EQ(c.repetitions, 3u);
    const auto d = parse_config_string("[experiment]\nkind = bounds_compare\n");
    EXPECT_EQ(d.delta, 0.05);
    EXPECT_EQ(d.repetitions, 10u);
    EXPECT_EQ(d.metric, "pseudo_regret");
    EXPECT_EQ(c.policies.size(), 2u);
    EXPECT_EQ(c.policies[1].ucb, UcbVariant::improved);
}

TEST(Config, ErrorsNameTheLine) {
    try {
        parse_config_string("[experiment]\nhorizon = 10\nhorizon = 20\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_NE(std::string(e.what()).find("experiment.horizon"), std::string::npos);
    }
    try {
        parse_config_string("[experiment]\nkind = bounds_compare\nhorizont = 3\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    try {
        parse_config_string("[experiment]\n[policy.p]\nkind = hedge\neta = -1\n[environment]\nkind = ftl_breaker\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 4u);
        EXPECT_NE(std::string(e.what()).find("policy.p.eta"), std::string::npos);
    }
    EXPECT_THROW(parse_config_string("[experiment]\ndelta = 1.5\n"), ConfigError);
    EXPECT_THROW(parse_config_string("[unknown]\n"), ConfigError);
    EXPECT_THROW(parse_config_string("horizon = 3\n"), ConfigError);
    EXPECT_THROW(parse_config_string("[experiment]\n"), ConfigError);
}

TEST(Config, PresetUcbVsExp3) {
    const auto c = parse_config_file(kSource + "/presets/ucb_vs_exp3.cfg");
    EXPECT_EQ(c.horizon, 10000u);
    EXPECT_EQ(c.repetitions, 20u);
    ASSERT_EQ(c.environments.size(), 4u);
    const std::vector<std::size_t> ks = {2, 4, 8, 16};
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(c.environments[i].kind, "bernoulli");
        EXPECT_EQ(c.environments[i].loss_means.size(), ks[i]);
    }
}

TEST(Config, AllPresetsParse) {
    std::size_t n = 0;
    for (const auto& e : std::filesystem::directory_iterator(kSource + "/presets")) {
        if (e.path().extension() != ".cfg") continue;
        EXPECT_NO_THROW(parse_config_file(e.path().string())) << e.path();
        ++n;
    }
    EXPECT_GE(n, 10u);
}

TEST(Runner, DeterministicAcrossThreadCounts) {
    const auto c = parse_config_string(kSmallGame);
    const auto a = run_experiment(c, {1, false});
    const auto b = run_experiment(c, {3, false});
    ASSERT_EQ(a.traces.size(), 2u);
    for (std::size_t s = 0; s < 2; ++s) {
        EXPECT_EQ(a.traces[s].mean, b.traces[s].mean);
        EXPECT_EQ(a.traces[s].std, b.traces[s].std);
    }
    EXPECT_EQ(a.traces[0].series, "exp3");
    EXPECT_EQ(a.traces[0].size(), 200u);
}

TEST(Runner, SingleRepetitionTranscripts) {
    auto c = parse_config_string(kSmallGame);
    c.repetitions = 1;
    const auto r = run_experiment(c, {1, true});
    for (const auto& t : r.traces)
        for (double s : t.std) EXPECT_EQ(s, 0.0);
    ASSERT_EQ(r.transcripts.size(), 2u);
    ASSERT_EQ(r.transcripts[1].size(), 1u);
    EXPECT_EQ(r.transcripts[1][0].pseudo_regret, r.traces[1].mean);
}

TEST(Runner, RejectsMismatchedMetric) {
    const auto c = parse_config_string("[experiment]\n[environment]\nkind = ftl_breaker\n[policy.f]\nkind = ftl\n");
    EXPECT_THROW(run_experiment(c), ConfigError);
}

TEST(Runner, BoundsCompareCurves) {
    const auto t = bounds_compare(1000, 0.01, 1001);
    ASSERT_EQ(t.size(), 6u);
    EXPECT_EQ(t[0].series, "hoeffding");
    EXPECT_EQ(t[1].series, "kl");
    for (std::size_t i = 0; i < 1001; ++i) {
        EXPECT_LE(t[1].mean[i], t[0].mean[i] + 1e-12);
        EXPECT_LE(t[1].mean[i], t[3].mean[i] + 1e-12);
        EXPECT_GE(t[5].mean[i], t[4].mean[i] - 1e-12);
    }
}

TEST(Runner, NonGameKinds) {
    auto c = parse_config_string(
        "[experiment]\nkind = split_kl_compare\nrepetitions = 2\n[parameters]\nn = 50\ngrid = 5\n");
    const auto r = run_experiment(c, {1, false});
    ASSERT_EQ(r.traces.size(), 2u);
    EXPECT_EQ(r.traces[1].series, "split_kl");
    EXPECT_EQ(r.traces[1].x.back(), 1.0);
    const auto o = run_experiment(parse_config_string(
        "[experiment]\nkind = offline_replay\nrepetitions = 1\n[parameters]\narms = 4\nrecords = 500\n"
        "[policy.u]\nkind = uniform\n"));
    EXPECT_EQ(o.traces[0].size(), 500u);
    EXPECT_THROW(run_experiment(parse_config_string("[experiment]\nkind = bounds_compare\n[parameters]\nsize = 3\n")),
                 ConfigError);
}

TEST(Selftest, Passes) {
    std::stringstream ss;
    EXPECT_TRUE(run_selftest(ss)) << ss.str();
    EXPECT_EQ(count(ss.str(), "FAIL"), 0u);
}
