#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "asd/error.hpp"
#include "asd/kvconfig.hpp"
#include "asd/rng.hpp"
#include "asd/schedule.hpp"

using namespace asd;

TEST(Schedule, UniformGrid) {
    const NoiseSchedule s = make_schedule(4);
    EXPECT_EQ(s.timesteps(), (std::vector<double>{1.0, 0.75, 0.5, 0.25}));
    EXPECT_EQ(make_schedule(1).timesteps(), std::vector<double>{1.0});
    EXPECT_EQ(s.prefix(2).timesteps(), (std::vector<double>{1.0, 0.75}));
    EXPECT_THROW(s.prefix(5), DomainError);
    EXPECT_THROW(make_schedule(0), DomainError);
}

TEST(Schedule, RejectsInvalidTimesteps) {
    EXPECT_THROW(NoiseSchedule({}), DomainError);
    EXPECT_THROW(NoiseSchedule({0.9, 0.5}), DomainError);
    EXPECT_THROW(NoiseSchedule({1.0, 0.5, 0.5}), DomainError);
    EXPECT_THROW(NoiseSchedule({1.0, 0.0}), DomainError);
}

TEST(Schedule, TextRoundTrip) {
    const NoiseSchedule s({1.0, 0.7, 0.1 + 0.2, 1e-3});
    EXPECT_EQ(NoiseSchedule::parse(s.to_string()), s);
    EXPECT_EQ(make_schedule(4).to_string(), "1,0.75,0.5,0.25");
    EXPECT_THROW(NoiseSchedule::parse("1,,0.5"), ConfigError);
    EXPECT_THROW(NoiseSchedule::parse("1,abc"), ConfigError);
}

TEST(Interpolation, NoiseAndInverse) {
    Rng rng(1);
    const auto x0 = rng.normal_vector(6), eps = rng.normal_vector(6);
    for (double t : {0.0, 0.25, 0.5, 0.9}) {
        const auto x_t = add_noise(x0, eps, t);
        for (std::size_t k = 0; k < 6; ++k) EXPECT_DOUBLE_EQ(x_t[k], (1 - t) * x0[k] + t * eps[k]);
        const auto back = x0_from_eps(x_t, eps, t);
        for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(back[k], x0[k], 1e-12);
    }
    const auto pure = add_noise(x0, eps, 1.0);
    EXPECT_EQ(pure, eps);
    // Clamped at t = 1.
    const auto clamped = x0_from_eps(pure, eps, 1.0, 0.9);
    for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(clamped[k], (eps[k] - 0.9 * eps[k]) / 0.1, 1e-12);
    EXPECT_THROW(add_noise(x0, eps, 1.5), DomainError);
    EXPECT_THROW(x0_from_eps(x0, eps, -0.1), DomainError);
}

TEST(Interpolation, ScoreFromEps) {
    const std::vector<double> e{0.5, -1.0};
    const auto s = score_from_eps(e, 0.25);
    EXPECT_DOUBLE_EQ(s[0], -2.0);
    EXPECT_DOUBLE_EQ(s[1], 4.0);
    EXPECT_THROW(score_from_eps(e, 0.0), DomainError);
}

TEST(KvConfig, ParseAndTypes) {
    const KvConfig c = KvConfig::parse(
        "# comment\n"
        "a = 3\n"
        "  b=0.5   # trailing\n"
        "flag = yes\n"
        "list = 1, 2.5,-3\n"
        "a = 4\n");
    EXPECT_EQ(c.get_int("a", 0), 4);
    EXPECT_DOUBLE_EQ(c.get_double("b", 0.0), 0.5);
    EXPECT_TRUE(c.get_bool("flag", false));
    EXPECT_EQ(c.get_doubles("list", {}), (std::vector<double>{1.0, 2.5, -3.0}));
    EXPECT_EQ(c.get_string("missing", "dflt"), "dflt");
    EXPECT_THROW(c.get_bool("b", false), ConfigError);
    EXPECT_THROW(KvConfig::parse("x = y").get_double("x", 0), ConfigError);
    EXPECT_THROW(KvConfig::parse("novalue\n"), ConfigError);
    EXPECT_THROW(KvConfig::parse(" = 3\n"), ConfigError);
}

TEST(KvConfig, MergeAndTextRoundTrip) {
    KvConfig a = KvConfig::parse("x = 1\ny = 2\n");
    a.merge(KvConfig::parse("y = 3\nz = 4\n"));
    EXPECT_EQ(a.get_int("y", 0), 3);
    EXPECT_EQ(a.get_int("z", 0), 4);
    EXPECT_EQ(KvConfig::parse(a.to_text()).entries(), a.entries());
}

TEST(KvConfig, DoublesRoundTripExactly) {
    Rng rng(2);
    std::vector<double> v = rng.normal_vector(20);
    v.push_back(1e-300);
    v.push_back(-0.1);
    EXPECT_EQ(parse_doubles(format_doubles(v)), v);
    for (double x : v) EXPECT_EQ(std::stod(format_double(x)), x);
}

TEST(KvConfig, LoadMissingFile) {
    EXPECT_THROW(KvConfig::load("/nonexistent/dir/x.cfg"), MissingInput);
    const auto p = std::filesystem::temp_directory_path() / "asd_kv_test.cfg";
    {
        std::ofstream f(p);
        f << "k = v\n";
    }
    EXPECT_EQ(KvConfig::load(p).get_string("k", ""), "v");
    std::filesystem::remove(p);
}
