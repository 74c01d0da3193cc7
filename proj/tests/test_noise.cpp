#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "penlab/noise.hpp"
#include "penlab/philox.hpp"

using namespace penlab;

// Known-answer vectors published with the Random123 library (kat_vectors, philox4x32 10 rounds).
TEST(Philox, KnownAnswers)
{
    {
        const Philox4x32 g(0);
        const auto out = g({0u, 0u, 0u, 0u});
        EXPECT_EQ(out[0], 0x6627e8d5u);
        EXPECT_EQ(out[1], 0xe169c58du);
        EXPECT_EQ(out[2], 0xbc57ac4cu);
        EXPECT_EQ(out[3], 0x9b00dbd8u);
    }
    {
        const Philox4x32 g(0xffffffffffffffffull);
        const auto out = g({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu});
        EXPECT_EQ(out[0], 0x408f276du);
        EXPECT_EQ(out[1], 0x41c83b0eu);
        EXPECT_EQ(out[2], 0xa20bc7c6u);
        EXPECT_EQ(out[3], 0x6d5451fdu);
    }
    {
        const Philox4x32 g(0x299f31d0a4093822ull);
        const auto out = g({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u});
        EXPECT_EQ(out[0], 0xd16cfe09u);
        EXPECT_EQ(out[1], 0x94fdccebu);
        EXPECT_EQ(out[2], 0x5001e420u);
        EXPECT_EQ(out[3], 0x24126ea1u);
    }
}

TEST(Philox, NormalMoments)
{
    const Philox4x32 g(11);
    double s1 = 0.0;
    double s2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = g.normal(static_cast<std::uint64_t>(i), 3);
        s1 += z;
        s2 += z * z;
    }
    EXPECT_NEAR(s1 / n, 0.0, 4.0 / std::sqrt(n));
    EXPECT_NEAR(s2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(NoiseSpec, Validation)
{
    NoiseSpec s;
    s.decay = 0.9;
    try {
        s.validate();
        FAIL() << "expected a trace-class error";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("trace-class violation"), std::string::npos);
    }
    s.decay = 2.0;
    s.modes = 0;
    EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Regularity, RequiredIndex)
{
    NoiseSpec s;
    EXPECT_DOUBLE_EQ(validate_regularity(s, 2.0, 1).required_index, 1.0);
    EXPECT_DOUBLE_EQ(validate_regularity(s, 2.0, 2).required_index, 1.0);
    EXPECT_DOUBLE_EQ(validate_regularity(s, 4.0, 2).required_index, 1.5);
    s.decay = 1.5;
    const RegularityReport r = validate_regularity(s, 4.0, 2);
    EXPECT_FALSE(r.satisfied);
    EXPECT_FALSE(r.message.empty());
}

TEST(Increment, ZeroCases)
{
    const Grid g = Grid::build(1, 1.0, 16, 1.0, 4);
    NoiseSpec s;
    const NoisePath path(5, 4, s.modes);
    const Field no_time = sample_increment(QWienerNoise(s, g), path, 0, 0.0);
    for (double v : no_time.values()) {
        EXPECT_EQ(v, 0.0);
    }
    s.amp = 0.0;
    const Field no_amp = sample_increment(QWienerNoise(s, g), path, 1, 0.1);
    for (double v : no_amp.values()) {
        EXPECT_EQ(v, 0.0);
    }
    EXPECT_EQ(hs_norm_sq(QWienerNoise(s, g)), 0.0);
    EXPECT_THROW(sample_increment(QWienerNoise(NoiseSpec{}, g), path, 4, 0.1), std::out_of_range);
}

TEST(Increment, ReplayAndLinearity)
{
    const Grid g = Grid::build(2, 1.0, 10, 8, 1.0, 6);
    NoiseSpec a;
    NoiseSpec b = a;
    b.amp = 2.0 * a.amp;
    NoiseSpec c = a;
    c.amp = 3.0 * a.amp;
    const QWienerNoise na(a, g);
    const QWienerNoise nb(b, g);
    const QWienerNoise nc(c, g);
    const NoisePath p1(42, 6, a.modes);
    const NoisePath p2(42, 6, a.modes);
    EXPECT_TRUE(p1 == p2);
    for (int j = 0; j < 6; ++j) {
        const Field x = sample_increment(na, p1, j, g.dt());
        const Field y = sample_increment(na, p2, j, g.dt());
        const Field z = sample_increment(nb, p1, j, g.dt());
        const Field w = sample_increment(nc, p1, j, g.dt());
        EXPECT_EQ(std::memcmp(x.values().data(), y.values().data(), x.size() * sizeof(double)), 0);
        const double sup = norm(x, NormKind::Linf);
        for (std::size_t i = 0; i < x.size(); ++i) {
            EXPECT_EQ(z[i], 2.0 * x[i]);
            EXPECT_NEAR(w[i], 3.0 * x[i], 1e-14 * sup);
        }
    }
    EXPECT_FALSE(NoisePath(43, 6, a.modes) == p1);
}

TEST(Increment, ModesVanishOnBoundaryAndAreOrthonormal)
{
    const Grid g = Grid::build(1, 1.0, 63, 1.0, 1);
    const QWienerNoise n(NoiseSpec{}, g);
    for (int k = 0; k < 4; ++k) {
        for (int l = 0; l < 4; ++l) {
            double acc = 0.0;
            for (std::size_t i = 0; i < g.num_nodes(); ++i) {
                acc += n.mode(k, i) * n.mode(l, i) * g.node_weight();
            }
            EXPECT_NEAR(acc, k == l ? 1.0 : 0.0, 1e-12);
        }
    }
}

TEST(HsNorm, SingleModeAndHomogeneity)
{
    const Grid g = Grid::build(1, 1.0, 64, 1.0, 1);
    NoiseSpec s;
    s.modes = 1;
    s.amp = 1.0;
    EXPECT_NEAR(hs_norm_sq(QWienerNoise(s, g)), 1.0, 1e-3);
    NoiseSpec t;
    NoiseSpec u = t;
    u.amp = 2.0 * t.amp;
    EXPECT_NEAR(hs_norm_sq(QWienerNoise(u, g)), 4.0 * hs_norm_sq(QWienerNoise(t, g)), 1e-14);
}

TEST(Increment, VarianceAtMidpoint)
{
    const Grid g = Grid::build(1, 1.0, 63, 1.0, 1);
    NoiseSpec s;
    s.modes = 8;
    const QWienerNoise n(s, g);
    const int draws = 10000;
    const double dt = 0.01;
    const NoisePath path(99, draws, s.modes);
    double s1 = 0.0;
    double s2 = 0.0;
    for (int j = 0; j < draws; ++j) {
        const double v = sample_increment(n, path, j, dt)[31];
        s1 += v;
        s2 += v * v;
    }
    const double var = (s2 - s1 * s1 / draws) / (draws - 1);
    const double expected = n.variance_rate(31) * dt;
    EXPECT_LT(std::abs(var - expected), 3.0 * expected * std::sqrt(2.0 / (draws - 1)));
}

TEST(NoisePath, CoarseningSharesBrownianMotion)
{
    const NoisePath fine(3, 8, 2);
    const NoisePath coarse = fine.coarsened(4);
    EXPECT_EQ(coarse.steps(), 2);
    EXPECT_NEAR(coarse.draw(1, 1), (fine.draw(4, 1) + fine.draw(5, 1) + fine.draw(6, 1) + fine.draw(7, 1)) / 2.0, 1e-15);
    EXPECT_THROW(fine.coarsened(3), std::invalid_argument);
}
