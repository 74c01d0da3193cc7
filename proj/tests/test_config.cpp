#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>

#include "penlab/config.hpp"

using namespace penlab;

namespace {

bool has_error(const ConfigError& e, const std::string& needle)
{
    return std::any_of(e.errors().begin(), e.errors().end(),
                       [&](const std::string& m) { return m.find(needle) != std::string::npos; });
}

ConfigError expect_error(const std::string& text)
{
    try {
        parse_config_text(text);
    } catch (const ConfigError& e) {
        return e;
    }
    ADD_FAILURE() << "no error for:\n" << text;
    return ConfigError({});
}

}  // namespace

TEST(Config, MinimalFillsDefaults)
{
    const ExperimentConfig c = parse_config_text("[grid]\ndim = 1\n");
    const ExperimentConfig s = standard_scenario();
    EXPECT_EQ(c.nx, 64);
    EXPECT_EQ(c.nt, 500);
    EXPECT_DOUBLE_EQ(c.p, 3.0);
    EXPECT_DOUBLE_EQ(c.convection, 0.5);
    EXPECT_EQ(c.modes, 16);
    EXPECT_EQ(c.profile, "sine-bump");
    EXPECT_EQ(c.fingerprint(), s.fingerprint());
    EXPECT_EQ(parse_config_text("").fingerprint(), s.fingerprint());
    EXPECT_TRUE(s.problems().empty());
}

TEST(Config, StandardFileMatchesBuiltin)
{
    const ExperimentConfig c = parse_config_file(PENLAB_SOURCE_DIR "/configs/standard.ini");
    EXPECT_EQ(c.fingerprint(), standard_scenario().fingerprint());
}

TEST(Config, TraceClassViolation)
{
    const ConfigError e = expect_error("[noise]\ngamma = 0.9\n");
    EXPECT_TRUE(has_error(e, "trace-class violation"));
}

TEST(Config, ExponentBelowCriticalIn2D)
{
    const ConfigError e = expect_error("[grid]\ndim = 2\nnx = 8\nny = 8\n[model]\np = 1.2\nconvection = 0\n");
    EXPECT_TRUE(has_error(e, "2d/(d+1)=1.33333"));
    EXPECT_NO_THROW(parse_config_text("[grid]\ndim = 1\n[model]\np = 1.2\n"));
}

TEST(Config, CollectsEveryError)
{
    const ConfigError e = expect_error("[grid]\nnx = 1\nbogus = 3\n[noise]\ngamma = 0.5\n[nonsense]\nx = 1\n"
                                       "[model]\np = abc\n[initial]\nprofile = cube\n");
    EXPECT_TRUE(has_error(e, "nx too small"));
    EXPECT_TRUE(has_error(e, "unknown key grid.bogus"));
    EXPECT_TRUE(has_error(e, "unknown section"));
    EXPECT_TRUE(has_error(e, "trace-class"));
    EXPECT_TRUE(has_error(e, "model.p: cannot parse"));
    EXPECT_TRUE(has_error(e, "initial.profile"));
    EXPECT_GE(e.errors().size(), 6u);
}

TEST(Config, MissingFile)
{
    EXPECT_THROW(parse_config_file("/nonexistent/penlab.ini"), ConfigError);
}

TEST(Config, ParsesEveryBlock)
{
    const ExperimentConfig c = parse_config_text(
        "; comment\n[scenario]\nname = custom\n[grid]\ndim = 2\nextent = 2\nextent_y = 1\nnx = 10\nny = 6\nT = 0.25\nnt = 40\n"
        "[model]\np = 2.5\nconvection = 0\nreaction = linear:-0.5+pospart:0.25\npenalty = power\npenalty_exponent = 1.8\n"
        "eps_reg = 1e-6\nn = 50\n[noise]\nmodes = 9\ngamma = 3\namp = 0.1\nseed = 77\n[sweep]\nn = 1, 5, 25\n"
        "[ensemble]\nnum_paths = 4\nbase_seed = 9\n[initial]\nprofile = plateau\nscale = 0.5\n"
        "[solver]\nnewton_tol = 1e-9\nnewton_max_iters = 30\n"
        "[capacity]\ndim = 1\nnx = 5\nnt = 4\nT = 1\nextent = 1\ncells = 1:2,1:3;0:0,0:0\nmax_iters = 500\n[output]\ndir = elsewhere\n");
    EXPECT_EQ(c.scenario, "custom");
    EXPECT_EQ(c.dim, 2);
    EXPECT_EQ(c.ny, 6);
    EXPECT_EQ(c.penalty, PenaltyKind::Power);
    EXPECT_EQ(c.sweep, (std::vector<double>{1, 5, 25}));
    EXPECT_EQ(c.seed, 77u);
    EXPECT_EQ(c.out_dir, "elsewhere");
    const ReactionModel r = c.reaction_model(50.0);
    EXPECT_DOUBLE_EQ(r.linear, -0.5);
    EXPECT_DOUBLE_EQ(r.positive_part, 0.25);
    EXPECT_DOUBLE_EQ(r.exponent, 1.8);
    const SolverConfig sc = c.solver_config(50.0);
    EXPECT_EQ(sc.grid.num_nodes(), 60u);
    EXPECT_EQ(sc.newton_max_iters, 30);
    EXPECT_EQ(c.capacity_problem().set.count(), 7u);
}

TEST(Config, FingerprintTracksOnlyMeaningfulFields)
{
    const ExperimentConfig base = standard_scenario();
    ExperimentConfig c = base;
    c.scenario = "renamed";
    c.out_dir = "/tmp/x";
    EXPECT_EQ(c.fingerprint(), base.fingerprint());
    c = base;
    c.penalty_exponent = 1.7;  // ignored by the linear penalty
    EXPECT_EQ(c.fingerprint(), base.fingerprint());
    c = base;
    c.cap_cells = "3:3, 3:3";
    EXPECT_EQ(c.fingerprint(), base.fingerprint());
    c = base;
    c.extent_y = 5.0;  // unused in 1D
    EXPECT_EQ(c.fingerprint(), base.fingerprint());

    const std::vector<std::function<void(ExperimentConfig&)>> edits{
        [](ExperimentConfig& x) { x.seed = 2; },
        [](ExperimentConfig& x) { x.nx = 65; },
        [](ExperimentConfig& x) { x.amp = 0.31; },
        [](ExperimentConfig& x) { x.penalty = PenaltyKind::Power; },
        [](ExperimentConfig& x) { x.sweep.push_back(1e5); },
        [](ExperimentConfig& x) { x.profile = "plateau"; },
        [](ExperimentConfig& x) { x.reaction = "linear:0.1"; },
        [](ExperimentConfig& x) { x.cap_cells = "3:4,3:3"; },
        [](ExperimentConfig& x) { x.newton_tol = 1e-11; },
    };
    for (const auto& edit : edits) {
        ExperimentConfig e = base;
        edit(e);
        EXPECT_NE(e.fingerprint(), base.fingerprint());
    }
}

TEST(Profiles, NonNegativeAndVanishOnBoundary)
{
    for (int dim : {1, 2}) {
        const Grid g = dim == 1 ? Grid::build(1, 1.0, 31, 1.0, 1) : Grid::build(2, 1.0, 15, 11, 1.0, 1);
        for (const char* name : {"sine-bump", "plateau", "two-bump"}) {
            const Field f = initial_profile(name, g, 1.0);
            double mx = 0.0;
            for (double v : f.values()) {
                EXPECT_GE(v, 0.0);
                mx = std::max(mx, v);
            }
            EXPECT_GT(mx, 0.5) << name;
        }
    }
    EXPECT_THROW(initial_profile("cube", Grid::build(1, 1.0, 4, 1.0, 1)), std::invalid_argument);
}
