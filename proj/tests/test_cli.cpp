#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "penlab/orchestrator.hpp"

using namespace penlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("penlab_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t lines(const std::string& s)
{
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

ExperimentConfig small()
{
    ExperimentConfig c = standard_scenario();
    c.nx = 16;
    c.nt = 40;
    c.T = 0.1;
    c.num_paths = 3;
    return c;
}

int run_in(const ExperimentConfig& c, Command cmd, const fs::path& out, int threads = 1)
{
    RunOptions o;
    o.command = cmd;
    o.out_dir = out.string();
    o.threads = threads;
    std::ostringstream log;
    return run(c, o, log);
}

int cli(const std::string& args)
{
    const std::string cmd = std::string(PENLAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Commands, Names)
{
    for (auto c : {Command::Single, Command::Sweep, Command::Ensemble, Command::Capacity, Command::Validate}) {
        EXPECT_EQ(parse_command(command_name(c)), c);
    }
    EXPECT_FALSE(parse_command("plot").has_value());
}

TEST(Run, SingleWritesTrajectoryAndLedger)
{
    const fs::path out = scratch("single");
    ASSERT_EQ(run_in(small(), Command::Single, out), kExitOk);
    EXPECT_EQ(lines(slurp(out / "trajectory.csv")), 1u + 41u * 16u);
    EXPECT_EQ(lines(slurp(out / "ledger.csv")), 1u + 40u);
    EXPECT_EQ(lines(slurp(out / "norms.csv")), 1u + 41u);
    const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
    EXPECT_TRUE(m["complete"].get<bool>());
    EXPECT_EQ(m["command"], "single");
    EXPECT_EQ(m["config_fingerprint"], small().fingerprint());
    EXPECT_EQ(m["files"].size(), 3u);
    EXPECT_EQ(m["runs"][0]["seed"], 1u);
}

TEST(Run, SweepHasOneRowPerN)
{
    const fs::path out = scratch("sweep");
    ASSERT_EQ(run_in(small(), Command::Sweep, out, 2), kExitOk);
    const std::string rep = slurp(out / "sweep_report.csv");
    EXPECT_EQ(lines(rep), 6u);
    EXPECT_EQ(rep.substr(0, rep.find('\n')), "n,neg_l2,sqrt_n_neg_l2,mass,phi_mass,complementarity,slope");
    EXPECT_EQ(lines(slurp(out / "sweep_norms.csv")), 1u + 5u * 41u);
}

TEST(Run, OutputsAreByteIdenticalAcrossRunsAndThreads)
{
    for (Command cmd : {Command::Single, Command::Sweep, Command::Ensemble, Command::Capacity}) {
        const fs::path a = scratch("det_a");
        const fs::path b = scratch("det_b");
        ASSERT_EQ(run_in(small(), cmd, a, 1), kExitOk);
        ASSERT_EQ(run_in(small(), cmd, b, 3), kExitOk);
        for (const auto& entry : fs::directory_iterator(a)) {
            const std::string name = entry.path().filename().string();
            if (name == "manifest.json") {
                continue;
            }
            EXPECT_EQ(slurp(a / name), slurp(b / name)) << command_name(cmd) << " " << name;
        }
    }
}

TEST(Run, SeedOverrideChangesOutput)
{
    const fs::path a = scratch("seed_a");
    const fs::path b = scratch("seed_b");
    RunOptions o;
    o.command = Command::Single;
    o.out_dir = a.string();
    std::ostringstream log;
    ASSERT_EQ(run(small(), o, log), kExitOk);
    o.out_dir = b.string();
    o.seed_override = 99;
    ASSERT_EQ(run(small(), o, log), kExitOk);
    EXPECT_NE(slurp(a / "trajectory.csv"), slurp(b / "trajectory.csv"));
    EXPECT_EQ(apply_overrides(small(), o).base_seed, 99u);
}

TEST(Run, CapacityJson)
{
    const fs::path out = scratch("capacity");
    ASSERT_EQ(run_in(standard_scenario(), Command::Capacity, out), kExitOk);
    const auto j = nlohmann::json::parse(slurp(out / "capacity.json"));
    EXPECT_NEAR(j["value"].get<double>(), 1.21963169059, 1e-6);
    EXPECT_TRUE(j["sandwich"]["within_5pct"].get<bool>());
    EXPECT_TRUE(j["lebesgue_check"].get<bool>());
}

TEST(Run, InvalidConfigIsAConfigError)
{
    ExperimentConfig c = small();
    c.gamma = 0.5;
    const fs::path out = scratch("bad");
    EXPECT_EQ(run_in(c, Command::Single, out), kExitConfig);
}

TEST(Run, SolverFailureMarksManifestIncomplete)
{
    ExperimentConfig c = small();
    c.p = 6.0;
    c.newton_max_iters = 1;
    c.newton_tol = 1e-15;
    const fs::path out = scratch("fail");
    EXPECT_EQ(run_in(c, Command::Single, out), kExitRuntime);
    const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
    EXPECT_FALSE(m["complete"].get<bool>());
    EXPECT_FALSE(m["error"].get<std::string>().empty());
}

TEST(Run, ValidateIsDeterministic)
{
    ExperimentConfig c = small();
    c.num_paths = 2;
    const fs::path a = scratch("val_a");
    const fs::path b = scratch("val_b");
    const int ra = run_in(c, Command::Validate, a, 2);
    const int rb = run_in(c, Command::Validate, b, 1);
    EXPECT_EQ(ra, rb);
    EXPECT_TRUE(ra == kExitOk || ra == kExitValidation);
    const std::string report = slurp(a / "validate_report.csv");
    EXPECT_EQ(report, slurp(b / "validate_report.csv"));
    EXPECT_EQ(lines(report), 1u + 16u + 11u);
}

TEST(Cli, ExitCodes)
{
    const fs::path out = scratch("cli");
    const fs::path bad = out.string() + ".ini";
    std::ofstream(bad) << "[noise]\ngamma = 0.2\n";
    EXPECT_EQ(cli("single --config " + bad.string() + " --out " + out.string()), kExitConfig);
    EXPECT_EQ(cli("frobnicate"), kExitConfig);
    EXPECT_EQ(cli("single --threads 0"), kExitConfig);
    EXPECT_EQ(cli("capacity --out " + out.string()), kExitOk);
    EXPECT_TRUE(fs::exists(out / "capacity.json"));
    EXPECT_TRUE(fs::exists(out / "manifest.json"));
    EXPECT_EQ(cli("--help"), 0);
    fs::remove(bad);
}
