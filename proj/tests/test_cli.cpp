#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "leqlab/cli.hpp"

using namespace leq;
namespace fs = std::filesystem;

namespace {

const std::string benchmark_config = std::string(LEQLAB_CONFIG_DIR) + "/benchmark.json";

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / "leqlab_cli_tests" / name;
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::vector<std::string> lines(const fs::path& p)
{
    std::vector<std::string> v;
    std::ifstream f(p);
    for (std::string l; std::getline(f, l);) {
        v.push_back(l);
    }
    return v;
}

std::vector<std::string> fields(const std::string& line)
{
    std::vector<std::string> v;
    std::stringstream s(line);
    for (std::string c; std::getline(s, c, ',');) {
        v.push_back(c);
    }
    return v;
}

} // namespace

TEST_CASE("solve")
{
    const fs::path dir = scratch("solve");
    const Run r = run({"solve", "--config", benchmark_config, "--output-dir", dir.string()});
    CHECK(r.code == exit_ok);
    CHECK(r.out.find("exists_on_full_interval=true") != std::string::npos);
    CHECK(lines(dir / "riccati.csv").size() == 2050);
    CHECK(lines(dir / "gains.csv").size() > 1);
}

TEST_CASE("solve reports an escape")
{
    const fs::path dir = scratch("blowup");
    const Run r = run({"solve", "--config", benchmark_config, "--output-dir", dir.string(), "--set",
                       "theta=100"});
    CHECK(r.code == exit_blowup);
    CHECK(r.err.find("eta") != std::string::npos);
    CHECK(fs::exists(dir / "riccati.csv"));
    CHECK_FALSE(fs::exists(dir / "gains.csv"));
}

TEST_CASE("configuration errors")
{
    const fs::path dir = scratch("config");
    CHECK(run({"solve", "--config", "does-not-exist.json", "--output-dir", dir.string()}).code ==
          exit_config);
    const Run r = run({"solve", "--config", benchmark_config, "--output-dir", dir.string(), "--set",
                       "weights.R44=0"});
    CHECK(r.code == exit_config);
    CHECK(r.err.find("R44") != std::string::npos);
    CHECK(run({"solve", "--config", benchmark_config, "--set", "no.such.key=1"}).code == exit_config);
    CHECK(run({"frobnicate", "--config", benchmark_config}).code == exit_config);
    CHECK(run({"solve"}).code == exit_config);
}

TEST_CASE("simulate is reproducible")
{
    const fs::path a = scratch("sim_a");
    const fs::path b = scratch("sim_b");
    const std::vector<std::string> common = {"simulate", "--config", benchmark_config, "--n-paths",
                                             "2000", "--dt", "0.00390625", "--seed", "5"};
    auto with_dir = [&](const fs::path& d, const std::string& workers) {
        std::vector<std::string> args = common;
        args.insert(args.end(), {"--output-dir", d.string(), "--workers", workers});
        return args;
    };
    REQUIRE(run(with_dir(a, "1")).code == exit_ok);
    REQUIRE(run(with_dir(b, "3")).code == exit_ok);
    CHECK(slurp(a / "mc_summary.csv") == slurp(b / "mc_summary.csv"));
    const std::vector<std::string> rows = lines(a / "mc_summary.csv");
    REQUIRE(rows.size() == 2);
    CHECK(fields(rows[1])[4] == "2000");
}

TEST_CASE("simulate with a path dump")
{
    const fs::path dir = scratch("dump");
    const Run r = run({"simulate", "--config", benchmark_config, "--n-paths", "10", "--dt",
                       "0.015625", "--dump-paths", "--output-dir", dir.string()});
    REQUIRE(r.code == exit_ok);
    CHECK(lines(dir / "paths.csv").size() == 11);
    CHECK(fields(lines(dir / "mc_summary.csv")[1])[4] == "10");
}

TEST_CASE("simulate rejects an incompatible step")
{
    const fs::path dir = scratch("grid");
    CHECK(run({"simulate", "--config", benchmark_config, "--n-paths", "10", "--dt", "0.3",
               "--output-dir", dir.string()})
              .code == exit_config);
}

TEST_CASE("verify")
{
    SUBCASE("one check")
    {
        const fs::path dir = scratch("verify_one");
        const Run r = run({"verify", "--config", benchmark_config, "--checks", "riccati-equivalence",
                           "--output-dir", dir.string()});
        CHECK(r.code == exit_ok);
        CHECK(lines(dir / "report.csv").size() == 2);
        CHECK(r.out.find("overall pass") != std::string::npos);
    }
    SUBCASE("no checks")
    {
        const fs::path dir = scratch("verify_none");
        const Run r = run({"verify", "--config", benchmark_config, "--checks", "",
                           "--output-dir", dir.string()});
        CHECK(r.code == exit_ok);
        CHECK(lines(dir / "report.csv").size() == 1);
    }
    SUBCASE("failure")
    {
        const fs::path dir = scratch("verify_fail");
        const Run r = run({"verify", "--config", benchmark_config, "--checks", "no-such-check",
                           "--output-dir", dir.string()});
        CHECK(r.code == exit_verify);
    }
}

TEST_CASE("sweep")
{
    SUBCASE("increasing certainty equivalent")
    {
        const fs::path dir = scratch("sweep");
        REQUIRE(run({"sweep", "--config", benchmark_config, "--theta-sweep", "0.1:1:3",
                     "--output-dir", dir.string()})
                    .code == exit_ok);
        const std::vector<std::string> rows = lines(dir / "sweep.csv");
        REQUIRE(rows.size() == 4);
        CHECK(rows[0] == "theta,CE,alpha1_0,eta,exists");
        double prev = -1e300;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const std::vector<std::string> f = fields(rows[i]);
            CHECK(f[4] == "true");
            const double ce = std::stod(f[1]);
            CHECK(ce >= prev);
            prev = ce;
        }
        CHECK(std::stod(fields(rows[3])[0]) == 1.0);
    }
    SUBCASE("escape rows")
    {
        const fs::path dir = scratch("sweep_blowup");
        REQUIRE(run({"sweep", "--config", benchmark_config, "--theta-sweep", "1:100:2",
                     "--output-dir", dir.string()})
                    .code == exit_ok);
        const std::vector<std::string> rows = lines(dir / "sweep.csv");
        REQUIRE(rows.size() == 3);
        CHECK(fields(rows[2])[4] == "false");
    }
    SUBCASE("single point and empty range")
    {
        const fs::path dir = scratch("sweep_single");
        REQUIRE(run({"sweep", "--config", benchmark_config, "--theta-sweep", "0.5:0.5:1",
                     "--output-dir", dir.string()})
                    .code == exit_ok);
        CHECK(lines(dir / "sweep.csv").size() == 2);
        CHECK(run({"sweep", "--config", benchmark_config, "--theta-sweep", "0.5:1:0",
                   "--output-dir", dir.string()})
                  .code == exit_config);
    }
}
