#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "routechain/cli/config.hpp"
#include "routechain/cli/runner.hpp"

using namespace routechain::cli;
namespace fs = std::filesystem;

namespace {

struct Invocation {
    int code;
    std::string out;
    std::string err;
};

Invocation invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "routechain");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string header_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line))
        if (line.empty() || line[0] != '#') return line;
    return "";
}

fs::path scratch() {
    const auto dir = fs::temp_directory_path() / "routechain_cli_test";
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("experiment outputs carry the documented columns") {
    const auto dir = scratch();
    struct Case {
        std::vector<std::string> args;
        std::string header;
    };
    const std::vector<Case> cases{
        {{"sample", "--samples", "50", "--n_hops", "20"}, "index,distance"},
        {{"density", "--samples", "200", "--n_hops", "20", "--bins", "10"}, "bin_lo,bin_hi,density,stderr,analytic"},
        {{"moments", "--samples", "200", "--n_hops", "20", "--bootstrap", "20"}, "order,empirical,ci_low,ci_high,analytic"},
        {{"fig3", "--samples", "100", "--n_hops", "50", "--bins", "10"}, "xi_over_L,mean_r_over_L,mode_r_over_L"},
        {{"recover-xi", "--mean_r2", "50", "--length", "100"},
         "length,mean_r2,ci_low,ci_high,xi_hat,xi_ci_low,xi_ci_high,a_eff_hat,saturated"},
        {{"graph-scaling", "--n_list", "50,100,200,500", "--pairs_per_n", "10"}, "N,mean_length_meters,stderr"},
        {{"capacity", "--n_list", "50,100,200"}, "N,per_node_throughput,capacity_bit_meters"},
    };
    for (const auto& c : cases) {
        auto args = c.args;
        const auto out = dir / (c.args[0] + ".csv");
        args.insert(args.end(), {"--out", out.string()});
        const auto r = invoke(args);
        INFO(c.args[0], " ", r.err);
        REQUIRE(r.code == kOk);
        CHECK(header_line(out) == c.header);
    }
    CHECK(header_line(dir / "fig3_xiL_0.001.csv") == "bin_lo,bin_hi,density,stderr");
    CHECK(header_line(dir / "graph-scaling_fit.csv") == "exponent,stderr,ci_low,ci_high,r_squared,excluded");
    fs::remove_all(dir);
}

TEST_CASE("output embeds the resolved configuration and nine significant digits") {
    const auto dir = scratch();
    const auto out = dir / "s.csv";
    REQUIRE(invoke({"sample", "--samples", "5", "--n_hops", "30", "--seed", "4", "--out", out.string()}).code == kOk);
    const auto text = slurp(out);
    CHECK(text.find("# seed=4\n") != std::string::npos);
    CHECK(text.find("# n_hops=30\n") != std::string::npos);
    CHECK(text.find("# out=") == std::string::npos);
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("index", 0) == 0) continue;
        const auto value = line.substr(line.find(',') + 1);
        std::size_t digits = 0;
        for (char ch : value.substr(0, value.find('e')))
            if (std::isdigit(static_cast<unsigned char>(ch))) ++digits;
        CHECK(digits <= 9);
    }
    CHECK(format_cell(1.0 / 3.0, "x") == "0.333333333");
    CHECK_THROWS(format_cell(std::nan(""), "x"));
    fs::remove_all(dir);
}

TEST_CASE("reruns are byte-identical at 1 and 8 threads") {
    const auto dir = scratch();
    const std::vector<std::vector<std::string>> runs{
        {"sample", "--strategy", "drs", "--xi", "5", "--samples", "300", "--n_hops", "100"},
        {"moments", "--samples", "300", "--n_hops", "40", "--bootstrap", "50", "--orders", "0,1,2"},
        {"fig3", "--samples", "200", "--n_hops", "100", "--bins", "10"},
        {"graph-scaling", "--n_list", "50,100,200,500", "--pairs_per_n", "10", "--route", "greedy"},
        {"capacity", "--n_list", "50,100,200", "--repetitions", "2"},
    };
    for (const auto& base : runs) {
        for (const char* fmt : {"csv", "json"}) {
            auto a = base, b = base;
            a.insert(a.end(), {"--threads", "1", "--format", fmt, "--out", (dir / "one.out").string()});
            b.insert(b.end(), {"--threads", "8", "--format", fmt, "--out", (dir / "eight.out").string()});
            REQUIRE(invoke(a).code == kOk);
            REQUIRE(invoke(b).code == kOk);
            INFO(base[0], " ", fmt);
            CHECK(slurp(dir / "one.out") == slurp(dir / "eight.out"));
        }
    }
    fs::remove_all(dir);
}

TEST_CASE("exit codes") {
    const auto dir = scratch();
    const auto out = (dir / "x.csv").string();
    CHECK(invoke({"sample", "--xi", "-1", "--strategy", "drs", "--out", out}).code == kInvalidConfig);
    CHECK(invoke({"sample", "--dimension", "5", "--out", out}).code == kInvalidConfig);
    CHECK(invoke({"sample", "--samples", "0", "--out", out}).code == kInvalidConfig);
    CHECK(invoke({"sample", "--bogus", "1"}).code == kInvalidConfig);
    CHECK(invoke({}).code == kInvalidConfig);
    CHECK(invoke({"sample", "--samples", "3", "--out", "/nonexistent-dir/x.csv"}).code == kIoFailure);
    CHECK(invoke({"sample", "--config", (dir / "missing.cfg").string()}).code == kIoFailure);
    CHECK(invoke({"recover-xi", "--mean_r2", "200", "--length", "10", "--out", out}).code == kInvalidConfig);
    CHECK(invoke({"--help"}).code == kOk);
    fs::remove_all(dir);
}

TEST_CASE("validate lists every problem") {
    const auto r = invoke({"validate", "--experiment", "sample", "--xi", "-2", "--dimension", "7", "--samples", "-5"});
    CHECK(r.code == kInvalidConfig);
    CHECK(r.err.find("xi:") != std::string::npos);
    CHECK(r.err.find("dimension:") != std::string::npos);
    CHECK(r.err.find("samples:") != std::string::npos);
    CHECK(invoke({"validate", "--experiment", "moments"}).code == kOk);
}

TEST_CASE("configuration files") {
    const auto dir = scratch();
    const auto cfg = dir / "run.cfg";
    {
        std::ofstream f(cfg);
        f << "# a comment\nexperiment = sample\nstrategy = drs\nxi = 3   # inline\nn_hops=40\nsamples = 20\n";
    }
    const auto kv = read_config_file(cfg);
    CHECK(kv.at("xi") == "3");
    CHECK(kv.at("n_hops") == "40");
    const auto c = resolve(kv);
    CHECK(c.strategy.persistence_radius == 3.0);
    CHECK(c.n_hops == 40);

    const auto out = dir / "from_cfg.csv";
    REQUIRE(invoke({"sample", "--config", cfg.string(), "--samples", "7", "--out", out.string()}).code == kOk);
    CHECK(slurp(out).find("# samples=7\n") != std::string::npos);  // flags override the file

    {
        std::ofstream f(cfg);
        f << "xi = 1\nxi = 2\n";
    }
    CHECK_THROWS_AS(read_config_file(cfg), ConfigError);
    {
        std::ofstream f(cfg);
        f << "colour = blue\n";
    }
    const auto d = validate(read_config_file(cfg));
    CHECK_FALSE(d.ok());
    fs::remove_all(dir);
}

TEST_CASE("regime warnings") {
    KeyValues kv{{"experiment", "density"}, {"strategy", "drs"}, {"xi", "0.001"}, {"n_hops", "1000"}};
    CHECK_FALSE(validate(kv).warnings.empty());
    kv["xi"] = "10";
    CHECK(validate(kv).warnings.empty());
}
