#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "oracles.hpp"

using namespace rosenthal;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> v;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) v.push_back(l);
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> v;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            v.push_back(cur);
            cur.clear();
        } else cur += ch;
    }
    v.push_back(cur);
    return v;
}

std::string temp_file(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream(path) << content;
    return path.string();
}

} // namespace

TEST(CliBound, EvenMode) {
    const auto r = run({"bound", "--p", "4", "--A", "1", "--B", "1", "--mode", "even", "--output", "json"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["value"].get<double>(), 4.0);
    EXPECT_EQ(j["regime"], "even_p_closed_form");
}

TEST(CliBound, P5Certificate) {
    const auto r = run({"bound", "--p", "5", "--q", "5", "--A", "1", "--B", "1", "--output", "json"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_NEAR(j["value"].get<double>(), oracle::centered_poisson_abs_moment(1.0, 5.0), 1e-11);
    EXPECT_EQ(j["certificate"][0]["lambda"].get<double>(), 1.0);
    EXPECT_EQ(j["certificate"][0]["c"].get<double>(), 1.0);
    EXPECT_GT(j["error_budget"].get<double>(), 0.0);
}

TEST(CliBound, GaussianRegime) {
    const auto r = run({"bound", "--p", "2.5", "--A", "1", "--B", "1", "--output", "csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto ls = lines(r.out);
    ASSERT_EQ(ls.size(), 2u);
    EXPECT_EQ(ls[0], "value,regime,lambda,c,achieved_sign,error_budget");
    const double v = std::strtod(split(ls[1], ',')[0].c_str(), nullptr);
    EXPECT_NEAR(v, 1 + std::pow(2.0, 1.25) * std::tgamma(1.75) / std::sqrt(std::numbers::pi), 1e-12);
}

TEST(CliBound, SymmetricAndCombinedModes) {
    auto r = run({"bound", "--p", "5", "--mode", "symmetric", "--output", "json"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(nlohmann::json::parse(r.out)["regime"], "symmetric");
    r = run({"bound", "--p", "5", "--mode", "combined", "--A1", "2", "--B1", "1", "--output", "json"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(nlohmann::json::parse(r.out)["certificate"].size(), 2u);
}

TEST(CliBound, BackgroundFromFile) {
    const auto path = temp_file("rosenthal_x.json", R"({"atoms": [[-1, 0.5], [1, 0.5]]})");
    const auto r = run({"bound", "--p", "5", "--X", path, "--output", "json"});
    ASSERT_EQ(r.code, 0) << r.err;
    const double expected = exact_bound(5, 5, 1, 1, DiscreteRV::rademacher()).value;
    EXPECT_EQ(nlohmann::json::parse(r.out)["value"].get<double>(), expected);
    EXPECT_EQ(nlohmann::json::parse(r.out)["achieved_sign"], "both");
}

TEST(CliBound, ExitCodes) {
    EXPECT_EQ(run({"bound", "--p", "3.5"}).code, cli::kUnsupported);
    EXPECT_EQ(run({"bound", "--p", "6", "--q", "4.5"}).code, cli::kUnsupported);
    EXPECT_EQ(run({"bound", "--p", "5", "--A", "abc"}).code, cli::kParseError);
    EXPECT_EQ(run({"bound", "--p", "5", "--bogus"}).code, cli::kParseError);
    EXPECT_EQ(run({"bound", "--p", "5", "--X", "/nonexistent/x.json"}).code, cli::kParseError);
    EXPECT_EQ(run({"bound", "--p", "5", "--X", temp_file("bad.json", "{not json")}).code, cli::kParseError);
    const auto shifted = temp_file("shifted.json", R"({"atoms": [[0, 0.5], [2, 0.5]]})");
    const auto r = run({"bound", "--p", "5", "--X", shifted});
    EXPECT_EQ(r.code, cli::kParseError);
    EXPECT_NE(r.err.find("mean zero"), std::string::npos);
    // Non-centred X is fine for p in (2,3].
    EXPECT_EQ(run({"bound", "--p", "2.5", "--X", shifted}).code, 0);
    EXPECT_EQ(run({}).code, cli::kParseError);
}

TEST(CliConstants, Table) {
    const auto r = run({"constants", "--p", "4,6,3.5", "--gamma", "1", "--output", "csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto ls = lines(r.out);
    ASSERT_EQ(ls.size(), 4u);
    EXPECT_EQ(ls[0], "p,gamma,exact_C,classical_C,ratio");
    auto row4 = split(ls[1], ',');
    EXPECT_EQ(std::strtod(row4[2].c_str(), nullptr), 4.0);
    EXPECT_EQ(std::strtod(row4[3].c_str(), nullptr), 1024.0);
    EXPECT_EQ(std::strtod(row4[4].c_str(), nullptr), 256.0);
    auto row6 = split(ls[2], ',');
    EXPECT_EQ(std::strtod(row6[2].c_str(), nullptr), 41.0);
    EXPECT_NEAR(std::strtod(row6[3].c_str(), nullptr), 884736.0, 1e-6);
    auto row35 = split(ls[3], ',');
    EXPECT_EQ(row35[2], "unsupported");
}

TEST(CliVerify, FuzzSuite) {
    const auto r = run({"verify", "fuzz", "--cases", "40", "--seed", "7", "--p", "5", "--output", "json"});
    EXPECT_EQ(r.code, 0) << r.err;
    const auto ls = lines(r.out);
    ASSERT_EQ(ls.size(), 40u);
    const auto first = nlohmann::json::parse(ls[0]);
    for (const char* key : {"case_id", "seed", "p", "q", "lhs", "rhs", "slack", "status"})
        EXPECT_TRUE(first.contains(key)) << key;
    EXPECT_EQ(first["seed"].get<std::uint64_t>(), 7u);
    EXPECT_EQ(first["status"], "pass");
}

TEST(CliVerify, OtherSuites) {
    auto r = run({"verify", "variation", "--cases", "3"});
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("max relative FD error"), std::string::npos);
    r = run({"verify", "qscan", "--p", "5", "--grid", "10"});
    EXPECT_EQ(r.code, 0) << r.out;
    r = run({"verify", "domination", "--q", "5", "--cases", "5"});
    EXPECT_EQ(r.code, 0) << r.out;
    r = run({"verify", "tightness", "--p", "4"});
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(run({"verify", "nonsense"}).code, cli::kParseError);
}

TEST(CliVerify, FailureExitCode) {
    // For p in (2,3] the supremum over the two-atom family is only approached
    // as |c2| grows, so the grid maximizer is off the axis and the suite fails.
    const auto r = run({"verify", "qscan", "--p", "2.5", "--grid", "8"});
    EXPECT_EQ(r.code, cli::kVerifyFailed) << r.out;
}

TEST(CliScanLimitAccompany, Outputs) {
    auto r = run({"scan", "--p", "5", "--grid", "8", "--output", "json"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = nlohmann::json::parse(lines(r.out)[0]);
    EXPECT_EQ(j["on_axis"], "true");

    r = run({"limit", "--p", "2.5", "--c1", "0.01", "--c2", "10,100,1000", "--output", "csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(lines(r.out).size(), 4u);

    r = run({"accompany", "--p", "4", "--n", "16,4096", "--output", "json"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto ls = lines(r.out);
    ASSERT_EQ(ls.size(), 2u);
    EXPECT_LT(nlohmann::json::parse(ls[1])["gap"].get<double>(), 0.02);
}

// Property: identical commands give byte-identical output.
TEST(CliProperty, Deterministic) {
    for (const auto& args : std::vector<std::vector<std::string>>{
             {"verify", "fuzz", "--cases", "20", "--seed", "3", "--output", "csv"},
             {"constants", "--output", "json"},
             {"scan", "--p", "5.5", "--grid", "6", "--output", "csv"}}) {
        EXPECT_EQ(run(args).out, run(args).out);
    }
}

// Property: every numeric CSV cell parses back to the same double.
TEST(CliProperty, CsvRoundTrip) {
    const auto r = run({"verify", "fuzz", "--cases", "20", "--seed", "11", "--p", "2.5", "--output", "csv"});
    ASSERT_EQ(r.code, 0);
    const auto ls = lines(r.out);
    for (std::size_t i = 1; i < ls.size(); ++i) {
        for (const auto& cell : split(ls[i], ',')) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (*end != '\0') continue;  // status column
            EXPECT_EQ(cli::format_double(v), cell);
        }
    }
    const double tricky[] = {0.1, 1.0 / 3.0, 2.220446049250313e-16, 123456789.123456789, -7e-300};
    for (double v : tricky) EXPECT_EQ(std::strtod(cli::format_double(v).c_str(), nullptr), v);
}

TEST(CliEnvironment, ToleranceOverride) {
    ::setenv("SHARP_ROSENTHAL_TOL", "1e-9", 1);
    EXPECT_EQ(cli::default_tol(), 1e-9);
    EXPECT_EQ(run({"bound", "--p", "5"}).code, 0);
    ::setenv("SHARP_ROSENTHAL_TOL", "zero", 1);
    EXPECT_EQ(run({"bound", "--p", "5"}).code, cli::kParseError);
    ::unsetenv("SHARP_ROSENTHAL_TOL");
    EXPECT_EQ(cli::default_tol(), 1e-12);
}
