#include <catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "../tools/cli.hpp"
#include "oracles.hpp"

using crossnorm::cli::json;

namespace {

struct Invocation {
    int code;
    std::string out;
    std::string err;
    json doc() const { return json::parse(out); }
};

Invocation invoke(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = crossnorm::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("expectation on the n = 2 circle is sqrt(2/pi)") {
    const auto r = invoke({"expectation", "--u", "0.6,0.8", "--p", "inf"});
    REQUIRE(r.code == 0);
    const auto d = r.doc();
    CHECK(d["tool"] == "crossnorm");
    CHECK(d["command"] == "expectation");
    CHECK(d["seed"] == 0);
    CHECK(d["inputs"]["p"] == "inf");
    CHECK(d["results"]["value"].get<double>() == Catch::Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-12));
    const double mc = oracle::supnorm_by_sampling(std::vector<double>{0.6, 0.8}, 200000, 7).mean;
    CHECK(std::fabs(d["results"]["value"].get<double>() - mc) < 0.01);
}

TEST_CASE("ek-table reports 50 rows and a monotone chain") {
    const auto r = invoke({"ek-table", "--n", "50"});
    REQUIRE(r.code == 0);
    const auto d = r.doc();
    CHECK(d["results"]["rows"].size() == 50);
    CHECK(d["results"]["monotone"] == true);
    const double e3 = d["results"]["rows"][2]["value"].get<double>();
    const double oracle3 = oracle::supnorm_by_sampling(std::vector<double>(3, 1.0 / std::sqrt(3.0)), 200000, 3).mean;
    CHECK(std::fabs(e3 - oracle3) < 0.01);
}

TEST_CASE("phase --n2p2 gives the three thresholds") {
    const auto r = invoke({"phase", "--n2p2"});
    REQUIRE(r.code == 0);
    const auto d = r.doc()["results"];
    CHECK(d["q_L"]["value"].get<double>() == Catch::Approx(1.5).margin(1e-6));
    CHECK(d["q_M"]["value"].get<double>() == Catch::Approx(1.5349).margin(1e-4));
    CHECK(d["q_U"]["value"].get<double>() == Catch::Approx(2.0).margin(1e-4));
}

TEST_CASE("identical arguments give byte-identical output") {
    const std::vector<std::string> args{"--seed", "11", "mc-norm", "--cov", "0.5,0.2;0.2,0.5", "--samples", "30000"};
    const auto a = invoke(args);
    const auto b = invoke(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);

    auto threaded = args;
    threaded.insert(threaded.begin(), {"--threads", "4"});
    const auto c = invoke(threaded);
    REQUIRE(c.code == 0);
    CHECK(c.doc()["results"].dump() == a.doc()["results"].dump());
    CHECK(c.doc()["seed"] == 11);

    const auto d = invoke({"--seed", "12", "mc-norm", "--cov", "0.5,0.2;0.2,0.5", "--samples", "30000"});
    CHECK(d.doc()["results"]["mean"] != a.doc()["results"]["mean"]);
}

TEST_CASE("global flags may follow the subcommand") {
    const auto a = invoke({"--format", "csv", "ek-table", "--n", "3"});
    const auto b = invoke({"ek-table", "--n", "3", "--format", "csv"});
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out.rfind("k,value,asymptotic_ratio\n", 0) == 0);
    CHECK(std::count(a.out.begin(), a.out.end(), '\n') == 4);
}

TEST_CASE("csv floats round-trip exactly") {
    const auto j = invoke({"ek-table", "--n", "4"}).doc();
    const auto c = invoke({"--format", "csv", "ek-table", "--n", "4"}).out;
    std::istringstream in(c);
    std::string line;
    std::getline(in, line);
    for (int k = 0; k < 4; ++k) {
        std::getline(in, line);
        const auto cells = crossnorm::cli::split(line, ',');
        CHECK(std::strtod(cells[1].c_str(), nullptr) == j["results"]["rows"][k]["value"].get<double>());
    }
}

TEST_CASE("usage errors exit 2 with a message") {
    for (const auto& args : std::vector<std::vector<std::string>>{
             {"--bogus"},
             {},
             {"expectation", "--u", "0.6,abc"},
             {"expectation", "--u", "0.6,0.8", "--unknown"},
             {"mc-norm", "--cov", "1,0;0"},
             {"mc-norm", "--cov", "1,2;3,4"},
             {"expectation", "--u", "0.6,0.8", "--p", "0.5"},
             {"bound", "--radii", "1,2,3"},
             {"--rel-tol", "-1", "expectation", "--u", "1"},
             {"--format", "xml", "ek-table", "--n", "2"},
         }) {
        const auto r = invoke(args);
        INFO(r.err);
        CHECK(r.code == 2);
        CHECK_FALSE(r.err.empty());
    }
}

TEST_CASE("check failures exit 1") {
    // Three random starts, one iteration each: nothing converges.
    const auto r = invoke({"optimize", "--p", "inf", "--q", "1.5", "--n", "3", "--no-candidates", "--starts", "3",
                           "--max-iter", "1"});
    CHECK(r.code == 1);
    const auto d = r.doc();
    CHECK(d["status"] == "check_failed");
    CHECK(d["results"]["converged"] == false);
    CHECK(d["results"]["best_point"].size() == 3);
}

TEST_CASE("check commands exit 0 when the inequality holds") {
    CHECK(invoke({"lemma2", "--c-max", "5", "--step", "0.5"}).code == 0);
    CHECK(invoke({"lemma1", "--x-max", "3", "--step", "0.1"}).code == 0);
    CHECK(invoke({"sidak", "--cov", "0.5,0.3;0.3,0.5", "--samples", "20000"}).code == 0);
    CHECK(invoke({"theorem2", "--cov", "0.25,0,0,0;0,0.25,0,0;0,0,0.25,0;0,0,0,0.25", "--samples", "20000"}).code == 0);
    const auto t = invoke({"c-table", "--n", "2:20"});
    CHECK(t.code == 0);
    CHECK(t.doc()["results"]["rows"].size() == 19);
}

TEST_CASE("every listed subcommand runs") {
    const std::vector<std::vector<std::string>> cases{
        {"expectation", "--u", "1,2,3", "--p", "3"},
        {"ek-table", "--n", "3"},
        {"ekq-table", "--n", "3", "--q", "1"},
        {"median", "--n", "2,10"},
        {"critical-residual", "--u", "0.5,0.3,0.2"},
        {"r-rho", "--n", "3", "--points", "3", "--t", "0.5,1"},
        {"optimize", "--n", "2", "--q", "1.5", "--starts", "1"},
        {"landscape", "--q", "1.2", "--curve-points", "5"},
        {"phase", "--p", "2", "--q-grid", "1.2,2.5"},
        {"explore-qgt2", "--n", "2", "--q", "3", "--starts", "1"},
        {"mc-norm", "--cov", "1", "--p", "2", "--samples", "1000"},
        {"sidak", "--cov", "1", "--t", "1", "--samples", "1000"},
        {"theorem2", "--cov", "1", "--samples", "1000"},
        {"v1", "--axes", "1,1"},
        {"bound", "--radii", "2,1"},
        {"c-table", "--n", "2,3"},
        {"lemma1", "--x", "0.5,1", "--q", "1"},
        {"lemma2", "--c", "0,1"},
    };
    for (const auto& args : cases) {
        const auto r = invoke(args);
        INFO(args.front() << ": " << r.err);
        CHECK(r.code == 0);
        CHECK(r.doc()["command"] == args.front());
    }
}

TEST_CASE("plot data files have x,y columns") {
    const std::string path = "test_cli_plot.csv";
    const auto r = invoke({"--plot-data", path, "landscape", "--p", "2", "--q", "1.8", "--curve-points", "9"});
    REQUIRE(r.code == 0);
    std::ifstream f(path);
    std::string line;
    std::getline(f, line);
    CHECK(line == "x,y");
    std::size_t rows = 0;
    while (std::getline(f, line)) ++rows;
    CHECK(rows == 9);
    std::remove(path.c_str());
    const auto pts = r.doc()["results"]["points"];
    CHECK(pts.size() == 5);
    CHECK(pts[1]["type"] == "min");
}

TEST_CASE("seed defaults to the environment") {
    ::setenv("CROSSNORM_SEED", "99", 1);
    const auto r = invoke({"ek-table", "--n", "1"});
    ::unsetenv("CROSSNORM_SEED");
    CHECK(r.doc()["seed"] == 99);
    CHECK(invoke({"ek-table", "--n", "1"}).doc()["seed"] == 0);
}

TEST_CASE("vector and matrix parsing") {
    using namespace crossnorm::cli;
    CHECK(parse_vector("1,2.5,inf") == std::vector<double>{1.0, 2.5, crossnorm::infinity});
    CHECK_THROWS_AS(parse_vector("1,,2"), usage_error);
    CHECK_THROWS_AS(parse_vector("1,2,"), usage_error);
    CHECK_THROWS_AS(parse_vector("1e"), usage_error);
    const auto m = parse_matrix("1,2;3,4");
    CHECK(m(1, 0) == 3.0);
    CHECK(parse_index_list("2:4,10") == std::vector<std::size_t>{2, 3, 4, 10});
    CHECK_THROWS_AS(parse_index_list("5:2"), usage_error);
    CHECK_THROWS_AS(parse_index_list("1.5"), usage_error);
}
