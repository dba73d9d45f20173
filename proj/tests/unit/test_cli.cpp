#include "cli.hpp"
#include "puck/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

using puck::cli::run_command;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "puck");
    std::ostringstream out, err;
    const int code = run_command(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<nlohmann::json> records(const std::string& text) {
    std::istringstream in(text);
    return puck::io::read_report(in);
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("puck_cli_" + name);
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("simulate is byte-identical across runs with the same seed") {
        const auto a = temp_file("a.csv");
        const auto b = temp_file("b.csv");
        const std::vector<std::string> args{"simulate", "--b-quad", "0.5", "--m", "4", "--sigma",
                                            "0.1", "--n", "1500", "--seed", "11"};
        auto args_a = args;
        args_a.insert(args_a.end(), {"--out", a.string()});
        auto args_b = args;
        args_b.insert(args_b.end(), {"--out", b.string()});
        REQUIRE(run(args_a).code == 0);
        REQUIRE(run(args_b).code == 0);
        const auto text = slurp(a);
        CHECK(text == slurp(b));
        CHECK(std::count(text.begin(), text.end(), '\n') == 1505);
        auto other = args;
        other[args.size() - 1] = "12";
        CHECK(run(other).out != run(args).out);
        std::filesystem::remove(a);
        std::filesystem::remove(b);
    }

    TEST_CASE("fit, scan and classify read a simulated file") {
        const auto path = temp_file("in.csv");
        REQUIRE(run({"simulate", "--b-quad", "0.5", "--m", "4", "--sigma", "0.03", "--n", "2400",
                     "--seed", "3", "--out", path.string()})
                    .code == 0);

        const auto fit = run({"fit", "--input", path.string()});
        REQUIRE(fit.code == 0);
        auto recs = records(fit.out);
        CHECK(recs.front()["record"] == "header");
        CHECK(recs.back()["record"] == "selection");
        CHECK(recs.back()["best"]["family"] == "quadratic");
        CHECK(recs.back()["regime"]["state"] == "stable");

        const auto scan = run({"scan", "--input", path.string(), "--window", "1000", "--step", "500"});
        REQUIRE(scan.code == 0);
        recs = records(scan.out);
        std::size_t windows = 0;
        for (const auto& r : recs) windows += r["record"] == "window";
        CHECK(windows == 3);
        CHECK(recs.back()["record"] == "summary");
        CHECK(recs.back()["windows"] == 3);

        const auto cls = run({"classify", "--input", path.string(), "--criterion", "bic"});
        CHECK(cls.code == 0);
        const auto pot = run({"potential", "--input", path.string(), "--m", "4", "--bins", "15"});
        CHECK(pot.code == 0);
        std::filesystem::remove(path);
    }

    TEST_CASE("stability prints the m = 2 interval") {
        const auto r = run({"stability", "--m", "2"});
        REQUIRE(r.code == 0);
        const auto recs = records(r.out);
        CHECK(recs.back()["b_low"].get<double>() == doctest::Approx(-2.0).epsilon(1e-8));
        CHECK(recs.back()["b_high"].get<double>() == doctest::Approx(2.0).epsilon(1e-8));
    }

    TEST_CASE("classify from coefficients") {
        const auto r = run({"classify", "--b-quad", "-0.5", "--m", "2"});
        REQUIRE(r.code == 0);
        CHECK(records(r.out).back()["regime"]["state"] == "unstable");
    }

    TEST_CASE("exit codes") {
        CHECK(run({}).code == 2);
        CHECK(run({"bogus"}).code == 2);
        CHECK(run({"fit", "--criterion", "hqic", "--input", "x"}).code == 2);
        CHECK(run({"fit", "--input", "/nonexistent/prices.csv"}).code == 1);
        CHECK(run({"stability", "--m", "1"}).code == 1);
        CHECK(run({"barrier", "--b-quad", "0.6", "--b-nl", "0"}).code == 1);
        CHECK(run({"--help"}).code == 0);
    }
}
