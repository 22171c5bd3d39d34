// End-to-end checks of the command-line binary: exit codes, report and CSV
// outputs, config/flag merging, and byte-level reproducibility.
#include <catch2/catch_amalgamated.hpp>

#include "flab/io.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const std::string kBin = FLAB_BIN;
const fs::path kRoot = fs::path(FLAB_TEST_TMP) / "cli";

fs::path fresh_dir(const std::string& name) {
    fs::path dir = kRoot / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run_cli(const std::string& args) {
    fs::create_directories(kRoot);
    std::string cmd = kBin + " " + args + " > " + (kRoot / "last_log.txt").string() +
                      " 2>&1";
    int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json read_report(const fs::path& dir) {
    return nlohmann::json::parse(slurp(dir / "report.json"));
}

std::size_t line_count(const std::string& text) {
    std::size_t n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

}  // namespace

TEST_CASE("axioms subcommand passes on the transport contraction preset", "[cli]") {
    fs::path dir = fresh_dir("axioms_pass");
    int code = run_cli("axioms --preset transport-contraction --out-dir " + dir.string());
    CHECK(code == 0);

    auto rep = read_report(dir);
    CHECK(rep.at("command") == "axioms");
    for (const char* v : {"p1", "p2", "p3", "p4", "p5"})
        CHECK(rep.at("verdicts").at(v) == true);
    CHECK(rep.at("all_pass") == true);
    CHECK(rep.contains("metadata"));
    CHECK(rep.at("metadata").contains("written_at"));

    std::string csv = slurp(dir / "norm_profile.csv");
    CHECK(csv.rfind("t,norm_estimate,log_norm_estimate\n", 0) == 0);
    CHECK(line_count(csv) >= 5);
    CHECK(csv.find('\r') == std::string::npos);
}

TEST_CASE("counterexample exits 1 by default and 0 with the expected failure",
          "[cli]") {
    fs::path dir = fresh_dir("counterexample_default");
    int code = run_cli("counterexample --alpha 2 --t-ladder 1e-1..1e-6 --out-dir " +
                       dir.string());
    CHECK(code == 1);

    auto rep = read_report(dir);
    CHECK(rep.at("verdicts").at("p4") == false);
    for (const char* v : {"p1", "p2", "p3", "p5", "blowup_monotone", "forward_equation",
                          "row_sums"})
        CHECK(rep.at("verdicts").at(v) == true);
    CHECK(rep.at("log_s_gap").get<double>() > 10.0);
    CHECK(line_count(slurp(dir / "blowup.csv")) == 7);       // header + six decades
    CHECK(line_count(slurp(dir / "forward_residuals.csv")) == 28);  // 9 states x 3 times

    fs::path dir2 = fresh_dir("counterexample_expected");
    int code2 = run_cli(
        "counterexample --alpha 2 --t-ladder 1e-1..1e-6 --expect-fail p4 --out-dir " +
        dir2.string());
    CHECK(code2 == 0);
    CHECK(read_report(dir2).at("overall_pass") == true);
}

TEST_CASE("invalid configurations exit with code 2", "[cli]") {
    fs::path dir = fresh_dir("bad_configs");

    write_file(dir / "empty.json", "");
    CHECK(run_cli("axioms --config " + (dir / "empty.json").string()) == 2);

    write_file(dir / "garbage.json", "this is { not json");
    CHECK(run_cli("axioms --config " + (dir / "garbage.json").string()) == 2);

    write_file(dir / "unknown_key.json", R"({"command":"axioms","bogus":1})");
    CHECK(run_cli("axioms --config " + (dir / "unknown_key.json").string()) == 2);

    write_file(dir / "wrong_command.json", R"({"command":"poly"})");
    CHECK(run_cli("axioms --config " + (dir / "wrong_command.json").string()) == 2);

    CHECK(run_cli("poly --preset no-such-process --out-dir " + dir.string()) == 2);
    CHECK(run_cli("axioms --preset no-such-backend --out-dir " + dir.string()) == 2);
    CHECK(run_cli("counterexample --t-ladder 1e-1..3e-4 --out-dir " + dir.string()) == 2);
    CHECK(run_cli("counterexample --expect-fail p9 --out-dir " + dir.string()) == 2);
    CHECK(run_cli("no-such-subcommand") == 2);
    CHECK(run_cli("") == 2);  // a subcommand is required
}

TEST_CASE("poly subcommand writes generator and moment tables", "[cli]") {
    fs::path dir = fresh_dir("poly_default");
    CHECK(run_cli("poly --preset bm --out-dir " + dir.string()) == 0);

    std::string gen = slurp(dir / "generator.csv");
    CHECK(gen.rfind("row,1,x,x^2\n", 0) == 0);
    CHECK(line_count(gen) == 4);  // header + one row per basis monomial

    std::string moments = slurp(dir / "moments.csv");
    CHECK(moments.rfind("t,x0,f,value\n", 0) == 0);
    CHECK(line_count(moments) == 1 + 3 * 3 * 4);  // times x starts x functions
}

TEST_CASE("stochastic outputs are byte-identical under a fixed seed", "[cli]") {
    std::string flags =
        "poly --preset ou --mc-compare --dt 0.01 --n-paths 2000 --seed 42 "
        "--times 0.25 0.5 --x0s 0 1 --out-dir ";
    fs::path d1 = fresh_dir("repro_a");
    fs::path d2 = fresh_dir("repro_b");
    CHECK(run_cli(flags + d1.string()) == 0);
    CHECK(run_cli(flags + d2.string()) == 0);

    CHECK(slurp(d1 / "mc_compare.csv") == slurp(d2 / "mc_compare.csv"));
    CHECK(slurp(d1 / "moments.csv") == slurp(d2 / "moments.csv"));

    // reports agree except for the timestamped metadata and the echoed out_dir
    auto r1 = read_report(d1), r2 = read_report(d2);
    for (auto* r : {&r1, &r2}) {
        r->erase("metadata");
        r->erase("config");
    }
    CHECK(r1.dump() == r2.dump());
}

TEST_CASE("diffusion subcommand simulates, summarizes, and dumps paths", "[cli]") {
    fs::path dir = fresh_dir("diffusion_dump");
    fs::path dump = dir / "paths.bin";
    int code = run_cli(
        "diffusion --preset ou --T 0.5 --dt 0.01 --n-paths 500 --seed 9 --x0 1 "
        "--dump " +
        dump.string() + " --out-dir " + dir.string());
    CHECK(code == 0);

    auto rep = read_report(dir);
    CHECK(rep.at("verdicts").at("finite_paths") == true);
    CHECK(rep.at("n_flagged") == 0);

    flab::PathDumpHeader head = flab::read_path_dump_header(dump.string());
    CHECK(head.n_paths == 500);
    CHECK(head.snapshots == 51);
    CHECK(head.dim == 1);

    std::string csv = slurp(dir / "snapshots.csv");
    CHECK(csv.rfind("t,mean,second_moment\n", 0) == 0);
    CHECK(line_count(csv) == 52);
}

TEST_CASE("extended subcommand closes the survival triangle", "[cli]") {
    fs::path dir = fresh_dir("extended_triangle");
    int code = run_cli(
        "extended --preset bm --omega 1 --T 0.5 --dt 0.01 --n-paths 4000 --seed 5 "
        "--x0 0 --indicator \"x(0.5)>0\" --out-dir " +
        dir.string());
    CHECK(code == 0);

    auto rep = read_report(dir);
    for (const char* v : {"killed_vs_q", "killed_vs_reweighted", "q_vs_reweighted",
                          "rn_equivalence"})
        CHECK(rep.at("verdicts").at(v) == true);
    CHECK(line_count(slurp(dir / "triangle.csv")) == 4);
    CHECK(line_count(slurp(dir / "rn_rows.csv")) == 2);
}

TEST_CASE("transport and approx subcommands pass on their defaults", "[cli]") {
    fs::path t_dir = fresh_dir("transport_linear");
    CHECK(run_cli("transport --flow linear --a -0.5 --out-dir " + t_dir.string()) == 0);
    std::string growth = slurp(t_dir / "growth_profile.csv");
    CHECK(growth.rfind("t,C_t\n", 0) == 0);

    fs::path a_dir = fresh_dir("approx_small");
    CHECK(run_cli("approx --degrees 3 5 --grid-n 201 --out-dir " + a_dir.string()) == 0);
    CHECK(line_count(slurp(a_dir / "approx_ladder.csv")) == 3);
}

TEST_CASE("flags override values from a config file", "[cli]") {
    fs::path dir = fresh_dir("merge");
    write_file(dir / "cfg.json",
               R"({"command":"counterexample","alpha":2.0,"t_ladder":"1e-1..1e-6",)"
               R"("expect_fail":"p4"})");
    int code = run_cli("counterexample --config " + (dir / "cfg.json").string() +
                       " --t-ladder 1e-1..1e-2 --out-dir " + dir.string());
    CHECK(code == 0);  // expect_fail p4 comes from the file, the ladder from the flag
    auto rep = read_report(dir);
    CHECK(rep.at("expect_fail") == "p4");
    CHECK(line_count(slurp(dir / "blowup.csv")) == 3);  // header + the two decades
}
