#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rxnc/distinguisher.hpp"

using namespace rxnc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code = -1;
    std::string out;
};

Outcome run_cli(const std::string& args) {
    const fs::path capture = fs::temp_directory_path() / "rxnc_cli_stdout.txt";
    const std::string cmd = std::string(RXNC_CLI_PATH) + " " + args + " > " + capture.string() + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    Outcome o;
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(capture);
    std::stringstream ss;
    ss << in.rdbuf();
    o.out = ss.str();
    return o;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("rxnc_cli_" + name);
    fs::remove_all(p);
    return p;
}

TEST(Cli, ListsAllWeightTwoCandidates) {
    const Outcome o = run_cli("sweep-rxd --cipher simon --hw 2 --list-only");
    ASSERT_EQ(o.code, 0);
    EXPECT_EQ(std::count(o.out.begin(), o.out.end(), '\n'), 2040);
}

TEST(Cli, GenDataIndependentOfWorkers) {
    const fs::path a = scratch("gen_a"), b = scratch("gen_b");
    const std::string common = "gen-data --cipher simeck --rounds 5 --size 3000 ";
    ASSERT_EQ(run_cli(common + "--seed 4 -j 1 -o " + a.string()).code, 0);
    ASSERT_EQ(run_cli(common + "--seed 4 -j 2 -o " + b.string()).code, 0);
    EXPECT_EQ(slurp(a / "dataset.bin"), slurp(b / "dataset.bin"));
    EXPECT_EQ(slurp(a / "manifest.json"), slurp(b / "manifest.json"));
    EXPECT_EQ(run_cli("--verify " + a.string()).code, 0);

    // Artifact from a different config no longer matches the manifest.
    const fs::path c = scratch("gen_c");
    ASSERT_EQ(run_cli(common + "--seed 5 -o " + c.string()).code, 0);
    fs::copy_file(c / "dataset.bin", a / "dataset.bin", fs::copy_options::overwrite_existing);
    EXPECT_NE(run_cli("--verify " + a.string()).code, 0);
    for (const auto& p : {a, b, c}) fs::remove_all(p);
}

TEST(Cli, EvalAgreesWithLibrary) {
    const fs::path t = scratch("train"), g = scratch("data"), e = scratch("eval");
    ASSERT_EQ(run_cli("train --cipher simon --rounds 3 --train-size 4000 --val-size 1000 --epochs 2 -o " + t.string())
                  .code,
              0);
    ASSERT_EQ(run_cli("gen-data --cipher simon --rounds 3 --size 2000 --seed 9 -o " + g.string()).code, 0);
    const Outcome o = run_cli("eval -m " + (t / "model.bin").string() + " -d " + (g / "dataset.bin").string() +
                              " -o " + e.string());
    ASSERT_EQ(o.code, 0);
    double acc = -1;
    ASSERT_EQ(std::sscanf(o.out.c_str(), "accuracy %lf", &acc), 1);
    const EvalReport r = evaluate(load_model((t / "model.bin").string()), load_dataset((g / "dataset.bin").string()));
    EXPECT_NEAR(acc, r.accuracy, 1e-6);
    for (const auto& p : {t, g, e}) fs::remove_all(p);
}

TEST(Cli, RejectsBadInput) {
    const fs::path d = scratch("bad");
    EXPECT_EQ(run_cli("gen-data --set bogus=1 -o " + d.string()).code, 2);
    EXPECT_EQ(run_cli("gen-data --set format.k=0 -o " + d.string()).code, 2);
    EXPECT_NE(run_cli("gen-data --no-such-flag").code, 0);
    EXPECT_NE(run_cli("attack --preset unknown -o " + d.string()).code, 0);
    fs::remove_all(d);
}

}  // namespace
