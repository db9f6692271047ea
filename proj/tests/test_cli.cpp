#include <gtest/gtest.h>

#include <cstdlib>
#include <sys/wait.h>

#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string err;
};

Run run_cli(const std::string& args, const fs::path& dir) {
    const auto err = dir / "stderr.txt";
    const std::string cmd = std::string(MVDIS_CLI_PATH) + " " + args + " 2>" + err.string() + " >" +
                            (dir / "stdout.txt").string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, fixture::slurp(err)};
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fixture::temp_dir(::testing::UnitTest::GetInstance()->current_test_info()->name());
    }
    void TearDown() override { fs::remove_all(dir); }
    std::string p(const std::string& rel) const { return (dir / rel).string(); }
    fs::path dir;
};

}  // namespace

TEST_F(Cli, FitThenPredict) {
    ASSERT_EQ(run_cli("synth --kind blobs --n 40 --seed 2 --out-dir " + p("ds"), dir).code, 0);
    ASSERT_EQ(run_cli("fit --manifest " + p("ds/manifest.json") + " --model-out " + p("m.bin") + " --trees 16", dir).code,
              0);
    const auto r = run_cli("predict --model " + p("m.bin") + " --manifest " + p("ds/manifest.json") + " --out " +
                             p("pred.txt"),
                         dir);
    ASSERT_EQ(r.code, 0) << r.err;
    const auto pred = fixture::slurp(dir / "pred.txt");
    EXPECT_EQ(pred, fixture::slurp(dir / "ds/labels.txt"));
    EXPECT_NE(r.err.find("accuracy"), std::string::npos) << r.err;
}

TEST_F(Cli, MissingLabelsAtFitIsADataError) {
    fixture::write_text(dir / "a.csv", "1\n2\n3\n4\n");
    fixture::write_text(dir / "m.json", R"({"name":"x","views":["a.csv"]})");
    const auto r = run_cli("fit --manifest " + p("m.json") + " --model-out " + p("m.bin"), dir);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("labels"), std::string::npos) << r.err;
}

TEST_F(Cli, UnknownMethodIsAConfigError) {
    ASSERT_EQ(run_cli("synth --kind blobs --n 20 --out-dir " + p("ds"), dir).code, 0);
    const auto r = run_cli("bench --manifest " + p("ds/manifest.json") + " --methods plain,lmnn --report-out " +
                             p("r.json"),
                         dir);
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("lmnn"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(dir / "r.json"));
}

TEST_F(Cli, BadFlagValueIsRejected) {
    EXPECT_EQ(run_cli("synth --kind spiral --out-dir " + p("ds"), dir).code, 1);
    EXPECT_EQ(run_cli("fit --manifest x --model-out y --trees 0", dir).code, 1);
}

TEST_F(Cli, SeededRunsAreByteIdenticalAcrossJobs) {
    ASSERT_EQ(run_cli("synth --kind noisyleaf --n 40 --seed 3 --out-dir " + p("ds"), dir).code, 0);
    const std::string m = " --manifest " + p("ds/manifest.json");
    const std::string common = " --measure ih --trees 12 --k 3 --seed 9";
    ASSERT_EQ(run_cli("dissim" + m + common + " --jobs 1 --out-dir " + p("d1"), dir).code, 0);
    ASSERT_EQ(run_cli("dissim" + m + common + " --jobs 3 --out-dir " + p("d2"), dir).code, 0);
    for (const char* f : {"view_0.csv", "view_1.csv", "joint.csv", "joint.csv.meta.json"})
        EXPECT_EQ(fixture::slurp(dir / "d1" / f), fixture::slurp(dir / "d2" / f)) << f;

    const std::string b = "bench" + m + " --trees 8 --k 3 --repeats 2 --seed 4 --format json,markdown,csv";
    ASSERT_EQ(run_cli(b + " --jobs 1 --report-out " + p("r1.json"), dir).code, 0);
    ASSERT_EQ(run_cli(b + " --jobs 2 --report-out " + p("r2.json"), dir).code, 0);
    for (const char* ext : {".json", ".md", ".csv"})
        EXPECT_EQ(fixture::slurp(dir / (std::string("r1") + ext)), fixture::slurp(dir / (std::string("r2") + ext)))
            << ext;

    ASSERT_EQ(run_cli("fit" + m + common + " --model-out " + p("a.bin"), dir).code, 0);
    ASSERT_EQ(run_cli("fit" + m + common + " --jobs 2 --model-out " + p("b.bin"), dir).code, 0);
    EXPECT_EQ(fixture::slurp(dir / "a.bin"), fixture::slurp(dir / "b.bin"));
}

TEST_F(Cli, HelpShowsDefaults) {
    ASSERT_EQ(run_cli("bench --help", dir).code, 0);
    const auto out = fixture::slurp(dir / "stdout.txt");
    EXPECT_NE(out.find("0.5"), std::string::npos) << out;
    EXPECT_NE(out.find("512"), std::string::npos) << out;
}
