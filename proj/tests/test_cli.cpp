#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <sys/wait.h>

#include "oracles.hpp"
#include "softrank/halton.hpp"
#include "softrank/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int status = -1;
    std::string out;
};

Result run(const std::string& args) {
    const std::string cmd = std::string("\"") + SOFTRANK_CLI_PATH + "\" " + args + " 2>&1";
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    while (std::fgets(buf, sizeof buf, pipe)) r.out += buf;
    const int raw = pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

std::string fixture(const std::string& name) { return std::string(SOFTRANK_FIXTURE_DIR) + "/" + name; }

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() /
                (std::string("softrank-cli-") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    fs::path operator/(const std::string& name) const { return path_ / name; }
    std::string str() const { return path_.string(); }

private:
    fs::path path_;
};

const std::string kSmallBench =
    "--seed 3 --set data.d=6 --set bench.train_rows=64 --set bench.filter_rows=40 --set bench.num_nonzero=2 "
    "--set bench.repetitions=3 --set bench.amplitudes=5,20 --set bench.alphas=0.05,0.2 --set training.epochs=1 "
    "--set training.batch_size=32";

std::vector<std::vector<std::string>> csv_cells(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST(CliStat, IdenticalFilesPrintZero) {
    const std::string x = fixture("one_d_x.csv");
    const Result r = run("stat --set stat.statistic=sre --set stat.epsilon=10 \"" + x + "\" \"" + x + "\"");
    ASSERT_EQ(r.status, 0) << r.out;
    EXPECT_NEAR(std::stod(r.out), 0.0, 1e-10);
}

TEST(CliStat, OneDimensionalFixtureMatchesSortGolden) {
    // Sort ranks on the Halton base-2 grid, then the V-statistic energy
    // distance; computed outside this project.
    const double golden = 0.21540816326530615;

    const softrank::Matrix x = softrank::read_matrix(fixture("one_d_x.csv"));
    const softrank::Matrix y = softrank::read_matrix(fixture("one_d_y.csv"));
    softrank::Vector pooled(x.rows() + y.rows());
    pooled << x.col(0), y.col(0);
    const softrank::Vector ranks = oracle::sort_ranks(pooled, softrank::halton(pooled.size(), 1).points.col(0));
    EXPECT_NEAR(oracle::energy(ranks.head(x.rows()), ranks.tail(y.rows())), golden, 1e-14);

    const Result r =
        run("stat --set stat.statistic=re \"" + fixture("one_d_x.csv") + "\" \"" + fixture("one_d_y.csv") + "\"");
    ASSERT_EQ(r.status, 0) << r.out;
    EXPECT_NEAR(std::stod(r.out), golden, 1e-12);
}

TEST(CliStat, MissingFileIsDataError) {
    const Result r = run("stat \"" + fixture("one_d_x.csv") + "\" /nonexistent/y.csv");
    EXPECT_EQ(r.status, 2);
    EXPECT_NE(r.out.find("/nonexistent/y.csv"), std::string::npos) << r.out;
}

TEST(CliStat, WidthMismatchIsNonzero) {
    TempDir dir;
    std::ofstream(dir / "wide.csv") << "a,b\n1,2\n3,4\n";
    const Result r = run("stat \"" + fixture("one_d_x.csv") + "\" \"" + (dir / "wide.csv").string() + "\"");
    EXPECT_NE(r.status, 0);
}

TEST(CliStat, UsageErrors) {
    EXPECT_EQ(run("stat --set stat.statistic=median a.csv b.csv").status, 1);
    EXPECT_EQ(run("stat --set stat.colour=red a.csv b.csv").status, 1);
    EXPECT_EQ(run("frobnicate").status, 1);
}

TEST(CliSaturate, RowCountMatchesGrid) {
    TempDir dir;
    const Result r = run(
        "saturate --set saturate.statistic=re --set saturate.shifts=0,1,3 --set saturate.n=20 --set saturate.d=1,2 "
        "--set saturate.epsilon=0 --set saturate.repetitions=3 --out \"" +
        dir.str() + "\"");
    ASSERT_EQ(r.status, 0) << r.out;
    const auto rows = csv_cells(read_text(dir / "saturation.csv"));
    ASSERT_EQ(rows.size(), 1u + 3 * 2);
    EXPECT_EQ(rows[0][0], "s");
    EXPECT_TRUE(fs::exists(dir / "config.ini"));
    EXPECT_TRUE(fs::exists(dir / "manifest.json"));
}

TEST(CliPipeline, TrainThenGenerate) {
    TempDir dir;
    const std::string model_dir = (dir / "model").string();
    Result r = run("train --seed 4 --set data.d=3 --set data.n=40 --set training.epochs=1 --set training.batch_size=8 "
                   "--out \"" + model_dir + "\"");
    ASSERT_EQ(r.status, 0) << r.out;
    ASSERT_TRUE(fs::exists(dir / "model" / "model.json"));
    EXPECT_EQ(csv_cells(read_text(dir / "model" / "training_log.csv")).size(), 2u);

    std::ofstream(dir / "x.csv") << "a,b,c\n1,2,3\n0.5,-1,2\n0,0,0\n";
    const std::string gen_dir = (dir / "gen").string();
    r = run("generate --set generate.model=\"" + model_dir + "/model.json\" --set generate.data=\"" +
            (dir / "x.csv").string() + "\" --out \"" + gen_dir + "\"");
    ASSERT_EQ(r.status, 0) << r.out;
    const auto rows = csv_cells(read_text(dir / "gen" / "knockoffs.csv"));
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[1].size(), 3u);
}

TEST(CliBench, SmokeWithUntrainedGenerator) {
    TempDir dir;
    const Result r = run("bench --set bench.repetitions=1 --set training.epochs=0 --set data.d=6 "
                         "--set bench.num_nonzero=2 --set bench.train_rows=64 --set bench.filter_rows=40 "
                         "--set training.batch_size=32 --out \"" + dir.str() + "\"");
    ASSERT_EQ(r.status, 0) << r.out;
    const auto rows = csv_cells(read_text(dir / "bench_detail.csv"));
    ASSERT_GT(rows.size(), 1u);
    EXPECT_EQ(rows[0][0], "setting");
    EXPECT_EQ(rows[1].size(), rows[0].size());
}

TEST(CliBench, AggregateRecomputesFromDetail) {
    TempDir dir;
    const Result r = run("bench " + kSmallBench + " --out \"" + dir.str() + "\"");
    ASSERT_EQ(r.status, 0) << r.out;
    // detail: setting,amplitude,repetition,fdp,power,tau,n_selected,alpha
    std::map<std::pair<double, double>, std::vector<double>> fdp;
    const auto detail = csv_cells(read_text(dir / "bench_detail.csv"));
    for (std::size_t i = 1; i < detail.size(); ++i)
        fdp[{std::stod(detail[i][1]), std::stod(detail[i][7])}].push_back(std::stod(detail[i][3]));
    const auto aggregate = csv_cells(read_text(dir / "bench_aggregate.csv"));
    ASSERT_EQ(aggregate.size(), 1u + 2 * 2);
    for (std::size_t i = 1; i < aggregate.size(); ++i) {
        const auto& values = fdp.at({std::stod(aggregate[i][1]), std::stod(aggregate[i][2])});
        ASSERT_EQ(values.size(), 3u);
        double mean = 0.0;
        for (double v : values) mean += v / static_cast<double>(values.size());
        EXPECT_NEAR(std::stod(aggregate[i][4]), mean, 1e-12);
    }
}

TEST(CliBench, SameSeedIsByteIdentical) {
    TempDir dir;
    for (const char* name : {"a", "b"}) {
        const Result r = run("bench " + kSmallBench + " --out \"" + (dir / name).string() + "\"");
        ASSERT_EQ(r.status, 0) << r.out;
    }
    const Result r = run("bench " + kSmallBench + " --threads 3 --out \"" + (dir / "c").string() + "\"");
    ASSERT_EQ(r.status, 0) << r.out;
    for (const char* file : {"bench_detail.csv", "bench_aggregate.csv"}) {
        const std::string a = read_text(dir / "a" / file);
        EXPECT_FALSE(a.empty());
        EXPECT_EQ(a, read_text(dir / "b" / file)) << file;
        EXPECT_EQ(a, read_text(dir / "c" / file)) << file;
    }
}
