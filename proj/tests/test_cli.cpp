// Copyright 2026 The netloc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run cli(const std::string& args) {
    const std::string cmd = std::string("\"") + NETLOC_CLI_PATH + "\" " + args + " 2>/dev/null";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("netloc_cli_" + std::to_string(::getpid()) + "_" +
                                            ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string path(const std::string& f) const { return "\"" + (dir_ / f).string() + "\""; }
    std::string read(const std::string& f) const {
        std::ifstream in(dir_ / f);
        return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    }
    fs::path dir_;
};

}  // namespace

TEST_F(Cli, CertifyPiOverFour) {
    auto r = cli("triangle certify --theta 0.7853981633974483 --eps1 1 --eps2 1 --deterministic");
    ASSERT_EQ(r.code, 0);
    auto j = nlohmann::json::parse(r.out);
    EXPECT_NEAR(j.at("lhs").get<double>(), 1.0 / 192.0, 1e-15);
    EXPECT_TRUE(j.at("violated").get<bool>());
    EXPECT_EQ(j.at("metadata").at("command"), "triangle certify");
    EXPECT_FALSE(j.at("metadata").contains("timestamp"));
    // xi1 scales with eps1^3.
    auto h = nlohmann::json::parse(cli("triangle certify --theta 0.7853981633974483 --eps1 0.5 --eps2 1 --deterministic").out);
    EXPECT_NEAR(h.at("lhs").get<double>(), 1.0 / 192.0 / 8.0, 1e-15);
}

TEST_F(Cli, ThetaZeroNotViolated) {
    auto r = cli("triangle certify --theta 0 --deterministic");
    ASSERT_EQ(r.code, 0);
    EXPECT_FALSE(nlohmann::json::parse(r.out).at("violated").get<bool>());
}

TEST_F(Cli, ExitCodes) {
    EXPECT_EQ(cli("triangle dist --no-such-flag").code, 1);
    EXPECT_EQ(cli("triangle dist --theta 2").code, 1);
    EXPECT_EQ(cli("triangle certify --eps1 0").code, 1);
    EXPECT_EQ(cli("sample --dist " + path("missing.json")).code, 2);
    EXPECT_EQ(cli("model search --eps1 0.5").code, 1);
}

TEST_F(Cli, SampleZeroIsHeaderOnlyAndEstimateRoundTrips) {
    ASSERT_EQ(cli("triangle dist --theta 0.5 --deterministic --out " + path("d.json")).code, 0);
    ASSERT_EQ(cli("sample --dist " + path("d.json") + " --n 0 --deterministic --out " + path("zero.csv")).code, 0);
    std::string z = read("zero.csv"), last;
    for (std::size_t s = 0, e; s < z.size(); s = e + 1) {
        e = z.find('\n', s);
        if (e == std::string::npos) e = z.size();
        if (z[s] != '#' && e > s) last = z.substr(s, e - s);
        EXPECT_TRUE(z[s] == '#' || last == "a_B,a_C,b_A,b_C,c_A,c_B");
    }
    EXPECT_EQ(last, "a_B,a_C,b_A,b_C,c_A,c_B");

    ASSERT_EQ(cli("sample --dist " + path("d.json") + " --n 2000 --seed 4 --deterministic --out " + path("s.csv")).code, 0);
    auto r = cli("estimate --samples " + path("s.csv") + " --dist " + path("d.json") + " --deterministic");
    ASSERT_EQ(r.code, 0);
    auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j.at("n").get<int>(), 2000);
}

TEST_F(Cli, ConfigFileAndOverride) {
    {
        std::ofstream cfg(dir_ / "c.cfg");
        cfg << "theta = 0\ndeterministic = true\n";
    }
    auto a = cli("triangle certify --config " + path("c.cfg"));
    ASSERT_EQ(a.code, 0);
    EXPECT_FALSE(nlohmann::json::parse(a.out).at("violated").get<bool>());
    auto b = cli("triangle certify --config " + path("c.cfg") + " --theta 0.5");
    ASSERT_EQ(b.code, 0);
    EXPECT_TRUE(nlohmann::json::parse(b.out).at("violated").get<bool>());
}

TEST_F(Cli, DeterministicRerunsAreByteIdentical) {
    auto a = cli("rbbbgb region --u 0.2:0.8:4 --s0 0.3,0.6 --deterministic");
    auto b = cli("rbbbgb region --u 0.2:0.8:4 --s0 0.3,0.6 --deterministic");
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
}
