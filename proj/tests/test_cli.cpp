/*
 Copyright 2026 The annofix Authors.
 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      http://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include "annofix/cli.hpp"
#include "annofix/config.hpp"
#include "annofix/io.hpp"

#include "support.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdlib>
#include <map>
#include <sys/wait.h>
#include <sstream>

using namespace annofix;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code = 0;
    std::string out;
    std::string err;
};

CliRun cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "annofix");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

/// Runs the installed binary through the shell; returns its exit status.
int exec(const std::string& args)
{
    const std::string cmd = std::string("\"") + ANNOFIX_CLI + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fixture_copy(const std::string& name, const std::string& scratch)
{
    const fs::path dir = annofix::testing::scratch_dir(scratch);
    fs::copy(annofix::testing::data_dir() / name, dir, fs::copy_options::recursive);
    return dir;
}

const std::vector<std::string> kCommands{"traces-normalize", "anomaly-train", "anomaly-score", "anomaly-eval",
                                         "pseudo-run",       "pseudo-stage1", "pseudo-stage2", "pseudo-stage3",
                                         "pseudo-stage4",    "dataset-diff",  "dataset-ap"};

const std::vector<std::string> kChain{"traces-normalize", "anomaly-train", "anomaly-score", "anomaly-eval",
                                      "pseudo-run",       "pseudo-stage4", "dataset-diff",  "dataset-ap"};

}  // namespace

TEST(Cli, HelpOnEverySubcommand)
{
    const CliRun top = cli({"--help"});
    EXPECT_EQ(top.code, 0);
    for (const auto& c : kCommands) {
        EXPECT_NE(top.out.find(c), std::string::npos) << c;
        const CliRun r = cli({c, "--help"});
        EXPECT_EQ(r.code, 0) << c;
        EXPECT_NE(r.out.find("--config"), std::string::npos) << c;
    }
}

TEST(Cli, Version)
{
    const CliRun r = cli({"--version"});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, std::string("annofix ") + kVersion + " (config schema 1)\n");
}

TEST(Cli, UsageErrorsExitTwo)
{
    EXPECT_EQ(cli({}).code, 2);
    EXPECT_EQ(cli({"pseudo-run"}).code, 2);
    EXPECT_EQ(cli({"frobnicate", "--config", "x.json"}).code, 2);
    const CliRun r = cli({"pseudo-run", "--config", "/nonexistent/config.json"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("/nonexistent/config.json"), std::string::npos) << r.err;
}

TEST(Cli, UnknownLadderExitsTwo)
{
    const fs::path dir = fixture_copy("golden", "cli_ladder");
    const CliRun r = cli({"pseudo-run", "--config", (dir / "config.json").string(), "--ladder", "strict"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("strict"), std::string::npos);
}

TEST(Cli, MissingDetectionsNamesThePath)
{
    const fs::path dir = fixture_copy("golden", "cli_missing");
    fs::remove(dir / "detections.ndjson");
    const CliRun r = cli({"pseudo-run", "--config", (dir / "config.json").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("detections.ndjson"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(dir / "out" / "refined_annotations.json"));
}

TEST(Cli, SchemaViolationReportsFileAndLine)
{
    const fs::path dir = fixture_copy("golden", "cli_schema");
    std::string text = read_file(dir / "detections.ndjson");
    // third record gets an out-of-range score
    std::size_t pos = 0;
    for (int i = 0; i < 2; ++i) {
        pos = text.find('\n', pos) + 1;
    }
    const std::size_t score = text.find("\"score\": ", pos);
    const std::size_t end = text.find('}', score);
    text.replace(score, end - score, "\"score\": 1.7");
    write_file(dir / "detections.ndjson", text);

    const CliRun r = cli({"pseudo-run", "--config", (dir / "config.json").string()});
    EXPECT_EQ(r.code, 3);
    const nlohmann::json err = nlohmann::json::parse(r.err).at("error");
    EXPECT_NE(err.at("path").get<std::string>().find("detections.ndjson"), std::string::npos);
    ASSERT_EQ(err.at("records").size(), 1U);
    EXPECT_EQ(err.at("records")[0].at("line"), 3);
    EXPECT_EQ(err.at("records")[0].at("field"), "score");
}

TEST(Cli, MalformedJsonExitsThree)
{
    const fs::path dir = fixture_copy("golden", "cli_malformed");
    write_file(dir / "annotations.json", "{\"images\": [");
    const CliRun r = cli({"pseudo-run", "--config", (dir / "config.json").string()});
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("annotations.json"), std::string::npos);
}

TEST(Cli, BadConfigExitsTwo)
{
    const fs::path dir = fixture_copy("golden", "cli_badconfig");
    write_file(dir / "config.json", R"({"schema_version": 1, "flag_fracton": 0.3})");
    const CliRun r = cli({"pseudo-run", "--config", (dir / "config.json").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("flag_fracton"), std::string::npos) << r.err;
}

TEST(Cli, GoldenPseudoRunThroughBinary)
{
    const fs::path dir = fixture_copy("golden", "cli_golden");
    ASSERT_EQ(exec("pseudo-run --config \"" + (dir / "config.json").string() + "\""), 0);
    EXPECT_EQ(read_file(dir / "out" / "refined_annotations.json"),
              read_file(dir / "expected_refined_annotations.json"));
    EXPECT_EQ(read_file(dir / "out" / "pipeline_report.json"), read_file(dir / "expected_pipeline_report.json"));
}

TEST(Cli, StageDumpsLineUpWithPipeline)
{
    const fs::path dir = fixture_copy("golden", "cli_stages");
    const std::string config = (dir / "config.json").string();
    for (int s = 1; s <= 4; ++s) {
        ASSERT_EQ(cli({"pseudo-stage" + std::to_string(s), "--config", config}).code, 0);
    }
    const auto count = [&](int s) {
        const std::string t = read_file(dir / "out" / "stages" / ("stage" + std::to_string(s) + ".ndjson"));
        return std::count(t.begin(), t.end(), '\n');
    };
    EXPECT_EQ(count(1), 3);
    EXPECT_EQ(count(2), 3);
    EXPECT_EQ(count(3), 2);
    EXPECT_EQ(count(4), 2);
    EXPECT_NE(read_file(dir / "out" / "stages" / "stage2.ndjson").find("\"box_ref\":\"1#2\""), std::string::npos);
}

TEST(Cli, EndToEndChain)
{
    const fs::path dir = fixture_copy("e2e", "cli_e2e");
    const std::string config = (dir / "config.json").string();
    for (const auto& c : kChain) {
        const CliRun r = cli({c, "--config", config});
        ASSERT_EQ(r.code, 0) << c << ": " << r.err;
    }
    const auto eval = nlohmann::json::parse(read_file(dir / "out" / "eval_report.json"));
    EXPECT_EQ(eval.at("fixed").at("accuracy"), 1.0);
    EXPECT_EQ(eval.at("curves").at("auroc"), 1.0);
    const auto report = nlohmann::json::parse(read_file(dir / "out" / "pipeline_report.json"));
    EXPECT_EQ(report.at("flagged_images"), 3);
    const std::string table = read_file(dir / "out" / "diff_report.txt");
    EXPECT_NE(table.find("Difference"), std::string::npos);
    EXPECT_TRUE(fs::exists(dir / "out" / "ap_report.json"));
}

TEST(Cli, TwoRunsAreByteIdentical)
{
    std::map<std::string, std::string> first;
    for (int run = 0; run < 2; ++run) {
        const fs::path dir = fixture_copy("e2e", "cli_det" + std::to_string(run));
        const std::string config = "\"" + (dir / "config.json").string() + "\"";
        for (const auto& c : kChain) {
            ASSERT_EQ(exec(c + " --config " + config + (run == 1 ? " --jobs 4" : " --jobs 1")), 0) << c;
        }
        for (const auto& entry : fs::recursive_directory_iterator(dir / "out")) {
            if (!entry.is_regular_file()) {
                continue;
            }
            const std::string rel = fs::relative(entry.path(), dir).generic_string();
            if (run == 0) {
                first[rel] = read_file(entry.path());
            } else {
                ASSERT_TRUE(first.count(rel)) << rel;
                EXPECT_EQ(first[rel], read_file(entry.path())) << rel;
            }
        }
    }
    EXPECT_GE(first.size(), 10U);
}
