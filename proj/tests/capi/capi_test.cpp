// Exercises the shared library through its C header only.

#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "citeaudit/citeaudit.h"

namespace fs = std::filesystem;

namespace {

struct Ctx {
    ca_context* p = nullptr;
    ~Ctx() { ca_context_destroy(p); }
};

std::string take(char* s) {
    std::string out = s ? s : "";
    ca_string_free(s);
    return out;
}

fs::path temp_file(const std::string& name, const std::string& body) {
    const auto p = fs::temp_directory_path() / ("citeaudit_capi_" + std::to_string(::getpid()) + "_" + name);
    std::ofstream(p) << body;
    return p;
}

std::string data(const std::string& rel) { return std::string(CITEAUDIT_TEST_DATA) + "/" + rel; }

}  // namespace

TEST(CApi, StatusNames) {
    EXPECT_STREQ(ca_status_name(CA_OK), "Ok");
    EXPECT_STREQ(ca_status_name(CA_CONFIG_INVALID), "ConfigInvalid");
    EXPECT_STREQ(ca_status_name(CA_VALIDATION_FAILED), "ValidationFailed");
    EXPECT_STREQ(ca_status_name(CA_SINGLE_GROUP), "SingleGroup");
    EXPECT_STREQ(ca_status_name(static_cast<ca_status>(57)), "Unknown");
    EXPECT_NE(std::string(ca_version()), "");
}

TEST(CApi, ContextAndPatch) {
    Ctx c;
    ASSERT_EQ(ca_context_create(nullptr, &c.p), CA_OK);
    EXPECT_EQ(ca_context_patch(c.p, R"({"thresholds": {"ipa": 3}, "crawl": {"user_agent": "x-bot"}})"), CA_OK);
    char* cfg = nullptr;
    ASSERT_EQ(ca_config_json(c.p, &cfg), CA_OK);
    const auto text = take(cfg);
    EXPECT_NE(text.find("\"x-bot\""), std::string::npos);
    EXPECT_NE(text.find("\"ipa\": 3"), std::string::npos);

    EXPECT_EQ(ca_context_patch(c.p, R"({"nope": 1})"), CA_CONFIG_INVALID);
    EXPECT_NE(std::string(ca_last_error(c.p)).find("nope"), std::string::npos);
    EXPECT_EQ(ca_context_patch(c.p, "{not json"), CA_CONFIG_INVALID);
    EXPECT_EQ(ca_context_patch(c.p, nullptr), CA_INVALID_ARGUMENT);
    EXPECT_EQ(ca_context_set_out_dir(nullptr, "x"), CA_INVALID_ARGUMENT);

    Ctx bad;
    const auto path = temp_file("bad.json", R"({"judge": {"backend": "carrier-pigeon"}})");
    EXPECT_EQ(ca_context_create(path.c_str(), &bad.p), CA_CONFIG_INVALID);
    EXPECT_NE(std::string(ca_last_error(bad.p)), "");
    fs::remove(path);
}

TEST(CApi, MatricesAndStageErrors) {
    Ctx c;
    ASSERT_EQ(ca_context_create(nullptr, &c.p), CA_OK);
    char* m = nullptr;
    ASSERT_EQ(ca_matrices(c.p, &m), CA_OK);
    const auto grid = take(m);
    EXPECT_NE(grid.find("QI1\t1\t5\t3\t4\t2\t1"), std::string::npos);
    EXPECT_NE(grid.find("SD10\t4\t3\t4\t4\t4\t3"), std::string::npos);

    const auto out = fs::temp_directory_path() / ("citeaudit_capi_out_" + std::to_string(::getpid()));
    ca_context_set_out_dir(c.p, out.c_str());
    char* res = nullptr;
    EXPECT_EQ(ca_run_stages(c.p, "judge", "judge", &res), CA_STAGE_INPUT_MISSING);
    EXPECT_EQ(ca_run_stages(c.p, "score", "crawl", &res), CA_CONFIG_INVALID);
    EXPECT_EQ(ca_run_stages(c.p, "bogus", "score", &res), CA_INVALID_ARGUMENT);
    EXPECT_EQ(res, nullptr);
    fs::remove_all(out);
}

TEST(CApi, MasterValidationReplayAndConvert) {
    Ctx c;
    ASSERT_EQ(ca_context_create(nullptr, &c.p), CA_OK);
    char* rep = nullptr;
    EXPECT_EQ(ca_validate_master(c.p, data("io/master_invalid.parquet").c_str(), &rep), CA_VALIDATION_FAILED);
    EXPECT_NE(take(rep).find("\"violations\": 2"), std::string::npos);
    ASSERT_EQ(ca_validate_master(c.p, data("io/master_plain.parquet").c_str(), &rep), CA_OK);
    take(rep);

    const auto dir = fs::temp_directory_path() / ("citeaudit_capi_replay_" + std::to_string(::getpid()));
    ASSERT_EQ(ca_replay(c.p, data("io/master_invalid.parquet").c_str(), dir.c_str(), &rep), CA_OK);
    EXPECT_NE(take(rep).find("\"rows_valid\": 3"), std::string::npos);
    EXPECT_TRUE(fs::exists(dir / "aggregate.json"));

    ca_context_set_strict(c.p, 1);
    EXPECT_EQ(ca_replay(c.p, data("io/master_invalid.parquet").c_str(), dir.c_str(), &rep), CA_VALIDATION_FAILED);
    EXPECT_NE(std::string(ca_last_error(c.p)).find("row 3"), std::string::npos);

    const auto tsv = dir / "copy.tsv";
    ASSERT_EQ(ca_convert_master(c.p, data("io/master_plain.parquet").c_str(), tsv.c_str()), CA_OK);
    ASSERT_EQ(ca_validate_master(c.p, tsv.c_str(), &rep), CA_OK);
    EXPECT_NE(take(rep).find("\"rows_valid\": 60"), std::string::npos);
    fs::remove_all(dir);
}

TEST(CApi, AgreementTables) {
    Ctx c;
    ASSERT_EQ(ca_context_create(nullptr, &c.p), CA_OK);
    const auto ratings = temp_file("ratings.tsv", "id\ta\tb\n1\t1\t1\n2\t3\t3\n3\t2\t2\n4\t5\t5\n5\t4\t4\n");
    char* out = nullptr;
    ASSERT_EQ(ca_rating_stats(c.p, ratings.c_str(), &out), CA_OK);
    const auto s = take(out);
    for (const char* key : {"\"kappa\": 1.0", "\"pearson_r\": 1.0", "\"kendall_tau_b\": 1.0", "\"icc\": 1.0"})
        EXPECT_NE(s.find(key), std::string::npos) << key << "\n" << s;

    const auto one = temp_file("one.tsv", "id\ta\n1\t1\n");
    EXPECT_EQ(ca_rating_stats(c.p, one.c_str(), &out), CA_INSUFFICIENT_ANNOTATORS);

    const auto judged = temp_file("judged.csv", "id,judge,h1,h2,h3\n1,ASF5,ASF5,ASF5,ASF4\n2,ASF1,ASF1,ASF1,\n"
                                                "3,ASF3,ASF3,ASF2,ASF3\n4,ASF5,ASF5,ASF5,ASF5\n");
    ASSERT_EQ(ca_validate_judge(c.p, judged.c_str(), &out), CA_OK);
    EXPECT_NE(take(out).find("\"raw_agreement\": 1.0"), std::string::npos);
    const auto nojudge = temp_file("nojudge.csv", "id,h1,h2\n1,a,b\n");
    EXPECT_EQ(ca_validate_judge(c.p, nojudge.c_str(), &out), CA_SCHEMA_MISMATCH);
    for (const auto& p : {ratings, one, judged, nojudge}) fs::remove(p);
}
