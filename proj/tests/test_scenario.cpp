#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <gtest/gtest.h>

#include "fluxgrow/scenario.hpp"

using namespace fluxgrow;
namespace fs = std::filesystem;

namespace
{
    fs::path fresh_dir(const std::string& name)
    {
        const auto dir = fs::temp_directory_path() / ("fluxgrow_test_" + name);
        fs::remove_all(dir);
        return dir;
    }

    std::string slurp(const fs::path& p)
    {
        std::ifstream in(p, std::ios::binary);
        return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    }

    std::vector<std::string> problems_of(const Json& doc, const std::string& out = "unused")
    {
        try
        {
            run_scenario(parse_config(doc), (fresh_dir(out)).string());
        }
        catch (const ConfigError& e)
        {
            return e.problems();
        }
        return {};
    }

    bool mentions(const std::vector<std::string>& problems, const std::string& text)
    {
        for (const auto& p : problems)
            if (p.find(text) != std::string::npos)
                return true;
        return false;
    }

    Json small_couplings()
    {
        return {{"scenario", "couplings"},
                {"parameters", {{"profile", "KappaStep1"}, {"a", 0.01}, {"m_max", 1}, {"n_max", 1}}}};
    }
}

TEST(Config, ListNamesEveryScenario)
{
    const auto text = list_scenarios();
    for (const char* name : {"couplings:", "stirap:", "losses:", "fqh-report:", "grow:"})
        EXPECT_NE(text.find(name), std::string::npos) << name;
    EXPECT_NE(text.find("* gamma_T"), std::string::npos);
    EXPECT_THROW(schema_for("nope"), ConfigError);
}

TEST(Config, TopLevelProblems)
{
    EXPECT_THROW(parse_config(Json::array()), ConfigError);
    EXPECT_THROW(parse_config(Json{{"scenario", "warp"}}), ConfigError);
    EXPECT_THROW(parse_config(Json{{"parameters", Json::object()}}), ConfigError);

    auto doc = small_couplings();
    doc["colour"] = "red";
    doc["formats"] = {"csv", "xml"};
    const auto p = problems_of(doc);
    EXPECT_TRUE(mentions(p, "colour: unknown key"));
    EXPECT_TRUE(mentions(p, "formats: entries"));
}

TEST(Config, LoadReportsUnreadableAndMalformedFiles)
{
    EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
    const auto dir = fresh_dir("malformed");
    fs::create_directories(dir);
    std::ofstream(dir / "bad.json") << "{\"scenario\": ";
    EXPECT_THROW(load_config((dir / "bad.json").string()), ConfigError);
    std::ofstream(dir / "good.json") << small_couplings().dump();
    EXPECT_EQ(load_config((dir / "good.json").string()).scenario, "couplings");
}

TEST(Config, AllParameterProblemsAreCollected)
{
    const Json doc = {{"scenario", "couplings"},
                      {"parameters", {{"profile", "Kappa"}, {"m_max", -1}, {"n_max", 1.5}, {"extra", 1}}}};
    const auto p = problems_of(doc);
    EXPECT_TRUE(mentions(p, "profile: must be"));
    EXPECT_TRUE(mentions(p, "m_max: must be nonnegative"));
    EXPECT_TRUE(mentions(p, "n_max: expected an integer"));
    EXPECT_TRUE(mentions(p, "extra: unknown key"));

    EXPECT_TRUE(mentions(problems_of({{"scenario", "couplings"}, {"parameters", Json::object()}}),
                         "m_max: required key missing"));
    EXPECT_TRUE(mentions(problems_of({{"scenario", "couplings"},
                                      {"parameters", {{"profile", "KappaTildeStep2"}, {"m_max", 0}, {"n_max", 1}}}}),
                         "m_max: step-two tables need m_max >= 1"));
}

TEST(Config, StirapUnitGroupsCannotMix)
{
    const Json doc = {{"scenario", "stirap"},
                      {"parameters", {{"Omega_T", 50.0}, {"g_MHz", 0.45}, {"T_us", 1.0}, {"a", 0.01}}}};
    const auto p = problems_of(doc);
    EXPECT_TRUE(mentions(p, "cannot be mixed"));
    EXPECT_TRUE(mentions(problems_of({{"scenario", "stirap"}, {"parameters", {{"Omega_MHz", 1.0}, {"g_MHz", 1.0}, {"a", 0.01}}}}),
                         "T_us: required positive"));
}

TEST(Config, GrowEnergiesAndValidity)
{
    EXPECT_TRUE(mentions(problems_of({{"scenario", "grow"}, {"parameters", {{"g_a", 0.2}}}}), "raw values require V0"));
    EXPECT_TRUE(mentions(problems_of({{"scenario", "grow"}, {"parameters", {{"V0", 1.0}, {"g_a", 0.2}, {"g_a_over_V0", 0.2}}}}),
                         "not both"));
    EXPECT_TRUE(mentions(problems_of({{"scenario", "grow"}, {"parameters", Json::object()}}), "g_a_over_Delta_LN"));
    EXPECT_TRUE(mentions(problems_of({{"scenario", "grow"}, {"parameters", {{"N_target", 9}, {"override_validity", true}}}}),
                         "N_target: at most"));
}

TEST(Config, MissingOutputDirectory)
{
    EXPECT_THROW(run_scenario(parse_config(small_couplings()), ""), ConfigError);
}

TEST(Run, CouplingsWritesTableSummaryAndManifest)
{
    const auto dir = fresh_dir("couplings");
    const auto outcome = run_scenario(parse_config(small_couplings()), dir.string());
    EXPECT_EQ(outcome.files, (std::vector<std::string>{"couplings.csv", "summary.json", "manifest.json"}));
    for (const auto& f : outcome.files)
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    const auto manifest = Json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(manifest["code_version"], code_version);
    EXPECT_EQ(manifest["scenario"], "couplings");
    EXPECT_EQ(manifest["config"], small_couplings());
    EXPECT_EQ(manifest["resolved"]["method"], "Quadrature");
    EXPECT_EQ(manifest["resolved"]["n_max"], 1);
    const auto summary = Json::parse(slurp(dir / "summary.json"));
    EXPECT_GT(summary["entries"].get<int>(), 0);
    EXPECT_LT(summary["max_abs_residual_coupling"].get<double>(), 1e-2);
}

TEST(Run, RepeatedRunsAreByteIdentical)
{
    const auto d1 = fresh_dir("repeat1"), d2 = fresh_dir("repeat2");
    const Json doc = {{"scenario", "losses"},
                      {"parameters",
                       {{"gamma_T", 100.0}, {"Omega_T", {20.0, 80.0}}, {"g_T", {{"lo", 1.0}, {"hi", 50.0}, {"count", 3}}}}}};
    run_scenario(parse_config(doc), d1.string());
    run_scenario(parse_config(doc), d2.string());
    for (const char* f : {"surface.csv", "summary.json", "manifest.json"})
    {
        ASSERT_TRUE(fs::exists(d1 / f)) << f;
        EXPECT_EQ(slurp(d1 / f), slurp(d2 / f)) << f;
    }
    const auto summary = Json::parse(slurp(d1 / "summary.json"));
    EXPECT_EQ(summary["rows"].size(), 2u);
    EXPECT_LE(summary["F_max"].get<double>(), 1.0);
}

TEST(Run, FormatSelection)
{
    const auto dir = fresh_dir("formats");
    auto doc = small_couplings();
    doc["formats"] = {"json"};
    const auto outcome = run_scenario(parse_config(doc), dir.string());
    EXPECT_EQ(outcome.files, (std::vector<std::string>{"summary.json", "manifest.json"}));
    EXPECT_FALSE(fs::exists(dir / "couplings.csv"));
}

TEST(Run, StirapSummary)
{
    const auto dir = fresh_dir("stirap");
    const Json doc = {{"scenario", "stirap"},
                      {"parameters",
                       {{"Omega_MHz", 12.4}, {"g_MHz", 0.45}, {"delta_MHz", 0.13}, {"T_us", 1.0}, {"a", 0.01},
                        {"n_max", 2}, {"points_per_step", 11}}}};
    run_scenario(parse_config(doc), dir.string());
    const auto summary = Json::parse(slurp(dir / "summary.json"));
    EXPECT_GT(summary["transfer_at_t1"][0].get<double>(), 0.95);
    EXPECT_GT(summary["final_efficiency"].get<double>(), 0.9);
    const auto manifest = Json::parse(slurp(dir / "manifest.json"));
    EXPECT_NEAR(manifest["resolved"]["g_T"].get<double>(), 2.0 * pi * 0.45, 1e-12);
    EXPECT_EQ(manifest["resolved"]["angular_frequency_unit"], "rad/us");
}

TEST(Run, FqhReportSmall)
{
    const auto dir = fresh_dir("fqh");
    const Json doc = {{"scenario", "fqh-report"}, {"parameters", {{"N_max", 2}}}};
    const auto outcome = run_scenario(parse_config(doc), dir.string());
    EXPECT_TRUE(fs::exists(dir / "laughlin_N2.csv"));
    const auto summary = Json::parse(slurp(dir / "summary.json"));
    EXPECT_EQ(summary["pump_overlaps"].size(), 2u);
    EXPECT_NEAR(summary["pump_overlaps"][1]["pump_overlap"].get<double>(), std::sqrt(10.0 / 11.0), 1e-10);
    bool found = false;
    for (const auto& s : summary["sectors"])
        if (s["N"] == 2 && s["L"] == 6)
        {
            found = true;
            EXPECT_EQ(s["zero_modes"], 1);
            EXPECT_NEAR(s["laughlin_projection"].get<double>(), 1.0, 1e-10);
        }
    EXPECT_TRUE(found);
}

TEST(Run, GrowSinglePhoton)
{
    const auto dir = fresh_dir("grow");
    const Json doc = {{"scenario", "grow"}, {"parameters", {{"N_target", 1}, {"override_validity", true}}}};
    run_scenario(parse_config(doc), dir.string());
    const auto summary = Json::parse(slurp(dir / "summary.json"));
    EXPECT_NEAR(summary["final_p_LN1"].get<double>(), 1.0, 1e-8);
    EXPECT_EQ(summary["target_L"], 0);
    EXPECT_EQ(summary["stages"].size(), 1u);
    EXPECT_EQ(summary["validity_flags"].size(), 4u);
    const auto csv = slurp(dir / "trace.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\r')), "t,p_0,p_3,mean_N,mean_L,norm,stage");
}
