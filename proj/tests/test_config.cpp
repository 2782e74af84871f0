#include "doctest.h"

#include "tppmix/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace tppmix;
using nlohmann::json;

TEST_CASE("defaults convert without error") {
    const auto c = run_config_from_json(json::object());
    CHECK(c.seed == 0);
    CHECK(c.generate.per_cluster == 200);
    CHECK(c.generate.horizon == 100.0);
    CHECK(c.evaluate.bin_width == 5.0);
    CHECK(c.training.em.clusters == 2);
}

TEST_CASE("unknown keys and wrong types are rejected with their path") {
    auto expect_error = [](const json& doc, const std::string& fragment) {
        try {
            run_config_from_json(doc);
            FAIL("accepted " << doc.dump());
        } catch (const std::invalid_argument& e) {
            CHECK(std::string(e.what()).find(fragment) != std::string::npos);
        }
    };
    expect_error({{"sed", 1}}, "sed");
    expect_error({{"training", {{"em", {{"clustres", 3}}}}}}, "training.em.clustres");
    expect_error({{"seed", "one"}}, "seed");
    expect_error({{"generate", {{"per_cluster", 1.5}}}}, "generate.per_cluster");
    expect_error({{"training", {{"policy", {{"cell", "gru"}}}}}}, "");
    expect_error({{"evaluate", {{"metrics", {"purity", "accuracy"}}}}}, "accuracy");
    expect_error({{"evaluate", {{"bin_width", 0.0}}}}, "bin_width");
    // a float slot takes an integer
    CHECK(run_config_from_json({{"generate", {{"horizon", 50}}}}).generate.horizon == 50.0);
}

TEST_CASE("overrides") {
    json doc = json::object();
    apply_override(doc, "training.em.clusters=4");
    apply_override(doc, "generate.clusters=[\"constant\",\"sine\"]");
    apply_override(doc, "dataset=data.jsonl");
    apply_override(doc, "dataset=123");   // string slot keeps the raw text
    apply_override(doc, "training.gail.discount=0.5");
    const auto c = run_config_from_json(doc);
    CHECK(c.training.em.clusters == 4);
    CHECK(c.generate.clusters == std::vector<std::string>{"constant", "sine"});
    CHECK(c.dataset == "123");
    CHECK(c.training.gail.discount == 0.5);
    CHECK_THROWS_AS(apply_override(doc, "training.em.nope=1"), std::invalid_argument);
    CHECK_THROWS_AS(apply_override(doc, "no_equals"), std::invalid_argument);
    CHECK_THROWS_AS(apply_override(doc, "=3"), std::invalid_argument);
    CHECK_THROWS_AS(apply_override(doc, "seed=abc"), std::invalid_argument);
}

TEST_CASE("echoed configuration reproduces itself") {
    json doc = json::object();
    apply_override(doc, "seed=9");
    apply_override(doc, "training.policy.hidden_dim=12");
    const auto c = run_config_from_json(doc);
    const json echoed = to_json(c);
    const auto again = run_config_from_json(echoed);
    CHECK(to_json(again) == echoed);
}

TEST_CASE("config files") {
    const auto dir = std::filesystem::temp_directory_path() / "tppmix_config_test";
    std::filesystem::create_directories(dir);
    const auto good = dir / "good.json";
    std::ofstream(good) << R"({"seed": 5, "training": {"em": {"max_iterations": 3}}})";
    const auto doc = load_config_document(good);
    const auto c = run_config_from_json(doc);
    CHECK(c.seed == 5);
    CHECK(c.training.em.max_iterations == 3);
    const auto bad = dir / "bad.json";
    std::ofstream(bad) << "{not json";
    CHECK_THROWS_AS(load_config_document(bad), std::invalid_argument);
    CHECK_THROWS_AS(load_config_document(dir / "missing.json"), std::runtime_error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("output directory resolution") {
    RunConfig c;
    c.output_dir = "explicit";
    CHECK(resolve_output_dir(c) == "explicit");
    c.output_dir.clear();
    ::setenv("TPPMIX_OUTPUT_DIR", "from-env", 1);
    CHECK(resolve_output_dir(c) == "from-env");
    ::unsetenv("TPPMIX_OUTPUT_DIR");
    CHECK(resolve_output_dir(c) == "tppmix-out");
}
