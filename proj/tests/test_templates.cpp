#include <gtest/gtest.h>

#include <filesystem>

#include "crest/templates.hpp"
#include "crest/lexicon.hpp"

using namespace crest;

TEST(Templates, BundledFilesMatchBuiltinPools) {
    TemplatePools files = TemplatePools::load(std::filesystem::path(CREST_SOURCE_DIR) / "data" / "templates");
    const TemplatePools& b = TemplatePools::builtin();
    EXPECT_EQ(files.room_names, b.room_names);
    EXPECT_EQ(files.adjectives, b.adjectives);
    EXPECT_EQ(files.intros, b.intros);
    EXPECT_EQ(files.exits, b.exits);
    EXPECT_EQ(files.flavor, b.flavor);
    EXPECT_EQ(files.coin, b.coin);
    EXPECT_EQ(files.goals, b.goals);
}

TEST(Templates, PoolSizes) {
    const TemplatePools& p = TemplatePools::builtin();
    EXPECT_NO_THROW(p.validate());
    EXPECT_GE(p.room_names.size(), 16u);
    EXPECT_GE(p.adjectives.size(), 8u);
    EXPECT_GE(p.flavor.size(), 20u);
}

TEST(Templates, FlavorAndGoalsAreActionFree) {
    const TemplatePools& p = TemplatePools::builtin();
    for (const auto& s : p.flavor)
        for (const auto& t : tokenize(s))
            for (const char* bad : {"north", "south", "east", "west", "coin"}) EXPECT_NE(t, bad) << s;
    for (const auto& s : p.goals)
        for (const auto& t : tokenize(s))
            for (const char* bad : {"north", "south", "east", "west"}) EXPECT_NE(t, bad) << s;
    for (const auto& s : p.exits) EXPECT_NE(s.find("{dir}"), std::string::npos);
}

TEST(Templates, SaveLoadRoundTrip) {
    auto dir = std::filesystem::temp_directory_path() / "crest_templates_test";
    std::filesystem::remove_all(dir);
    TemplatePools::builtin().save(dir);
    TemplatePools back = TemplatePools::load(dir);
    EXPECT_EQ(back.flavor, TemplatePools::builtin().flavor);
    std::filesystem::remove_all(dir);
}

TEST(Templates, MissingDirectoryIsAnError) {
    EXPECT_THROW(TemplatePools::load("/nonexistent/crest/templates"), Error);
}
