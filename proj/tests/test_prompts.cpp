#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "critmem/errors.hpp"
#include "critmem/prompts.hpp"
#include "critmem/suggestibility.hpp"
#include "critmem/templates.hpp"

using namespace critmem;

namespace {

std::string read_fixture(const std::string& name) {
    const std::string path = std::string(CRITMEM_FIXTURES_DIR) + "/prompts/" + name;
    std::ifstream in(path, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "missing fixture " << path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// The frozen one-entry scenario every golden file is built from.
struct Scenario {
    LabelSpace space{std::vector<std::string>{"Yes", "No"}, LabelKind::binary};
    TaskInstance example{"e1", "E?", "No", {}};
    TaskInstance question{"q1", "Q?", "No", {}};
    std::vector<TaskInstance> examples;
    std::vector<EpisodicEntry> store;
    VectorIndex index;
    SemanticMemory semantic;
    EmbedProviderHandle embedder = hash_embed_provider(8, 0);

    Scenario() {
        examples.push_back(example);
        EpisodicEntry entry;
        entry.instance = example;
        entry.pa_initial = "Yes";
        entry.critique = {"No", "L", "G",
                          R"({"correct_answer": "No", "local_reason": "L", "global_reason": "G"})",
                          false, false};
        entry.embedding = embed_one(example.question, *embedder);
        store.push_back(entry);
        index.add(example.id, store[0].embedding);
        index.freeze();
        semantic.advice = "S";
        semantic.source_entry_ids = {"e1"};
    }

    StrategyContext context() {
        StrategyContext ctx;
        ctx.examples = &examples;
        ctx.store = &store;
        ctx.index = &index;
        ctx.semantic = &semantic;
        ctx.embedder = embedder.get();
        ctx.k = 5;
        return ctx;
    }
};

} // namespace

TEST_CASE("golden files: all five strategies") {
    Scenario scenario;
    StrategyContext ctx = scenario.context();
    CHECK(render_transcript(assemble(StrategyKind::zero_shot, scenario.question, ctx).messages) ==
          read_fixture("zero_shot.txt"));
    CHECK(render_transcript(assemble(StrategyKind::ep_label, scenario.question, ctx).messages) ==
          read_fixture("ep_label.txt"));
    CHECK(render_transcript(assemble(StrategyKind::ep_crit, scenario.question, ctx).messages) ==
          read_fixture("ep_crit.txt"));
    CHECK(render_transcript(assemble(StrategyKind::sem_crit, scenario.question, ctx).messages) ==
          read_fixture("sem_crit.txt"));
    CHECK(render_transcript(assemble(StrategyKind::ep_sem_crit, scenario.question, ctx).messages) ==
          read_fixture("ep_sem_crit.txt"));
}

TEST_CASE("golden files: probe conditions") {
    Scenario scenario;
    const Critique critique = scenario.store[0].critique;
    CHECK(render_transcript(
              build_probe_prompt(ProbeCondition::XY, scenario.question, "No", {}).messages) ==
          read_fixture("probe_xy.txt"));
    CHECK(render_transcript(build_probe_prompt(ProbeCondition::XY_Crit, scenario.question, "No",
                                               critique)
                                .messages) == read_fixture("probe_xy_crit.txt"));
    CHECK(render_transcript(
              build_probe_prompt(ProbeCondition::X_Crit, scenario.question, "No", critique)
                  .messages) == read_fixture("probe_x_crit.txt"));
}

TEST_CASE("assembly is a pure function") {
    Scenario scenario;
    StrategyContext ctx = scenario.context();
    for (StrategyKind strategy : kAllStrategies) {
        const auto a = assemble(strategy, scenario.question, ctx);
        const auto b = assemble(strategy, scenario.question, ctx);
        CHECK(render_transcript(a.messages) == render_transcript(b.messages));
        CHECK(a.retrieved_ids == b.retrieved_ids);
    }
}

TEST_CASE("ep_crit prompt has exactly 4r + 1 turns") {
    LabelSpace space({"Yes", "No"}, LabelKind::binary);
    auto embedder = hash_embed_provider(16, 1);
    for (std::size_t r : {1u, 3u, 5u}) {
        std::vector<EpisodicEntry> store;
        VectorIndex index;
        for (std::size_t i = 0; i < 7; ++i) {
            EpisodicEntry entry;
            entry.instance = {"t" + std::to_string(i),
                              "Training question number " + std::to_string(i) + "?",
                              i % 2 ? "Yes" : "No",
                              {}};
            entry.pa_initial = "Yes";
            entry.critique = {entry.instance.gold, "r", "g", "{\"correct_answer\": \"x\"}", false,
                              false};
            entry.embedding = embed_one(entry.instance.question, *embedder);
            store.push_back(entry);
            index.add(entry.instance.id, store.back().embedding);
        }
        index.freeze();
        StrategyContext ctx;
        ctx.store = &store;
        ctx.index = &index;
        ctx.embedder = embedder.get();
        ctx.k = r;
        const TaskInstance question{"q", "Which one is it then?", "Yes", {}};
        const auto prompt = assemble(StrategyKind::ep_crit, question, ctx);
        CHECK(prompt.messages.size() == 4 * r + 1);
        CHECK(prompt.retrieved_ids.size() == r);

        // retrieved ids equal the raw top_k ids, in order
        const auto hits = top_k(embed_one(question.question, *embedder), index, r);
        REQUIRE(hits.size() == r);
        for (std::size_t i = 0; i < r; ++i) CHECK(prompt.retrieved_ids[i] == hits[i].instance_id);

        // final user message carries the test question
        CHECK(prompt.messages.back().content.find(question.question) != std::string::npos);
    }
}

TEST_CASE("presentation order switch reverses turns but not retrieved_ids") {
    LabelSpace space({"Yes", "No"}, LabelKind::binary);
    auto embedder = hash_embed_provider(16, 2);
    std::vector<EpisodicEntry> store;
    VectorIndex index;
    for (std::size_t i = 0; i < 4; ++i) {
        EpisodicEntry entry;
        entry.instance = {"t" + std::to_string(i), "Question variant " + std::to_string(i), "Yes",
                          {}};
        entry.pa_initial = "No";
        entry.critique = {"Yes", "r", "g", "raw", false, false};
        entry.embedding = embed_one(entry.instance.question, *embedder);
        store.push_back(entry);
        index.add(entry.instance.id, store.back().embedding);
    }
    index.freeze();
    StrategyContext ctx;
    ctx.store = &store;
    ctx.index = &index;
    ctx.embedder = embedder.get();
    ctx.k = 3;
    const TaskInstance question{"q", "Question variant 0", "Yes", {}};
    const auto forward = assemble(StrategyKind::ep_crit, question, ctx);
    ctx.most_similar_first = false;
    const auto reversed = assemble(StrategyKind::ep_crit, question, ctx);
    CHECK(forward.retrieved_ids == reversed.retrieved_ids);
    CHECK(forward.messages.front().content == reversed.messages[4 * 2].content);
}

TEST_CASE("missing artifacts raise config errors naming the strategy") {
    Scenario scenario;
    StrategyContext ctx = scenario.context();
    ctx.semantic = nullptr;
    CHECK_THROWS_WITH_AS(assemble(StrategyKind::sem_crit, scenario.question, ctx),
                         "strategy sem_crit requires a semantic memory", ConfigError);
    ctx = scenario.context();
    ctx.index = nullptr;
    CHECK_THROWS_WITH_AS(assemble(StrategyKind::ep_crit, scenario.question, ctx),
                         "strategy ep_crit requires a vector index", ConfigError);
    ctx = scenario.context();
    ctx.embedder = nullptr;
    CHECK_THROWS_AS(assemble(StrategyKind::ep_label, scenario.question, ctx), ConfigError);
}

TEST_CASE("verbatim template strings appear where the templates place them") {
    Scenario scenario;
    StrategyContext ctx = scenario.context();
    const std::string ep = render_transcript(
        assemble(StrategyKind::ep_crit, scenario.question, ctx).messages);
    CHECK(ep.find("make sure to learn from your past mistakes!") != std::string::npos);
    CHECK(ep.find("Respond only with JSON.") != std::string::npos);
    const std::string sem = render_transcript(
        assemble(StrategyKind::sem_crit, scenario.question, ctx).messages);
    CHECK(sem.find("Here is some helpful advice that will help you make your decision:") !=
          std::string::npos);
    const std::string hybrid = render_transcript(
        assemble(StrategyKind::ep_sem_crit, scenario.question, ctx).messages);
    CHECK(hybrid.find("Also, here is some additional advice to guide your response:") !=
          std::string::npos);
}
