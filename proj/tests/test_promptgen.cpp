#include <catch_amalgamated.hpp>

#include "bipolar/promptgen.hpp"
#include "support.hpp"

using namespace bipolar;

namespace {

const Codebook& cameo() {
  static const Codebook cb = load_codebook(testsupport::cameo15_path());
  return cb;
}

const StatementRecord& first_ru() {
  static const auto ds = testsupport::cameo_dataset(cameo());
  return ds.front();
}

}  // namespace

TEST_CASE("bundled prompt assets match the compiled-in constants") {
  const auto dir = testsupport::source_dir() / "assets" / "prompts";
  CHECK(read_file(dir / "vanilla_preamble.txt") == kVanillaPreamble);
  CHECK(read_file(dir / "in_context.txt") == kInContextText);
}

TEST_CASE("vanilla prompt is the fixed preamble plus the statement") {
  const auto p = build_prompt(first_ru(), *PromptVariant::parse("vanilla"), cameo());
  REQUIRE(p.messages.size() == 2);
  CHECK(p.messages[0].role == "system");
  CHECK(p.messages[0].text ==
        "For the following text, return the sentiment of the entire text. Return the sentiment score of the "
        "event, where 0 is negative sentiment and 100 is positive sentiment. Do not append any justification, "
        "just return the score.");
  CHECK(p.messages[1].role == "user");
  CHECK(p.user_text() == "Russia calls for peace.");
  CHECK(p.statement_id == first_ru().statement_id);
  CHECK(p.variant_id == "vanilla");
}

TEST_CASE("in-context prompt prefixes the conflict background") {
  const auto p = build_prompt(first_ru(), *PromptVariant::parse("in_context"), cameo());
  CHECK(p.messages[0].text.starts_with("In 2022, a new phase of the war in Ukraine began."));
  CHECK(p.messages[0].text.ends_with(std::string("\n\n") + std::string(kVanillaPreamble)));
  CHECK(p.user_text() == "Russia calls for peace.");
}

TEST_CASE("citizen prompt inserts the framing before the preamble") {
  const auto p = build_prompt(first_ru(), *PromptVariant::parse("citizen_ua"), cameo());
  CHECK(p.messages[0].text == "Respond as a citizen of Ukraine. " + std::string(kVanillaPreamble));
  CHECK_THROWS_AS(build_prompt(first_ru(), *PromptVariant::parse("citizen_zz"), cameo()), ValidationError);
}

TEST_CASE("language variants keep the statement id and re-render the text") {
  const auto stmt = build_prompt(first_ru(), *PromptVariant::parse("lang_ru_statement"), cameo());
  CHECK(stmt.messages[0].text == kVanillaPreamble);
  CHECK(stmt.user_text() == "Россия призывает к миру.");
  CHECK(stmt.statement_id == first_ru().statement_id);

  const auto full = build_prompt(first_ru(), *PromptVariant::parse("lang_uk_full"), cameo());
  CHECK(full.messages[0].text == cameo().preamble_translations.at("uk"));
  CHECK(full.user_text() == "Росія закликає до миру.");
}

TEST_CASE("variant ids round-trip") {
  for (std::string id : {"vanilla", "in_context", "citizen_ru", "lang_uk_statement", "lang_ru_full"}) {
    auto v = PromptVariant::parse(id);
    REQUIRE(v);
    CHECK(v->id() == id);
  }
  for (std::string bad : {"", "citizen_", "lang_ru", "lang__full", "foo"}) CHECK_FALSE(PromptVariant::parse(bad));
}

TEST_CASE("variant enumeration") {
  const std::vector<std::string> all{"all"};
  const auto v = enumerate_variants(cameo(), all);
  std::vector<std::string> ids;
  for (const auto& x : v) ids.push_back(x.id());
  CHECK(ids == std::vector<std::string>{"vanilla", "in_context", "citizen_ru", "citizen_ua", "lang_ru_statement",
                                        "lang_uk_statement", "lang_ru_full", "lang_uk_full"});

  const std::vector<std::string> six{"vanilla", "in_context", "citizen_ru", "citizen_ua", "lang_ru_statement",
                                     "lang_uk_statement"};
  CHECK(enumerate_variants(cameo(), six).size() == 6);

  const std::vector<std::string> dup{"vanilla", "vanilla", "all"};
  CHECK(enumerate_variants(cameo(), dup).size() == 8);

  const std::vector<std::string> unknown{"vanilla", "sarcastic"};
  CHECK_THROWS_AS(enumerate_variants(cameo(), unknown), ValidationError);
  const std::vector<std::string> no_lang{"lang_de_statement"};
  CHECK_THROWS_AS(enumerate_variants(cameo(), no_lang), ValidationError);
}

TEST_CASE("every statement and variant builds a two-message prompt") {
  const auto ds = testsupport::cameo_dataset(cameo());
  const std::vector<std::string> all{"all"};
  for (const auto& v : enumerate_variants(cameo(), all))
    for (const auto& s : ds) {
      const auto p = build_prompt(s, v, cameo());
      REQUIRE(p.messages.size() == 2);
      CHECK(p.user_text().find(kEntitySlot) == std::string::npos);
      CHECK_FALSE(p.user_text().empty());
    }
}

TEST_CASE("codebook context overrides the bundled background") {
  auto cb = cameo();
  cb.context = "Custom background.";
  const auto p = build_prompt(first_ru(), *PromptVariant::parse("in_context"), cb);
  CHECK(p.messages[0].text == "Custom background.\n\n" + std::string(kVanillaPreamble));
}
