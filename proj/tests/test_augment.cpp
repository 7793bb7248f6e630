#include "psychoseed/augment.hpp"
#include "psychoseed/text.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

using namespace psychoseed;

namespace {

std::string ten_words() { return "quiet people often enjoy plans art music talk worry help"; }

std::multiset<std::string> word_bag(const std::string& text) {
    const auto w = split_words(text);
    return {w.begin(), w.end()};
}

/// Adapter returning a fixed list, or throwing when asked to.
class ScriptedAdapter final : public GenerationAdapter {
public:
    std::vector<std::string> replies;
    bool fail = false;

    std::vector<std::string> paraphrase(const std::string&, int, std::uint64_t) override {
        if (fail) throw std::runtime_error("service down");
        return replies;
    }
    std::vector<std::string> generate(const ConceptId&, Polarity, int, int, double, std::uint64_t) override {
        if (fail) throw std::runtime_error("service down");
        return replies;
    }
};

}  // namespace

TEST_CASE("edit_count") {
    CHECK(edit_count(0.0, 10) == 1);
    CHECK(edit_count(0.1, 10) == 1);
    CHECK(edit_count(0.1, 15) == 2);
    CHECK(edit_count(0.1, 24) == 2);
    CHECK(edit_count(0.1, 25) == 3);
    CHECK(edit_count(0.5, 0) == 1);
}

TEST_CASE("synonym replacement") {
    SynonymLexicon lex;
    lex.add("enjoy", {"love"});
    Rng rng(1);
    CHECK(synonym_replacement("Enjoy thinking about things", 0.1, lex, rng) == "Love thinking about things");
    CHECK(synonym_replacement("nothing to replace here", 0.5, lex, rng) == "nothing to replace here");

    SUBCASE("alpha 0 replaces exactly one word") {
        SynonymLexicon wide;
        for (const auto& w : split_words(ten_words())) wide.add(w, {w + "x"});
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            Rng r(seed);
            const auto before = split_words(ten_words());
            const auto after = split_words(synonym_replacement(ten_words(), 0.0, wide, r));
            REQUIRE(after.size() == before.size());
            std::size_t changed = 0;
            for (std::size_t i = 0; i < before.size(); ++i) changed += before[i] != after[i] ? 1 : 0;
            CHECK(changed == 1);
        }
    }
    SUBCASE("stopwords are never replaced") {
        SynonymLexicon sw;
        sw.add("the", {"a"});
        sw.add_stopword("the");
        Rng r(3);
        CHECK(synonym_replacement("the the the", 1.0, sw, r) == "the the the");
    }
}

TEST_CASE("random insertion") {
    SynonymLexicon lex;
    lex.add("enjoy", {"love", "like"});
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed);
        const auto out = split_words(random_insertion(ten_words(), 0.1, lex, rng));
        REQUIRE(out.size() == 11);
        CHECK(std::count_if(out.begin(), out.end(), [](const auto& w) { return w == "love" || w == "like"; }) == 1);
    }
    Rng rng(0);
    CHECK(random_insertion(ten_words(), 0.5, SynonymLexicon{}, rng) == ten_words());
}

TEST_CASE("random swap") {
    Rng rng(4);
    CHECK(random_swap("a b", 0.1, rng) == "b a");
    CHECK(random_swap("solo", 0.9, rng) == "solo");
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Rng r(seed);
        CHECK(word_bag(random_swap(ten_words(), 0.3, r)) == word_bag(ten_words()));
    }
}

TEST_CASE("random deletion") {
    Rng rng(5);
    CHECK(random_deletion(ten_words(), 0.0, rng) == ten_words());
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng r(seed);
        CHECK(split_words(random_deletion(ten_words(), 1.0, r)).size() == 1);
    }
    SUBCASE("deletion rate matches p") {
        std::string text;
        for (int i = 0; i < 1000; ++i) text += "w" + std::to_string(i) + " ";
        Rng r(6);
        const double kept = static_cast<double>(split_words(random_deletion(text, 0.3, r)).size());
        const double sigma = std::sqrt(1000 * 0.3 * 0.7);
        CHECK(std::abs(kept - 700.0) <= 3 * sigma);
    }
    SUBCASE("kept words stay in order") {
        Rng r(7);
        const auto kept = split_words(random_deletion(ten_words(), 0.5, r));
        const auto all = split_words(ten_words());
        CHECK(std::includes(all.begin(), all.end(), kept.begin(), kept.end(),
                            [&](const auto& a, const auto& b) {
                                return std::find(all.begin(), all.end(), a) < std::find(all.begin(), all.end(), b);
                            }));
    }
}

TEST_CASE("eda_augment and augment_set") {
    SynonymLexicon lex;
    lex.add("enjoy", {"love", "like", "relish"});
    lex.add("people", {"folks", "persons"});
    lex.add("music", {"songs"});
    const auto set = testsupport::original_items("openness", 20, 9);
    AugmentationConfig cfg;
    cfg.dedup = false;

    SUBCASE("four operations times n_per_op per item, labels inherited") {
        const auto items = eda_augment(set.items[0], cfg, lex);
        CHECK(items.size() == 20);
        for (const auto& it : items) {
            CHECK(it.polarity == set.items[0].polarity);
            CHECK(it.origin == Origin::eda);
            CHECK(it.parent_id == set.items[0].id);
            CHECK(it.concept_id == set.concept_id);
        }
        const auto aug = augment_set(set, AugmentMethod::eda, cfg, &lex, nullptr);
        CHECK(aug.size() == 20 + 20 * 20);
        CHECK(aug.count(Polarity::pos) == 9 * 21);
    }
    SUBCASE("n_per_op 0 adds nothing") {
        AugmentationConfig none = cfg;
        none.n_per_op = 0;
        CHECK(eda_augment(set.items[0], none, lex).empty());
        CHECK(augment_set(set, AugmentMethod::eda, none, &lex, nullptr).items == set.items);
    }
    SUBCASE("output does not depend on the thread count") {
        const auto one = augment_set(set, AugmentMethod::eda, cfg, &lex, nullptr, 1);
        const auto four = augment_set(set, AugmentMethod::eda, cfg, &lex, nullptr, 4);
        CHECK(one.items == four.items);
        CHECK(augment_set(set, AugmentMethod::eda, cfg, &lex, nullptr, 1).items == one.items);
    }
    SUBCASE("dedup never drops originals and leaves texts unique") {
        AugmentationConfig d = cfg;
        d.dedup = true;
        const auto aug = augment_set(set, AugmentMethod::eda, d, &lex, nullptr);
        CHECK(aug.size() <= 420);
        std::set<std::string> texts;
        std::size_t originals = 0;
        for (const auto& it : aug.items) {
            if (it.origin == Origin::original) ++originals;
            else CHECK(texts.insert(it.text).second);
        }
        CHECK(originals == 20);
    }
    SUBCASE("augmented items are rejected as input") {
        const auto aug = eda_augment(set.items[0], cfg, lex);
        CHECK_THROWS_AS(eda_augment(aug[0], cfg, lex), Error);
        CHECK_THROWS_AS(augment_set(set, AugmentMethod::eda, cfg, nullptr, nullptr), Error);
    }
    SUBCASE("invalid config") {
        AugmentationConfig bad = cfg;
        bad.p_rd = 1.5;
        CHECK_THROWS_AS(bad.validate(), Error);
    }
}

TEST_CASE("lexicon file") {
    testsupport::TempDir dir("lexicon");
    testsupport::write_file(dir / "lex.tsv", "# comment\nenjoy\tlove, like,enjoy\nEnjoy\trelish\n\n");
    testsupport::write_file(dir / "stop.txt", "the\nA\n");
    const auto lex = SynonymLexicon::load(dir / "lex.tsv", dir / "stop.txt");
    REQUIRE(lex.synonyms("ENJOY") != nullptr);
    CHECK(*lex.synonyms("enjoy") == std::vector<std::string>{"love", "like", "relish"});
    CHECK(lex.is_stopword("a"));
    testsupport::write_file(dir / "bad.tsv", "enjoy love\n");
    CHECK_THROWS_WITH_AS(SynonymLexicon::load(dir / "bad.tsv"), doctest::Contains("bad.tsv:1"), ParseError);
}

TEST_CASE("paraphrase_augment") {
    const auto set = testsupport::original_items("openness", 3, 2);
    const Item& item = set.items[0];
    SUBCASE("mock adapter with three variants") {
        MockAdapter mock;
        const auto out = paraphrase_augment(item, mock, 3);
        CHECK(out.size() == 3);
        for (const auto& p : out) {
            CHECK(p.polarity == item.polarity);
            CHECK(p.origin == Origin::paraphrase);
            CHECK(p.parent_id == item.id);
            CHECK(p.text != item.text);
        }
        CHECK(paraphrase_augment(item, mock, 3) == out);
        CHECK(paraphrase_augment(item, mock, 0).empty());
    }
    SUBCASE("verbatim copies, repeats and blanks are dropped") {
        ScriptedAdapter a;
        a.replies = {item.text, "one", "  ", "one", "two", "three"};
        const auto out = paraphrase_augment(item, a, 5);
        REQUIRE(out.size() == 2);
        CHECK(out[0].text == "one");
        CHECK(out[1].text == "two");
    }
    SUBCASE("adapter failure names the item") {
        ScriptedAdapter a;
        a.fail = true;
        CHECK_THROWS_WITH_AS(paraphrase_augment(item, a, 3), doctest::Contains(item.id.c_str()), AdapterError);
    }
    SUBCASE("augment_set keeps originals first") {
        MockAdapter mock;
        AugmentationConfig cfg;
        cfg.max_paraphrases = 4;
        const auto aug = augment_set(set, AugmentMethod::paraphrase, cfg, nullptr, &mock, 2);
        CHECK(aug.size() == 3 + 12);
        for (std::size_t i = 0; i < 3; ++i) CHECK(aug.items[i] == set.items[i]);
    }
}

TEST_CASE("generate_items") {
    MockAdapter mock;
    AugmentationConfig cfg;
    cfg.gen_count_per_label = 10;
    const auto out = generate_items(ConceptId("neuroticism"), Polarity::neg, mock, cfg);
    CHECK(out.size() == 10);
    std::set<std::string> texts;
    for (const auto& it : out) {
        CHECK(it.polarity == Polarity::neg);
        CHECK(it.origin == Origin::generated);
        CHECK_FALSE(it.parent_id.has_value());
        CHECK(split_words(it.text).size() <= static_cast<std::size_t>(cfg.gen_max_tokens));
        texts.insert(it.text);
    }
    CHECK(texts.size() == 10);
    CHECK(generate_items(ConceptId("neuroticism"), Polarity::neg, mock, cfg) == out);

    cfg.gen_count_per_label = 0;
    CHECK(generate_items(ConceptId("neuroticism"), Polarity::neg, mock, cfg).empty());

    cfg.gen_count_per_label = 5;
    cfg.gen_max_tokens = 2;
    for (const auto& it : generate_items(ConceptId("openness"), Polarity::pos, mock, cfg)) {
        CHECK(split_words(it.text).size() <= 2);
    }
}
