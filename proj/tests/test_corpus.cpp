#include <doctest.h>

#include <algorithm>
#include <set>

#include "ragopt/corpus.hpp"
#include "ragopt/errors.hpp"
#include "test_support.hpp"

using namespace ragopt;
using namespace ragopt::testing;

namespace {

std::string three_record_jsonl() {
    return R"({"id": "a", "query": "Is water wet?", "answer": true, "contents": ["First.", "Second."]})"
           "\n"
           R"({"id": "b", "query": "Is fire cold?", "answer": false, "contents": []})"
           "\n"
           R"({"id": "c", "query": "Do birds fly?", "answer": true})"
           "\n";
}

std::set<std::string> ids(const Dataset& d) {
    std::set<std::string> out;
    for (const auto& e : d.examples) {
        out.insert(e.id);
    }
    return out;
}

} // namespace

TEST_CASE("load_strategyqa reads well-formed JSONL") {
    TempDir dir;
    write_file(dir.path / "data.jsonl", three_record_jsonl());
    const Dataset d = load_strategyqa(dir.path / "data.jsonl");

    REQUIRE(d.size() == 3);
    CHECK(d.examples[0].answer == "yes");
    CHECK(d.examples[1].answer == "no");
    CHECK(d.examples[2].answer == "yes");
    CHECK(d.examples[0].contents == std::vector<std::string>{"First.", "Second."});
    CHECK(d.examples[2].contents.empty());
}

TEST_CASE("load_strategyqa reads a JSON array with StrategyQA field names") {
    TempDir dir;
    write_file(dir.path / "data.json",
               R"([{"qid": "q1", "question": "Is it so?", "answer": true, "contents": ["P."]},
                   {"qid": "q2", "question": "Or not?", "answer": false}])");
    const Dataset d = load_strategyqa(dir.path / "data.json");
    REQUIRE(d.size() == 2);
    CHECK(d.examples[0].id == "q1");
    CHECK(d.examples[0].query == "Is it so?");
    CHECK(d.examples[0].answer == "yes");
    CHECK(d.examples[1].answer == "no");
}

TEST_CASE("load_strategyqa error paths") {
    TempDir dir;

    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_strategyqa(dir.path / "nope.jsonl"), DataError);
    }
    SUBCASE("malformed record reports its index") {
        write_file(dir.path / "bad.jsonl",
                   R"({"id": "a", "query": "Q?", "answer": true})"
                   "\nnot json at all\n");
        CHECK_THROWS_WITH_AS(load_strategyqa(dir.path / "bad.jsonl"),
                             doctest::Contains("record 1"), DataError);
    }
    SUBCASE("record lacking answer field") {
        write_file(dir.path / "noans.jsonl", R"({"id": "a", "query": "Q?"})" "\n");
        CHECK_THROWS_WITH_AS(load_strategyqa(dir.path / "noans.jsonl"),
                             doctest::Contains("answer"), DataError);
    }
    SUBCASE("duplicate ids") {
        write_file(dir.path / "dup.jsonl",
                   R"({"id": "a", "query": "Q?", "answer": true})"
                   "\n"
                   R"({"id": "a", "query": "R?", "answer": false})"
                   "\n");
        CHECK_THROWS_WITH_AS(load_strategyqa(dir.path / "dup.jsonl"),
                             doctest::Contains("duplicate"), DataError);
    }
    SUBCASE("empty query") {
        write_file(dir.path / "noq.jsonl", R"({"id": "a", "query": "  ", "answer": true})" "\n");
        CHECK_THROWS_AS(load_strategyqa(dir.path / "noq.jsonl"), DataError);
    }
}

TEST_CASE("save then load round-trips records") {
    TempDir dir;
    Dataset d;
    d.examples.push_back(make_example("x1", "Is A b?", "yes", {"p1", "p2"}));
    d.examples.push_back(make_example("x2", "Is C d?", "no"));
    save_dataset(d, dir.path / "out.jsonl");

    const Dataset back = load_strategyqa(dir.path / "out.jsonl");
    REQUIRE(back.size() == 2);
    CHECK(back.examples[0].id == "x1");
    CHECK(back.examples[0].answer == "yes");
    CHECK(back.examples[0].contents == d.examples[0].contents);
    CHECK(back.examples[1].answer == "no");
}

TEST_CASE("split produces a disjoint 4/6 partition on a 10-example dataset") {
    const Dataset d = make_yes_dataset(10);
    SplitSpec spec;
    spec.test_size = 4;
    spec.seed = 7;
    const SplitResult r = split(d, spec);

    CHECK(r.test.size() == 4);
    CHECK(r.train.size() == 6);
    CHECK(r.train.label == "derived-train");
    CHECK(r.test.label == "derived-test");

    const auto train_ids = ids(r.train);
    const auto test_ids = ids(r.test);
    const auto all_ids = ids(d);
    for (const auto& id : train_ids) {
        CHECK(test_ids.count(id) == 0);
        CHECK(all_ids.count(id) == 1);
    }
    for (const auto& id : test_ids) {
        CHECK(all_ids.count(id) == 1);
    }
}

TEST_CASE("split of 2290 examples yields 490 test and 1800 train") {
    const Dataset d = make_yes_dataset(2290);
    SplitSpec spec; // defaults: test_size 490, train = rest
    const SplitResult r = split(d, spec);
    CHECK(r.test.size() == 490);
    CHECK(r.train.size() == 1800);

    SplitSpec capped = spec;
    capped.train_size = 1800;
    const SplitResult r2 = split(d, capped);
    CHECK(r2.train.size() == 1800);
}

TEST_CASE("split with train_size discards the remainder") {
    const Dataset d = make_yes_dataset(20);
    SplitSpec spec;
    spec.test_size = 5;
    spec.train_size = 10;
    const SplitResult r = split(d, spec);
    CHECK(r.test.size() == 5);
    CHECK(r.train.size() == 10);
}

TEST_CASE("identical seeds give byte-identical splits") {
    TempDir dir;
    const Dataset d = make_yes_dataset(50);
    SplitSpec spec;
    spec.test_size = 20;
    spec.seed = 42;

    const SplitResult a = split(d, spec);
    const SplitResult b = split(d, spec);
    save_dataset(a.train, dir.path / "a_train.jsonl");
    save_dataset(b.train, dir.path / "b_train.jsonl");
    save_dataset(a.test, dir.path / "a_test.jsonl");
    save_dataset(b.test, dir.path / "b_test.jsonl");
    CHECK(read_file(dir.path / "a_train.jsonl") == read_file(dir.path / "b_train.jsonl"));
    CHECK(read_file(dir.path / "a_test.jsonl") == read_file(dir.path / "b_test.jsonl"));

    SplitSpec other = spec;
    other.seed = 43;
    const SplitResult c = split(d, other);
    CHECK(ids(c.test) != ids(a.test));
}

TEST_CASE("split rejects test_size >= dataset size") {
    const Dataset d = make_yes_dataset(5);
    SplitSpec spec;
    spec.test_size = 5;
    CHECK_THROWS_AS(split(d, spec), DataError);
    spec.test_size = 9;
    CHECK_THROWS_AS(split(d, spec), DataError);
}

TEST_CASE("split partition property over random sizes and seeds") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t n = 10 + static_cast<std::size_t>(seed) * 3;
        const Dataset d = make_yes_dataset(n);
        SplitSpec spec;
        spec.test_size = 1 + static_cast<std::size_t>(seed) % (n - 1);
        spec.seed = seed;
        const SplitResult r = split(d, spec);

        CHECK(r.test.size() == spec.test_size);
        CHECK(r.train.size() + r.test.size() == n);
        auto train_ids = ids(r.train);
        auto test_ids = ids(r.test);
        const auto all_ids = ids(d);
        CHECK(train_ids.size() + test_ids.size() == n); // disjoint and unique
        for (const auto& id : train_ids) {
            CHECK(all_ids.count(id) == 1);
            CHECK(test_ids.count(id) == 0);
        }
    }
}

TEST_CASE("stats computes counts and averages") {
    Dataset d;
    d.examples.push_back(make_example("a", "one two three", "yes", {"p", "q"}));
    d.examples.push_back(make_example("b", "one two three four five", "no"));
    const DatasetStats s = stats(d);
    CHECK(s.n == 2);
    CHECK(s.yes_count == 1);
    CHECK(s.no_count == 1);
    CHECK(s.avg_query_words == doctest::Approx(4.0));
    CHECK(s.avg_contents == doctest::Approx(1.0));
    CHECK(s.yes_count + s.no_count == s.n);
}

TEST_CASE("stats of an empty dataset is all zeros") {
    const DatasetStats s = stats(Dataset{});
    CHECK(s.n == 0);
    CHECK(s.yes_count == 0);
    CHECK(s.no_count == 0);
    CHECK(s.avg_query_words == 0.0);
    CHECK(s.avg_contents == 0.0);
}

TEST_CASE("boolean to token mapping is a bijection") {
    TempDir dir;
    write_file(dir.path / "two.jsonl",
               R"({"id": "t", "query": "Q?", "answer": true})"
               "\n"
               R"({"id": "f", "query": "R?", "answer": false})"
               "\n");
    const Dataset d = load_strategyqa(dir.path / "two.jsonl");
    CHECK(d.examples[0].answer == "yes");
    CHECK(d.examples[1].answer == "no");
    // and back through save
    save_dataset(d, dir.path / "round.jsonl");
    const std::string text = read_file(dir.path / "round.jsonl");
    CHECK(text.find("\"answer\":true") != std::string::npos);
    CHECK(text.find("\"answer\":false") != std::string::npos);
}
