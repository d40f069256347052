#include <doctest.h>

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "ragopt/commands.hpp"
#include "ragopt/corpus.hpp"
#include "ragopt/run_log.hpp"
#include "test_support.hpp"

using namespace ragopt;
using namespace ragopt::testing;

namespace {

/// 2290 records with the original class totals (1071 yes / 1219 no).
void write_strategyqa_sized_file(const std::filesystem::path& p) {
    Dataset d;
    for (int i = 0; i < 2290; ++i) {
        d.examples.push_back(make_example("q" + std::to_string(i),
                                          "Is question " + std::to_string(i) + " answerable?",
                                          i < 1071 ? "yes" : "no",
                                          {"Evidence for " + std::to_string(i) + "."}));
    }
    save_dataset(d, p);
}

std::size_t line_count(const std::filesystem::path& p) {
    const std::string text = read_file(p);
    std::size_t n = 0;
    for (char c : text) {
        if (c == '\n') {
            ++n;
        }
    }
    return n;
}

struct CaptureStdout {
    std::ostringstream stream;
    std::streambuf* saved;
    CaptureStdout() : saved(std::cout.rdbuf(stream.rdbuf())) {}
    ~CaptureStdout() { std::cout.rdbuf(saved); }
    std::string str() const { return stream.str(); }
};

nlohmann::json scripted_config(const std::filesystem::path& dir, int steps, int per_step,
                               int sample_size) {
    return nlohmann::json{
        {"roles",
         {{"optimizer", {{"backend", {{"kind", "scripted"}, {"script_path", "script.json"}}}}},
          {"transformer", {{"backend", {{"kind", "scripted"}, {"script_path", "script.json"}}}}},
          {"generator", {{"backend", {{"kind", "scripted"}, {"script_path", "script.json"}}}}}}},
        {"optimization",
         {{"steps", steps},
          {"instructions_per_step", per_step},
          {"sample_size", sample_size},
          {"capacity", 8},
          {"seed", 5}}},
        {"data", {{"train", "train.jsonl"}, {"test", "test.jsonl"}}},
        {"output_dir", "out"},
        {"deterministic", true},
        {"verbose_calls", true}};
}

std::size_t count_records(const std::filesystem::path& log, const std::string& type) {
    std::size_t n = 0;
    for (const auto& rec : RunLogger::read_all(log)) {
        if (rec.value("type", "") == type) {
            ++n;
        }
    }
    return n;
}

} // namespace

TEST_CASE("split command writes train/test files and a stats summary") {
    TempDir dir;
    write_strategyqa_sized_file(dir.path / "full.jsonl");

    SplitArgs args;
    args.input = dir.path / "full.jsonl";
    args.out_dir = dir.path / "splits";
    args.seed = 13;
    CaptureStdout capture;
    CHECK(cmd_split(args) == 0);

    CHECK(line_count(dir.path / "splits" / "train.jsonl") == 1800);
    CHECK(line_count(dir.path / "splits" / "test.jsonl") == 490);
    CHECK(std::filesystem::exists(dir.path / "splits" / "split_stats.json"));

    // class counts are reported for comparison against the reference split
    const auto summary =
        nlohmann::json::parse(read_file(dir.path / "splits" / "split_stats.json"));
    CHECK(summary["train"]["yes_count"].get<int>() + summary["test"]["yes_count"].get<int>() ==
          1071);
    CHECK(summary["train"]["no_count"].get<int>() + summary["test"]["no_count"].get<int>() ==
          1219);
    CHECK(capture.str().find("yes_count") != std::string::npos);
}

TEST_CASE("split command is deterministic per seed") {
    TempDir dir;
    write_strategyqa_sized_file(dir.path / "full.jsonl");
    SplitArgs args;
    args.input = dir.path / "full.jsonl";
    args.seed = 21;

    args.out_dir = dir.path / "a";
    { CaptureStdout c; CHECK(cmd_split(args) == 0); }
    args.out_dir = dir.path / "b";
    { CaptureStdout c; CHECK(cmd_split(args) == 0); }
    CHECK(read_file(dir.path / "a" / "train.jsonl") == read_file(dir.path / "b" / "train.jsonl"));
    CHECK(read_file(dir.path / "a" / "test.jsonl") == read_file(dir.path / "b" / "test.jsonl"));
}

TEST_CASE("split with a missing input exits 2 and leaves no partial files") {
    TempDir dir;
    SplitArgs args;
    args.input = dir.path / "absent.jsonl";
    args.out_dir = dir.path / "splits";
    CHECK(cmd_split(args) == 2);
    CHECK_FALSE(std::filesystem::exists(dir.path / "splits" / "train.jsonl"));
    CHECK_FALSE(std::filesystem::exists(dir.path / "splits" / "test.jsonl"));
}

TEST_CASE("stats command prints dataset statistics") {
    TempDir dir;
    save_dataset(make_yes_dataset(4), dir.path / "d.jsonl");
    CaptureStdout capture;
    CHECK(cmd_stats(dir.path / "d.jsonl") == 0);
    CHECK(capture.str().find("\"n\":4") != std::string::npos);
    CHECK(cmd_stats(dir.path / "missing.jsonl") == 2);
}

TEST_CASE("optimize command runs a scripted two-step optimization") {
    TempDir dir;
    save_dataset(make_yes_dataset(8), dir.path / "train.jsonl");
    save_dataset(make_yes_dataset(3), dir.path / "test.jsonl");
    write_script_file(dir.path / "script.json",
                      {"Sort the text.", "Trim the text.", "Star the text.", "Mark the text."},
                      repeat("refined", 10),
                      {"Yes.", "No.", "Yes.", "Yes.", "Maybe.", "Yes.", "No.", "No.", "Yes.",
                       "Yes."});
    write_file(dir.path / "config.json", scripted_config(dir.path, 2, 2, 2).dump(2));

    OptimizeArgs args;
    args.config = dir.path / "config.json";
    CaptureStdout capture;
    REQUIRE(cmd_optimize(args) == 0);

    const auto out = dir.path / "out";
    CHECK(std::filesystem::exists(out / "best_instruction.txt"));
    CHECK(std::filesystem::exists(out / "result.json"));
    const auto result = nlohmann::json::parse(read_file(out / "result.json"));
    CHECK(result["history"].size() == 2);

    const auto log = out / "run_log.jsonl";
    CHECK(count_records(log, "run_start") == 1);
    CHECK(count_records(log, "seed") == 1);
    CHECK(count_records(log, "candidate") == 4);
    CHECK(count_records(log, "step") == 2);
    CHECK(count_records(log, "checkpoint") == 3); // seed + two steps
    CHECK(count_records(log, "best") == 1);
    CHECK(count_records(log, "call") > 0); // verbose flag on
    CHECK(capture.str().find("best instruction") != std::string::npos);
}

TEST_CASE("brute-force mode logs candidates but never updates the meta-prompt") {
    TempDir dir;
    save_dataset(make_yes_dataset(8), dir.path / "train.jsonl");
    save_dataset(make_yes_dataset(3), dir.path / "test.jsonl");
    std::vector<std::string> optimizer_entries;
    for (int i = 0; i < 5; ++i) {
        optimizer_entries.push_back("Brute variant " + std::to_string(i) + ".");
    }
    write_script_file(dir.path / "script.json", optimizer_entries, repeat("refined", 12),
                      {"Yes.", "No.", "Yes.", "Maybe.", "No.", "Yes.", "Yes.", "Yes.", "No.",
                       "Maybe.", "Yes.", "No."});
    write_file(dir.path / "config.json", scripted_config(dir.path, 2, 2, 1).dump(2));

    OptimizeArgs args;
    args.config = dir.path / "config.json";
    args.mode = "brute-force";
    args.brute_n = 5;
    CaptureStdout capture;
    REQUIRE(cmd_optimize(args) == 0);

    const auto log = dir.path / "out" / "run_log.jsonl";
    CHECK(count_records(log, "candidate") == 5);
    CHECK(count_records(log, "state_update") == 0);

    // the returned instruction is the argmax of the logged candidate scores
    double best_score = -1.0;
    std::string best_text;
    for (const auto& rec : RunLogger::read_all(log)) {
        if (rec.value("type", "") != "candidate") {
            continue;
        }
        if (rec["data"].contains("score")) {
            const double total = rec["data"]["score"]["total"].get<double>();
            if (total > best_score) {
                best_score = total;
                best_text = rec["data"]["text"].get<std::string>();
            }
        }
    }
    const std::string written = read_file(dir.path / "out" / "best_instruction.txt");
    CHECK(written.find(best_text) == 0);

    CHECK(cmd_optimize(OptimizeArgs{dir.path / "config.json", false, "sideways", 1}) == 1);
}

TEST_CASE("evaluate runs all four modes and renders the table") {
    TempDir dir;
    save_dataset(make_yes_dataset(8), dir.path / "train.jsonl");

    Dataset test;
    test.examples.push_back(make_example("t1", "Is A so?", "yes", {"About A."}));
    test.examples.push_back(make_example("t2", "Is B so?", "no", {"About B."}));
    test.examples.push_back(make_example("t3", "Is C so?", "yes", {"About C."}));
    save_dataset(test, dir.path / "test.jsonl");

    write_script_file(dir.path / "script.json", {}, repeat("refined", 3),
                      {"Yes.", "No.", "Maybe."});
    write_file(dir.path / "config.json", scripted_config(dir.path, 1, 1, 1).dump(2));
    write_file(dir.path / "instruction.txt", "Clean the text.\n");

    EvaluateArgs args;
    args.config = dir.path / "config.json";

    for (const std::string mode :
         {std::string("query-only"), std::string("plain-rag"), std::string("refined-rag"),
          std::string("refined-no-iteration")}) {
        args.mode = mode;
        if (mode.rfind("refined", 0) == 0) {
            args.instruction_file = dir.path / "instruction.txt";
        } else {
            args.instruction_file.reset();
        }
        CaptureStdout capture;
        REQUIRE(cmd_evaluate(args) == 0);
        CHECK(capture.str().find("2 (66.67 %)") != std::string::npos);
        CHECK(std::filesystem::exists(dir.path / "out" / ("eval_" + mode + ".json")));
    }

    const std::string table = read_file(dir.path / "out" / "eval_table.txt");
    CHECK(table.find("query-only") != std::string::npos);
    CHECK(table.find("plain-rag") != std::string::npos);
    CHECK(table.find("refined-rag") != std::string::npos);
    CHECK(table.find("refined-no-iteration") != std::string::npos);
    CHECK(line_count(dir.path / "out" / "eval_table.txt") == 6); // header + rule + 4 rows

    // the query-only pass never touched the transformer (call records audit)
    bool transformer_called_on_query_only = false;
    bool inside_query_only = false;
    for (const auto& rec : RunLogger::read_all(dir.path / "out" / "run_log.jsonl")) {
        const std::string type = rec.value("type", "");
        if (type == "eval_report") {
            inside_query_only = false;
        }
        if (type == "call" && !inside_query_only) {
            // calls before the first eval_report belong to the query-only pass
            if (rec["data"]["role"] == "transformer") {
                transformer_called_on_query_only = true;
            }
        }
        if (type == "eval_report") {
            break;
        }
    }
    CHECK_FALSE(transformer_called_on_query_only);
}

TEST_CASE("refined evaluation without an instruction file is a usage error") {
    TempDir dir;
    save_dataset(make_yes_dataset(3), dir.path / "train.jsonl");
    save_dataset(make_yes_dataset(3), dir.path / "test.jsonl");
    write_script_file(dir.path / "script.json", {}, {}, {});
    write_file(dir.path / "config.json", scripted_config(dir.path, 1, 1, 1).dump(2));

    EvaluateArgs args;
    args.config = dir.path / "config.json";
    args.mode = "refined-rag";
    CHECK(cmd_evaluate(args) == 1);
    args.mode = "warp-speed";
    CHECK(cmd_evaluate(args) == 1);
}

TEST_CASE("significance command computes the unpaired t test") {
    TempDir dir;
    write_file(dir.path / "same_a.txt", "1\n2\n3\n");
    write_file(dir.path / "same_b.txt", "1\n2\n3\n");
    write_file(dir.path / "a.txt", "2\n4\n6\n");
    write_file(dir.path / "b.txt", "1\n3\n5\n");
    write_file(dir.path / "one.txt", "4\n");

    SUBCASE("identical samples give p = 1") {
        CaptureStdout capture;
        CHECK(cmd_significance({dir.path / "same_a.txt", dir.path / "same_b.txt", false}) == 0);
        CHECK(capture.str().find("p = 1") != std::string::npos);
    }
    SUBCASE("derived samples match the statistical oracle") {
        CaptureStdout capture;
        CHECK(cmd_significance({dir.path / "a.txt", dir.path / "b.txt", false}) == 0);
        const std::string out = capture.str();
        const auto p_pos = out.find("p = ");
        REQUIRE(p_pos != std::string::npos);
        const double p = std::stod(out.substr(p_pos + 4));
        CHECK(p == doctest::Approx(0.5733922538253555).epsilon(1e-3));
    }
    SUBCASE("a one-value sample is a usage error") {
        CHECK(cmd_significance({dir.path / "a.txt", dir.path / "one.txt", false}) == 1);
        CHECK(cmd_significance({dir.path / "a.txt", dir.path / "missing.txt", false}) == 2);
    }
}

TEST_CASE("optimize exits 3 on a backend outage and resumes once it clears") {
    TempDir dir;
    save_dataset(make_yes_dataset(4), dir.path / "train.jsonl");
    save_dataset(make_yes_dataset(2), dir.path / "test.jsonl");

    // reserve a port with a throwaway server, then release it cleanly
    int port = 0;
    {
        httplib::Server probe;
        port = probe.bind_to_any_port("127.0.0.1");
        std::thread probe_thread([&] { probe.listen_after_bind(); });
        probe.wait_until_ready();
        probe.stop();
        probe_thread.join();
    }

    nlohmann::json backend{{"kind", "http"},
                           {"endpoint", "http://127.0.0.1:" + std::to_string(port)},
                           {"model_id", "stub"},
                           {"timeout_ms", 500},
                           {"max_retries", 0},
                           {"backoff_initial_ms", 1}};
    nlohmann::json config{
        {"roles",
         {{"optimizer", {{"backend", backend}}},
          {"transformer", {{"backend", backend}}},
          {"generator", {{"backend", backend}}}}},
        {"optimization",
         {{"steps", 1}, {"instructions_per_step", 1}, {"sample_size", 1}, {"seed", 9}}},
        {"data", {{"train", "train.jsonl"}}},
        {"output_dir", "out"},
        {"deterministic", true}};
    write_file(dir.path / "config.json", config.dump(2));

    OptimizeArgs args;
    args.config = dir.path / "config.json";
    {
        CaptureStdout capture;
        // seed scoring absorbs the dead backend (seed 0.0); the optimizer-role
        // generation in step 1 then raises the resumable outage
        CHECK(cmd_optimize(args) == 3);
    }
    const auto log = dir.path / "out" / "run_log.jsonl";
    CHECK(count_records(log, "checkpoint") == 1);
    CHECK(count_records(log, "error") == 1);

    // bring the backend up: every completion both parses as an instruction
    // and reads as a correct yes-answer
    httplib::Server server;
    server.Post("/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) {
        nlohmann::json reply{{"choices",
                              {{{"message",
                                 {{"role", "assistant"},
                                  {"content", "Yes, summarize the previous text."}}}}}}};
        res.set_content(reply.dump(), "application/json");
    });
    std::thread server_thread([&] { server.listen("127.0.0.1", port); });
    server.wait_until_ready();

    args.resume = true;
    {
        CaptureStdout capture;
        CHECK(cmd_optimize(args) == 0);
        CHECK(capture.str().find("best instruction") != std::string::npos);
    }
    server.stop();
    server_thread.join();

    CHECK(std::filesystem::exists(dir.path / "out" / "best_instruction.txt"));
    const auto result =
        nlohmann::json::parse(read_file(dir.path / "out" / "result.json"));
    CHECK(result["history"].size() == 1);
    CHECK(result["best_instruction"]["score"].get<double>() == 1.0);
}
