#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace ragopt {

/// One QA instance: a question, its gold evidence paragraphs, and the
/// canonical boolean answer token.
struct Example {
    std::string id;
    std::string query;
    std::vector<std::string> contents;
    std::string answer; // canonical "yes" | "no"
};

struct Dataset {
    std::vector<Example> examples;
    std::string label = "original-train"; // provenance tag

    std::size_t size() const { return examples.size(); }
};

struct SplitSpec {
    std::size_t test_size = 490;
    std::uint64_t seed = 0;
    /// When set, train keeps exactly this many post-test examples and the
    /// remainder is discarded; when unset, everything not in test is train.
    std::optional<std::size_t> train_size;
};

struct DatasetStats {
    std::size_t n = 0;
    std::size_t yes_count = 0;
    std::size_t no_count = 0;
    double avg_query_words = 0.0;
    double avg_contents = 0.0;
};

struct SplitResult {
    Dataset train;
    Dataset test;
};

/// Reads a resolved StrategyQA-format record file (JSON array or JSONL).
/// Each record: id (or qid), query (or question), answer (boolean, or a
/// "yes"/"no" string for round-tripping derived files), contents (array of
/// paragraph strings, optional). Boolean true maps to "yes", false to "no".
Dataset load_strategyqa(const std::filesystem::path& path);

/// Writes the dataset as JSONL in the same record schema (answer as boolean).
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

/// Seeded-shuffle split: shuffle all examples, take the first test_size as
/// test, the rest (or exactly train_size) as train. Same (dataset, seed)
/// always yields identical member lists.
SplitResult split(const Dataset& dataset, const SplitSpec& spec);

DatasetStats stats(const Dataset& dataset);

void to_json(nlohmann::json& j, const Example& e);
void from_json(const nlohmann::json& j, Example& e);
void to_json(nlohmann::json& j, const DatasetStats& s);

} // namespace ragopt
