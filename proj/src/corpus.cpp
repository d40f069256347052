#include "ragopt/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "ragopt/errors.hpp"
#include "ragopt/rng.hpp"

namespace ragopt {

namespace {

std::string trim_copy(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string canonical_answer(const nlohmann::json& v, std::size_t record_index) {
    if (v.is_boolean()) {
        return v.get<bool>() ? "yes" : "no";
    }
    if (v.is_string()) {
        std::string s = trim_copy(v.get<std::string>());
        std::transform(s.begin(), s.end(), s.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (s == "yes" || s == "no") {
            return s;
        }
    }
    throw DataError("record " + std::to_string(record_index) +
                    ": answer must be a boolean or \"yes\"/\"no\"");
}

Example example_from_record(const nlohmann::json& rec, std::size_t record_index) {
    if (!rec.is_object()) {
        throw DataError("record " + std::to_string(record_index) + ": not an object");
    }
    Example e;

    if (rec.contains("id")) {
        e.id = rec["id"].is_string() ? rec["id"].get<std::string>() : rec["id"].dump();
    } else if (rec.contains("qid")) {
        e.id = rec["qid"].is_string() ? rec["qid"].get<std::string>() : rec["qid"].dump();
    } else {
        throw DataError("record " + std::to_string(record_index) + ": missing id/qid");
    }

    const char* query_key = rec.contains("query") ? "query" : rec.contains("question") ? "question" : nullptr;
    if (query_key == nullptr || !rec[query_key].is_string()) {
        throw DataError("record " + std::to_string(record_index) + ": missing query/question");
    }
    e.query = rec[query_key].get<std::string>();
    if (trim_copy(e.query).empty()) {
        throw DataError("record " + std::to_string(record_index) + ": empty query");
    }

    if (!rec.contains("answer")) {
        throw DataError("record " + std::to_string(record_index) + ": missing answer field");
    }
    e.answer = canonical_answer(rec["answer"], record_index);

    if (rec.contains("contents")) {
        if (!rec["contents"].is_array()) {
            throw DataError("record " + std::to_string(record_index) + ": contents must be an array");
        }
        for (const auto& p : rec["contents"]) {
            if (!p.is_string()) {
                throw DataError("record " + std::to_string(record_index) +
                                ": contents entries must be strings");
            }
            e.contents.push_back(p.get<std::string>());
        }
    }
    return e;
}

void check_unique_ids(const Dataset& d) {
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < d.examples.size(); ++i) {
        if (!seen.insert(d.examples[i].id).second) {
            throw DataError("record " + std::to_string(i) + ": duplicate id '" +
                            d.examples[i].id + "'");
        }
    }
}

std::size_t whitespace_tokens(const std::string& s) {
    std::istringstream is(s);
    std::string tok;
    std::size_t n = 0;
    while (is >> tok) ++n;
    return n;
}

} // namespace

Dataset load_strategyqa(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open dataset file: " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();

    std::size_t first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
        throw DataError("dataset file is empty: " + path.string());
    }

    Dataset d;
    if (text[first] == '[') {
        nlohmann::json arr;
        try {
            arr = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("malformed dataset file " + path.string() + ": " + e.what());
        }
        if (!arr.is_array()) {
            throw DataError("dataset file must hold an array or JSONL records");
        }
        for (std::size_t i = 0; i < arr.size(); ++i) {
            d.examples.push_back(example_from_record(arr[i], i));
        }
    } else {
        std::istringstream lines(text);
        std::string line;
        std::size_t index = 0;
        while (std::getline(lines, line)) {
            if (trim_copy(line).empty()) {
                continue;
            }
            nlohmann::json rec;
            try {
                rec = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw DataError("record " + std::to_string(index) + ": malformed JSON (" +
                                e.what() + ")");
            }
            d.examples.push_back(example_from_record(rec, index));
            ++index;
        }
    }
    check_unique_ids(d);
    return d;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw DataError("cannot write dataset file: " + path.string());
    }
    for (const auto& e : dataset.examples) {
        nlohmann::json rec;
        to_json(rec, e);
        out << rec.dump() << '\n';
    }
}

SplitResult split(const Dataset& dataset, const SplitSpec& spec) {
    if (spec.test_size >= dataset.size()) {
        throw DataError("test_size (" + std::to_string(spec.test_size) +
                        ") must be smaller than the dataset (" +
                        std::to_string(dataset.size()) + ")");
    }
    if (spec.train_size && spec.test_size + *spec.train_size > dataset.size()) {
        throw DataError("test_size + train_size exceeds the dataset size");
    }

    std::vector<Example> shuffled = dataset.examples;
    Rng rng(spec.seed);
    deterministic_shuffle(shuffled, rng);

    SplitResult r;
    r.test.label = "derived-test";
    r.train.label = "derived-train";
    r.test.examples.assign(shuffled.begin(),
                           shuffled.begin() + static_cast<std::ptrdiff_t>(spec.test_size));
    const std::size_t train_count =
        spec.train_size ? *spec.train_size : dataset.size() - spec.test_size;
    r.train.examples.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(spec.test_size),
                            shuffled.begin() +
                                static_cast<std::ptrdiff_t>(spec.test_size + train_count));
    return r;
}

DatasetStats stats(const Dataset& dataset) {
    DatasetStats s;
    s.n = dataset.size();
    if (s.n == 0) {
        return s;
    }
    std::size_t words = 0;
    std::size_t paragraphs = 0;
    for (const auto& e : dataset.examples) {
        if (e.answer == "yes") {
            ++s.yes_count;
        } else {
            ++s.no_count;
        }
        words += whitespace_tokens(e.query);
        paragraphs += e.contents.size();
    }
    s.avg_query_words = static_cast<double>(words) / static_cast<double>(s.n);
    s.avg_contents = static_cast<double>(paragraphs) / static_cast<double>(s.n);
    return s;
}

void to_json(nlohmann::json& j, const Example& e) {
    j = nlohmann::json{{"id", e.id},
                       {"query", e.query},
                       {"answer", e.answer == "yes"},
                       {"contents", e.contents}};
}

void from_json(const nlohmann::json& j, Example& e) {
    e = example_from_record(j, 0);
}

void to_json(nlohmann::json& j, const DatasetStats& s) {
    j = nlohmann::json{{"n", s.n},
                       {"yes_count", s.yes_count},
                       {"no_count", s.no_count},
                       {"avg_query_words", s.avg_query_words},
                       {"avg_contents", s.avg_contents}};
}

} // namespace ragopt
