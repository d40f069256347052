#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ragopt/corpus.hpp"
#include "ragopt/llm.hpp"
#include "ragopt/prompting.hpp"

namespace ragopt {

struct ScoringOptions {
    /// Strip leading whitespace before the prefix check (chat models often
    /// emit a leading space or newline). Disable for the strict criterion.
    bool strip_leading_whitespace = true;
};

/// True iff the lowercased response starts with the gold token.
bool is_correct(const std::string& gold, const std::string& response,
                const ScoringOptions& options = {});

/// True iff the normalized response starts with "yes" or "no".
bool is_boolean_format(const std::string& response, const ScoringOptions& options = {});

/// 1.0 for a correct answer, 0.5 for an incorrect answer that is still in a
/// Boolean format, 0.0 otherwise.
double credit(const std::string& gold, const std::string& response,
              const ScoringOptions& options = {});

struct ExampleScore {
    std::string example_id;
    std::string response; // verbatim generated answer
    double credit = 0.0;  // one of {0.0, 0.5, 1.0}
    std::string error;    // backend failure annotation, empty when clean
};

struct InstructionScore {
    std::string instruction_text;
    double total = 0.0; // sum of breakdown credits, <= batch size
    std::vector<ExampleScore> breakdown;
};

/// The refine-then-answer procedure: transformation prompt -> transformer
/// role -> refined contents; task prompt -> generator role -> answer.
class RefinePipeline {
public:
    RefinePipeline(LlmClient& llm, PromptTemplates templates = {}, ScoringOptions options = {})
        : llm_(llm), templates_(std::move(templates)), options_(options) {}

    std::string refine(const std::string& instruction, const std::vector<std::string>& contents);

    struct Answer {
        std::string prompt;
        std::string response;
    };
    Answer answer(const std::string& query, const std::string& contents_text);

    LlmClient& llm() { return llm_; }
    const PromptTemplates& templates() const { return templates_; }
    const ScoringOptions& options() const { return options_; }

private:
    LlmClient& llm_;
    PromptTemplates templates_;
    ScoringOptions options_;
};

/// Runs the pipeline on each batch example and sums the credits. Backend
/// failures contribute 0.0 with an error annotation; the run continues.
/// Breakdown order always matches batch order.
InstructionScore score_instruction(const std::string& instruction, std::span<const Example> batch,
                                   RefinePipeline& pipeline, std::size_t concurrency = 1);

void to_json(nlohmann::json& j, const ExampleScore& s);
void from_json(const nlohmann::json& j, ExampleScore& s);
void to_json(nlohmann::json& j, const InstructionScore& s);
void from_json(const nlohmann::json& j, InstructionScore& s);

} // namespace ragopt
