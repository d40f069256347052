#include "ragopt/scoring.hpp"

#include <cctype>

#include "ragopt/errors.hpp"
#include "ragopt/parallel.hpp"

namespace ragopt {

namespace {

std::string normalize(const std::string& response, const ScoringOptions& options) {
    std::size_t begin = 0;
    if (options.strip_leading_whitespace) {
        while (begin < response.size() &&
               std::isspace(static_cast<unsigned char>(response[begin]))) {
            ++begin;
        }
    }
    std::string out;
    out.reserve(response.size() - begin);
    for (std::size_t i = begin; i < response.size(); ++i) {
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(response[i])));
    }
    return out;
}

void require_canonical(const std::string& gold) {
    if (gold != "yes" && gold != "no") {
        throw DataError("gold answer must be canonical \"yes\" or \"no\", got '" + gold + "'");
    }
}

} // namespace

bool is_correct(const std::string& gold, const std::string& response,
                const ScoringOptions& options) {
    require_canonical(gold);
    return normalize(response, options).starts_with(gold);
}

bool is_boolean_format(const std::string& response, const ScoringOptions& options) {
    const std::string r = normalize(response, options);
    return r.starts_with("yes") || r.starts_with("no");
}

double credit(const std::string& gold, const std::string& response,
              const ScoringOptions& options) {
    if (is_correct(gold, response, options)) {
        return 1.0;
    }
    if (is_boolean_format(response, options)) {
        return 0.5;
    }
    return 0.0;
}

std::string RefinePipeline::refine(const std::string& instruction,
                                   const std::vector<std::string>& contents) {
    const std::string prompt = render_transformation_prompt(contents, instruction, templates_);
    return llm_.generate(Role::transformer, prompt);
}

RefinePipeline::Answer RefinePipeline::answer(const std::string& query,
                                              const std::string& contents_text) {
    Answer a;
    a.prompt = render_task_prompt(query, contents_text, templates_);
    a.response = llm_.generate(Role::generator, a.prompt);
    return a;
}

InstructionScore score_instruction(const std::string& instruction, std::span<const Example> batch,
                                   RefinePipeline& pipeline, std::size_t concurrency) {
    if (batch.empty()) {
        throw DataError("score_instruction requires a non-empty batch");
    }
    InstructionScore score;
    score.instruction_text = instruction;
    score.breakdown.resize(batch.size());

    parallel_for(batch.size(), concurrency, [&](std::size_t i) {
        const Example& example = batch[i];
        ExampleScore& cell = score.breakdown[i];
        cell.example_id = example.id;
        try {
            const std::string refined = pipeline.refine(instruction, example.contents);
            const auto answer = pipeline.answer(example.query, refined);
            cell.response = answer.response;
            cell.credit = credit(example.answer, answer.response, pipeline.options());
        } catch (const BackendError& e) {
            cell.credit = 0.0;
            cell.error = e.what();
        }
    });

    for (const auto& cell : score.breakdown) {
        score.total += cell.credit;
    }
    return score;
}

void to_json(nlohmann::json& j, const ExampleScore& s) {
    j = nlohmann::json{{"example_id", s.example_id},
                       {"response", s.response},
                       {"credit", s.credit}};
    if (!s.error.empty()) {
        j["error"] = s.error;
    }
}

void from_json(const nlohmann::json& j, ExampleScore& s) {
    j.at("example_id").get_to(s.example_id);
    j.at("response").get_to(s.response);
    j.at("credit").get_to(s.credit);
    s.error = j.value("error", "");
}

void to_json(nlohmann::json& j, const InstructionScore& s) {
    j = nlohmann::json{{"instruction_text", s.instruction_text},
                       {"total", s.total},
                       {"breakdown", s.breakdown}};
}

void from_json(const nlohmann::json& j, InstructionScore& s) {
    j.at("instruction_text").get_to(s.instruction_text);
    j.at("total").get_to(s.total);
    j.at("breakdown").get_to(s.breakdown);
}

} // namespace ragopt
