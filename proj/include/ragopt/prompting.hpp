#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace ragopt {

struct ScoredInstruction {
    std::string text;
    double score = 0.0;  // credit total over a scoring batch, 0.5 granularity
    int step_found = 0;  // 0 = seed instruction
};

/// The meta-prompt contents: a fixed task-description paragraph plus a
/// capacity-bounded list of the best instructions so far. Entries are kept
/// in insertion order (oldest first); rendering sorts by score.
struct MetaPromptState {
    std::string meta_instruction;
    std::vector<ScoredInstruction> instructions;
    std::size_t capacity = 8;
};

/// Template strings with {name} placeholders, overridable via the run config.
struct PromptTemplates {
    std::string meta_entry_format = "prompt:\n{text}\nscore:\n{score}";
    std::string transformation_layout = "{contents}\n\n{instruction}";
    std::string task_layout = "{contents}\n\nQuestion: {query}\nAnswer:";
    std::string query_layout = "Question: {query}\nAnswer:";
};

/// The fixed meta-instruction paragraph used at the top of the meta-prompt.
const std::string& default_meta_instruction();

/// Scores render with one decimal place ("3.0", "5.5").
std::string format_score(double score);

/// Substitutes {name} placeholders; unknown names are an error. Values are
/// inserted verbatim and never rescanned.
std::string render_template(const std::string& templ,
                            const std::map<std::string, std::string>& values);

/// Meta-instruction paragraph first, then one block per instruction,
/// separated by blank lines, ordered ascending by score (ties: older first).
std::string render_meta_prompt(const MetaPromptState& state,
                               const PromptTemplates& templates = {});

/// Paragraphs joined by blank lines, then a blank line, then the instruction.
/// Discovered instructions reference "the previous text", so contents come
/// first. Empty contents yield the instruction alone.
std::string render_transformation_prompt(const std::vector<std::string>& contents,
                                         const std::string& instruction,
                                         const PromptTemplates& templates = {});

/// Contents block, blank line, "Question: <query>", newline, "Answer:".
/// Empty contents_text falls back to the query-only layout.
std::string render_task_prompt(const std::string& query, const std::string& contents_text,
                               const PromptTemplates& templates = {});

/// Cleans raw optimizer output into a single instruction line: trims
/// whitespace and surrounding quotes, drops a leading "prompt:" label, keeps
/// the first line group (stopping at a blank line or a "score:" label), and
/// collapses internal newlines to spaces. Empty result raises
/// UnusableInstructionError.
std::string parse_instruction(const std::string& generated);

/// Top-k maintenance: duplicates leave the state unchanged; below capacity
/// the candidate is appended; at capacity it replaces the minimum-scored
/// entry (ties: oldest) iff strictly better.
MetaPromptState update_top_k(MetaPromptState state, const ScoredInstruction& candidate);

/// Blank-line joiner shared by the transformation prompt and plain-RAG
/// contents block.
std::string join_paragraphs(const std::vector<std::string>& paragraphs);

void to_json(nlohmann::json& j, const ScoredInstruction& s);
void from_json(const nlohmann::json& j, ScoredInstruction& s);
void to_json(nlohmann::json& j, const MetaPromptState& s);
void from_json(const nlohmann::json& j, MetaPromptState& s);

} // namespace ragopt
