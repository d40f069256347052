#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ragopt/corpus.hpp"
#include "ragopt/scoring.hpp"

namespace ragopt {

class RunLogger;

enum class EvalMode { query_only, plain_rag, refined_rag, refined_no_iteration };

const char* eval_mode_name(EvalMode mode);
EvalMode eval_mode_from_name(const std::string& name);

/// Refined modes take the instruction produced by optimization; the other
/// two answer from the query alone or the raw gold contents.
bool mode_requires_instruction(EvalMode mode);

struct EvalRecord {
    std::string id;
    std::string prompt_hash; // FNV-1a of the final task prompt
    std::string response;
    bool correct = false;
    std::string error; // backend failure annotation, empty when clean
};

struct EvalReport {
    EvalMode mode = EvalMode::query_only;
    std::size_t n = 0;
    std::size_t correct = 0;
    double accuracy_pct = 0.0; // 100 * correct / n, half-up to 2 decimals
    std::vector<EvalRecord> records;
};

/// 100 * correct / n with half-up rounding to 2 decimals, computed in exact
/// integer arithmetic. n = 0 is an error.
double accuracy_pct(std::size_t correct, std::size_t n);

/// Runs one evaluation mode over the test set. Backend failures count the
/// example incorrect with an annotation. Record order matches test order.
EvalReport evaluate(EvalMode mode, const Dataset& test,
                    const std::optional<std::string>& instruction, RefinePipeline& pipeline,
                    std::size_t concurrency = 1, RunLogger* log = nullptr);

/// "170 (34.69 %)"
std::string format_accuracy_cell(const EvalReport& report);

/// Text table with one "N (PP.PP %)" row per report.
std::string render_report_table(std::span<const EvalReport> reports);

void to_json(nlohmann::json& j, const EvalRecord& r);
void from_json(const nlohmann::json& j, EvalRecord& r);
void to_json(nlohmann::json& j, const EvalReport& r);
void from_json(const nlohmann::json& j, EvalReport& r);

} // namespace ragopt
