#include "ragopt/evaluation.hpp"

#include <cstdio>

#include "ragopt/errors.hpp"
#include "ragopt/hash.hpp"
#include "ragopt/parallel.hpp"
#include "ragopt/run_log.hpp"

namespace ragopt {

const char* eval_mode_name(EvalMode mode) {
    switch (mode) {
    case EvalMode::query_only:
        return "query-only";
    case EvalMode::plain_rag:
        return "plain-rag";
    case EvalMode::refined_rag:
        return "refined-rag";
    case EvalMode::refined_no_iteration:
        return "refined-no-iteration";
    }
    return "query-only";
}

EvalMode eval_mode_from_name(const std::string& name) {
    for (EvalMode m : {EvalMode::query_only, EvalMode::plain_rag, EvalMode::refined_rag,
                       EvalMode::refined_no_iteration}) {
        if (name == eval_mode_name(m)) {
            return m;
        }
    }
    throw ConfigError("unknown evaluation mode: '" + name + "'");
}

bool mode_requires_instruction(EvalMode mode) {
    return mode == EvalMode::refined_rag || mode == EvalMode::refined_no_iteration;
}

double accuracy_pct(std::size_t correct, std::size_t n) {
    if (n == 0) {
        throw DataError("accuracy undefined for an empty test set");
    }
    if (correct > n) {
        throw DataError("correct count exceeds test size");
    }
    // half-up rounding of 10000 * correct / n, in exact integer arithmetic
    const std::uint64_t hundredths = (20000ull * correct + n) / (2ull * n);
    return static_cast<double>(hundredths) / 100.0;
}

EvalReport evaluate(EvalMode mode, const Dataset& test,
                    const std::optional<std::string>& instruction, RefinePipeline& pipeline,
                    std::size_t concurrency, RunLogger* log) {
    if (test.size() == 0) {
        throw DataError("evaluation requires a non-empty test set");
    }
    if (mode_requires_instruction(mode) && (!instruction || instruction->empty())) {
        throw ConfigError(std::string(eval_mode_name(mode)) +
                          " mode requires a refinement instruction");
    }

    EvalReport report;
    report.mode = mode;
    report.n = test.size();
    report.records.resize(test.size());

    parallel_for(test.size(), concurrency, [&](std::size_t i) {
        const Example& example = test.examples[i];
        EvalRecord& rec = report.records[i];
        rec.id = example.id;
        try {
            std::string contents_text;
            switch (mode) {
            case EvalMode::query_only:
                break;
            case EvalMode::plain_rag:
                contents_text = join_paragraphs(example.contents);
                break;
            case EvalMode::refined_rag:
            case EvalMode::refined_no_iteration:
                contents_text = pipeline.refine(*instruction, example.contents);
                break;
            }
            const auto answer = pipeline.answer(example.query, contents_text);
            rec.prompt_hash = fnv1a64_hex(answer.prompt);
            rec.response = answer.response;
            rec.correct = is_correct(example.answer, answer.response, pipeline.options());
        } catch (const BackendError& e) {
            rec.correct = false;
            rec.error = e.what();
        }
    });

    for (const auto& rec : report.records) {
        if (rec.correct) {
            ++report.correct;
        }
        if (log) {
            nlohmann::json j;
            to_json(j, rec);
            j["mode"] = eval_mode_name(mode);
            log->append("eval_example", std::move(j));
        }
    }
    report.accuracy_pct = accuracy_pct(report.correct, report.n);

    if (log) {
        nlohmann::json j;
        to_json(j, report);
        j.erase("records"); // per-example records already logged above
        log->append("eval_report", std::move(j));
    }
    return report;
}

std::string format_accuracy_cell(const EvalReport& report) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%zu (%.2f %%)", report.correct, report.accuracy_pct);
    return buf;
}

std::string render_report_table(std::span<const EvalReport> reports) {
    std::string out;
    out += "Method                         Accuracy\n";
    out += "------                         --------\n";
    for (const auto& r : reports) {
        char line[128];
        std::snprintf(line, sizeof(line), "%-30s %s\n", eval_mode_name(r.mode),
                      format_accuracy_cell(r).c_str());
        out += line;
    }
    return out;
}

void to_json(nlohmann::json& j, const EvalRecord& r) {
    j = nlohmann::json{{"id", r.id},
                       {"prompt_hash", r.prompt_hash},
                       {"response", r.response},
                       {"is_correct", r.correct}};
    if (!r.error.empty()) {
        j["error"] = r.error;
    }
}

void from_json(const nlohmann::json& j, EvalRecord& r) {
    j.at("id").get_to(r.id);
    j.at("prompt_hash").get_to(r.prompt_hash);
    j.at("response").get_to(r.response);
    j.at("is_correct").get_to(r.correct);
    r.error = j.value("error", "");
}

void to_json(nlohmann::json& j, const EvalReport& r) {
    j = nlohmann::json{{"mode", eval_mode_name(r.mode)},
                       {"n", r.n},
                       {"correct", r.correct},
                       {"accuracy_pct", r.accuracy_pct},
                       {"records", r.records}};
}

void from_json(const nlohmann::json& j, EvalReport& r) {
    r.mode = eval_mode_from_name(j.at("mode").get<std::string>());
    j.at("n").get_to(r.n);
    j.at("correct").get_to(r.correct);
    j.at("accuracy_pct").get_to(r.accuracy_pct);
    if (j.contains("records")) {
        j.at("records").get_to(r.records);
    }
}

} // namespace ragopt
