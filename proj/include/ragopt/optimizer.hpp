#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ragopt/corpus.hpp"
#include "ragopt/prompting.hpp"
#include "ragopt/rng.hpp"
#include "ragopt/run_log.hpp"
#include "ragopt/scoring.hpp"

namespace ragopt {

struct OptimizerConfig {
    int steps = 100;
    int instructions_per_step = 3;
    int sample_size = 6;  // examples per scoring batch
    int capacity = 8;     // top-k list size
    std::uint64_t seed = 0;
    std::string starting_instruction = "Clean and organize the previous text.";
    /// Additional optimizer-role generations allowed per candidate slot when
    /// the output parses to nothing usable.
    int max_parse_retries = 2;
};

enum class CandidateStatus { scored, unusable, duplicate };

const char* candidate_status_name(CandidateStatus status);
CandidateStatus candidate_status_from_name(const std::string& name);

struct CandidateRecord {
    int slot = 0;
    std::string raw_response; // last raw optimizer output for this slot
    std::string text;         // parsed instruction, empty when unusable
    CandidateStatus status = CandidateStatus::unusable;
    std::optional<InstructionScore> score;
    int generation_attempts = 1;
};

struct StepRecord {
    int step_index = 0;
    std::vector<std::string> sampled_example_ids;
    std::vector<CandidateRecord> candidates;
    MetaPromptState state_after;
};

struct OptimizationResult {
    ScoredInstruction best_instruction;
    MetaPromptState final_state;
    std::vector<StepRecord> history;
};

/// Iterative meta-prompting optimization over refinement instructions, plus
/// the no-iteration brute-force baseline. All sampling flows through one
/// seeded PRNG; with a scripted backend a run is bit-reproducible.
class Optimizer {
public:
    Optimizer(OptimizerConfig config, const Dataset& train, RefinePipeline& pipeline,
              RunLogger* log = nullptr, std::string run_fingerprint = {},
              std::size_t concurrency = 1,
              std::string meta_instruction = default_meta_instruction());

    /// Scores the starting instruction on a fresh sample and returns the
    /// one-entry state (step_found = 0). A backend failure across the whole
    /// batch leaves the seed scored 0.0 and the run proceeds.
    MetaPromptState seed_state();

    /// One optimization step: render the meta-prompt, generate
    /// instructions_per_step candidates, sample one shared batch, score each
    /// usable candidate, and apply the top-k update in generation order.
    std::pair<MetaPromptState, StepRecord> step(const MetaPromptState& state, int step_index);

    OptimizationResult run();

    /// Generates n candidates from the static seed meta-prompt (never
    /// updated), scores each on its own fresh batch, returns the argmax.
    OptimizationResult run_brute_force(int n);

    /// Continues an interrupted run from the last checkpoint in the log
    /// file. The checkpoint's fingerprint must match this run's.
    OptimizationResult resume(const std::filesystem::path& log_file);

private:
    struct Batch {
        std::vector<Example> examples;
        std::vector<std::string> ids;
    };

    Batch sample_batch();
    CandidateRecord generate_candidate(const std::string& meta_prompt, int slot);
    ScoredInstruction pick_best(const MetaPromptState& state) const;
    void write_checkpoint(int step_index, const std::string& mode, int total,
                          const MetaPromptState& state);
    void log_candidate(int step_index, const CandidateRecord& candidate);
    void log_step(const StepRecord& record);

    OptimizationResult run_iterative_from(MetaPromptState state, int next_step,
                                          std::vector<StepRecord> history);
    OptimizationResult run_brute_from(MetaPromptState state, const std::string& meta_prompt,
                                      int n, int next_index, std::vector<StepRecord> history);

    OptimizerConfig cfg_;
    const Dataset& train_;
    RefinePipeline& pipeline_;
    RunLogger* log_;
    std::string fingerprint_;
    std::size_t concurrency_;
    std::string meta_instruction_;
    Rng rng_;
};

void to_json(nlohmann::json& j, const CandidateRecord& c);
void from_json(const nlohmann::json& j, CandidateRecord& c);
void to_json(nlohmann::json& j, const StepRecord& r);
void from_json(const nlohmann::json& j, StepRecord& r);
void to_json(nlohmann::json& j, const OptimizationResult& r);
void to_json(nlohmann::json& j, const OptimizerConfig& c);
void from_json(const nlohmann::json& j, OptimizerConfig& c);

} // namespace ragopt
