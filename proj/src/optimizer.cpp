#include "ragopt/optimizer.hpp"

#include <algorithm>

#include "ragopt/errors.hpp"

namespace ragopt {

namespace {

bool same_entries(const MetaPromptState& a, const MetaPromptState& b) {
    if (a.instructions.size() != b.instructions.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.instructions.size(); ++i) {
        const auto& x = a.instructions[i];
        const auto& y = b.instructions[i];
        if (x.text != y.text || x.score != y.score || x.step_found != y.step_found) {
            return false;
        }
    }
    return true;
}

bool state_contains(const MetaPromptState& state, const std::string& text) {
    for (const auto& entry : state.instructions) {
        if (entry.text == text) {
            return true;
        }
    }
    return false;
}

} // namespace

const char* candidate_status_name(CandidateStatus status) {
    switch (status) {
    case CandidateStatus::scored:
        return "scored";
    case CandidateStatus::unusable:
        return "unusable";
    case CandidateStatus::duplicate:
        return "duplicate";
    }
    return "unusable";
}

CandidateStatus candidate_status_from_name(const std::string& name) {
    for (CandidateStatus s :
         {CandidateStatus::scored, CandidateStatus::unusable, CandidateStatus::duplicate}) {
        if (name == candidate_status_name(s)) {
            return s;
        }
    }
    throw DataError("unknown candidate status: '" + name + "'");
}

Optimizer::Optimizer(OptimizerConfig config, const Dataset& train, RefinePipeline& pipeline,
                     RunLogger* log, std::string run_fingerprint, std::size_t concurrency,
                     std::string meta_instruction)
    : cfg_(std::move(config)),
      train_(train),
      pipeline_(pipeline),
      log_(log),
      fingerprint_(std::move(run_fingerprint)),
      concurrency_(concurrency),
      meta_instruction_(std::move(meta_instruction)),
      rng_(cfg_.seed) {
    if (cfg_.steps < 0) {
        throw ConfigError("steps must be >= 0");
    }
    if (cfg_.instructions_per_step <= 0 || cfg_.sample_size <= 0 || cfg_.capacity <= 0) {
        throw ConfigError("instructions_per_step, sample_size and capacity must be positive");
    }
    if (train_.size() == 0) {
        throw DataError("optimization requires a non-empty training set");
    }
    if (static_cast<std::size_t>(cfg_.sample_size) > train_.size()) {
        throw ConfigError("sample_size exceeds the training set size");
    }
    if (cfg_.starting_instruction.empty()) {
        throw ConfigError("starting_instruction must be non-empty");
    }
}

Optimizer::Batch Optimizer::sample_batch() {
    Batch batch;
    const auto indices =
        sample_indices(train_.size(), static_cast<std::size_t>(cfg_.sample_size), rng_);
    batch.examples.reserve(indices.size());
    batch.ids.reserve(indices.size());
    for (std::size_t idx : indices) {
        batch.examples.push_back(train_.examples[idx]);
        batch.ids.push_back(train_.examples[idx].id);
    }
    return batch;
}

MetaPromptState Optimizer::seed_state() {
    MetaPromptState state;
    state.meta_instruction = meta_instruction_;
    state.capacity = static_cast<std::size_t>(cfg_.capacity);

    Batch batch = sample_batch();
    InstructionScore score = score_instruction(cfg_.starting_instruction, batch.examples,
                                               pipeline_, concurrency_);
    state = update_top_k(state, ScoredInstruction{cfg_.starting_instruction, score.total, 0});

    if (log_) {
        nlohmann::json score_json;
        to_json(score_json, score);
        log_->append("seed", nlohmann::json{{"instruction", cfg_.starting_instruction},
                                            {"sampled_example_ids", batch.ids},
                                            {"score", std::move(score_json)}});
    }
    return state;
}

CandidateRecord Optimizer::generate_candidate(const std::string& meta_prompt, int slot) {
    CandidateRecord candidate;
    candidate.slot = slot;
    const int attempts = 1 + std::max(0, cfg_.max_parse_retries);
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        candidate.generation_attempts = attempt;
        std::string raw;
        try {
            raw = pipeline_.llm().generate(Role::optimizer, meta_prompt);
        } catch (const BackendError& e) {
            if (e.kind() == BackendError::Kind::empty_completion) {
                candidate.raw_response.clear();
                continue; // treated like an unusable candidate attempt
            }
            throw; // outage: the checkpoint from the last completed step stands
        }
        candidate.raw_response = raw;
        try {
            candidate.text = parse_instruction(raw);
            return candidate;
        } catch (const UnusableInstructionError&) {
            continue;
        }
    }
    candidate.text.clear();
    candidate.status = CandidateStatus::unusable;
    return candidate;
}

std::pair<MetaPromptState, StepRecord> Optimizer::step(const MetaPromptState& state,
                                                       int step_index) {
    StepRecord record;
    record.step_index = step_index;

    const std::string meta_prompt = render_meta_prompt(state, pipeline_.templates());
    for (int slot = 0; slot < cfg_.instructions_per_step; ++slot) {
        record.candidates.push_back(generate_candidate(meta_prompt, slot));
    }

    // one batch per step, shared by all of its candidates
    Batch batch = sample_batch();
    record.sampled_example_ids = batch.ids;

    MetaPromptState next = state;
    for (auto& candidate : record.candidates) {
        if (candidate.text.empty()) {
            candidate.status = CandidateStatus::unusable;
            log_candidate(step_index, candidate);
            continue;
        }
        if (state_contains(next, candidate.text)) {
            candidate.status = CandidateStatus::duplicate;
            log_candidate(step_index, candidate);
            continue;
        }
        candidate.score =
            score_instruction(candidate.text, batch.examples, pipeline_, concurrency_);
        candidate.status = CandidateStatus::scored;
        log_candidate(step_index, candidate);

        const ScoredInstruction entry{candidate.text, candidate.score->total, step_index};
        MetaPromptState updated = update_top_k(next, entry);
        if (!same_entries(updated, next)) {
            if (log_) {
                nlohmann::json evicted = nullptr;
                if (updated.instructions.size() == next.instructions.size()) {
                    for (const auto& old_entry : next.instructions) {
                        if (!state_contains(updated, old_entry.text)) {
                            to_json(evicted, old_entry);
                            break;
                        }
                    }
                }
                nlohmann::json inserted;
                to_json(inserted, entry);
                log_->append("state_update",
                             nlohmann::json{{"step_index", step_index},
                                            {"inserted", std::move(inserted)},
                                            {"evicted", std::move(evicted)}});
            }
            next = std::move(updated);
        }
    }

    record.state_after = next;
    log_step(record);
    return {next, record};
}

ScoredInstruction Optimizer::pick_best(const MetaPromptState& state) const {
    if (state.instructions.empty()) {
        throw DataError("cannot pick a best instruction from an empty state");
    }
    const ScoredInstruction* best = &state.instructions.front();
    for (const auto& entry : state.instructions) {
        if (entry.score > best->score ||
            (entry.score == best->score && entry.step_found < best->step_found)) {
            best = &entry;
        }
    }
    return *best;
}

void Optimizer::write_checkpoint(int step_index, const std::string& mode, int total,
                                 const MetaPromptState& state) {
    if (!log_) {
        return;
    }
    nlohmann::json state_json;
    to_json(state_json, state);
    log_->append("checkpoint", nlohmann::json{{"step_index", step_index},
                                              {"mode", mode},
                                              {"total", total},
                                              {"config_hash", fingerprint_},
                                              {"state", std::move(state_json)},
                                              {"rng", rng_state_to_string(rng_)},
                                              {"backend_cursors",
                                               pipeline_.llm().cursor_state()}});
}

void Optimizer::log_candidate(int step_index, const CandidateRecord& candidate) {
    if (!log_) {
        return;
    }
    nlohmann::json j;
    to_json(j, candidate);
    j["step_index"] = step_index;
    log_->append("candidate", std::move(j));
}

void Optimizer::log_step(const StepRecord& record) {
    if (!log_) {
        return;
    }
    nlohmann::json j;
    to_json(j, record);
    log_->append("step", std::move(j));
}

OptimizationResult Optimizer::run() {
    if (log_) {
        nlohmann::json cfg_json;
        to_json(cfg_json, cfg_);
        log_->append("run_start", nlohmann::json{{"mode", "iterative"},
                                                 {"config_hash", fingerprint_},
                                                 {"optimizer", std::move(cfg_json)}});
    }
    MetaPromptState state = seed_state();
    write_checkpoint(0, "iterative", cfg_.steps, state);
    return run_iterative_from(std::move(state), 1, {});
}

OptimizationResult Optimizer::run_iterative_from(MetaPromptState state, int next_step,
                                                 std::vector<StepRecord> history) {
    for (int s = next_step; s <= cfg_.steps; ++s) {
        auto [updated, record] = step(state, s);
        state = std::move(updated);
        history.push_back(std::move(record));
        write_checkpoint(s, "iterative", cfg_.steps, state);
    }

    OptimizationResult result;
    result.best_instruction = pick_best(state);
    result.final_state = std::move(state);
    result.history = std::move(history);
    if (log_) {
        nlohmann::json best;
        to_json(best, result.best_instruction);
        log_->append("best", std::move(best));
    }
    return result;
}

OptimizationResult Optimizer::run_brute_force(int n) {
    if (n <= 0) {
        throw ConfigError("brute-force candidate count must be positive");
    }
    if (log_) {
        nlohmann::json cfg_json;
        to_json(cfg_json, cfg_);
        log_->append("run_start", nlohmann::json{{"mode", "brute-force"},
                                                 {"n", n},
                                                 {"config_hash", fingerprint_},
                                                 {"optimizer", std::move(cfg_json)}});
    }
    MetaPromptState state = seed_state();
    write_checkpoint(0, "brute-force", n, state);
    const std::string meta_prompt = render_meta_prompt(state, pipeline_.templates());
    return run_brute_from(std::move(state), meta_prompt, n, 1, {});
}

OptimizationResult Optimizer::run_brute_from(MetaPromptState state,
                                             const std::string& meta_prompt, int n,
                                             int next_index, std::vector<StepRecord> history) {
    for (int i = next_index; i <= n; ++i) {
        StepRecord record;
        record.step_index = i;
        CandidateRecord candidate = generate_candidate(meta_prompt, 0);
        if (!candidate.text.empty()) {
            Batch batch = sample_batch(); // fresh batch per candidate
            record.sampled_example_ids = batch.ids;
            candidate.score =
                score_instruction(candidate.text, batch.examples, pipeline_, concurrency_);
            candidate.status = CandidateStatus::scored;
        } else {
            candidate.status = CandidateStatus::unusable;
        }
        log_candidate(i, candidate);
        record.candidates.push_back(std::move(candidate));
        record.state_after = state; // static by construction
        log_step(record);
        history.push_back(std::move(record));
        write_checkpoint(i, "brute-force", n, state);
    }

    // argmax over every scored candidate, earliest on ties
    OptimizationResult result;
    const CandidateRecord* best = nullptr;
    int best_index = 0;
    for (const auto& record : history) {
        for (const auto& candidate : record.candidates) {
            if (candidate.status != CandidateStatus::scored) {
                continue;
            }
            if (!best || candidate.score->total > best->score->total) {
                best = &candidate;
                best_index = record.step_index;
            }
        }
    }
    if (best) {
        result.best_instruction = ScoredInstruction{best->text, best->score->total, best_index};
    } else {
        result.best_instruction = pick_best(state); // no usable candidate: keep the seed
    }
    result.final_state = std::move(state);
    result.history = std::move(history);
    if (log_) {
        nlohmann::json best_json;
        to_json(best_json, result.best_instruction);
        log_->append("best", std::move(best_json));
    }
    return result;
}

OptimizationResult Optimizer::resume(const std::filesystem::path& log_file) {
    const auto records = RunLogger::read_all(log_file);
    const nlohmann::json* checkpoint = nullptr;
    for (const auto& rec : records) {
        if (rec.value("type", "") == "checkpoint") {
            checkpoint = &rec;
        }
    }
    if (!checkpoint) {
        throw DataError("no checkpoint found in run log: " + log_file.string());
    }
    const nlohmann::json& data = (*checkpoint)["data"];
    if (data.value("config_hash", "") != fingerprint_) {
        throw ConfigError("checkpoint was written under a different configuration");
    }

    MetaPromptState state;
    from_json(data.at("state"), state);
    rng_ = rng_state_from_string(data.at("rng").get<std::string>());
    pipeline_.llm().restore_cursor_state(data.value("backend_cursors", nlohmann::json()));

    const int last_step = data.at("step_index").get<int>();
    std::vector<StepRecord> history;
    for (const auto& rec : records) {
        if (rec.value("type", "") != "step") {
            continue;
        }
        StepRecord sr;
        from_json(rec["data"], sr);
        if (sr.step_index <= last_step) {
            history.push_back(std::move(sr));
        }
    }
    std::sort(history.begin(), history.end(),
              [](const StepRecord& a, const StepRecord& b) { return a.step_index < b.step_index; });

    const std::string mode = data.value("mode", "iterative");
    const int total = data.at("total").get<int>();
    if (log_) {
        log_->append("resume", nlohmann::json{{"from_step", last_step}, {"mode", mode}});
    }
    if (mode == "brute-force") {
        const std::string meta_prompt = render_meta_prompt(state, pipeline_.templates());
        return run_brute_from(std::move(state), meta_prompt, total, last_step + 1,
                              std::move(history));
    }
    if (total != cfg_.steps) {
        throw ConfigError("checkpoint step count does not match the configuration");
    }
    return run_iterative_from(std::move(state), last_step + 1, std::move(history));
}

// ---------------------------------------------------------------------------
// serialization

void to_json(nlohmann::json& j, const CandidateRecord& c) {
    j = nlohmann::json{{"slot", c.slot},
                       {"raw_response", c.raw_response},
                       {"text", c.text},
                       {"status", candidate_status_name(c.status)},
                       {"generation_attempts", c.generation_attempts}};
    if (c.score) {
        nlohmann::json score;
        to_json(score, *c.score);
        j["score"] = std::move(score);
    }
}

void from_json(const nlohmann::json& j, CandidateRecord& c) {
    j.at("slot").get_to(c.slot);
    j.at("raw_response").get_to(c.raw_response);
    j.at("text").get_to(c.text);
    c.status = candidate_status_from_name(j.at("status").get<std::string>());
    c.generation_attempts = j.value("generation_attempts", 1);
    if (j.contains("score")) {
        InstructionScore score;
        from_json(j.at("score"), score);
        c.score = std::move(score);
    } else {
        c.score.reset();
    }
}

void to_json(nlohmann::json& j, const StepRecord& r) {
    j = nlohmann::json{{"step_index", r.step_index},
                       {"sampled_example_ids", r.sampled_example_ids},
                       {"candidates", r.candidates},
                       {"state_after", r.state_after}};
}

void from_json(const nlohmann::json& j, StepRecord& r) {
    j.at("step_index").get_to(r.step_index);
    j.at("sampled_example_ids").get_to(r.sampled_example_ids);
    j.at("candidates").get_to(r.candidates);
    from_json(j.at("state_after"), r.state_after);
}

void to_json(nlohmann::json& j, const OptimizationResult& r) {
    nlohmann::json best;
    to_json(best, r.best_instruction);
    j = nlohmann::json{{"best_instruction", std::move(best)},
                       {"final_state", r.final_state},
                       {"history", r.history}};
}

void to_json(nlohmann::json& j, const OptimizerConfig& c) {
    j = nlohmann::json{{"steps", c.steps},
                       {"instructions_per_step", c.instructions_per_step},
                       {"sample_size", c.sample_size},
                       {"capacity", c.capacity},
                       {"seed", c.seed},
                       {"starting_instruction", c.starting_instruction},
                       {"max_parse_retries", c.max_parse_retries}};
}

void from_json(const nlohmann::json& j, OptimizerConfig& c) {
    c = OptimizerConfig{};
    if (j.contains("steps")) j.at("steps").get_to(c.steps);
    if (j.contains("instructions_per_step"))
        j.at("instructions_per_step").get_to(c.instructions_per_step);
    if (j.contains("sample_size")) j.at("sample_size").get_to(c.sample_size);
    if (j.contains("capacity")) j.at("capacity").get_to(c.capacity);
    if (j.contains("seed")) j.at("seed").get_to(c.seed);
    if (j.contains("starting_instruction"))
        j.at("starting_instruction").get_to(c.starting_instruction);
    if (j.contains("max_parse_retries")) j.at("max_parse_retries").get_to(c.max_parse_retries);
}

} // namespace ragopt
