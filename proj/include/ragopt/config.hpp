#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "ragopt/llm.hpp"
#include "ragopt/optimizer.hpp"
#include "ragopt/prompting.hpp"
#include "ragopt/scoring.hpp"

namespace ragopt {

/// A full run configuration: role -> backend bindings, optimization
/// parameters, template overrides, dataset paths, output directory.
/// Secrets never live here; backends read bearer tokens from the
/// environment variable named in their descriptor.
struct RunConfig {
    struct RoleSetup {
        BackendDescriptor backend;
        GenerationParams params;
    };

    std::map<Role, RoleSetup> roles;
    OptimizerConfig optimizer;
    PromptTemplates templates;
    std::string meta_instruction = default_meta_instruction();
    std::filesystem::path train_path; // empty = unset
    std::filesystem::path test_path;  // empty = unset
    std::filesystem::path output_dir = "runs/default";
    bool deterministic = false;
    std::size_t concurrency = 1;
    bool verbose_calls = false;
    ScoringOptions scoring;

    /// Effective worker count: deterministic mode serializes all calls.
    std::size_t effective_concurrency() const { return deterministic ? 1 : concurrency; }
};

/// Loads and validates a JSON run configuration. Relative paths resolve
/// against the config file's directory; set dataset paths must exist.
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json run_config_to_json(const RunConfig& config);

/// Fingerprint over the normalized configuration, stamped into checkpoints;
/// resuming requires an identical hash.
std::string run_config_hash(const RunConfig& config);

/// Builds the role router. Scripted backends with the same script path are
/// shared so interleaved roles consume one per-role cursor set.
LlmClient build_llm_client(const RunConfig& config);

} // namespace ragopt
