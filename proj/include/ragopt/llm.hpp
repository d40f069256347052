#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ragopt/errors.hpp"

namespace ragopt {

/// The three model roles of the pipeline: instruction proposer, content
/// refiner, and final answerer.
enum class Role { optimizer, transformer, generator };

const char* role_name(Role role);
Role role_from_name(const std::string& name);

struct GenerationParams {
    double temperature = 1.0;
    int max_new_tokens = 64;
    std::optional<std::uint64_t> seed;
};

/// Per-role default token caps: 64 for new instructions, 128 for refined
/// content, 64 for the task answer.
GenerationParams default_params(Role role);

struct BackendDescriptor {
    enum class Kind { http, scripted };

    Kind kind = Kind::scripted;
    // http kind
    std::string endpoint;      // base URL, optionally with an explicit path
    std::string model_id;
    std::string auth_env;      // env var holding the bearer token; never the token itself
    std::string system_prompt; // optional system message, none by default
    int timeout_ms = 30000;
    int max_retries = 3;
    int backoff_initial_ms = 1000;
    // scripted kind
    std::string script_path;
};

struct CallRecord {
    Role role = Role::generator;
    std::string prompt;
    GenerationParams params;
    std::string response; // verbatim, untrimmed
    double latency_ms = 0.0;
    int attempts = 1;
    bool ok = true;
    std::string error;
};

using CallSink = std::function<void(const CallRecord&)>;

class TextBackend {
public:
    struct Completion {
        std::string text;
        int attempts = 1;
    };

    virtual ~TextBackend() = default;
    virtual Completion generate(Role role, const std::string& prompt,
                                const GenerationParams& params) = 0;

    /// Replay position for checkpointing; null for stateless backends.
    virtual nlohmann::json cursor_state() const { return nullptr; }
    virtual void restore_cursor_state(const nlohmann::json&) {}
};

/// Deterministic backend replaying a fixed per-role response sequence.
/// Thread-safe; each role consumes its own sequence independently.
class ScriptedBackend : public TextBackend {
public:
    explicit ScriptedBackend(std::map<Role, std::vector<std::string>> responses);

    /// Script file: JSON object mapping role names to arrays of response
    /// strings, e.g. {"optimizer": ["..."], "transformer": [], "generator": []}.
    static std::shared_ptr<ScriptedBackend> load(const std::filesystem::path& path);

    Completion generate(Role role, const std::string& prompt,
                        const GenerationParams& params) override;

    nlohmann::json cursor_state() const override;
    void restore_cursor_state(const nlohmann::json& state) override;

private:
    mutable std::mutex mutex_;
    std::map<Role, std::vector<std::string>> responses_;
    std::map<Role, std::size_t> cursors_;
};

/// Chat-completion HTTP backend (POST {endpoint}/v1/chat/completions with
/// model, messages, temperature, max_tokens; bearer auth from the
/// environment). Retries transport failures and 429/5xx responses with
/// exponential backoff.
class HttpBackend : public TextBackend {
public:
    explicit HttpBackend(BackendDescriptor descriptor);

    Completion generate(Role role, const std::string& prompt,
                        const GenerationParams& params) override;

private:
    BackendDescriptor desc_;
    std::string base_url_;
    std::string path_;
};

std::shared_ptr<TextBackend> make_backend(const BackendDescriptor& descriptor);

/// Routes each role to its configured backend and parameters, and emits
/// exactly one CallRecord per generate call, successful or failed.
class LlmClient {
public:
    struct Binding {
        std::shared_ptr<TextBackend> backend;
        GenerationParams params;
    };

    LlmClient() = default;

    void bind(Role role, Binding binding);
    bool bound(Role role) const;

    std::string generate(Role role, const std::string& prompt);
    std::string generate(Role role, const std::string& prompt, const GenerationParams& params);

    void set_call_sink(CallSink sink) { sink_ = std::move(sink); }

    /// Aggregated replay positions of all distinct backends, for checkpoints.
    nlohmann::json cursor_state() const;
    void restore_cursor_state(const nlohmann::json& state);

private:
    std::map<Role, Binding> bindings_;
    CallSink sink_;
};

void to_json(nlohmann::json& j, const GenerationParams& p);
void from_json(const nlohmann::json& j, GenerationParams& p);
void to_json(nlohmann::json& j, const CallRecord& r);

} // namespace ragopt
