#include "ragopt/llm.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>

namespace ragopt {

namespace {

const std::vector<Role> kAllRoles = {Role::optimizer, Role::transformer, Role::generator};

} // namespace

const char* role_name(Role role) {
    switch (role) {
    case Role::optimizer:
        return "optimizer";
    case Role::transformer:
        return "transformer";
    case Role::generator:
        return "generator";
    }
    return "generator";
}

Role role_from_name(const std::string& name) {
    for (Role r : kAllRoles) {
        if (name == role_name(r)) {
            return r;
        }
    }
    throw ConfigError("unknown role: '" + name + "'");
}

GenerationParams default_params(Role role) {
    GenerationParams p;
    p.temperature = 1.0;
    p.max_new_tokens = role == Role::transformer ? 128 : 64;
    return p;
}

// ---------------------------------------------------------------------------
// ScriptedBackend

ScriptedBackend::ScriptedBackend(std::map<Role, std::vector<std::string>> responses)
    : responses_(std::move(responses)) {
    for (Role r : kAllRoles) {
        cursors_[r] = 0;
    }
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open script file: " + path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed script file " + path.string() + ": " + e.what());
    }
    if (!j.is_object()) {
        throw ConfigError("script file must be a JSON object keyed by role");
    }
    std::map<Role, std::vector<std::string>> responses;
    for (const auto& [key, value] : j.items()) {
        Role role = role_from_name(key);
        if (!value.is_array()) {
            throw ConfigError("script entry for role '" + key + "' must be an array");
        }
        std::vector<std::string> seq;
        for (const auto& item : value) {
            if (!item.is_string()) {
                throw ConfigError("script responses must be strings (role '" + key + "')");
            }
            seq.push_back(item.get<std::string>());
        }
        responses[role] = std::move(seq);
    }
    return std::make_shared<ScriptedBackend>(std::move(responses));
}

TextBackend::Completion ScriptedBackend::generate(Role role, const std::string&,
                                                  const GenerationParams&) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = responses_.find(role);
    const std::size_t cursor = cursors_[role];
    if (it == responses_.end() || cursor >= it->second.size()) {
        throw BackendError(BackendError::Kind::script_exhausted,
                           std::string("script exhausted for role ") + role_name(role) +
                               " at call " + std::to_string(cursor + 1));
    }
    cursors_[role] = cursor + 1;
    return {it->second[cursor], 1};
}

nlohmann::json ScriptedBackend::cursor_state() const {
    std::lock_guard<std::mutex> lock(mutex_);
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [role, cursor] : cursors_) {
        j[role_name(role)] = cursor;
    }
    return j;
}

void ScriptedBackend::restore_cursor_state(const nlohmann::json& state) {
    if (!state.is_object()) {
        return;
    }
    std::lock_guard<std::mutex> lock(mutex_);
    for (const auto& [key, value] : state.items()) {
        cursors_[role_from_name(key)] = value.get<std::size_t>();
    }
}

// ---------------------------------------------------------------------------
// HttpBackend

HttpBackend::HttpBackend(BackendDescriptor descriptor) : desc_(std::move(descriptor)) {
    if (desc_.endpoint.empty()) {
        throw ConfigError("http backend requires an endpoint");
    }
    if (desc_.model_id.empty()) {
        throw ConfigError("http backend requires a model_id");
    }
    const auto scheme_end = desc_.endpoint.find("://");
    const std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = desc_.endpoint.find('/', host_start);
    if (path_start == std::string::npos) {
        base_url_ = desc_.endpoint;
        path_ = "/v1/chat/completions";
    } else {
        base_url_ = desc_.endpoint.substr(0, path_start);
        path_ = desc_.endpoint.substr(path_start);
    }
}

TextBackend::Completion HttpBackend::generate(Role, const std::string& prompt,
                                              const GenerationParams& params) {
    nlohmann::json messages = nlohmann::json::array();
    if (!desc_.system_prompt.empty()) {
        messages.push_back({{"role", "system"}, {"content", desc_.system_prompt}});
    }
    messages.push_back({{"role", "user"}, {"content", prompt}});
    nlohmann::json body{{"model", desc_.model_id},
                        {"messages", messages},
                        {"temperature", params.temperature},
                        {"max_tokens", params.max_new_tokens}};
    if (params.seed) {
        body["seed"] = *params.seed;
    }
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (!desc_.auth_env.empty()) {
        if (const char* token = std::getenv(desc_.auth_env.c_str()); token && *token) {
            headers.emplace("Authorization", std::string("Bearer ") + token);
        }
    }

    const int total_attempts = desc_.max_retries + 1;
    std::string last_error;
    for (int attempt = 1; attempt <= total_attempts; ++attempt) {
        httplib::Client client(base_url_);
        const auto timeout = std::chrono::milliseconds(desc_.timeout_ms);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);

        auto res = client.Post(path_, headers, payload, "application/json");
        if (!res) {
            last_error = "transport failure (" + httplib::to_string(res.error()) + ")";
            if (attempt < total_attempts) {
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(desc_.backoff_initial_ms << (attempt - 1)));
                continue;
            }
            throw BackendError(BackendError::Kind::transport,
                               last_error + " after " + std::to_string(attempt) + " attempts",
                               attempt);
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            if (attempt < total_attempts) {
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(desc_.backoff_initial_ms << (attempt - 1)));
                continue;
            }
            throw BackendError(BackendError::Kind::http_status, last_error, attempt, res->status);
        }
        if (res->status != 200) {
            throw BackendError(BackendError::Kind::http_status,
                               "HTTP " + std::to_string(res->status) + ": " + res->body, attempt,
                               res->status);
        }
        nlohmann::json reply;
        try {
            reply = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(BackendError::Kind::http_status,
                               std::string("unparseable completion body: ") + e.what(), attempt,
                               res->status);
        }
        std::string text;
        if (reply.contains("choices") && reply["choices"].is_array() &&
            !reply["choices"].empty()) {
            const auto& choice = reply["choices"][0];
            if (choice.contains("message") && choice["message"].contains("content") &&
                choice["message"]["content"].is_string()) {
                text = choice["message"]["content"].get<std::string>();
            } else if (choice.contains("text") && choice["text"].is_string()) {
                text = choice["text"].get<std::string>();
            }
        } else {
            throw BackendError(BackendError::Kind::http_status,
                               "completion body lacks choices", attempt, res->status);
        }
        return {std::move(text), attempt};
    }
    throw BackendError(BackendError::Kind::transport, last_error, total_attempts);
}

std::shared_ptr<TextBackend> make_backend(const BackendDescriptor& descriptor) {
    if (descriptor.kind == BackendDescriptor::Kind::scripted) {
        if (descriptor.script_path.empty()) {
            throw ConfigError("scripted backend requires a script_path");
        }
        return ScriptedBackend::load(descriptor.script_path);
    }
    return std::make_shared<HttpBackend>(descriptor);
}

// ---------------------------------------------------------------------------
// LlmClient

void LlmClient::bind(Role role, Binding binding) {
    if (!binding.backend) {
        throw ConfigError(std::string("null backend for role ") + role_name(role));
    }
    bindings_[role] = std::move(binding);
}

bool LlmClient::bound(Role role) const { return bindings_.count(role) != 0; }

std::string LlmClient::generate(Role role, const std::string& prompt) {
    auto it = bindings_.find(role);
    if (it == bindings_.end()) {
        throw ConfigError(std::string("role not bound to a backend: ") + role_name(role));
    }
    return generate(role, prompt, it->second.params);
}

std::string LlmClient::generate(Role role, const std::string& prompt,
                                const GenerationParams& params) {
    auto it = bindings_.find(role);
    if (it == bindings_.end()) {
        throw ConfigError(std::string("role not bound to a backend: ") + role_name(role));
    }

    CallRecord record;
    record.role = role;
    record.prompt = prompt;
    record.params = params;

    const auto start = std::chrono::steady_clock::now();
    auto finish = [&] {
        record.latency_ms = std::chrono::duration<double, std::milli>(
                                std::chrono::steady_clock::now() - start)
                                .count();
    };

    try {
        TextBackend::Completion c = it->second.backend->generate(role, prompt, params);
        record.response = c.text;
        record.attempts = c.attempts;
        finish();
        if (c.text.empty()) {
            record.ok = false;
            record.error = "empty completion";
            if (sink_) sink_(record);
            throw BackendError(BackendError::Kind::empty_completion,
                               std::string("empty completion from role ") + role_name(role),
                               c.attempts);
        }
        if (sink_) sink_(record);
        return record.response;
    } catch (const BackendError& e) {
        if (e.kind() == BackendError::Kind::empty_completion) {
            throw; // already recorded above
        }
        record.ok = false;
        record.error = e.what();
        record.attempts = e.attempts();
        finish();
        if (sink_) sink_(record);
        throw;
    }
}

nlohmann::json LlmClient::cursor_state() const {
    nlohmann::json out = nlohmann::json::array();
    std::vector<const TextBackend*> seen;
    for (const auto& [role, binding] : bindings_) {
        const TextBackend* b = binding.backend.get();
        if (std::find(seen.begin(), seen.end(), b) != seen.end()) {
            continue;
        }
        seen.push_back(b);
        nlohmann::json entry;
        entry["roles"] = nlohmann::json::array();
        for (const auto& [r2, b2] : bindings_) {
            if (b2.backend.get() == b) {
                entry["roles"].push_back(role_name(r2));
            }
        }
        entry["cursors"] = b->cursor_state();
        out.push_back(std::move(entry));
    }
    return out;
}

void LlmClient::restore_cursor_state(const nlohmann::json& state) {
    if (!state.is_array()) {
        return;
    }
    for (const auto& entry : state) {
        if (!entry.contains("roles") || !entry["roles"].is_array() || entry["roles"].empty()) {
            continue;
        }
        Role role = role_from_name(entry["roles"][0].get<std::string>());
        auto it = bindings_.find(role);
        if (it != bindings_.end()) {
            it->second.backend->restore_cursor_state(entry["cursors"]);
        }
    }
}

// ---------------------------------------------------------------------------
// serialization

void to_json(nlohmann::json& j, const GenerationParams& p) {
    j = nlohmann::json{{"temperature", p.temperature}, {"max_new_tokens", p.max_new_tokens}};
    if (p.seed) {
        j["seed"] = *p.seed;
    }
}

void from_json(const nlohmann::json& j, GenerationParams& p) {
    p = GenerationParams{};
    if (j.contains("temperature")) j.at("temperature").get_to(p.temperature);
    if (j.contains("max_new_tokens")) j.at("max_new_tokens").get_to(p.max_new_tokens);
    if (j.contains("seed")) p.seed = j.at("seed").get<std::uint64_t>();
    if (p.temperature < 0) throw ConfigError("temperature must be >= 0");
    if (p.max_new_tokens <= 0) throw ConfigError("max_new_tokens must be positive");
}

void to_json(nlohmann::json& j, const CallRecord& r) {
    j = nlohmann::json{{"role", role_name(r.role)}, {"prompt", r.prompt},
                       {"response", r.response},   {"latency_ms", r.latency_ms},
                       {"attempts", r.attempts},   {"ok", r.ok}};
    nlohmann::json params;
    to_json(params, r.params);
    j["params"] = std::move(params);
    if (!r.error.empty()) {
        j["error"] = r.error;
    }
}

} // namespace ragopt
