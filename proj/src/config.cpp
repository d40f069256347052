#include "ragopt/config.hpp"

#include <fstream>

#include "ragopt/errors.hpp"
#include "ragopt/hash.hpp"

namespace ragopt {

namespace {

BackendDescriptor descriptor_from_json(const nlohmann::json& j) {
    BackendDescriptor d;
    const std::string kind = j.value("kind", "scripted");
    if (kind == "http") {
        d.kind = BackendDescriptor::Kind::http;
    } else if (kind == "scripted") {
        d.kind = BackendDescriptor::Kind::scripted;
    } else {
        throw ConfigError("backend kind must be 'http' or 'scripted', got '" + kind + "'");
    }
    d.endpoint = j.value("endpoint", "");
    d.model_id = j.value("model_id", "");
    d.auth_env = j.value("auth_env", "");
    d.system_prompt = j.value("system_prompt", "");
    d.timeout_ms = j.value("timeout_ms", d.timeout_ms);
    d.max_retries = j.value("max_retries", d.max_retries);
    d.backoff_initial_ms = j.value("backoff_initial_ms", d.backoff_initial_ms);
    d.script_path = j.value("script_path", "");

    if (d.kind == BackendDescriptor::Kind::http && (d.endpoint.empty() || d.model_id.empty())) {
        throw ConfigError("http backend requires endpoint and model_id");
    }
    if (d.kind == BackendDescriptor::Kind::scripted && d.script_path.empty()) {
        throw ConfigError("scripted backend requires script_path");
    }
    return d;
}

nlohmann::json descriptor_to_json(const BackendDescriptor& d) {
    nlohmann::json j{{"kind", d.kind == BackendDescriptor::Kind::http ? "http" : "scripted"},
                     {"timeout_ms", d.timeout_ms},
                     {"max_retries", d.max_retries},
                     {"backoff_initial_ms", d.backoff_initial_ms}};
    if (!d.endpoint.empty()) j["endpoint"] = d.endpoint;
    if (!d.model_id.empty()) j["model_id"] = d.model_id;
    if (!d.auth_env.empty()) j["auth_env"] = d.auth_env;
    if (!d.system_prompt.empty()) j["system_prompt"] = d.system_prompt;
    if (!d.script_path.empty()) j["script_path"] = d.script_path;
    return j;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_absolute()) {
        return path;
    }
    return base / path;
}

} // namespace

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file: " + path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed config file " + path.string() + ": " + e.what());
    }

    const std::filesystem::path base =
        path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");

    RunConfig cfg;
    if (!j.contains("roles") || !j["roles"].is_object()) {
        throw ConfigError("config requires a 'roles' object");
    }
    for (const auto& [name, setup] : j["roles"].items()) {
        const Role role = role_from_name(name);
        RunConfig::RoleSetup rs;
        if (!setup.contains("backend")) {
            throw ConfigError("role '" + name + "' requires a backend descriptor");
        }
        rs.backend = descriptor_from_json(setup["backend"]);
        if (!rs.backend.script_path.empty()) {
            rs.backend.script_path = resolve(base, rs.backend.script_path).string();
        }
        rs.params = default_params(role);
        if (setup.contains("params")) {
            GenerationParams p;
            from_json(setup["params"], p);
            if (!setup["params"].contains("max_new_tokens")) {
                p.max_new_tokens = default_params(role).max_new_tokens;
            }
            rs.params = p;
        }
        cfg.roles[role] = std::move(rs);
    }
    for (Role role : {Role::optimizer, Role::transformer, Role::generator}) {
        if (cfg.roles.count(role) == 0) {
            throw ConfigError(std::string("config must bind all three roles; missing ") +
                              role_name(role));
        }
    }

    if (j.contains("optimization")) {
        from_json(j["optimization"], cfg.optimizer);
    }
    if (j.contains("templates")) {
        const auto& t = j["templates"];
        cfg.meta_instruction = t.value("meta_instruction", cfg.meta_instruction);
        cfg.templates.meta_entry_format =
            t.value("meta_entry_format", cfg.templates.meta_entry_format);
        cfg.templates.transformation_layout =
            t.value("transformation_layout", cfg.templates.transformation_layout);
        cfg.templates.task_layout = t.value("task_layout", cfg.templates.task_layout);
        cfg.templates.query_layout = t.value("query_layout", cfg.templates.query_layout);
    }
    if (j.contains("data")) {
        const auto& d = j["data"];
        if (d.contains("train")) {
            cfg.train_path = resolve(base, d["train"].get<std::string>());
            if (!std::filesystem::exists(cfg.train_path)) {
                throw ConfigError("train dataset not found: " + cfg.train_path.string());
            }
        }
        if (d.contains("test")) {
            cfg.test_path = resolve(base, d["test"].get<std::string>());
            if (!std::filesystem::exists(cfg.test_path)) {
                throw ConfigError("test dataset not found: " + cfg.test_path.string());
            }
        }
    }
    if (j.contains("output_dir")) {
        cfg.output_dir = resolve(base, j["output_dir"].get<std::string>());
    } else {
        cfg.output_dir = base / "runs" / "default";
    }
    cfg.deterministic = j.value("deterministic", false);
    cfg.concurrency = j.value("concurrency", std::size_t{1});
    if (cfg.concurrency == 0) {
        throw ConfigError("concurrency must be positive");
    }
    cfg.verbose_calls = j.value("verbose_calls", false);
    cfg.scoring.strip_leading_whitespace =
        j.value("strip_leading_whitespace", cfg.scoring.strip_leading_whitespace);

    for (const auto& [role, setup] : cfg.roles) {
        if (setup.backend.kind == BackendDescriptor::Kind::scripted &&
            !std::filesystem::exists(setup.backend.script_path)) {
            throw ConfigError("script file not found: " + setup.backend.script_path);
        }
    }
    return cfg;
}

nlohmann::json run_config_to_json(const RunConfig& config) {
    nlohmann::json roles = nlohmann::json::object();
    for (const auto& [role, setup] : config.roles) {
        nlohmann::json params;
        to_json(params, setup.params);
        roles[role_name(role)] = nlohmann::json{{"backend", descriptor_to_json(setup.backend)},
                                                {"params", std::move(params)}};
    }
    nlohmann::json optimizer;
    to_json(optimizer, config.optimizer);
    return nlohmann::json{
        {"roles", std::move(roles)},
        {"optimization", std::move(optimizer)},
        {"templates",
         {{"meta_instruction", config.meta_instruction},
          {"meta_entry_format", config.templates.meta_entry_format},
          {"transformation_layout", config.templates.transformation_layout},
          {"task_layout", config.templates.task_layout},
          {"query_layout", config.templates.query_layout}}},
        {"data",
         {{"train", config.train_path.string()}, {"test", config.test_path.string()}}},
        {"output_dir", config.output_dir.string()},
        {"deterministic", config.deterministic},
        {"concurrency", config.concurrency},
        {"verbose_calls", config.verbose_calls},
        {"strip_leading_whitespace", config.scoring.strip_leading_whitespace}};
}

std::string run_config_hash(const RunConfig& config) {
    return fnv1a64_hex(run_config_to_json(config).dump());
}

LlmClient build_llm_client(const RunConfig& config) {
    LlmClient client;
    std::map<std::string, std::shared_ptr<TextBackend>> scripted_by_path;
    for (const auto& [role, setup] : config.roles) {
        std::shared_ptr<TextBackend> backend;
        if (setup.backend.kind == BackendDescriptor::Kind::scripted) {
            auto it = scripted_by_path.find(setup.backend.script_path);
            if (it != scripted_by_path.end()) {
                backend = it->second;
            } else {
                backend = make_backend(setup.backend);
                scripted_by_path[setup.backend.script_path] = backend;
            }
        } else {
            backend = make_backend(setup.backend);
        }
        client.bind(role, LlmClient::Binding{std::move(backend), setup.params});
    }
    return client;
}

} // namespace ragopt
