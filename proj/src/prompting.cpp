#include "ragopt/prompting.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <sstream>

#include "ragopt/errors.hpp"

namespace ragopt {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string strip_matched_quotes(std::string s) {
    while (s.size() >= 2) {
        const char front = s.front();
        const char back = s.back();
        if ((front == '"' && back == '"') || (front == '\'' && back == '\'') ||
            (front == '`' && back == '`')) {
            s = trim(s.substr(1, s.size() - 2));
        } else {
            break;
        }
    }
    return s;
}

bool istarts_with(const std::string& s, const std::string& prefix) {
    if (s.size() < prefix.size()) {
        return false;
    }
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(s[i])) !=
            std::tolower(static_cast<unsigned char>(prefix[i]))) {
            return false;
        }
    }
    return true;
}

} // namespace

const std::string& default_meta_instruction() {
    static const std::string text =
        "I have some prompts along with their corresponding scores. The prompts are "
        "arranged in ascending order based on their scores, where higher scores indicate "
        "better quality. Together with relevant information extracted from a database, "
        "these prompts are given as input to a large language model in order to optimize "
        "the provided relevant information. Several techniques may help the optimization, "
        "such as re-ranking paragraphs, cleaning, filtering and summarization. Write your "
        "new prompt taking into account the previous ones and aiming to achieve a higher "
        "score.";
    return text;
}

std::string format_score(double score) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", score);
    return buf;
}

std::string render_template(const std::string& templ,
                            const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(templ.size());
    std::size_t pos = 0;
    while (pos < templ.size()) {
        const std::size_t open = templ.find('{', pos);
        if (open == std::string::npos) {
            out.append(templ, pos, std::string::npos);
            break;
        }
        out.append(templ, pos, open - pos);
        const std::size_t close = templ.find('}', open);
        if (close == std::string::npos) {
            throw ConfigError("unterminated placeholder in template: " + templ.substr(open));
        }
        const std::string name = templ.substr(open + 1, close - open - 1);
        auto it = values.find(name);
        if (it == values.end()) {
            throw ConfigError("unknown placeholder '{" + name + "}' in template");
        }
        out += it->second;
        pos = close + 1;
    }
    return out;
}

std::string render_meta_prompt(const MetaPromptState& state, const PromptTemplates& templates) {
    std::vector<std::size_t> order(state.instructions.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    // ascending by score; stable keeps insertion order on ties (oldest first)
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return state.instructions[a].score < state.instructions[b].score;
    });

    std::string out = state.meta_instruction;
    for (std::size_t idx : order) {
        const auto& entry = state.instructions[idx];
        out += "\n\n";
        out += render_template(templates.meta_entry_format,
                               {{"text", entry.text}, {"score", format_score(entry.score)}});
    }
    return out;
}

std::string join_paragraphs(const std::vector<std::string>& paragraphs) {
    std::string out;
    for (std::size_t i = 0; i < paragraphs.size(); ++i) {
        if (i > 0) {
            out += "\n\n";
        }
        out += paragraphs[i];
    }
    return out;
}

std::string render_transformation_prompt(const std::vector<std::string>& contents,
                                         const std::string& instruction,
                                         const PromptTemplates& templates) {
    if (trim(instruction).empty()) {
        throw DataError("transformation prompt requires a non-empty instruction");
    }
    if (contents.empty()) {
        return instruction;
    }
    return render_template(templates.transformation_layout,
                           {{"contents", join_paragraphs(contents)},
                            {"instruction", instruction}});
}

std::string render_task_prompt(const std::string& query, const std::string& contents_text,
                               const PromptTemplates& templates) {
    if (trim(query).empty()) {
        throw DataError("task prompt requires a non-empty query");
    }
    if (contents_text.empty()) {
        return render_template(templates.query_layout, {{"query", query}});
    }
    return render_template(templates.task_layout,
                           {{"contents", contents_text}, {"query", query}});
}

std::string parse_instruction(const std::string& generated) {
    std::string s = strip_matched_quotes(trim(generated));
    if (istarts_with(s, "prompt:")) {
        s = trim(s.substr(7));
    }

    // first non-empty line group, terminated by a blank line or a score label
    std::vector<std::string> group;
    std::istringstream lines(s);
    std::string line;
    while (std::getline(lines, line)) {
        const std::string t = trim(line);
        if (t.empty() || istarts_with(t, "score:")) {
            if (!group.empty()) {
                break;
            }
            continue;
        }
        group.push_back(t);
    }

    std::string joined;
    for (std::size_t i = 0; i < group.size(); ++i) {
        if (i > 0) {
            joined += ' ';
        }
        joined += group[i];
    }
    joined = strip_matched_quotes(trim(joined));
    if (joined.empty()) {
        throw UnusableInstructionError("generated instruction is empty after cleanup");
    }
    return joined;
}

MetaPromptState update_top_k(MetaPromptState state, const ScoredInstruction& candidate) {
    for (const auto& entry : state.instructions) {
        if (entry.text == candidate.text) {
            return state;
        }
    }
    if (state.instructions.size() < state.capacity) {
        state.instructions.push_back(candidate);
        return state;
    }
    if (state.instructions.empty()) {
        return state;
    }
    auto worst = std::min_element(
        state.instructions.begin(), state.instructions.end(),
        [](const ScoredInstruction& a, const ScoredInstruction& b) { return a.score < b.score; });
    if (candidate.score > worst->score) {
        state.instructions.erase(worst);
        state.instructions.push_back(candidate);
    }
    return state;
}

void to_json(nlohmann::json& j, const ScoredInstruction& s) {
    j = nlohmann::json{{"text", s.text}, {"score", s.score}, {"step_found", s.step_found}};
}

void from_json(const nlohmann::json& j, ScoredInstruction& s) {
    j.at("text").get_to(s.text);
    j.at("score").get_to(s.score);
    j.at("step_found").get_to(s.step_found);
}

void to_json(nlohmann::json& j, const MetaPromptState& s) {
    j = nlohmann::json{{"meta_instruction", s.meta_instruction},
                       {"instructions", s.instructions},
                       {"capacity", s.capacity}};
}

void from_json(const nlohmann::json& j, MetaPromptState& s) {
    j.at("meta_instruction").get_to(s.meta_instruction);
    j.at("instructions").get_to(s.instructions);
    j.at("capacity").get_to(s.capacity);
}

} // namespace ragopt
