#include <regex>

#include <json.hpp>

#include "vrbench/harness.hpp"

namespace vrbench::harness {

using question::Family;
using question::Question;

namespace {

std::string choice_block(const std::vector<question::Choice>& choices) {
    std::string out;
    for (const auto& c : choices) out += c.label + ". " + c.text + "\n";
    return out;
}

std::string question_block(const Question& q) {
    return q.prompt + "\n\nChoices:\n" + choice_block(q.choices);
}

std::string label_list(const Question& q) {
    std::string out;
    auto labels = q.labels();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i) out += i + 1 == labels.size() ? " or " : ", ";
        out += labels[i];
    }
    return out;
}

const std::vector<Demo>& demos_for(const Question& q, const IclDemoSet* demos) {
    if (!demos) throw MissingDemos("in-context mode needs a demo file");
    auto it = demos->demos.find(q.family);
    if (it == demos->demos.end() || it->second.empty()) {
        throw MissingDemos("no demos for family " + std::string(question::family_name(q.family)));
    }
    auto hash = fnv1a(q.prompt);
    for (const auto& d : it->second) {
        if ((!d.question_id.empty() && d.question_id == q.id) || fnv1a(d.prompt) == hash) {
            throw MissingDemos("demo " + d.question_id + " leaks question " + q.id);
        }
    }
    return it->second;
}

std::string demo_block(const std::vector<Demo>& demos) {
    std::string out = "Examples:\n\n";
    for (std::size_t i = 0; i < demos.size(); ++i) {
        const auto& d = demos[i];
        out += "Question " + std::to_string(i + 1) + ":\n" + d.prompt + "\n\nChoices:\n" +
               choice_block(d.choices) + "Answer: " + d.answer + "\nExplanation: " + d.explanation +
               "\n\n";
    }
    return out;
}

}  // namespace

std::string_view mode_name(Mode m) { return m == Mode::Zero ? "zero" : "icl"; }

Mode parse_mode(std::string_view text) {
    auto t = to_lower(text);
    if (t == "zero" || t == "zero-shot" || t == "zeroshot") return Mode::Zero;
    if (t == "icl" || t == "in-context") return Mode::ICL;
    throw ConfigError("unknown mode: " + std::string(text));
}

void ModelConfig::validate() const {
    if (name.empty()) throw ConfigError("model entry without a name");
    if (endpoint_url.empty()) throw ConfigError("model " + name + " has no endpoint_url");
    if (temperature < 0.0 || temperature > 2.0) {
        throw ConfigError("model " + name + ": temperature must lie in [0, 2]");
    }
    if (max_tokens == 0) throw ConfigError("model " + name + ": max_tokens must be positive");
    if (max_parallel == 0) throw ConfigError("model " + name + ": max_parallel must be at least 1");
    if (request_timeout <= 0.0) throw ConfigError("model " + name + ": request_timeout must be positive");
    if (retry.backoff_seconds < 0.0) throw ConfigError("model " + name + ": negative backoff");
}

ModelConfig model_config_from_json(std::string_view text) {
    try {
        auto j = nlohmann::json::parse(text);
        ModelConfig c;
        c.name = j.at("name").get<std::string>();
        c.endpoint_url = j.at("endpoint_url").get<std::string>();
        c.model = j.value("model", c.name);
        c.auth_env = j.value("auth_env", "");
        c.temperature = j.value("temperature", 0.0);
        c.max_tokens = j.value("max_tokens", 50U);
        c.request_timeout = j.value("request_timeout", 60.0);
        c.max_parallel = j.value("max_parallel", 1U);
        if (j.contains("retry")) {
            c.retry.max_retries = j["retry"].value("max_retries", 3U);
            c.retry.backoff_seconds = j["retry"].value("backoff_seconds", 1.0);
        }
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError(std::string("model config: ") + ex.what());
    }
}

IclDemoSet IclDemoSet::from_json(std::string_view text) {
    try {
        auto j = nlohmann::json::parse(text);
        if (!j.is_object()) throw ConfigError("demo file must be a JSON object keyed by family");
        IclDemoSet set;
        for (const auto& [family, list] : j.items()) {
            auto& out = set.demos[question::parse_family(family)];
            for (const auto& d : list) {
                Demo demo;
                demo.question_id = d.value("question_id", "");
                demo.prompt = d.at("prompt").get<std::string>();
                for (const auto& c : d.at("choices")) {
                    demo.choices.push_back({c.at("label").get<std::string>(),
                                            c.at("text").get<std::string>(), "", {}});
                }
                demo.answer = d.at("answer").get<std::string>();
                demo.explanation = d.at("explanation").get<std::string>();
                out.push_back(std::move(demo));
            }
        }
        return set;
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError(std::string("demo file: ") + ex.what());
    }
}

Prompt build_prompt(const Question& q, Mode mode, const IclDemoSet* demos) {
    Prompt p;
    p.system = std::string(kSystemPersona);
    if (mode == Mode::ICL) p.user = demo_block(demos_for(q, demos)) + "Input question:\n";
    p.user += question_block(q);
    p.user += "\nAnswer with the label of one choice (" + label_list(q) + ") only.";
    return p;
}

Prompt build_pair_prompt(const Question& first, const Question& second, Mode mode,
                         const IclDemoSet* demos) {
    Prompt p;
    p.system = std::string(kSystemPersona);
    if (mode == Mode::ICL) {
        p.user = demo_block(demos_for(first, demos));
        demos_for(second, demos);
        p.user += "Input questions:\n";
    }
    p.user += "Question 1:\n" + question_block(first) + "\nQuestion 2:\n" + question_block(second);
    p.user += "\nAnswer both questions in exactly this form:\nAnswer 1: <label>\nAnswer 2: <label>";
    return p;
}

std::string chat_request_body(const ModelConfig& cfg, const Prompt& prompt) {
    nlohmann::json body{
        {"model", cfg.model.empty() ? cfg.name : cfg.model},
        {"messages",
         nlohmann::json::array({{{"role", "system"}, {"content", prompt.system}},
                                {{"role", "user"}, {"content", prompt.user}}})},
        {"temperature", cfg.temperature},
        {"max_tokens", cfg.max_tokens},
    };
    return body.dump();
}

namespace {

bool is_word(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

bool has_label(const std::vector<std::string>& labels, char c) {
    std::string l(1, static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    return std::find(labels.begin(), labels.end(), l) != labels.end();
}

std::string upper(char c) {
    return std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
}

bool says_unknown(std::string_view text) {
    static const std::regex unknown(
        R"((don'?t|do not|doesn'?t|cannot|can'?t|unable to)\s+(know|tell|determine|say)|not sure|\bunknown\b|\bunsure\b)",
        std::regex::icase);
    std::string s(text);
    return std::regex_search(s, unknown);
}

// Uppercase single letters standing alone, like "B" or "(C)".
std::vector<char> standalone_letters(std::string_view text) {
    std::vector<char> out;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c < 'A' || c > 'Z') continue;
        bool left = i == 0 || !is_word(text[i - 1]);
        bool right = i + 1 == text.size() || !is_word(text[i + 1]);
        // "A'" as in contractions is not a label
        if (right && i + 1 < text.size() && text[i + 1] == '\'') right = false;
        if (left && right) out.push_back(c);
    }
    return out;
}

}  // namespace

std::string extract_choice(std::string_view raw, const std::vector<std::string>& labels,
                           std::string_view unknown_label) {
    std::string text = trim(raw);
    // Bare label, possibly decorated: "B", "(b)", "**C.**"
    {
        std::string core;
        for (char c : text) {
            if (!std::ispunct(static_cast<unsigned char>(c)) && !std::isspace(static_cast<unsigned char>(c))) {
                core.push_back(c);
            }
        }
        if (core.size() == 1 && has_label(labels, core[0])) return upper(core[0]);
    }
    static const std::regex answer(R"(answer(?:\s+is)?\s*[:\-]?\s*[*_`]*\s*\(?([A-Za-z])(?![A-Za-z0-9']))",
                                   std::regex::icase);
    std::smatch m;
    if (std::regex_search(text, m, answer) && has_label(labels, m[1].str()[0])) {
        return upper(m[1].str()[0]);
    }
    static const std::regex leading(R"(^[*_`\s]*\(?([A-Za-z])[).:](\s|$))");
    if (std::regex_search(text, m, leading) && has_label(labels, m[1].str()[0])) {
        return upper(m[1].str()[0]);
    }
    if (says_unknown(text)) {
        return unknown_label.empty() ? std::string(kUnknownAnswer) : std::string(unknown_label);
    }
    for (char c : standalone_letters(text)) {
        if (has_label(labels, c)) return upper(c);
    }
    return std::string(kParseFail);
}

std::vector<std::string> extract_all_choices(std::string_view raw,
                                             const std::vector<std::string>& labels) {
    std::vector<std::string> out;
    auto add = [&](char c) {
        if (!has_label(labels, c)) return;
        auto l = upper(c);
        if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
    };
    auto first = extract_choice(raw, labels);
    if (first.size() == 1) add(first[0]);
    for (char c : standalone_letters(raw)) add(c);
    std::sort(out.begin(), out.end());
    return out;
}

std::pair<std::string, std::string> extract_pair(std::string_view raw,
                                                 const std::vector<std::string>& first_labels,
                                                 std::string_view first_unknown,
                                                 const std::vector<std::string>& second_labels,
                                                 std::string_view second_unknown) {
    static const std::regex marker(R"((?:^|[\s,;])(?:answer\s*)?([12])\s*[:.)\-])", std::regex::icase);
    std::string text(raw);
    struct Slot {
        int index;
        std::size_t begin;
        std::size_t body;
    };
    std::vector<Slot> slots;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), marker); it != std::sregex_iterator();
         ++it) {
        slots.push_back({(*it)[1].str()[0] - '0', static_cast<std::size_t>(it->position()),
                         static_cast<std::size_t>(it->position() + it->length())});
    }
    std::string answers[2] = {std::string(kParseFail), std::string(kParseFail)};
    bool seen[2] = {false, false};
    for (std::size_t i = 0; i < slots.size(); ++i) {
        int k = slots[i].index - 1;
        if (seen[k]) continue;
        seen[k] = true;
        auto end = i + 1 < slots.size() ? slots[i + 1].begin : text.size();
        auto segment = std::string_view(text).substr(slots[i].body, end - slots[i].body);
        answers[k] = k == 0 ? extract_choice(segment, first_labels, first_unknown)
                            : extract_choice(segment, second_labels, second_unknown);
    }
    return {answers[0], answers[1]};
}

}  // namespace vrbench::harness
