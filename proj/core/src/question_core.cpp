#include <algorithm>
#include <random>
#include <set>

#include <json.hpp>

#include "vrbench/question.hpp"

namespace vrbench::question {

namespace {

using nlohmann::json;

constexpr const char* kBuiltinTemplates = R"json({
  "DFL": {
    "question": "If the value of {src} is modified, how does this affect {dst}?",
    "options": {
      "Direct C.": "{src} directly impacts {dst} through data flow.",
      "Not C.": "{src} has no impact on {dst}.",
      "Indirect C.": "{src} impacts {dst} indirectly through control flow.",
      "Unknown": "I don't know."
    }
  },
  "CFL": {
    "question": "If {src} is modified, how does this affect {dst}?",
    "options": {
      "Direct C.": "{src} directly controls whether {dst} is executed.",
      "Not C.": "{src} has no impact on {dst}.",
      "Indirect C.": "{src} indirectly affects the data or arguments used by {dst}.",
      "Unknown": "I don't know."
    }
  },
  "CTF": {
    "question": "The function above is a modified version of code related to {cwe}. What does it do at runtime?",
    "options": {
      "Safe": "It does not trigger the vulnerability and preserves the original functionality.",
      "Bypass": "It does not trigger the vulnerability but fails to maintain the original functionality.",
      "Unsafe": "It triggers the vulnerability.",
      "Unknown": "I don't know."
    }
  },
  "GDV": {
    "question": "The conditions marked <MASK_N> in the function above are missing. Which fill removes the vulnerability ({cwe}) while keeping the original functionality?",
    "options": {
      "Fill": "{fills}",
      "Unknown": "I don't know."
    }
  },
  "PRD": {
    "question": "Which statement describes the runtime behavior of the function above?",
    "options": {
      "Bypass": "It skips the original functionality without triggering {cwe}.",
      "Target": "It triggers {cwe}.",
      "TargetSafe": "It does not trigger {cwe} at runtime.",
      "Others": "It triggers {other_cwe}.",
      "Unknown": "I don't know."
    }
  },
  "Base": {
    "question": "The function above is related to {cwe}. What does it do at runtime?",
    "options": {
      "Safe": "It does not trigger the vulnerability and preserves the original functionality.",
      "Bypass": "It does not trigger the vulnerability but fails to maintain the original functionality.",
      "Unsafe": "It triggers the vulnerability.",
      "Unknown": "I don't know."
    }
  }
})json";

struct CweInfo {
    int id;
    int family;
    const char* title;
};

// Class-level parent for the weaknesses common in paired test corpora.
constexpr CweInfo kCweTable[] = {
    {15, 642, "External Control of System or Configuration Setting"},
    {23, 22, "Relative Path Traversal"},
    {36, 22, "Absolute Path Traversal"},
    {78, 74, "OS Command Injection"},
    {90, 74, "LDAP Injection"},
    {114, 284, "Process Control"},
    {121, 119, "Stack-based Buffer Overflow"},
    {122, 119, "Heap-based Buffer Overflow"},
    {124, 119, "Buffer Underwrite"},
    {126, 119, "Buffer Over-read"},
    {127, 119, "Buffer Under-read"},
    {134, 74, "Use of Externally-Controlled Format String"},
    {176, 20, "Improper Handling of Unicode Encoding"},
    {190, 682, "Integer Overflow or Wraparound"},
    {191, 682, "Integer Underflow"},
    {194, 704, "Unexpected Sign Extension"},
    {195, 704, "Signed to Unsigned Conversion Error"},
    {196, 704, "Unsigned to Signed Conversion Error"},
    {197, 704, "Numeric Truncation Error"},
    {226, 664, "Sensitive Information in Resource Not Removed Before Reuse"},
    {242, 710, "Use of Inherently Dangerous Function"},
    {252, 703, "Unchecked Return Value"},
    {253, 703, "Incorrect Check of Function Return Value"},
    {256, 693, "Plaintext Storage of a Password"},
    {259, 693, "Use of Hard-coded Password"},
    {272, 284, "Least Privilege Violation"},
    {273, 284, "Improper Check for Dropped Privileges"},
    {319, 693, "Cleartext Transmission of Sensitive Information"},
    {321, 693, "Use of Hard-coded Cryptographic Key"},
    {327, 693, "Use of a Broken or Risky Cryptographic Algorithm"},
    {328, 693, "Use of Weak Hash"},
    {338, 693, "Use of Cryptographically Weak PRNG"},
    {369, 682, "Divide By Zero"},
    {390, 703, "Detection of Error Condition Without Action"},
    {391, 703, "Unchecked Error Condition"},
    {398, 710, "Indicator of Poor Code Quality"},
    {400, 664, "Uncontrolled Resource Consumption"},
    {401, 664, "Missing Release of Memory after Effective Lifetime"},
    {404, 664, "Improper Resource Shutdown or Release"},
    {415, 664, "Double Free"},
    {416, 664, "Use After Free"},
    {426, 284, "Untrusted Search Path"},
    {427, 284, "Uncontrolled Search Path Element"},
    {457, 664, "Use of Uninitialized Variable"},
    {459, 664, "Incomplete Cleanup"},
    {464, 707, "Addition of Data Structure Sentinel"},
    {467, 682, "Use of sizeof() on a Pointer Type"},
    {468, 682, "Incorrect Pointer Scaling"},
    {469, 682, "Use of Pointer Subtraction to Determine Size"},
    {476, 703, "NULL Pointer Dereference"},
    {478, 710, "Missing Default Case in Multiple Condition Expression"},
    {480, 710, "Use of Incorrect Operator"},
    {481, 710, "Assigning instead of Comparing"},
    {483, 710, "Incorrect Block Delimitation"},
    {484, 710, "Omitted Break Statement in Switch"},
    {506, 710, "Embedded Malicious Code"},
    {526, 664, "Exposure of Sensitive Information Through Environmental Variables"},
    {561, 710, "Dead Code"},
    {562, 664, "Return of Stack Variable Address"},
    {563, 710, "Assignment to Variable without Use"},
    {570, 710, "Expression is Always False"},
    {571, 710, "Expression is Always True"},
    {587, 664, "Assignment of a Fixed Address to a Pointer"},
    {588, 704, "Attempt to Access Child of a Non-structure Pointer"},
    {590, 664, "Free of Memory not on the Heap"},
    {605, 284, "Multiple Binds to the Same Port"},
    {606, 20, "Unchecked Input for Loop Condition"},
    {617, 691, "Reachable Assertion"},
    {620, 284, "Unverified Password Change"},
    {665, 664, "Improper Initialization"},
    {666, 664, "Operation on Resource in Wrong Phase of Lifetime"},
    {667, 664, "Improper Locking"},
    {672, 664, "Operation on a Resource after Expiration or Release"},
    {674, 691, "Uncontrolled Recursion"},
    {675, 664, "Multiple Operations on Resource in Single-Operation Context"},
    {680, 682, "Integer Overflow to Buffer Overflow"},
    {681, 704, "Incorrect Conversion between Numeric Types"},
    {685, 710, "Function Call With Incorrect Number of Arguments"},
    {688, 710, "Function Call With Incorrect Variable or Reference as Argument"},
    {690, 703, "Unchecked Return Value to NULL Pointer Dereference"},
    {758, 710, "Reliance on Undefined Behavior"},
    {761, 664, "Free of Pointer not at Start of Buffer"},
    {762, 664, "Mismatched Memory Management Routines"},
    {773, 664, "Missing Reference to Active File Descriptor or Handle"},
    {775, 664, "Missing Release of File Descriptor or Handle"},
    {780, 693, "Use of RSA Algorithm without OAEP"},
    {785, 119, "Use of Path Manipulation Function without Maximum-sized Buffer"},
    {832, 664, "Unlock of a Resource that is not Locked"},
    {835, 691, "Infinite Loop"},
    {843, 704, "Type Confusion"},
};

std::optional<int> cwe_number(std::string_view cwe_id) {
    std::size_t i = 0;
    while (i < cwe_id.size() && !std::isdigit(static_cast<unsigned char>(cwe_id[i]))) ++i;
    if (i == cwe_id.size()) return std::nullopt;
    int n = 0;
    for (; i < cwe_id.size() && std::isdigit(static_cast<unsigned char>(cwe_id[i])); ++i) {
        n = n * 10 + (cwe_id[i] - '0');
    }
    return n;
}

const CweInfo* cwe_info(std::string_view cwe_id) {
    auto n = cwe_number(cwe_id);
    if (!n) return nullptr;
    for (const auto& c : kCweTable) {
        if (c.id == *n) return &c;
    }
    return nullptr;
}

std::string cwe_label(int n) { return "CWE-" + std::to_string(n); }

FamilyTemplate template_from_json(const json& j) {
    FamilyTemplate t;
    t.question = j.at("question").get<std::string>();
    for (const auto& [k, v] : j.at("options").items()) t.options[k] = v.get<std::string>();
    return t;
}

int difficulty_rank(const std::optional<int>& d) { return d ? *d : -1; }

}  // namespace

std::string_view family_name(Family f) {
    switch (f) {
    case Family::DFL: return "DFL";
    case Family::CFL: return "CFL";
    case Family::CTF: return "CTF";
    case Family::GDV: return "GDV";
    case Family::PRD: return "PRD";
    case Family::Base: return "Base";
    }
    return "?";
}

Family parse_family(std::string_view text) {
    for (auto f : kAllFamilies) {
        if (to_lower(family_name(f)) == to_lower(text)) return f;
    }
    throw ConfigError("unknown question family: " + std::string(text));
}

std::string Question::unknown_label() const {
    for (const auto& c : choices) {
        if (c.category == category::kUnknown) return c.label;
    }
    return {};
}

std::vector<std::string> Question::labels() const {
    std::vector<std::string> out;
    for (const auto& c : choices) out.push_back(c.label);
    return out;
}

const Choice* Question::choice(std::string_view label) const {
    for (const auto& c : choices) {
        if (c.label == label) return &c;
    }
    return nullptr;
}

bool Question::is_correct(const std::vector<std::string>& given, bool strict) const {
    auto has = [&](const std::string& l) {
        return std::find(given.begin(), given.end(), l) != given.end();
    };
    if (strict) return !given.empty() && std::all_of(answer_labels.begin(), answer_labels.end(), has);
    return std::any_of(answer_labels.begin(), answer_labels.end(), has);
}

std::string difficulty_name(const std::optional<int>& difficulty) {
    return difficulty ? std::to_string(*difficulty) : "None";
}

Templates Templates::builtin() {
    static const Templates cached = [] {
        Templates t;
        auto j = json::parse(kBuiltinTemplates);
        for (const auto& [k, v] : j.items()) t.families[parse_family(k)] = template_from_json(v);
        return t;
    }();
    return cached;
}

Templates Templates::from_json(std::string_view text) {
    Templates t = builtin();
    try {
        auto j = json::parse(text);
        if (!j.is_object()) throw ConfigError("templates must be a JSON object");
        for (const auto& [k, v] : j.items()) {
            auto family = parse_family(k);
            auto parsed = template_from_json(v);
            auto& slot = t.families[family];
            slot.question = parsed.question;
            for (auto& [cat, text_] : parsed.options) slot.options[cat] = text_;
        }
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("templates: ") + ex.what());
    }
    return t;
}

std::string Templates::to_json() const {
    json j = json::object();
    for (const auto& [f, t] : families) {
        json opts = json::object();
        for (const auto& [k, v] : t.options) opts[k] = v;
        j[std::string(family_name(f))] = {{"question", t.question}, {"options", opts}};
    }
    return j.dump(2) + "\n";
}

const FamilyTemplate& Templates::of(Family f) const {
    auto it = families.find(f);
    if (it == families.end()) throw ConfigError("no template for " + std::string(family_name(f)));
    return it->second;
}

std::string cwe_family(std::string_view cwe_id) {
    if (const auto* c = cwe_info(cwe_id)) return cwe_label(c->family);
    auto n = cwe_number(cwe_id);
    return n ? cwe_label(*n) : std::string(cwe_id);
}

std::string cwe_title(std::string_view cwe_id) {
    const auto* c = cwe_info(cwe_id);
    return c ? c->title : "";
}

std::vector<std::string> known_cwes() {
    std::vector<std::string> out;
    for (const auto& c : kCweTable) out.push_back(cwe_label(c.id));
    return out;
}

Question shuffle_options(const Question& q, std::uint64_t seed, bool pin_unknown) {
    std::vector<std::size_t> movable;
    for (std::size_t i = 0; i < q.choices.size(); ++i) {
        if (!(pin_unknown && q.choices[i].category == category::kUnknown)) movable.push_back(i);
    }
    auto order = movable;
    std::mt19937_64 rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

    std::vector<Choice> arranged = q.choices;
    for (std::size_t k = 0; k < movable.size(); ++k) arranged[movable[k]] = q.choices[order[k]];
    Question out = q;
    std::map<std::string, std::string> relabel;
    for (std::size_t i = 0; i < arranged.size(); ++i) {
        std::string label(1, static_cast<char>('A' + i));
        relabel[arranged[i].label] = label;
        arranged[i].label = label;
    }
    out.choices = std::move(arranged);
    out.answer_labels.clear();
    for (const auto& l : q.answer_labels) out.answer_labels.push_back(relabel.at(l));
    std::sort(out.answer_labels.begin(), out.answer_labels.end());
    out.shuffle_seed = seed;
    return out;
}

QuestionSet make_question_set(std::vector<Question> questions, std::uint64_t seed) {
    QuestionSet set;
    set.seed = seed;
    std::set<std::string> ids;
    for (const auto& q : questions) {
        if (!ids.insert(q.id).second) throw ConfigError("duplicate question id " + q.id);
        auto family = std::string(family_name(q.family));
        ++set.family_counts[family];
        ++set.difficulty_counts[family][difficulty_name(q.difficulty)];
    }
    set.questions = std::move(questions);
    return set;
}

QuestionSet balance_distribution(const std::vector<Question>& questions, const Policy& policy) {
    // family -> base -> question indices
    std::map<Family, std::map<std::string, std::vector<std::size_t>>> groups;
    for (std::size_t i = 0; i < questions.size(); ++i) {
        groups[questions[i].family][questions[i].provenance.base_path].push_back(i);
    }
    std::vector<bool> keep(questions.size(), false);
    for (auto& [family, bases] : groups) {
        auto it = policy.budgets.find(family);
        std::size_t budget = it == policy.budgets.end() ? 0 : it->second;
        std::vector<std::vector<std::size_t>> queues;
        for (auto& [base, idx] : bases) {
            std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
                auto da = difficulty_rank(questions[a].difficulty);
                auto db = difficulty_rank(questions[b].difficulty);
                if (da != db) return da > db;
                return questions[a].id < questions[b].id;
            });
            if (policy.per_base_cap > 0 && idx.size() > policy.per_base_cap) {
                idx.resize(policy.per_base_cap);
            }
            queues.push_back(idx);
        }
        std::size_t taken = 0;
        for (std::size_t round = 0;; ++round) {
            bool any = false;
            for (const auto& queue : queues) {
                if (budget > 0 && taken >= budget) break;
                if (round >= queue.size()) continue;
                keep[queue[round]] = true;
                ++taken;
                any = true;
            }
            if (!any || (budget > 0 && taken >= budget)) break;
        }
    }
    std::vector<Question> kept;
    for (std::size_t i = 0; i < questions.size(); ++i) {
        if (keep[i]) kept.push_back(questions[i]);
    }
    return make_question_set(std::move(kept), policy.seed);
}

int variant_tier(variant::Structure structure, std::uint32_t injection_count) {
    int tier = structure == variant::Structure::OuterInner ? 2 : 1;
    return tier + (injection_count > 0 ? 1 : 0);
}

std::vector<std::string> code_derived_text(const Question& q) {
    std::vector<std::string> out{q.code};
    out.insert(out.end(), q.code_refs.begin(), q.code_refs.end());
    for (const auto& c : q.choices) out.insert(out.end(), c.fills.begin(), c.fills.end());
    return out;
}

std::string question_to_json(const Question& q) {
    json choices = json::array();
    for (const auto& c : q.choices) {
        json jc{{"label", c.label}, {"text", c.text}, {"category", c.category}};
        if (!c.fills.empty()) jc["fills"] = c.fills;
        choices.push_back(std::move(jc));
    }
    const auto& p = q.provenance;
    json prov{{"base_path", p.base_path},
              {"variant_ids", p.variant_ids},
              {"src_element", p.src_element ? json(*p.src_element) : json()},
              {"dst_element", p.dst_element ? json(*p.dst_element) : json()},
              {"function_name", p.function_name},
              {"cwe_id", p.cwe_id},
              {"structure", p.structure},
              {"injection_count", p.injection_count}};
    json j{{"id", q.id},
           {"family", family_name(q.family)},
           {"prompt", q.prompt},
           {"code", q.code},
           {"choices", choices},
           {"answer_labels", q.answer_labels},
           {"difficulty", q.difficulty ? json(*q.difficulty) : json()},
           {"provenance", prov},
           {"seed", q.shuffle_seed},
           {"code_refs", q.code_refs}};
    return j.dump();
}

Question question_from_json(std::string_view line) {
    try {
        auto j = json::parse(line);
        Question q;
        q.id = j.at("id").get<std::string>();
        q.family = parse_family(j.at("family").get<std::string>());
        q.prompt = j.at("prompt").get<std::string>();
        q.code = j.value("code", "");
        for (const auto& c : j.at("choices")) {
            Choice choice{c.at("label").get<std::string>(), c.at("text").get<std::string>(),
                          c.value("category", ""), {}};
            if (c.contains("fills")) choice.fills = c.at("fills").get<std::vector<std::string>>();
            q.choices.push_back(std::move(choice));
        }
        q.answer_labels = j.at("answer_labels").get<std::vector<std::string>>();
        if (!j.at("difficulty").is_null()) q.difficulty = j.at("difficulty").get<int>();
        const auto& p = j.at("provenance");
        q.provenance.base_path = p.at("base_path").get<std::string>();
        q.provenance.variant_ids = p.value("variant_ids", std::vector<std::string>{});
        if (p.contains("src_element") && !p.at("src_element").is_null()) {
            q.provenance.src_element = p.at("src_element").get<flow::ElementId>();
        }
        if (p.contains("dst_element") && !p.at("dst_element").is_null()) {
            q.provenance.dst_element = p.at("dst_element").get<flow::ElementId>();
        }
        q.provenance.function_name = p.value("function_name", "");
        q.provenance.cwe_id = p.value("cwe_id", "");
        q.provenance.structure = p.value("structure", "");
        q.provenance.injection_count = p.value("injection_count", 0U);
        q.shuffle_seed = j.value("seed", std::uint64_t{0});
        q.code_refs = j.value("code_refs", std::vector<std::string>{});
        return q;
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("question record: ") + ex.what());
    }
}

}  // namespace vrbench::question
