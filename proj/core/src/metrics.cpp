#include <charconv>
#include <cstdio>
#include <set>

#include <json.hpp>

#include "vrbench/metrics.hpp"

namespace vrbench::metrics {

using harness::EvalRecord;
using question::Family;
using question::Question;

namespace {

using Json = nlohmann::ordered_json;

constexpr Family kScoredFamilies[] = {Family::DFL, Family::CFL, Family::CTF, Family::GDV, Family::PRD};

std::string number(double x) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return ec == std::errc() ? std::string(buf, end) : std::to_string(x);
}

const Question& question_of(const EvalRecord& r, const QuestionIndex& questions) {
    auto it = questions.find(r.question_id);
    if (it == questions.end()) throw JoinError("record for unknown question " + r.question_id);
    return *it->second;
}

std::string_view answer_category(const Question& q) {
    if (q.answer_labels.empty()) return {};
    const auto* c = q.choice(q.answer_labels.front());
    return c ? std::string_view(c->category) : std::string_view();
}

std::string predicted_category(const Question& q, const EvalRecord& r) {
    if (r.extracted == harness::kParseFail) return std::string(kParseFailCategory);
    if (r.extracted == harness::kUnknownAnswer) return std::string(question::category::kUnknown);
    const auto* c = q.choice(r.extracted);
    return c ? c->category : std::string(kParseFailCategory);
}

std::string run_key(const EvalRecord& r) {
    return r.model + "|" + std::string(harness::mode_name(r.mode)) + "|" + number(r.temperature);
}

std::string key_value(Key k, const Question& q, const EvalRecord& r) {
    switch (k) {
    case Key::Model: return r.model;
    case Key::Mode: return std::string(harness::mode_name(r.mode));
    case Key::Temperature: return number(r.temperature);
    case Key::Family: return std::string(question::family_name(q.family));
    case Key::Difficulty: return question::difficulty_name(q.difficulty);
    case Key::Cwe: return q.provenance.cwe_id;
    case Key::CweFamily: return question::cwe_family(q.provenance.cwe_id);
    case Key::Structure: return q.provenance.structure;
    }
    return {};
}

struct BaseFlags {
    std::optional<bool> safe;
    std::optional<bool> unsafe;
};

void add_flag(std::optional<bool>& slot, bool value) { slot = slot.value_or(true) && value; }

Json cell_json(const Cell& c) {
    return Json{{"correct", c.correct}, {"total", c.total}, {"value", c.rate()}};
}

Json optional_number(const std::optional<double>& x) { return x ? Json(*x) : Json(); }

}  // namespace

QuestionIndex index_questions(const std::vector<Question>& questions) {
    QuestionIndex index;
    for (const auto& q : questions) {
        if (!index.emplace(q.id, &q).second) throw ConfigError("duplicate question id " + q.id);
    }
    return index;
}

Table accuracy_by(const std::vector<EvalRecord>& records, const QuestionIndex& questions,
                  const std::vector<Key>& keys) {
    Table out;
    for (const auto& r : records) {
        const auto& q = question_of(r, questions);
        std::vector<std::string> group;
        group.reserve(keys.size());
        for (auto k : keys) group.push_back(key_value(k, q, r));
        auto& cell = out[group];
        ++cell.total;
        if (r.correct) ++cell.correct;
    }
    return out;
}

namespace {

// correct = safe items flagged, total = safe items
Cell safe_flags(const std::vector<EvalRecord>& base_records, const QuestionIndex& questions) {
    Cell out;
    for (const auto& r : base_records) {
        const auto& q = question_of(r, questions);
        if (q.family != Family::Base || answer_category(q) != question::category::kSafe) continue;
        ++out.total;
        auto said = predicted_category(q, r);
        if (said == question::category::kUnsafe || said == question::category::kUnknown ||
            said == kParseFailCategory) {
            ++out.correct;
        }
    }
    return out;
}

}  // namespace

double fpr_safe(const std::vector<EvalRecord>& base_records, const QuestionIndex& questions) {
    auto c = safe_flags(base_records, questions);
    if (c.total == 0) throw NoSafeItems("no base records with a safe ground truth");
    return c.rate();
}

std::map<Family, Cell> consistency_scores(const std::vector<EvalRecord>& base_records,
                                          const std::vector<EvalRecord>& family_records,
                                          const QuestionIndex& questions) {
    std::map<std::string, BaseFlags> flags;
    for (const auto& r : base_records) {
        const auto& q = question_of(r, questions);
        if (q.family != Family::Base) continue;
        auto& f = flags[run_key(r) + "|" + q.provenance.base_path];
        auto cat = answer_category(q);
        if (cat == question::category::kSafe) add_flag(f.safe, r.correct);
        if (cat == question::category::kUnsafe) add_flag(f.unsafe, r.correct);
    }
    std::map<Family, Cell> out;
    for (const auto& r : family_records) {
        const auto& q = question_of(r, questions);
        if (q.family == Family::Base) continue;
        auto it = flags.find(run_key(r) + "|" + q.provenance.base_path);
        bool need_safe = q.family != Family::PRD;
        bool need_unsafe = q.family != Family::GDV;
        if (it == flags.end() || (need_safe && !it->second.safe) ||
            (need_unsafe && !it->second.unsafe)) {
            throw JoinError("no base records for " + q.provenance.base_path + " (" + r.model + ")");
        }
        bool base_ok = (!need_safe || *it->second.safe) && (!need_unsafe || *it->second.unsafe);
        auto& cell = out[q.family];
        ++cell.total;
        if (r.correct && base_ok) ++cell.correct;
    }
    return out;
}

PairwiseScores pairwise_scores(const std::vector<EvalRecord>& pair_records,
                               const QuestionIndex& questions) {
    struct Slots {
        const EvalRecord* first = nullptr;
        const EvalRecord* second = nullptr;
    };
    std::map<std::string, Slots> pairs;
    for (const auto& r : pair_records) {
        if (r.pair_id.empty()) continue;
        auto& s = pairs[run_key(r) + "|" + r.pair_id];
        auto& slot = r.pair_slot == 1 ? s.first : s.second;
        if (slot || (r.pair_slot != 1 && r.pair_slot != 2)) {
            throw IncompletePair("pair " + r.pair_id + " has a bad or repeated slot");
        }
        slot = &r;
    }
    PairwiseScores out;
    // run|base path -> every base pair correct
    std::map<std::string, bool> base_ok;
    std::vector<std::pair<std::string, bool>> ctf;
    for (const auto& [key, s] : pairs) {
        if (!s.first || !s.second) throw IncompletePair("pair " + key + " misses a member");
        const auto& a = question_of(*s.first, questions);
        const auto& b = question_of(*s.second, questions);
        if (a.provenance.base_path != b.provenance.base_path || a.family != b.family) {
            throw IncompletePair("pair " + key + " mixes bases or families");
        }
        bool ok = s.first->correct && s.second->correct;
        auto join = run_key(*s.first) + "|" + a.provenance.base_path;
        if (a.family == Family::Base) {
            ++out.base_pair.total;
            if (ok) ++out.base_pair.correct;
            auto [it, fresh] = base_ok.emplace(join, ok);
            if (!fresh) it->second = it->second && ok;
        } else if (a.family == Family::CTF) {
            ++out.ctf_pair.total;
            if (ok) ++out.ctf_pair.correct;
            ctf.emplace_back(join, ok);
        }
    }
    for (const auto& [join, ok] : ctf) {
        auto it = base_ok.find(join);
        if (it == base_ok.end()) throw IncompletePair("no base pair for " + join);
        ++out.cons_ctf.total;
        if (ok && it->second) ++out.cons_ctf.correct;
    }
    return out;
}

std::map<std::string, std::map<std::string, ChoiceCount>> choice_distribution(
    const std::vector<EvalRecord>& records, const QuestionIndex& questions) {
    std::map<std::string, std::map<std::string, ChoiceCount>> out;
    for (const auto& r : records) {
        const auto& q = question_of(r, questions);
        auto& row = out[std::string(question::family_name(q.family))];
        ++row[predicted_category(q, r)].predicted;
        ++row[std::string(answer_category(q))].truth;
    }
    return out;
}

double MetricsReport::family_rate(Family f) const {
    auto it = accuracy.find(std::string(question::family_name(f)));
    if (it == accuracy.end()) return 0.0;
    auto all = it->second.find("all");
    return all == it->second.end() ? 0.0 : all->second.rate();
}

double MetricsReport::structure_avg() const {
    return (family_rate(Family::DFL) + family_rate(Family::CFL)) / 2.0;
}

double MetricsReport::semantic_avg() const {
    return (family_rate(Family::CTF) + family_rate(Family::GDV) + family_rate(Family::PRD)) / 3.0;
}

std::vector<MetricsReport> build_reports(const std::vector<EvalRecord>& records,
                                         const QuestionIndex& questions) {
    std::map<std::string, std::pair<std::vector<EvalRecord>, std::vector<EvalRecord>>> runs;
    for (const auto& r : records) {
        auto& run = runs[run_key(r)];
        (r.pair_id.empty() ? run.first : run.second).push_back(r);
    }
    std::vector<MetricsReport> out;
    for (const auto& [key, run] : runs) {
        const auto& [single, paired] = run;
        MetricsReport rep;
        const auto& any = single.empty() ? paired.front() : single.front();
        rep.model = any.model;
        rep.mode = any.mode;
        rep.temperature = any.temperature;

        bool has_base = false;
        bool has_safe = false;
        for (const auto& r : single) {
            const auto& q = question_of(r, questions);
            auto fam = std::string(question::family_name(q.family));
            for (const auto& d : {std::string("all"), question::difficulty_name(q.difficulty)}) {
                auto& c = rep.accuracy[fam][d];
                ++c.total;
                if (r.correct) ++c.correct;
            }
            if (q.family == Family::Base) {
                has_base = true;
                auto cat = answer_category(q);
                auto& c = cat == question::category::kSafe ? rep.base_safe : rep.base_unsafe;
                has_safe = has_safe || cat == question::category::kSafe;
                ++c.total;
                if (r.correct) ++c.correct;
            }
            auto& c = rep.by_cwe[question::cwe_family(q.provenance.cwe_id)][fam];
            ++c.total;
            if (r.correct) ++c.correct;
            if (r.extracted == harness::kParseFail) ++rep.parse_fail;
            if (r.error) ++rep.errors;
        }
        if (has_safe) {
            auto flagged = safe_flags(single, questions);
            rep.fpr_safe = flagged.rate();
            rep.safe_flagged = flagged.correct;
        }
        if (has_base) rep.cons = consistency_scores(single, single, questions);
        rep.choices = choice_distribution(single, questions);
        if (!paired.empty()) {
            rep.pairwise = pairwise_scores(paired, questions);
            for (const auto& r : paired) {
                if (r.extracted == harness::kParseFail) ++rep.parse_fail;
                if (r.error) ++rep.errors;
            }
        }
        out.push_back(std::move(rep));
    }
    return out;
}

namespace {

Json report_json(const MetricsReport& rep) {
    Json j;
    j["model"] = rep.model;
    j["mode"] = harness::mode_name(rep.mode);
    j["temperature"] = rep.temperature;

    Json acc = Json::object();
    for (auto f : question::kAllFamilies) {
        auto it = rep.accuracy.find(std::string(question::family_name(f)));
        if (it == rep.accuracy.end()) continue;
        Json cells = Json::object();
        for (const auto& [d, c] : it->second) cells[d] = cell_json(c);
        acc[std::string(question::family_name(f))] = cells;
    }
    j["accuracy"] = acc;
    j["base"] = Json{{"safe", cell_json(rep.base_safe)},
                     {"unsafe", cell_json(rep.base_unsafe)},
                     {"avg", rep.base_avg()}};
    j["fpr_safe"] = optional_number(rep.fpr_safe);

    Json cons = Json::object();
    for (auto f : kScoredFamilies) {
        auto it = rep.cons.find(f);
        if (it != rep.cons.end()) cons[std::string(question::family_name(f))] = cell_json(it->second);
    }
    j["cons"] = cons;
    if (rep.pairwise) {
        j["pairwise"] = Json{{"base_pair_acc", cell_json(rep.pairwise->base_pair)},
                             {"ctf_pair_acc", cell_json(rep.pairwise->ctf_pair)},
                             {"cons_ctf_pairwise", cell_json(rep.pairwise->cons_ctf)}};
    } else {
        j["pairwise"] = nullptr;
    }

    Json choices = Json::object();
    for (const auto& [fam, row] : rep.choices) {
        Json cats = Json::object();
        for (const auto& [cat, n] : row) {
            cats[cat] = Json{{"predicted", n.predicted}, {"truth", n.truth}, {"excess", n.excess()}};
        }
        choices[fam] = cats;
    }
    j["choice_distribution"] = choices;

    Json cwe = Json::object();
    for (const auto& [cls, row] : rep.by_cwe) {
        Json cells = Json::object();
        for (const auto& [fam, c] : row) cells[fam] = cell_json(c);
        cwe[cls] = cells;
    }
    j["by_cwe"] = cwe;
    j["parse_fail"] = rep.parse_fail;
    j["errors"] = rep.errors;
    j["table2"] = Json{{"DataFlow", rep.family_rate(Family::DFL)},
                       {"ControlFlow", rep.family_rate(Family::CFL)},
                       {"StructureAverage", rep.structure_avg()},
                       {"Counterfactual", rep.family_rate(Family::CTF)},
                       {"Goal-driven", rep.family_rate(Family::GDV)},
                       {"Predictive", rep.family_rate(Family::PRD)},
                       {"SemanticAverage", rep.semantic_avg()},
                       {"Unsafe", rep.base_unsafe.rate()},
                       {"Safe", rep.base_safe.rate()},
                       {"BaseAverage", rep.base_avg()},
                       {"FPR_safe", optional_number(rep.fpr_safe)}};
    return j;
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string percent(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x * 100.0);
    return buf;
}

}  // namespace

std::string report_to_json(const MetricsReport& report) { return report_json(report).dump(2) + "\n"; }

std::string matrix_to_json(const std::vector<MetricsReport>& reports) {
    std::set<std::string> models;
    std::set<std::string> modes;
    Json list = Json::array();
    for (const auto& r : reports) {
        models.insert(r.model);
        modes.insert(std::string(harness::mode_name(r.mode)));
        list.push_back(report_json(r));
    }
    Json families = Json::array();
    for (auto f : kScoredFamilies) families.push_back(question::family_name(f));
    Json j{{"families", families}, {"models", models}, {"modes", modes}, {"reports", list}};
    return j.dump(2) + "\n";
}

std::string reports_to_csv(const std::vector<MetricsReport>& reports) {
    std::string out = "model,mode,temperature,metric,family,difficulty,correct,total,value\n";
    auto row = [&](const MetricsReport& r, std::string_view metric, std::string_view family,
                   std::string_view difficulty, const Cell& c) {
        out += csv_field(r.model) + "," + std::string(harness::mode_name(r.mode)) + "," +
               number(r.temperature) + "," + std::string(metric) + "," + csv_field(family) + "," +
               csv_field(difficulty) + "," + std::to_string(c.correct) + "," +
               std::to_string(c.total) + "," + number(c.rate()) + "\n";
    };
    for (const auto& r : reports) {
        for (const auto& [fam, cells] : r.accuracy) {
            for (const auto& [d, c] : cells) row(r, "accuracy", fam, d, c);
        }
        row(r, "base_safe", "Base", "all", r.base_safe);
        row(r, "base_unsafe", "Base", "all", r.base_unsafe);
        if (r.fpr_safe) row(r, "fpr_safe", "Base", "all", {r.safe_flagged, r.base_safe.total});
        for (const auto& [f, c] : r.cons) row(r, "cons", question::family_name(f), "all", c);
        if (r.pairwise) {
            row(r, "base_pair_acc", "Base", "all", r.pairwise->base_pair);
            row(r, "ctf_pair_acc", "CTF", "all", r.pairwise->ctf_pair);
            row(r, "cons_ctf_pairwise", "CTF", "all", r.pairwise->cons_ctf);
        }
    }
    return out;
}

std::string table2_csv(const std::vector<MetricsReport>& reports) {
    std::string out =
        "Model,Mode,Temperature,DataFlow,ControlFlow,Structure Average,Counterfactual,Goal-driven,"
        "Predictive,Semantic Average,Unsafe,Safe,Base Average,FPR_safe\n";
    for (const auto& r : reports) {
        out += csv_field(r.model) + "," + std::string(harness::mode_name(r.mode)) + "," +
               number(r.temperature) + "," + percent(r.family_rate(Family::DFL)) + "," +
               percent(r.family_rate(Family::CFL)) + "," + percent(r.structure_avg()) + "," +
               percent(r.family_rate(Family::CTF)) + "," + percent(r.family_rate(Family::GDV)) + "," +
               percent(r.family_rate(Family::PRD)) + "," + percent(r.semantic_avg()) + "," +
               percent(r.base_unsafe.rate()) + "," + percent(r.base_safe.rate()) + "," +
               percent(r.base_avg()) + "," + (r.fpr_safe ? percent(*r.fpr_safe) : std::string()) +
               "\n";
    }
    return out;
}

}  // namespace vrbench::metrics
