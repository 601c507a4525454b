#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <json.hpp>

#include "vrbench/pipeline.hpp"

namespace fs = std::filesystem;

namespace vrbench::pipeline {

using question::Family;
using question::Question;
using variant::Behavior;
using variant::Structure;
using variant::Variant;

namespace {

constexpr Structure kStructures[] = {Structure::Outer, Structure::Inner, Structure::OuterInner};
constexpr Behavior kBehaviors[] = {Behavior::Safe, Behavior::Impaired, Behavior::Unsafe};

void default_log(const std::string& line) { std::cerr << line << "\n"; }

const Log& log_or_default(const Log& log) {
    static const Log fallback = default_log;
    return log ? log : fallback;
}

std::string resolve(const std::string& base_dir, const std::string& path) {
    if (path.empty()) return path;
    fs::path p(path);
    return p.is_absolute() ? path : (fs::path(base_dir) / p).lexically_normal().string();
}

std::string out_path(const PipelineConfig& cfg, const std::string& name) {
    return (fs::path(cfg.output_dir) / name).string();
}

void require_file(const std::string& path, std::string_view stage) {
    if (!fs::exists(path)) {
        throw ConfigError(path + " is missing; run the " + std::string(stage) + " stage first");
    }
}

std::string number(double x) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return ec == std::errc() ? std::string(buf, end) : std::to_string(x);
}

std::string file_safe(std::string_view name) {
    std::string out;
    for (char c : name) {
        bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_';
        out.push_back(ok ? c : '_');
    }
    return out;
}

// Runs task(i) for every i on `jobs` threads. The first exception is
// rethrown after all workers finish.
template <class Task>
void parallel_for(std::size_t n, std::uint32_t jobs, Task task) {
    if (jobs == 0) jobs = std::max(1U, std::thread::hardware_concurrency());
    std::atomic<std::size_t> next{0};
    std::exception_ptr first;
    std::mutex mu;
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                task(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!first) first = std::current_exception();
            }
        }
    };
    std::size_t threads = std::min<std::size_t>(jobs, n);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (first) std::rethrow_exception(first);
}

flow::PairOptions pair_options(const ManifestEntry& e) {
    flow::PairOptions opt;
    opt.pair = flow::PairInfo{e.safe_fn, e.unsafe_fn, e.cwe_id};
    return opt;
}

std::map<std::string, flow::PairInfo> load_metadata(const std::string& path) {
    std::map<std::string, flow::PairInfo> out;
    if (path.empty()) return out;
    try {
        auto j = nlohmann::json::parse(read_file(path));
        if (!j.is_object()) throw ConfigError("pair metadata must be a JSON object");
        for (const auto& [file, info] : j.items()) {
            auto key = fs::path(file).lexically_normal().generic_string();
            auto [it, fresh] = out.emplace(key, flow::PairInfo{info.at("safe").get<std::string>(),
                                                               info.at("unsafe").get<std::string>(),
                                                               info.value("cwe", std::string())});
            if (!fresh) throw ConfigError("pair metadata names base path " + key + " twice");
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError("pair metadata " + path + ": " + ex.what());
    }
    return out;
}

std::vector<std::pair<std::string, fs::path>> scan_inputs(const std::string& dir) {
    if (dir.empty()) throw ConfigError("input_dir is not set");
    if (!fs::is_directory(dir)) throw ConfigError("input_dir " + dir + " is not a directory");
    std::vector<std::pair<std::string, fs::path>> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file() || e.path().extension() != ".c") continue;
        files.emplace_back(fs::relative(e.path(), dir).generic_string(), e.path());
    }
    std::sort(files.begin(), files.end());
    // a linked file would enter the benchmark twice under two names
    std::map<fs::path, std::string> real;
    for (const auto& [rel, path] : files) {
        auto [it, fresh] = real.emplace(fs::canonical(path), rel);
        if (!fresh) throw ConfigError("duplicate base: " + rel + " and " + it->second + " are the same file");
    }
    return files;
}

std::vector<ManifestEntry> read_manifest(const PipelineConfig& cfg) {
    auto path = out_path(cfg, kManifestFile);
    require_file(path, "ingest");
    std::vector<ManifestEntry> out;
    std::set<std::string> seen;
    for (const auto& line : read_lines(path)) {
        out.push_back(manifest_from_jsonl(line));
        if (!seen.insert(out.back().base_path).second) {
            throw ConfigError("duplicate base path " + out.back().base_path + " in " + path);
        }
    }
    return out;
}

template <class T, class Parse>
std::vector<T> read_records(const std::string& path, Parse parse) {
    std::vector<T> out;
    for (const auto& line : read_lines(path)) out.push_back(parse(line));
    return out;
}

std::string compile_command(const PipelineConfig& cfg) {
    std::string cmd = cfg.compiler;
    for (const auto& dir : cfg.include_dirs) cmd += " -I'" + dir + "'";
    return cmd;
}

}  // namespace

void StageResult::merge(const StageResult& other) {
    for (const auto& p : other.problems) problems.push_back(p);
    files.insert(files.end(), other.files.begin(), other.files.end());
    status = static_cast<Status>(std::max(static_cast<int>(status), static_cast<int>(other.status)));
}

PipelineConfig config_from_json(std::string_view text, const std::string& base_dir) {
    try {
        auto j = nlohmann::json::parse(text);
        if (!j.is_object()) throw ConfigError("config must be a JSON object");
        PipelineConfig c;
        c.input_dir = resolve(base_dir, j.value("input_dir", ""));
        c.metadata_path = resolve(base_dir, j.value("metadata", ""));
        c.output_dir = resolve(base_dir, j.value("output_dir", c.output_dir));
        c.seed = j.value("seed", std::uint64_t{0});
        c.compiler = j.value("compiler", "");
        for (const auto& d : j.value("include_dirs", std::vector<std::string>{})) {
            c.include_dirs.push_back(resolve(base_dir, d));
        }
        if (j.contains("deny")) c.deny = j["deny"].get<std::vector<std::string>>();
        if (j.contains("pool")) c.pool = j["pool"].get<std::vector<std::string>>();
        c.catalog_path = resolve(base_dir, j.value("catalog", ""));
        c.templates_path = resolve(base_dir, j.value("templates", ""));
        if (j.contains("injection_levels")) {
            c.injection_levels = j["injection_levels"].get<std::vector<std::uint32_t>>();
        }
        if (j.contains("budgets")) {
            for (const auto& [fam, n] : j["budgets"].items()) {
                c.budgets[question::parse_family(fam)] = n.get<std::size_t>();
            }
        }
        c.per_base_cap = j.value("per_base_cap", std::size_t{0});
        for (const auto& m : j.value("models", nlohmann::json::array())) {
            c.models.push_back(harness::model_config_from_json(m.dump()));
        }
        c.mode = harness::parse_mode(j.value("mode", "zero"));
        c.demos_path = resolve(base_dir, j.value("demos", ""));
        c.pairwise = j.value("pairwise", false);
        c.strict = j.value("strict", false);
        c.temperatures = j.value("temperatures", std::vector<double>{});
        c.jobs = j.value("jobs", 0U);
        if (c.deny.empty()) throw ConfigError("deny list must not be empty");
        return c;
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError(std::string("pipeline config: ") + ex.what());
    }
}

PipelineConfig load_config(const std::string& path) {
    if (!fs::exists(path)) throw ConfigError("config file " + path + " not found");
    return config_from_json(read_file(path), fs::path(path).parent_path().string());
}

std::string manifest_to_jsonl(const ManifestEntry& e) {
    nlohmann::ordered_json j{{"base_path", e.base_path},
                             {"safe_fn", e.safe_fn},
                             {"unsafe_fn", e.unsafe_fn},
                             {"cwe_id", e.cwe_id},
                             {"source", e.source}};
    return j.dump();
}

ManifestEntry manifest_from_jsonl(std::string_view line) {
    try {
        auto j = nlohmann::json::parse(line);
        return {j.at("base_path").get<std::string>(), j.at("safe_fn").get<std::string>(),
                j.at("unsafe_fn").get<std::string>(), j.at("cwe_id").get<std::string>(),
                j.at("source").get<std::string>()};
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError(std::string("manifest record: ") + ex.what());
    }
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!trim(line).empty()) out.push_back(line);
    }
    return out;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
    auto parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    std::string text;
    for (const auto& l : lines) text += l + "\n";
    write_file(path, text);
}

question::Policy make_policy(const PipelineConfig& cfg) {
    question::Policy p;
    p.seed = cfg.seed;
    p.deny = cfg.deny;
    p.pool = cfg.pool;
    p.budgets = cfg.budgets;
    p.per_base_cap = cfg.per_base_cap;
    if (!cfg.templates_path.empty()) {
        p.templates = question::Templates::from_json(read_file(cfg.templates_path));
    }
    return p;
}

std::vector<variant::MaskCatalogEntry> load_catalog_for(const PipelineConfig& cfg) {
    if (cfg.catalog_path.empty()) return variant::default_catalog();
    return variant::load_catalog(read_file(cfg.catalog_path));
}

BaseVariants generate_base_variants(const flow::SourceUnit& unit, const PipelineConfig& cfg,
                                    const std::vector<variant::MaskCatalogEntry>& catalog) {
    BaseVariants out;
    for (auto structure : kStructures) {
        for (auto level : cfg.injection_levels) {
            auto tag = "variant|" + unit.path + "|" + std::string(variant::structure_name(structure)) +
                       "|" + std::to_string(level);
            auto seed = derive_seed(cfg.seed, tag);
            std::vector<Variant> group;
            std::optional<Variant> skeleton;
            try {
                for (auto behavior : kBehaviors) {
                    variant::VariantSpec spec{structure, behavior, 0, seed};
                    auto v = variant::wrap_structure(unit, spec);
                    v = variant::inject_control_flow(v, level, catalog, derive_seed(seed, "inject"));
                    if (v.spec.injection_count != level) {
                        throw ExtractionError("only " + std::to_string(v.spec.injection_count) +
                                              " statements eligible for injection");
                    }
                    auto masked = variant::mask_variant(v, cfg.deny, cfg.pool, derive_seed(seed, "mask"));
                    if (structure == Structure::OuterInner && behavior == Behavior::Safe) {
                        skeleton = masked;
                    }
                    group.push_back(variant::fill_mask(
                        masked, behavior, catalog,
                        derive_seed(seed, "fill|" + std::string(variant::behavior_name(behavior)))));
                }
            } catch (const Error& ex) {
                out.problems.push_back(unit.path + " " + std::string(variant::structure_name(structure)) +
                                       " k=" + std::to_string(level) + ": " + ex.what());
                continue;
            }
            for (auto& v : group) out.variants.push_back(std::move(v));
            if (skeleton) out.skeletons.push_back(std::move(*skeleton));
        }
    }
    return out;
}

std::vector<Question> generate_base_questions(const flow::SourceUnit& unit,
                                              const std::vector<Variant>& variants,
                                              const std::vector<Variant>& skeletons,
                                              const std::vector<std::string>& cwe_universe,
                                              const std::vector<variant::MaskCatalogEntry>& catalog,
                                              const question::Policy& policy,
                                              std::vector<std::string>* problems) {
    auto note = [&](const std::string& what, const Error& ex) {
        if (problems) problems->push_back(unit.path + " " + what + ": " + ex.what());
    };
    std::vector<Question> out;
    auto append = [&](std::vector<Question> qs) {
        for (auto& q : qs) out.push_back(std::move(q));
    };
    auto dfg = flow::build_dfg(unit);
    auto cfg = flow::build_cfg(unit);
    try {
        append(question::gen_dataflow_questions(unit, dfg, cfg, policy));
    } catch (const Error& ex) {
        note("DFL", ex);
    }
    try {
        append(question::gen_controlflow_questions(unit, dfg, cfg, policy));
    } catch (const Error& ex) {
        note("CFL", ex);
    }
    try {
        append(question::gen_base_questions(unit, policy));
    } catch (const Error& ex) {
        note("Base", ex);
    }

    std::map<std::tuple<Structure, std::uint32_t, std::uint64_t>, question::VariantTriple> triples;
    for (const auto& v : variants) {
        auto& t = triples[{v.spec.structure, v.spec.injection_count, v.spec.seed}];
        switch (v.spec.behavior) {
        case Behavior::Safe: t.safe = &v; break;
        case Behavior::Impaired: t.impaired = &v; break;
        case Behavior::Unsafe: t.unsafe = &v; break;
        }
    }
    for (const auto& [key, t] : triples) {
        try {
            append(question::gen_counterfactual_questions({t}, policy));
        } catch (const Error& ex) {
            note("CTF", ex);
        }
    }
    for (const auto& v : variants) {
        try {
            out.push_back(question::gen_predictive_question(v, cwe_universe, policy));
        } catch (const Error& ex) {
            note("PRD", ex);
        }
    }
    for (const auto& m : skeletons) {
        try {
            auto fills = question::goal_fills(m, catalog, derive_seed(policy.seed, "goal|" + m.id()));
            out.push_back(question::gen_goaldriven_question(m, fills, catalog, policy));
        } catch (const Error& ex) {
            note("GDV", ex);
        }
    }
    return out;
}

std::string summary_table(const question::QuestionSet& set) {
    std::set<std::string> levels;
    for (const auto& [fam, row] : set.difficulty_counts) {
        for (const auto& [d, n] : row) levels.insert(d);
    }
    std::string out = "family";
    for (const auto& l : levels) out += "\t" + l;
    out += "\ttotal\n";
    for (auto f : question::kAllFamilies) {
        auto name = std::string(question::family_name(f));
        auto it = set.difficulty_counts.find(name);
        out += name;
        for (const auto& l : levels) {
            std::size_t n = 0;
            if (it != set.difficulty_counts.end() && it->second.count(l)) n = it->second.at(l);
            out += "\t" + std::to_string(n);
        }
        auto total = set.family_counts.count(name) ? set.family_counts.at(name) : 0;
        out += "\t" + std::to_string(total) + "\n";
    }
    return out;
}

StageResult cmd_ingest(const PipelineConfig& cfg, const Log& log_in) {
    const auto& log = log_or_default(log_in);
    StageResult result;
    auto metadata = load_metadata(cfg.metadata_path);
    auto files = scan_inputs(cfg.input_dir);
    std::set<std::string> seen_meta;
    std::vector<std::string> lines;
    std::size_t skipped = 0;
    for (const auto& [rel, path] : files) {
        ManifestEntry e;
        e.base_path = rel;
        e.source = read_file(path.string());
        flow::PairOptions opt;
        if (auto it = metadata.find(rel); it != metadata.end()) {
            opt.pair = it->second;
            seen_meta.insert(rel);
        }
        try {
            auto unit = flow::parse_source(e.source, rel, opt);
            e.safe_fn = unit.safe_fn;
            e.unsafe_fn = unit.unsafe_fn;
            e.cwe_id = unit.cwe_id.empty() ? flow::cwe_from_path(rel) : unit.cwe_id;
            for (const auto& w : unit.warnings) log("warning: " + rel + ": " + w);
        } catch (const MissingPairError& ex) {
            ++skipped;
            log("skip " + rel + ": " + ex.what());
            continue;
        } catch (const ParseError& ex) {
            result.fail(rel + ": " + ex.what());
            continue;
        }
        lines.push_back(manifest_to_jsonl(e));
    }
    for (const auto& [rel, info] : metadata) {
        if (!seen_meta.count(rel)) result.fail("pair metadata names missing file " + rel);
    }
    auto path = out_path(cfg, kManifestFile);
    write_lines(path, lines);
    result.files.push_back(path);
    log("ingest: " + std::to_string(lines.size()) + " bases, " + std::to_string(skipped) +
        " skipped, " + std::to_string(result.problems.size()) + " failed");
    return result;
}

StageResult cmd_generate(const PipelineConfig& cfg, const Log& log_in) {
    const auto& log = log_or_default(log_in);
    StageResult result;
    auto manifest = read_manifest(cfg);
    auto catalog = load_catalog_for(cfg);
    std::vector<BaseVariants> per_base(manifest.size());
    parallel_for(manifest.size(), cfg.jobs, [&](std::size_t i) {
        try {
            auto unit = flow::parse_source(manifest[i].source, manifest[i].base_path,
                                           pair_options(manifest[i]));
            per_base[i] = generate_base_variants(unit, cfg, catalog);
        } catch (const Error& ex) {
            per_base[i].problems.push_back(manifest[i].base_path + ": " + ex.what());
        }
    });

    std::atomic<bool> compiler_missing{false};
    std::atomic<std::size_t> failed{0};
    if (!cfg.compiler.empty()) {
        auto command = compile_command(cfg);
        std::vector<Variant*> all;
        for (auto& b : per_base) {
            for (auto& v : b.variants) all.push_back(&v);
        }
        parallel_for(all.size(), cfg.jobs, [&](std::size_t i) {
            if (compiler_missing) return;
            try {
                *all[i] = variant::validate_compile(*all[i], command);
                if (all[i]->compile_status == variant::CompileStatus::Failed) ++failed;
            } catch (const CompilerUnavailable&) {
                compiler_missing = true;
            }
        });
        if (compiler_missing) {
            log("warning: compiler unavailable; variants stay unchecked");
            for (auto* v : all) v->compile_status = variant::CompileStatus::Unchecked;
            failed = 0;
        }
    }

    std::vector<std::string> lines;
    std::vector<std::string> skeleton_lines;
    std::map<std::string, std::size_t> counts;
    std::size_t total = 0;
    for (auto& b : per_base) {
        for (const auto& p : b.problems) result.fail(p);
        for (const auto& v : b.variants) {
            ++total;
            if (v.compile_status == variant::CompileStatus::Failed) continue;
            ++counts[std::string(variant::behavior_name(v.spec.behavior))];
            lines.push_back(variant::variant_to_jsonl(v));
        }
        for (const auto& s : b.skeletons) skeleton_lines.push_back(variant::variant_to_jsonl(s));
    }
    auto path = out_path(cfg, kVariantsFile);
    write_lines(path, lines);
    write_lines(out_path(cfg, kSkeletonsFile), skeleton_lines);
    result.files.push_back(path);
    result.files.push_back(out_path(cfg, kSkeletonsFile));

    std::string summary = "generate: " + std::to_string(total) + " variants";
    for (const auto& [b, n] : counts) summary += ", " + b + " " + std::to_string(n);
    if (!cfg.compiler.empty() && !compiler_missing && total > 0) {
        char ratio[32];
        std::snprintf(ratio, sizeof ratio, "%.1f%%",
                      100.0 * static_cast<double>(total - failed) / static_cast<double>(total));
        summary += ", compilable " + std::string(ratio);
    }
    log(summary);
    return result;
}

StageResult cmd_questions(const PipelineConfig& cfg, const Log& log_in) {
    const auto& log = log_or_default(log_in);
    StageResult result;
    auto manifest = read_manifest(cfg);
    require_file(out_path(cfg, kVariantsFile), "generate");
    require_file(out_path(cfg, kSkeletonsFile), "generate");
    auto variants = read_records<Variant>(out_path(cfg, kVariantsFile), variant::variant_from_jsonl);
    auto skeletons = read_records<Variant>(out_path(cfg, kSkeletonsFile), variant::variant_from_jsonl);
    auto catalog = load_catalog_for(cfg);
    auto policy = make_policy(cfg);

    std::map<std::string, std::pair<std::vector<Variant>, std::vector<Variant>>> by_base;
    for (auto& v : variants) by_base[v.base_path].first.push_back(std::move(v));
    for (auto& v : skeletons) by_base[v.base_path].second.push_back(std::move(v));

    std::set<std::string> universe_set;
    for (const auto& e : manifest) {
        if (!e.cwe_id.empty()) universe_set.insert(e.cwe_id);
    }
    for (const auto& c : question::known_cwes()) universe_set.insert(c);
    std::vector<std::string> universe(universe_set.begin(), universe_set.end());

    std::vector<std::vector<Question>> per_base(manifest.size());
    std::vector<std::vector<std::string>> problems(manifest.size());
    parallel_for(manifest.size(), cfg.jobs, [&](std::size_t i) {
        const auto& e = manifest[i];
        try {
            auto unit = flow::parse_source(e.source, e.base_path, pair_options(e));
            const auto& vs = by_base[e.base_path];
            per_base[i] = generate_base_questions(unit, vs.first, vs.second, universe, catalog,
                                                  policy, &problems[i]);
        } catch (const Error& ex) {
            problems[i].push_back(e.base_path + ": " + ex.what());
        }
    });

    std::vector<Question> all;
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        for (const auto& p : problems[i]) result.fail(p);
        for (auto& q : per_base[i]) {
            bool leaks = false;
            for (const auto& t : question::code_derived_text(q)) {
                leaks = leaks || variant::contains_deny_token(t, cfg.deny);
            }
            if (leaks) {
                result.fail("question " + q.id + " failed the deny scan");
                continue;
            }
            all.push_back(std::move(q));
        }
    }
    auto set = question::balance_distribution(all, policy);
    std::vector<std::string> lines;
    for (const auto& q : set.questions) lines.push_back(question::question_to_json(q));
    auto path = out_path(cfg, kQuestionsFile);
    write_lines(path, lines);
    result.files.push_back(path);
    log("questions: " + std::to_string(set.questions.size()) + " of " + std::to_string(all.size()) +
        " kept\n" + summary_table(set));
    return result;
}

StageResult cmd_evaluate(const PipelineConfig& cfg, const Log& log_in, harness::ModelClient* client) {
    const auto& log = log_or_default(log_in);
    StageResult result;
    auto qpath = out_path(cfg, kQuestionsFile);
    require_file(qpath, "questions");
    auto questions = read_records<Question>(qpath, question::question_from_json);
    if (cfg.models.empty()) throw ConfigError("no models configured");

    std::optional<harness::IclDemoSet> demos;
    if (cfg.mode == harness::Mode::ICL) {
        if (cfg.demos_path.empty()) throw ConfigError("in-context mode needs a demos file");
        demos = harness::IclDemoSet::from_json(read_file(cfg.demos_path));
        for (const auto& q : questions) {
            try {
                harness::build_prompt(q, cfg.mode, &*demos);
            } catch (const MissingDemos& ex) {
                throw ConfigError(ex.what());
            }
        }
    }
    harness::HttpModelClient http;
    auto& transport = client ? *client : static_cast<harness::ModelClient&>(http);
    harness::RunOptions options;
    options.mode = cfg.mode;
    options.demos = demos ? &*demos : nullptr;
    options.strict = cfg.strict;

    std::vector<harness::QuestionPair> pairs;
    if (cfg.pairwise) {
        for (auto f : {Family::Base, Family::CTF}) {
            for (auto& p : harness::make_pairs(questions, f, true)) pairs.push_back(std::move(p));
        }
    }

    std::set<std::string> names;
    for (const auto& m : cfg.models) {
        if (!names.insert(m.name).second) throw ConfigError("duplicate model name " + m.name);
    }
    for (const auto& want : cfg.model_filter) {
        if (!names.count(want)) throw ConfigError("unknown model " + want);
    }
    for (const auto& model : cfg.models) {
        if (!cfg.model_filter.empty() &&
            std::find(cfg.model_filter.begin(), cfg.model_filter.end(), model.name) ==
                cfg.model_filter.end()) {
            continue;
        }
        auto temps = cfg.temperatures.empty() ? std::vector<double>{model.temperature} : cfg.temperatures;
        for (double t : temps) {
            auto m = model;
            m.temperature = t;
            m.validate();
            std::vector<harness::EvalRecord> records;
            std::string suffix;
            if (cfg.pairwise) {
                for (auto& [a, b] : harness::run_pairwise(pairs, m, transport, options)) {
                    records.push_back(std::move(a));
                    records.push_back(std::move(b));
                }
                suffix = "_pairwise";
            } else {
                records = harness::run_suite(questions, m, transport, options);
            }
            std::vector<std::string> lines;
            std::size_t errors = 0;
            for (const auto& r : records) {
                if (r.error) ++errors;
                lines.push_back(harness::record_to_json(r));
            }
            auto name = file_safe(m.name) + "_" + std::string(harness::mode_name(cfg.mode)) + "_t" +
                        number(t) + suffix + ".jsonl";
            auto path = (fs::path(cfg.output_dir) / kResponsesDir / name).string();
            write_lines(path, lines);
            result.files.push_back(path);
            if (errors) result.fail(m.name + ": " + std::to_string(errors) + " requests failed");
            log("evaluate: " + m.name + " t=" + number(t) + " " + std::to_string(records.size()) +
                " records, " + std::to_string(errors) + " errors");
        }
    }
    return result;
}

StageResult cmd_score(const PipelineConfig& cfg, const Log& log_in) {
    const auto& log = log_or_default(log_in);
    StageResult result;
    auto qpath = out_path(cfg, kQuestionsFile);
    require_file(qpath, "questions");
    auto questions = read_records<Question>(qpath, question::question_from_json);
    auto index = metrics::index_questions(questions);

    auto dir = fs::path(cfg.output_dir) / kResponsesDir;
    if (!fs::is_directory(dir)) throw ConfigError(dir.string() + " is missing; run evaluate first");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<harness::EvalRecord> records;
    for (const auto& f : files) {
        for (const auto& line : read_lines(f.string())) records.push_back(harness::record_from_json(line));
    }
    auto reports = metrics::build_reports(records, index);

    auto mdir = fs::path(cfg.output_dir) / kMetricsDir;
    fs::create_directories(mdir);
    for (const auto& r : reports) {
        auto name = file_safe(r.model) + "_" + std::string(harness::mode_name(r.mode)) + "_t" +
                    number(r.temperature) + ".json";
        write_file((mdir / name).string(), metrics::report_to_json(r));
        result.files.push_back((mdir / name).string());
    }
    auto table = metrics::table2_csv(reports);
    write_file((mdir / "matrix.json").string(), metrics::matrix_to_json(reports));
    write_file((mdir / "metrics.csv").string(), metrics::reports_to_csv(reports));
    write_file((mdir / "table2.csv").string(), table);
    for (const char* f : {"matrix.json", "metrics.csv", "table2.csv"}) result.files.push_back((mdir / f).string());
    log("score: " + std::to_string(reports.size()) + " reports\n" + table);
    return result;
}

StageResult cmd_all(const PipelineConfig& cfg, const Log& log, harness::ModelClient* client) {
    StageResult result;
    result.merge(cmd_ingest(cfg, log));
    result.merge(cmd_generate(cfg, log));
    result.merge(cmd_questions(cfg, log));
    if (!cfg.models.empty()) {
        result.merge(cmd_evaluate(cfg, log, client));
        result.merge(cmd_score(cfg, log));
    }
    return result;
}

}  // namespace vrbench::pipeline
