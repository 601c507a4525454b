#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <set>

#include <json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include "variant_internal.hpp"

namespace vrbench::variant {

using csyntax::NodeKind;

namespace {

void replace_all(std::string& text, std::string_view from, std::string_view to) {
    for (auto pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size())) {
        text.replace(pos, from.size(), to);
    }
}

// Names declared by a top-level item.
std::vector<std::string> declared_names(const csyntax::Ast& ast, csyntax::NodeId id) {
    const auto& n = ast.node(id);
    if (n.kind == NodeKind::FunctionDef) return {n.text};
    std::vector<std::string> out;
    if (n.kind == NodeKind::Declaration) {
        for (auto c : n.children) {
            const auto& d = ast.node(c);
            if (d.kind == NodeKind::Declarator && !d.text.empty()) out.push_back(d.text);
        }
    }
    return out;
}

}  // namespace

Variant validate_compile(const Variant& variant, const std::string& command) {
    if (trim(command).empty()) throw CompilerUnavailable("no compiler command configured");
    static std::atomic<std::uint64_t> counter{0};
    auto dir = std::filesystem::temp_directory_path();
    auto stem = "vrbench_" + std::to_string(::getpid()) + "_" + variant.id() + "_" +
                std::to_string(counter++);
    auto src = (dir / (stem + ".c")).string();
    auto out = (dir / (stem + ".o")).string();
    write_file(src, variant.source);

    std::string cmd = command;
    if (cmd.find("{src}") == std::string::npos) cmd += " {src}";
    replace_all(cmd, "{src}", "'" + src + "'");
    replace_all(cmd, "{out}", "'" + out + "'");
    cmd += " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    std::error_code ec;
    std::filesystem::remove(src, ec);
    std::filesystem::remove(out, ec);

    int code = status == -1 ? 127 : (WIFEXITED(status) ? WEXITSTATUS(status) : 128);
    if (code == 127) throw CompilerUnavailable("compiler command not found: " + command);
    Variant v = variant;
    v.compile_status = code == 0 ? CompileStatus::Ok : CompileStatus::Failed;
    return v;
}

FunctionView function_view(std::string_view source, std::string_view function_name,
                           bool with_helpers) {
    auto ast = csyntax::parse(source);
    const auto& top = ast.node(ast.root()).children;
    csyntax::NodeId target = csyntax::kNoNode;
    for (auto c : top) {
        if (ast.node(c).kind == NodeKind::FunctionDef && ast.node(c).text == function_name) target = c;
    }
    if (target == csyntax::kNoNode) {
        throw UnknownElement("function " + std::string(function_name) + " not found");
    }
    std::set<std::string, std::less<>> referenced;
    for (const auto& t : csyntax::lex(csyntax::slice(source, ast.node(target).span))) {
        if (t.kind == csyntax::TokenKind::Identifier) referenced.insert(t.text);
    }
    FunctionView view;
    auto& out = view.text;
    auto append = [&](csyntax::NodeId id) {
        if (!out.empty()) out += "\n\n";
        out += statement_text(source, ast.node(id).span);
    };
    for (auto c : top) {
        if (c == target) {
            if (!out.empty()) out += "\n\n";
            view.function_line =
                static_cast<std::uint32_t>(std::count(out.begin(), out.end(), '\n')) + 1;
            out += statement_text(source, ast.node(c).span);
            continue;
        }
        if (!with_helpers) continue;
        auto names = declared_names(ast, c);
        bool used = std::any_of(names.begin(), names.end(), [&](const std::string& n) {
            return n != function_name && referenced.count(n);
        });
        if (used) append(c);
    }
    return view;
}

std::string function_code(std::string_view source, std::string_view function_name,
                          bool with_helpers) {
    return function_view(source, function_name, with_helpers).text;
}

std::string variant_to_jsonl(const Variant& v) {
    nlohmann::json slots = nlohmann::json::array();
    for (const auto& s : v.mask_slots) {
        slots.push_back({{"byte_start", s.byte_start},
                         {"byte_end", s.byte_end},
                         {"line_start", s.line_start},
                         {"line_end", s.line_end}});
    }
    nlohmann::json routes = nlohmann::json::array();
    for (const auto& r : v.routes) {
        nlohmann::json values = nlohmann::json::array();
        for (const auto& x : r.slot_values) values.push_back(x ? nlohmann::json(*x) : nlohmann::json());
        routes.push_back({{"behavior", behavior_name(r.behavior)}, {"slot_values", values}});
    }
    nlohmann::json j{{"variant_id", v.id()},
                     {"base_path", v.base_path},
                     {"cwe_id", v.cwe_id},
                     {"structure", structure_name(v.spec.structure)},
                     {"behavior", behavior_name(v.spec.behavior)},
                     {"injection_count", v.spec.injection_count},
                     {"seed", v.spec.seed},
                     {"compile_status", compile_status_name(v.compile_status)},
                     {"function_name", v.function_name},
                     {"mask_slots", slots},
                     {"routes", routes},
                     {"fills", v.fills},
                     {"source", v.source}};
    return j.dump();
}

Variant variant_from_jsonl(std::string_view line) {
    try {
        auto j = nlohmann::json::parse(line);
        Variant v;
        v.base_path = j.at("base_path").get<std::string>();
        v.cwe_id = j.at("cwe_id").get<std::string>();
        v.spec.structure = parse_structure(j.at("structure").get<std::string>());
        v.spec.behavior = parse_behavior(j.at("behavior").get<std::string>());
        v.spec.injection_count = j.at("injection_count").get<std::uint32_t>();
        v.spec.seed = j.at("seed").get<std::uint64_t>();
        v.compile_status = parse_compile_status(j.at("compile_status").get<std::string>());
        v.function_name = j.at("function_name").get<std::string>();
        for (const auto& s : j.at("mask_slots")) {
            v.mask_slots.push_back({s.at("byte_start").get<std::uint32_t>(),
                                    s.at("byte_end").get<std::uint32_t>(),
                                    s.at("line_start").get<std::uint32_t>(),
                                    s.at("line_end").get<std::uint32_t>()});
        }
        for (const auto& r : j.at("routes")) {
            Route route;
            route.behavior = parse_behavior(r.at("behavior").get<std::string>());
            for (const auto& x : r.at("slot_values")) {
                route.slot_values.push_back(x.is_null() ? std::nullopt
                                                        : std::optional<bool>(x.get<bool>()));
            }
            v.routes.push_back(std::move(route));
        }
        v.fills = j.at("fills").get<std::vector<std::string>>();
        v.source = j.at("source").get<std::string>();
        return v;
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError(std::string("variant record: ") + ex.what());
    }
}

}  // namespace vrbench::variant
