#include <atomic>
#include <cmath>
#include <cstdlib>
#include <regex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "vrbench/harness.hpp"

namespace vrbench::harness {

using question::Family;
using question::Question;

namespace {

struct Endpoint {
    std::string origin;
    std::string path;
};

Endpoint parse_endpoint(const std::string& url) {
    static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
    std::smatch m;
    if (!std::regex_match(url, m, re)) throw ConfigError("bad endpoint url: " + url);
    return {m[1].str(), m[2].matched ? m[2].str() : "/v1/chat/completions"};
}

std::string response_text(const std::string& body) {
    auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded()) throw HttpStatusError(200, "response is not JSON");
    if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
        const auto& c = j["choices"][0];
        if (c.contains("message") && c["message"].contains("content") &&
            c["message"]["content"].is_string()) {
            return c["message"]["content"].get<std::string>();
        }
        if (c.contains("text") && c["text"].is_string()) return c["text"].get<std::string>();
    }
    throw HttpStatusError(200, "response has no completion text");
}

void default_sleep(std::chrono::duration<double> d) { std::this_thread::sleep_for(d); }

bool scored_correct(const Question& q, const std::string& raw, const std::string& extracted,
                    bool strict) {
    if (extracted == kParseFail || extracted == kUnknownAnswer) return false;
    if (strict && q.answer_labels.size() > 1) {
        return q.is_correct(extract_all_choices(raw, q.labels()), true);
    }
    return q.is_correct({extracted});
}

EvalRecord base_record(const Question& q, const ModelConfig& cfg, const RunOptions& options) {
    EvalRecord r;
    r.question_id = q.id;
    r.model = cfg.name;
    r.mode = options.mode;
    r.temperature = cfg.temperature;
    return r;
}

EvalRecord ask_one(const Question& q, const ModelConfig& cfg, ModelClient& client,
                   const RunOptions& options) {
    auto r = base_record(q, cfg, options);
    auto start = std::chrono::steady_clock::now();
    try {
        auto result = query_model(cfg, build_prompt(q, options.mode, options.demos), client,
                                  options.sleep);
        r.retries = result.retries;
        r.error = result.error;
        r.raw_response = result.text;
        r.extracted = result.error ? std::string(kParseFail)
                                   : extract_choice(result.text, q.labels(), q.unknown_label());
    } catch (const Error& ex) {
        r.error = ex.what();
        r.extracted = std::string(kParseFail);
    }
    r.correct = scored_correct(q, r.raw_response, r.extracted, options.strict);
    r.latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

// Runs task(i) for i in [0, n) on at most `parallel` threads.
template <class Task>
void run_bounded(std::size_t n, std::uint32_t parallel, Task task) {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) task(i);
    };
    std::size_t threads = std::min<std::size_t>(std::max<std::uint32_t>(parallel, 1), n);
    if (threads <= 1) {
        worker();
        return;
    }
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

std::string_view answer_category(const Question& q) {
    if (q.answer_labels.empty()) return {};
    const auto* c = q.choice(q.answer_labels.front());
    return c ? std::string_view(c->category) : std::string_view();
}

}  // namespace

std::string HttpModelClient::complete(const ModelConfig& cfg, const Prompt& prompt) {
    auto ep = parse_endpoint(cfg.endpoint_url);
    // A fresh connection per request keeps questions fully independent.
    httplib::Client cli(ep.origin);
    auto secs = std::chrono::duration<double>(cfg.request_timeout);
    auto micros = std::chrono::duration_cast<std::chrono::microseconds>(secs);
    cli.set_connection_timeout(micros);
    cli.set_read_timeout(micros);
    cli.set_write_timeout(micros);

    httplib::Headers headers;
    if (!cfg.auth_env.empty()) {
        const char* token = std::getenv(cfg.auth_env.c_str());
        if (!token) throw ConfigError("environment variable " + cfg.auth_env + " is not set");
        headers.emplace("Authorization", std::string("Bearer ") + token);
    }
    auto res = cli.Post(ep.path, headers, chat_request_body(cfg, prompt), "application/json");
    if (!res) {
        auto err = res.error();
        if (err == httplib::Error::Read || err == httplib::Error::Write ||
            err == httplib::Error::ConnectionTimeout) {
            throw Timeout("request to " + cfg.endpoint_url + " timed out");
        }
        throw HttpStatusError(0, "request to " + cfg.endpoint_url + " failed: " + httplib::to_string(err));
    }
    if (res->status == 429) throw RateLimited("rate limited by " + cfg.endpoint_url);
    if (res->status < 200 || res->status >= 300) {
        throw HttpStatusError(res->status, "HTTP " + std::to_string(res->status) + " from " +
                                               cfg.endpoint_url);
    }
    return response_text(res->body);
}

QueryResult query_model(const ModelConfig& cfg, const Prompt& prompt, ModelClient& client,
                        const Sleeper& sleep) {
    const Sleeper& nap = sleep ? sleep : Sleeper(default_sleep);
    QueryResult out;
    for (std::uint32_t attempt = 0;; ++attempt) {
        std::string failure;
        try {
            out.text = client.complete(cfg, prompt);
            out.error.reset();
            return out;
        } catch (const Timeout& ex) {
            failure = ex.what();
        } catch (const RateLimited& ex) {
            failure = ex.what();
        } catch (const HttpStatusError& ex) {
            if (!ex.retryable()) {
                out.error = ex.what();
                return out;
            }
            failure = ex.what();
        }
        if (attempt >= cfg.retry.max_retries) {
            out.error = failure;
            return out;
        }
        ++out.retries;
        nap(std::chrono::duration<double>(cfg.retry.backoff_seconds * std::pow(2.0, attempt)));
    }
}

std::string record_to_json(const EvalRecord& r, bool with_latency) {
    nlohmann::ordered_json j{{"question_id", r.question_id},
                             {"model", r.model},
                             {"mode", mode_name(r.mode)},
                             {"temperature", r.temperature},
                             {"raw_response", r.raw_response},
                             {"extracted", r.extracted},
                             {"correct", r.correct}};
    if (with_latency) j["latency"] = r.latency;
    j["retries"] = r.retries;
    if (r.error) j["error"] = *r.error;
    if (!r.pair_id.empty()) {
        j["pair_id"] = r.pair_id;
        j["pair_slot"] = r.pair_slot;
    }
    return j.dump();
}

EvalRecord record_from_json(std::string_view line) {
    try {
        auto j = nlohmann::json::parse(line);
        EvalRecord r;
        r.question_id = j.at("question_id").get<std::string>();
        r.model = j.at("model").get<std::string>();
        r.mode = parse_mode(j.at("mode").get<std::string>());
        r.temperature = j.value("temperature", 0.0);
        r.raw_response = j.value("raw_response", "");
        r.extracted = j.at("extracted").get<std::string>();
        r.correct = j.at("correct").get<bool>();
        r.latency = j.value("latency", 0.0);
        r.retries = j.value("retries", 0U);
        if (j.contains("error")) r.error = j["error"].get<std::string>();
        r.pair_id = j.value("pair_id", "");
        r.pair_slot = j.value("pair_slot", 0U);
        return r;
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError(std::string("response record: ") + ex.what());
    }
}

std::vector<EvalRecord> run_suite(const std::vector<Question>& questions, const ModelConfig& cfg,
                                  ModelClient& client, const RunOptions& options) {
    cfg.validate();
    std::vector<EvalRecord> records(questions.size());
    run_bounded(questions.size(), cfg.max_parallel,
                [&](std::size_t i) { records[i] = ask_one(questions[i], cfg, client, options); });
    return records;
}

std::vector<QuestionPair> make_pairs(const std::vector<Question>& questions, Family family,
                                     bool skip_incomplete) {
    // key -> (safe, unsafe)
    std::map<std::string, std::pair<const Question*, const Question*>> slots;
    for (const auto& q : questions) {
        if (q.family != family) continue;
        auto cat = answer_category(q);
        bool safe = cat == question::category::kSafe;
        if (!safe && cat != question::category::kUnsafe) continue;
        const auto& p = q.provenance;
        auto key = p.base_path + "|" + p.structure + "|" + std::to_string(p.injection_count);
        auto& slot = slots[key];
        (safe ? slot.first : slot.second) = &q;
    }
    std::vector<QuestionPair> out;
    for (const auto& [key, slot] : slots) {
        if (!slot.first || !slot.second) {
            if (skip_incomplete) continue;
            throw IncompletePair("no safe/unsafe partner for " + key);
        }
        out.emplace_back(*slot.first, *slot.second);
    }
    return out;
}

std::vector<std::pair<EvalRecord, EvalRecord>> run_pairwise(const std::vector<QuestionPair>& pairs,
                                                            const ModelConfig& cfg,
                                                            ModelClient& client,
                                                            const RunOptions& options) {
    cfg.validate();
    for (const auto& [a, b] : pairs) {
        if (a.provenance.base_path != b.provenance.base_path) {
            throw IncompletePair("pair " + a.id + "/" + b.id + " spans two base files");
        }
    }
    std::vector<std::pair<EvalRecord, EvalRecord>> out(pairs.size());
    run_bounded(pairs.size(), cfg.max_parallel, [&](std::size_t i) {
        const auto& [a, b] = pairs[i];
        auto ra = base_record(a, cfg, options);
        auto rb = base_record(b, cfg, options);
        ra.pair_id = rb.pair_id = hex_id(fnv1a(a.id + "|" + b.id));
        ra.pair_slot = 1;
        rb.pair_slot = 2;
        auto start = std::chrono::steady_clock::now();
        try {
            auto result = query_model(cfg, build_pair_prompt(a, b, options.mode, options.demos),
                                      client, options.sleep);
            ra.raw_response = rb.raw_response = result.text;
            ra.retries = rb.retries = result.retries;
            ra.error = rb.error = result.error;
            if (result.error) {
                ra.extracted = rb.extracted = std::string(kParseFail);
            } else {
                auto [x, y] = extract_pair(result.text, a.labels(), a.unknown_label(), b.labels(),
                                           b.unknown_label());
                ra.extracted = x;
                rb.extracted = y;
            }
        } catch (const Error& ex) {
            ra.error = rb.error = std::string(ex.what());
            ra.extracted = rb.extracted = std::string(kParseFail);
        }
        ra.correct = scored_correct(a, "", ra.extracted, false);
        rb.correct = scored_correct(b, "", rb.extracted, false);
        ra.latency = rb.latency =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out[i] = {std::move(ra), std::move(rb)};
    });
    return out;
}

std::map<double, std::vector<EvalRecord>> run_temperature_sweep(
    const std::vector<Question>& questions, const ModelConfig& cfg,
    const std::vector<double>& temperatures, ModelClient& client, const RunOptions& options) {
    std::map<double, std::vector<EvalRecord>> out;
    for (double t : temperatures) {
        auto c = cfg;
        c.temperature = t;
        out[t] = run_suite(questions, c, client, options);
    }
    return out;
}

}  // namespace vrbench::harness
