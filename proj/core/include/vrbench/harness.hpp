#pragma once

// Runs question sets against chat-completion endpoints, one fresh request
// per question (or per safe/unsafe pair).

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vrbench/question.hpp"

namespace vrbench::harness {

enum class Mode : std::uint8_t { Zero, ICL };
std::string_view mode_name(Mode m);
Mode parse_mode(std::string_view text);

struct RetryPolicy {
    std::uint32_t max_retries = 3;
    // Delay before retry k is backoff_seconds * 2^k.
    double backoff_seconds = 1.0;
};

struct ModelConfig {
    std::string name;
    std::string endpoint_url;
    // Model id sent in the request body; defaults to `name`.
    std::string model;
    // Environment variable holding the bearer token; empty for none.
    std::string auth_env;
    double temperature = 0.0;
    std::uint32_t max_tokens = 50;
    double request_timeout = 60.0;
    std::uint32_t max_parallel = 1;
    RetryPolicy retry;

    /// Throws ConfigError.
    void validate() const;
};

ModelConfig model_config_from_json(std::string_view text);

struct Demo {
    std::string question_id;
    std::string prompt;
    std::vector<question::Choice> choices;
    std::string answer;
    std::string explanation;
};

struct IclDemoSet {
    std::map<question::Family, std::vector<Demo>> demos;

    /// JSON object keyed by family name, each a list of demos. Throws
    /// ConfigError.
    static IclDemoSet from_json(std::string_view text);
};

inline constexpr std::string_view kSystemPersona =
    "You are a code security expert who analyzes C programs for weaknesses. "
    "Reason about the code exactly as written and answer the multiple-choice "
    "question with the label of one option.";

struct Prompt {
    std::string system;
    std::string user;

    std::string text() const { return system + "\n\n" + user; }
};

/// Throws MissingDemos in ICL mode when the family has no demo or a demo
/// shares an id or prompt with the question.
Prompt build_prompt(const question::Question& q, Mode mode, const IclDemoSet* demos = nullptr);
/// Both questions in one prompt, answered as "Answer 1: X" / "Answer 2: Y".
Prompt build_pair_prompt(const question::Question& first, const question::Question& second,
                         Mode mode, const IclDemoSet* demos = nullptr);

/// Non-success HTTP exchange; status 0 means the transport failed.
class HttpStatusError : public HttpError {
public:
    HttpStatusError(int status, const std::string& message)
        : HttpError(message), status_(status) {}
    int status() const { return status_; }
    bool retryable() const { return status_ == 0 || status_ >= 500; }

private:
    int status_;
};

/// Sends one single-turn request. Implementations throw Timeout,
/// RateLimited or HttpStatusError.
class ModelClient {
public:
    virtual ~ModelClient() = default;
    virtual std::string complete(const ModelConfig& cfg, const Prompt& prompt) = 0;
};

/// Chat-completion JSON over HTTP(S).
class HttpModelClient : public ModelClient {
public:
    std::string complete(const ModelConfig& cfg, const Prompt& prompt) override;
};

/// Request body sent by HttpModelClient.
std::string chat_request_body(const ModelConfig& cfg, const Prompt& prompt);

struct QueryResult {
    std::string text;
    std::uint32_t retries = 0;
    // Set when every attempt failed.
    std::optional<std::string> error;
};

using Sleeper = std::function<void(std::chrono::duration<double>)>;

/// Retries timeouts, rate limits and 5xx responses per cfg.retry.
QueryResult query_model(const ModelConfig& cfg, const Prompt& prompt, ModelClient& client,
                        const Sleeper& sleep = {});

inline constexpr std::string_view kParseFail = "ParseFail";
inline constexpr std::string_view kUnknownAnswer = "Unknown";

/// A label from `labels`, the unknown option's label for "I don't know"
/// style answers (kUnknownAnswer when there is none), or kParseFail.
std::string extract_choice(std::string_view raw, const std::vector<std::string>& labels,
                           std::string_view unknown_label = {});
/// Every distinct label named in the answer, for strict multi-answer scoring.
std::vector<std::string> extract_all_choices(std::string_view raw,
                                             const std::vector<std::string>& labels);
/// Answers for the two numbered slots.
std::pair<std::string, std::string> extract_pair(std::string_view raw,
                                                 const std::vector<std::string>& first_labels,
                                                 std::string_view first_unknown,
                                                 const std::vector<std::string>& second_labels,
                                                 std::string_view second_unknown);

struct EvalRecord {
    std::string question_id;
    std::string model;
    Mode mode = Mode::Zero;
    double temperature = 0.0;
    std::string raw_response;
    std::string extracted;
    bool correct = false;
    double latency = 0.0;
    std::uint32_t retries = 0;
    std::optional<std::string> error;
    // Pairwise runs: shared id of the pair and the 1-based slot.
    std::string pair_id;
    std::uint32_t pair_slot = 0;
};

std::string record_to_json(const EvalRecord& r, bool with_latency = true);
EvalRecord record_from_json(std::string_view line);

struct RunOptions {
    Mode mode = Mode::Zero;
    const IclDemoSet* demos = nullptr;
    // Multi-answer items need every answer label.
    bool strict = false;
    Sleeper sleep;
};

/// One record per question, in input order.
std::vector<EvalRecord> run_suite(const std::vector<question::Question>& questions,
                                  const ModelConfig& cfg, ModelClient& client,
                                  const RunOptions& options = {});

using QuestionPair = std::pair<question::Question, question::Question>;

/// Pairs from one base path with the safe question first. Throws
/// IncompletePair when a base lacks a partner, unless `skip_incomplete`.
std::vector<QuestionPair> make_pairs(const std::vector<question::Question>& questions,
                                     question::Family family, bool skip_incomplete = false);

/// One request per pair. Throws IncompletePair when a pair spans two bases.
std::vector<std::pair<EvalRecord, EvalRecord>> run_pairwise(const std::vector<QuestionPair>& pairs,
                                                            const ModelConfig& cfg,
                                                            ModelClient& client,
                                                            const RunOptions& options = {});

/// The suite once per temperature.
std::map<double, std::vector<EvalRecord>> run_temperature_sweep(
    const std::vector<question::Question>& questions, const ModelConfig& cfg,
    const std::vector<double>& temperatures, ModelClient& client, const RunOptions& options = {});

}  // namespace vrbench::harness
