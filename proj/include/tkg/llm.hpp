#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>

namespace tkg {

struct CompletionParams {
    double temperature = 0.0;
    std::uint64_t seed = 0;
    int max_tokens = 512;
};

// Backbone model contract. Implementations must be safe to call from several threads.
class LlmClient {
  public:
    virtual ~LlmClient() = default;
    // Throws LlmTransportError on transport failure.
    virtual std::string complete(std::string_view prompt, const CompletionParams& params) = 0;
    virtual std::string name() const = 0;
    // Mocks are held to stricter output checks than remote models.
    virtual bool is_mock() const { return false; }
};

// Deterministic stand-in: the reply is a pure function of (prompt, seed, jitter). It reads the
// task header and fields of the versioned templates and answers in the expected envelope:
//   gap_detect: echoes the salient tokens of the need (or seed paper title) as the query;
//   rerank:     score = round(100 * max(0, retrieval similarity)) (+/- jitter);
//   justify_*:  a sentence quoting a candidate paper title (and the dataset name).
class MockLlmClient : public LlmClient {
  public:
    explicit MockLlmClient(std::string name = "mock", int score_jitter = 0)
        : name_(std::move(name)), score_jitter_(score_jitter) {}

    std::string complete(std::string_view prompt, const CompletionParams& params) override;
    std::string name() const override { return name_; }
    bool is_mock() const override { return true; }

  private:
    std::string name_;
    int score_jitter_;
};

struct HttpLlmConfig {
    std::string endpoint;  // full URL of an OpenAI-compatible chat completions endpoint
    std::string api_key;
    std::string model;
    std::chrono::milliseconds timeout{30000};
};

class HttpLlmClient : public LlmClient {
  public:
    explicit HttpLlmClient(HttpLlmConfig config);
    std::string complete(std::string_view prompt, const CompletionParams& params) override;
    std::string name() const override { return config_.model; }

  private:
    HttpLlmConfig config_;
    std::string scheme_host_port_;
    std::string path_;
};

// Replaces {{name}} placeholders. Throws ContractViolation for a placeholder without a value.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

// Value of a "KEY: value" line in a prompt or reply ("" when absent). Multi-line blocks end at
// the next blank line or KEY: line.
std::string extract_field(std::string_view text, std::string_view key);
std::string extract_block(std::string_view text, std::string_view key);

}  // namespace tkg
