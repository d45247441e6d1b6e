#pragma once

#include <condition_variable>
#include <mutex>

#include "pcib/backends.hpp"

namespace pcib::backends {

/// Counting limiter for concurrent backend requests.
class InflightLimiter {
public:
    explicit InflightLimiter(int max) : available_(max) {}

    void acquire() {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [&] { return available_ > 0; });
        --available_;
    }

    bool try_acquire() {
        std::lock_guard<std::mutex> lock(mutex_);
        if (available_ <= 0) return false;
        --available_;
        return true;
    }

    void release() {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            ++available_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int available_;
};

struct InflightGuard {
    explicit InflightGuard(InflightLimiter& l) : limiter(l) { limiter.acquire(); }
    ~InflightGuard() { limiter.release(); }
    InflightGuard(const InflightGuard&) = delete;
    InflightGuard& operator=(const InflightGuard&) = delete;
    InflightLimiter& limiter;
};

/// OpenAI-style HTTP backend. Token likelihoods come from a
/// completion-scoring call with echoed logprobs; a backend that cannot
/// echo token logprobs raises CapabilityError rather than degrading.
/// Requests retry on connection failures and 5xx/429 with jittered
/// exponential backoff, and never exceed max_in_flight concurrently.
class RemoteLlmBackend : public LlmBackend {
public:
    explicit RemoteLlmBackend(BackendConfig cfg);

    TokenLogliks answer_token_logliks(
        const std::string& question, const std::string& answer,
        const std::optional<std::string>& context) override;
    std::vector<std::string> extract_claims(const std::string& answer,
                                            int max_claims) override;
    std::vector<std::string> paraphrase(const std::string& claim, int k,
                                        double temperature) override;
    std::vector<std::string> reasoning_traces(const std::string& question,
                                              const std::string& answer,
                                              int m) override;
    std::string model_name() const override { return cfg_.model_name; }

private:
    std::string chat(const std::string& system, const std::string& user,
                     double temperature);

    BackendConfig cfg_;
    InflightLimiter limiter_;
};

class RemoteNliBackend : public NliBackend {
public:
    explicit RemoteNliBackend(BackendConfig cfg);
    NliDistribution nli_probs(const std::string& premise,
                              const std::string& hypothesis) override;

private:
    BackendConfig cfg_;
    InflightLimiter limiter_;
};

/// Reads PCIB_BACKEND_URL / PCIB_BACKEND_KEY / PCIB_BACKEND_MODEL /
/// PCIB_NLI_URL / PCIB_NLI_KEY. The NLI endpoint defaults to the LLM
/// endpoint when unset.
Backends make_remote_backends_from_env();

bool remote_backend_configured();

}  // namespace pcib::backends
