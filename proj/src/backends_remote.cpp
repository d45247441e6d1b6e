#include "pcib/remote_backend.hpp"

#include <cctype>
#include <chrono>
#include <cstdlib>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace pcib::backends {

namespace {

using nlohmann::json;

// fixed prompt templates, versioned with the artifact
constexpr const char* kClaimSystemPrompt =
    "Split the user's answer into its atomic factual claims. "
    "Output one claim per line with no numbering and no extra text.";
constexpr const char* kParaphraseSystemPrompt =
    "Rewrite the user's claim preserving its exact meaning. "
    "Output one paraphrase per line with no numbering and no extra text.";
constexpr const char* kTraceSystemPrompt =
    "Explain step by step why the given answer to the question is true. "
    "Output each independent explanation on its own line.";

struct SplitUrl {
    std::string host;  // scheme://host[:port]
    std::string path_prefix;
};

SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("backend URL must start with http(s)://: " + url);
    }
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, ""};
    std::string prefix = url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, path_start), prefix};
}

void sleep_backoff(int attempt) {
    static thread_local std::mt19937 jitter_rng(
        static_cast<unsigned>(std::chrono::steady_clock::now().time_since_epoch().count()));
    double base_ms = 100.0 * static_cast<double>(1 << attempt);
    double jitter = 0.75 + 0.5 * (static_cast<double>(jitter_rng()) /
                                  static_cast<double>(std::mt19937::max()));
    std::this_thread::sleep_for(
        std::chrono::milliseconds(static_cast<long>(base_ms * jitter)));
}

json post_json(const BackendConfig& cfg, InflightLimiter& limiter,
               const std::string& path, const json& body) {
    SplitUrl url = split_url(cfg.base_url);
    std::string full_path = url.path_prefix + path;

    httplib::Headers headers;
    if (!cfg.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + cfg.api_key);
    }

    std::string payload = body.dump();
    std::string last_error = "no attempt made";
    std::optional<int> last_status;

    for (int attempt = 0; attempt <= cfg.retries; ++attempt) {
        if (attempt > 0) sleep_backoff(attempt - 1);

        InflightGuard guard(limiter);
        httplib::Client client(url.host);
        auto timeout = std::chrono::milliseconds(
            static_cast<long>(cfg.timeout_seconds * 1000.0));
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);

        auto res = client.Post(full_path, headers, payload, "application/json");
        if (!res) {
            last_error = "connection failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "backend returned retryable status";
            last_status = res->status;
            continue;
        }
        if (res->status != 200) {
            throw TransportError("backend request to " + full_path + " failed",
                                 res->status);
        }
        try {
            return json::parse(res->body);
        } catch (const json::parse_error& e) {
            throw TransportError("backend returned invalid JSON from " + full_path +
                                 ": " + e.what());
        }
    }
    if (last_status) {
        throw TransportError(last_error + " after " + std::to_string(cfg.retries + 1) +
                                 " attempts to " + full_path,
                             *last_status);
    }
    throw TransportError(last_error + " after " + std::to_string(cfg.retries + 1) +
                         " attempts to " + full_path);
}

std::string strip_list_prefix(std::string line) {
    std::size_t b = line.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);

    // "- item" / "* item"
    if (line.size() > 2 && (line[0] == '-' || line[0] == '*') &&
        (line[1] == ' ' || line[1] == '\t')) {
        return line.substr(line.find_first_not_of(" \t", 1));
    }
    // "3. item" / "3) item" — only when the digits are list numbering
    std::size_t d = 0;
    while (d < line.size() && std::isdigit(static_cast<unsigned char>(line[d]))) ++d;
    if (d > 0 && d + 1 < line.size() && (line[d] == '.' || line[d] == ')') &&
        (line[d + 1] == ' ' || line[d + 1] == '\t')) {
        return line.substr(line.find_first_not_of(" \t", d + 1));
    }
    return line;
}

std::vector<std::string> non_empty_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::string cleaned = strip_list_prefix(line);
        if (!cleaned.empty()) lines.push_back(cleaned);
    }
    return lines;
}

}  // namespace

RemoteLlmBackend::RemoteLlmBackend(BackendConfig cfg)
    : cfg_(std::move(cfg)), limiter_(cfg_.max_in_flight) {
    cfg_.validate();
    if (cfg_.base_url.empty()) throw ConfigError("LLM backend URL is empty");
}

TokenLogliks RemoteLlmBackend::answer_token_logliks(
    const std::string& question, const std::string& answer,
    const std::optional<std::string>& context) {
    if (question.empty() || answer.empty()) {
        throw ValidationError("answer_token_logliks: question and answer must be non-empty");
    }
    std::string scaffold;
    if (context) {
        scaffold = "Context:\n" + *context + "\n\nQuestion: " + question + "\nAnswer:\n";
    } else {
        scaffold = "Question: " + question + "\nAnswer:\n";
    }
    json body = {{"model", cfg_.model_name},
                 {"prompt", scaffold + answer},
                 {"max_tokens", 0},
                 {"echo", true},
                 {"logprobs", 0},
                 {"temperature", 0.0}};
    json res = post_json(cfg_, limiter_, "/v1/completions", body);

    const json* lp = nullptr;
    if (res.contains("choices") && res["choices"].is_array() &&
        !res["choices"].empty() && res["choices"][0].contains("logprobs") &&
        res["choices"][0]["logprobs"].is_object()) {
        lp = &res["choices"][0]["logprobs"];
    }
    if (!lp || !lp->contains("tokens") || !lp->contains("token_logprobs") ||
        !lp->contains("text_offset")) {
        throw CapabilityError(
            "backend cannot echo token logprobs; uptake requires token-level "
            "likelihoods over the answer (completions endpoint with echo+logprobs)");
    }

    const auto& tokens = (*lp)["tokens"];
    const auto& logprobs = (*lp)["token_logprobs"];
    const auto& offsets = (*lp)["text_offset"];
    if (tokens.size() != logprobs.size() || tokens.size() != offsets.size()) {
        throw CapabilityError("backend logprob arrays are inconsistent");
    }

    const auto answer_start = static_cast<long>(scaffold.size());
    TokenLogliks out;
    bool boundary_clean = false;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        long off = offsets[i].get<long>();
        if (off < answer_start) continue;
        if (off == answer_start) boundary_clean = true;
        if (logprobs[i].is_null()) {
            throw CapabilityError("backend returned null logprob inside the answer span");
        }
        out.tokens.push_back(tokens[i].get<std::string>());
        out.logliks.push_back(std::min(0.0, logprobs[i].get<double>()));
    }
    if (out.tokens.empty() || !boundary_clean) {
        throw CapabilityError(
            "tokenization does not align with the answer boundary; cannot score "
            "the same answer tokens with and without context");
    }
    out.validate();
    return out;
}

std::string RemoteLlmBackend::chat(const std::string& system, const std::string& user,
                                   double temperature) {
    json body = {{"model", cfg_.model_name},
                 {"messages", json::array({{{"role", "system"}, {"content", system}},
                                           {{"role", "user"}, {"content", user}}})},
                 {"temperature", temperature}};
    json res = post_json(cfg_, limiter_, "/v1/chat/completions", body);
    try {
        return res.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
        throw TransportError("chat response missing choices[0].message.content");
    }
}

std::vector<std::string> RemoteLlmBackend::extract_claims(const std::string& answer,
                                                          int max_claims) {
    if (answer.empty()) throw ValidationError("extract_claims: answer must be non-empty");
    if (max_claims < 1) throw ValidationError("extract_claims: max_claims must be >= 1");

    auto lines = non_empty_lines(chat(kClaimSystemPrompt, answer, 0.0));
    if (lines.empty()) lines.push_back(answer);  // fallback: whole answer
    if (lines.size() > static_cast<std::size_t>(max_claims)) {
        lines.resize(static_cast<std::size_t>(max_claims));
    }
    return lines;
}

std::vector<std::string> RemoteLlmBackend::paraphrase(const std::string& claim, int k,
                                                      double temperature) {
    if (claim.empty()) throw ValidationError("paraphrase: claim must be non-empty");
    if (k < 1) throw ValidationError("paraphrase: k must be >= 1");
    if (temperature < 0.0 || temperature > 2.0) {
        throw ValidationError("paraphrase: temperature must be in [0,2]");
    }

    std::string user = "Rewrite this claim " + std::to_string(k) +
                       " different ways:\n" + claim;
    auto lines = non_empty_lines(chat(kParaphraseSystemPrompt, user, temperature));
    lines.resize(static_cast<std::size_t>(k), claim);  // pad with the original
    return lines;
}

std::vector<std::string> RemoteLlmBackend::reasoning_traces(const std::string& question,
                                                            const std::string& answer,
                                                            int m) {
    if (m < 2) throw ValidationError("reasoning_traces: m must be >= 2");
    if (question.empty() || answer.empty()) {
        throw ValidationError("reasoning_traces: question and answer must be non-empty");
    }
    std::string user = "Question: " + question + "\nAnswer: " + answer + "\nGive " +
                       std::to_string(m) + " independent explanations.";
    auto lines = non_empty_lines(chat(kTraceSystemPrompt, user, 0.7));
    lines.resize(static_cast<std::size_t>(m), answer);
    return lines;
}

RemoteNliBackend::RemoteNliBackend(BackendConfig cfg)
    : cfg_(std::move(cfg)), limiter_(cfg_.max_in_flight) {
    cfg_.validate();
    if (cfg_.base_url.empty()) throw ConfigError("NLI backend URL is empty");
}

NliDistribution RemoteNliBackend::nli_probs(const std::string& premise,
                                            const std::string& hypothesis) {
    if (premise.empty() || hypothesis.empty()) {
        throw ValidationError("nli_probs: premise and hypothesis must be non-empty");
    }
    json body = {{"premise", premise}, {"hypothesis", hypothesis}};
    if (!cfg_.model_name.empty()) body["model"] = cfg_.model_name;
    json res = post_json(cfg_, limiter_, "/v1/nli", body);

    if (!res.contains("entailment") || !res.contains("neutral") ||
        !res.contains("contradiction")) {
        throw TransportError("NLI response missing entailment/neutral/contradiction");
    }
    // renormalize defensively; raw backend output may drift off the simplex
    NliDistribution out = NliDistribution::normalized(res["entailment"].get<double>(),
                                                      res["neutral"].get<double>(),
                                                      res["contradiction"].get<double>());
    out.validate();
    return out;
}

namespace {
std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : fallback;
}
}  // namespace

bool remote_backend_configured() {
    const char* v = std::getenv("PCIB_BACKEND_URL");
    return v && *v;
}

Backends make_remote_backends_from_env() {
    BackendConfig llm;
    llm.base_url = env_or("PCIB_BACKEND_URL", "");
    llm.api_key = env_or("PCIB_BACKEND_KEY", "");
    llm.model_name = env_or("PCIB_BACKEND_MODEL", "default");
    if (llm.base_url.empty()) {
        throw ConfigError(
            "no backend configured: set PCIB_BACKEND_URL or run with --mock");
    }
    BackendConfig nli = llm;
    nli.base_url = env_or("PCIB_NLI_URL", llm.base_url);
    nli.api_key = env_or("PCIB_NLI_KEY", llm.api_key);

    return Backends{std::make_shared<RemoteLlmBackend>(llm),
                    std::make_shared<RemoteNliBackend>(nli)};
}

}  // namespace pcib::backends
