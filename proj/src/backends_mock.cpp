#include "pcib/backends.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "pcib/rng.hpp"

namespace pcib::backends {

namespace {

std::string lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::uint64_t hash_fields(std::initializer_list<std::string_view> fields,
                          std::uint64_t seed) {
    std::uint64_t h = fnv1a64_combine(0xcbf29ce484222325ull, seed);
    for (auto f : fields) {
        h = fnv1a64(f, h);
        h = fnv1a64("\x1f", h);  // field separator
    }
    return h;
}

// hash -> double in [0, 1)
double unit(std::uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

const std::unordered_map<std::string, std::string>& synonym_table() {
    static const std::unordered_map<std::string, std::string> table = {
        {"big", "large"},   {"large", "big"},   {"small", "tiny"},
        {"tiny", "small"},  {"fast", "quick"},  {"quick", "fast"},
        {"good", "fine"},   {"fine", "good"},   {"show", "display"},
        {"display", "show"}};
    return table;
}

const std::unordered_set<std::string>& negation_markers() {
    static const std::unordered_set<std::string> neg = {
        "not",   "no",     "never",  "none",   "cannot", "nor",
        "neither", "isnt", "arent",  "wasnt",  "werent", "dont",
        "doesnt", "didnt", "without", "nt"};
    return neg;
}

std::string join(const std::vector<std::string>& words) {
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i) out.push_back(' ');
        out += words[i];
    }
    return out;
}

}  // namespace

void TokenLogliks::validate() const {
    if (tokens.empty() || tokens.size() != logliks.size()) {
        throw ValidationError("TokenLogliks: tokens/logliks must be equal-length and non-empty");
    }
    for (double l : logliks) {
        if (!std::isfinite(l) || l > 0.0) {
            throw ValidationError("TokenLogliks: every loglik must be finite and <= 0");
        }
    }
}

void NliDistribution::validate() const {
    for (double v : {entailment, neutral, contradiction}) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
            throw ValidationError("NliDistribution: probabilities must be in [0,1]");
        }
    }
    double sum = entailment + neutral + contradiction;
    if (std::abs(sum - 1.0) > 1e-6) {
        throw ValidationError("NliDistribution: probabilities must sum to 1");
    }
}

NliDistribution NliDistribution::normalized(double e, double n, double c) {
    e = std::max(0.0, e);
    n = std::max(0.0, n);
    c = std::max(0.0, c);
    double sum = e + n + c;
    if (sum <= 0.0) return {1.0 / 3, 1.0 / 3, 1.0 / 3};
    return {e / sum, n / sum, c / sum};
}

math::ProbDist NliDistribution::to_prob_dist() const {
    NliDistribution r = normalized(entailment, neutral, contradiction);
    return math::ProbDist({r.entailment, r.neutral, r.contradiction});
}

void BackendConfig::validate() const {
    if (max_in_flight < 1) throw ValidationError("max_in_flight must be >= 1");
    if (retries < 0 || retries > 5) throw ValidationError("retries must be in [0,5]");
    if (timeout_seconds <= 0) throw ValidationError("timeout must be positive");
}

std::vector<std::string> whitespace_tokens(const std::string& text) {
    std::vector<std::string> tokens;
    std::istringstream in(text);
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    return tokens;
}

std::vector<std::string> split_sentences(const std::string& text) {
    std::vector<std::string> sentences;
    std::string cur;
    for (char c : text) {
        if (c == '.' || c == '!' || c == '?') {
            std::string t = trim(cur);
            if (!t.empty()) sentences.push_back(t);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    std::string t = trim(cur);
    if (!t.empty()) sentences.push_back(t);
    return sentences;
}

TokenLogliks MockBackend::answer_token_logliks(
    const std::string& question, const std::string& answer,
    const std::optional<std::string>& context) {
    calls_.fetch_add(1);
    if (trim(question).empty() || trim(answer).empty()) {
        throw ValidationError("answer_token_logliks: question and answer must be non-empty");
    }

    TokenLogliks out;
    out.tokens = whitespace_tokens(answer);
    if (out.tokens.empty()) {
        throw ValidationError("answer_token_logliks: answer has no tokens");
    }

    std::unordered_set<std::string> ctx_words;
    if (context) ctx_words = math::word_set(*context);

    out.logliks.reserve(out.tokens.size());
    for (std::size_t i = 0; i < out.tokens.size(); ++i) {
        const std::string& tok = out.tokens[i];
        std::uint64_t h = hash_fields({"loglik", question, tok,
                                       std::to_string(i)}, seed_);
        double base = -(0.5 + 3.0 * unit(h));
        double ll = base;
        if (context) {
            // context that "explains" a token raises its likelihood
            auto words = math::word_set(tok);
            bool grounded = !words.empty() &&
                            std::all_of(words.begin(), words.end(),
                                        [&](const std::string& w) {
                                            return ctx_words.count(w) > 0;
                                        });
            if (grounded) {
                std::uint64_t hb = hash_fields({"bonus", tok}, seed_);
                ll = std::min(-1e-3, base + 0.6 + 0.4 * unit(hb));
            }
        }
        out.logliks.push_back(ll);
    }
    out.validate();
    return out;
}

std::vector<std::string> MockBackend::extract_claims(const std::string& answer,
                                                     int max_claims) {
    calls_.fetch_add(1);
    if (trim(answer).empty()) {
        throw ValidationError("extract_claims: answer must be non-empty");
    }
    if (max_claims < 1) throw ValidationError("extract_claims: max_claims must be >= 1");

    std::vector<std::string> claims = split_sentences(answer);
    if (claims.empty()) claims.push_back(trim(answer));
    if (claims.size() > static_cast<std::size_t>(max_claims)) {
        claims.resize(static_cast<std::size_t>(max_claims));
    }
    return claims;
}

std::vector<std::string> MockBackend::paraphrase(const std::string& claim, int k,
                                                 double temperature) {
    calls_.fetch_add(1);
    if (trim(claim).empty()) throw ValidationError("paraphrase: claim must be non-empty");
    if (k < 1) throw ValidationError("paraphrase: k must be >= 1");
    if (temperature < 0.0 || temperature > 2.0) {
        throw ValidationError("paraphrase: temperature must be in [0,2]");
    }

    std::vector<std::string> variants;
    variants.reserve(static_cast<std::size_t>(k));
    std::vector<std::string> words = whitespace_tokens(claim);
    for (int j = 0; j < k; ++j) {
        std::vector<std::string> v = words;
        if (v.size() >= 2) {
            std::uint64_t h = hash_fields({"rot", claim, std::to_string(j)}, seed_);
            std::size_t rot = 1 + h % (v.size() - 1);
            std::rotate(v.begin(), v.begin() + static_cast<long>(rot), v.end());
        }
        // occasional synonym swap, scaled by temperature
        for (std::size_t w = 0; w < v.size(); ++w) {
            auto it = synonym_table().find(lower(v[w]));
            if (it == synonym_table().end()) continue;
            std::uint64_t h = hash_fields({"syn", claim, std::to_string(j), v[w]}, seed_);
            if (unit(h) < 0.4 * temperature) v[w] = it->second;
        }
        std::string text = join(v);
        variants.push_back(text.empty() ? claim : text);
    }
    return variants;
}

std::vector<std::string> MockBackend::reasoning_traces(const std::string& question,
                                                       const std::string& answer,
                                                       int m) {
    calls_.fetch_add(1);
    if (m < 2) throw ValidationError("reasoning_traces: m must be >= 2");
    if (trim(question).empty() || trim(answer).empty()) {
        throw ValidationError("reasoning_traces: question and answer must be non-empty");
    }

    static const std::array<const char*, 6> fillers = {
        "evidently", "hence", "thus", "accordingly", "consequently", "plainly"};

    std::vector<std::string> traces;
    traces.reserve(static_cast<std::size_t>(m));
    std::vector<std::string> words = whitespace_tokens(answer);
    for (int j = 0; j < m; ++j) {
        std::vector<std::string> v = words;
        if (v.size() >= 2) {
            std::uint64_t h = hash_fields({"trace-rot", question, answer,
                                           std::to_string(j)}, seed_);
            std::size_t rot = h % v.size();
            std::rotate(v.begin(), v.begin() + static_cast<long>(rot), v.end());
        }
        std::uint64_t hf = hash_fields({"trace-fill", question, answer,
                                        std::to_string(j)}, seed_);
        traces.push_back(std::string("because ") + join(v) + " " +
                         fillers[hf % fillers.size()]);
    }
    return traces;
}

NliDistribution MockBackend::nli_probs(const std::string& premise,
                                       const std::string& hypothesis) {
    calls_.fetch_add(1);
    if (trim(premise).empty() || trim(hypothesis).empty()) {
        throw ValidationError("nli_probs: premise and hypothesis must be non-empty");
    }

    auto p = math::word_set(premise);
    auto h = math::word_set(hypothesis);

    bool p_neg = false, h_neg = false;
    std::unordered_set<std::string> pc, hc;  // content words, negation stripped
    for (const auto& w : p) {
        if (negation_markers().count(w)) p_neg = true; else pc.insert(w);
    }
    for (const auto& w : h) {
        if (negation_markers().count(w)) h_neg = true; else hc.insert(w);
    }

    // containment of hypothesis content in premise content
    double cont = 0.0;
    if (!hc.empty()) {
        std::size_t inter = 0;
        for (const auto& w : hc) inter += pc.count(w);
        cont = static_cast<double>(inter) / static_cast<double>(hc.size());
    }

    double e, n, c;
    if (p_neg != h_neg && cont >= 0.5) {
        // negation marker on one side only, content mostly shared
        c = 0.55 + 0.35 * cont;
        e = 0.2 * (1.0 - c);
        n = 1.0 - c - e;
    } else if (cont >= 0.85) {
        e = 0.88 + 0.10 * cont;
        c = 0.02;
        n = 1.0 - e - c;
    } else if (cont >= 0.4) {
        e = 0.30 + 0.45 * (cont - 0.4) / 0.45;
        c = 0.10;
        n = 1.0 - e - c;
    } else {
        n = 0.70;
        e = 0.12 + 0.15 * cont;
        c = 1.0 - n - e;
    }
    NliDistribution out = NliDistribution::normalized(e, n, c);
    out.validate();
    return out;
}

Backends make_mock_backends(std::uint64_t seed) {
    auto mock = std::make_shared<MockBackend>(seed);
    return Backends{mock, mock};
}

}  // namespace pcib::backends
