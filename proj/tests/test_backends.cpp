#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cctype>
#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "pcib/backends.hpp"
#include "pcib/remote_backend.hpp"

using namespace pcib;
using namespace pcib::backends;

TEST_CASE("mock logliks are deterministic and whitespace-segmented") {
    MockBackend mock(7);
    auto a = mock.answer_token_logliks("q?", "a b", std::string("ctx"));
    auto b = mock.answer_token_logliks("q?", "a b", std::string("ctx"));
    CHECK(a.tokens == b.tokens);
    CHECK(a.logliks == b.logliks);
    CHECK(a.tokens.size() == 2);

    // same segmentation with and without context
    auto prior = mock.answer_token_logliks("q?", "a b", std::nullopt);
    CHECK(prior.tokens == a.tokens);
    for (double l : a.logliks) CHECK(l <= 0.0);

    // different seed, different stream
    MockBackend other(8);
    auto c = other.answer_token_logliks("q?", "a b", std::string("ctx"));
    CHECK(c.logliks != a.logliks);
}

TEST_CASE("mock logliks reward context-grounded tokens") {
    MockBackend mock(0);
    auto post = mock.answer_token_logliks("where?", "paris france",
                                          std::string("paris is in france"));
    auto prior = mock.answer_token_logliks("where?", "paris france", std::nullopt);
    double post_mean = 0, prior_mean = 0;
    for (double l : post.logliks) post_mean += l;
    for (double l : prior.logliks) prior_mean += l;
    CHECK(post_mean > prior_mean);

    // ungrounded answer gets no bonus
    auto post_u = mock.answer_token_logliks("where?", "tokyo japan",
                                            std::string("paris is in france"));
    auto prior_u = mock.answer_token_logliks("where?", "tokyo japan", std::nullopt);
    CHECK(post_u.logliks == prior_u.logliks);
}

TEST_CASE("mock claim extraction splits sentences") {
    MockBackend mock(0);
    auto three = mock.extract_claims("One fact. Two facts! Three facts?", 5);
    REQUIRE(three.size() == 3);
    CHECK(three[0] == "One fact");
    CHECK(three[1] == "Two facts");
    CHECK(three[2] == "Three facts");

    auto one = mock.extract_claims("Just one sentence", 5);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == "Just one sentence");

    auto truncated = mock.extract_claims("A. B. C.", 2);
    REQUIRE(truncated.size() == 2);
    CHECK(truncated[0] == "A");
    CHECK(truncated[1] == "B");
}

TEST_CASE("mock paraphrase contract") {
    MockBackend mock(3);
    auto v = mock.paraphrase("the cat sat on the mat", 3, 0.7);
    REQUIRE(v.size() == 3);
    for (const auto& s : v) CHECK(!s.empty());
    auto v2 = mock.paraphrase("the cat sat on the mat", 3, 0.7);
    CHECK(v == v2);

    // word-order shuffle preserves the word set
    auto orig_words = math::word_set("the cat sat on the mat");
    for (const auto& s : v) CHECK(math::word_set(s) == orig_words);

    CHECK_THROWS_AS(mock.paraphrase("claim", 3, 3.0), ValidationError);
    CHECK_THROWS_AS(mock.paraphrase("claim", 0, 0.7), ValidationError);

    auto single = mock.paraphrase("word", 1, 0.0);
    REQUIRE(single.size() == 1);
    CHECK(single[0] == "word");
}

TEST_CASE("mock reasoning traces") {
    MockBackend mock(5);
    auto t = mock.reasoning_traces("why?", "because of reasons", 3);
    REQUIRE(t.size() == 3);
    auto t2 = mock.reasoning_traces("why?", "because of reasons", 3);
    CHECK(t == t2);
    CHECK_THROWS_AS(mock.reasoning_traces("why?", "a", 1), ValidationError);
}

TEST_CASE("mock NLI rules") {
    MockBackend mock(0);

    auto same = mock.nli_probs("the sky is blue", "the sky is blue");
    CHECK(same.entailment >= 0.9);

    auto neg = mock.nli_probs("the sky is blue", "the sky is not blue");
    CHECK(neg.contradiction >= 0.6);

    auto unrelated = mock.nli_probs("the sky is blue", "cheese tastes great");
    CHECK(unrelated.neutral > unrelated.entailment);
    CHECK(unrelated.neutral > unrelated.contradiction);

    for (const auto& d : {same, neg, unrelated}) CHECK_NOTHROW(d.validate());

    CHECK_THROWS_AS(mock.nli_probs("", "x"), ValidationError);
}

TEST_CASE("NliDistribution renormalizes defensively") {
    auto d = NliDistribution::normalized(2.0, 1.0, 1.0);
    CHECK_NOTHROW(d.validate());
    CHECK(d.entailment == doctest::Approx(0.5));
    auto zeros = NliDistribution::normalized(0, 0, 0);
    CHECK_NOTHROW(zeros.validate());
    auto pd = d.to_prob_dist();
    CHECK(pd.size() == 3);
}

TEST_CASE("BackendConfig validation") {
    BackendConfig cfg;
    cfg.base_url = "http://localhost:1";
    CHECK_NOTHROW(cfg.validate());
    cfg.max_in_flight = 0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg.max_in_flight = 2;
    cfg.retries = 9;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

namespace {

struct FakeServer {
    httplib::Server server;
    std::thread worker;
    int port = 0;

    ~FakeServer() { stop(); }

    void start() {
        port = server.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        worker = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    void stop() {
        server.stop();
        if (worker.joinable()) worker.join();
    }

    BackendConfig config() const {
        BackendConfig cfg;
        cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
        cfg.model_name = "fake";
        cfg.timeout_seconds = 5.0;
        cfg.retries = 2;
        cfg.max_in_flight = 3;
        return cfg;
    }
};

}  // namespace

TEST_CASE("remote backend surfaces 500 after exhausting retries") {
    FakeServer fake;
    std::atomic<int> hits{0};
    fake.server.Post("/v1/chat/completions",
                     [&](const httplib::Request&, httplib::Response& res) {
                         hits.fetch_add(1);
                         res.status = 500;
                     });
    fake.start();

    RemoteLlmBackend backend(fake.config());
    try {
        backend.extract_claims("some answer", 3);
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        REQUIRE(e.http_status().has_value());
        CHECK(*e.http_status() == 500);
    }
    CHECK(hits.load() == 3);  // initial attempt + 2 retries
}

TEST_CASE("remote backend does not retry 4xx") {
    FakeServer fake;
    std::atomic<int> hits{0};
    fake.server.Post("/v1/chat/completions",
                     [&](const httplib::Request&, httplib::Response& res) {
                         hits.fetch_add(1);
                         res.status = 401;
                     });
    fake.start();

    RemoteLlmBackend backend(fake.config());
    try {
        backend.extract_claims("some answer", 3);
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        REQUIRE(e.http_status().has_value());
        CHECK(*e.http_status() == 401);
    }
    CHECK(hits.load() == 1);
}

TEST_CASE("remote backend raises CapabilityError without echoed logprobs") {
    FakeServer fake;
    fake.server.Post("/v1/completions",
                     [&](const httplib::Request&, httplib::Response& res) {
                         nlohmann::json j = {
                             {"choices",
                              nlohmann::json::array({{{"text", "whatever"}}})}};
                         res.set_content(j.dump(), "application/json");
                     });
    fake.start();

    RemoteLlmBackend backend(fake.config());
    CHECK_THROWS_AS(backend.answer_token_logliks("q", "a b", std::nullopt),
                    CapabilityError);
}

TEST_CASE("remote backend parses echoed logprobs over the answer span") {
    FakeServer fake;
    fake.server.Post("/v1/completions", [&](const httplib::Request& req,
                                            httplib::Response& res) {
        auto body = nlohmann::json::parse(req.body);
        std::string prompt = body["prompt"].get<std::string>();
        // naive whitespace tokenizer with byte offsets
        nlohmann::json tokens = nlohmann::json::array();
        nlohmann::json logprobs = nlohmann::json::array();
        nlohmann::json offsets = nlohmann::json::array();
        std::size_t i = 0;
        while (i < prompt.size()) {
            while (i < prompt.size() && std::isspace(static_cast<unsigned char>(prompt[i]))) ++i;
            if (i >= prompt.size()) break;
            std::size_t start = i;
            while (i < prompt.size() && !std::isspace(static_cast<unsigned char>(prompt[i]))) ++i;
            tokens.push_back(prompt.substr(start, i - start));
            logprobs.push_back(-0.5);
            offsets.push_back(start);
        }
        nlohmann::json j = {{"choices", nlohmann::json::array(
                                            {{{"logprobs",
                                               {{"tokens", tokens},
                                                {"token_logprobs", logprobs},
                                                {"text_offset", offsets}}}}})}};
        res.set_content(j.dump(), "application/json");
    });
    fake.start();

    RemoteLlmBackend backend(fake.config());
    auto post = backend.answer_token_logliks("q", "alpha beta", std::string("ctx"));
    auto prior = backend.answer_token_logliks("q", "alpha beta", std::nullopt);
    CHECK(post.tokens == std::vector<std::string>{"alpha", "beta"});
    CHECK(prior.tokens.size() == post.tokens.size());
}

TEST_CASE("remote backend honors the in-flight cap") {
    FakeServer fake;
    std::atomic<int> concurrent{0};
    std::atomic<int> peak{0};
    fake.server.Post("/v1/chat/completions",
                     [&](const httplib::Request&, httplib::Response& res) {
                         int now = concurrent.fetch_add(1) + 1;
                         int old_peak = peak.load();
                         while (now > old_peak &&
                                !peak.compare_exchange_weak(old_peak, now)) {
                         }
                         std::this_thread::sleep_for(std::chrono::milliseconds(50));
                         concurrent.fetch_sub(1);
                         nlohmann::json j = {
                             {"choices",
                              nlohmann::json::array(
                                  {{{"message", {{"content", "claim one"}}}}})}};
                         res.set_content(j.dump(), "application/json");
                     });
    fake.start();

    auto cfg = fake.config();
    cfg.max_in_flight = 2;
    RemoteLlmBackend backend(cfg);

    std::vector<std::thread> callers;
    for (int i = 0; i < 8; ++i) {
        callers.emplace_back([&backend] {
            auto claims = backend.extract_claims("an answer", 2);
            CHECK(!claims.empty());
        });
    }
    for (auto& t : callers) t.join();
    CHECK(peak.load() <= 2);
}

TEST_CASE("paraphrase pads short generations with the original claim") {
    FakeServer fake;
    fake.server.Post("/v1/chat/completions",
                     [&](const httplib::Request&, httplib::Response& res) {
                         nlohmann::json j = {
                             {"choices",
                              nlohmann::json::array({{{"message", {{"content", ""}}}}})}};
                         res.set_content(j.dump(), "application/json");
                     });
    fake.start();

    RemoteLlmBackend backend(fake.config());
    auto v = backend.paraphrase("original claim", 2, 0.7);
    REQUIRE(v.size() == 2);
    CHECK(v[0] == "original claim");
    CHECK(v[1] == "original claim");
}

TEST_CASE("claim lines keep content-initial numbers but lose list numbering") {
    FakeServer fake;
    fake.server.Post("/v1/chat/completions",
                     [&](const httplib::Request&, httplib::Response& res) {
                         nlohmann::json j = {
                             {"choices",
                              nlohmann::json::array(
                                  {{{"message",
                                     {{"content",
                                       "1. The games ran in 1900\n"
                                       "- 1900 was the second edition\n"
                                       "1900 marked a turning point"}}}}})}};
                         res.set_content(j.dump(), "application/json");
                     });
    fake.start();

    RemoteLlmBackend backend(fake.config());
    auto claims = backend.extract_claims("whatever", 5);
    REQUIRE(claims.size() == 3);
    CHECK(claims[0] == "The games ran in 1900");
    CHECK(claims[1] == "1900 was the second edition");
    CHECK(claims[2] == "1900 marked a turning point");
}

TEST_CASE("remote NLI renormalizes and validates the response shape") {
    FakeServer fake;
    fake.server.Post("/v1/nli", [&](const httplib::Request&, httplib::Response& res) {
        nlohmann::json j = {{"entailment", 0.8}, {"neutral", 0.3}, {"contradiction", 0.1}};
        res.set_content(j.dump(), "application/json");
    });
    fake.start();

    RemoteNliBackend backend(fake.config());
    auto d = backend.nli_probs("p", "h");
    CHECK_NOTHROW(d.validate());
    CHECK(d.entailment == doctest::Approx(0.8 / 1.2));
}

TEST_CASE("connection failure becomes TransportError") {
    BackendConfig cfg;
    cfg.base_url = "http://127.0.0.1:1";  // nothing listens here
    cfg.model_name = "none";
    cfg.retries = 0;
    cfg.timeout_seconds = 1.0;
    RemoteLlmBackend backend(cfg);
    CHECK_THROWS_AS(backend.extract_claims("answer", 2), TransportError);
}
