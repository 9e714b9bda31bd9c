#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "uq/errors.hpp"
#include "uq/http_providers.hpp"
#include "uq/sampler.hpp"

using namespace uq;
using nlohmann::json;

namespace {

// Owns an httplib server on an ephemeral port for one test case.
class MockServer {
public:
    MockServer() {
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~MockServer() {
        server_.stop();
        thread_.join();
    }
    httplib::Server& server() { return server_; }
    ProviderConfig config() const {
        ProviderConfig c;
        c.base_url = "http://127.0.0.1:" + std::to_string(port_);
        c.model_name = "mock-model";
        c.max_retries = 2;
        c.initial_backoff_ms = 1;
        c.timeout_ms = 5000;
        return c;
    }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

json chat_ok_body(const std::string& text, bool with_logprobs) {
    json choice{{"message", {{"role", "assistant"}, {"content", text}}}};
    if (with_logprobs) {
        choice["logprobs"] = {
            {"content", json::array({{{"token", "Hello"}, {"logprob", -0.1}},
                                     {{"token", "world"}, {"logprob", -0.5}}})}};
    }
    return json{{"choices", json::array({choice})},
                {"usage", {{"prompt_tokens", 12}, {"completion_tokens", 2}}}};
}

}  // namespace

TEST_CASE("chat client parses content, logprobs and usage") {
    MockServer mock;
    json seen_request;
    mock.server().Post("/chat/completions",
                       [&](const httplib::Request& req, httplib::Response& res) {
                           seen_request = json::parse(req.body);
                           res.set_content(chat_ok_body("Hello world", true).dump(),
                                           "application/json");
                       });
    auto cfg = mock.config();
    cfg.api_key = "secret-key";
    HttpChatProvider provider(cfg);
    SamplingParams params;
    params.temperature = 0.3;
    params.seed = 99;
    const auto r = provider.chat_generate("say hello", params, true);
    CHECK(r.text == "Hello world");
    REQUIRE(r.tokens.has_value());
    CHECK(r.tokens->size() == 2);
    CHECK(r.tokens->at(0).token_text == "Hello");
    CHECK(r.tokens->at(0).logprob == doctest::Approx(-0.1));
    CHECK(r.tokens->at(1).position == 1);
    CHECK(r.diagnostics.at("usage.prompt_tokens") == 12);
    CHECK(r.diagnostics.at("usage.completion_tokens") == 2);
    CHECK(r.diagnostics.count("latency_ms") == 1);
    CHECK(r.model_id == "mock-model");
    // wire contract: request fields
    CHECK(seen_request.at("model") == "mock-model");
    CHECK(seen_request.at("messages")[0].at("role") == "user");
    CHECK(seen_request.at("messages")[0].at("content") == "say hello");
    CHECK(seen_request.at("temperature") == doctest::Approx(0.3));
    CHECK(seen_request.at("logprobs") == true);
    CHECK(seen_request.at("seed") == 99);
}

TEST_CASE("bearer token is attached when an api key is configured") {
    MockServer mock;
    std::string auth_header;
    mock.server().Post("/chat/completions",
                       [&](const httplib::Request& req, httplib::Response& res) {
                           auth_header = req.get_header_value("Authorization");
                           res.set_content(chat_ok_body("ok", false).dump(), "application/json");
                       });
    auto cfg = mock.config();
    cfg.api_key = "sk-test-123";
    HttpChatProvider provider(cfg);
    provider.chat_generate("hi", {}, false);
    CHECK(auth_header == "Bearer sk-test-123");
}

TEST_CASE("transient 429 responses are retried until success") {
    MockServer mock;
    std::atomic<int> calls{0};
    mock.server().Post("/chat/completions",
                       [&](const httplib::Request&, httplib::Response& res) {
                           if (++calls <= 2) {
                               res.status = 429;
                               res.set_content("slow down", "text/plain");
                           } else {
                               res.set_content(chat_ok_body("eventually", false).dump(),
                                               "application/json");
                           }
                       });
    HttpChatProvider provider(mock.config());  // max_retries = 2 -> 3 attempts
    const auto r = provider.chat_generate("retry me", {}, false);
    CHECK(r.text == "eventually");
    CHECK(calls.load() == 3);
}

TEST_CASE("persistent 5xx exhausts retries and reports the status") {
    MockServer mock;
    std::atomic<int> calls{0};
    mock.server().Post("/chat/completions",
                       [&](const httplib::Request&, httplib::Response& res) {
                           ++calls;
                           res.status = 503;
                           res.set_content("down", "text/plain");
                       });
    HttpChatProvider provider(mock.config());
    CHECK_THROWS_AS(provider.chat_generate("p", {}, false), ProviderRejectedError);
    CHECK(calls.load() == 3);  // initial + 2 retries
}

TEST_CASE("client errors other than 429 fail immediately without retries") {
    MockServer mock;
    std::atomic<int> calls{0};
    mock.server().Post("/chat/completions",
                       [&](const httplib::Request&, httplib::Response& res) {
                           ++calls;
                           res.status = 400;
                           res.set_content("bad request body", "text/plain");
                       });
    HttpChatProvider provider(mock.config());
    try {
        provider.chat_generate("p", {}, false);
        FAIL("expected rejection");
    } catch (const ProviderRejectedError& e) {
        CHECK(std::string(e.what()).find("400") != std::string::npos);
    }
    CHECK(calls.load() == 1);
}

TEST_CASE("an unreachable endpoint raises ProviderUnreachableError") {
    ProviderConfig cfg;
    cfg.base_url = "http://127.0.0.1:1";  // nothing listens here
    cfg.model_name = "m";
    cfg.max_retries = 1;
    cfg.initial_backoff_ms = 1;
    cfg.timeout_ms = 300;
    HttpChatProvider provider(cfg);
    CHECK_THROWS_AS(provider.chat_generate("p", {}, false), ProviderUnreachableError);
}

TEST_CASE("malformed chat payloads raise a provider error") {
    MockServer mock;
    mock.server().Post("/chat/completions",
                       [&](const httplib::Request&, httplib::Response& res) {
                           res.set_content("{\"choices\": []}", "application/json");
                       });
    HttpChatProvider provider(mock.config());
    CHECK_THROWS_AS(provider.chat_generate("p", {}, false), ProviderError);
}

TEST_CASE("embedding client maps indexed vectors back to input order") {
    MockServer mock;
    mock.server().Post("/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
        const auto body = json::parse(req.body);
        CHECK(body.at("input").size() == 2);
        // deliberately reversed order on the wire
        json data = json::array({{{"index", 1}, {"embedding", {0.0, 2.0}}},
                                 {{"index", 0}, {"embedding", {3.0, 0.0}}}});
        res.set_content(json{{"data", data}}.dump(), "application/json");
    });
    HttpEmbeddingProvider provider(mock.config());
    const auto out = provider.embed_batch({"first", "second"});
    REQUIRE(out.size() == 2);
    CHECK(out[0].values == std::vector<double>{1.0, 0.0});  // re-normalized
    CHECK(out[1].values == std::vector<double>{0.0, 1.0});
    CHECK(out[0].source_text == "first");
}

TEST_CASE("missing embedding entries are an error, not a silent gap") {
    MockServer mock;
    mock.server().Post("/embeddings", [&](const httplib::Request&, httplib::Response& res) {
        json data = json::array({{{"index", 0}, {"embedding", {1.0, 0.0}}}});
        res.set_content(json{{"data", data}}.dump(), "application/json");
    });
    HttpEmbeddingProvider provider(mock.config());
    CHECK_THROWS_AS(provider.embed_batch({"a", "b"}), ProviderError);
}

TEST_CASE("nli client exchanges premise/hypothesis for three logits") {
    MockServer mock;
    json seen;
    mock.server().Post("/nli", [&](const httplib::Request& req, httplib::Response& res) {
        seen = json::parse(req.body);
        res.set_content(
            json{{"logit_entail", 2.0}, {"logit_neutral", 0.5}, {"logit_contradict", -1.0}}
                .dump(),
            "application/json");
    });
    HttpNliProvider provider(mock.config());
    const auto j = provider.nli_judge("the premise", "the hypothesis");
    CHECK(seen.at("premise") == "the premise");
    CHECK(seen.at("hypothesis") == "the hypothesis");
    CHECK(j.label == NliLabel::Entailment);
    CHECK(j.logit_entail == doctest::Approx(2.0));
    CHECK(j.entail_probability() ==
          doctest::Approx(std::exp(2.0) / (std::exp(2.0) + std::exp(-1.0))));
}

TEST_CASE("a failing cell surfaces as a partial plan while others succeed") {
    MockServer mock;
    mock.server().Post("/chat/completions",
                       [&](const httplib::Request& req, httplib::Response& res) {
                           const auto body = json::parse(req.body);
                           const std::string prompt = body.at("messages")[0].at("content");
                           if (prompt.find("variant 0") != std::string::npos) {
                               res.status = 404;  // permanent failure for one variant
                               res.set_content("gone", "text/plain");
                           } else {
                               res.set_content(chat_ok_body("fine: " + prompt, false).dump(),
                                               "application/json");
                           }
                       });
    HttpChatProvider provider(mock.config());
    const std::vector<std::string> variants = {"variant 0 text?", "variant 1 text?",
                                               "variant 2 text?"};
    const auto plan = build_plan("httptask", variants, 3, 2, 5);
    SamplingParams params;
    const auto exec = execute_plan(plan, provider, params);
    CHECK_FALSE(exec.complete());
    CHECK(exec.set.partial);
    CHECK(exec.failures.size() == 2);
    CHECK(exec.set.samples.size() == 4);
    for (const auto& f : exec.failures) CHECK(f.variant_index == 0);
}
