#include "psychoseed/adapter_server.hpp"
#include "psychoseed/augment.hpp"

#include <doctest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <stdexcept>
#include <thread>

using namespace psychoseed;
using nlohmann::json;

namespace {

class FailingAdapter final : public GenerationAdapter {
public:
    std::vector<std::string> paraphrase(const std::string&, int, std::uint64_t) override {
        throw std::runtime_error("model crashed");
    }
    std::vector<std::string> generate(const ConceptId&, Polarity, int, int, double, std::uint64_t) override {
        throw std::runtime_error("model crashed");
    }
};

/// In-process adapter server on an ephemeral port.
class LocalServer {
public:
    explicit LocalServer(GenerationAdapter& adapter) {
        mount_adapter_routes(server_, adapter);
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~LocalServer() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    int port() const { return port_; }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

/// Checks a value against the protocol's required keys and types.
void check_text_list(const json& j, const char* key) {
    REQUIRE(j.is_object());
    REQUIRE(j.contains(key));
    REQUIRE(j[key].is_array());
    for (const auto& v : j[key]) CHECK(v.is_string());
}

}  // namespace

TEST_CASE("HTTP adapter matches the in-process mock") {
    MockAdapter mock;
    LocalServer server(mock);
    HttpAdapter http(server.url() + "/", std::chrono::seconds(10));

    const std::string text = "I enjoy hearing new ideas.";
    for (int n : {0, 1, 3, 12}) {
        CHECK(http.paraphrase(text, n, 17) == mock.paraphrase(text, n, 17));
    }
    for (Polarity p : {Polarity::pos, Polarity::neg}) {
        CHECK(http.generate(ConceptId("openness"), p, 25, 100, 1.5, 9) ==
              mock.generate(ConceptId("openness"), p, 25, 100, 1.5, 9));
    }
    const auto adapter = make_adapter(server.url());
    CHECK(adapter->paraphrase(text, 2, 1) == mock.paraphrase(text, 2, 1));
    CHECK(make_adapter("mock")->paraphrase(text, 2, 1) == mock.paraphrase(text, 2, 1));
}

TEST_CASE("wire format") {
    MockAdapter mock;
    LocalServer server(mock);
    httplib::Client client("127.0.0.1", server.port());

    SUBCASE("health") {
        auto res = client.Get("/health");
        REQUIRE(res);
        CHECK(res->status == 200);
        const auto j = json::parse(res->body);
        CHECK(j["ok"] == true);
        CHECK(j["protocol"] == kAdapterProtocolVersion);
    }
    SUBCASE("responses follow the schema") {
        auto res = client.Post("/paraphrase", R"({"text":"I like art.","max_variants":3,"seed":5})",
                               "application/json");
        REQUIRE(res);
        CHECK(res->status == 200);
        check_text_list(json::parse(res->body), "variants");

        res = client.Post("/generate",
                          R"({"concept":"openness","polarity":"neg","count":4,"max_tokens":50,"temperature":1.5,"seed":2})",
                          "application/json");
        REQUIRE(res);
        CHECK(res->status == 200);
        const auto j = json::parse(res->body);
        check_text_list(j, "texts");
        CHECK(j["texts"].size() == 4);
    }
    SUBCASE("malformed requests get 400 with an error message") {
        for (const char* body : {"not json", R"({"text":"x"})", R"({"text":"x","max_variants":-1,"seed":1})",
                                 R"({"text":5,"max_variants":1,"seed":1})"}) {
            auto res = client.Post("/paraphrase", body, "application/json");
            REQUIRE(res);
            CHECK(res->status == 400);
            CHECK(json::parse(res->body)["error"].is_string());
        }
        auto res = client.Post(
            "/generate", R"({"concept":"Openness","polarity":"pos","count":1,"max_tokens":5,"temperature":1,"seed":1})",
            "application/json");
        REQUIRE(res);
        CHECK(res->status == 400);
        res = client.Post(
            "/generate", R"({"concept":"openness","polarity":"maybe","count":1,"max_tokens":5,"temperature":1,"seed":1})",
            "application/json");
        REQUIRE(res);
        CHECK(res->status == 400);
    }
    SUBCASE("request round-trip") {
        const ParaphraseRequest p{"hello", 3, 99};
        const auto back = ParaphraseRequest::from_json(p.to_json());
        CHECK(back.text == "hello");
        CHECK(back.max_variants == 3);
        CHECK(back.seed == 99);
        GenerateRequest g;
        g.concept_id = ConceptId("agreeableness");
        g.polarity = Polarity::neg;
        g.count = 7;
        g.max_tokens = 20;
        g.temperature = 0.7;
        g.seed = 3;
        const auto gj = g.to_json();
        CHECK(gj["concept"] == "agreeableness");
        CHECK(gj["polarity"] == "neg");
        const auto gb = GenerateRequest::from_json(gj);
        CHECK(gb.concept_id == g.concept_id);
        CHECK(gb.temperature == 0.7);
    }
    SUBCASE("response parsing") {
        CHECK(parse_text_list(json{{"texts", {"a", "b"}}}, "texts") == std::vector<std::string>{"a", "b"});
        CHECK_THROWS_AS(parse_text_list(json{{"texts", {"a", 1}}}, "texts"), Error);
        CHECK_THROWS_AS(parse_text_list(json{{"variants", {"a"}}}, "texts"), Error);
    }
}

TEST_CASE("adapter errors surface as AdapterError") {
    FailingAdapter failing;
    LocalServer server(failing);
    HttpAdapter http(server.url(), std::chrono::seconds(10));
    CHECK_THROWS_WITH_AS(http.paraphrase("x", 1, 1), doctest::Contains("500"), AdapterError);
    CHECK_THROWS_WITH_AS(http.generate(ConceptId("openness"), Polarity::pos, 1, 5, 1.0, 1),
                         doctest::Contains("model crashed"), AdapterError);

    const auto set = ItemSet{ConceptId("openness"),
                             {Item{"o-1", "I like art.", ConceptId("openness"), Polarity::pos, Origin::original,
                                   std::nullopt}}};
    CHECK_THROWS_WITH_AS(paraphrase_augment(set.items[0], http, 2), doctest::Contains("o-1"), AdapterError);

    SUBCASE("unreachable server") {
        int port = 0;
        {
            MockAdapter mock;
            LocalServer gone(mock);
            port = gone.port();
        }
        HttpAdapter dead("http://127.0.0.1:" + std::to_string(port), std::chrono::milliseconds(500));
        CHECK_THROWS_AS(dead.paraphrase("x", 1, 1), AdapterError);
    }
    CHECK_THROWS_AS(HttpAdapter("", std::chrono::seconds(1)), Error);
}
