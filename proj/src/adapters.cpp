#include "psychoseed/adapter_server.hpp"
#include "psychoseed/augment.hpp"
#include "psychoseed/text.hpp"

#include <httplib.h>

#include <array>
#include <numeric>

namespace psychoseed {
namespace {

using nlohmann::json;

// Frames used by the mock paraphraser; {} is the item text with a lowercase
// first letter and no trailing period.
constexpr std::array<std::string_view, 8> kParaphraseFrames = {
    "I {}.",       "I often {}.",          "I tend to {}.",         "Most of the time I {}.",
    "I really {}.", "People say that I {}.", "It is true that I {}.", "I would say I {}.",
};

struct CueBank {
    std::string_view concept_id;
    std::array<std::string_view, 6> pos;
    std::array<std::string_view, 6> neg;
};

constexpr std::array<CueBank, 5> kCues = {{
    {"openness",
     {"new ideas", "art and poetry", "wild daydreams", "abstract puzzles", "foreign films", "strange music"},
     {"the usual routine", "familiar food", "plain facts", "old habits", "simple tasks", "the same places"}},
    {"conscientiousness",
     {"careful plans", "a tidy desk", "deadlines", "detailed lists", "finishing chores", "being on time"},
     {"last-minute chaos", "a messy room", "skipped chores", "broken promises", "wasting time", "unfinished work"}},
    {"extraversion",
     {"big parties", "meeting strangers", "loud crowds", "talking a lot", "being the center", "group trips"},
     {"quiet evenings", "staying home", "reading alone", "small talk avoidance", "silence", "solitude"}},
    {"agreeableness",
     {"helping others", "kind words", "trusting people", "sharing lunch", "forgiving friends", "volunteering"},
     {"arguing", "insulting people", "holding grudges", "cold replies", "getting even", "mocking others"}},
    {"neuroticism",
     {"constant worry", "panic attacks", "mood swings", "feeling blue", "stress at work", "sleepless nights"},
     {"calm mornings", "steady nerves", "relaxed weekends", "easy breathing", "a clear head", "quiet confidence"}},
}};

constexpr std::array<std::string_view, 6> kVerbs = {"love", "enjoy", "think about", "care about", "talk about",
                                                    "get drawn to"};
constexpr std::array<std::string_view, 6> kTails = {"", " every day", " more than most", " with friends",
                                                    " at work", " when I can"};

std::string frame(std::string_view pattern, const std::string& body) {
    std::string out(pattern);
    out.replace(out.find("{}"), 2, body);
    return out;
}

std::string item_body(const std::string& text) {
    std::string body = trim(text);
    while (!body.empty() && (body.back() == '.' || body.back() == '!' || body.back() == '?')) body.pop_back();
    if (!body.empty()) {
        auto words = split_words(body);
        if (!words.empty() && !(words[0] == "I")) words[0] = to_lower(words[0]);
        body = join_words(words);
    }
    return body;
}

json post_json(const std::string& base_url, std::chrono::milliseconds timeout, const std::string& path,
               const json& body) {
    httplib::Client client(base_url);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    auto res = client.Post(path, body.dump(), "application/json");
    if (!res) throw AdapterError("", "POST " + base_url + path + " failed: " + httplib::to_string(res.error()));
    json reply;
    try {
        reply = json::parse(res->body);
    } catch (const json::parse_error&) {
        throw AdapterError("", "POST " + path + ": HTTP " + std::to_string(res->status) + " with non-JSON body");
    }
    if (res->status != 200) {
        std::string msg = "HTTP " + std::to_string(res->status);
        if (reply.is_object() && reply.contains("error") && reply["error"].is_string()) {
            msg += ": " + reply["error"].get<std::string>();
        }
        throw AdapterError("", "POST " + path + ": " + msg);
    }
    return reply;
}

int require_int(const json& j, const char* key, int min_value) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number_integer()) throw Error(std::string("'") + key + "' must be an integer");
    const auto v = it->get<long long>();
    if (v < min_value || v > 1'000'000) throw Error(std::string("'") + key + "' out of range");
    return static_cast<int>(v);
}

std::uint64_t require_seed(const json& j) {
    auto it = j.find("seed");
    if (it == j.end() || !it->is_number_integer()) throw Error("'seed' must be an integer");
    return it->get<std::uint64_t>();
}

std::string require_str(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) throw Error(std::string("'") + key + "' must be a string");
    return it->get<std::string>();
}

}  // namespace

std::vector<std::string> MockAdapter::paraphrase(const std::string& text, int max_variants, std::uint64_t seed) {
    const std::string body = item_body(text);
    if (body.empty() || max_variants <= 0) return {};
    std::vector<std::string> out;
    const std::size_t offset = seed % kParaphraseFrames.size();
    for (int k = 0; k < max_variants; ++k) {
        const std::size_t idx = (offset + static_cast<std::size_t>(k)) % kParaphraseFrames.size();
        std::string v = frame(kParaphraseFrames[idx], body);
        const auto round = static_cast<std::size_t>(k) / kParaphraseFrames.size();
        if (round > 0) v += " (" + std::to_string(round + 1) + ")";
        out.push_back(std::move(v));
    }
    return out;
}

std::vector<std::string> MockAdapter::generate(const ConceptId& concept_id, Polarity polarity, int count,
                                               int max_tokens, double /*temperature*/, std::uint64_t seed) {
    const CueBank* bank = &kCues[0];
    for (const auto& b : kCues) {
        if (b.concept_id == concept_id.str()) bank = &b;
    }
    const auto& cues = polarity == Polarity::pos ? bank->pos : bank->neg;
    const std::size_t space = kVerbs.size() * cues.size() * kTails.size();
    // 139 is coprime to 216, so the first `space` draws are distinct.
    const std::size_t stride = 139;
    const std::size_t offset = seed % space;

    std::vector<std::string> out;
    for (int k = 0; k < count; ++k) {
        const std::size_t combo = (offset + static_cast<std::size_t>(k) * stride) % space;
        std::string text = "I " + std::string(kVerbs[combo % kVerbs.size()]) + " " +
                           std::string(cues[(combo / kVerbs.size()) % cues.size()]) +
                           std::string(kTails[combo / (kVerbs.size() * cues.size())]);
        const auto round = static_cast<std::size_t>(k) / space;
        if (round > 0) text += " (" + std::to_string(round + 1) + ")";
        text += ".";
        if (max_tokens > 0) {
            auto words = split_words(text);
            if (words.size() > static_cast<std::size_t>(max_tokens)) words.resize(max_tokens);
            text = join_words(words);
        }
        out.push_back(std::move(text));
    }
    return out;
}

HttpAdapter::HttpAdapter(std::string base_url, std::chrono::milliseconds timeout)
    : base_url_(std::move(base_url)), timeout_(timeout) {
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
    if (base_url_.empty()) throw Error("adapter URL must not be empty");
}

std::vector<std::string> HttpAdapter::paraphrase(const std::string& text, int max_variants, std::uint64_t seed) {
    const ParaphraseRequest req{text, max_variants, seed};
    const json reply = post_json(base_url_, timeout_, "/paraphrase", req.to_json());
    try {
        return parse_text_list(reply, "variants");
    } catch (const Error& e) {
        throw AdapterError("", std::string("/paraphrase: ") + e.what());
    }
}

std::vector<std::string> HttpAdapter::generate(const ConceptId& concept_id, Polarity polarity, int count,
                                               int max_tokens, double temperature, std::uint64_t seed) {
    const GenerateRequest req{concept_id, polarity, count, max_tokens, temperature, seed};
    const json reply = post_json(base_url_, timeout_, "/generate", req.to_json());
    try {
        return parse_text_list(reply, "texts");
    } catch (const Error& e) {
        throw AdapterError("", std::string("/generate: ") + e.what());
    }
}

std::unique_ptr<GenerationAdapter> make_adapter(const std::string& spec, std::chrono::milliseconds timeout) {
    if (spec == "mock") return std::make_unique<MockAdapter>();
    return std::make_unique<HttpAdapter>(spec, timeout);
}

ParaphraseRequest ParaphraseRequest::from_json(const json& j) {
    if (!j.is_object()) throw Error("request body must be a JSON object");
    return ParaphraseRequest{require_str(j, "text"), require_int(j, "max_variants", 0), require_seed(j)};
}

json ParaphraseRequest::to_json() const {
    return json{{"text", text}, {"max_variants", max_variants}, {"seed", seed}};
}

GenerateRequest GenerateRequest::from_json(const json& j) {
    if (!j.is_object()) throw Error("request body must be a JSON object");
    GenerateRequest r;
    r.concept_id = ConceptId(require_str(j, "concept"));
    r.polarity = parse_polarity(require_str(j, "polarity"));
    r.count = require_int(j, "count", 0);
    r.max_tokens = require_int(j, "max_tokens", 0);
    auto t = j.find("temperature");
    if (t == j.end() || !t->is_number() || !(t->get<double>() > 0.0)) throw Error("'temperature' must be > 0");
    r.temperature = t->get<double>();
    r.seed = require_seed(j);
    return r;
}

json GenerateRequest::to_json() const {
    return json{{"concept", concept_id.str()}, {"polarity", to_string(polarity)}, {"count", count},
                {"max_tokens", max_tokens}, {"temperature", temperature},    {"seed", seed}};
}

std::vector<std::string> parse_text_list(const json& response, const char* key) {
    if (!response.is_object()) throw Error("response must be a JSON object");
    auto it = response.find(key);
    if (it == response.end() || !it->is_array()) throw Error(std::string("response lacks array '") + key + "'");
    std::vector<std::string> out;
    out.reserve(it->size());
    for (const auto& v : *it) {
        if (!v.is_string()) throw Error(std::string("'") + key + "' must contain only strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

void mount_adapter_routes(httplib::Server& server, GenerationAdapter& adapter) {
    auto reply_error = [](httplib::Response& res, int status, const std::string& msg) {
        res.status = status;
        res.set_content(json{{"error", msg}}.dump(), "application/json");
    };

    server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(json{{"ok", true}, {"protocol", kAdapterProtocolVersion}}.dump(), "application/json");
    });

    server.Post("/paraphrase", [&adapter, reply_error](const httplib::Request& req, httplib::Response& res) {
        ParaphraseRequest r;
        try {
            r = ParaphraseRequest::from_json(json::parse(req.body));
        } catch (const std::exception& e) {
            return reply_error(res, 400, e.what());
        }
        try {
            const auto variants = adapter.paraphrase(r.text, r.max_variants, r.seed);
            res.set_content(json{{"variants", variants}}.dump(), "application/json");
        } catch (const std::exception& e) {
            reply_error(res, 500, e.what());
        }
    });

    server.Post("/generate", [&adapter, reply_error](const httplib::Request& req, httplib::Response& res) {
        GenerateRequest r;
        try {
            r = GenerateRequest::from_json(json::parse(req.body));
        } catch (const std::exception& e) {
            return reply_error(res, 400, e.what());
        }
        try {
            const auto texts = adapter.generate(r.concept_id, r.polarity, r.count, r.max_tokens, r.temperature, r.seed);
            res.set_content(json{{"texts", texts}}.dump(), "application/json");
        } catch (const std::exception& e) {
            reply_error(res, 500, e.what());
        }
    });
}

}  // namespace psychoseed
