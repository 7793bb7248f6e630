#pragma once

#include "psychoseed/augment.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace httplib {
class Server;
}

namespace psychoseed {

inline constexpr int kAdapterProtocolVersion = 1;

/// Request validation shared by the server routes. Throws Error on a body
/// that does not follow the wire protocol.
struct ParaphraseRequest {
    std::string text;
    int max_variants = 0;
    std::uint64_t seed = 0;

    static ParaphraseRequest from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct GenerateRequest {
    ConceptId concept_id;
    Polarity polarity = Polarity::pos;
    int count = 0;
    int max_tokens = 0;
    double temperature = 1.0;
    std::uint64_t seed = 0;

    static GenerateRequest from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Extracts the string list under `key` ("variants" or "texts"); throws
/// Error when the response does not match the protocol.
std::vector<std::string> parse_text_list(const nlohmann::json& response, const char* key);

/// Serves /health, /paraphrase and /generate backed by `adapter`. The
/// adapter must outlive the server.
void mount_adapter_routes(httplib::Server& server, GenerationAdapter& adapter);

}  // namespace psychoseed
