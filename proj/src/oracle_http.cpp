#include <chrono>
#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "castream/oracle.hpp"

namespace castream {

namespace {

// endpoint -> (scheme://host[:port], path)
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
  const auto scheme = endpoint.find("://");
  if (scheme == std::string::npos) {
    throw DomainError("endpoint must include a scheme: " + endpoint);
  }
  const auto path_start = endpoint.find('/', scheme + 3);
  if (path_start == std::string::npos) return {endpoint, "/"};
  return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

}  // namespace

std::string HttpOracle::post_chat(const std::string& prompt) {
  const auto [base, path] = split_endpoint(cfg_.endpoint);

  nlohmann::json body;
  if (!cfg_.model.empty()) body["model"] = cfg_.model;
  body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});

  httplib::Client client(base);
  client.set_read_timeout(cfg_.timeout_s, 0);
  client.set_connection_timeout(cfg_.timeout_s, 0);

  httplib::Headers headers;
  if (!cfg_.api_key_env.empty()) {
    const char* key = std::getenv(cfg_.api_key_env.c_str());
    if (key == nullptr) {
      throw OracleError("API key environment variable " + cfg_.api_key_env + " is not set",
                        false);
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  const auto t0 = std::chrono::steady_clock::now();
  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) {
    throw OracleError("oracle transport failure: " + httplib::to_string(res.error()), true);
  }
  if (res->status != 200) {
    throw OracleError("oracle returned HTTP " + std::to_string(res->status), true);
  }

  nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
  if (reply.is_discarded() || !reply.contains("choices") || !reply["choices"].is_array() ||
      reply["choices"].empty() || !reply["choices"][0].contains("message") ||
      !reply["choices"][0]["message"].contains("content")) {
    throw OracleError("oracle reply is not a chat completion", true);
  }
  last_latency_s_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return reply["choices"][0]["message"]["content"].get<std::string>();
}

}  // namespace castream
