#pragma once

#include <chrono>
#include <string>
#include <string_view>

#include "httplib.h"
#include "json.hpp"
#include "palace/provider.hpp"

namespace palace {

/// POSTs {"model": ..., "prompt": ..., "temperature": 0} to `base_url + path`
/// and reads the completion from the "response" or "text" field.
class HttpProvider final : public TextProvider {
 public:
  HttpProvider(std::string base_url, std::string path, std::string model,
               std::chrono::seconds timeout = std::chrono::seconds(60))
      : base_url_(std::move(base_url)),
        path_(std::move(path)),
        model_(std::move(model)),
        timeout_(timeout) {}

  std::string complete(std::string_view prompt) override {
    httplib::Client client(base_url_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    nlohmann::json body = {{"model", model_}, {"prompt", prompt}, {"temperature", 0}};
    auto res = client.Post(path_, body.dump(), "application/json");
    if (!res) throw Error(ErrorKind::provider, "http provider unreachable: " + base_url_);
    if (res->status != 200) {
      throw Error(ErrorKind::provider, "http provider status " + std::to_string(res->status));
    }
    auto reply = nlohmann::json::parse(res->body, nullptr, false);
    if (reply.is_discarded()) return res->body;
    for (const char* key : {"response", "text", "completion"}) {
      if (reply.contains(key) && reply[key].is_string()) return reply[key].get<std::string>();
    }
    throw Error(ErrorKind::provider, "http provider reply has no text field");
  }

  std::string name() const override { return "http:" + base_url_ + path_ + "#" + model_; }

 private:
  std::string base_url_;
  std::string path_;
  std::string model_;
  std::chrono::seconds timeout_;
};

}  // namespace palace
