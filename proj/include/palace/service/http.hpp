#pragma once

#include <charconv>
#include <map>
#include <string>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "palace/corpus/io.hpp"
#include "palace/index/layers.hpp"
#include "palace/search/config.hpp"
#include "palace/search/engine.hpp"
#include "palace/search/rerank.hpp"
#include "palace/util/text.hpp"

namespace palace::service {

using nlohmann::json;

struct ApiResponse {
  int status = 200;
  json body;
};

struct ApiParams {
  std::size_t default_k = 7;
  std::size_t max_k = 100;
  std::size_t snippet_chars = 1200;
  search::EngineParams engine;
};

/// Read-only request handling over frozen indexes. Kept separate from the
/// socket layer so it can be exercised directly.
class RecallApi {
 public:
  RecallApi(const index::LayerIndexes& idx, ApiParams params = {}) : idx_(idx), params_(params) {
    for (auto& c : search::enumerate_configs(search::ConfigSpace::all)) all_.emplace(c.id(), c);
    for (const auto& c : search::enumerate_configs(search::ConfigSpace::evaluated)) evaluated_.push_back(c.id());
    build_rooms();
  }

  ApiResponse configs() const {
    json list = json::array();
    for (const auto& id : evaluated_) {
      const auto& c = all_.at(id);
      list.push_back({{"config_id", id},
                      {"family", search::to_string(c.family)},
                      {"mode", c.mode},
                      {"mechanism", c.mechanism},
                      {"fusion", c.fusion.name}});
    }
    return {200, {{"configs", list}, {"count", list.size()}}};
  }

  ApiResponse search(const std::string& query, const std::string& config_id, const std::string& k_param,
                     const std::string& rerank_param = {}) const {
    const auto it = all_.find(config_id);
    if (it == all_.end()) {
      return {404, {{"error", "not_found"},
                    {"message", "unknown config '" + config_id + "'"},
                    {"hint", "GET /configs lists the valid config ids"},
                    {"configs", evaluated_}}};
    }
    if (text::trim(query).empty()) return bad_request("missing query parameter q");
    std::size_t k = params_.default_k;
    if (!k_param.empty()) {
      const auto r = std::from_chars(k_param.data(), k_param.data() + k_param.size(), k);
      if (r.ec != std::errc() || r.ptr != k_param.data() + k_param.size() || k == 0 || k > params_.max_k) {
        return bad_request("k must be an integer in [1, " + std::to_string(params_.max_k) + "]");
      }
    }
    auto ep = params_.engine;
    ep.k = k;
    const search::SearchEngine engine(idx_, ep);
    auto list = engine.search(it->second, query, "api");
    json rerank = nullptr;
    if (!rerank_param.empty()) {
      double lambda = 0.0;
      try {
        std::size_t used = 0;
        lambda = std::stod(rerank_param, &used);
        if (used != rerank_param.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        return bad_request("rerank must be a number in [0, 1]");
      }
      if (lambda < 0.0 || lambda > 1.0) return bad_request("rerank must be a number in [0, 1]");
      list = search::rerank_bm25_snippet(list, query, idx_, lambda, params_.snippet_chars);
      rerank = lambda;
    }
    json results = json::array();
    for (const auto& e : list.entries) results.push_back(entry_json(e));
    return {200,
            {{"query", query}, {"config_id", config_id}, {"k", k}, {"rerank_lambda", rerank}, {"results", results}}};
  }

  ApiResponse exchange(const std::string& cid, const std::string& ps, const std::string& pe) const {
    int s = 0, e = 0;
    const auto parse = [](const std::string& v, int& out) {
      const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
      return r.ec == std::errc() && r.ptr == v.data() + v.size();
    };
    const auto ref = cid + ":" + ps + "-" + pe;
    if (!parse(ps, s) || !parse(pe, e)) return not_found("no exchange " + ref);
    const auto id = idx_.exchanges().find(cid + ":" + std::to_string(s) + "-" + std::to_string(e));
    if (!id) return not_found("no exchange " + ref);
    const auto& ex = idx_.exchanges()[*id];
    json messages = json::array();
    for (const auto& m : ex.messages) messages.push_back(corpus::to_json(m));
    return {200,
            {{"exchange_ref", ex.ref()},
             {"conversation_id", ex.conversation_id},
             {"ply_start", ex.ply_start},
             {"ply_end", ex.ply_end},
             {"project_id", ex.project_id},
             {"incomplete", ex.incomplete},
             {"is_fragment", ex.is_fragment},
             {"messages", messages}}};
  }

  ApiResponse rooms() const { return {200, {{"rooms", rooms_}, {"count", rooms_.size()}}}; }

 private:
  static ApiResponse bad_request(std::string msg) { return {400, {{"error", "bad_request"}, {"message", msg}}}; }
  static ApiResponse not_found(std::string msg) { return {404, {{"error", "not_found"}, {"message", msg}}}; }

  // The body is always cut from the verbatim exchange; distilled fields only
  // ever appear under "routing".
  json entry_json(const search::RankedEntry& e) const {
    const auto& ex = idx_.exchanges()[e.exchange];
    const auto snippet = search::verbatim_snippet(idx_, e.exchange, params_.snippet_chars);
    json routing = {{"distilled_core", nullptr}, {"rooms", json::array()}, {"files", json::array()}};
    if (const auto* obj = idx_.object_for(e.exchange)) {
      routing["distilled_core"] = obj->exchange_core;
      for (const auto& r : obj->room_assignments) {
        routing["rooms"].push_back({{"room_type", distill::to_string(r.room_type)},
                                    {"room_key", r.room_key},
                                    {"room_label", r.room_label}});
      }
      routing["files"] = obj->files_touched;
    }
    const auto [cid, ps, pe] = std::tuple(ex.conversation_id, ex.ply_start, ex.ply_end);
    return {{"exchange_ref", ex.ref()},
            {"rank", e.rank},
            {"score", e.score},
            {"snippet", snippet},
            {"verbatim_snippet", snippet},
            {"drill_down", "/exchange/" + cid + "/" + std::to_string(ps) + "/" + std::to_string(pe)},
            {"routing", routing}};
  }

  void build_rooms() {
    struct Room {
      std::string type, key, label, project;
      int count = 0;
    };
    std::map<std::tuple<std::string, std::string, std::string>, Room> rooms;
    for (const auto& o : idx_.objects()) {
      for (const auto& r : o.room_assignments) {
        auto& room = rooms[{std::string(distill::to_string(r.room_type)), r.room_key, o.project_id}];
        if (room.count == 0) room = {std::string(distill::to_string(r.room_type)), r.room_key, r.room_label, o.project_id};
        ++room.count;
      }
    }
    rooms_ = json::array();
    for (const auto& [_, r] : rooms) {
      rooms_.push_back({{"room_type", r.type},
                        {"room_key", r.key},
                        {"room_label", r.label},
                        {"project_id", r.project},
                        {"object_count", r.count}});
    }
  }

  const index::LayerIndexes& idx_;
  ApiParams params_;
  std::map<std::string, search::SearchConfig> all_;
  std::vector<std::string> evaluated_;
  json rooms_;
};

inline void mount(httplib::Server& server, const RecallApi& api) {
  const auto reply = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(-1, ' ', false, json::error_handler_t::replace), "application/json; charset=utf-8");
  };
  server.Get("/configs", [&api, reply](const httplib::Request&, httplib::Response& res) { reply(res, api.configs()); });
  server.Get("/search", [&api, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, api.search(req.get_param_value("q"), req.has_param("config") ? req.get_param_value("config")
                                                                              : "full_text/exact/passthrough",
                          req.get_param_value("k"), req.get_param_value("rerank")));
  });
  server.Get(R"(/exchange/([^/]+)/([^/]+)/([^/]+))", [&api, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, api.exchange(req.matches[1], req.matches[2], req.matches[3]));
  });
  server.Get("/rooms", [&api, reply](const httplib::Request&, httplib::Response& res) { reply(res, api.rooms()); });
  server.set_error_handler([reply](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) reply(res, {res.status, {{"error", "not_found"}, {"message", "no such endpoint"}}});
  });
}

}  // namespace palace::service
