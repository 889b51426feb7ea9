#pragma once
// HTTP front end over an Engine. Every error body is
// {"error": {"code", "message", "detail"}} with code from the closed ApiCode set.

#include <map>
#include <mutex>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "relrec/engine.hpp"

namespace relrec {

inline int http_status(ApiCode c) {
  switch (c) {
    case ApiCode::not_found: return 404;
    case ApiCode::conflict: return 409;
    case ApiCode::schema:
    case ApiCode::parameter: return 400;
    case ApiCode::internal: return 500;
  }
  return 500;
}

inline nlohmann::json error_body(ApiCode code, const std::string& message, const std::string& detail = {}) {
  return {{"error", {{"code", to_string(code)}, {"message", message}, {"detail", detail}}}};
}

class Service {
 public:
  explicit Service(Engine& engine) : engine_(engine) {
    // Without SO_REUSEPORT a second server on a live port fails to bind.
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    routes();
  }
  ~Service() { stop(); }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds (port 0 picks a free one) and serves on a background thread.
  int start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
      bound = server_.bind_to_any_port(host);
      if (bound < 0) throw Error(ErrorCode::io, "cannot bind " + host);
    } else if (!server_.bind_to_port(host, port)) {
      throw Error(ErrorCode::io, "port " + std::to_string(port) + " is busy or unavailable", host);
    }
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return bound;
  }

  // Blocks until stop() is called from elsewhere.
  void run(const std::string& host, int port) {
    if (!server_.bind_to_port(host, port))
      throw Error(ErrorCode::io, "port " + std::to_string(port) + " is busy or unavailable", host);
    server_.listen_after_bind();
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  httplib::Server& server() noexcept { return server_; }

 private:
  static void reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void fail(httplib::Response& res, const Error& e) {
    reply(res, http_status(e.api()), error_body(e.api(), e.message(), e.detail()));
  }

  static nlohmann::json parse_body(const httplib::Request& req) {
    try {
      auto j = nlohmann::json::parse(req.body);
      if (!j.is_object()) throw Error(ErrorCode::schema, "request body must be a JSON object");
      return j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::schema, std::string("request body is not JSON: ") + e.what());
    }
  }

  static std::string request_id(const nlohmann::json& body) {
    if (!body.contains("request_id") || !body["request_id"].is_string() ||
        body["request_id"].get<std::string>().empty())
      throw Error(ErrorCode::parameter, "mutations need a non-empty request_id");
    return body["request_id"].get<std::string>();
  }

  template <class F>
  static httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const Error& e) {
        fail(res, e);
      } catch (const std::exception& e) {
        reply(res, 500, error_body(ApiCode::internal, e.what()));
      }
    };
  }

  void routes() {
    server_.Get("/health", guarded([this](const httplib::Request&, httplib::Response& res) {
      reply(res, 200, {{"status", "ok"}, {"loaded", engine_.loaded()}, {"decisions", engine_.decision_count()}});
    }));

    server_.Get(R"(/entities/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      reply(res, 200, engine_.entity_json(EntityId(req.matches[1].str())));
    }));

    server_.Get("/recommendations", guarded([this](const httplib::Request& req, httplib::Response& res) {
      if (!req.has_param("entity")) throw Error(ErrorCode::parameter, "entity parameter is required");
      std::optional<std::size_t> limit;
      if (req.has_param("limit")) {
        const auto v = req.get_param_value("limit");
        if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
          throw Error(ErrorCode::parameter, "limit must be a non-negative integer", v);
        limit = std::stoul(v);
      }
      EntityId id(req.get_param_value("entity"));
      nlohmann::json recs = nlohmann::json::array();
      for (const auto& r : engine_.recommend(id, limit)) recs.push_back(to_json(r));
      reply(res, 200, {{"entity", id.str()}, {"recommendations", recs}});
    }));

    server_.Post("/decisions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto body = parse_body(req);
      auto rid = request_id(body);
      Decision d = decision_from_json(body);
      d.request_id = rid;
      if (const auto* prior = engine_.decision_by_request(rid)) {
        if (prior->ref != d.ref || prior->verdict != d.verdict || prior->reviewer != d.reviewer)
          throw Error(ErrorCode::conflict, "request_id " + rid + " was used for a different decision");
        reply(res, 200, {{"recorded", false}, {"decision", to_json(*prior)}});
        return;
      }
      bool fresh = engine_.record(d);
      const auto* stored = engine_.decision_by_request(rid);
      reply(res, fresh ? 201 : 200, {{"recorded", fresh}, {"decision", to_json(stored ? *stored : d)}});
    }));

    server_.Get("/eda/report", guarded([this](const httplib::Request&, httplib::Response& res) {
      reply(res, 200, to_json(engine_.eda_report()));
    }));

    server_.Get("/models/grid", guarded([this](const httplib::Request& req, httplib::Response& res) {
      Unit unit = Unit::historian_pair;
      if (req.has_param("unit")) {
        auto u = parse_unit(req.get_param_value("unit"));
        if (!u) throw Error(ErrorCode::parameter, "unit must be historian_pair or collection_pair");
        unit = *u;
      }
      auto j = to_json(engine_.grid(unit));
      j["known_unknown"] = engine_.known_unknown(unit);
      reply(res, 200, j);
    }));

    server_.Post("/train", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto body = parse_body(req);
      auto rid = request_id(body);
      {
        std::lock_guard lock(train_mutex_);
        if (auto it = trained_.find(rid); it != trained_.end()) {
          reply(res, 200, it->second);
          return;
        }
      }
      Unit unit = Unit::historian_pair;
      if (body.contains("unit")) {
        auto u = parse_unit(body.value("unit", std::string()));
        if (!u) throw Error(ErrorCode::parameter, "unit must be historian_pair or collection_pair");
        unit = *u;
      }
      auto m = engine_.train(unit, body.value("spec", std::string("auto")), body.value("model", std::string("auto")));
      nlohmann::json out{{"request_id", rid}, {"model", to_json(m)}};
      std::lock_guard lock(train_mutex_);
      trained_.emplace(rid, out);
      reply(res, 200, out);
    }));

    server_.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (!res.body.empty()) return;
      if (res.status == 404)
        reply(res, 404, error_body(ApiCode::not_found, "no such route"));
      else if (res.status >= 400 && res.status < 500)
        reply(res, res.status, error_body(ApiCode::parameter, "bad request"));
      else
        reply(res, res.status, error_body(ApiCode::internal, "server error"));
    });
  }

  Engine& engine_;
  httplib::Server server_;
  std::thread thread_;
  std::mutex train_mutex_;
  std::map<std::string, nlohmann::json> trained_;
};

}  // namespace relrec
