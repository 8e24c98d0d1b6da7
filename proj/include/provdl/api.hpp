#pragma once

#include <charconv>
#include <map>
#include <string>

#include "httplib.h"
#include "provdl/explorer.hpp"
#include "provdl/render.hpp"

namespace provdl {

struct ApiResponse {
  int status = 200;
  std::string body;
};

/// JSON endpoints over a finished evaluation. Every handler is read-only.
class ExplorerApi {
 public:
  ExplorerApi(const Explorer& explorer, EvalStats stats) : ex_(explorer), stats_(std::move(stats)) {}

  /// Dispatches one request. `path` excludes the query string.
  ApiResponse handle(const std::string& method, const std::string& path,
                     const std::multimap<std::string, std::string>& query = {}, const std::string& body = {}) const {
    try {
      if (method == "GET" && path == "/relations") return ok(relations());
      if (method == "GET" && path == "/stats") return ok(to_json(stats_));
      if (method == "GET" && path.rfind("/tuples/", 0) == 0) return ok(tuples(path.substr(8), query));
      if (method == "POST") {
        Json req = parse_body(body);
        if (path == "/explain") return ok(explain(req));
        if (path == "/expand") return ok(expand(req));
        if (path == "/negation/candidates") return ok(candidates(req));
        if (path == "/negation/evaluate") return ok(evaluate(req));
      }
      return fail(404, "not found", method + " " + path);
    } catch (const UnknownTuple& e) {
      return fail(404, "unknown tuple", e.what());
    } catch (const TupleExists& e) {
      return fail(409, "tuple exists", e.what());
    } catch (const InternalError& e) {
      return fail(500, "internal error", e.what());
    } catch (const SemanticError& e) {
      std::string what = e.what();
      if (what.rfind("undeclared relation", 0) == 0) return fail(404, "unknown relation", what);
      return fail(400, "bad request", what);
    } catch (const Error& e) {
      return fail(400, "bad request", e.what());
    } catch (const Json::exception& e) {
      return fail(400, "bad request", e.what());
    }
  }

  /// Registers every endpoint on an httplib server, with permissive CORS.
  void mount(httplib::Server& server) const {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    auto forward = [this](const httplib::Request& req, httplib::Response& res) {
      std::multimap<std::string, std::string> query(req.params.begin(), req.params.end());
      auto r = handle(req.method, req.path, query, req.body);
      res.status = r.status;
      res.set_content(r.body, "application/json");
    };
    server.Get(R"(/.*)", forward);
    server.Post(R"(/.*)", forward);
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  }

 private:
  static ApiResponse ok(const Json& j) { return {200, j.dump()}; }
  static ApiResponse fail(int status, const std::string& error, const std::string& detail) {
    return {status, Json{{"error", error}, {"detail", detail}}.dump()};
  }

  static Json parse_body(const std::string& body) {
    Json j = Json::parse(body.empty() ? "{}" : body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error("request body must be a JSON object");
    return j;
  }

  static GroundTuple tuple_field(const Json& req) {
    if (!req.contains("tuple")) throw Error("missing field 'tuple'");
    return tuple_from_json(req["tuple"]);
  }

  const Program& program() const { return ex_.database().program(); }

  Json relations() const {
    Json out = Json::array();
    for (RelationId id = 0; id < program().relations().size(); ++id) {
      const auto& d = program().relation(id);
      Json attrs = Json::array();
      for (const auto& a : d.attributes) attrs.push_back({{"name", a.name}, {"type", to_string(a.type)}});
      out.push_back({{"name", d.name},
                     {"arity", d.arity()},
                     {"attributes", attrs},
                     {"io", d.is_input ? "input" : d.is_output ? "output" : "internal"},
                     {"size", ex_.database().relation(id).size()}});
    }
    return out;
  }

  static std::size_t number_param(const std::multimap<std::string, std::string>& q, const std::string& key,
                                  std::size_t fallback) {
    auto it = q.find(key);
    if (it == q.end() || it->second.empty()) return fallback;
    std::size_t v = 0;
    const auto& s = it->second;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw Error(key + " must be a non-negative integer");
    return v;
  }

  /// prefix is a comma-separated list binding the leading attributes.
  Json tuples(const std::string& name, const std::multimap<std::string, std::string>& q) const {
    RelationId id = program().id_of(name);
    const auto& decl = program().relation(id);
    const auto& db = ex_.database();
    std::size_t offset = number_param(q, "offset", 0);
    std::size_t limit = number_param(q, "limit", 100);

    Tuple prefix;
    bool unknown = false;
    if (auto it = q.find("prefix"); it != q.end() && !it->second.empty()) {
      std::size_t start = 0;
      const std::string& s = it->second;
      for (;;) {
        auto comma = s.find(',', start);
        std::string field = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        std::size_t pos = prefix.size();
        if (pos >= decl.arity()) throw Error("prefix longer than the relation");
        if (decl.attributes[pos].type == AttrType::Number) {
          std::int64_t n = 0;
          auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), n);
          if (ec != std::errc{} || p != field.data() + field.size()) throw Error("'" + field + "' is not a number");
          prefix.push_back(n);
        } else if (auto v = db.symbols().find(field)) {
          prefix.push_back(*v);
        } else {
          unknown = true;
          prefix.push_back(0);
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
    }

    Json rows = Json::array();
    std::size_t total = 0;
    if (!unknown) {
      db.relation(id).scan({}, prefix, [&](const AnnotatedRelation::Entry& e) {
        if (total >= offset && rows.size() < limit) {
          auto a = AnnotatedRelation::annotation(e);
          rows.push_back({{"tuple", tuple_json(db.decode(id, e.first))}, {"rule", a.rule}, {"height", a.height}});
        }
        ++total;
        return true;
      });
    }
    return {{"relation", name}, {"total", total}, {"offset", offset}, {"limit", limit}, {"rows", rows}};
  }

  Json explain(const Json& req) const {
    std::size_t depth = kDefaultDepth;
    if (req.contains("depth")) {
      const auto& d = req["depth"];
      if (d.is_null() || (d.is_string() && d == "inf"))
        depth = kUnboundedDepth;
      else if (d.is_number_unsigned() && d.get<std::size_t>() > 0)
        depth = d.get<std::size_t>();
      else
        throw Error("depth must be a positive integer or \"inf\"");
    }
    return to_json(ex_.explain(tuple_field(req), depth));
  }

  Json expand(const Json& req) const { return to_json(ex_.explain(tuple_field(req), 1)); }

  Json candidates(const Json& req) const {
    Json out = Json::array();
    for (const auto& c : ex_.negation_candidates(tuple_field(req))) out.push_back(to_json(c));
    return out;
  }

  Json evaluate(const Json& req) const {
    GroundTuple t = tuple_field(req);
    if (!req.contains("rule") || !req["rule"].is_number_unsigned()) throw Error("missing field 'rule'");
    RuleId rule = req["rule"].get<RuleId>();
    VariableBindings b;
    if (req.contains("bindings")) {
      if (!req["bindings"].is_object()) throw Error("bindings must be an object");
      for (const auto& [name, v] : req["bindings"].items()) {
        if (v.is_string())
          b[name] = ex_.parse_value(rule, name, v.get<std::string>());
        else if (v.is_number_integer())
          b[name] = Term::num(v.get<std::int64_t>());
        else
          throw Error("binding for " + name + " must be a string or integer");
      }
    }
    return to_json(ex_.evaluate_failed_subproof(rule, t, b));
  }

  const Explorer& ex_;
  EvalStats stats_;
};

/// Blocks serving the API on host:port.
inline bool serve(const ExplorerApi& api, const std::string& host, int port) {
  httplib::Server server;
  api.mount(server);
  return server.listen(host, port);
}

}  // namespace provdl
