#pragma once

/**
 * @file http.hpp
 * @brief JSON routes over a SessionStore.
 *
 *     POST /sessions                      {imageRef|synthSpec, gtRef?, maskRef?, budget?, roiSize?, seed?}
 *     GET  /sessions/:id
 *     POST /sessions/:id/rois/:k/command  {text}  ("command" is accepted too)
 *     POST /sessions/:id/rois/:k/accept
 *     POST /sessions/:id/rois/:k/reject
 *     GET  /sessions/:id/replay           text/plain transcript
 *     GET  /health
 *
 * Errors are `{"error": message, ...detail}` with 400 (bad JSON), 404, 409
 * or 422.
 */

#include <charconv>
#include <string>

#include "httplib.h"
#include "langseg/session.hpp"

namespace langseg {

namespace detail {

inline void sendJson(httplib::Response& res, const Json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

inline Json parseBody(const httplib::Request& req) {
    if (req.body.empty()) return Json::object();
    try {
        Json j = Json::parse(req.body);
        if (!j.is_object()) throw ServiceError(400, "request body must be a JSON object");
        return j;
    } catch (const Json::parse_error& e) {
        throw ServiceError(400, std::string("invalid JSON: ") + e.what());
    }
}

inline std::size_t roiIndex(const httplib::Request& req) {
    const std::string& s = req.path_params.at("k");
    std::size_t k = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), k);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw ServiceError(404, "roi index '" + s + "' is not a number");
    return k;
}

template <typename F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const ServiceError& e) {
            Json body = e.detail();
            body["error"] = e.what();
            sendJson(res, body, e.status());
        } catch (const Json::exception& e) {
            sendJson(res, Json{{"error", std::string("bad request field: ") + e.what()}}, 422);
        } catch (const Error& e) {
            sendJson(res, Json{{"error", e.what()}}, 422);
        }
    };
}

} // namespace detail

inline void mountRoutes(httplib::Server& server, SessionStore& store) {
    using detail::guarded;
    using detail::sendJson;
    using Req = httplib::Request;
    using Res = httplib::Response;

    server.set_post_routing_handler([](const Req&, Res& res) {
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    });
    server.Options(R"(/.*)", [](const Req&, Res& res) { res.status = 204; });

    server.Get("/health", [](const Req&, Res& res) { sendJson(res, Json{{"status", "ok"}}); });

    server.Post("/sessions", guarded([&store](const Req& req, Res& res) {
                    sendJson(res, store.create(detail::parseBody(req)), 201);
                }));
    server.Get("/sessions/:id", guarded([&store](const Req& req, Res& res) {
                   sendJson(res, store.state(req.path_params.at("id")));
               }));
    server.Post("/sessions/:id/rois/:k/command", guarded([&store](const Req& req, Res& res) {
                    Json body = detail::parseBody(req);
                    const char* key = body.contains("text") ? "text" : "command";
                    if (!body.contains(key) || !body[key].is_string())
                        throw ServiceError(422, "body needs a string field 'text'");
                    sendJson(res, store.command(req.path_params.at("id"), detail::roiIndex(req),
                                                body[key].get<std::string>()));
                }));
    server.Post("/sessions/:id/rois/:k/accept", guarded([&store](const Req& req, Res& res) {
                    sendJson(res, store.accept(req.path_params.at("id"), detail::roiIndex(req)));
                }));
    server.Post("/sessions/:id/rois/:k/reject", guarded([&store](const Req& req, Res& res) {
                    sendJson(res, store.reject(req.path_params.at("id"), detail::roiIndex(req)));
                }));
    server.Get("/sessions/:id/replay", guarded([&store](const Req& req, Res& res) {
                   res.set_content(store.replay(req.path_params.at("id")), "text/plain");
               }));
}

} // namespace langseg
