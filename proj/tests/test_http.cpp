#include <gtest/gtest.h>

#include <thread>

#include "langseg/http.hpp"

using namespace langseg;

namespace {

class HttpApi : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        store_ = new SessionStore();
        server_ = new httplib::Server();
        mountRoutes(*server_, *store_);
        port_ = server_->bind_to_any_port("127.0.0.1");
        thread_ = new std::thread([] { server_->listen_after_bind(); });
        server_->wait_until_ready();
    }

    static void TearDownTestSuite() {
        server_->stop();
        thread_->join();
        delete thread_;
        delete server_;
        delete store_;
    }

    static httplib::Client client() {
        httplib::Client c("127.0.0.1", port_);
        c.set_read_timeout(60, 0);
        return c;
    }

    static Json post(const std::string& path, const Json& body, int expect) {
        auto res = client().Post(path, body.dump(), "application/json");
        EXPECT_TRUE(res);
        if (!res) return {};
        EXPECT_EQ(res->status, expect) << path << " " << res->body;
        EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");
        return Json::parse(res->body);
    }

    static std::string newSession() {
        Json body{{"synthSpec", {{"seed", 21}, {"shift", "intensity"}}}, {"budget", 15}};
        return post("/sessions", body, 201).at("sessionId");
    }

    static inline SessionStore* store_ = nullptr;
    static inline httplib::Server* server_ = nullptr;
    static inline std::thread* thread_ = nullptr;
    static inline int port_ = 0;
};

} // namespace

TEST_F(HttpApi, Health) {
    auto res = client().Get("/health");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(Json::parse(res->body).at("status"), "ok");
}

TEST_F(HttpApi, PreflightAllowed) {
    auto res = client().Options("/sessions");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 204);
    EXPECT_NE(res->get_header_value("Access-Control-Allow-Methods").find("POST"), std::string::npos);
}

TEST_F(HttpApi, FullRefinementFlow) {
    std::string id = newSession();
    auto st = client().Get("/sessions/" + id);
    ASSERT_TRUE(st);
    EXPECT_EQ(st->status, 200);
    Json state = Json::parse(st->body);
    ASSERT_GE(state.at("rois").size(), 2u);

    Json cmd = post("/sessions/" + id + "/rois/0/command", Json{{"text", "Expand the boundary at the top."}}, 200);
    EXPECT_EQ(cmd.at("program"), "OBJ0=EXPAND(direction='TOP', in=MASK)\nFINAL=RESULT(var=OBJ0)\n");
    ASSERT_EQ(cmd.at("etaTrace").size(), 1u);
    EXPECT_GE(cmd.at("etaTrace")[0].at("bestIter").get<int>(), 1);
    EXPECT_TRUE(cmd.at("roiDiceIfGt").contains("after"));
    ASSERT_EQ(cmd.at("log").size(), 2u);
    EXPECT_EQ(cmd.at("log")[0].at("op"), "EXPAND");

    Json acc = post("/sessions/" + id + "/rois/0/accept", Json::object(), 200);
    EXPECT_EQ(acc.at("status"), "accepted");

    post("/sessions/" + id + "/rois/1/command", Json{{"command", "fill up the holes"}}, 200);
    EXPECT_EQ(post("/sessions/" + id + "/rois/1/reject", Json::object(), 200).at("status"), "pending");

    auto rep = client().Get("/sessions/" + id + "/replay");
    ASSERT_TRUE(rep);
    EXPECT_EQ(rep->status, 200);
    EXPECT_EQ(rep->get_header_value("Content-Type"), "text/plain");
    auto [image, initial, current] = store_->snapshot(id);
    EXPECT_EQ(replayTranscript(image, initial, rep->body), current);
}

TEST_F(HttpApi, ErrorBodies) {
    std::string id = newSession();
    Json e = post("/sessions/" + id + "/rois/0/command", Json{{"text", "dance around"}}, 422);
    EXPECT_EQ(e.at("kind"), "UnrecognizedVerb");
    EXPECT_TRUE(e.contains("error"));
    post("/sessions/" + id + "/rois/0/command", Json{{"words", 3}}, 422);
    post("/sessions/" + id + "/rois/0/accept", Json::object(), 409);
    post("/sessions/" + id + "/rois/999/command", Json{{"text", "fill holes"}}, 404);
    post("/sessions/zzz/rois/0/accept", Json::object(), 404);
    post("/sessions", Json{{"nothing", true}}, 422);

    auto bad = client().Post("/sessions", "{not json", "application/json");
    ASSERT_TRUE(bad);
    EXPECT_EQ(bad->status, 400);
    auto badK = client().Post("/sessions/" + id + "/rois/x/accept", "{}", "application/json");
    ASSERT_TRUE(badK);
    EXPECT_TRUE(badK->status == 404 || badK->status == 422) << badK->status;
    auto missing = client().Get("/sessions/nope");
    ASSERT_TRUE(missing);
    EXPECT_EQ(missing->status, 404);
}

TEST_F(HttpApi, ConcurrentSessionsAreIndependent) {
    std::vector<std::thread> threads;
    std::vector<std::string> ids(4);
    for (int i = 0; i < 4; ++i)
        threads.emplace_back([i, &ids] {
            Json body{{"synthSpec", {{"seed", 100 + i}}}, {"budget", 15}};
            auto res = client().Post("/sessions", body.dump(), "application/json");
            if (res && res->status == 201) ids[static_cast<std::size_t>(i)] = Json::parse(res->body).at("sessionId");
        });
    for (auto& t : threads) t.join();
    std::set<std::string> unique(ids.begin(), ids.end());
    EXPECT_EQ(unique.size(), 4u);
    EXPECT_FALSE(unique.count(""));
}
