#include <gtest/gtest.h>

#include <chrono>

#include <httplib.h>

#include "fprig/http_server.hpp"
#include "fprig/http_util.hpp"
#include "fprig/live_client.hpp"
#include "support.hpp"

using namespace fprig;
using fprig::testing::TempDir;

namespace {

class ServerTest : public ::testing::Test {
 protected:
  TempDir dir;
  SessionStore store{dir.path()};
  AttestationStore attestations{dir.path() / "attestations.jsonl"};
  LocalAttestor attestor{attestations};
  IngestService ingest{store, attestor};
  HttpServer server{ingest, &attestations, {}};

  void SetUp() override { server.start(); }
  void TearDown() override { server.stop(); }
};

}  // namespace

TEST_F(ServerTest, Healthz) {
  JsonClient c(server.url());
  EXPECT_EQ(c.get("/healthz").at("status"), "ok");
}

// 60 s of the default scenario, end to end over HTTP.
TEST_F(ServerTest, CountLaw) {
  const auto t0 = std::chrono::steady_clock::now();
  Scenario sc;
  sc.config.session_id = "count";
  sc.duration_ms = 60000;
  auto summary = run_scenario(sc, server.url(), true);
  EXPECT_LT(fprig::testing::elapsed_s(t0), 120.0);

  auto& m = summary.final_manifest;
  EXPECT_NEAR(m.record_counts["gsr"], 60, 1);
  EXPECT_NEAR(m.record_counts["image"], 60, 1);
  EXPECT_NEAR(m.record_counts["eeg"], 7680, 1);
  EXPECT_GE(m.record_counts["band_power"], 59);
  EXPECT_LE(m.record_counts["band_power"], 60);
  EXPECT_GE(m.segment_count, 1);
  EXPECT_EQ(m.status, SessionStatus::sealed);
  EXPECT_EQ(summary.acked["eeg"], 7680);
  EXPECT_EQ(summary.sent["gsr"], 60);

  JsonClient c(server.url());
  EXPECT_EQ(c.get("/sessions/count/records?kinds=gsr").size(), 60u);
  EXPECT_EQ(c.get("/sessions/count/records?t0=10000&t1=20000&kinds=gsr,image").size(), 20u);
  EXPECT_TRUE(c.get("/sessions/count/records?t0=5&t1=5").empty());
  EXPECT_EQ(manifest_from_json(c.get("/sessions/count/manifest")), m);

  auto report = c.post("/verify", {{"session_id", "count"}});
  EXPECT_EQ(report.at("verdict"), "intact");
}

TEST_F(ServerTest, TonesReachTheSimulator) {
  Scenario sc;
  sc.config.session_id = "tones";
  sc.config.des_interval_min_s = 10;
  sc.config.des_interval_max_s = 10;
  sc.duration_ms = 45000;
  auto summary = run_scenario(sc, server.url(), true);
  EXPECT_EQ(summary.tones_received, 4);
  EXPECT_EQ(summary.final_manifest.record_counts["des_tone"], 4);
}

TEST_F(ServerTest, ZeroDurationScenario) {
  Scenario sc;
  sc.config.session_id = "zero";
  sc.duration_ms = 0;
  auto summary = run_scenario(sc, server.url(), false);
  EXPECT_EQ(summary.final_manifest.segment_count, 1);
  EXPECT_TRUE(store.read_segment("zero", 0).records.empty());
}

TEST_F(ServerTest, DuplicateSessionSurfacesConflict) {
  Scenario sc;
  sc.config.session_id = "dup";
  sc.duration_ms = 0;
  run_scenario(sc, server.url(), false);
  try {
    run_scenario(sc, server.url(), false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::conflict);
  }
}

TEST(Transport, UnreachableEndpoint) {
  Scenario sc;
  sc.config.session_id = "x";
  try {
    run_scenario(sc, "http://127.0.0.1:1", false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::transport);
  }
}

TEST_F(ServerTest, ErrorsMapToStatuses) {
  httplib::Client c("127.0.0.1", server.port());
  auto r = c.Get("/sessions/missing/manifest");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 404);
  EXPECT_EQ(Json::parse(r->body).at("error"), "not_found");

  r = c.Post("/sessions", R"({"session_id":"bad","des_interval_min_s":10,"des_interval_max_s":5})", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
  EXPECT_EQ(Json::parse(r->body).at("field"), "des_interval_min_s");

  r = c.Post("/sessions", "{not json", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);

  r = c.Post("/sessions", R"({"session_id":"ok"})", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 201);
  const char* gsr_at = R"({"session_id":"ok","stream":"gsr","t_ms":%d,"seq":%d,"payload":{"value":2.0}})";
  char buf[256];
  std::snprintf(buf, sizeof buf, gsr_at, 2000, 1);
  r = c.Post("/sessions/ok/ingest", buf, "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(Json::parse(r->body).at("status"), "accepted");
  r = c.Post("/sessions/ok/ingest", buf, "application/json");
  EXPECT_EQ(Json::parse(r->body).at("status"), "duplicate");
  std::snprintf(buf, sizeof buf, gsr_at, 1000, 2);
  r = c.Post("/sessions/ok/ingest", buf, "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 422);
  EXPECT_EQ(Json::parse(r->body).at("error"), "ordering");

  r = c.Post("/sessions/other/ingest", buf, "application/json");  // body names "ok"
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
  EXPECT_EQ(Json::parse(r->body).at("field"), "session_id");
  r = c.Post("/sessions/other/ingest", R"({"session_id":"other","stream":"gsr","t_ms":0,"seq":1,"payload":{"value":1.0}})",
             "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 404);

  r = c.Options("/sessions");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->get_header_value("Access-Control-Allow-Origin"), "*");
}

TEST_F(ServerTest, MediaAndAttestations) {
  Scenario sc;
  sc.config.session_id = "media";
  sc.duration_ms = 2000;
  sc.image_script.push_back({0, "room", {{10, 10, 20, 20}}, {}, {}});
  run_scenario(sc, server.url(), false);

  JsonClient c(server.url());
  auto bytes = c.get_raw("/sessions/media/media/img_1000.ppm");
  EXPECT_EQ(bytes, store.read_media("media", "media/img_1000.ppm"));
  EXPECT_EQ(c.get_raw("/sessions/media/media/media/img_1000.ppm"), bytes);
  EXPECT_THROW(c.get_raw("/sessions/media/media/..%2Fmanifest.json"), Error);

  auto list = c.get("/attestations/media");
  ASSERT_EQ(list.size(), 1u);
  EXPECT_FALSE(list[0].contains("nonce"));
  EXPECT_TRUE(is_lower_hex64(list[0].at("response_digest").get<std::string>()));

  auto digest = list[0].at("file_digest").get<std::string>();
  auto replay = c.post("/attest", {{"session_id", "media"}, {"segment_index", 0}, {"file_digest", digest}});
  EXPECT_EQ(replay.at("response_digest"), list[0].at("response_digest"));
  try {
    c.post("/attest", {{"session_id", "media"}, {"segment_index", 0}, {"file_digest", std::string(64, 'f')}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::conflict);
  }

  auto sessions = c.get("/sessions");
  EXPECT_EQ(sessions, Json::array({"media"}));
}

TEST_F(ServerTest, LiveFeedOverWebSocket) {
  JsonClient c(server.url());
  c.post("/sessions", {{"session_id", "ws"}});
  LiveClient a(server.url(), "ws");
  LiveClient b(server.url(), "ws");
  for (int i = 0; i < 3; ++i) {
    c.post("/sessions/ws/ingest",
           {{"session_id", "ws"}, {"stream", "gsr"}, {"t_ms", i * 1000}, {"seq", i + 1}, {"payload", {{"value", 1.0}}}});
  }
  for (auto* client : {&a, &b}) {
    for (int i = 0; i < 3; ++i) {
      auto ev = client->next(std::chrono::seconds(2));
      ASSERT_TRUE(ev);
      EXPECT_EQ(ev->at("event"), "record");
      EXPECT_EQ(ev->at("record").at("t_ms"), i * 1000);
    }
  }
  c.post("/sessions/ws/stop", Json::object());
  bool sealed = false;
  while (auto ev = a.next(std::chrono::seconds(2))) {
    if (ev->at("event") == "sealed") {
      sealed = true;
      break;
    }
  }
  EXPECT_TRUE(sealed);

  LiveClient late(server.url(), "ws");
  auto ev = late.next(std::chrono::seconds(2));
  ASSERT_TRUE(ev);
  EXPECT_EQ(ev->at("event"), "sealed");
}

TEST_F(ServerTest, PortInUse) {
  HttpServer other(ingest, nullptr, {"127.0.0.1", server.port(), {}});
  try {
    other.start();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::configuration);
  }
}

TEST(Endpoint, Parse) {
  auto e = parse_endpoint("http://example.org:9000/api/");
  EXPECT_EQ(e.host, "example.org");
  EXPECT_EQ(e.port, 9000);
  EXPECT_EQ(e.base_path, "/api");
  EXPECT_EQ(parse_endpoint("localhost:81").port, 81);
  EXPECT_THROW(parse_endpoint("https://x"), Error);
}
