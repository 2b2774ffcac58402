#include <gtest/gtest.h>

#include <thread>

#include <httplib.h>

#include "screenline/detections_io.hpp"
#include "screenline/service.hpp"
#include "screenline/synthetic.hpp"
#include "screenline/workflow.hpp"
#include "test_support.hpp"

using namespace screenline;
using screenline::testing::meta;
using screenline::testing::random_timeline;
using screenline::testing::rec;
using screenline::testing::TempDir;

namespace {

HttpResponse call(Service& s, const std::string& method, const std::string& path,
                  std::map<std::string, std::string> params = {}, std::string body = {}) {
  return s.handle({method, path, std::move(params), std::move(body)});
}

Json body(const HttpResponse& r) { return Json::parse(r.body); }

struct Fixture {
  TempDir dir{"svc"};
  Store store{dir.str()};
  Timeline ep = random_timeline(5, 120, 3, 120000, "ep1");
  Service service{store, ServiceConfig{}};

  Fixture() {
    ep.meta.series_id = "show";
    store.put_timeline(ep);
    store.register_episode(meta("pending", 60000, "show", 2));
  }
};

}  // namespace

TEST(Service, HealthAndListing) {
  Fixture f;
  auto r = call(f.service, "GET", "/healthz");
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(body(r)["status"], "ok");
  r = call(f.service, "GET", "/episodes");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(body(r)["episodes"].size(), 2u);
  r = call(f.service, "GET", "/episodes/ep1");
  EXPECT_EQ(body(r)["record_count"], 120);
  EXPECT_EQ(body(call(f.service, "GET", "/episodes/pending"))["record_count"], 0);
}

TEST(Service, ErrorStatuses) {
  Fixture f;
  auto r = call(f.service, "GET", "/episodes/nope/charts/total_counts");
  EXPECT_EQ(r.status, 404);
  EXPECT_EQ(body(r)["error_code"], "UnknownScope");
  EXPECT_EQ(call(f.service, "GET", "/nowhere").status, 404);

  r = call(f.service, "GET", "/episodes/pending/charts/total_counts");
  EXPECT_EQ(r.status, 409);
  EXPECT_EQ(body(r)["error_code"], "NotProcessed");

  r = call(f.service, "GET", "/episodes/ep1/charts/bubble");
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(body(r)["error_code"], "BadParams");
  EXPECT_EQ(call(f.service, "GET", "/episodes/ep1/charts/trend_lines", {{"bucket_ms", "0"}}).status, 422);
  EXPECT_EQ(call(f.service, "GET", "/episodes/ep1/charts/trend_lines", {{"bucket_ms", "1e3"}}).status, 422);
  EXPECT_EQ(call(f.service, "GET", "/episodes/ep1/appearances", {{"from_ms", "9"}, {"to_ms", "9"}}).status, 422);

  EXPECT_EQ(call(f.service, "POST", "/episodes/ep1/charts/total_counts").status, 405);
  EXPECT_EQ(call(f.service, "GET", "/episodes/ep1/ingest").status, 405);

  for (const auto& k : {"error_code", "message", "detail"}) EXPECT_TRUE(body(r).contains(k)) << k;
}

TEST(Service, ChartMatchesWorkflowPayload) {
  Fixture f;
  const auto r = call(f.service, "GET", "/episodes/ep1/charts/coappearance_matrix", {{"window_ms", "500"}});
  ASSERT_EQ(r.status, 200);
  ChartRequest req;
  req.chart_type = ChartType::coappearance_matrix;
  req.episode_id = "ep1";
  req.window.coappearance_window_ms = 500;
  EXPECT_EQ(r.body, chart_payload(get_chart(f.store, req)));
}

TEST(Service, SeriesScopeChart) {
  Fixture f;
  auto r = call(f.service, "GET", "/series/show/charts/seasonal_comparison", {{"seasons", "1"}});
  ASSERT_EQ(r.status, 200) << r.body;
  EXPECT_EQ(body(r)["chart_type"], "seasonal_comparison");
  r = call(f.service, "GET", "/series/ghost/charts/seasonal_comparison");
  EXPECT_EQ(r.status, 404);
}

TEST(Service, Appearances) {
  Fixture f;
  auto r = call(f.service, "GET", "/episodes/ep1/appearances", {{"celebrity", "c0,c2"}, {"from_ms", "30000"}});
  ASSERT_EQ(r.status, 200);
  std::size_t want = 0;
  for (const auto& x : f.ep.records) want += (x.celebrity_id != "c1" && x.t_ms >= 30000);
  EXPECT_EQ(body(r)["count"], want);
  for (const auto& x : body(r)["records"]) EXPECT_NE(x["celebrity_id"], "c1");
}

TEST(Service, IngestValidation) {
  Fixture f;
  f.store.register_episode(meta("new", 10000));
  std::string lines = to_jsonl_line(rec("new", "a", 100, 0)) + "\n" + to_jsonl_line(rec("new", "b", 200, 1)) + "\n";
  auto r = call(f.service, "POST", "/episodes/new/ingest", {}, lines);
  ASSERT_EQ(r.status, 200) << r.body;
  EXPECT_EQ(body(r)["stored"], 2);
  EXPECT_TRUE(f.store.episode("new")->processed);

  r = call(f.service, "POST", "/episodes/new/ingest", {}, lines + "{not json\n");
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(body(r)["error_code"], "ParseError");
  EXPECT_EQ(body(r)["detail"]["line"], 3);

  r = call(f.service, "POST", "/episodes/new/ingest", {}, lines + to_jsonl_line(rec("new", "c", 200, 1)) + "\n");
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(body(r)["error_code"], "DuplicateKey");

  r = call(f.service, "POST", "/episodes/new/ingest", {}, to_jsonl_line(rec("new", "a", 20000, 0)) + "\n");
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(body(r)["error_code"], "OutOfRange");

  // failed ingests leave the first version in place
  EXPECT_EQ(f.store.timeline("new")->records.size(), 2u);

  // meta header registers an unknown episode
  Json head = {{"meta", to_json(meta("fresh", 5000, "other"))}};
  r = call(f.service, "POST", "/episodes/fresh/ingest", {}, head.dump() + "\n" + to_jsonl_line(rec("fresh", "a", 1, 0)));
  EXPECT_EQ(r.status, 200) << r.body;
  EXPECT_EQ(f.store.episode("fresh")->series_id, "other");
}

TEST(Service, IngestTooLarge) {
  TempDir dir("svc-big");
  Store store(dir.str());
  store.register_episode(meta("e", 10000));
  ServiceConfig cfg;
  cfg.max_body_bytes = 64;
  Service s(store, cfg);
  const auto r = call(s, "POST", "/episodes/e/ingest", {}, std::string(65, ' '));
  EXPECT_EQ(r.status, 413);
  EXPECT_EQ(body(r)["error_code"], "TooLarge");
}

TEST(Service, ProcessRunsPipeline) {
  TempDir dir("svc-proc");
  const auto gallery = synth::gen_gallery(3, 6, 64);
  const auto schedule = synth::gen_schedule(4, gallery, 30000, 5000, 2.0);
  const auto events = synth::emit_detections(schedule, gallery, 2.0, 0.05, 9);
  const std::string gallery_path = dir.file("g.keix");
  const std::string dets_path = dir.file("e.dets");
  gallery.to_index().save(gallery_path);
  write_detections(dets_path, frames_from_events(events));

  Store store(dir.file("db"));
  EpisodeMeta m = meta("e", 30000);
  m.source = dets_path;
  store.register_episode(m);
  ServiceConfig cfg;
  Service s(store, cfg);
  EXPECT_EQ(call(s, "POST", "/episodes/e/process").status, 422);  // no index configured
  EXPECT_EQ(call(s, "POST", "/episodes/e/process", {}, "[1]").status, 400);

  const Json req = {{"index", gallery_path}, {"workers", 3}};
  auto r = call(s, "POST", "/episodes/e/process", {}, req.dump());
  ASSERT_EQ(r.status, 200) << r.body;
  EXPECT_EQ(body(r)["stored"], events.size());
  EXPECT_EQ(call(s, "POST", "/episodes/zzz/process", {}, req.dump()).status, 404);
  EXPECT_EQ(call(s, "POST", "/episodes/e/process", {}, Json{{"index", gallery_path}, {"workers", "x"}}.dump()).status, 422);
}

TEST(Service, RealSocket) {
  Fixture f;
  const int port = f.service.bind("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  std::thread server([&] { f.service.listen(); });
  httplib::Client client("127.0.0.1", port);
  auto res = client.Get("/episodes/ep1/charts/total_counts");
  for (int i = 0; !res && i < 50; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    res = client.Get("/episodes/ep1/charts/total_counts");
  }
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->body, call(f.service, "GET", "/episodes/ep1/charts/total_counts").body);
  auto bad = client.Get("/episodes/ep1/charts/segment_heatmap?segment_ms=-5");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 422);
  f.service.stop();
  server.join();
}
