#include "pls/rng.hpp"
#include "pls/service.hpp"
#include "pls/simulation.hpp"
#include "pls/spreading.hpp"

#include <gtest/gtest.h>
#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string moons_csv(pls::Index n, std::uint64_t seed) {
  std::ostringstream out;
  pls::write_delimited_dataset(pls::make_two_moons(n, 0.1, pls::kDefaultMoonSharpness, seed), out);
  return out.str();
}

class ServiceTest : public ::testing::Test {
protected:
  pls::ServiceResponse call(const std::string& method, const std::string& path,
                            const json& body = nullptr,
                            std::map<std::string, std::string> query = {}) {
    return service_->handle({method, path, std::move(query), body.is_null() ? "" : body.dump()});
  }

  std::string create(pls::Index n = 200, pls::Index k = 5, double alpha = 0.9) {
    const json body{{"dataset", {{"content", moons_csv(n, 3)}}},
                    {"graph", {{"kind", "knn"}, {"k", k}}},
                    {"solver", {{"alpha", alpha}, {"tolerance", 1e-10}}},
                    {"lipschitz", 1.0}};
    const auto r = call("POST", "/sessions", body);
    EXPECT_EQ(r.status, 201) << r.body;
    return json::parse(r.body).at("session_id").get<std::string>();
  }

  std::unique_ptr<pls::AnnotationService> service_ =
      std::make_unique<pls::AnnotationService>(pls::ServiceOptions{});
};

}  // namespace

TEST_F(ServiceTest, CreateGivesDistinctIds) {
  const auto a = create();
  const auto b = create();
  EXPECT_NE(a, b);
  EXPECT_EQ(service_->session_count(), 2u);
}

TEST_F(ServiceTest, CreateRejectsBadInput) {
  auto r = call("POST", "/sessions",
                json{{"dataset", {{"content", moons_csv(20, 1)}}}, {"graph", {{"k", 20}}}});
  EXPECT_EQ(r.status, 400);
  EXPECT_NE(json::parse(r.body).at("error").get<std::string>().find("k"), std::string::npos);
  EXPECT_EQ(service_->handle({"POST", "/sessions", {}, "{not json"}).status, 400);
  EXPECT_EQ(call("POST", "/sessions", json::object()).status, 400);
  EXPECT_EQ(call("POST", "/sessions", json{{"dataset_path", "/nonexistent.csv"}}).status, 400);
}

TEST_F(ServiceTest, CapacityGives507) {
  pls::ServiceOptions opts;
  opts.limits.max_points = 100;
  opts.limits.max_sessions = 1;
  service_ = std::make_unique<pls::AnnotationService>(opts);
  EXPECT_EQ(call("POST", "/sessions", json{{"dataset", {{"content", moons_csv(101, 1)}}}}).status, 507);
  EXPECT_EQ(call("POST", "/sessions", json{{"dataset", {{"content", moons_csv(100, 1)}}}}).status, 201);
  EXPECT_EQ(call("POST", "/sessions", json{{"dataset", {{"content", moons_csv(50, 1)}}}}).status, 507);
}

TEST_F(ServiceTest, FreshSessionReads) {
  const auto id = create(100);
  auto r = call("GET", "/sessions/" + id + "/estimates");
  ASSERT_EQ(r.status, 200);
  const auto est = json::parse(r.body);
  ASSERT_EQ(est.at("rows").size(), 100u);
  for (const auto& row : est.at("rows")) {
    EXPECT_EQ(row.at("probabilities")[0].get<double>(), 0.5);
    EXPECT_EQ(row.at("received_mass").get<double>(), 0.0);
  }
  const auto sug = json::parse(call("GET", "/sessions/" + id + "/suggestions", nullptr, {{"count", "3"}}).body);
  EXPECT_EQ(sug.at("point_ids"), json::array({"0", "1", "2"}));
  const auto all = json::parse(call("GET", "/sessions/" + id + "/suggestions", nullptr, {{"count", "1000"}}).body);
  EXPECT_EQ(all.at("point_ids").size(), 100u);
  const auto ci = json::parse(call("GET", "/sessions/" + id + "/uncertainty").body);
  for (const auto& row : ci.at("rows"))
    for (const auto& iv : row.at("intervals")) {
      EXPECT_EQ(iv.at("lower").get<double>(), 0.0);
      EXPECT_EQ(iv.at("upper").get<double>(), 1.0);
    }
  const auto pts = json::parse(call("GET", "/sessions/" + id + "/points", nullptr, {{"limit", "5"}}).body);
  EXPECT_EQ(pts.at("rows").size(), 5u);
  EXPECT_EQ(pts.at("total").get<int>(), 100);
}

TEST_F(ServiceTest, AnnotationsAndErrors) {
  const auto id = create();
  auto r = call("POST", "/sessions/" + id + "/annotations", json{{"point_id", "7"}, {"class", 0}});
  ASSERT_EQ(r.status, 200) << r.body;
  auto a = json::parse(r.body);
  EXPECT_EQ(a.at("sequence").get<int>(), 1);
  EXPECT_GT(a.at("estimate")[0].get<double>(), a.at("estimate")[1].get<double>());
  EXPECT_GT(a.at("changed_points").get<int>(), 1);
  r = call("POST", "/sessions/" + id + "/annotations", json{{"point_id", "7"}, {"class", 0}});
  EXPECT_EQ(json::parse(r.body).at("sequence").get<int>(), 2);

  EXPECT_EQ(call("POST", "/sessions/" + id + "/annotations", json{{"point_id", "nope"}, {"class", 0}}).status, 404);
  EXPECT_EQ(call("POST", "/sessions/bogus/annotations", json{{"point_id", "1"}, {"class", 0}}).status, 404);
  EXPECT_EQ(call("GET", "/sessions/bogus/estimates").status, 404);
  EXPECT_EQ(call("POST", "/sessions/" + id + "/annotations", json{{"point_id", "1"}, {"class", 5}}).status, 400);
  EXPECT_EQ(call("GET", "/sessions/" + id + "/uncertainty", nullptr, {{"method", "bayes"}}).status, 400);
  EXPECT_EQ(call("GET", "/sessions/" + id + "/estimates", nullptr, {{"offset", "-1"}}).status, 400);

  const auto ev = json::parse(call("GET", "/sessions/" + id + "/events").body);
  EXPECT_EQ(ev.at("events").size(), 2u);
}

TEST_F(ServiceTest, ReadsDoNotMutateAndMatchReplay) {
  const auto id = create(300, 5, 0.9);
  pls::Rng rng(4);
  for (int i = 0; i < 25; ++i) {
    const json body{{"point_id", std::to_string(rng.below(300))}, {"class", rng.below(2)}};
    ASSERT_EQ(call("POST", "/sessions/" + id + "/annotations", body).status, 200);
  }
  const auto before = call("GET", "/sessions/" + id + "/estimates").body;
  call("GET", "/sessions/" + id + "/uncertainty", nullptr, {{"method", "hoeffding"}});
  call("GET", "/sessions/" + id + "/suggestions");
  call("GET", "/sessions/" + id + "/points");
  call("GET", "/sessions/" + id);
  EXPECT_EQ(call("GET", "/sessions/" + id + "/estimates").body, before);

  // Replay oracle: the same log applied to a fresh library session.
  const auto data = pls::make_two_moons(300, 0.1, pls::kDefaultMoonSharpness, 3);
  pls::SolverConfig solver;
  solver.alpha = 0.9;
  solver.tolerance = 1e-10;
  pls::SpreadSession replay(std::make_shared<const pls::NormalizedOperator>(
                                pls::build_knn_graph(data, 5), pls::Normalization::Symmetric),
                            solver, 2);
  const auto log = json::parse(call("GET", "/sessions/" + id + "/events").body);
  for (const auto& e : log.at("events"))
    replay.annotate(*data.find(e.at("point_id").get<std::string>()), e.at("class").get<pls::Index>());
  const auto est = replay.estimates();
  const auto rows = json::parse(before).at("rows");
  double worst = 0.0;
  for (std::size_t q = 0; q < rows.size(); ++q)
    for (int c = 0; c < 2; ++c)
      worst = std::max(worst, std::abs(rows[q].at("probabilities")[c].get<double>() -
                                       est.probabilities(static_cast<Eigen::Index>(q), c)));
  EXPECT_LE(worst, 1e-9);
}

TEST_F(ServiceTest, SuggestionsAvoidAnnotatedRegion) {
  const auto id = create(200);
  for (int i = 0; i < 10; ++i)
    call("POST", "/sessions/" + id + "/annotations", json{{"point_id", "0"}, {"class", 1}});
  const auto est = json::parse(call("GET", "/sessions/" + id + "/estimates").body).at("rows");
  const auto sug = json::parse(call("GET", "/sessions/" + id + "/suggestions", nullptr, {{"count", "20"}}).body);
  const double heavy = est[0].at("received_mass").get<double>();
  for (const auto& m : sug.at("received_mass")) EXPECT_LT(m.get<double>(), heavy);
  for (const auto& pid : sug.at("point_ids")) EXPECT_NE(pid.get<std::string>(), "0");
}

TEST_F(ServiceTest, PointsNeedTwoDimensions) {
  std::ostringstream csv;
  pls::write_delimited_dataset(pls::make_sine_1d(50, 0, 1, 2), csv);
  const auto r = call("POST", "/sessions", json{{"dataset", {{"content", csv.str()}}}});
  ASSERT_EQ(r.status, 201);
  const auto id = json::parse(r.body).at("session_id").get<std::string>();
  EXPECT_EQ(call("GET", "/sessions/" + id + "/points").status, 400);
}

TEST(ServiceHttp, ConcurrentWritersAreLinearized) {
  pls::ServiceOptions opts;
  opts.port = 0;
  pls::AnnotationService service(opts);
  const int port = service.bind();
  service.start();
  httplib::Client client("127.0.0.1", port);
  const json body{{"dataset", {{"content", moons_csv(500, 5)}}}, {"solver", {{"alpha", 0.99}}}};
  auto res = client.Post("/sessions", body.dump(), "application/json");
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 201);
  const auto id = json::parse(res->body).at("session_id").get<std::string>();

  std::atomic<int> ok{0}, conflicts{0}, other{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      httplib::Client c("127.0.0.1", port);
      for (int i = 0; i < 10; ++i) {
        const json a{{"point_id", std::to_string(t * 50 + i)}, {"class", t % 2}};
        for (;;) {  // retry on conflict
          auto r = c.Post("/sessions/" + id + "/annotations", a.dump(), "application/json");
          if (r && r->status == 200) {
            ++ok;
            break;
          }
          if (r && r->status == 409) {
            ++conflicts;
            continue;
          }
          ++other;
          break;
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(other.load(), 0);
  EXPECT_EQ(ok.load(), 40);
  auto ev = client.Get("/sessions/" + id + "/events");
  ASSERT_TRUE(ev);
  const auto events = json::parse(ev->body).at("events");
  ASSERT_EQ(events.size(), 40u);
  for (std::size_t i = 0; i < events.size(); ++i)
    EXPECT_EQ(events[i].at("sequence").get<std::size_t>(), i + 1);
  service.stop();
}

TEST(ServicePersistence, RestartReplaysLog) {
  const fs::path dir = fs::temp_directory_path() / "pls_service_state";
  fs::remove_all(dir);
  pls::ServiceOptions opts;
  opts.state_dir = dir;
  std::string id, estimates;
  {
    pls::AnnotationService service(opts);
    auto r = service.handle({"POST", "/sessions", {}, json{{"dataset", {{"content", moons_csv(150, 2)}}}}.dump()});
    ASSERT_EQ(r.status, 201);
    id = json::parse(r.body).at("session_id").get<std::string>();
    for (int i = 0; i < 6; ++i)
      service.handle({"POST", "/sessions/" + id + "/annotations", {},
                      json{{"point_id", std::to_string(i * 20)}, {"class", i % 2}}.dump()});
    estimates = service.handle({"GET", "/sessions/" + id + "/estimates", {}, ""}).body;
  }
  pls::AnnotationService restarted(opts);
  EXPECT_EQ(restarted.session_count(), 1u);
  const auto again = restarted.handle({"GET", "/sessions/" + id + "/estimates", {}, ""});
  ASSERT_EQ(again.status, 200);
  const auto a = json::parse(estimates).at("rows");
  const auto b = json::parse(again.body).at("rows");
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t q = 0; q < a.size(); ++q)
    for (int c = 0; c < 2; ++c)
      EXPECT_NEAR(a[q].at("probabilities")[c].get<double>(), b[q].at("probabilities")[c].get<double>(), 1e-9);
  const auto next = restarted.handle({"POST", "/sessions/" + id + "/annotations", {},
                                      json{{"point_id", "3"}, {"class", 0}}.dump()});
  EXPECT_EQ(json::parse(next.body).at("sequence").get<int>(), 7);
  fs::remove_all(dir);
}

TEST(ServiceConfig, LimitsFile) {
  const fs::path p = fs::temp_directory_path() / "pls_limits.json";
  std::ofstream(p) << R"({"max_points": 10, "max_sessions": 3})";
  const auto limits = pls::load_service_limits(p);
  EXPECT_EQ(limits.max_points, 10u);
  EXPECT_EQ(limits.max_sessions, 3u);
  fs::remove(p);
}
