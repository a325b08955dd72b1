#include "articulate/service.hpp"
#include "articulate/synthetic.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <thread>

using namespace articulate;
using namespace articulate::service;
using articulate::testing::TempDir;

namespace {

std::vector<Scenario> scenarios(int n) {
    std::vector<Scenario> out;
    for (int i = 0; i < n; ++i) {
        Scenario s;
        s.source = {"cc:S" + std::to_string(i), "Source", "", "cc", 1.0};
        s.receiving_institution_id = "uni";
        s.scenario_id = s.source.course_id + "->uni";
        for (int c = 0; c < 7; ++c) s.candidates.push_back({"uni:T" + std::to_string(c), "T", "", "uni", 0.9 - 0.1 * c});
        out.push_back(s);
    }
    return out;
}

std::string decision(const std::string& scenario, const std::string& reviewer, const std::string& role,
                     const std::string& choice) {
    return nlohmann::json{{"scenario_id", scenario}, {"reviewer_id", reviewer}, {"role", role}, {"choice", choice}}.dump();
}

} // namespace

TEST(AdoptionStats, OverallIsMeanOfRoleRates) {
    std::vector<Decision> ds;
    auto add = [&](Role r, int acc, int total) {
        for (int i = 0; i < total; ++i) ds.push_back({"s", "r", r, i < acc ? "uni:T0" : kNoneChoice, ""});
    };
    add(Role::staff, 253, 400);  // 63.25%
    add(Role::faculty, 225, 380); // 59.21%
    auto s = adoption_stats(ds);
    EXPECT_EQ(percent_text(*s.roles.at(Role::staff).rate), "63.25");
    EXPECT_EQ(percent_text(*s.roles.at(Role::faculty).rate), "59.21");
    EXPECT_EQ(percent_text(*s.overall_rate), "61.23");
    EXPECT_DOUBLE_EQ(*s.weighted_rate, 478.0 / 780.0);

    auto only_staff = adoption_stats({{"s", "r", Role::staff, kNoneChoice, ""}});
    EXPECT_EQ(*only_staff.overall_rate, 0.0);
    EXPECT_FALSE(only_staff.roles.at(Role::faculty).rate);
    auto j = to_json(adoption_stats({}));
    EXPECT_TRUE(j["overall_rate"].is_null());
    EXPECT_TRUE(j["roles"]["staff"]["rate_pct"].is_null());
}

TEST(DecisionLog, ReplaysAndDropsUnterminatedTail) {
    TempDir dir;
    const auto path = dir.file("d.jsonl");
    {
        DecisionLog log(path);
        log.append({"a->uni", "r1", Role::staff, "uni:T0", "t"});
        log.append({"b->uni", "r1", Role::faculty, kNoneChoice, "t"});
    }
    {
        std::ofstream out(path, std::ios::app);
        out << R"({"scenario_id":"c->uni","revi)";
    }
    std::size_t dropped = 0;
    auto back = DecisionLog::read(path, &dropped);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(dropped, 1u);
    EXPECT_EQ(back[1].role, Role::faculty);
    EXPECT_EQ(back[1].choice, kNoneChoice);

    std::ofstream(dir.file("bad.jsonl")) << "{\"x\":1}\n";
    EXPECT_TRUE(articulate::testing::throws_code([&] { DecisionLog::read(dir.file("bad.jsonl")); },
                                                 ErrorCode::MalformedRow, "line 1"));
}

TEST(ReviewService, StatusCodes) {
    TempDir dir;
    ReviewService empty(dir.file("e.jsonl"), std::nullopt, {});
    EXPECT_EQ(empty.queue("r", 5).status, 503);
    EXPECT_EQ(empty.submit(decision("x", "r", "staff", "NONE")).status, 503);
    EXPECT_EQ(empty.projection(std::nullopt, std::nullopt, 0.5).status, 503);

    ReviewService svc(dir.file("d.jsonl"), scenarios(3), {100, 50});
    EXPECT_EQ(svc.queue("", 5).status, 400);
    EXPECT_EQ(svc.submit("not json").status, 400);
    EXPECT_EQ(svc.submit(R"({"scenario_id":"cc:S0->uni"})").status, 400);
    EXPECT_EQ(svc.submit(decision("cc:S0->uni", "r", "dean", "NONE")).status, 400);
    EXPECT_EQ(svc.submit(decision("cc:S9->uni", "r", "staff", "NONE")).status, 404);
    EXPECT_EQ(svc.submit(decision("cc:S0->uni", "r", "staff", "uni:ZZZ")).status, 422);
    EXPECT_EQ(svc.projection(std::nullopt, std::nullopt, std::nullopt).status, 409);

    auto ok = svc.submit(decision("cc:S0->uni", "r", "staff", "uni:T3"));
    EXPECT_EQ(ok.status, 201);
    EXPECT_EQ(ok.body["choice"], "uni:T3");
    EXPECT_EQ(svc.submit(decision("cc:S0->uni", "r", "faculty", "NONE")).status, 409);
    EXPECT_EQ(svc.submit(decision("cc:S0->uni", "other", "faculty", "NONE")).status, 201);

    auto q = svc.queue("r", 10);
    ASSERT_EQ(q.status, 200);
    ASSERT_EQ(q.body.size(), 2u);
    EXPECT_EQ(q.body[0]["scenario_id"], "cc:S1->uni");
    EXPECT_EQ(q.body[0]["candidates"].size(), 7u);
    EXPECT_EQ(svc.queue("r", 1).body.size(), 1u);

    auto p = svc.projection(std::nullopt, std::nullopt, std::nullopt);
    ASSERT_EQ(p.status, 200);
    EXPECT_EQ(p.body["rate_source"], "observed");
    EXPECT_DOUBLE_EQ(p.body["adoption_rate"].get<double>(), 0.5); // staff 1.0, faculty 0.0
    EXPECT_EQ(p.body["expected_accepted"], 25);
    EXPECT_EQ(svc.projection(2787526, 156968, 0.6123).body["expected_accepted"], 1706802);
    EXPECT_EQ(svc.projection(std::nullopt, std::nullopt, 1.5).status, 400);
}

TEST(ReviewService, RestartKeepsDecisionsAndStats) {
    TempDir dir;
    const auto path = dir.file("d.jsonl");
    AdoptionStats live;
    {
        ReviewService svc(path, scenarios(5), {});
        for (int i = 0; i < 5; ++i)
            ASSERT_EQ(svc.submit(decision("cc:S" + std::to_string(i) + "->uni", "r", i % 2 ? "faculty" : "staff",
                                          i < 3 ? "uni:T0" : "NONE"))
                          .status,
                      201);
        live = svc.stats();
    }
    ReviewService again(path, scenarios(5), {});
    EXPECT_EQ(again.stats(), live);
    EXPECT_EQ(adoption_stats(DecisionLog::read(path)), live);
    EXPECT_EQ(again.submit(decision("cc:S0->uni", "r", "staff", "NONE")).status, 409);
    EXPECT_TRUE(again.queue("r", 10).body.empty());
}

TEST(ReviewService, ConcurrentSubmissionsAcceptEachPairOnce) {
    TempDir dir;
    ReviewService svc(dir.file("d.jsonl"), scenarios(10), {});
    std::atomic<int> created{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t)
        threads.emplace_back([&] {
            for (int i = 0; i < 10; ++i)
                if (svc.submit(decision("cc:S" + std::to_string(i) + "->uni", "r", "staff", "NONE")).status == 201)
                    ++created;
        });
    for (auto& t : threads) t.join();
    EXPECT_EQ(created.load(), 10);
    EXPECT_EQ(DecisionLog::read(dir.file("d.jsonl")).size(), 10u);
}

TEST(Http, RoutesOverLoopback) {
    TempDir dir;
    ReviewService svc(dir.file("d.jsonl"), scenarios(2), {10, 4});
    httplib::Server server;
    bind_routes(server, svc);
    const int port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    httplib::Client cli("127.0.0.1", port);
    EXPECT_EQ(cli.Get("/healthz")->status, 200);
    auto q = cli.Get("/queue?reviewer=r&limit=5");
    ASSERT_TRUE(q);
    EXPECT_EQ(q->status, 200);
    EXPECT_EQ(nlohmann::json::parse(q->body).size(), 2u);
    EXPECT_EQ(cli.Get("/queue?reviewer=r&limit=x")->status, 400);
    auto post = cli.Post("/decision", decision("cc:S0->uni", "r", "faculty", "uni:T1"), "application/json");
    ASSERT_TRUE(post);
    EXPECT_EQ(post->status, 201);
    EXPECT_EQ(cli.Post("/decision", decision("cc:S0->uni", "r", "faculty", "NONE"), "application/json")->status, 409);
    auto stats = nlohmann::json::parse(cli.Get("/stats")->body);
    EXPECT_EQ(stats["roles"]["faculty"]["rate_pct"], "100.00");
    EXPECT_EQ(stats["overall_rate_pct"], "100.00");
    auto proj = cli.Get("/projection?rate=0.5");
    EXPECT_EQ(proj->status, 200);
    EXPECT_EQ(nlohmann::json::parse(proj->body)["expected_accepted"], 2);
    EXPECT_EQ(cli.Get("/projection?existing=-3")->status, 400);

    server.stop();
    th.join();
}

TEST(MaterializeScenarios, OneScenarioPerSourceAndInstitution) {
    PlantedBenchmarkConfig cfg;
    cfg.institutions = 3;
    cfg.courses_per_institution = 20;
    cfg.classes = 20;
    cfg.dim = 8;
    auto b = make_planted_benchmark(cfg);
    ExpansionResult ex;
    ex.new_pairs = {{"I00:C0000", "I01:C0003", 0.9}, {"I00:C0000", "I01:C0004", 0.8}, {"I00:C0000", "I02:C0001", 0.7}};
    auto sc = materialize_scenarios(ex, b.embeddings, b.catalog);
    ASSERT_EQ(sc.size(), 2u);
    EXPECT_EQ(sc[0].scenario_id, "I00:C0000->I01");
    EXPECT_EQ(sc[0].candidates.size(), kScenarioSize);
    for (std::size_t i = 1; i < sc[0].candidates.size(); ++i)
        EXPECT_GE(sc[0].candidates[i - 1].cosine, sc[0].candidates[i].cosine);
    EXPECT_EQ(to_json(sc[1])["receiving_institution_id"], "I02");
}
