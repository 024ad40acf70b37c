#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "pwil/io.hpp"

using namespace pwil;

TEST_CASE("trajectory jsonl round-trips exactly") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<Trajectory> trajs;
  for (int e = 0; e < 3; ++e) {
    Trajectory t;
    t.episode_id = e;
    t.nominal_horizon = 5;
    for (int i = 0; i < 5; ++i) {
      Point p;
      p.state = {g(rng), g(rng) * 1e-7, g(rng) * 1e9};
      if (e != 1) p.action = {g(rng)};  // episode 1 is state-only
      p.episode = e;
      p.t = i;
      t.points.push_back(std::move(p));
    }
    trajs.push_back(std::move(t));
  }

  std::ostringstream out;
  write_trajectories(out, trajs);
  std::istringstream in(out.str());
  auto back = read_trajectories(in, 5);

  REQUIRE(back.size() == trajs.size());
  for (size_t e = 0; e < trajs.size(); ++e) {
    REQUIRE(back[e].episode_id == trajs[e].episode_id);
    REQUIRE(back[e].length() == trajs[e].length());
    for (int i = 0; i < trajs[e].length(); ++i) {
      REQUIRE(back[e].points[i].state == trajs[e].points[i].state);
      REQUIRE(back[e].points[i].action == trajs[e].points[i].action);
      REQUIRE(back[e].points[i].t == trajs[e].points[i].t);
    }
  }

  SECTION("serialization is deterministic") {
    std::ostringstream again;
    write_trajectories(again, trajs);
    REQUIRE(again.str() == out.str());
  }
}

TEST_CASE("malformed jsonl reports the line number") {
  std::istringstream in(
      "{\"episode\":0,\"t\":0,\"obs\":[1.0],\"act\":null}\n"
      "this is not json\n");
  REQUIRE_THROWS_WITH(read_trajectories(in), Catch::Matchers::ContainsSubstring("line 2"));
}

TEST_CASE("missing fields report the line number") {
  std::istringstream in("{\"episode\":0,\"obs\":[1.0]}\n");
  REQUIRE_THROWS_WITH(read_trajectories(in), Catch::Matchers::ContainsSubstring("line 1"));
}

TEST_CASE("non-finite values are rejected") {
  std::istringstream in("{\"episode\":0,\"t\":0,\"obs\":[1e999],\"act\":null}\n");
  REQUIRE_THROWS(read_trajectories(in));
}

TEST_CASE("out-of-order timesteps are rejected") {
  std::istringstream in(
      "{\"episode\":0,\"t\":1,\"obs\":[1.0],\"act\":null}\n"
      "{\"episode\":0,\"t\":0,\"obs\":[2.0],\"act\":null}\n");
  REQUIRE_THROWS_WITH(read_trajectories(in),
                      Catch::Matchers::ContainsSubstring("timesteps not increasing"));
}

TEST_CASE("episodes longer than the nominal horizon are rejected") {
  std::istringstream in(
      "{\"episode\":0,\"t\":0,\"obs\":[1.0],\"act\":null}\n"
      "{\"episode\":0,\"t\":1,\"obs\":[2.0],\"act\":null}\n");
  REQUIRE_THROWS_WITH(read_trajectories(in, 1),
                      Catch::Matchers::ContainsSubstring("longer than nominal horizon"));
}

TEST_CASE("embedding sidecar loads by episode and timestep") {
  std::istringstream in(
      "{\"episode\":0,\"t\":0,\"emb\":[1.0,2.0]}\n"
      "{\"episode\":3,\"t\":7,\"emb\":[0.5]}\n");
  auto table = read_embeddings(in);
  REQUIRE(table->size() == 2);
  REQUIRE(*table->find(0, 0) == std::vector<double>{1.0, 2.0});
  REQUIRE(*table->find(3, 7) == std::vector<double>{0.5});
  REQUIRE(table->find(1, 1) == nullptr);
}

TEST_CASE("coupling csv lists nonzero entries") {
  Coupling c(2, 2);
  c.at(0, 1) = 0.5;
  c.at(1, 0) = 0.5;
  std::ostringstream out;
  write_coupling_csv(out, c);
  REQUIRE(out.str() == "i,j,mass\n0,1,0.5\n1,0,0.5\n");
}

TEST_CASE("config rejects malformed lines") {
  REQUIRE_THROWS_WITH(KeyValueConfig::parse_string("alpha 5\n"),
                      Catch::Matchers::ContainsSubstring("line 1"));
  REQUIRE_THROWS_AS(KeyValueConfig::parse_string("alpha = x\n").get_real("alpha", 0),
                    std::runtime_error);
  auto kv = KeyValueConfig::parse_string("  a = 1 # trailing\n\n# full comment\nb = on\n");
  REQUIRE(kv.get_int("a", 0) == 1);
  REQUIRE(kv.get_flag("b", false));
  REQUIRE(kv.get_str("missing", "zz") == "zz");
}
