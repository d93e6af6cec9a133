#include "doctest.h"

#include "dynres/commands.hpp"
#include "dynres/config.hpp"

using namespace dynres;

TEST_CASE("default config round-trips through its canonical dump") {
  const RunConfig c = default_config();
  const std::string text = dump_config(c);
  CHECK(dump_config(parse_config(text)) == text);
  CHECK(config_hash(parse_config(text)) == config_hash(c));
}

TEST_CASE("partial documents override only the given fields") {
  const RunConfig c = parse_config(R"({"seed": 9, "planner": {"samples": 3}, "sim": {"layout": "blob"}})");
  CHECK(c.seed == 9);
  CHECK(c.planner.samples == 3);
  CHECK(c.sim.layout == Layout::Blob);
  CHECK(c.planner.horizon == default_config().planner.horizon);
  CHECK(config_hash(c) != config_hash(default_config()));
  CHECK(provenance(c).master_seed == 9);
}

TEST_CASE("unknown keys and bad values are rejected") {
  CHECK_THROWS_AS(parse_config(R"({"sedd": 1})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config(R"({"planner": {"sample": 3}})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config(R"({"planner": {"samples": "many"}})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config(R"({"planner": {"samples": 2.5}})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config(R"({"sim": {"layout": "spiral"}})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config(R"({"sim": {"n_pieces": 0}})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("{not json"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("[]"), std::invalid_argument);
}

TEST_CASE("mpc settings derive from the eval and planner sections") {
  RunConfig c = default_config();
  c.eval.mpc_steps = 7;
  c.budget.total = 123;
  const MpcConfig m = c.mpc();
  CHECK(m.steps == 7);
  CHECK(m.budget.total == 123);
  CHECK(m.success_threshold < 0);
  c.eval.success_threshold = 1.5;
  CHECK(c.mpc().success_threshold == 1.5);
}

TEST_CASE("mode expansion") {
  const RunConfig c = default_config();
  const auto m = expand_modes(c, {"dynamic", "fixed", "fixed:33"});
  CHECK(m == std::vector<std::string>{"dynamic", "fixed-10", "fixed-25", "fixed-50", "fixed-75", "fixed-100",
                                      "fixed-33"});
  CHECK_THROWS(expand_modes(c, {"adaptive"}));
  CHECK_THROWS(expand_modes(c, {"fixed:0"}));
}

TEST_CASE("task kind names") {
  for (TaskKind k : {TaskKind::Gather, TaskKind::Redistribute, TaskKind::Sort})
    CHECK(parse_task_kind(task_kind_name(k)) == k);
  CHECK_THROWS(parse_task_kind("stack"));
}
