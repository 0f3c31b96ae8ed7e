#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "choreo/bc.hpp"
#include "choreo/checkpoint.hpp"

using namespace choreo;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/choreo_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

BcTrainConfig fast_config() {
  BcTrainConfig cfg;
  cfg.hidden = {64, 64};
  cfg.episodes_per_round = 100;
  cfg.epochs_per_round = 3;
  cfg.eval_every = 1000;
  cfg.eval_episodes = 20;
  return cfg;
}

}  // namespace

TEST_CASE("demo collection yields budget pairs per episode, all in bounds") {
  EnvConfig env_cfg;
  Rng rng(3);
  for (Subtask st : kAllSubtasks) {
    DemoDataset d = collect_demos(env_cfg, ObjectGeometry::kBlock, st, 7, rng);
    CHECK(d.subtask == st);
    CHECK(d.pairs() == 7 * subtask_budget(st));
    CHECK(d.inputs.rows() == KinematicEnv::kObsDim + 3);
    CHECK(d.actions.rows() == 4);
    CHECK(d.inputs.allFinite());
    CHECK(d.actions.allFinite());
    CHECK(d.actions.minCoeff() >= -1.0);
    CHECK(d.actions.maxCoeff() <= 1.0);
  }
  CHECK_THROWS_AS(collect_demos(env_cfg, ObjectGeometry::kBlock, Subtask::kApproach, 0, rng),
                  ConfigError);
}

TEST_CASE("replaying recorded actions open loop reproduces the oracle run") {
  EnvConfig env_cfg;
  const int episodes = 5;
  for (Subtask st : kAllSubtasks) {
    Rng collect_rng(41);
    DemoDataset d = collect_demos(env_cfg, ObjectGeometry::kBlock, st, episodes, collect_rng);

    auto oracles = make_oracle_policies(env_cfg, ObjectGeometry::kBlock);
    const int budget = subtask_budget(st);

    // Live oracle pass with the same seed, capturing final states.
    std::vector<EnvState> live_finals;
    {
      Rng rng(41);
      KinematicEnv env(env_cfg, ObjectGeometry::kBlock);
      for (int ep = 0; ep < episodes; ++ep) {
        env.reset(rng);
        run_window_prefix(env, st, oracles);
        for (int k = 0; k < budget; ++k) {
          env.step(oracles[static_cast<int>(st)](env.observation(), subgoal(st, env.state())));
        }
        live_finals.push_back(env.state());
      }
    }

    // Open-loop replay of the recorded actions from the same seed.
    Rng rng(41);
    KinematicEnv env(env_cfg, ObjectGeometry::kBlock);
    long col = 0;
    for (int ep = 0; ep < episodes; ++ep) {
      env.reset(rng);
      run_window_prefix(env, st, oracles);
      for (int k = 0; k < budget; ++k) {
        env.step(Action(d.actions.col(col)));
        ++col;
      }
      const EnvState& a = env.state();
      const EnvState& b = live_finals[static_cast<size_t>(ep)];
      CHECK(a.gripper == b.gripper);
      CHECK(a.aperture == b.aperture);
      CHECK(a.object == b.object);
      CHECK(a.attached == b.attached);
    }
  }
}

TEST_CASE("demo csv round trips exactly and rejects malformed files") {
  EnvConfig env_cfg;
  Rng rng(9);
  DemoDataset d = collect_demos(env_cfg, ObjectGeometry::kBlock, Subtask::kManipulate, 4, rng);
  TempFile f("demos.csv");
  save_demos(f.path, d);

  DemoDataset back = load_demos(f.path, Subtask::kManipulate);
  CHECK(back.subtask == Subtask::kManipulate);
  REQUIRE(back.pairs() == d.pairs());
  CHECK(back.inputs == d.inputs);
  CHECK(back.actions == d.actions);

  SUBCASE("wrong header is rejected") {
    TempFile bad("demos_bad_header.csv");
    std::ofstream out(bad.path);
    out << "not,a,demo,file\n0,0,0,0\n";
    out.close();
    CHECK_THROWS_AS(load_demos(bad.path, Subtask::kManipulate), ConfigError);
  }
  SUBCASE("short row is rejected") {
    TempFile bad("demos_bad_row.csv");
    std::ifstream in(f.path);
    std::string header;
    std::getline(in, header);
    std::ofstream out(bad.path);
    out << header << "\n0.1,0.2,0.3\n";
    out.close();
    CHECK_THROWS_AS(load_demos(bad.path, Subtask::kManipulate), ConfigError);
  }
  SUBCASE("out of bounds action is rejected") {
    TempFile bad("demos_bad_action.csv");
    DemoDataset broken = d;
    broken.actions(2, 1) = 1.5;
    save_demos(bad.path, broken);
    CHECK_THROWS_AS(load_demos(bad.path, Subtask::kManipulate), ConfigError);
  }
  SUBCASE("missing file is rejected") {
    CHECK_THROWS_AS(load_demos("/tmp/choreo_test_no_such_demos.csv", Subtask::kManipulate),
                    ConfigError);
  }
}

TEST_CASE("regression gradient matches finite differences") {
  Rng rng(15);
  MlpSpec spec{8, {10, 6}, 4, OutputActivation::kTanh};
  MlpParameters actor(spec);
  actor.init(rng);
  Mat inputs(8, 5);
  Mat actions(4, 5);
  for (int c = 0; c < 5; ++c) {
    inputs.col(c) = rng.normal_vec(8);
    actions.col(c) = rng.uniform_vec(4, -1.0, 1.0);
  }

  MlpCache cache;
  const Mat out = mlp_forward(actor, inputs, &cache);
  const double n = static_cast<double>(out.size());
  const Mat d_out = (2.0 / n) * (out - actions);
  const Vec analytic = mlp_backward(actor, cache, d_out).dtheta;

  const double h = 1e-6;
  Rng pick(16);
  for (int trial = 0; trial < 60; ++trial) {
    const int i = pick.uniform_int(0, static_cast<int>(actor.flat().size()) - 1);
    const double saved = actor.flat()[i];
    actor.flat()[i] = saved + h;
    const double up = bc_loss(actor, inputs, actions);
    actor.flat()[i] = saved - h;
    const double down = bc_loss(actor, inputs, actions);
    actor.flat()[i] = saved;
    const double fd = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-8});
    CHECK(std::abs(fd - analytic[i]) / denom < 1e-4);
  }
}

TEST_CASE("a single demonstration pair can be fit to overfit precision") {
  Rng rng(21);
  MlpSpec spec{KinematicEnv::kObsDim + 3, {32}, 4, OutputActivation::kTanh};
  MlpParameters actor(spec);
  actor.init(rng);
  AdamState adam(spec.param_count());
  AdamConfig adam_cfg;
  adam_cfg.lr = 1e-2;

  Mat input = rng.normal_vec(KinematicEnv::kObsDim + 3);
  Mat action = rng.uniform_vec(4, -0.8, 0.8);
  double loss = 1.0;
  for (int i = 0; i < 5000 && loss >= 1e-8; ++i) {
    loss = bc_update(actor, adam, adam_cfg, input, action);
  }
  CHECK(loss < 1e-6);
  const Mat out = mlp_forward(actor, input);
  CHECK((out - action).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("held out loss decreases over early training") {
  EnvConfig env_cfg;
  Rng rng(33);
  DemoDataset d = collect_demos(env_cfg, ObjectGeometry::kBlock, Subtask::kRetract, 40, rng);
  const long holdout = d.pairs() / 10;
  const long train_n = d.pairs() - holdout;
  const Mat train_in = d.inputs.leftCols(train_n);
  const Mat train_act = d.actions.leftCols(train_n);
  const Mat hold_in = d.inputs.rightCols(holdout);
  const Mat hold_act = d.actions.rightCols(holdout);

  Rng net_rng(34);
  MlpSpec spec{KinematicEnv::kObsDim + 3, {64, 64}, 4, OutputActivation::kTanh};
  MlpParameters actor(spec);
  actor.init(net_rng);
  AdamState adam(spec.param_count());
  AdamConfig adam_cfg;

  const double before = bc_loss(actor, hold_in, hold_act);
  Rng order_rng(35);
  for (int epoch = 0; epoch < 5; ++epoch) {
    for (long b0 = 0; b0 < train_n; b0 += 256) {
      const long n = std::min<long>(256, train_n - b0);
      bc_update(actor, adam, adam_cfg, train_in.middleCols(b0, n), train_act.middleCols(b0, n));
    }
  }
  const double after = bc_loss(actor, hold_in, hold_act);
  CHECK(after < before);
}

TEST_CASE("fitting never touches the reward signal") {
  EnvConfig env_cfg;
  Rng rng(44);
  DemoDataset d = collect_demos(env_cfg, ObjectGeometry::kBlock, Subtask::kManipulate, 10, rng);

  // The counter moves when an episode runs, so it is live.
  const long before_env = reward_call_count();
  KinematicEnv env(env_cfg, ObjectGeometry::kBlock);
  env.reset(rng);
  compute_reward(achieved_goal(Subtask::kApproach, env.state()),
                 subgoal(Subtask::kApproach, env.state()));
  CHECK(reward_call_count() > before_env);

  Rng net_rng(45);
  MlpSpec spec{KinematicEnv::kObsDim + 3, {32}, 4, OutputActivation::kTanh};
  MlpParameters actor(spec);
  actor.init(net_rng);
  AdamState adam(spec.param_count());
  AdamConfig adam_cfg;

  const long before_fit = reward_call_count();
  for (int i = 0; i < 20; ++i) {
    bc_update(actor, adam, adam_cfg, d.inputs, d.actions);
  }
  bc_loss(actor, d.inputs, d.actions);
  CHECK(reward_call_count() == before_fit);
}

TEST_CASE("bc training runs rounds, reports released steps, and reproduces exactly") {
  EnvConfig env_cfg;
  Rng collect_rng(50);
  DemoDataset d =
      collect_demos(env_cfg, ObjectGeometry::kBlock, Subtask::kManipulate, 300, collect_rng);
  BcTrainConfig cfg = fast_config();

  auto run = [&](std::vector<EvalPoint>& curve) {
    Rng rng(7);
    BcTrainCallbacks cb;
    cb.on_eval = [&](const EvalPoint& pt) { curve.push_back(pt); };
    return train_bc_lse(env_cfg, ObjectGeometry::kBlock, d, cfg, rng, cb);
  };

  std::vector<EvalPoint> curve_a;
  BcTrainResult a = run(curve_a);
  REQUIRE(!a.curve.empty());
  CHECK(a.env_steps <= d.pairs());
  CHECK(a.curve.size() == curve_a.size());
  for (size_t i = 1; i < a.curve.size(); ++i) {
    CHECK(a.curve[i].env_steps > a.curve[i - 1].env_steps);
  }
  CHECK(a.curve.back().env_steps == a.env_steps);
  for (const EvalPoint& pt : a.curve) {
    CHECK(pt.success_rate >= 0.0);
    CHECK(pt.success_rate <= 1.0);
    CHECK(pt.env_steps % (subtask_budget(Subtask::kManipulate) * cfg.episodes_per_round) == 0);
  }

  std::vector<EvalPoint> curve_b;
  BcTrainResult b = run(curve_b);
  REQUIRE(b.curve.size() == a.curve.size());
  for (size_t i = 0; i < a.curve.size(); ++i) {
    CHECK(a.curve[i].env_steps == b.curve[i].env_steps);
    CHECK(a.curve[i].success_rate == b.curve[i].success_rate);
  }
  CHECK(a.best_actor.flat() == b.best_actor.flat());
  CHECK(a.env_steps == b.env_steps);

  SUBCASE("empty dataset is rejected") {
    DemoDataset empty;
    empty.subtask = Subtask::kManipulate;
    empty.inputs.resize(KinematicEnv::kObsDim + 3, 0);
    empty.actions.resize(4, 0);
    Rng rng(1);
    CHECK_THROWS_AS(train_bc_lse(env_cfg, ObjectGeometry::kBlock, empty, cfg, rng), ConfigError);
  }
}

TEST_CASE("bc checkpoints restore the trained policy") {
  EnvConfig env_cfg;
  Rng collect_rng(61);
  DemoDataset d =
      collect_demos(env_cfg, ObjectGeometry::kBlock, Subtask::kApproach, 50, collect_rng);
  BcTrainConfig cfg = fast_config();
  cfg.eval_every = 500;
  Rng rng(8);
  BcTrainResult result = train_bc_lse(env_cfg, ObjectGeometry::kBlock, d, cfg, rng);

  TempFile f("bc.ckpt");
  save_bc_checkpoint(f.path, result, Subtask::kApproach, 8);
  SubtaskPolicy loaded = load_bc_policy(f.path);
  SubtaskPolicy original = result.policy();

  Rng probe(9);
  for (int i = 0; i < 10; ++i) {
    Vec obs = probe.uniform_vec(KinematicEnv::kObsDim, 0.0, 1.0);
    Vec3 goal(probe.uniform(0.0, 1.0), probe.uniform(0.0, 1.0), probe.uniform(0.0, 0.5));
    CHECK(loaded(obs, goal) == original(obs, goal));
  }

  SUBCASE("agent checkpoints are rejected as bc policies") {
    TempFile g("bc_wrong_role.ckpt");
    CheckpointWriter w;
    w.put_str("role", "manipulate");
    w.save(g.path);
    CHECK_THROWS_AS(load_bc_policy(g.path), ConfigError);
  }
}
