#include "checks.hpp"
#include "soma/dqn.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <cstring>
#include <map>
#include <set>

using namespace soma;

namespace {

std::vector<const Transition*> pointers(const std::vector<Transition>& data) {
  std::vector<const Transition*> out;
  for (const auto& t : data) out.push_back(&t);
  return out;
}

QNetwork<float> initialised(HeadLayout layout, std::uint64_t seed) {
  QNetwork<float> net(layout);
  Rng rng(seed);
  net.initialize(rng);
  return net;
}

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "soma_test_dqn";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::vector<char> bytes_of(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& p, const std::vector<char>& b) {
  std::ofstream f(p, std::ios::binary);
  f.write(b.data(), static_cast<std::streamsize>(b.size()));
}

}  // namespace

TEST_CASE("network shapes and parameter layout") {
  const auto f = network_shapes(HeadLayout::Factored);
  REQUIRE(f.size() == 5);
  CHECK(f[0] == LayerShape{512, 36});
  CHECK(f[1] == LayerShape{256, 512});
  CHECK(f[2] == LayerShape{128, 256});
  CHECK(f[3] == LayerShape{kNumOrientations, 128});
  CHECK(f[4] == LayerShape{kNumPositions, 128});
  CHECK(network_shapes(HeadLayout::Flat).back() == LayerShape{kNumActions, 128});

  QNetwork<float> net;
  long long n = 0;
  for (const auto& s : f) n += static_cast<long long>(s.out) * (s.in + 1);
  CHECK(net.parameters().size() == n);
  // Weight maps are column-major views into the flat vector, biases follow.
  net.weight(0)(3, 2) = 7.0f;
  CHECK(net.parameters()[2 * 512 + 3] == 7.0f);
  net.bias(0)[5] = 9.0f;
  CHECK(net.parameters()[512 * 36 + 5] == 9.0f);
}

TEST_CASE("zero network outputs zeros; eval is deterministic; init bounds hold") {
  QNetwork<float> zero;
  const StateVector<float> s = StateVector<float>::Random();
  CHECK(zero.q_values(s).isZero());
  const auto net = initialised(HeadLayout::Factored, 1);
  CHECK(net.q_values(s) == net.q_values(s));
  for (int l = 0; l < net.num_layers(); ++l) {
    const float bound = 1.0f / std::sqrt(static_cast<float>(net.shapes()[l].in));
    CHECK(net.weight(l).cwiseAbs().maxCoeff() <= bound);
    CHECK(net.bias(l).cwiseAbs().maxCoeff() <= bound);
  }
  CHECK_THROWS_AS(QNetwork<float>(HeadLayout::Factored, 1.0f), std::invalid_argument);
}

TEST_CASE("dropout applies only in train mode and is seeded") {
  const auto net = initialised(HeadLayout::Factored, 2);
  QNetwork<float>::Matrix states = QNetwork<float>::Matrix::Random(kStateDim, 4);
  const auto eval = net.forward(states, Mode::Eval);
  Rng a(5), b(5);
  const auto t1 = net.forward(states, Mode::Train, &a);
  const auto t2 = net.forward(states, Mode::Train, &b);
  CHECK(t1[0] == t2[0]);
  CHECK(t1[0] != eval[0]);
  CHECK_THROWS_AS(net.forward(states, Mode::Train), std::invalid_argument);
}

TEST_CASE("combine") {
  Eigen::VectorXf ori = Eigen::VectorXf::Zero(kNumOrientations);
  Eigen::VectorXf pos = Eigen::VectorXf::LinSpaced(kNumPositions, 0, 26);
  auto q = combine(ori, pos);
  CHECK(q.size() == kNumActions);
  for (int o = 0; o < kNumOrientations; ++o) CHECK(q.segment(o * 27, 27) == pos);
  ori[3] = 2;
  pos.setZero();
  pos[5] = 7;
  CHECK(combine(ori, pos)[3 * 27 + 5] == 9.0f);

  Rng rng(1);
  for (int i = 0; i < kNumOrientations; ++i) ori[i] = static_cast<float>(rng.uniform(-1, 1));
  for (int i = 0; i < kNumPositions; ++i) pos[i] = static_cast<float>(rng.uniform(-1, 1));
  const auto base = combine(ori, pos);
  const auto shifted = combine(Eigen::VectorXf(ori.array() + 4.0f), pos);
  Eigen::Index a, b;
  base.maxCoeff(&a);
  shifted.maxCoeff(&b);
  CHECK(a == b);
  CHECK((shifted - base).cwiseAbs().maxCoeff() == doctest::Approx(4.0).epsilon(1e-5));
}

TEST_CASE("finite-difference Jacobian of the forward pass") {
  QNetwork<double> net(HeadLayout::Factored, 0.0);
  Rng rng(7);
  net.initialize(rng);
  QNetwork<double>::Matrix states = QNetwork<double>::Matrix::Random(kStateDim, 3).cwiseAbs();
  typename QNetwork<double>::Cache cache;
  const auto heads = net.forward(states, Mode::Eval, nullptr, &cache);
  // Scalar objective: weighted sum of every head output.
  std::vector<QNetwork<double>::Matrix> w;
  for (const auto& h : heads) w.push_back(QNetwork<double>::Matrix::Random(h.rows(), h.cols()));
  const auto grad = net.backward(cache, w);
  auto objective = [&] {
    const auto hs = net.forward(states, Mode::Eval);
    double s = 0;
    for (std::size_t i = 0; i < hs.size(); ++i) s += hs[i].cwiseProduct(w[i]).sum();
    return s;
  };
  // Every first-layer weight feeding input 0 of a live unit, plus random others.
  for (int k = 0; k < 40; ++k) {
    const Eigen::Index i = k < 20 ? static_cast<Eigen::Index>(k) : static_cast<Eigen::Index>(rng.below(net.parameters().size()));
    if (std::abs(grad[i]) < 1e-8) continue;
    const double saved = net.parameters()[i], h = 1e-6;
    net.parameters()[i] = saved + h;
    const double up = objective();
    net.parameters()[i] = saved - h;
    const double down = objective();
    net.parameters()[i] = saved;
    CHECK(std::abs((up - down) / (2 * h) - grad[i]) <= 1e-4 * std::abs(grad[i]));
  }
}

TEST_CASE("TD loss gradient matches central differences") {
  for (HeadLayout layout : {HeadLayout::Factored, HeadLayout::Flat}) {
    const auto rep = checks::gradient_check(layout, 10, 10, 16, layout == HeadLayout::Flat ? 3 : 4);
    CHECK(rep.compared == 100);
    CHECK(rep.worst_relative <= 1e-4);
  }
}

TEST_CASE("TD targets: terminal rewards, duplicated transitions") {
  const auto online = initialised(HeadLayout::Factored, 3);
  const auto target = initialised(HeadLayout::Factored, 4);
  auto data = checks::random_transitions(64, 3, 9);
  for (auto& t : data) t.terminal = true;
  const auto batch = pointers(data);
  const auto td = td_loss(online, target, std::span<const Transition* const>(batch), 0.99, Mode::Eval, nullptr);
  for (std::size_t i = 0; i < data.size(); ++i) CHECK(td.targets[i] == data[i].reward);

  // The same transition 512 times has the single-transition squared error as its mean.
  auto one = checks::random_transitions(5, 3, 10);
  one[2].terminal = false;
  std::vector<const Transition*> dup(512, &one[2]);
  const auto single = td_loss(online, target, std::span<const Transition* const>(&dup[0], 1), 0.99, Mode::Eval, nullptr);
  const auto many = td_loss(online, target, std::span<const Transition* const>(dup), 0.99, Mode::Eval, nullptr);
  const auto q = online.q_values(one[2].state);
  const double err = static_cast<double>(q[one[2].action.id()]) - single.targets[0];
  CHECK(single.loss == doctest::Approx(err * err).epsilon(1e-6));
  CHECK(many.loss == doctest::Approx(single.loss).epsilon(1e-6));
  CHECK((many.grad - single.grad).norm() <= 1e-5 * (1.0 + single.grad.norm()));
}

TEST_CASE("action selection") {
  const auto net = initialised(HeadLayout::Factored, 5);
  const StateVector<float> s = encode_state(Environment{}.reset(3, 1, OrderPolicy::Fixed));
  Rng rng(1);

  LegalMask single;
  single.set(1234);
  for (double eps : {0.0, 0.5, 1.0}) CHECK(select_action(net, s, single, eps, rng).id() == 1234);
  CHECK_THROWS_AS(select_action(net, s, LegalMask{}, 0.0, rng), EmptyMask);

  // Greedy with the best entry masked out still returns a legal action.
  const auto q = net.q_values(s);
  Eigen::Index best;
  q.maxCoeff(&best);
  LegalMask others;
  for (int a = 0; a < kNumActions; a += 37)
    if (a != best) others.set(a);
  const ActionIndex g = select_action(net, s, others, 0.0, rng);
  CHECK(others.test(g.id()));
  CHECK(g.id() == checks::masked_argmax(q, others));

  // epsilon = 1: chi-square against the uniform distribution over 20 legal actions.
  LegalMask twenty;
  for (int i = 0; i < 20; ++i) twenty.set(i * 101);
  std::map<int, int> counts;
  const int draws = 100'000;
  for (int i = 0; i < draws; ++i) ++counts[select_action(net, s, twenty, 1.0, rng).id()];
  CHECK(counts.size() == 20);
  double chi2 = 0.0;
  for (const auto& [id, c] : counts) {
    CHECK(twenty.test(id));
    const double e = draws / 20.0;
    chi2 += (c - e) * (c - e) / e;
  }
  CHECK(chi2 < 43.82);  // 0.999 quantile, 19 degrees of freedom
}

TEST_CASE("uniform head shifts never change the greedy choice") {
  auto net = initialised(HeadLayout::Factored, 6);
  const auto samples = checks::random_samples(200, 3, 12);
  for (const auto& smp : samples) {
    Rng c1(1), c2(1), c3(1);
    const auto before = select_action(net, smp.transition.state, smp.mask, 0.0, c1);
    auto shifted = net;
    shifted.bias(3).array() += 3.5f;
    CHECK(select_action(shifted, smp.transition.state, smp.mask, 0.0, c2) == before);
    shifted = net;
    shifted.bias(4).array() -= 2.0f;
    CHECK(select_action(shifted, smp.transition.state, smp.mask, 0.0, c3) == before);
  }
}

TEST_CASE("illegal-action isolation on 1,000 transitions") {
  const auto net = initialised(HeadLayout::Factored, 8);
  const auto samples = checks::random_samples(1000, 3, 13);
  const auto rep = checks::isolation_check(net, samples, 0.99, 14);
  CHECK(rep.transitions == 1000);
  CHECK(rep.selection_changes == 0);
  CHECK(rep.target_changes == 0);
}

TEST_CASE("illegal-action isolation through the network: flat head biases") {
  // A flat head's bias moves exactly one Q entry, so illegal entries can be
  // perturbed inside the network itself.
  auto online = initialised(HeadLayout::Flat, 15);
  const auto samples = checks::random_samples(300, 3, 16);
  Rng rng(17);
  for (const auto& smp : samples) {
    const Transition& t = smp.transition;
    auto moved = online;
    for (int a = 0; a < kNumActions; ++a)
      if (!smp.mask.test(a)) moved.bias(3)[a] += rng.bernoulli(0.5) ? 1e6f : -1e6f;
    Rng c1(1), c2(1);
    CHECK(select_action(online, t.state, smp.mask, 0.0, c1) == select_action(moved, t.state, smp.mask, 0.0, c2));

    if (t.terminal) continue;
    auto target_moved = online;
    for (int a = 0; a < kNumActions; ++a)
      if (!t.next_mask.test(a)) target_moved.bias(3)[a] += rng.bernoulli(0.5) ? 1e6f : -1e6f;
    const Transition* one[] = {&t};
    const auto a = td_loss(online, online, std::span<const Transition* const>(one), 0.99, Mode::Eval, nullptr);
    const auto b = td_loss(online, target_moved, std::span<const Transition* const>(one), 0.99, Mode::Eval, nullptr);
    CHECK(a.targets[0] == b.targets[0]);
  }
}

TEST_CASE("epsilon schedules") {
  const auto e = EpsilonSchedule::exponential();
  for (long long t : {0LL, 1LL, 10LL, 100LL, 500LL, 1000LL})
    CHECK(e.value(t) == std::max(0.05, 0.9 * std::pow(0.995, static_cast<double>(t))));
  CHECK(e.value(100000) == 0.05);
  const auto l = EpsilonSchedule::linear();
  CHECK(l.clock == EpsilonSchedule::Clock::Step);
  CHECK(l.value(0) == 0.9);
  CHECK(l.value(20'000) == doctest::Approx(0.5));
  CHECK(l.value(40'000) == 0.1);
  CHECK(l.value(90'000) == 0.1);
  for (const auto& s : {e, l}) {
    double prev = 1.0;
    for (long long t = 0; t < 50'000; t += 97) {
      const double v = s.value(t);
      CHECK(v <= prev);
      CHECK(v <= 0.9);
      CHECK(v >= (s.kind == EpsilonSchedule::Kind::Linear ? 0.1 : 0.05));
      prev = v;
    }
  }
}

TEST_CASE("train config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.lr == 1e-4);
  CHECK(c.gamma == 0.99);
  CHECK(c.batch == 512);
  CHECK(c.target_update_every == 20);
  CHECK(c.warmup == 1000);
  CHECK(c.grad_clip == 1.0);
  CHECK(c.replay_capacity == 50'000);
  auto bad = c;
  bad.gamma = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.warmup = 10;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.lr = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("replay buffer: FIFO eviction and distinct uniform samples") {
  ReplayBuffer buf(5);
  for (int i = 0; i < 8; ++i) {
    Transition t;
    t.reward = i;
    buf.push(t);
  }
  CHECK(buf.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(buf.at(i).reward == 3.0 + static_cast<double>(i));
  CHECK_THROWS_AS(buf.at(5), std::out_of_range);

  ReplayBuffer big(100);
  for (int i = 0; i < 100; ++i) {
    Transition t;
    t.reward = i;
    big.push(t);
  }
  Rng rng(3);
  std::vector<int> hits(100, 0);
  for (int r = 0; r < 2000; ++r) {
    const auto s = big.sample(10, rng);
    std::set<const Transition*> unique(s.begin(), s.end());
    CHECK(unique.size() == 10);
    for (const auto* t : s) ++hits[static_cast<int>(t->reward)];
  }
  // Each item is expected 200 times; a generous band catches gross bias.
  for (int h : hits) {
    CHECK(h > 120);
    CHECK(h < 280);
  }
  CHECK_THROWS_AS(big.sample(101, rng), std::invalid_argument);
}

TEST_CASE("target sync copies weights; training leaves the target alone") {
  TrainConfig cfg;
  cfg.batch = 16;
  cfg.warmup = 16;
  DqnAgent agent(cfg);
  const auto before = agent.target().parameters();
  for (const auto& t : checks::random_transitions(64, 3, 21)) agent.observe(t);
  CHECK(agent.gradient_steps() > 0);
  CHECK(agent.target().parameters() == before);
  CHECK(agent.online().parameters() != before);
  agent.sync_target();
  CHECK(agent.target().parameters() == agent.online().parameters());
  const StateVector<float> s = StateVector<float>::Random();
  CHECK(agent.target().q_values(s) == agent.online().q_values(s));
}

TEST_CASE("training step: clipping bounds the update; non-finite loss is reported") {
  auto online = initialised(HeadLayout::Factored, 30);
  const auto target = online;
  const auto data = checks::random_transitions(32, 3, 31);
  const auto batch = pointers(data);
  TrainConfig cfg;
  Adam<float> opt;
  Rng drop(1);
  const double loss = train_step(online, target, opt, std::span<const Transition* const>(batch), cfg, drop);
  CHECK(std::isfinite(loss));
  CHECK(opt.t == 1);
  // First Adam step moves each parameter by at most lr (bias-corrected ratio is +-1).
  CHECK((online.parameters() - target.parameters()).cwiseAbs().maxCoeff() <= 1.0001e-4f);

  auto broken = online;
  broken.parameters()[0] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(train_step(broken, target, opt, std::span<const Transition* const>(batch), cfg, drop), NonFiniteLoss);

  Eigen::VectorXf g = Eigen::VectorXf::Constant(4, 3.0f);
  CHECK(clip_global_norm(g, 1.0f) == doctest::Approx(6.0f));
  CHECK(g.norm() == doctest::Approx(1.0f));
}

TEST_CASE("1,000 training steps reproduce the same loss sequence") {
  auto run = [] {
    TrainConfig cfg;
    cfg.batch = 32;
    cfg.warmup = 32;
    cfg.seed = 77;
    DqnAgent agent(cfg);
    std::vector<double> losses;
    const auto data = checks::random_transitions(1031, 3, 78);
    for (const auto& t : data)
      if (auto l = agent.observe(t)) losses.push_back(*l);
    return losses;
  };
  const auto a = run();
  CHECK(a.size() == 1000);
  CHECK(a == run());
}

TEST_CASE("checkpoint round trip and corruption") {
  for (HeadLayout layout : {HeadLayout::Factored, HeadLayout::Flat}) {
    const auto net = initialised(layout, 40);
    const auto path = temp_file(layout == HeadLayout::Flat ? "flat.bin" : "factored.bin");
    save_checkpoint(net, path);
    const auto loaded = load_checkpoint(path);
    CHECK(loaded.layout() == layout);
    CHECK(std::memcmp(loaded.parameters().data(), net.parameters().data(),
                      sizeof(float) * static_cast<std::size_t>(net.parameters().size())) == 0);
    const auto again = temp_file("again.bin");
    save_checkpoint(loaded, again);
    CHECK(bytes_of(path) == bytes_of(again));
  }

  const auto path = temp_file("factored.bin");
  const auto good = bytes_of(path);
  CHECK(std::string(good.begin(), good.begin() + 8) == "SOMAQNET");

  auto corrupt = good;
  corrupt[0] = 'X';
  const auto bad = temp_file("bad.bin");
  write_bytes(bad, corrupt);
  CHECK_THROWS_AS(load_checkpoint(bad), BadMagic);

  // Layer 3 (orientation head) out-size lives after magic, version, layout,
  // count and three (out, in) pairs.
  auto shape = good;
  const std::size_t off = 8 + 4 * 3 + 8 * 3;
  std::uint32_t out;
  std::memcpy(&out, shape.data() + off, 4);
  CHECK(out == static_cast<std::uint32_t>(kNumOrientations));
  const std::uint32_t wrong = 115;
  std::memcpy(shape.data() + off, &wrong, 4);
  write_bytes(bad, shape);
  CHECK_THROWS_AS(load_checkpoint(bad), ShapeMismatch);

  write_bytes(bad, std::vector<char>(good.begin(), good.end() - 10));
  CHECK_THROWS_AS(load_checkpoint(bad), TruncatedFile);

  auto extra = good;
  extra.push_back(0);
  write_bytes(bad, extra);
  CHECK_THROWS_AS(load_checkpoint(bad), CheckpointError);

  CHECK_THROWS_AS(load_checkpoint(temp_file("missing.bin")), CheckpointError);
}
