#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "blqg/behavioral.hpp"
#include "blqg/errors.hpp"
#include "blqg/imitation.hpp"
#include "support.hpp"

using namespace blqg;
using namespace blqg::testing;

namespace {

// Drops the y(t-n) columns of a full gain.
Matrix k13(const BehavioralGain& k) {
  Matrix out(k.matrix().rows(), k.k1().cols() + k.k3().cols());
  out << k.k1(), k.k3();
  return out;
}

std::string error_of(const std::string& csv, int m, int p) {
  std::istringstream is(csv);
  try {
    read_expert_csv(is, m, p);
  } catch (const InputFormatError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("sample counts") {
  CHECK(sufficient_samples(1, 1, 1) == 3);
  CHECK(sufficient_samples(2, 1, 1) == 6);
  CHECK(subspace_id_samples(1, 1, 1) == 11);
  for (int n = 1; n <= 4; ++n)
    for (int m = 1; m <= 3; ++m)
      for (int p = 1; p <= 3; ++p) CHECK(subspace_id_samples(n, m, p) > sufficient_samples(n, m, p));
  CHECK(samples_used(SystemDims{1, 1, 1}, 2) == 3);
}

TEST_CASE("printed Example 3 demonstration") {
  ExpertData d;
  d.U_N = mat(1, 2, {-0.2269, -0.1231});
  d.Y_N = mat(2, 2, {1.7878, -0.2269, 1.3371, 0.211});
  d.t0 = 1;
  d.k = 2;
  d.dims = SystemDims{1, 1, 1};
  const LearnedGain g = learn_gain(d);
  CHECK(std::abs(g.gain.matrix()(0, 0) - 0.1716) < 5e-4);
  CHECK(g.gain.matrix()(0, 1) == 0.0);
  CHECK(std::abs(g.gain.matrix()(0, 2) + 0.3991) < 5e-4);
  CHECK(g.data_rank == 2);
  // square, invertible regressor: exact interpolation
  CHECK(g.residual < 1e-12);
  const Matrix direct = d.U_N * d.Y_N.inverse();
  CHECK(g.gain.matrix()(0, 0) == doctest::Approx(direct(0, 0)).epsilon(1e-12));
  CHECK(g.gain.matrix()(0, 2) == doctest::Approx(direct(0, 1)).epsilon(1e-12));
}

TEST_CASE("single-column assembly matches the behavioral state") {
  const LtiSystem sys = example4();
  const BehavioralLqgSolution sol = solve_behavioral_lqg(sys, example4_weights());
  const Trajectory tr = simulate(sys, BehavioralLaw{sol.gain}, 30, 3);
  for (int t0 = 2; t0 < 10; ++t0) {
    const ExpertData d = assemble_expert_data(tr, sys.dims(), t0, 1);
    const BehavioralState s = behavioral_state(tr, t0, sys.dims());
    CHECK(d.U_N(0, 0) == tr.u(0, t0));
    // y_z without the y(t-n) entry
    CHECK(d.Y_N(0, 0) == s.yz(0));
    CHECK(d.Y_N(1, 0) == s.yz(1));
    CHECK(d.Y_N(2, 0) == s.yz(3));
    CHECK(d.Y_N(3, 0) == s.yz(4));
  }
}

TEST_CASE("adjacent windows overlap consistently") {
  const LtiSystem sys = example1();
  const LqgSolution lqg = lqg_compensator(sys, example1_weights());
  const Trajectory tr = simulate(sys, CompensatorLaw{lqg.controller, Vector()}, 20, 4);
  const ExpertData a = assemble_expert_data(tr, sys.dims(), 5, 2);
  const ExpertData b = assemble_expert_data(tr, sys.dims(), 4, 2);
  CHECK(a.Y_N.row(0) == b.U_N);
  CHECK(a.Y_N(0, 1) == a.U_N(0, 0));
}

TEST_CASE("assembly rejects short records and early starts") {
  const Trajectory tr = simulate(example1(), ZeroInput{}, 5, 1);
  CHECK_THROWS_AS(assemble_expert_data(tr, SystemDims{1, 1, 1}, 0, 1), DimensionError);
  CHECK_THROWS_AS(assemble_expert_data(tr, SystemDims{1, 1, 1}, 4, 3), DimensionError);
  CHECK_NOTHROW(assemble_expert_data(tr, SystemDims{1, 1, 1}, 3, 2));
}

TEST_CASE("zero inputs give the zero gain") {
  ExpertData d;
  d.dims = SystemDims{1, 1, 1};
  d.U_N = Matrix::Zero(1, 2);
  d.Y_N = mat(2, 2, {1.0, 2.0, 3.0, 4.0});
  d.k = 2;
  d.t0 = 1;
  const LearnedGain g = learn_gain(d);
  CHECK(g.gain.matrix().norm() == 0.0);
  CHECK(g.warning.has_value());
  CHECK(g.input_rank == 0);
}

TEST_CASE("noise-free expert is interpolated and recovered up to the row-space gauge") {
  CounterRng rng(61);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 1 + trial % 3, m = 1 + trial % 2, p = 1 + (trial / 2) % 2;
    const LtiSystem sys = random_system(rng, n, m, p, 0.9);
    const LqgSolution lqg = lqg_compensator(sys, random_weights(rng, n, m));
    const BehavioralGain k = staticize(lqg.controller, sys.dims());
    const Trajectory tr = simulate(sys, BehavioralLaw{k}, 60, 700 + trial);
    const ExpertData d = assemble_expert_data(tr, sys.dims(), n);
    CHECK(d.k == n * m + n * p);
    const LearnedGain g = learn_gain(d);
    CHECK(g.gain.k2().norm() == 0.0);
    const Matrix fit = k13(g.gain) * d.Y_N;
    CHECK((fit - d.U_N).norm() <= 1e-10 * (1.0 + d.U_N.norm()));
    // projector onto the column space of Y_N, acting on gain rows
    const Matrix pi = d.Y_N * pinv(d.Y_N);
    CHECK(((k13(g.gain) - k13(k)) * pi).norm() <= 1e-8 * (1.0 + k.matrix().norm()));
  }
}

TEST_CASE("more columns than nm + np do not change the learned gain") {
  CounterRng rng(62);
  for (int trial = 0; trial < 6; ++trial) {
    const int n = 1 + trial % 3, m = 1 + trial % 2, p = 1;
    const LtiSystem sys = random_system(rng, n, m, p, 0.9);
    const LqgSolution lqg = lqg_compensator(sys, random_weights(rng, n, m));
    const Trajectory tr = simulate(sys, CompensatorLaw{lqg.controller, Vector()}, 80, 800 + trial);
    const ExpertData small = assemble_expert_data(tr, sys.dims(), n);
    const ExpertData large = assemble_expert_data(tr, sys.dims(), n, small.k + 10);
    const LearnedGain gs = learn_gain(small);
    const LearnedGain gl = learn_gain(large);
    // the estimator structure caps the rank at min(nm, n) + np
    CHECK(gs.data_rank == std::min(n * m, n) + n * p);
    CHECK(gl.data_rank == gs.data_rank);
    const Matrix pi = small.Y_N * pinv(small.Y_N);
    CHECK(((k13(gs.gain) - k13(gl.gain)) * pi).norm() <= 1e-8 * (1.0 + gs.gain.matrix().norm()));
  }
}

TEST_CASE("Example 4 learned gain predicts held-out expert inputs") {
  const LtiSystem sys = example4();
  const LqgWeights w = example4_weights();
  const LqgSolution lqg = lqg_compensator(sys, w);
  const BehavioralLqgSolution sol = solve_behavioral_lqg(sys, w);
  const Trajectory tr = simulate(sys, CompensatorLaw{lqg.controller, Vector()}, 120, 9);
  const ExpertData d = assemble_expert_data(tr, sys.dims(), 2);
  CHECK(d.k == 4);
  const LearnedGain g = learn_gain(d);
  double worst = 0.0;
  for (int t = 10; t < 110; ++t) {
    const BehavioralState s = behavioral_state(tr, t, sys.dims());
    worst = std::max(worst, std::abs(tr.u(0, t) - (g.gain.matrix() * s.yz)(0)));
  }
  CHECK(worst <= 1e-6);
  const RolloutReport r = validate_by_rollout(sys, g.gain, sol.gain, w, 100, 10);
  CHECK(r.relative_cost_gap <= 1e-6);
}

TEST_CASE("validating a gain against itself reports no deviation") {
  const BehavioralLqgSolution sol = solve_behavioral_lqg(example1(), example1_weights());
  const RolloutReport r =
      validate_by_rollout(example1(), sol.gain, sol.gain, example1_weights(), 100, 5);
  CHECK(r.output_deviation == 0.0);
  CHECK(r.input_deviation == 0.0);
  CHECK(r.relative_cost_gap == 0.0);
  CHECK(r.projector_distance == 0.0);
}

TEST_CASE("expert CSV reader") {
  std::istringstream ok("t,u1,y1\n3,0.5,1.25\n4,-1e-3,2\n");
  const ExpertLog log = read_expert_csv(ok, 1, 1);
  CHECK(log.first_t == 3);
  CHECK(log.inputs.cols() == 2);
  CHECK(log.inputs(0, 1) == -1e-3);
  CHECK(log.outputs(0, 0) == 1.25);

  CHECK(error_of("t,u,y\n0,1,2\n", 1, 1).find("line 1") != std::string::npos);
  CHECK(error_of("t,u1,y1\n0,1,2\n2,1,2\n", 1, 1).find("line 3") != std::string::npos);
  CHECK(error_of("t,u1,y1\n0,1,2\n1,abc,2\n", 1, 1).find("line 3") != std::string::npos);
  CHECK(error_of("t,u1,y1\n0,1\n", 1, 1).find("line 2") != std::string::npos);
  CHECK(error_of("t,u1,y1\n0,1,\n", 1, 1).find("line 2") != std::string::npos);
  CHECK_FALSE(error_of("", 1, 1).empty());
  CHECK_FALSE(error_of("t,u1,y1\n", 1, 1).empty());
  CHECK(error_of("t,u1,u2,y1\n0,1,2,3\n", 2, 1).empty());
}
