#include <array>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "dtower/flow.hpp"

using namespace dtower;

namespace {

struct DipSetup {
  int N = 6;
  int k = 128;
  PotentialPtr V = unit_min_bump();
  ParameterBox box = make_boxes(6, 128, 1.0, *unit_min_bump(), WidthMode::shrinking);
};

}  // namespace

TEST(FlowLevels, OrderedBelowTheBubbleEnergy) {
  const auto V = unit_min_bump();
  const FlowLevels lv;
  for (int N : {5, 6, 7})
    for (int k : {32, 256}) {
      const double A1 = eval_constants(N).A1;
      EXPECT_LT(lv.t1(N, k, 1.0, *V), -k * A1);
      EXPECT_GT(lv.t2(N, k), -k * A1);
      EXPECT_NEAR(lv.t2(N, k), -0.9 * k * A1, 1e-12 * k * A1);
    }
}

TEST(FlowConfinement, DipStartsNeverLeaveThroughHeightOrConcentration) {
  const DipSetup s;
  const FlowReport rep = flow_confinement(s.N, s.k, *s.V, random_starts(s.box, 10, 7), s.box);
  EXPECT_EQ(rep.starts, 10);
  EXPECT_EQ(rep.exits_h_mu, 0);
  EXPECT_EQ(rep.underflow, 0);
  EXPECT_EQ(rep.reached_t1 + rep.exits_r + rep.stalled, 10);
  for (const Trajectory& tr : rep.trajectories) {
    ASSERT_FALSE(tr.samples.empty());
    EXPECT_FALSE(tr.escaped_h_or_mu());
    // the flow never lowers F
    for (std::size_t i = 1; i < tr.samples.size(); ++i)
      EXPECT_GE(tr.samples[i].F, tr.samples[i - 1].F - 1e-9 * std::abs(tr.samples[i].F));
    if (tr.outcome == FlowOutcome::reached_t1) EXPECT_LE(tr.final_level, rep.t1 * (1 - 1e-12));
  }
}

TEST(FlowConfinement, ExitsOnlyThroughRadialFacesAcrossSeeds) {
  const DipSetup s;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const FlowReport rep = flow_confinement(s.N, s.k, *s.V, random_starts(s.box, 5, seed), s.box);
    EXPECT_EQ(rep.exits_h_mu, 0) << "seed " << seed;
    for (const Trajectory& tr : rep.trajectories)
      if (tr.outcome == FlowOutcome::exited)
        EXPECT_TRUE(tr.exit_face == Face::r_lo || tr.exit_face == Face::r_hi) << to_string(tr.exit_face);
  }
}

TEST(FlowConfinement, MisplacedBoxIsDetected) {
  // concentration window above the critical value: F grows by lowering mu, straight out of mu_lo
  DipSetup s;
  const double span = s.box.hi[2] - s.box.lo[2];
  s.box.lo[2] += 1.5 * span;
  s.box.hi[2] += 1.5 * span;
  std::array<double, 3> mid{};
  for (std::size_t i = 0; i < 3; ++i) mid[i] = 0.5 * (s.box.lo[i] + s.box.hi[i]);
  const FlowReport rep = flow_confinement(s.N, s.k, *s.V, {mid}, s.box);
  ASSERT_EQ(rep.starts, 1);
  EXPECT_EQ(rep.exits_h_mu, 1);
  EXPECT_EQ(rep.trajectories[0].exit_face, Face::mu_lo);
}

TEST(FlowConfinement, StartsAreValidated) {
  const DipSetup s;
  auto outside = s.box.center();
  outside[1] = s.box.hi[1] + 1e-3;
  EXPECT_THROW(flow_confinement(s.N, s.k, *s.V, {outside}, s.box), domain_error);
  EXPECT_THROW(flow_confinement(s.N, 256, *s.V, {s.box.center()}, s.box), domain_error);
  // with the t2 level moved below the bubble energy every start is too high
  FlowSpec spec;
  spec.levels.eta0_fraction = -0.1;
  EXPECT_THROW(flow_confinement(s.N, s.k, *s.V, {s.box.center()}, s.box, spec), domain_error);
}

TEST(FlowConfinement, RandomStartsStayInsideTheBox) {
  const DipSetup s;
  const auto starts = random_starts(s.box, 200, 99);
  ASSERT_EQ(starts.size(), 200u);
  for (const auto& z : starts) EXPECT_TRUE(s.box.contains(z));
  EXPECT_EQ(random_starts(s.box, 3, 5), random_starts(s.box, 3, 5));
}

TEST(FlowConfinement, TrajectoryCsvHasOneRowPerSample) {
  const DipSetup s;
  const FlowReport rep = flow_confinement(s.N, s.k, *s.V, random_starts(s.box, 2, 4), s.box);
  std::ostringstream os;
  write_trajectory_csv(os, rep);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "trajectory,t,r,h,mu,F");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, rep.trajectories[0].samples.size() + rep.trajectories[1].samples.size());
}
