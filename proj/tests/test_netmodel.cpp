#include <gtest/gtest.h>

#include "cellsleep/netmodel.hpp"

using namespace cellsleep;

namespace {

CarrierProfile flat_profile(int carrier = 1) {
  CarrierProfile p;
  p.carrier = carrier;
  p.coverage_rank = carrier;
  p.max_prbs = 100;
  p.p_sleep = 5.0;
  p.p_standby = 100.0;
  p.p_load = 200.0;
  return p;
}

CarrierProfiles flat_profiles() {
  CarrierProfiles ps{};
  for (int j = 0; j < kCarriers; ++j) ps[j] = flat_profile(j);
  return ps;
}

}  // namespace

TEST(LoadRatio, Examples) {
  EXPECT_DOUBLE_EQ(load_ratio(0, 100), 0.0);
  EXPECT_DOUBLE_EQ(load_ratio(100, 100), 1.0);
  EXPECT_DOUBLE_EQ(load_ratio(25, 100), 0.25);
}

TEST(LoadRatio, RejectsBadInput) {
  EXPECT_THROW(load_ratio(1, 0), std::invalid_argument);
  EXPECT_THROW(load_ratio(101, 100), std::invalid_argument);
  EXPECT_THROW(load_ratio(-1, 100), std::invalid_argument);
}

TEST(CellPower, Examples) {
  const auto p = flat_profile();
  EXPECT_DOUBLE_EQ(cell_power(true, 0.5, p, false, 0.3, 162.0), 200.0);
  EXPECT_DOUBLE_EQ(cell_power(false, 0.0, p, false, 0.3, 162.0), 5.0);
  EXPECT_NEAR(cell_power(true, 0.0, p, true, 0.3, 162.0), 148.6, 1e-12);
}

TEST(CellPower, SleepIgnoresSwitchFlag) { EXPECT_DOUBLE_EQ(cell_power(false, 0.0, flat_profile(), true, 0.3, 162.0), 5.0); }

TEST(CellPower, RejectsLoadOutsideUnitInterval) {
  EXPECT_THROW(cell_power(true, 1.5, flat_profile(), false, 0.3, 162.0), std::invalid_argument);
  EXPECT_THROW(cell_power(true, -0.1, flat_profile(), false, 0.3, 162.0), std::invalid_argument);
}

TEST(SwitchingCost, Examples) {
  const auto on = OnOffConfig::all_on();
  EXPECT_DOUBLE_EQ(switching_cost(on, on, 0.3, 162.0), 0.0);

  OnOffConfig prev = on;
  prev.set(1, 3, false);
  EXPECT_NEAR(switching_cost(prev, on, 0.3, 162.0), 48.6, 1e-12);

  // three cells come on and two go off; only the former are charged
  OnOffConfig a = on, b = on;
  a.set(0, 1, false);
  a.set(1, 2, false);
  a.set(2, 4, false);
  b.set(0, 3, false);
  b.set(0, 4, false);
  EXPECT_NEAR(switching_cost(a, b, 0.3, 162.0), 145.8, 1e-12);
}

TEST(SwitchingCost, ScalesWithCellCount) {
  for (int n = 0; n <= 12; ++n) {
    OnOffConfig prev = OnOffConfig::all_on();
    int turned = 0;
    for (int c = 0; c < kCells && turned < n; ++c) {
      if (c % kCarriers == 0) continue;
      prev.bits[c] = false;
      ++turned;
    }
    EXPECT_NEAR(switching_cost(prev, OnOffConfig::all_on(), 0.3, 162.0), 0.3 * 162.0 * n, 1e-9);
  }
}

TEST(StationPower, AllOffIsFifteenSleepDraws) {
  StationState s;
  s.config = OnOffConfig::all_off();
  EXPECT_DOUBLE_EQ(station_power(s, s.config, flat_profiles(), 0.3, 162.0), 75.0);
}

TEST(StationPower, AllOnIdleIsFifteenStandbyDraws) {
  StationState s;
  EXPECT_DOUBLE_EQ(station_power(s, s.config, flat_profiles(), 0.3, 162.0), 1500.0);
}

TEST(StationPower, MixedFixtureHandSummed) {
  auto ps = flat_profiles();
  ps[2].p_standby = 90.0;
  ps[2].p_load = 150.0;
  StationState s;
  s.config = OnOffConfig::all_on();
  s.config.set(0, 4, false);  // asleep: 5 W
  s.cells[0].allocated_prbs = 50;  // sector 0 carrier 0: 100 + 0.5*200 = 200
  s.cells[2].allocated_prbs = 20;  // sector 0 carrier 2: 90 + 0.2*150 = 120
  OnOffConfig prev = s.config;
  prev.set(2, 3, false);  // that cell just woke: +48.6
  // remaining on cells are idle: ten flat ones at 100 W, two carrier-2 ones at 90 W
  const double expected = 200.0 + 120.0 + 5.0 + 10 * 100.0 + 2 * 90.0 + 48.6;
  EXPECT_NEAR(station_power(s, prev, ps, 0.3, 162.0), expected, 1e-9);
}

TEST(Qos, Examples) {
  std::vector<CellObservation> cells(15);
  for (int c = 0; c < 15; ++c) {
    cells[c].ue_count = 1;
    cells[c].tx_time = 900;
    cells[c].delivered = (c < 12 ? 2.0 : 0.5) * 900;
  }
  EXPECT_DOUBLE_EQ(qos_uncongested_pct(cells, 1.0), 80.0);

  std::vector<CellObservation> idle(15);
  EXPECT_DOUBLE_EQ(qos_uncongested_pct(idle, 1.0), 100.0);

  std::vector<CellObservation> four(4);
  for (int c = 0; c < 4; ++c) {
    four[c].ue_count = 2;
    four[c].tx_time = 10;
    four[c].delivered = c < 2 ? 10.0 : 40.0;  // per-UE 0.5 vs 2.0
  }
  EXPECT_DOUBLE_EQ(qos_uncongested_pct(four, 1.0), 50.0);
}

TEST(Qos, SleepingCellsAreIgnored) {
  std::vector<CellObservation> cells(2);
  cells[0] = {1, 0, 0, true, 0.1 * 900, 900};
  cells[1] = {1, 0, 0, false, 0.1 * 900, 900};
  EXPECT_DOUBLE_EQ(qos_uncongested_pct(cells, 1.0), 0.0);
  cells[0].on = false;
  EXPECT_DOUBLE_EQ(qos_uncongested_pct(cells, 1.0), 100.0);
}

TEST(Qos, RejectsNonPositiveTau) {
  std::vector<CellObservation> cells(1);
  EXPECT_THROW(qos_uncongested_pct(cells, 0.0), std::invalid_argument);
}

TEST(Handover, Examples) {
  std::vector<int> a(15, 0), b(15, 0);
  EXPECT_EQ(handover_count(a, a), 0);
  a[0] = 3;
  a[1] = 2;
  b[0] = 1;
  b[1] = 4;
  EXPECT_EQ(handover_count(a, b), 2);
  std::vector<int> c{5, 0, 0}, d{0, 3, 2};
  EXPECT_EQ(handover_count(c, d), 5);
}

TEST(Handover, RejectsLengthMismatch) {
  std::vector<int> a(3), b(4);
  EXPECT_THROW(handover_count(a, b), std::invalid_argument);
}

TEST(ActionSpace, SizesAndOrder) {
  const auto four = action_space(Mode::FourCell);
  ASSERT_EQ(four.size(), 16u);
  EXPECT_EQ(four.front().mask, 0);
  for (std::size_t k = 0; k < four.size(); ++k) EXPECT_EQ(four[k].mask, k);
  const auto two = action_space(Mode::TwoCell);
  ASSERT_EQ(two.size(), 4u);
  for (std::size_t k = 0; k < two.size(); ++k) {
    EXPECT_EQ(two[k].mask, 12 + k);
    EXPECT_EQ(action_index(two[k]), static_cast<int>(k));
  }
}

TEST(ApplyAction, Examples) {
  EXPECT_EQ(apply_action(Action{0b1111, Mode::FourCell}).count_on(), 15);
  const auto none = apply_action(Action{0b0000, Mode::FourCell});
  EXPECT_EQ(none.count_on(), 3);
  for (int i = 0; i < kSectors; ++i) EXPECT_TRUE(none.on(i, 0));
  const auto c = apply_action(Action{0b1010, Mode::FourCell});
  for (int i = 0; i < kSectors; ++i) {
    EXPECT_TRUE(c.on(i, 0));
    EXPECT_TRUE(c.on(i, 1));
    EXPECT_FALSE(c.on(i, 2));
    EXPECT_TRUE(c.on(i, 3));
    EXPECT_FALSE(c.on(i, 4));
  }
}

TEST(ApplyAction, TwoCellRejectsLowCarriersOff) {
  EXPECT_THROW(apply_action(Action{0b0111, Mode::TwoCell}), InvalidAction);
  EXPECT_NO_THROW(apply_action(Action{0b1100, Mode::TwoCell}));
}

TEST(OnOffConfig, ValidityPerMode) {
  auto c = apply_action(Action{0b0011, Mode::FourCell});
  EXPECT_TRUE(c.valid(Mode::FourCell));
  EXPECT_FALSE(c.valid(Mode::TwoCell));
  c.set(1, 0, false);
  EXPECT_FALSE(c.valid(Mode::FourCell));
}

TEST(CellId, IndexRoundTrip) {
  for (int k = 0; k < kCells; ++k) EXPECT_EQ(CellId::from_index(k).index(), k);
  EXPECT_EQ((CellId{0, 2, 3}.index()), 13);
}

TEST(Profiles, DefaultsValidateAndRejectBadOnes) {
  EXPECT_NO_THROW(validate_profiles(default_profiles()));
  auto p = default_profiles();
  p[2].p_standby = 1.0;  // below sleep draw
  EXPECT_THROW(validate_profiles(p), std::invalid_argument);
  p = default_profiles();
  std::swap(p[1], p[2]);
  EXPECT_THROW(validate_profiles(p), std::invalid_argument);
}
