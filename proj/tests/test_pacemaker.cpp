/**
 * Copyright 2026 The VBFT Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <random>
#include <set>

#include "vbft/pacemaker.hpp"

using namespace vbft;
using Decision = Pacemaker::Decision;

TEST(Timer, FiresOncePerExpiredEpoch) {
  Pacemaker pm(Config::for_nodes(4, 40));
  auto e = pm.arm(100);
  EXPECT_EQ(pm.deadline(), 140u);
  EXPECT_FALSE(pm.on_timer(e, 139));
  EXPECT_TRUE(pm.on_timer(e, 140));
  EXPECT_FALSE(pm.on_timer(e, 141));
  EXPECT_EQ(pm.current_timeout(), 80u);
}

TEST(Timer, StaleEpochIsIgnored) {
  Pacemaker pm(Config::for_nodes(4, 40));
  auto old = pm.arm(0);
  auto fresh = pm.arm(10);
  EXPECT_FALSE(pm.on_timer(old, 1000));
  EXPECT_TRUE(pm.on_timer(fresh, 50));
}

TEST(Timer, CommitBeforeDeadlineResets) {
  Pacemaker pm(Config::for_nodes(4, 40));
  auto e = pm.arm(0);
  ASSERT_TRUE(pm.on_timer(e, 40));
  e = pm.arm(40);
  ASSERT_EQ(pm.deadline(), 120u);
  auto after = pm.on_commit(60);
  EXPECT_FALSE(pm.on_timer(e, 200));
  EXPECT_EQ(pm.current_timeout(), 40u);
  EXPECT_EQ(pm.consecutive_failures(), 0u);
  EXPECT_EQ(pm.deadline(), 100u);
  EXPECT_FALSE(pm.on_timer(after, 99));
}

TEST(Timer, ThreeFailuresGiveEightTimesBase) {
  Pacemaker pm(Config::for_nodes(4, 25));
  SimTime now = 0;
  for (int i = 0; i < 3; ++i) {
    auto e = pm.arm(now);
    now = pm.deadline();
    ASSERT_TRUE(pm.on_timer(e, now));
  }
  EXPECT_EQ(pm.consecutive_failures(), 3u);
  EXPECT_EQ(pm.current_timeout(), 200u);
}

TEST(TimerProperty, MonotoneDoublingUntilCommit) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Pacemaker pm(Config::for_nodes(7, 10));
    SimTime now = 0, prev = pm.current_timeout();
    for (int step = 0; step < 20; ++step) {
      if (rng() % 4 == 0) {
        pm.on_commit(now);
        EXPECT_EQ(pm.current_timeout(), 10u);
      } else {
        auto e = pm.arm(now);
        now = pm.deadline();
        ASSERT_TRUE(pm.on_timer(e, now));
        EXPECT_EQ(pm.current_timeout(), prev * 2);
      }
      prev = pm.current_timeout();
    }
  }
}

TEST(Amplify, TwoVotesForOneViewAtFOne) {
  Pacemaker pm(Config::for_nodes(4));
  EXPECT_EQ(pm.on_vc_observed(9, 1, 7).decision, Decision::none);
  auto obs = pm.on_vc_observed(9, 2, 7);
  EXPECT_EQ(obs.decision, Decision::amplify);
  EXPECT_EQ(obs.view, 9u);
}

TEST(Amplify, SingleMessageIsNotEnough) {
  Pacemaker pm(Config::for_nodes(4));
  EXPECT_EQ(pm.on_vc_observed(9, 1, 7).decision, Decision::none);
  // The same sender again does not add support.
  EXPECT_EQ(pm.on_vc_observed(9, 1, 7).decision, Decision::none);
  EXPECT_EQ(pm.on_vc_observed(10, 1, 7).decision, Decision::none);
}

TEST(Join, SmallestOfTheHighestFPlusOne) {
  Pacemaker pm(Config::for_nodes(7));
  EXPECT_EQ(pm.on_vc_observed(9, 0, 7).decision, Decision::none);
  EXPECT_EQ(pm.on_vc_observed(10, 1, 7).decision, Decision::none);
  auto obs = pm.on_vc_observed(11, 2, 7);
  EXPECT_EQ(obs.decision, Decision::join);
  EXPECT_EQ(obs.view, 9u);
}

TEST(Join, RequestsAtOrBelowCurrentDoNotCount) {
  Pacemaker pm(Config::for_nodes(4));
  EXPECT_EQ(pm.on_vc_observed(7, 0, 7).decision, Decision::none);
  EXPECT_EQ(pm.on_vc_observed(8, 1, 7).decision, Decision::none);
  EXPECT_EQ(pm.on_vc_observed(12, 2, 7).decision, Decision::join);
  EXPECT_EQ(pm.on_vc_observed(12, 3, 9).view, 12u);
}

TEST(Support, CountsSendersAtOrAboveView) {
  Pacemaker pm(Config::for_nodes(4));
  pm.record_own(0, 5);
  pm.on_vc_observed(6, 1, 4);
  pm.on_vc_observed(4, 2, 4);
  EXPECT_EQ(pm.support(5), 2u);
  EXPECT_EQ(pm.support(6), 1u);
  EXPECT_EQ(pm.support(4), 3u);
  EXPECT_EQ(pm.tally(6), 1u);
  pm.on_vc_observed(3, 1, 4);  // lower request never replaces a higher one
  EXPECT_EQ(pm.tally(6), 1u);
}

// Never initiates on f or fewer senders, whatever they ask for.
TEST(AmplifyProperty, NeedsFPlusOneDistinctSenders) {
  std::mt19937_64 rng(11);
  for (std::uint32_t n : {4u, 7u, 10u}) {
    Config c = Config::for_nodes(n);
    for (int trial = 0; trial < 200; ++trial) {
      Pacemaker pm(c);
      std::set<NodeId> above;
      View current = 5;
      for (int m = 0; m < 12; ++m) {
        NodeId s = static_cast<NodeId>(rng() % n);
        View v = 3 + rng() % 8;
        auto obs = pm.on_vc_observed(v, s, current);
        if (v > current) above.insert(s);
        if (obs.decision != Decision::none) {
          EXPECT_GE(above.size(), c.f + 1);
          EXPECT_GT(obs.view, current);
          EXPECT_GE(pm.support(obs.view), c.f + 1);
        }
      }
    }
  }
}
