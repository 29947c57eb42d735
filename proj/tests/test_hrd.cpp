#include "onlinekm/hrd.hpp"
#include "onlinekm/random.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <set>
#include <sstream>

using namespace onlinekm;

namespace {

Point random_point(Rng& rng, std::size_t d) {
    std::vector<double> v(d);
    for (auto& c : v) c = rng.uniform01();
    return Point(std::move(v));
}

// Builds a random weighted stream into an HRD and returns the inserted points.
std::vector<WeightedPoint> fill(HrdState& h, Rng& rng, std::size_t T) {
    std::vector<WeightedPoint> ins;
    for (std::size_t t = 1; t <= T; ++t) {
        WeightedPoint wx{random_point(rng, h.d()), static_cast<double>(1 + rng.below(t))};
        h.insert(wx, t);
        ins.push_back(wx);
    }
    return ins;
}

} // namespace

TEST(DeltaT, Examples) {
    EXPECT_EQ(delta_t(0.25, 1), 0.125);
    EXPECT_EQ(delta_t(0.25, 2), 1.0 / 64.0);
    for (std::size_t t = 1; t < 50; ++t) EXPECT_GE(delta_t(0.5, t), delta_t(0.5, t + 1));
    EXPECT_THROW(delta_t(0.5, 0), InvalidInput);
}

TEST(RefineCriteria, Examples) {
    const Region root = Region::root(1);
    EXPECT_FALSE(refine_criteria(root, Point{0.3}, 1, 0.5));
    const Region tiny{6, {0}};
    EXPECT_TRUE(refine_criteria(tiny, Point{0.001}, 1, 0.25)); // 1/64 <= 1/8
    const Region quarter{2, {0}};
    EXPECT_TRUE(refine_criteria(quarter, Point{1.0}, 1, 0.5));
}

TEST(RegionTest, Geometry) {
    const Region r{2, {1, 3}};
    EXPECT_EQ(r.lower(0), 0.25);
    EXPECT_EQ(r.upper(1), 1.0);
    EXPECT_EQ(r.diameter2(), 2.0 / 16.0);
    EXPECT_EQ(r.volume(), 1.0 / 16.0);
    EXPECT_EQ(r.centroid(), (Point{0.375, 0.875}));
    EXPECT_TRUE(r.contains(Point{0.25, 1.0}));
    EXPECT_FALSE(r.contains(Point{0.5, 0.8}));
    EXPECT_EQ(r.child(3), (Region{3, {3, 7}}));
    EXPECT_EQ(r.distance2(Point{0.0, 1.0}), 0.0625);
}

TEST(Params, RoundingAndLambda) {
    const auto p = HrdParams::derive(1, 2, 0.25);
    EXPECT_EQ(p.epsilon_hrd, 0.25);
    EXPECT_EQ(p.delta_T(), 1.0 / 64.0);
    EXPECT_EQ(p.level_max, 6u);
    EXPECT_EQ(p.lambda(), 6.0);
    // T = 3: 2 * 27 = 54 is not a power of two, so epsilon is rounded down.
    const auto q = HrdParams::derive(1, 3, 0.5);
    EXPECT_LE(q.epsilon_hrd, 0.5);
    EXPECT_GT(q.epsilon_hrd, 0.25);
    EXPECT_EQ(std::ldexp(1.0, -static_cast<int>(q.level_max)), q.delta_T() / q.sqrt_dprime);
    // d = 2: sqrt(d') = 2
    EXPECT_EQ(HrdParams::derive(2, 2, 0.25).sqrt_dprime, 2.0);
    EXPECT_EQ(HrdParams::derive(5, 2, 0.25).sqrt_dprime, 4.0);
    EXPECT_THROW(HrdParams::derive(1, 1u << 20, 1e-3), ConfigError);
    EXPECT_THROW(HrdParams::derive(1, 2, 0.0), InvalidInput);
}

TEST(Insert, GoldenOnePointAtZero) {
    HrdState h(1, 2, 0.25);
    const auto res = h.insert({Point{0.0}, 1.0}, 1);
    // root fails (r = 0); level 1: [0,1/2) r = 0, [1/2,1] r = 1/2 with max(1/16, 1/8) < 1/2;
    // level 2: every diameter 1/4 exceeds max(eps r / 2, 1/8) since r <= 3/4; level 3: 1/8 passes.
    ASSERT_EQ(res.new_leaves.size(), 8u);
    EXPECT_EQ(h.leaf_count(), 8u);
    EXPECT_EQ(h.nodes().size(), 15u);
    std::set<std::uint64_t> cells;
    for (auto id : res.new_leaves) {
        EXPECT_EQ(h.node(id).region.level, 3u);
        cells.insert(h.node(id).region.cell[0]);
    }
    EXPECT_EQ(cells.size(), 8u);
    EXPECT_LE(h.node(h.locate(Point{0.0})).region.diameter(), 0.125);
    std::ostringstream os;
    h.dump(os);
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "0 0 -1 0");
}

TEST(Insert, GoldenMatchesRecursiveSimulation) {
    // Independent simulation of the worklist over intervals [lo, hi].
    const double eps = 0.25;
    HrdState h(1, 8, eps);
    const double e = h.params().epsilon_hrd;
    std::vector<std::pair<double, std::size_t>> pts{{0.3, 1}, {0.71, 2}, {0.705, 3}, {1.0, 5}};
    std::vector<std::pair<double, double>> leaves{{0.0, 1.0}};
    for (const auto& [x, t] : pts) {
        h.insert({Point{x}, 1.0}, t);
        const double delta = e / (2.0 * t * t * t);
        std::vector<std::pair<double, double>> next, work = leaves;
        while (!work.empty()) {
            auto [lo, hi] = work.back();
            work.pop_back();
            const double r = x < lo ? lo - x : (x > hi ? x - hi : 0.0);
            if (hi - lo <= std::max(e * r / 2.0, delta)) {
                next.push_back({lo, hi});
            } else {
                const double mid = (lo + hi) / 2.0;
                work.push_back({lo, mid});
                work.push_back({mid, hi});
            }
        }
        leaves = next;
    }
    std::multiset<std::pair<double, double>> expect(leaves.begin(), leaves.end()), got;
    for (auto id : h.leaves()) got.insert({h.node(id).region.lower(0), h.node(id).region.upper(0)});
    EXPECT_EQ(got, expect);
}

TEST(Insert, SamePointTwiceIsNoOp) {
    HrdState h(2, 16, 0.5);
    h.insert({Point{0.3, 0.6}, 1.0}, 2);
    const auto n = h.nodes().size();
    EXPECT_TRUE(h.insert({Point{0.3, 0.6}, 1.0}, 2).new_leaves.empty());
    EXPECT_EQ(h.nodes().size(), n);
}

TEST(Insert, Preconditions) {
    HrdState h(1, 4, 0.5);
    EXPECT_THROW(h.insert({Point{0.5}, 3.0}, 2), InvalidInput);
    EXPECT_THROW(h.insert({Point{0.5}, 1.0}, 5), InvalidInput);
    h.insert({Point{0.5}, 1.0}, 3);
    EXPECT_THROW(h.insert({Point{0.5}, 1.0}, 2), InvalidInput);
    EXPECT_THROW(h.insert({Point{1.5}, 1.0}, 3), InvalidInput);
}

TEST(Insert, NewLeafBound) {
    Rng rng(3);
    for (std::size_t d : {1u, 2u}) {
        HrdState h(d, 32, 0.5);
        for (std::size_t t = 1; t <= 32; ++t) {
            const auto res = h.insert({random_point(rng, d), 1.0}, t);
            EXPECT_LE(static_cast<double>(res.new_leaves.size()), h.params().new_leaf_bound());
        }
    }
}

TEST(Locate, Boundaries) {
    HrdState h(1, 2, 0.25);
    EXPECT_EQ(h.locate(Point{0.7}), 0u);
    h.insert({Point{0.0}, 1.0}, 1);
    EXPECT_EQ(h.node(h.locate(Point{0.5})).region, (Region{3, {4}}));
    EXPECT_EQ(h.node(h.locate(Point{1.0})).region, (Region{3, {7}}));
    EXPECT_EQ(h.node(h.locate_at(Point{1.0}, 0)).region, Region::root(1));
}

TEST(ApproximateCenters, Mapping) {
    HrdState h(2, 4, 0.5);
    const CenterSet s{{Point{0.1, 0.9}, Point{0.1, 0.9}}};
    EXPECT_EQ(h.approximate_centers(s), CenterSet::replicate(Point{0.5, 0.5}, 2));
    Rng rng(1);
    fill(h, rng, 4);
    const auto a = h.approximate_centers(s);
    EXPECT_EQ(a.centers[0], a.centers[1]);
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& r = h.node(h.locate(s.centers[i])).region;
        EXPECT_LE(squared_distance(s.centers[i], a.centers[i]), r.diameter2() / 4.0 + 1e-15);
        EXPECT_EQ(h.approximate_centers(CenterSet{{r.centroid()}}).centers[0], r.centroid());
    }
}

TEST(Properties, PartitionChainAndPermanence) {
    Rng rng(10);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t d = 1 + rng.below(2);
        const std::size_t T = 4 + rng.below(12);
        HrdState h(d, T, trial % 2 ? 0.5 : 1.0);
        fill(h, rng, T);
        double vol = 0.0;
        for (auto id : h.leaves()) vol += h.node(id).region.volume();
        EXPECT_EQ(vol, 1.0);
        for (int q = 0; q < 50; ++q) {
            const Point x = random_point(rng, d);
            std::size_t hits = 0;
            for (auto id : h.leaves()) hits += h.node(id).region.contains(x) ? 1 : 0;
            EXPECT_GE(hits, 1u);
            EXPECT_TRUE(h.node(h.locate(x)).region.contains(x));
            EXPECT_LE(static_cast<double>(h.refinements_along(x)), h.params().lambda());
        }
        for (const auto& n : h.nodes()) {
            if (n.first_child == HrdState::npos) continue;
            for (std::size_t c = 0; c < h.fanout(); ++c) {
                const auto& ch = h.node(n.first_child + c).region;
                EXPECT_EQ(ch.diameter2() * 4.0, n.region.diameter2());
            }
        }
        EXPECT_TRUE(h.criteria_hold());
    }
}

TEST(Properties, LocalBtlRandomCoLocatedPairs) {
    Rng rng(20);
    std::size_t checks = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t d = 1 + rng.below(2);
        const std::size_t T = 8 + rng.below(8);
        HrdState h(d, T, trial % 2 ? 0.5 : 0.25);
        const double e = h.params().epsilon_hrd;
        const auto ins = fill(h, rng, T);
        for (int pair = 0; pair < 5; ++pair) {
            const std::size_t k = 1 + rng.below(3);
            std::vector<Point> s, s2;
            for (std::size_t i = 0; i < k; ++i) {
                s.push_back(random_point(rng, d));
                const auto& r = h.node(h.locate(s.back())).region;
                std::vector<double> u(d);
                for (std::size_t a = 0; a < d; ++a) u[a] = r.lower(a) + rng.uniform01() * r.side();
                s2.push_back(Point(std::move(u)));
            }
            const CenterSet cs{s}, cs2{s2};
            for (std::size_t tau = 1; tau <= T; ++tau) {
                const auto& wx = ins[tau - 1];
                const double tt = static_cast<double>(tau);
                const double lhs = wx.weight * loss(cs2, wx.point);
                const double rhs = (1.0 + e) * wx.weight * loss(cs, wx.point) + e / std::pow(tt, 5.0);
                EXPECT_LE(lhs, rhs + 1e-15);
                ++checks;
            }
        }
    }
    EXPECT_GT(checks, 5000u);
}

TEST(Properties, LocalBtlWorstCorner) {
    // The cross term 2 r Delta gives (1 + eps/2)^2 in the worst case, with the additive term doubled.
    Rng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t d = 1 + rng.below(2);
        const std::size_t T = 8 + rng.below(8);
        HrdState h(d, T, 0.5);
        const double e = h.params().epsilon_hrd;
        const auto ins = fill(h, rng, T);
        const Point c = random_point(rng, d);
        const auto& r = h.node(h.locate(c)).region;
        for (std::size_t tau = 1; tau <= T; ++tau) {
            const auto& x = ins[tau - 1].point;
            std::vector<double> far(d);
            for (std::size_t a = 0; a < d; ++a) {
                far[a] = std::abs(x[a] - r.lower(a)) > std::abs(x[a] - r.upper(a)) ? r.lower(a) : r.upper(a);
            }
            const double tt = static_cast<double>(tau);
            const double lhs = ins[tau - 1].weight * squared_distance(Point(far), x);
            const double rhs = (1.0 + e / 2.0) * (1.0 + e / 2.0) * ins[tau - 1].weight * squared_distance(c, x) +
                               2.0 * e / std::pow(tt, 5.0);
            EXPECT_LE(lhs, rhs + 1e-15);
        }
    }
}

TEST(Properties, DescendantLeavesAtTime) {
    HrdState h(1, 8, 0.5);
    h.insert({Point{0.2}, 1.0}, 1);
    const auto leaves1 = h.leaves();
    h.insert({Point{0.9}, 1.0}, 3);
    std::size_t covered = 0;
    for (auto id : leaves1) covered += h.descendant_leaves(id, 3).size();
    EXPECT_EQ(covered, h.leaf_count());
    for (auto id : leaves1) EXPECT_EQ(h.descendant_leaves(id, 1), std::vector<std::size_t>{id});
}
