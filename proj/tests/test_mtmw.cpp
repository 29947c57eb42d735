#include "mtmw_oracle.hpp"

#include "onlinekm/mtmw.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace onlinekm;
using onlinekm::testing::ExplicitTree;

namespace {

std::vector<Point> random_stream(Rng& rng, std::size_t T, std::size_t d) {
    std::vector<Point> xs;
    for (std::size_t t = 0; t < T; ++t) xs.push_back(onlinekm::testing::random_centers(rng, 1, d).centers[0]);
    return xs;
}

void expand_counts(MassTree<int>& mt, const std::vector<std::size_t>& counts) {
    std::size_t i = 0;
    mt.extend([&](int label, std::vector<int>& out) {
        for (std::size_t c = 0; c < counts[i]; ++c) out.push_back(label * 10 + static_cast<int>(c));
        ++i;
    });
}

} // namespace

TEST(DefaultEta, Examples) {
    EXPECT_EQ(default_eta(1.0, 4), 0.5);
    EXPECT_NEAR(default_eta(1.0, 100), 0.1, 1e-15);
    EXPECT_GE(default_eta(3.0, 100), default_eta(3.0, 1000));
    EXPECT_THROW(default_eta(0.0, 10), InvalidInput);
}

TEST(CompensatedSum, BeatsNaive) {
    std::vector<double> v{1.0, 1e100, 1.0, -1e100};
    EXPECT_EQ(compensated_sum(v.begin(), v.end(), [](double x) { return x; }), 2.0);
}

TEST(MassTreeTest, SingleChildStepsKeepMasses) {
    MassTree<int> mt(1, 0.5, 1.0);
    mt.observe([](int) { return 0.0; });
    expand_counts(mt, {3});
    mt.observe([](int) { return 0.0; });
    expand_counts(mt, {1, 1, 1});
    ASSERT_EQ(mt.frontier().size(), 3u);
    for (const auto& n : mt.frontier()) EXPECT_DOUBLE_EQ(n.mass, 1.0 / 3.0);
    EXPECT_EQ(mt.depth(), 3u);
}

TEST(MassTreeTest, RecursiveMasses) {
    MassTree<int> mt(1, 0.5, 1.0);
    mt.observe([](int) { return 0.0; });
    expand_counts(mt, {2});
    mt.observe([](int) { return 0.0; });
    expand_counts(mt, {1, 3});
    std::vector<double> masses;
    for (const auto& n : mt.frontier()) masses.push_back(n.mass);
    ASSERT_EQ(masses.size(), 4u);
    EXPECT_DOUBLE_EQ(masses[0], 0.5);
    for (std::size_t i = 1; i < 4; ++i) EXPECT_DOUBLE_EQ(masses[i], 1.0 / 6.0);
    EXPECT_NEAR(mt.mass_sum(), 1.0, 1e-15);
}

TEST(MassTreeTest, DistributionAtDepthOneAndSinglePath) {
    MassTree<int> mt(1, 0.5, 1.0);
    EXPECT_EQ(mt.distribution(), std::vector<double>{1.0});
    Rng rng(1);
    EXPECT_EQ(mt.sample(rng), 0u);
    mt.observe([](int) { return 0.3; });
    expand_counts(mt, {4});
    for (double p : mt.distribution()) EXPECT_DOUBLE_EQ(p, 0.25);
}

TEST(MassTreeTest, ObserveAndUweights) {
    MassTree<int> mt(1, 0.25, 2.0);
    mt.observe([](int) { return 0.0; });
    EXPECT_EQ(mt.frontier()[0].loss, 0.0);
    expand_counts(mt, {2});
    mt.observe([](int label) { return label == 10 ? 2.0 : 1.0; });
    EXPECT_NEAR(mt.expected_loss(), 0.75, 1e-15);
    expand_counts(mt, {1, 1});
    EXPECT_DOUBLE_EQ(mt.frontier()[0].uweight(), 1.0 - 0.25 * 1.0);
    EXPECT_DOUBLE_EQ(mt.frontier()[1].uweight(), 1.0 - 0.25 * 0.5);
}

TEST(MassTreeTest, ContractViolations) {
    MassTree<int> mt(1, 0.5, 1.0);
    EXPECT_THROW(expand_counts(mt, {1}), std::logic_error);
    mt.observe([](int) { return 0.1; });
    EXPECT_THROW(mt.observe([](int) { return 0.1; }), std::logic_error);
    EXPECT_THROW(expand_counts(mt, {0}), std::logic_error);
    MassTree<int> bad(1, 0.5, 1.0);
    EXPECT_THROW(bad.observe([](int) { return 1.5; }), InvalidInput);
    EXPECT_THROW(MassTree<int>(1, 0.7, 1.0), InvalidInput);
}

TEST(MassTreeTest, FrontierCapNamesDepth) {
    MassTree<int> mt(1, 0.5, 1.0, 5);
    mt.observe([](int) { return 0.0; });
    try {
        expand_counts(mt, {6});
        FAIL() << "expected ResourceError";
    } catch (const ResourceError& e) {
        EXPECT_NE(std::string(e.what()).find("depth 2"), std::string::npos);
    }
}

TEST(MassTreeTest, DumpRows) {
    MassTree<int> mt(1, 0.5, 1.0, kDefaultFrontierCap, true);
    mt.observe([](int) { return 0.5; });
    expand_counts(mt, {2});
    std::ostringstream os;
    mt.dump(os);
    EXPECT_EQ(os.str(), "t,node_id,parent_id,mass,uweight,normalized_loss\n"
                        "1,0,-1,1,1,0.5\n"
                        "2,1,0,0.5,0.75,0\n"
                        "2,2,0,0.5,0.75,0\n");
}

TEST(MassTreeTest, MatchesPathEnumeration) {
    Rng rng(77);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t k = 1 + rng.below(2);
        const std::size_t d = 1 + rng.below(2);
        const auto tree = onlinekm::testing::random_tree(rng, 4, 3, k, d);
        const auto xs = random_stream(rng, 4, d);
        const auto r = onlinekm::testing::check_equivalence(tree, xs, 0.1 + 0.4 * rng.uniform01(), static_cast<double>(d));
        EXPECT_LE(r.max_tv, 1e-9);
        EXPECT_LE(r.max_mass_error, 1e-12);
    }
}

TEST(MassTreeTest, DescendantMassEqualsAncestorMass) {
    Rng rng(5);
    const auto tree = onlinekm::testing::random_tree(rng, 5, 3, 1, 1);
    MassTree<std::size_t> mt(0, 0.3, 1.0);
    std::vector<double> mass(tree.nodes.size(), 0.0);
    mass[0] = 1.0;
    for (std::size_t t = 1; t < tree.T; ++t) {
        mt.observe([](std::size_t) { return 0.2; });
        mt.extend([&](std::size_t v, std::vector<std::size_t>& out) {
            for (auto c : tree.nodes[v].children) out.push_back(c);
        });
        for (const auto& n : mt.frontier()) mass[n.label] = n.mass;
    }
    // Depth-T frontier masses summed under every depth-2 node equal that node's mass.
    for (auto v : tree.at_depth(2)) {
        double below = 0.0;
        for (const auto& n : mt.frontier()) {
            std::size_t a = n.label;
            while (tree.nodes[a].depth > 2) a = tree.nodes[a].parent;
            if (a == v) below += n.mass;
        }
        EXPECT_NEAR(below, 1.0 / static_cast<double>(tree.nodes[0].children.size()), 1e-15);
    }
}

TEST(MassTreeTest, RegretAgainstPlantedPath) {
    // Sparse branching keeps the frontier small; one planted path predicts every x_t exactly.
    const std::size_t T = 60;
    double total = 0.0, bound_sum = 0.0;
    const int runs = 50;
    for (int seed = 0; seed < runs; ++seed) {
        Rng rng(static_cast<std::uint64_t>(1000 + seed));
        std::vector<Point> xs;
        for (std::size_t t = 0; t < T; ++t) xs.push_back(Point{0.2 + 0.6 * rng.uniform01()});
        struct Label {
            double center;
            bool planted;
            std::size_t depth;
        };
        // Pre-draw the branching so -ln M(p) is known before choosing eta.
        std::vector<std::size_t> planted_branch(T);
        double neg_log_m = 0.0;
        for (std::size_t t = 0; t + 1 < T; ++t) {
            planted_branch[t] = rng.below(4) == 0 ? 2 + rng.below(2) : 1;
            neg_log_m += std::log(static_cast<double>(planted_branch[t]));
        }
        neg_log_m = std::max(neg_log_m, 1.0);
        const double eta = std::min(0.5, std::sqrt(neg_log_m / static_cast<double>(T)));
        MassTree<Label> mt(Label{xs[0][0], true, 1}, eta, 1.0);
        Rng pick(static_cast<std::uint64_t>(seed));
        double cum = 0.0;
        for (std::size_t t = 1; t <= T; ++t) {
            const auto& node = mt.frontier()[mt.sample(pick)];
            cum += (node.label.center - xs[t - 1][0]) * (node.label.center - xs[t - 1][0]);
            if (t == T) break;
            mt.observe([&](const Label& l) { return (l.center - xs[t - 1][0]) * (l.center - xs[t - 1][0]); });
            mt.extend([&](const Label& l, std::vector<Label>& out) {
                if (l.planted) {
                    out.push_back({xs[t][0], true, t + 1});
                    for (std::size_t c = 1; c < planted_branch[t - 1]; ++c) out.push_back({rng.uniform01(), false, t + 1});
                } else {
                    out.push_back({rng.uniform01(), false, t + 1});
                }
            });
        }
        total += cum;
        bound_sum += std::sqrt(static_cast<double>(T) * neg_log_m);
    }
    EXPECT_LE(total / runs, 1.2 * bound_sum / runs);
}
