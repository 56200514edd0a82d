#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "gridflex/portfolio.hpp"

using namespace gridflex;
using Catch::Approx;

namespace {

const std::string kFix = GRIDFLEX_FIXTURE_DIR;

struct FixtureRun {
    GridCase gc;
    ScenarioTimeline tl;
};

FixtureRun load_fixture(const std::string& branches = "branches_relaxed.csv",
                        const std::string& capacity = "capacity.csv") {
    FixtureRun f;
    f.gc = load_grid_case(kFix + "/buses.csv", kFix + "/" + branches, kFix + "/generators.csv",
                          kFix + "/loads.csv");
    f.tl = load_timeline(f.gc, kFix + "/timeline.csv", kFix + "/" + capacity,
                         kFix + "/interruptible_commitment.csv");
    return f;
}

double residential_total(const GridCase& gc, const ScenarioTimeline& tl, int t) {
    double s = 0;
    for (size_t l = 0; l < gc.load_buses.size(); ++l)
        s += gc.load_buses[l].w_residential * tl.load(t, static_cast<Eigen::Index>(l));
    return s;
}

} // namespace

TEST_CASE("deterministic point repeats the same sample every replication") {
    FixtureRun f = load_fixture();
    PortfolioPoint base;
    base.interruptible_scale = 0;
    EngineConfig cfg;

    PortfolioPoint one = evaluate_portfolio(f.gc, f.tl, {}, cfg, base, 1);
    PortfolioPoint five = evaluate_portfolio(f.gc, f.tl, {}, cfg, base, 5);
    CHECK(one.ens == 16000.0);
    CHECK(five.ens == 16000.0);
    REQUIRE(five.samples.size() == 5);
    for (double s : five.samples) CHECK(s == 16000.0);
    CHECK_FALSE(five.ens_ci.has_value());
}

TEST_CASE("a large enough interruptible contract removes all shedding") {
    FixtureRun f = load_fixture();
    PortfolioPoint pt;
    pt.interruptible_scale = 4.0;
    PortfolioPoint got = evaluate_portfolio(f.gc, f.tl, {}, EngineConfig{}, pt, 1);
    CHECK(got.ens == 0.0);
}

TEST_CASE("interruptible marginal curve reproduces the hand-computed totals") {
    FixtureRun f = load_fixture();
    std::vector<double> grid{0, 1, 2, 4, 8};
    auto curve = marginal_curve(f.gc, f.tl, {}, EngineConfig{}, PortfolioPoint{},
                                MechanismKind::InterruptibleLoad, grid, 1);
    REQUIRE(curve.size() == 5);
    std::vector<double> expect{16000, 6800, 1500, 0, 0};
    for (size_t i = 0; i < curve.size(); ++i) {
        CHECK(curve[i].ens == expect[i]);
        CHECK(curve[i].interruptible_scale == grid[i]);
        CHECK(curve[i].rationing_max == 0.0);
        CHECK(curve[i].incentive_coverage == 0.0);
    }
    // Each extra unit of contract buys no more relief than the last.
    for (size_t i = 2; i < curve.size(); ++i) {
        double prev = curve[i - 2].ens - curve[i - 1].ens;
        double next = curve[i - 1].ens - curve[i].ens;
        CHECK(next <= prev + 1e-9);
    }
}

TEST_CASE("rationing marginal curve declines with shrinking gains") {
    FixtureRun f = load_fixture();
    PortfolioPoint base;
    base.interruptible_scale = 0; // isolate the rationing effect
    std::vector<double> grid{0, 0.1, 0.2, 0.3};
    auto curve = marginal_curve(f.gc, f.tl, {}, EngineConfig{}, base,
                                MechanismKind::LoadRationing, grid, 1);
    REQUIRE(curve.size() == 4);
    CHECK(curve[0].ens == 16000.0);
    CHECK(curve[1].ens < 16000.0);
    for (size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].ens <= curve[i - 1].ens + 1e-9);
    for (size_t i = 2; i < curve.size(); ++i) {
        double prev = curve[i - 2].ens - curve[i - 1].ens;
        double next = curve[i - 1].ens - curve[i].ens;
        CHECK(next <= prev + 1e-6);
    }
}

TEST_CASE("frontier thresholds track the peak gap net of the rationing ramp") {
    FixtureRun f = load_fixture();

    // Worst hour of the raw timeline and its reserve-floor gap.
    int peak = 0;
    double peak_gap = 0;
    for (int t = 0; t < f.tl.hours(); ++t) {
        double gap = f.tl.load.row(t).sum() + 2300.0 - f.tl.cap.row(t).sum();
        if (gap > peak_gap) {
            peak_gap = gap;
            peak = t;
        }
    }
    double res_peak = residential_total(f.gc, f.tl, peak);
    double commit = f.tl.commitment[peak];

    std::vector<double> levels{0, 0.15, 0.3};
    auto front = frontier_search(f.gc, f.tl, {}, EngineConfig{}, 0.0, levels, 1, 0.01);
    REQUIRE(front.size() == 3);
    for (size_t j = 0; j < front.size(); ++j) {
        CHECK(front[j].rationing_max == levels[j]);
        CHECK(front[j].incentive_coverage == 0.0);
        CHECK(front[j].ens == 0.0);
        // At the peak hour the contract must cover the gap left after one
        // rationing raise, which moves at most a 0.1 fraction of its cap.
        double expect = (peak_gap - 0.1 * levels[j] * res_peak) / commit;
        CHECK(front[j].interruptible_scale >= expect - 1e-6);
        CHECK(front[j].interruptible_scale <= expect + 0.0101);
    }
    for (size_t j = 1; j < front.size(); ++j)
        CHECK(front[j].interruptible_scale <= front[j - 1].interruptible_scale + 1e-9);

    // Bracket: a contract one tolerance below the reported threshold sheds.
    PortfolioPoint below;
    below.interruptible_scale = front[0].interruptible_scale - 0.0101;
    PortfolioPoint got = evaluate_portfolio(f.gc, f.tl, {}, EngineConfig{}, below, 1);
    CHECK(got.ens > 0.0);
}

TEST_CASE("frontier reports the lower bound when scale one already covers") {
    FixtureRun f = load_fixture("branches_relaxed.csv", "capacity_adequate.csv");
    auto front = frontier_search(f.gc, f.tl, {}, EngineConfig{}, 0.0, {0.0}, 1);
    REQUIRE(front.size() == 1);
    CHECK(front[0].interruptible_scale == 1.0);
    CHECK(front[0].ens == 0.0);
}

TEST_CASE("frontier refuses when no contract within the cap suffices") {
    FixtureRun f = load_fixture();
    CHECK_THROWS_AS(
        frontier_search(f.gc, f.tl, {}, EngineConfig{}, 0.0, {0.0}, 1, 0.01, 1.5),
        NoFeasibleScale);
}

TEST_CASE("stochastic point reproduces its distribution run to run") {
    FixtureRun f = load_fixture();
    PortfolioPoint pt;
    pt.interruptible_scale = 1.0;
    pt.incentive_coverage = 0.2;
    EngineConfig cfg;
    cfg.seed = 42;

    PortfolioPoint a = evaluate_portfolio(f.gc, f.tl, {}, cfg, pt, 30, 0, 4);
    PortfolioPoint b = evaluate_portfolio(f.gc, f.tl, {}, cfg, pt, 30, 0, 4);
    REQUIRE(a.samples.size() == 30);
    CHECK(a.samples == b.samples);
    CHECK(a.ens == b.ens);
    REQUIRE(a.ens_ci.has_value());
    CHECK(a.ens_ci->first <= a.ens);
    CHECK(a.ens_ci->second >= a.ens);
    CHECK(b.ens_ci == a.ens_ci);
    // Incentive relief can only help relative to the same contract alone.
    CHECK(a.ens <= 6800.0 + 1e-9);
}

TEST_CASE("parallel evaluation matches serial exactly") {
    FixtureRun f = load_fixture();
    std::vector<double> grid{1, 2, 4};
    auto serial = marginal_curve(f.gc, f.tl, {}, EngineConfig{}, PortfolioPoint{},
                                 MechanismKind::InterruptibleLoad, grid, 1, 1);
    auto threaded = marginal_curve(f.gc, f.tl, {}, EngineConfig{}, PortfolioPoint{},
                                   MechanismKind::InterruptibleLoad, grid, 1, 4);
    REQUIRE(serial.size() == threaded.size());
    for (size_t i = 0; i < serial.size(); ++i) CHECK(serial[i].ens == threaded[i].ens);
}

TEST_CASE("portfolio guardrails reject malformed requests") {
    FixtureRun f = load_fixture();
    PortfolioPoint ok;
    CHECK_THROWS_AS(evaluate_portfolio(f.gc, f.tl, {}, EngineConfig{}, ok, 0), ValidationError);

    PortfolioPoint stoch;
    stoch.incentive_coverage = 0.2;
    CHECK_THROWS_AS(evaluate_portfolio(f.gc, f.tl, {}, EngineConfig{}, stoch, 10),
                    ValidationError);

    PortfolioPoint neg;
    neg.interruptible_scale = -1;
    CHECK_THROWS_AS(evaluate_portfolio(f.gc, f.tl, {}, EngineConfig{}, neg, 1), ValidationError);

    PortfolioPoint over;
    over.rationing_max = 1.5;
    CHECK_THROWS_AS(evaluate_portfolio(f.gc, f.tl, {}, EngineConfig{}, over, 1), ValidationError);

    CHECK_THROWS_AS(marginal_curve(f.gc, f.tl, {}, EngineConfig{}, ok,
                                   MechanismKind::InterruptibleLoad, {}, 1),
                    ValidationError);
    CHECK_THROWS_AS(marginal_curve(f.gc, f.tl, {}, EngineConfig{}, ok,
                                   MechanismKind::InterruptibleLoad, {2, 2}, 1),
                    ValidationError);
    CHECK_THROWS_AS(frontier_search(f.gc, f.tl, {}, EngineConfig{}, 0.0, {}, 1),
                    ValidationError);
    CHECK_THROWS_AS(frontier_search(f.gc, f.tl, {}, EngineConfig{}, 0.0, {0.0}, 1, 0.0),
                    ValidationError);
}

TEST_CASE("sweep and frontier writers emit the documented schemas") {
    PortfolioPoint det;
    det.interruptible_scale = 2;
    det.ens = 1500;
    PortfolioPoint stoch;
    stoch.interruptible_scale = 4;
    stoch.incentive_coverage = 0.2;
    stoch.ens = 120;
    stoch.ens_ci = {{80.0, 170.0}};

    std::string sweep_path = "portfolio_sweep_test.csv";
    write_sweep_csv(sweep_path, MechanismKind::InterruptibleLoad, {2, 4}, {det, stoch});
    {
        std::ifstream in(sweep_path);
        REQUIRE(in.good());
        std::string line;
        std::getline(in, line);
        CHECK(line == "mechanism,scale,ens_mean,ens_lo,ens_hi");
        std::getline(in, line);
        CHECK(line == "interruptible,2,1500,1500,1500");
        std::getline(in, line);
        CHECK(line == "interruptible,4,120,80,170");
    }
    std::remove(sweep_path.c_str());

    PortfolioPoint row;
    row.interruptible_scale = 2.5;
    row.rationing_max = 0.15;
    row.incentive_coverage = 0.1;
    std::string front_path = "portfolio_frontier_test.csv";
    write_frontier_csv(front_path, {row});
    {
        std::ifstream in(front_path);
        REQUIRE(in.good());
        std::string line;
        std::getline(in, line);
        CHECK(line == "incentive_coverage,rationing_max,min_interruptible_scale");
        std::getline(in, line);
        CHECK(line == "0.1,0.15,2.5");
    }
    std::remove(front_path.c_str());
}
