#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "device_fixture.hpp"
#include "hexamer/disorder.hpp"

using namespace hexamer;

TEST_CASE("disorder spec validation and sub-seeding") {
    DisorderSpec s;
    s.sigma = -1.0;
    CHECK_THROWS_AS(s.validate(), config_error);
    s.sigma = 0.1;
    s.samples = 0;
    CHECK_THROWS_AS(s.validate(), config_error);
    s.samples = 1;
    s.workers = 0;
    CHECK_THROWS_AS(s.validate(), config_error);

    // distinct draws get distinct streams
    CHECK(disorder_subseed(1, 0) != disorder_subseed(1, 1));
    CHECK(disorder_subseed(1, 0) != disorder_subseed(2, 0));
    CHECK(disorder_subseed(7, 3) == disorder_subseed(7, 3));
}

TEST_CASE("histogram bookkeeping") {
    auto h = make_histogram({0.1, 0.15, 0.5, 1.0}, 0.0, 1.0, 10);
    CHECK(h.total() == 4);
    CHECK(h.counts[1] == 2);
    CHECK(h.counts[9] == 1);  // right edge lands in the last bin
    CHECK_THROWS_AS(make_histogram({}, 1.0, 0.0, 10), config_error);
}

TEST_CASE("zero microwave disorder reproduces the clean ring") {
    auto circuit = fixture::device_circuit();
    DisorderSpec spec;
    spec.sigma = 0.0;
    spec.samples = 5;
    spec.seed = 3;
    auto stats = mw_disorder_statistics(circuit, {0.0}, spec);
    REQUIRE(stats.points.size() == 1);
    const auto& pt = stats.points[0];
    // exact degeneracy resolved only to eigensolver round-off
    CHECK(pt.mean_splitting_pair1 < 1e-12 * stats.unperturbed_frequency[1]);
    CHECK(pt.mean_splitting_pair2 < 1e-12 * stats.unperturbed_frequency[3]);
    CHECK(pt.mean_fidelity_primary == 1.0);
    CHECK(pt.mean_fidelity_auxiliary == 1.0);
    for (int k = 0; k < 6; ++k)
        CHECK_THAT(pt.mean_frequency[k],
                   Catch::Matchers::WithinRel(stats.unperturbed_frequency[k], 1e-9));
    CHECK_FALSE(stats.perturbative_warning);
}

TEST_CASE("microwave disorder ensemble statistics") {
    auto circuit = fixture::device_circuit();
    DisorderSpec spec;
    spec.samples = 2000;
    spec.seed = 11;
    spec.workers = 4;
    auto stats = mw_disorder_statistics(circuit, {2e-4, 1e-3}, spec);
    const auto& gentle = stats.points[0];
    const auto& device_level = stats.points[1];

    SECTION("fidelities stay near one at the quoted fabrication spread") {
        CHECK(device_level.mean_fidelity_primary > 0.999);
        CHECK(device_level.mean_fidelity_auxiliary > 0.999);
        CHECK(device_level.min_fidelity_primary > 0.99);
    }
    SECTION("split-pair centers recover the unperturbed degenerate frequency") {
        // second-order bias is negligible at the gentler sigma
        CHECK(std::abs(gentle.mean_pair1_center - stats.unperturbed_frequency[1]) <
              4.0 * gentle.pair1_center_stderr);
        CHECK(std::abs(gentle.mean_pair2_center - stats.unperturbed_frequency[3]) <
              4.0 * gentle.pair2_center_stderr);
    }
    SECTION("pair splittings dwarf the non-degenerate mode shifts") {
        const double dsplit = 0.5 * (device_level.mean_splitting_pair1 -
                                     gentle.mean_splitting_pair1 +
                                     device_level.mean_splitting_pair2 -
                                     gentle.mean_splitting_pair2);
        const double dshift = std::max(
            std::abs(device_level.mean_frequency[0] - gentle.mean_frequency[0]),
            std::abs(device_level.mean_frequency[5] - gentle.mean_frequency[5]));
        CHECK(dsplit > 5.0 * dshift);
    }
    SECTION("splittings grow linearly with sigma") {
        const double ratio =
            device_level.mean_splitting_pair1 / gentle.mean_splitting_pair1;
        CHECK(ratio > 4.0);
        CHECK(ratio < 6.2);
    }
    SECTION("site amplitudes cluster at the uniform value") {
        // |amplitude| = 1/sqrt(6) = 0.408 in the clean ring; bins are 0.02 wide
        const auto& h = device_level.primary_amplitudes;
        REQUIRE(h.total() == 2000 * 6);
        const std::size_t near = h.counts[19] + h.counts[20] + h.counts[21];
        CHECK(double(near) > 0.9 * double(h.total()));
    }
}

TEST_CASE("microwave disorder runs are reproducible and worker-invariant") {
    auto circuit = fixture::device_circuit();
    DisorderSpec spec;
    spec.samples = 200;
    spec.seed = 21;
    spec.workers = 1;
    auto a = mw_disorder_statistics(circuit, {1e-3}, spec);
    auto b = mw_disorder_statistics(circuit, {1e-3}, spec);
    spec.workers = 4;
    auto c = mw_disorder_statistics(circuit, {1e-3}, spec);
    CHECK(a.points[0].mean_splitting_pair1 == b.points[0].mean_splitting_pair1);
    CHECK(a.points[0].mean_splitting_pair1 == c.points[0].mean_splitting_pair1);
    CHECK(a.points[0].mean_fidelity_primary == c.points[0].mean_fidelity_primary);

    spec.seed = 22;
    auto d = mw_disorder_statistics(circuit, {1e-3}, spec);
    CHECK(d.points[0].mean_splitting_pair1 != a.points[0].mean_splitting_pair1);
}

TEST_CASE("perturbative warning beyond one percent disorder") {
    auto circuit = fixture::device_circuit();
    DisorderSpec spec;
    spec.samples = 10;
    auto stats = mw_disorder_statistics(circuit, {2e-2}, spec);
    CHECK(stats.perturbative_warning);
}

TEST_CASE("measured splittings invert to the fabrication spread") {
    auto circuit = fixture::device_circuit();
    DisorderSpec spec;
    spec.samples = 2000;
    spec.seed = 31;
    spec.workers = 4;

    SECTION("self consistency") {
        auto stats = mw_disorder_statistics(circuit, {1e-3}, spec);
        DisorderSpec other = spec;
        other.seed = 32;
        auto est = infer_mw_sigma(circuit, stats.points[0].mean_splitting_pair1,
                                  stats.points[0].mean_splitting_pair2, other);
        CHECK_THAT(est.sigma, Catch::Matchers::WithinRel(1e-3, 0.05));
    }
    SECTION("device anchor: 3 and 4 MHz splittings mean roughly 0.1%") {
        auto est = infer_mw_sigma(circuit, hz_to_rad(3e6), hz_to_rad(4e6), spec);
        CHECK(est.sigma > 0.0007);
        CHECK(est.sigma < 0.0013);
    }
    CHECK_THROWS_AS(infer_mw_sigma(circuit, -1.0, 1.0, spec), config_error);
}

namespace {

double mean_gamma(const MechanicalParams& m) {
    double g = 0.0;
    for (double x : m.gamma_m) g += x / double(m.size());
    return g;
}

}  // namespace

TEST_CASE("zero mechanical disorder gives one broadening mode and flat bands") {
    auto mech = fixture::device_mechanics();
    auto cav = fixture::device_cavity();
    DisorderSpec spec;
    spec.sigma = 0.0;
    spec.samples = 3;
    spec.seed = 5;
    const std::vector<double> coop = {10.0, 100.0, 1000.0};
    auto sweep = mech_disorder_sweep(mech, cav, spec, coop);
    const double gbar = mean_gamma(mech);

    REQUIRE(sweep.linewidth_mean.size() == 3);
    for (std::size_t j = 0; j < coop.size(); ++j) {
        // reference line is N C gamma_bar
        CHECK_THAT(sweep.reference[j],
                   Catch::Matchers::WithinRel(6.0 * coop[j] * gbar, 1e-12));
        // slot 0 is the bright collective mode: Gamma (1 + N C)
        CHECK_THAT(sweep.linewidth_mean[j][0],
                   Catch::Matchers::WithinRel(gbar + sweep.reference[j], 0.05));
        for (std::size_t s = 1; s < 6; ++s) {
            CHECK_THAT(sweep.linewidth_mean[j][s],
                       Catch::Matchers::WithinRel(gbar, 0.01));
            // identical draws: the 90% band collapses
            CHECK(sweep.linewidth_p95[j][s] == sweep.linewidth_p5[j][s]);
        }
        CHECK(sweep.linewidth_p95[j][0] == sweep.linewidth_p5[j][0]);
    }
}

TEST_CASE("mechanical disorder bands widen with sigma") {
    auto mech = fixture::device_mechanics();
    auto cav = fixture::device_cavity();
    const std::vector<double> coop = {30.0, 300.0, 3000.0};
    DisorderSpec spec;
    spec.samples = 40;
    spec.seed = 41;
    spec.workers = 4;

    spec.sigma = 1e-4;
    auto narrow = mech_disorder_sweep(mech, cav, spec, coop);
    spec.sigma = 1e-3;
    auto wide = mech_disorder_sweep(mech, cav, spec, coop);

    double width_narrow = 0.0, width_wide = 0.0;
    for (std::size_t j = 0; j < coop.size(); ++j)
        for (std::size_t s = 0; s < 6; ++s) {
            width_narrow += narrow.linewidth_p95[j][s] - narrow.linewidth_p5[j][s];
            width_wide += wide.linewidth_p95[j][s] - wide.linewidth_p5[j][s];
        }
    CHECK(width_wide > width_narrow);
}

namespace {

// cooperativity at which the bright trajectory reaches half the collective
// reference, interpolated on the log grid
double collective_crossing(const MechDisorderSweep& sweep, double gbar) {
    double prev_c = 0.0, prev_r = 0.0;
    for (std::size_t j = 0; j < sweep.cooperativity.size(); ++j) {
        const double r =
            (sweep.linewidth_mean[j][0] - gbar) / sweep.reference[j];
        if (r >= 0.5) {
            if (j == 0) return sweep.cooperativity[0];
            const double f = (0.5 - prev_r) / (r - prev_r);
            return std::exp(std::log(prev_c) +
                            f * (std::log(sweep.cooperativity[j]) - std::log(prev_c)));
        }
        prev_c = sweep.cooperativity[j];
        prev_r = r;
    }
    return sweep.cooperativity.back();
}

}  // namespace

TEST_CASE("collective transition cooperativity scales linearly with sigma") {
    auto mech = fixture::device_mechanics();
    auto cav = fixture::device_cavity();
    const auto coop = logspace(20.0, 8000.0, 13);
    DisorderSpec spec;
    spec.samples = 30;
    spec.seed = 51;
    spec.workers = 4;
    const double gbar = mean_gamma(mech);

    spec.sigma = 2.5e-4;
    const double c1 = collective_crossing(mech_disorder_sweep(mech, cav, spec, coop), gbar);
    spec.sigma = 5e-4;
    const double c2 = collective_crossing(mech_disorder_sweep(mech, cav, spec, coop), gbar);
    CHECK(c1 > coop.front());
    CHECK(c2 < coop.back());
    CHECK(c2 / c1 > 1.4);
    CHECK(c2 / c1 < 2.9);
}

TEST_CASE("mechanical sweeps are reproducible and worker-invariant") {
    auto mech = fixture::device_mechanics();
    auto cav = fixture::device_cavity();
    const std::vector<double> coop = {50.0, 500.0};
    DisorderSpec spec;
    spec.sigma = 5e-4;
    spec.samples = 12;
    spec.seed = 61;
    spec.workers = 1;
    auto a = mech_disorder_sweep(mech, cav, spec, coop);
    spec.workers = 3;
    auto b = mech_disorder_sweep(mech, cav, spec, coop);
    for (std::size_t j = 0; j < coop.size(); ++j)
        for (std::size_t s = 0; s < 6; ++s) {
            CHECK(a.linewidth_mean[j][s] == b.linewidth_mean[j][s]);
            CHECK(a.frequency_p95[j][s] == b.frequency_p95[j][s]);
        }
}
