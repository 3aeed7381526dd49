#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "ysm/distribution.hpp"
#include "ysm/fokker_planck.hpp"
#include "ysm/mc_engine.hpp"
#include "ysm/population.hpp"
#include "ysm/rng.hpp"

using namespace ysm;

namespace {

ModelParams params_for(double zeta, double tau, std::size_t n, double w, double dt) {
    return ModelParams::constant_tax(zeta, tau, n, w, dt);
}

std::string series_text(const RunRecord& r) {
    std::ostringstream out;
    write_series_csv(out, r);
    return out.str();
}

} // namespace

TEST_CASE("pairing of two agents") {
    RngStream rng(1);
    const auto pairs = transaction_pairing(Population::equal(2, 2.0), rng);
    REQUIRE(pairs.size() == 1);
    CHECK(std::min(pairs[0].first, pairs[0].second) == 0);
    CHECK(std::max(pairs[0].first, pairs[0].second) == 1);
    CHECK_THROWS_AS((void)transaction_pairing(Population::equal(1, 1.0), rng), std::domain_error);
}

TEST_CASE("the three matchings of four agents are equally likely") {
    std::array<int, 4> by_partner{};
    const int draws = 6000;
    for (int s = 0; s < draws; ++s) {
        RngStream rng(2024, static_cast<std::uint64_t>(s));
        const auto pairs = transaction_pairing(Population::equal(4, 4.0), rng);
        REQUIRE(pairs.size() == 2);
        std::set<std::size_t> seen;
        for (const auto& [a, b] : pairs) {
            seen.insert(a);
            seen.insert(b);
            if (a == 0) ++by_partner[b];
            if (b == 0) ++by_partner[a];
        }
        CHECK(seen.size() == 4);
    }
    double chi2 = 0.0;
    for (int p = 1; p < 4; ++p) {
        const double e = draws / 3.0;
        chi2 += (by_partner[p] - e) * (by_partner[p] - e) / e;
    }
    CHECK(chi2 < 13.82); // 2 dof, p = 0.001
}

TEST_CASE("with five agents each one sits out a fifth of the time") {
    std::array<int, 5> out{};
    const int draws = 20000;
    RngStream rng(77);
    for (int s = 0; s < draws; ++s) {
        const auto pairs = transaction_pairing(Population::equal(5, 5.0), rng);
        REQUIRE(pairs.size() == 2);
        std::array<bool, 5> in{};
        for (const auto& [a, b] : pairs) in[a] = in[b] = true;
        for (int i = 0; i < 5; ++i) out[i] += in[i] ? 0 : 1;
    }
    const double sd = std::sqrt(draws * 0.2 * 0.8);
    for (int c : out) CHECK(std::abs(c - draws * 0.2) < 4.0 * sd);
}

TEST_CASE("WAA bias and the biased coin") {
    auto p = params_for(0.5, 0.0, 10, 10.0, 1.0); // zeta N/W sqrt(dt) = 0.5
    CHECK(waa_bias(2.0, 2.0, p).value == 0.0);
    CHECK(waa_bias(3.0, 2.0, p).value == 0.5);
    CHECK(waa_bias(2.0, 3.0, p).value == -0.5);
    const auto clipped = waa_bias(10.0, 1.0, p);
    CHECK(clipped.value == 1.0);
    CHECK(clipped.clipped);
    CHECK(waa_bias(0.0, 10.0, p).value == -1.0);
    CHECK(waa_bias(5.0, 1.0, params_for(0.0, 0.0, 10, 10.0, 1.0)).value == 0.0);

    auto frequency = [&](double z, double x, const ModelParams& q) {
        RngStream rng(31);
        const int n = 100000;
        int wins = 0;
        for (int i = 0; i < n; ++i) wins += biased_coin(z, x, q, rng).eta == 1;
        return static_cast<double>(wins) / n;
    };
    const double sd = std::sqrt(0.25 / 100000);
    CHECK(std::abs(frequency(2.0, 2.0, p) - 0.5) < 3.0 * sd);
    CHECK(std::abs(frequency(7.0, 1.0, params_for(0.0, 0.0, 10, 10.0, 1.0)) - 0.5) < 3.0 * sd);
    CHECK(std::abs(frequency(3.0, 2.0, p) - 0.75) < 3.0 * std::sqrt(0.75 * 0.25 / 100000));
}

TEST_CASE("one step of two equal agents without bias or tax") {
    const auto p = params_for(0.0, 0.0, 2, 2.0, 0.01);
    int up = 0;
    const int n = 4000;
    for (int s = 0; s < n; ++s) {
        Population pop = Population::equal(2, 2.0);
        RngStream rng(5, static_cast<std::uint64_t>(s));
        const auto rep = step(pop, p, rng);
        const auto w = pop.wealths();
        const bool a = std::abs(w[0] - 1.1) < 1e-15 && std::abs(w[1] - 0.9) < 1e-15;
        const bool b = std::abs(w[0] - 0.9) < 1e-15 && std::abs(w[1] - 1.1) < 1e-15;
        CHECK((a || b));
        up += a;
        CHECK(rep.n_transactions == 1);
        CHECK(pop.time() == doctest::Approx(0.01));
    }
    CHECK(std::abs(up - n / 2) < 4.0 * std::sqrt(n * 0.25));
}

TEST_CASE("taxation drift of one step") {
    // The poor agent has nothing to stake, so only redistribution moves wealth.
    const auto p = params_for(0.0, 0.1, 2, 2.0, 0.1);
    Population pop(std::vector<double>{0.0, 2.0});
    RngStream rng(3);
    (void)step(pop, p, rng);
    CHECK(pop.wealths()[0] == doctest::Approx(0.01).epsilon(1e-13));
    CHECK(pop.wealths()[1] == doctest::Approx(1.99).epsilon(1e-13));
}

TEST_CASE("step rejects a population of the wrong size and invalid params") {
    Population pop = Population::equal(4, 4.0);
    RngStream rng(1);
    CHECK_THROWS_AS((void)step(pop, params_for(0.1, 0.1, 5, 4.0, 0.01), rng), std::invalid_argument);
    CHECK_THROWS_AS((void)step(pop, params_for(0.1, 0.1, 4, 4.0, 2.0), rng), std::invalid_argument);
}

TEST_CASE("clamping redistributes the deficit") {
    std::vector<double> w{-1.0, 2.0, 3.0};
    CHECK(clamp_and_redistribute(w) == 1);
    CHECK(w == std::vector<double>{0.0, 1.5, 2.5});
    std::vector<double> v{-3.0, 1.0, 10.0};
    CHECK(clamp_and_redistribute(v) == 1);
    CHECK(v[0] == 0.0);
    CHECK(v[1] == 0.0);
    CHECK(v[2] == doctest::Approx(8.0).epsilon(1e-15));
}

TEST_CASE("wealth is conserved over a million steps") {
    const auto p = params_for(0.3, 0.1, 4, 4.0, 0.01);
    McStepper stepper(p);
    Population pop = Population::equal(4, 4.0);
    RngStream rng(8);
    double worst = 0.0;
    for (int k = 0; k < 1000000; ++k) {
        const auto rep = stepper.step(pop, rng);
        worst = std::max(worst, std::abs(rep.wealth_residual));
    }
    CHECK(worst < 1e-12);
    CHECK(std::abs(pop.relative_wealth_residual()) < 1e-9);
    CHECK(pop.size() == 4);
}

TEST_CASE("wealth stays nonnegative when taxation overdraws") {
    // sqrt(dt) = 1 stakes the whole poorer wealth and tau dt = 0.5 then overdraws the loser.
    const auto p = params_for(0.2, 0.5, 50, 50.0, 1.0);
    McStepper stepper(p);
    RngStream rng(4);
    Population pop = Population::exponential(50, 50.0, rng);
    std::size_t clamped = 0;
    for (int k = 0; k < 2000; ++k) {
        const auto rep = stepper.step(pop, rng);
        clamped += rep.clamped_wealth_count;
        for (double x : pop.wealths()) REQUIRE(x >= 0.0);
    }
    CHECK(clamped > 0);
    CHECK(std::abs(pop.relative_wealth_residual()) < 1e-9);
}

TEST_CASE("alternative taxation and pairing modes conserve wealth") {
    const auto p = params_for(0.3, 0.1, 101, 101.0, 0.01);
    for (auto tax : {TaxationMode::per_sweep, TaxationMode::per_transaction}) {
        for (auto pairing : {PairingMode::perfect_matching, PairingMode::sampled_pairs}) {
            McStepper stepper(p, {tax, pairing});
            RngStream rng(12);
            Population pop = Population::exponential(101, 101.0, rng);
            for (int k = 0; k < 2000; ++k) {
                const auto rep = stepper.step(pop, rng);
                REQUIRE(rep.n_transactions == 50);
            }
            CHECK(std::abs(pop.relative_wealth_residual()) < 1e-9);
            for (double x : pop.wealths()) CHECK(x >= 0.0);
        }
    }
    CHECK(parse_taxation_mode(to_string(TaxationMode::per_transaction)) == TaxationMode::per_transaction);
    CHECK(parse_pairing_mode(to_string(PairingMode::sampled_pairs)) == PairingMode::sampled_pairs);
    CHECK_THROWS_AS((void)parse_pairing_mode("random"), std::invalid_argument);
}

TEST_CASE("without bias or tax a tagged agent's one-step change is symmetric") {
    const auto p = params_for(0.0, 0.0, 20, 20.0, 0.01);
    RngStream init_rng(99);
    const Population frozen = Population::exponential(20, 20.0, init_rng);
    McStepper stepper(p);
    RngStream rng(100);
    const int n = 100000;
    std::vector<double> d(n);
    for (int i = 0; i < n; ++i) {
        Population pop = frozen;
        (void)stepper.step(pop, rng);
        d[i] = pop.wealths()[0] - frozen.wealths()[0];
    }
    double m = 0.0;
    for (double x : d) m += x;
    m /= n;
    double m2 = 0.0, m3 = 0.0;
    for (double x : d) {
        m2 += (x - m) * (x - m);
        m3 += (x - m) * (x - m) * (x - m);
    }
    m2 /= n;
    m3 /= n;
    const double skew = m3 / std::pow(m2, 1.5);
    CHECK(std::abs(skew) < 3.0 * std::sqrt(6.0 / n));
}

TEST_CASE("one-step moments converge to the drift and diffusion coefficients") {
    // Frozen population with a tagged agent at z; partner is uniform over the
    // other N - 1 agents, so the exact one-step moments average over them only.
    const std::size_t n_agents = 50;
    RngStream init_rng(7);
    Population base = Population::exponential(n_agents, 50.0, init_rng);
    std::vector<double> w(base.wealths().begin(), base.wealths().end());
    const double z = 1.5;
    const double shift = (w[0] - z) / static_cast<double>(n_agents - 1);
    w[0] = z;
    for (std::size_t i = 1; i < n_agents; ++i) w[i] += shift;
    const Population frozen(w);
    const auto dist = WealthDistribution::from_samples(frozen.wealths());

    double prev_m2_err = 1e300, prev_m3 = 1e300;
    for (double dt : {1e-1, 1e-2, 1e-3}) {
        const auto p = params_for(1.0, 0.1, n_agents, 50.0, dt);
        const double m1 = drift_M1(dist, z, p);
        const double m2 = diffusion_M2(dist, z);
        // Exact expectation over the N - 1 possible partners.
        double m1_other = 0.1 * 50.0 / n_agents - 0.1 * z, m2_other = 0.0;
        for (std::size_t i = 1; i < n_agents; ++i) {
            const double x = w[i];
            m1_other += (1.0 * n_agents / 50.0) * (z - x) * std::min(z, x) / (n_agents - 1);
            m2_other += std::min(z, x) * std::min(z, x) / (n_agents - 1);
        }
        McStepper stepper(p);
        RngStream rng(500, static_cast<std::uint64_t>(dt * 1e6));
        const int trials = 400000;
        double s1 = 0.0, s2 = 0.0, s3 = 0.0, s11 = 0.0;
        for (int i = 0; i < trials; ++i) {
            Population pop = frozen;
            (void)stepper.step(pop, rng);
            const double d = pop.wealths()[0] - z;
            s1 += d / dt;
            s11 += (d / dt) * (d / dt);
            s2 += d * d / dt;
            s3 += d * d * d / dt;
        }
        const double mean1 = s1 / trials;
        const double se1 = std::sqrt((s11 / trials - mean1 * mean1) / trials);
        const double mean2 = s2 / trials;
        const double mean3 = s3 / trials;
        CHECK(std::abs(mean1 - m1_other) < 4.0 * se1);
        CHECK(std::abs(mean1 - m1) < 4.0 * se1 + std::abs(m1 - m1_other));
        const double m2_err = std::abs(mean2 - m2_other);
        CHECK(m2_err < 0.05 * m2_other + 10.0 * dt * m2_other);
        CHECK(std::abs(mean2 - m2) < m2_err + std::abs(m2 - m2_other) + 1e-12);
        if (dt < 0.05) CHECK(m2_err < prev_m2_err + 4.0 * m2_other / std::sqrt(trials));
        CHECK(std::abs(mean3) < prev_m3);
        prev_m2_err = m2_err;
        prev_m3 = std::abs(mean3);
    }
}

TEST_CASE("simulate records on its cadence and is deterministic") {
    const auto p = params_for(0.3, 0.1, 100, 100.0, 0.01);
    SimulationOptions opts;
    opts.record_every = 50;
    opts.lorenz_every = 2;
    RngStream a(7), b(7), c(8);
    const auto ra = simulate(p, Population::equal(100, 100.0), 3.05, a, opts);
    const auto rb = simulate(p, Population::equal(100, 100.0), 3.05, b, opts);
    const auto rc = simulate(p, Population::equal(100, 100.0), 3.05, c, opts);
    CHECK(ra.steps == 305);
    REQUIRE(ra.samples.size() == 8); // 0, 50, ..., 300 and the final step
    CHECK(ra.samples.front().t == 0.0);
    CHECK(ra.samples.back().t == doctest::Approx(3.05));
    CHECK(ra.lorenz.size() == 4);
    CHECK(series_text(ra) == series_text(rb));
    CHECK(series_text(ra) != series_text(rc));
    CHECK(ra.max_abs_wealth_residual < 1e-12);
    CHECK(ra.samples.front().top1_share == doctest::Approx(0.01));
}

TEST_CASE("an observer failure aborts with the last valid state") {
    const auto p = params_for(0.3, 0.1, 10, 10.0, 0.01);
    SimulationOptions opts;
    opts.record_every = 10;
    const std::vector<Observer> observers{[](const Population& snap, const StepReport&) {
        if (snap.time() > 0.25) throw std::runtime_error("observer gave up");
    }};
    RngStream rng(1);
    try {
        (void)simulate(p, Population::equal(10, 10.0), 1.0, rng, opts, observers);
        FAIL("expected SimulationAborted");
    } catch (const SimulationAborted& e) {
        CHECK(e.last_state().time() == doctest::Approx(0.3));
        CHECK(e.last_state().size() == 10);
        CHECK(std::string(e.what()).find("observer gave up") != std::string::npos);
    }
}

TEST_CASE("heavy clipping is flagged") {
    const auto p = params_for(0.3, 0.1, 1000, 1000.0, 0.01);
    RngStream rng(2);
    SimulationOptions opts;
    opts.record_every = 1000;
    const auto r = simulate(p, Population::with_oligarch(1000, 1000.0, 0.3), 5.0, rng, opts);
    CHECK(r.clipped_bias > 0);
    CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("without tax or bias wealth condenses; subcritical tax prevents it") {
    SimulationOptions opts;
    opts.record_every = 1000;
    RngStream a(3);
    const auto free = simulate(params_for(0.0, 0.0, 50, 50.0, 0.01), Population::equal(50, 50.0), 300.0, a, opts);
    CHECK(free.samples.back().top1_share > 0.3);
    RngStream b(3);
    const auto taxed = simulate(params_for(0.05, 0.1, 50, 50.0, 0.01), Population::equal(50, 50.0), 300.0, b, opts);
    CHECK(taxed.samples.back().top1_share < 0.2);
}

TEST_CASE("observe_population splits off the richest agent") {
    Population pop(std::vector<double>{1, 1, 1, 7});
    const auto s = observe_population(pop, 0.25);
    CHECK(s.top1_share == doctest::Approx(0.7));
    CHECK(s.top_eps_share == doctest::Approx(0.7));
    CHECK(std::abs(s.gini_p) < 1e-15);
    CHECK(s.gini_P == doctest::Approx(0.45).epsilon(1e-14)); // mean |xi - xj| = 4.5 over 2 N^2 mean
}
