#include <doctest.h>

#include <cmath>
#include <random>

#include "activegp/dynamics.hpp"
#include "activegp/errors.hpp"

using namespace activegp;
using nlohmann::json;

TEST_CASE("registry")
{
    const auto names = system_names();
    REQUIRE(names.size() == 3);
    for (const auto& n : names) {
        const auto sys = make_system(n);
        CHECK(sys->name() == n);
        CHECK(sys->spec().initial_state.size() == sys->spec().state_dim);
        CHECK(sys->spec().control_bounds.dim() == sys->spec().control_dim);
        CHECK(sys->spec().region_of_interest.dim() == sys->spec().state_dim);
        CHECK(default_system_parameters().contains(n));
    }
    CHECK(make_system("pendulum")->spec().state_dim == 2);
    CHECK(make_system("two_link")->spec().control_dim == 2);
    CHECK(make_system("cart_pole")->spec().state_dim == 4);
    CHECK_THROWS_AS(make_system("unicycle"), ContractViolation);
}

TEST_CASE("parameter overrides")
{
    json p = {{"pendulum", {{"damping", 0.3}, {"noise_variance", 0.0}}}};
    const auto sys = make_system("pendulum", p);
    CHECK(sys->parameters().at("damping").get<double>() == 0.3);
    CHECK(sys->spec().noise_variance == 0.0);
    CHECK(sys->parameters().at("gravity").get<double>() == 9.81);

    json bad = {{"pendulum", {{"control_bounds", json::array({json::array({1.0, -1.0})})}}}};
    CHECK_THROWS_AS(make_system("pendulum", bad), ContractViolation);
}

TEST_CASE("pendulum stable equilibrium is a fixed point")
{
    const auto sys = make_system("pendulum");
    const Vector next = true_step(*sys, Vector::Zero(2), Vector::Zero(1));
    CHECK(next.isZero(0.0));
}

TEST_CASE("pendulum energy decreases without control")
{
    const auto sys = make_system("pendulum");
    Vector x(2);
    x << 0.3, 0.0;
    double e = sys->energy(x);
    for (int k = 0; k < 100; ++k) {
        x = true_step(*sys, x, Vector::Zero(1), k);
        const double next = sys->energy(x);
        CHECK(next < e);
        e = next;
    }
}

TEST_CASE("damped energy decay on every system")
{
    for (const auto& name : system_names()) {
        const auto sys = make_system(name);
        Vector x = sys->spec().initial_state;
        x(0) += 0.2;
        x(x.size() - 1) += 0.3;
        const double start = sys->energy(x);
        for (int k = 0; k < 400; ++k)
            x = true_step(*sys, x, Vector::Zero(sys->spec().control_dim), k);
        CHECK(sys->energy(x) < start);
    }
}

TEST_CASE("observation noise")
{
    const auto sys = make_system("pendulum");
    REQUIRE(sys->spec().noise_variance == 0.05);
    std::mt19937_64 rng(1);
    const Vector x = Vector::Constant(2, 0.5);
    const int draws = 100000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < draws; ++i) {
        const double e = observe(*sys, x, rng)(0) - 0.5;
        sum += e;
        sum2 += e * e;
    }
    const double mean = sum / draws;
    const double var = sum2 / draws - mean * mean;
    CHECK(std::abs(var - 0.05) <= 0.05 * 0.05);

    std::mt19937_64 a(7), b(7);
    for (int i = 0; i < 10; ++i)
        CHECK(observe(*sys, x, a) == observe(*sys, x, b));

    const auto quiet = make_system("pendulum", {{"pendulum", {{"noise_variance", 0.0}}}});
    CHECK(observe(*quiet, x, a) == x);
}

TEST_CASE("rollout composes true_step")
{
    const auto sys = make_system("cart_pole");
    std::mt19937_64 rng(3);
    const Matrix u = Matrix::Random(6, 1) * 4.0;
    const Trajectory t = rollout(*sys, sys->spec().initial_state, u, rng, 10);
    REQUIRE(t.size() == 6);
    Vector x = sys->spec().initial_state;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const auto& r = t.records[i];
        CHECK(r.step == 10 + static_cast<long>(i));
        CHECK(r.state == x);
        x = true_step(*sys, x, u.row(static_cast<Index>(i)).transpose());
        CHECK(r.next_state == x);
        CHECK(r.observation.size() == x.size());
    }
    CHECK_NOTHROW(t.validate(sys->spec().control_bounds));

    // out-of-bounds control is rejected
    Matrix bad = Matrix::Constant(1, 1, 100.0);
    CHECK_THROWS_AS(rollout(*sys, sys->spec().initial_state, bad, rng), ContractViolation);
}

TEST_CASE("equilibrium stays put for 1000 steps")
{
    for (const auto& name : system_names()) {
        const auto sys = make_system(name);
        const Vector x0 = sys->spec().initial_state;
        Vector x = x0;
        double worst = 0.0;
        for (int k = 0; k < 1000; ++k) {
            x = true_step(*sys, x, Vector::Zero(sys->spec().control_dim), k);
            worst = std::max(worst, (x - x0).norm());
        }
        CHECK(worst <= 1e-6);
    }
}

TEST_CASE("bounded input, bounded state")
{
    for (const auto& name : system_names()) {
        const auto sys = make_system(name);
        const Box& b = sys->spec().control_bounds;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            std::mt19937_64 rng(seed);
            std::uniform_real_distribution<double> u01(0.0, 1.0);
            Vector x = sys->spec().initial_state;
            bool finite = true;
            for (int k = 0; k < 500 && finite; ++k) {
                Vector u(b.dim());
                for (Index j = 0; j < u.size(); ++j)
                    u(j) = b.lower(j) + u01(rng) * (b.upper(j) - b.lower(j));
                x = true_step(*sys, x, u, k);
                finite = x.allFinite();
            }
            CHECK(finite);
        }
    }
}

TEST_CASE("divergence is reported")
{
    const auto sys = make_system("pendulum");
    Vector x(2);
    x << 0.0, 1e308;
    CHECK_THROWS_AS(true_step(*sys, x, Vector::Zero(1), 42), SimulationDivergence);
}

TEST_CASE("step determinism")
{
    const auto sys = make_system("two_link");
    Vector x(4);
    x << 0.1, -0.2, 0.3, 0.4;
    Vector u(2);
    u << 1.0, -1.5;
    CHECK(true_step(*sys, x, u) == true_step(*sys, x, u));
}

TEST_CASE("system defaults")
{
    CHECK(system_defaults("pendulum").steps == 150);
    CHECK(system_defaults("cart_pole").steps == 150);
    CHECK(system_defaults("two_link").steps == 250);
    CHECK(system_defaults("pendulum").coverage_cells == 10);
    CHECK(system_defaults("two_link").coverage_cells == 6);
}
