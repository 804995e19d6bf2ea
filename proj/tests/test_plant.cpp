#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "igo/numerics.hpp"
#include "igo/plant.hpp"
#include "oracles.hpp"

using Catch::Approx;
using namespace igo;

TEST_CASE("chain realization") {
    SECTION("matrices carry the rates and gains in place") {
        const PlantLTI p = plant_from_chain(0.1, 0.5, 1.2, 2.0, 3.0);
        CHECK(p.A(0, 0) == -0.1);
        CHECK(p.A(1, 1) == -0.5);
        CHECK(p.A(2, 2) == -1.2);
        CHECK(p.A(1, 0) == 2.0);
        CHECK(p.A(2, 1) == 3.0);
        CHECK(p.A(0, 1) == 0.0);
        CHECK(p.A(0, 2) == 0.0);
        CHECK(p.A(2, 0) == 0.0);
        CHECK(p.B[0] == 1.0);
        CHECK(p.B[1] == 0.0);
        CHECK(p.B[2] == 0.0);
        CHECK(p.C[2] == 1.0);
    }

    SECTION("the input enters ahead of two integrations, so C B = 0") {
        const PlantLTI p = plant_from_chain(0.1, 0.5, 1.2, 2.0, 3.0);
        CHECK(p.C.dot(p.B) == 0.0);
        CHECK(p.C.dot(p.A * p.B) == 0.0);  // relative degree three
        CHECK(p.C.dot(p.A * (p.A * p.B)) > 0.0);
    }

    SECTION("nonpositive parameters are rejected") {
        CHECK_THROWS_AS(plant_from_chain(0.0, 0.5, 1.2, 2.0, 3.0), Error);
        CHECK_THROWS_AS(plant_from_chain(0.1, -0.5, 1.2, 2.0, 3.0), Error);
        CHECK_THROWS_AS(plant_from_chain(0.1, 0.5, 1.2, 0.0, 3.0), Error);
        CHECK_THROWS_AS(plant_from_chain(0.1, 0.5, 1.2, 2.0, -3.0), Error);
    }

    SECTION("coincident rates are rejected") {
        CHECK_THROWS_AS(plant_from_chain(0.5, 0.5, 1.2, 2.0, 3.0), Error);
        CHECK_THROWS_AS(plant_from_chain(0.1, 1.2, 1.2, 2.0, 3.0), Error);
        CHECK_THROWS_AS(plant_from_chain(0.3, 0.5, 0.3 * (1.0 + 1e-12), 2.0, 3.0), Error);
    }

    SECTION("impulse response is nonnegative and initially flat") {
        const PlantLTI p = plant_from_chain(0.0374, 0.1496, 0.374, 0.0374, 0.0559504);
        CHECK(p.output(p.B) == 0.0);
        for (int i = 1; i <= 60; ++i) {
            const double t = 0.5 * i;
            CHECK(p.C.dot(mat_exp(p.A, t) * p.B) >= 0.0);
        }
    }
}

TEST_CASE("muscle relaxant parameterization") {
    SECTION("rates and gains follow the single-parameter family") {
        const PlantLTI p = plant_from_nmb(NmbParams{.alpha = oracle::kAlpha});
        CHECK(p.a1 == Approx(oracle::kA[0]).epsilon(1e-15));
        CHECK(p.a2 == Approx(oracle::kA[1]).epsilon(1e-15));
        CHECK(p.a3 == Approx(oracle::kA[2]).epsilon(1e-15));
        CHECK(p.g1 == Approx(oracle::kG1).epsilon(1e-15));
        CHECK(p.g2 == Approx(oracle::kG2).epsilon(1e-15));
    }

    SECTION("static gain is one for any admissible alpha") {
        for (double alpha : {0.005, 0.0374, 0.08, 0.1}) {
            const PlantLTI p = plant_from_nmb(NmbParams{.alpha = alpha});
            CHECK(dc_gain(p) == Approx(1.0).epsilon(1e-14));
        }
    }

    SECTION("alpha outside (0, 0.1] is rejected") {
        CHECK_THROWS_AS(plant_from_nmb(NmbParams{.alpha = 0.0}), Error);
        CHECK_THROWS_AS(plant_from_nmb(NmbParams{.alpha = -0.01}), Error);
        CHECK_THROWS_AS(plant_from_nmb(NmbParams{.alpha = 0.11}), Error);
        CHECK_NOTHROW(plant_from_nmb(NmbParams{.alpha = 0.1}));
    }
}

TEST_CASE("saturating dose response") {
    const StaticNonlinearity hill = hill_nonlinearity(oracle::kGamma, oracle::kC50);

    SECTION("anchor points") {
        CHECK(hill.eval(0.0) == 100.0);
        CHECK(hill.eval(oracle::kC50) == Approx(50.0).epsilon(1e-14));
        CHECK(hill.eval(7.3889) == Approx(oracle::kPhiAt7p3889).epsilon(1e-14));
        CHECK(hill.eval(13.9463) == Approx(oracle::kPhiAt13p9463).epsilon(1e-14));
        CHECK_FALSE(hill.increasing());
    }

    SECTION("inverse reproduces the corridor endpoints") {
        CHECK(hill_inverse(hill, 2.0) == Approx(oracle::kPhiInv2).epsilon(1e-14));
        CHECK(hill_inverse(hill, 10.0) == Approx(oracle::kPhiInv10).epsilon(1e-14));
        CHECK(hill_inverse(hill, 50.0) == Approx(oracle::kC50).epsilon(1e-14));
        CHECK(hill_inverse(hill, 100.0) == 0.0);
    }

    SECTION("round trip across the admissible range") {
        for (int i = 0; i <= 99; ++i) {
            const double y = 0.5 + i;
            CHECK(hill.eval(hill.inverse(y)) == Approx(y).epsilon(1e-10));
        }
    }

    SECTION("derivative matches the closed form and central differences") {
        CHECK(hill_derivative(hill, 7.4309) == Approx(oracle::kPhiPrimeAt7p4309).epsilon(1e-14));
        for (double x : {0.5, 2.0, 8.0, 30.0}) {
            const double h = 1e-6 * x;
            const double fd = (hill.eval(x + h) - hill.eval(x - h)) / (2 * h);
            CHECK(hill.derivative(x) == Approx(fd).epsilon(1e-7));
        }
    }

    SECTION("domain limits") {
        CHECK_THROWS_AS(hill.eval(-1.0), Error);
        CHECK_THROWS_AS(hill.inverse(0.0), Error);
        CHECK_THROWS_AS(hill.inverse(101.0), Error);
        CHECK_THROWS_AS(hill.inverse(-5.0), Error);
    }

    SECTION("parameter validation") {
        CHECK_THROWS_AS(hill_nonlinearity(0.0, 3.0), Error);
        CHECK_THROWS_AS(hill_nonlinearity(11.0, 3.0), Error);
        CHECK_THROWS_AS(hill_nonlinearity(2.0, 0.0), Error);
        CHECK_THROWS_AS(hill_nonlinearity(2.0, -1.0), Error);
    }

    SECTION("steepness one has finite slope at zero, above one flattens") {
        const StaticNonlinearity unit = hill_nonlinearity(1.0, 4.0);
        CHECK(unit.derivative(0.0) == Approx(-100.0 / 4.0).epsilon(1e-14));
        CHECK(hill.derivative(0.0) == 0.0);
        const StaticNonlinearity shallow = hill_nonlinearity(0.5, 4.0);
        CHECK_THROWS_AS(shallow.derivative(0.0), Error);
    }

    SECTION("hill accessors reject other kinds") {
        const StaticNonlinearity id = identity_nonlinearity();
        CHECK_THROWS_AS(hill_eval(id, 1.0), Error);
        CHECK_THROWS_AS(hill_inverse(id, 1.0), Error);
        CHECK_THROWS_AS(hill_derivative(id, 1.0), Error);
    }
}

TEST_CASE("power and identity maps") {
    SECTION("identity passes values through") {
        const StaticNonlinearity id = identity_nonlinearity();
        CHECK(id.eval(3.7) == 3.7);
        CHECK(id.inverse(3.7) == 3.7);
        CHECK(id.derivative(3.7) == 1.0);
        CHECK(id.increasing());
    }

    SECTION("square map inverts by square root") {
        const StaticNonlinearity sq = power_nonlinearity(2.0, 1.0);
        CHECK(sq.eval(3.0) == 9.0);
        CHECK(sq.inverse(9.0) == Approx(3.0).epsilon(1e-15));
        CHECK(sq.derivative(3.0) == Approx(6.0).epsilon(1e-14));
        CHECK(sq.increasing());
        CHECK_THROWS_AS(sq.eval(-1.0), Error);
        CHECK_THROWS_AS(sq.inverse(-4.0), Error);
    }

    SECTION("scaling multiplies through") {
        const StaticNonlinearity s = power_nonlinearity(1.5, 2.0);
        CHECK(s.eval(4.0) == Approx(16.0).epsilon(1e-14));
        CHECK(s.inverse(16.0) == Approx(4.0).epsilon(1e-14));
    }

    SECTION("exponent and scale validation") {
        CHECK_THROWS_AS(power_nonlinearity(0.0, 1.0), Error);
        CHECK_THROWS_AS(power_nonlinearity(-2.0, 1.0), Error);
        CHECK_THROWS_AS(power_nonlinearity(2.0, 0.0), Error);
    }
}

TEST_CASE("tabulated map") {
    const std::vector<double> xs{0.0, 1.0, 2.0, 4.0};
    const std::vector<double> ys{0.0, 1.0, 4.0, 16.0};
    const StaticNonlinearity tab = table_nonlinearity(xs, ys);

    SECTION("breakpoints and interpolation") {
        CHECK(tab.eval(0.0) == 0.0);
        CHECK(tab.eval(2.0) == 4.0);
        CHECK(tab.eval(1.5) == Approx(2.5).epsilon(1e-15));
        CHECK(tab.eval(3.0) == Approx(10.0).epsilon(1e-15));
        CHECK(tab.increasing());
    }

    SECTION("inverse reflects each segment") {
        CHECK(tab.inverse(2.5) == Approx(1.5).epsilon(1e-14));
        CHECK(tab.inverse(10.0) == Approx(3.0).epsilon(1e-14));
        for (double x : {0.2, 0.9, 1.1, 3.7})
            CHECK(tab.inverse(tab.eval(x)) == Approx(x).epsilon(1e-13));
    }

    SECTION("derivative is the segment slope") {
        CHECK(tab.derivative(0.5) == Approx(1.0).epsilon(1e-15));
        CHECK(tab.derivative(1.5) == Approx(3.0).epsilon(1e-15));
        CHECK(tab.derivative(3.0) == Approx(6.0).epsilon(1e-15));
    }

    SECTION("decreasing tables invert with swapped orientation") {
        const StaticNonlinearity dec = table_nonlinearity({0.0, 1.0, 2.0}, {10.0, 6.0, 1.0});
        CHECK_FALSE(dec.increasing());
        CHECK(dec.eval(0.5) == Approx(8.0).epsilon(1e-15));
        CHECK(dec.inverse(8.0) == Approx(0.5).epsilon(1e-14));
    }

    SECTION("construction rejects unusable tables") {
        CHECK_THROWS_AS(table_nonlinearity({0.0}, {1.0}), Error);
        CHECK_THROWS_AS(table_nonlinearity({0.0, 1.0}, {1.0}), Error);
        CHECK_THROWS_AS(table_nonlinearity({1.0, 0.0}, {0.0, 1.0}), Error);
        CHECK_THROWS_AS(table_nonlinearity({0.0, 1.0, 2.0}, {0.0, 2.0, 1.0}), Error);
        CHECK_THROWS_AS(table_nonlinearity({0.0, 1.0, 2.0}, {0.0, 0.0, 1.0}), Error);
    }

    SECTION("evaluation outside the table is rejected") {
        CHECK_THROWS_AS(tab.eval(-0.1), Error);
        CHECK_THROWS_AS(tab.eval(4.1), Error);
        CHECK_THROWS_AS(tab.inverse(17.0), Error);
    }
}

TEST_CASE("numeric inversion of a monotone map") {
    SECTION("identity and analytic inverses agree") {
        const StaticNonlinearity sq = power_nonlinearity(2.0, 1.0);
        const double got = invert_nonlinearity_numeric(sq, 9.0, 0.0, 10.0);
        CHECK(got == Approx(3.0).epsilon(1e-12));
    }

    SECTION("works on a decreasing map") {
        const StaticNonlinearity hill = hill_nonlinearity(oracle::kGamma, oracle::kC50);
        const double got = invert_nonlinearity_numeric(hill, 10.0, 0.0, 100.0);
        CHECK(got == Approx(oracle::kPhiInv10).epsilon(1e-12));
    }

    SECTION("targets outside the attained range raise unreachable_dose") {
        const StaticNonlinearity sq = power_nonlinearity(2.0, 1.0);
        try {
            invert_nonlinearity_numeric(sq, 200.0, 0.0, 10.0);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::unreachable_dose);
        }
    }
}

TEST_CASE("plant structure measured output") {
    const PlantLTI p = plant_from_nmb(NmbParams{.alpha = oracle::kAlpha});
    const Vec3 x{1.0, 2.0, 5.0};

    SECTION("bare structure reports the linear output") {
        const PlantStructure s{.linear = p};
        CHECK(s.measured_output(x) == 5.0);
    }

    SECTION("measurement map composes on the output side") {
        const StaticNonlinearity hill = hill_nonlinearity(oracle::kGamma, oracle::kC50);
        const PlantStructure s{.linear = p, .output_nl = hill};
        CHECK(s.measured_output(x) == Approx(hill.eval(5.0)).epsilon(1e-15));
    }

    SECTION("input map does not affect measurement") {
        const PlantStructure s{.linear = p, .input_nl = power_nonlinearity(2.0, 1.0)};
        CHECK(s.measured_output(x) == 5.0);
    }
}
