#include "plrk/tableau.hpp"
#include "plrk/convergence.hpp"

#include <catch2/catch.hpp>

#include <cmath>
#include <random>
#include <sstream>

using namespace plrk;

namespace {

// Independent oracle: Legendre P_n and P_n' evaluated by the three-term
// recurrence at a point (no polynomial-coefficient machinery shared with the
// library), interior Lobatto nodes located by bisection on P'_{s-1}.
std::pair<double, double> legendre_value_and_derivative(int n, double x) {
    double pm1 = 1.0, p = x;
    if (n == 0) return {1.0, 0.0};
    for (int k = 2; k <= n; ++k) {
        const double next = ((2.0 * k - 1.0) * x * p - (k - 1.0) * pm1) / k;
        pm1 = p;
        p = next;
    }
    const double dp = n * (pm1 - x * p) / (1.0 - x * x);
    return {p, dp};
}

std::vector<double> oracle_nodes(int s) {
    std::vector<double> nodes{0.0};
    auto dp = [&](double x) { return legendre_value_and_derivative(s - 1, x).second; };
    const int grid = 20000;
    double xp = -1.0 + 1e-10, fp = dp(xp);
    for (int k = 1; k < grid; ++k) {
        const double x = -1.0 + 2.0 * k / grid;
        const double f = dp(x);
        if ((fp < 0) != (f < 0)) {
            double lo = xp, hi = x, flo = fp;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (mid == lo || mid == hi) break;
                const double fm = dp(mid);
                if ((flo < 0) == (fm < 0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            nodes.push_back(0.5 * (1.0 + 0.5 * (lo + hi)));
        }
        xp = x;
        fp = f;
    }
    nodes.push_back(1.0);
    return nodes;
}

// Lobatto quadrature weight, closed form: b_i = 1 / (s (s-1) P_{s-1}(x_i)^2)
// on [0,1] with x_i = 2 c_i - 1.
double oracle_weight(int s, double c) {
    const double p = legendre_value_and_derivative(s - 1, 2.0 * c - 1.0).first;
    return 1.0 / (s * (s - 1.0) * p * p);
}

}  // namespace

TEST_CASE("lobatto nodes match the bisection oracle and closed forms", "[tableau]") {
    SECTION("s=2 endpoints only") {
        const Vector c = lobatto_nodes(2);
        REQUIRE(c(0) == 0.0);
        REQUIRE(c(1) == 1.0);
    }
    SECTION("s=3 midpoint") {
        const Vector c = lobatto_nodes(3);
        REQUIRE(c(1) == Approx(0.5).margin(1e-14));
    }
    SECTION("s=4 golden ratio nodes") {
        const Vector c = lobatto_nodes(4);
        REQUIRE(c(1) == Approx((5.0 - std::sqrt(5.0)) / 10.0).margin(1e-14));
        REQUIRE(c(2) == Approx((5.0 + std::sqrt(5.0)) / 10.0).margin(1e-14));
    }
    SECTION("independent root finder agrees for s=3,4,5") {
        for (int s : {3, 4, 5}) {
            const Vector c = lobatto_nodes(s);
            const auto oracle = oracle_nodes(s);
            REQUIRE(oracle.size() == static_cast<size_t>(s));
            for (int i = 0; i < s; ++i) REQUIRE(c(i) == Approx(oracle[i]).margin(1e-13));
        }
    }
    SECTION("unsupported stage counts are rejected") {
        REQUIRE_THROWS_AS(lobatto_nodes(1), unsupported_order);
        REQUIRE_THROWS_AS(lobatto_nodes(6), unsupported_order);
        REQUIRE_THROWS_AS(lobatto_iiia(7), unsupported_order);
    }
}

TEST_CASE("collocation construction reproduces the rational tables", "[tableau]") {
    SECTION("s=2 is the trapezoidal rule") {
        const ButcherTableau t = lobatto_iiia(2);
        Matrix expect(2, 2);
        expect << 0.0, 0.0, 0.5, 0.5;
        REQUIRE((t.A - expect).cwiseAbs().maxCoeff() < 1e-15);
        REQUIRE(t.b(0) == Approx(0.5).margin(1e-15));
        REQUIRE(t.b(1) == Approx(0.5).margin(1e-15));
    }
    SECTION("s=3 last row equals the quadrature weights") {
        const ButcherTableau t = lobatto_iiia(3);
        const double row3[] = {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0};
        for (int j = 0; j < 3; ++j) {
            REQUIRE(t.A(2, j) == Approx(row3[j]).margin(1e-14));
            REQUIRE(t.b(j) == Approx(row3[j]).margin(1e-14));
        }
    }
    SECTION("first row vanishes for every s") {
        for (int s = 2; s <= 5; ++s)
            REQUIRE(lobatto_iiia(s).A.row(0).cwiseAbs().maxCoeff() < 1e-14);
    }
    SECTION("weights match the closed-form quadrature oracle") {
        for (int s = 2; s <= 5; ++s) {
            const ButcherTableau t = lobatto_iiia(s);
            for (int i = 0; i < s; ++i)
                REQUIRE(t.b(i) == Approx(oracle_weight(s, t.c(i))).margin(1e-13));
        }
    }
}

TEST_CASE("conjugate tableau satisfies the structural hypotheses", "[tableau]") {
    SECTION("s=2 conjugate") {
        const ButcherTableau hat = lobatto_iiib(lobatto_iiia(2));
        Matrix expect(2, 2);
        expect << 0.5, 0.0, 0.5, 0.0;
        REQUIRE((hat.A - expect).cwiseAbs().maxCoeff() < 1e-15);
    }
    for (int s = 2; s <= 5; ++s) {
        const PartitionedTableau pt = lobatto_pair(s);
        INFO("s = " << s);
        REQUIRE(check_first_stage_explicit(pt.first).pass);
        REQUIRE(check_trailing_block(pt.first).pass);
        REQUIRE(std::isfinite(check_trailing_block(pt.first).max_residual));
        REQUIRE(check_stiffly_accurate(pt.first).pass);
        REQUIRE(check_hat_trailing_column(pt.second).pass);   // trailing column zero
        REQUIRE(check_hat_leading_column(pt.second).pass);   // leading column constant b_1
        REQUIRE(check_compatibility(pt).pass);
        REQUIRE(check_weights_match(pt).pass);
        REQUIRE(check_conjugacy(pt).max_residual < 1e-12);
    }
    SECTION("a method is not conjugate to itself") {
        const ButcherTableau a2 = lobatto_iiia(2);
        REQUIRE(check_conjugacy(PartitionedTableau{a2, a2, 2}).max_residual > 0.1);
        for (int s = 3; s <= 5; ++s) {
            const ButcherTableau a = lobatto_iiia(s);
            REQUIRE(check_conjugacy(PartitionedTableau{a, a, s}).max_residual > 1e-3);
        }
    }
    SECTION("conjugation requires nonzero weights") {
        ButcherTableau t = lobatto_iiia(2);
        t.b(0) = 0.0;
        REQUIRE_THROWS_AS(lobatto_iiib(t), error);
    }
    SECTION("hat row sums equal the nodes only from three stages up") {
        for (int s : {3, 4, 5}) {
            const PartitionedTableau pt = lobatto_pair(s);
            REQUIRE((pt.second.A.rowwise().sum() - pt.second.c).cwiseAbs().maxCoeff() < 1e-13);
        }
        const PartitionedTableau p2 = lobatto_pair(2);
        REQUIRE((p2.second.A.rowwise().sum() - p2.second.c).cwiseAbs().maxCoeff() > 0.4);
    }
}

TEST_CASE("simplifying assumptions hold at the orders of the family", "[tableau]") {
    for (int s = 2; s <= 5; ++s) {
        const PartitionedTableau pt = lobatto_pair(s);
        INFO("s = " << s);
        REQUIRE(check_simplifying(pt, Condition::B, 2 * s - 2).pass);
        REQUIRE(check_simplifying(pt, Condition::C, s).pass);
        REQUIRE(check_simplifying(pt, Condition::D, s - 2).pass);
        REQUIRE(check_simplifying(pt, Condition::Bhat, 2 * s - 2).pass);
        REQUIRE(check_simplifying(pt, Condition::Chat, s - 2).pass);
        REQUIRE(check_simplifying(pt, Condition::Dhat, s).pass);
        REQUIRE(check_simplifying(pt, Condition::CChat, s).pass);
        REQUIRE(check_simplifying(pt, Condition::DDhat, s).pass);
        REQUIRE(check_simplifying(pt, Condition::ChatC, s - 2).pass);
        REQUIRE(check_simplifying(pt, Condition::DhatD, s - 2).pass);
    }
    SECTION("the orders are maximal") {
        for (int s = 2; s <= 5; ++s) {
            const PartitionedTableau pt = lobatto_pair(s);
            REQUIRE(measured_condition_order(pt, Condition::B) == 2 * s - 2);
            REQUIRE(measured_condition_order(pt, Condition::C) == s);
            REQUIRE(measured_condition_order(pt, Condition::D) == s - 2);
        }
    }
    SECTION("conjugacy transfers orders between the methods") {
        for (int s = 2; s <= 5; ++s) {
            const PartitionedTableau pt = lobatto_pair(s);
            REQUIRE(measured_condition_order(pt, Condition::Bhat) ==
                    measured_condition_order(pt, Condition::B));
            REQUIRE(measured_condition_order(pt, Condition::Dhat) ==
                    measured_condition_order(pt, Condition::C));
            REQUIRE(measured_condition_order(pt, Condition::Chat) ==
                    measured_condition_order(pt, Condition::D));
        }
    }
    SECTION("an injected fault is caught and named") {
        PartitionedTableau pt = lobatto_pair(3);
        pt.first.A(1, 1) += 1e-3;
        const ConditionReport rep = check_simplifying(pt, Condition::C, 3);
        REQUIRE_FALSE(rep.pass);
        REQUIRE(rep.name == "C(3)");
        REQUIRE(rep.max_residual > 1e-4);
    }
}

TEST_CASE("stability function and its limit", "[tableau]") {
    const ButcherTableau trap = lobatto_iiia(2);
    SECTION("R(0) = 1") {
        for (int s = 2; s <= 5; ++s)
            REQUIRE(std::abs(stability_function(lobatto_iiia(s), 0.0) - 1.0) < 1e-14);
    }
    SECTION("trapezoidal closed form") {
        for (Complex z : {Complex(-1.0, 0.0), Complex(0.3, 1.1), Complex(-4.0, 2.0)}) {
            const Complex expect = (1.0 + 0.5 * z) / (1.0 - 0.5 * z);
            REQUIRE(std::abs(stability_function(trap, z) - expect) < 1e-12);
        }
        REQUIRE(std::abs(stability_function(trap, Complex(-1.0, 0.0)) - Complex(1.0 / 3.0, 0.0)) <
                1e-14);
    }
    SECTION("pole is reported with the offending z") {
        REQUIRE_THROWS_AS(stability_function(trap, Complex(2.0, 0.0)), singular_matrix);
    }
    SECTION("both formulas agree on random points") {
        std::mt19937_64 rng(42);
        std::uniform_real_distribution<double> u(-10.0, 10.0);
        for (int s = 2; s <= 5; ++s) {
            const ButcherTableau t = lobatto_iiia(s);
            for (int k = 0; k < 100; ++k) {
                const Complex z(u(rng), u(rng));
                const StabilityValues v = stability_formulas(t, z);
                REQUIRE(v.reduced_valid);
                REQUIRE(std::abs(v.general - v.reduced) < 1e-10);
            }
        }
    }
    SECTION("limit formula matches parity and the large-|z| oracle") {
        for (int s = 2; s <= 5; ++s) {
            const ButcherTableau t = lobatto_iiia(s);
            const double rinf = stability_at_infinity(t);
            REQUIRE(std::abs(rinf - (s % 2 == 0 ? -1.0 : 1.0)) < 1e-12);
            const Complex far = stability_function(t, Complex(1e8, 0.0));
            REQUIRE(std::abs(far - rinf) < 1e-6);
        }
    }
    SECTION("limit requires the structural hypotheses") {
        ButcherTableau t = lobatto_iiia(3);
        t.A(0, 0) = 0.25;  // break the explicit first stage
        REQUIRE_THROWS_AS(stability_at_infinity(t), error);
    }
}

TEST_CASE("tableau text round-trips bit-identically", "[tableau]") {
    for (int s = 2; s <= 5; ++s) {
        const ButcherTableau t = lobatto_iiia(s);
        std::ostringstream first;
        write_tableau(first, "lobatto_iiia", t);
        std::istringstream in(first.str());
        const NamedTableau back = read_tableau(in);
        REQUIRE(back.name == "lobatto_iiia");
        REQUIRE(back.tableau.s == s);
        REQUIRE(back.tableau.A == t.A);  // exact, 17 significant digits round-trip
        REQUIRE(back.tableau.b == t.b);
        REQUIRE(back.tableau.c == t.c);
        std::ostringstream second;
        write_tableau(second, back.name, back.tableau);
        REQUIRE(first.str() == second.str());
    }
    SECTION("malformed input is rejected") {
        std::istringstream bad("no header here\n");
        REQUIRE_THROWS_AS(read_tableau(bad), io_error);
    }
}
