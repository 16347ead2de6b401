#include "plrk/rstrings.hpp"

#include <catch2/catch.hpp>

#include <random>
#include <set>

using namespace plrk;

namespace {

std::set<RString> as_set(const std::vector<RString>& v) { return {v.begin(), v.end()}; }

/// Every composition of `order` into `dim` nonnegative parts.
void compositions(int order, int dim, std::vector<int>& cur, std::vector<RString>& out) {
    if (dim == 1) {
        cur.push_back(order);
        out.emplace_back(cur);
        cur.pop_back();
        return;
    }
    for (int k = 0; k <= order; ++k) {
        cur.push_back(k);
        compositions(order - k, dim - 1, cur, out);
        cur.pop_back();
    }
}

std::vector<RString> all_irreducible(int max_order, int max_dim) {
    std::vector<RString> out;
    for (int d = 2; d <= max_dim; d += 2)
        for (int n = 1; n <= max_order; ++n) {
            std::vector<int> cur;
            std::vector<RString> raw;
            compositions(n, d, cur, raw);
            for (auto& g : raw)
                if (g.irreducible()) out.push_back(g);
        }
    return out;
}

}  // namespace

TEST_CASE("irreducibility under both parity conventions", "[rstrings]") {
    REQUIRE(RString({3, 0}).irreducible());
    REQUIRE(RString({0, 1, 2, 0}).irreducible());
    REQUIRE_FALSE(RString({2, 0, 0, 1}).irreducible());
    REQUIRE_FALSE(RString({1, 1, 0, 0, 1, 1}).irreducible(Parity::odd));
    // (0,0,1,1) passes the even-index rule but not the odd-index rule used by
    // the companion multi-index family.
    REQUIRE(RString({0, 0, 1, 1}).irreducible(Parity::even));
    REQUIRE_FALSE(RString({0, 0, 1, 1}).irreducible(Parity::odd));
    REQUIRE(RString({1, 1, 0, 0}).irreducible(Parity::even));
    REQUIRE_FALSE(RString({1, 1, 0, 0}).irreducible(Parity::odd));
}

TEST_CASE("operations reproduce the worked derivations", "[rstrings]") {
    const RString g30({3, 0});
    REQUIRE(apply(g30, StringOp::left_append) == RString({0, 0, 3, 0}));
    REQUIRE(apply(g30, StringOp::left_split, 1) == RString({1, 0, 2, 0}));
    REQUIRE(apply(g30, StringOp::right_split, 1) == RString({2, 0, 1, 0}));
    REQUIRE(apply(RString({0, 1, 1, 1}), StringOp::insertion, 3) ==
            RString({0, 1, 0, 0, 1, 1}));
    REQUIRE(apply(RString({0, 1, 1, 1}), StringOp::right_append) ==
            RString({0, 1, 1, 1, 0, 0}));
    REQUIRE(apply(RString({1, 2}), StringOp::capping) == RString({0, 1, 2, 0}));
    REQUIRE(apply(RString({0, 1, 3, 0}), StringOp::right_diffusion, 3) ==
            RString({0, 1, 2, 1}));
    REQUIRE(apply(RString({0, 2, 1, 0}), StringOp::left_diffusion, 2) ==
            RString({1, 1, 1, 0}));

    SECTION("side conditions are enforced and named") {
        REQUIRE_THROWS_AS(apply(RString({0, 3}), StringOp::left_append), inapplicable_operation);
        REQUIRE_THROWS_AS(apply(g30, StringOp::right_append), inapplicable_operation);
        REQUIRE_THROWS_AS(apply(RString({1, 0}), StringOp::left_split, 1),
                          inapplicable_operation);
        REQUIRE_THROWS_AS(apply(RString({0, 1, 1, 1}), StringOp::insertion, 2),
                          inapplicable_operation);
        REQUIRE_THROWS_AS(apply(RString({0, 3}), StringOp::capping), inapplicable_operation);
        REQUIRE_THROWS_AS(apply(RString({1, 1}), StringOp::left_diffusion, 2),
                          inapplicable_operation);
        try {
            apply(RString({1, 0}), StringOp::right_split, 1);
            FAIL("expected inapplicable_operation");
        } catch (const inapplicable_operation& e) {
            REQUIRE(std::string(e.what()).find("right_split") != std::string::npos);
        }
    }
}

TEST_CASE("operations preserve irreducibility, order and dimension rules", "[rstrings]") {
    const auto strings = all_irreducible(5, 8);
    REQUIRE(strings.size() > 500);
    for (const auto& g : strings) {
        for (StringOp op : {StringOp::left_append, StringOp::right_append, StringOp::capping}) {
            try {
                const RString r = apply(g, op);
                REQUIRE(r.irreducible());
                REQUIRE(r.order() == g.order());
                REQUIRE(r.dim() == g.dim() + 2);
            } catch (const inapplicable_operation&) {}
        }
        for (int i = 1; i <= g.dim(); ++i) {
            for (StringOp op : {StringOp::insertion, StringOp::left_split, StringOp::right_split}) {
                try {
                    const RString r = apply(g, op, i);
                    REQUIRE(r.irreducible());
                    REQUIRE(r.order() == g.order());
                    REQUIRE(r.dim() == g.dim() + 2);
                } catch (const inapplicable_operation&) {}
            }
            for (StringOp op : {StringOp::left_diffusion, StringOp::right_diffusion}) {
                try {
                    const RString r = apply(g, op, i);
                    REQUIRE(r.irreducible());
                    REQUIRE(r.order() == g.order());
                    REQUIRE(r.dim() == g.dim());
                } catch (const inapplicable_operation&) {}
            }
        }
    }
}

TEST_CASE("elementary string enumeration", "[rstrings]") {
    SECTION("counts are 2^n") {
        for (int n = 1; n <= 6; ++n)
            REQUIRE(enumerate_elementary(n).size() == (1u << n));
    }
    SECTION("order 1 has only the dimension-2 seeds") {
        REQUIRE(as_set(enumerate_elementary(1)) ==
                std::set<RString>{RString({0, 1}), RString({1, 0})});
    }
    SECTION("order 3 set matches the reference listing") {
        const std::set<RString> expect{
            RString({0, 3}),        RString({1, 2}),        RString({2, 1}),
            RString({3, 0}),        RString({0, 1, 1, 1}),  RString({0, 1, 2, 0}),
            RString({0, 2, 1, 0}),  RString({1, 1, 1, 0})};
        REQUIRE(as_set(enumerate_elementary(3)) == expect);
    }
    SECTION("order 4 set has 16 strings and contains the fourteen listed above the completion pair") {
        const auto got = as_set(enumerate_elementary(4));
        REQUIRE(got.size() == 16);
        const std::vector<RString> listed{
            RString({0, 4}),          RString({1, 3}),          RString({2, 2}),
            RString({3, 1}),          RString({4, 0}),          RString({0, 1, 3, 0}),
            RString({0, 2, 2, 0}),    RString({0, 3, 1, 0}),    RString({0, 1, 2, 1}),
            RString({0, 1, 1, 2}),    RString({1, 1, 1, 1}),    RString({1, 2, 1, 0}),
            RString({2, 1, 1, 0}),    RString({0, 1, 1, 1, 1, 0})};
        for (const auto& g : listed) {
            INFO(g.str());
            REQUIRE(got.count(g) == 1);
        }
        // The reversal-symmetric completion of the fourteen directly listed strings.
        REQUIRE(got.count(RString({0, 2, 1, 1})) == 1);
        REQUIRE(got.count(RString({1, 1, 2, 0})) == 1);
    }
    SECTION("elementary strings are never derivable from one another") {
        for (int n = 1; n <= 5; ++n)
            for (const auto& g : enumerate_elementary(n)) REQUIRE_FALSE(derivable_from_another(g));
    }
}

TEST_CASE("class closure matches the reference derivation diagrams", "[rstrings]") {
    SECTION("(3,0) up to dimension 8") {
        const std::set<RString> expect{RString({3, 0}),
                                       RString({0, 0, 3, 0}),
                                       RString({2, 0, 1, 0}),
                                       RString({1, 0, 2, 0}),
                                       RString({0, 0, 2, 0, 1, 0}),
                                       RString({0, 0, 1, 0, 2, 0}),
                                       RString({1, 0, 1, 0, 1, 0}),
                                       RString({0, 0, 1, 0, 1, 0, 1, 0})};
        REQUIRE(as_set(class_members(RString({3, 0}), 8)) == expect);
    }
    SECTION("(0,1,1,1) up to dimension 8") {
        const std::set<RString> expect{RString({0, 1, 1, 1}), RString({0, 1, 0, 0, 1, 1}),
                                       RString({0, 1, 1, 1, 0, 0}),
                                       RString({0, 1, 0, 0, 1, 1, 0, 0})};
        REQUIRE(as_set(class_members(RString({0, 1, 1, 1}), 8)) == expect);
    }
    SECTION("no room to grow") {
        const RString g({0, 1, 2, 0});
        const auto members = class_members(g, g.dim());
        REQUIRE(members.size() == 1);
        REQUIRE(members[0] == g);
    }
    SECTION("reference diagram edges appear in the derivation graph") {
        const auto edges30 = class_derivation(RString({3, 0}), 8);
        auto has_edge = [](const std::vector<DerivationEdge>& edges, const RString& a,
                           const RString& b) {
            for (const auto& e : edges)
                if (e.from == a && e.to == b) return true;
            return false;
        };
        const std::vector<std::pair<RString, RString>> diagram30{
            {RString({3, 0}), RString({1, 0, 2, 0})},
            {RString({3, 0}), RString({0, 0, 3, 0})},
            {RString({3, 0}), RString({2, 0, 1, 0})},
            {RString({1, 0, 2, 0}), RString({1, 0, 1, 0, 1, 0})},
            {RString({1, 0, 2, 0}), RString({0, 0, 1, 0, 2, 0})},
            {RString({0, 0, 3, 0}), RString({0, 0, 1, 0, 2, 0})},
            {RString({0, 0, 3, 0}), RString({0, 0, 2, 0, 1, 0})},
            {RString({2, 0, 1, 0}), RString({0, 0, 2, 0, 1, 0})},
            {RString({1, 0, 1, 0, 1, 0}), RString({0, 0, 1, 0, 1, 0, 1, 0})},
            {RString({0, 0, 1, 0, 2, 0}), RString({0, 0, 1, 0, 1, 0, 1, 0})},
            {RString({0, 0, 2, 0, 1, 0}), RString({0, 0, 1, 0, 1, 0, 1, 0})}};
        for (const auto& [a, b] : diagram30) {
            INFO(a.str() << " -> " << b.str());
            REQUIRE(has_edge(edges30, a, b));
        }
        const auto edges0111 = class_derivation(RString({0, 1, 1, 1}), 8);
        REQUIRE(has_edge(edges0111, RString({0, 1, 1, 1}), RString({0, 1, 0, 0, 1, 1})));
        REQUIRE(has_edge(edges0111, RString({0, 1, 1, 1}), RString({0, 1, 1, 1, 0, 0})));
        REQUIRE(has_edge(edges0111, RString({0, 1, 0, 0, 1, 1}),
                         RString({0, 1, 0, 0, 1, 1, 0, 0})));
    }
}

TEST_CASE("numerical class soundness and separation", "[rstrings]") {
    std::mt19937_64 rng(7);
    std::vector<RMatrixContext> contexts;
    for (int k = 0; k < 20; ++k) contexts.push_back(random_context(3, rng));

    SECTION("eval_R of the empty-exponent string is the inverse") {
        const Matrix want = contexts[0].atilde.inverse();
        REQUIRE((eval_R(RString({0, 0}), contexts[0]) - want).cwiseAbs().maxCoeff() < 1e-10);
    }
    SECTION("members of one class share the matrix value") {
        for (int n = 1; n <= 4; ++n)
            for (const auto& elem : enumerate_elementary(n))
                for (const auto& member : class_members(elem, 10))
                    for (const auto& ctx : contexts) {
                        const Matrix a = eval_R(elem, ctx);
                        const Matrix b = eval_R(member, ctx);
                        INFO(elem.str() << " vs " << member.str());
                        REQUIRE((a - b).cwiseAbs().maxCoeff() < 1e-9);
                    }
    }
    SECTION("distinct elementary strings separate numerically") {
        for (int n = 1; n <= 4; ++n) {
            const auto elems = enumerate_elementary(n);
            for (size_t i = 0; i < elems.size(); ++i)
                for (size_t j = i + 1; j < elems.size(); ++j) {
                    double best = 0.0;
                    for (const auto& ctx : contexts)
                        best = std::max(best, (eval_R(elems[i], ctx) - eval_R(elems[j], ctx))
                                                  .cwiseAbs()
                                                  .maxCoeff());
                    INFO(elems[i].str() << " vs " << elems[j].str());
                    REQUIRE(best > 1e-6);
                }
        }
    }
    SECTION("explicit class identity and non-identity") {
        const RMatrixContext& ctx = contexts[1];
        REQUIRE((eval_R(RString({3, 0}), ctx) - eval_R(RString({0, 0, 3, 0}), ctx))
                    .cwiseAbs()
                    .maxCoeff() < 1e-10);
        REQUIRE((eval_R(RString({1, 2}), ctx) - eval_R(RString({2, 1}), ctx))
                    .cwiseAbs()
                    .maxCoeff() > 1e-6);
    }
    SECTION("reducible or odd-dimension strings are rejected") {
        REQUIRE_THROWS_AS(eval_R(RString({1, 0, 0, 1}), contexts[0]), error);
        REQUIRE_THROWS_AS(eval_R(RString({1, 0, 1}), contexts[0]), error);
    }
}

TEST_CASE("trailing-zero survival filter", "[rstrings]") {
    REQUIRE(survives_right_multiplication(RString({3, 0})));
    REQUIRE_FALSE(survives_right_multiplication(RString({0, 3})));
    REQUIRE(survives_right_multiplication(RString({0, 1, 2, 0})));
    int survivors = 0;
    for (const auto& g : enumerate_elementary(4))
        if (survives_right_multiplication(g)) ++survivors;
    REQUIRE(survivors == 8);  // exactly half end in zero
}
