#pragma once

// Consolidated verification: every tableau hypothesis, simplifying
// assumption, conjugacy and stability identity, and the vanishing-word
// suite, evaluated for a range of stage counts.

#include "plrk/common.hpp"
#include "plrk/rstrings.hpp"
#include "plrk/symbols.hpp"
#include "plrk/tableau.hpp"

#include <algorithm>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace plrk {

struct VerifyOptions {
    std::vector<int> s_values{2, 3, 4, 5};
    double tol = 1e-12;
    int z_samples = 100;         // random points for the stability cross-check
    double z_radius = 10.0;
    double z_agree_tol = 1e-10;
    std::uint64_t seed = 0x5eed5eedULL;
    double vanish_tol = 1e-10;   // words within the vanishing bound
    double sharp_floor = 1e-6;   // some word at k = s-2 must exceed this
};

struct VerifyRow {
    int s = 0;
    ConditionReport report;
};

namespace detail {

inline void push(std::vector<VerifyRow>& rows, int s, ConditionReport rep) {
    rows.push_back(VerifyRow{s, std::move(rep)});
}

}  // namespace detail

inline std::vector<VerifyRow> run_verify(const VerifyOptions& opt = {}) {
    std::vector<VerifyRow> rows;
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> uni(-opt.z_radius, opt.z_radius);
    for (int s : opt.s_values) {
        const PartitionedTableau pt = lobatto_pair(s);
        using C = Condition;
        detail::push(rows, s, check_simplifying(pt, C::B, 2 * s - 2, opt.tol));
        detail::push(rows, s, check_simplifying(pt, C::C, s, opt.tol));
        detail::push(rows, s, check_simplifying(pt, C::D, s - 2, opt.tol));
        detail::push(rows, s, check_simplifying(pt, C::Bhat, 2 * s - 2, opt.tol));
        detail::push(rows, s, check_simplifying(pt, C::Chat, s - 2, opt.tol));
        detail::push(rows, s, check_simplifying(pt, C::Dhat, s, opt.tol));
        detail::push(rows, s, check_simplifying(pt, C::CChat, s, opt.tol));
        detail::push(rows, s, check_simplifying(pt, C::DDhat, s, opt.tol));
        detail::push(rows, s, check_simplifying(pt, C::ChatC, s - 2, opt.tol));
        detail::push(rows, s, check_simplifying(pt, C::DhatD, s - 2, opt.tol));
        detail::push(rows, s, check_first_stage_explicit(pt.first, opt.tol));
        detail::push(rows, s, check_trailing_block(pt.first));
        detail::push(rows, s, check_stiffly_accurate(pt.first, opt.tol));
        detail::push(rows, s, check_hat_trailing_column(pt.second, opt.tol));
        detail::push(rows, s, check_hat_leading_column(pt.second, opt.tol));
        detail::push(rows, s, check_compatibility(pt, opt.tol));
        detail::push(rows, s, check_weights_match(pt, opt.tol));
        detail::push(rows, s, check_conjugacy(pt, opt.tol));

        // R(inf) parity and agreement of the limit with a large-|z| evaluation.
        const double rinf = stability_at_infinity(pt.first);
        const double parity = (s % 2 == 0) ? -1.0 : 1.0;
        detail::push(rows, s, make_report("R(inf)=(-1)^(s-1)", 0, std::abs(rinf - parity), opt.tol));
        const Complex far = stability_function(pt.first, Complex(1e8, 0.0));
        detail::push(rows, s, make_report("R(inf) vs R(1e8)", 0, std::abs(far - rinf), 1e-6));

        // The two finite-z formulas on random points.
        double worst = 0.0;
        for (int k = 0; k < opt.z_samples; ++k) {
            const Complex z(uni(rng), uni(rng));
            const StabilityValues v = stability_formulas(pt.first, z);
            worst = std::max(worst, std::abs(v.general - v.reduced));
        }
        detail::push(rows, s,
                     make_report("stability formulas agree (" + std::to_string(opt.z_samples) +
                                     " random z)",
                                 0, worst, opt.z_agree_tol));

        if (s >= 3) {
            // Letter budget from the measured condition orders, not assumed:
            // min(r, q, p-r, p-q) - 1, which for this family equals s-3.
            const int p_ord = measured_condition_order(pt, Condition::B);
            const int q_ord = measured_condition_order(pt, Condition::C);
            const int r_ord = measured_condition_order(pt, Condition::D);
            const int budget =
                std::min({r_ord, q_ord, p_ord - r_ord, p_ord - q_ord}) - 1;
            detail::push(rows, s,
                         make_report("word budget = s-3", 0,
                                     std::abs(budget - (s - 3)), 0.0));
            const VanishingReport in_range = verify_vanishing(pt, budget);
            detail::push(rows, s,
                         make_report("words(k<=" + std::to_string(budget) + ")", budget,
                                     in_range.max_abs, opt.vanish_tol));
            // Sharpness: one letter past the budget some word is clearly nonzero.
            const VanishingReport probe = verify_vanishing(pt, budget + 1);
            double beyond = 0.0;
            for (const auto& wv : probe.words)
                if (wv.word.k() == budget + 1) beyond = std::max(beyond, std::abs(wv.value));
            detail::push(rows, s,
                         make_report("words sharp at k=" + std::to_string(budget + 1) + " (gap)",
                                     budget + 1, std::max(0.0, opt.sharp_floor - beyond), 0.0));
        }
    }
    return rows;
}

inline bool all_pass(const std::vector<VerifyRow>& rows) {
    for (const auto& r : rows)
        if (!r.report.pass) return false;
    return true;
}

inline void write_verify_csv(std::ostream& os, const std::vector<VerifyRow>& rows) {
    os << "s,condition,order,max_residual,tolerance,verdict\n";
    for (const auto& r : rows)
        os << r.s << "," << r.report.name << "," << r.report.order << ","
           << g17(r.report.max_residual) << "," << g17(r.report.tolerance) << ","
           << (r.report.pass ? "pass" : "fail") << "\n";
}

/// CSV of every word value: word,k,value,verdict. Boundary words (the
/// ACA- Ahat adjacency the reduction cannot clear) are listed with verdict
/// `boundary`; their values are observations, not claims.
inline void write_words_csv(std::ostream& os, const VanishingReport& rep) {
    os << "word,k,value,verdict\n";
    for (const auto& wv : rep.words)
        os << wv.word.str() << "," << wv.word.k() << "," << g17(wv.value) << ","
           << verdict_name(classify_word_value(wv.value)) << "\n";
    for (const auto& wv : rep.boundary)
        os << wv.word.str() << "," << wv.word.k() << "," << g17(wv.value) << ",boundary\n";
}

/// Adjacency list of a class derivation: `(3,0) -> (0,0,3,0) [left_append]`.
inline void write_derivation_edges(std::ostream& os, const std::vector<DerivationEdge>& edges) {
    std::vector<std::string> lines;
    for (const auto& e : edges)
        lines.push_back(e.from.str() + " -> " + e.to.str() + " [" + std::string(op_name(e.op)) +
                        "]");
    std::sort(lines.begin(), lines.end());
    for (const auto& l : lines) os << l << "\n";
}

}  // namespace plrk
