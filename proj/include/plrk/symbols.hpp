#pragma once

// Runge-Kutta symbol words: scalars of the form
//   e_s^T C^alpha A (prod of letters) * tail
// over the alphabet {A, Ahat, C, A-CA, ACA-}, with the two tails
// (Ahat_1 - Ahat A- A_1) and C A- A_1. For a compatible Lobatto pair these
// vanish for every word of up to s-3 letters.

#include "plrk/common.hpp"
#include "plrk/tableau.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace plrk {

enum class Letter { A, Ahat, C, AmCA, ACAm };
enum class Tail { conj, c_am_a1 };

inline std::string_view letter_name(Letter l) {
    switch (l) {
        case Letter::A: return "A";
        case Letter::Ahat: return "Ahat";
        case Letter::C: return "C";
        case Letter::AmCA: return "A-CA";
        case Letter::ACAm: return "ACA-";
    }
    return "?";
}

inline std::string_view tail_name(Tail t) {
    return t == Tail::conj ? "conj" : "CA-A1";
}

struct SymbolWord {
    int alpha = 0;
    std::vector<Letter> letters;
    Tail tail = Tail::conj;

    int k() const { return static_cast<int>(letters.size()); }

    /// The conjugacy tail cannot be preceded by ACA-.
    bool well_formed() const {
        if (alpha < 0) return false;
        if (tail == Tail::conj && !letters.empty() && letters.back() == Letter::ACAm) return false;
        return true;
    }

    std::string str() const {
        std::string out = "C^" + std::to_string(alpha) + ".A";
        for (Letter l : letters) out += "." + std::string(letter_name(l));
        out += "|";
        out += tail_name(tail);
        return out;
    }
};

/// Blocks shared by every word evaluation for one pair.
struct DerivedMatrices {
    int s = 0;
    Matrix A, Ahat, Aminus, C;
    Vector A1, Ahat1, b;

    static DerivedMatrices from(const PartitionedTableau& pt) {
        DerivedMatrices d;
        d.s = pt.s;
        d.A = pt.first.A;
        d.Ahat = pt.second.A;
        d.b = pt.first.b;
        const Matrix at = lower_right_block(pt.first);
        Eigen::FullPivLU<Matrix> lu(at);
        if (!lu.isInvertible())
            throw singular_matrix("DerivedMatrices: trailing block of A not invertible");
        d.Aminus = Matrix::Zero(pt.s, pt.s);
        d.Aminus.bottomRightCorner(pt.s - 1, pt.s - 1) = lu.inverse();
        d.C = Matrix(pt.first.c.asDiagonal());
        d.A1 = pt.first.A.col(0);
        d.Ahat1 = pt.second.A.col(0);
        return d;
    }

    Matrix letter_matrix(Letter l) const {
        switch (l) {
            case Letter::A: return A;
            case Letter::Ahat: return Ahat;
            case Letter::C: return C;
            case Letter::AmCA: return Aminus * C * A;
            case Letter::ACAm: return A * C * Aminus;
        }
        throw error("letter_matrix: bad letter");
    }

    Vector tail_vector(Tail t) const {
        if (t == Tail::conj) return Ahat1 - Ahat * (Aminus * A1);
        return C * (Aminus * A1);
    }
};

inline double eval_word(const DerivedMatrices& d, const SymbolWord& w) {
    if (!w.well_formed()) throw error("eval_word: malformed word " + w.str());
    RowVector row = RowVector::Zero(d.s);
    row(d.s - 1) = 1.0;
    for (int i = 0; i < w.alpha; ++i) row = row * d.C;
    row = row * d.A;
    for (Letter l : w.letters) row = row * d.letter_matrix(l);
    return row * d.tail_vector(w.tail);
}

inline double eval_word(const PartitionedTableau& pt, const SymbolWord& w) {
    return eval_word(DerivedMatrices::from(pt), w);
}

inline constexpr Letter kAlphabet[] = {Letter::A, Letter::Ahat, Letter::C, Letter::AmCA,
                                       Letter::ACAm};

/// All well-formed words with exactly k letters and the given alpha/tail.
inline std::vector<SymbolWord> enumerate_words(int k, Tail tail, int alpha) {
    std::vector<SymbolWord> out;
    std::vector<Letter> current;
    auto rec = [&](auto&& self, int remaining) -> void {
        if (remaining == 0) {
            SymbolWord w{alpha, current, tail};
            if (w.well_formed()) out.push_back(std::move(w));
            return;
        }
        for (Letter l : kAlphabet) {
            current.push_back(l);
            self(self, remaining - 1);
            current.pop_back();
        }
    };
    rec(rec, k);
    return out;
}

/// True when the word avoids the boundary adjacency that defeats the
/// reduction identities. Reducing ...ACA-... reaches b C A- = e_s^T - b,
/// whose first component carries a correction b_1 e_1^T; every letter and
/// the C A- A_1 tail annihilate e_1^T except Ahat, whose first row is
/// nonzero. Words with ACA- directly before Ahat therefore pick up exactly
/// b_1 e_1^T Ahat (tail) and do not vanish; the expansion the vanishing statement
/// covers never produces that adjacency.
inline bool reduction_admissible(const SymbolWord& w) {
    if (!w.well_formed()) return false;
    for (size_t i = 0; i + 1 < w.letters.size(); ++i)
        if (w.letters[i] == Letter::ACAm && w.letters[i + 1] == Letter::Ahat) return false;
    return true;
}

struct WordValue {
    SymbolWord word;
    double value = 0.0;
};

enum class WordVerdict { vanishing, indeterminate, nonzero };

/// Guard band: below 1e-10 counts as zero, above 1e-6 as genuinely nonzero,
/// anything between is suspicious.
inline WordVerdict classify_word_value(double v) {
    const double a = std::abs(v);
    if (a < 1e-10) return WordVerdict::vanishing;
    if (a <= 1e-6) return WordVerdict::indeterminate;
    return WordVerdict::nonzero;
}

inline std::string_view verdict_name(WordVerdict v) {
    switch (v) {
        case WordVerdict::vanishing: return "vanishing";
        case WordVerdict::indeterminate: return "indeterminate";
        case WordVerdict::nonzero: return "nonzero";
    }
    return "?";
}

struct VanishingReport {
    int s = 0;
    int k_max = 0;
    bool within_vanishing_bound = true;  // k_max <= s - 3
    std::vector<WordValue> words;      // reduction-admissible words
    std::vector<WordValue> boundary;   // ACA- before Ahat, recorded not asserted
    double max_abs = 0.0;              // over admissible words only
};

/// Evaluate every word with 0 <= k <= k_max letters, both tails, alpha in
/// {0,1}. Words with the ACA- Ahat adjacency are evaluated and recorded
/// separately; they carry the nonzero boundary term by construction.
/// Beyond the vanishing bound (k_max > s-3) values need not vanish; the
/// report says so instead of failing.
inline VanishingReport verify_vanishing(const PartitionedTableau& pt, int k_max) {
    if (pt.s < 3) throw error("verify_vanishing: needs at least 3 stages");
    if (k_max > 4) throw error("verify_vanishing: letter budget capped at 4");
    const DerivedMatrices d = DerivedMatrices::from(pt);
    VanishingReport rep;
    rep.s = pt.s;
    rep.k_max = k_max;
    rep.within_vanishing_bound = k_max <= pt.s - 3;
    for (int k = 0; k <= k_max; ++k)
        for (Tail tail : {Tail::conj, Tail::c_am_a1})
            for (int alpha : {0, 1})
                for (auto& w : enumerate_words(k, tail, alpha)) {
                    const double v = eval_word(d, w);
                    if (reduction_admissible(w)) {
                        rep.max_abs = std::max(rep.max_abs, std::abs(v));
                        rep.words.push_back(WordValue{std::move(w), v});
                    } else {
                        rep.boundary.push_back(WordValue{std::move(w), v});
                    }
                }
    return rep;
}

/// b C^{k-1} (Ahat_1 - Ahat A- A_1); vanishes for 1 <= k <= min(r, rhat).
inline double reduced_combo1(const PartitionedTableau& pt, int k) {
    if (k < 1) throw error("reduced_combo1: k must be >= 1");
    const DerivedMatrices d = DerivedMatrices::from(pt);
    RowVector row = d.b.transpose();
    for (int i = 0; i < k - 1; ++i) row = row * d.C;
    return row * d.tail_vector(Tail::conj);
}

/// b C^k A- A_1; vanishes for 1 <= k <= r.
inline double reduced_combo2(const PartitionedTableau& pt, int k) {
    if (k < 1) throw error("reduced_combo2: k must be >= 1");
    const DerivedMatrices d = DerivedMatrices::from(pt);
    RowVector row = d.b.transpose();
    for (int i = 0; i < k; ++i) row = row * d.C;
    return (row * d.Aminus) * d.A1;
}

/// Componentwise gap of b C^k A- = e_s^T - k b C^{k-1}. The first component
/// of the right side picks up an extra -b_1 at k = 1 (where c_1^0 = 1); the
/// identity is exact in components 2..s, and in all components for k >= 2.
inline RowVector d_multiplied_identity_gap(const PartitionedTableau& pt, int k) {
    const DerivedMatrices d = DerivedMatrices::from(pt);
    RowVector lhs = d.b.transpose();
    for (int i = 0; i < k; ++i) lhs = lhs * d.C;
    lhs = lhs * d.Aminus;
    RowVector rhs = RowVector::Zero(d.s);
    rhs(d.s - 1) = 1.0;
    RowVector bc = d.b.transpose();
    for (int i = 0; i < k - 1; ++i) bc = bc * d.C;
    rhs -= k * bc;
    return lhs - rhs;
}

}  // namespace plrk
