#ifndef PSTIRLING_LIMITS_HPP
#define PSTIRLING_LIMITS_HPP

// Large-index behavior of P_{2^e+D}: the odd-part congruence to the
// all-j sum, the repeating-argument convergence experiments, and the
// reference table of stabilized expansions.

#include <pstirling/parallel.hpp>
#include <pstirling/report.hpp>
#include <pstirling/stirling.hpp>

#include <optional>
#include <vector>

namespace pstirling {

// P_{2^e+D}(x) vs (1/U(2^e!))(1/D!) sum_j C(D,j) j^x
// modulo 2^{e - max(lg(x-D)+1, lg(D)-1)}; absent terms drop out of the
// max, and with both absent (D = 0, x = 0) the two sides are equal
// exactly (compared here to 64 bits).
struct DelthmResult {
    bool pass = false;
    long required = 0;   // modulus exponent (64 for the exact case)
    long achieved = 0;   // nu of the difference (clamped at working prec)
};

inline DelthmResult check_delthm(unsigned e, unsigned long delta, unsigned long x) {
    if (delta >= (1ul << e)) throw std::invalid_argument("check_delthm: need delta < 2^e");
    std::optional<long> t1, t2;
    if (x > delta) t1 = lg(x - delta) + 1;
    if (delta >= 1) t2 = lg(delta) - 1;
    long required, prec;
    if (!t1 && !t2) {
        required = 64;  // exact equality of the two rationals; 64 bits stands in
        prec = 64;
    } else {
        long mx = std::max(t1.value_or(std::numeric_limits<long>::min()),
                           t2.value_or(std::numeric_limits<long>::min()));
        required = static_cast<long>(e) - mx;
        if (required < 1) return {true, required, 0};
        prec = required + 8;
    }
    unsigned long n = (1ul << e) + delta;
    TwoAdic lhs = eval_P(n, BigInt(x), prec);

    BigInt total = 0, c;
    for (unsigned long j = 0; j <= delta; ++j) {
        mpz_bin_uiui(c.get_mpz_t(), delta, j);
        BigInt p;
        if (j == 0)
            p = (x == 0) ? 1 : 0;
        else
            mpz_ui_pow_ui(p.get_mpz_t(), j, x);
        total += c * p;
    }
    BigInt f;
    mpz_fac_ui(f.get_mpz_t(), delta);
    long vD = nu_factorial(delta);
    TwoAdic rhs(0, prec);
    if (total != 0) {
        long sv = nu(total);
        if (sv < vD) throw std::logic_error("check_delthm: sum valuation below nu(delta!)");
        BigInt unit = odd_part(total) * inv_mod_pow2(odd_part(f), prec);
        unit = unit * inv_mod_pow2(u_factorial_pow2(e, prec).residue, prec);
        rhs = TwoAdic(unit << (sv - vD), prec);
    }
    Valuation dv = valuation_of(lhs - rhs);
    long achieved = dv.lower_bound();
    return {achieved >= required, required, achieved};
}

// Grid driver sharing the P-evaluations across consecutive x: one
// progression per (e, delta) instead of one evaluation per point.
inline Report check_delthm_grid(unsigned e_max, unsigned long delta_max, unsigned long x_max,
                                unsigned e_min = 1) {
    Report rep;
    std::vector<std::pair<unsigned, unsigned long>> cells;
    for (unsigned e = e_min; e <= e_max; ++e)
        for (unsigned long delta = 0; delta < std::min<unsigned long>(1ul << e, delta_max + 1);
             ++delta)
            cells.push_back({e, delta});
    std::vector<Report> parts(cells.size());
    parallel_for(cells.size(), [&](std::size_t idx) {
        auto [e, delta] = cells[idx];
        bool ok = true;
        std::string detail_s;
        long worst_margin = std::numeric_limits<long>::max();
        long prec = static_cast<long>(e) + 8;
        unsigned long n = (1ul << e) + delta;
        auto lhs = eval_P_progression(n, 0, 1, x_max + 1, prec);
        BigInt f;
        mpz_fac_ui(f.get_mpz_t(), delta);
        long vD = nu_factorial(delta);
        BigInt inv_uf = inv_mod_pow2(odd_part(f), prec);
        BigInt inv_ue = inv_mod_pow2(u_factorial_pow2(e, prec).residue, prec);
        for (unsigned long x = 0; x <= x_max; ++x) {
            std::optional<long> t1, t2;
            if (x > delta) t1 = lg(x - delta) + 1;
            if (delta >= 1) t2 = lg(delta) - 1;
            if (!t1 && !t2) {
                DelthmResult r = check_delthm(e, delta, x);  // exact-equality case
                if (!r.pass) ok = false;
                continue;
            }
            constexpr long kAbsent = std::numeric_limits<long>::min() / 2;
            long required =
                static_cast<long>(e) - std::max(t1.value_or(kAbsent), t2.value_or(kAbsent));
            if (required < 1) continue;
            BigInt total = 0, c;
            for (unsigned long j = 0; j <= delta; ++j) {
                mpz_bin_uiui(c.get_mpz_t(), delta, j);
                BigInt p;
                if (j == 0)
                    p = (x == 0) ? 1 : 0;
                else
                    mpz_ui_pow_ui(p.get_mpz_t(), j, x);
                total += c * p;
            }
            TwoAdic rhs(0, prec);
            if (total != 0) {
                long sv = nu(total);
                BigInt unit = odd_part(total) * inv_uf % (BigInt(1) << prec) * inv_ue;
                rhs = TwoAdic(unit << (sv - vD), prec);
            }
            long achieved = valuation_of(lhs[x] - rhs).lower_bound();
            if (achieved < required) {
                ok = false;
                detail_s = "delta=" + std::to_string(delta) + " x=" + std::to_string(x) +
                           " achieved " + std::to_string(achieved) + " < " +
                           std::to_string(required);
            }
            worst_margin = std::min(worst_margin, achieved - required);
        }
        parts[idx].add("delthm",
                       "e=" + std::to_string(e) + " delta=" + std::to_string(delta), ok,
                       ok ? "worst margin " + std::to_string(worst_margin) : detail_s);
    });
    for (auto& p : parts) rep.merge(p);
    return rep;
}

// ---- repeating binary arguments ----

// A 2-adic argument with an eventually periodic expansion: free bits
// below i0, then a d-periodic block pattern from bit i0 upward.
struct RepeatingArgument {
    unsigned i0 = 0;
    unsigned d = 2;
    BigInt prefix = 0;             // bits below i0
    std::vector<int> block;        // d bits, block[0] = bit i0
    unsigned total_bits = 0;       // truncation length (bits 0..total_bits-1)

    BigInt materialize() const {
        BigInt x = mod_pow2(prefix, i0);
        for (unsigned i = i0; i < total_bits; ++i)
            if (block[(i - i0) % d]) mpz_setbit(x.get_mpz_t(), i);
        return x;
    }
    // number of repeating bits: lg(x)+1 - (i0+d)
    long repeating_bits() const {
        BigInt x = materialize();
        if (x == 0) return -static_cast<long>(i0 + d);
        return lg(x) + 1 - static_cast<long>(i0 + d);
    }
};

struct SpecconjResult {
    bool precondition_ok = false;
    bool pass = false;
    long required = 0;
    long achieved = 0;
    long repeating = 0;
    std::string note;
};

// nu(P_{2^{e+d}+1}(x+1) - P_{2^e+1}(x+1)) >= e - i0, demanded only when
// bit i0 of x is 0, the block repeats through the truncation, and the
// repetition count R(x) >= 2(e-i0)-1.
inline SpecconjResult check_specconj(const RepeatingArgument& arg, unsigned e, long out_slack = 8) {
    SpecconjResult res;
    if (arg.block.empty() || arg.block.size() != arg.d) {
        res.note = "block size must equal d";
        return res;
    }
    if (arg.block[0] != 0) {
        res.note = "bit i0 must be 0";
        return res;
    }
    BigInt x = arg.materialize();
    res.repeating = arg.repeating_bits();
    long need_R = 2 * (static_cast<long>(e) - static_cast<long>(arg.i0)) - 1;
    if (res.repeating < need_R) {
        res.note = "repetition count " + std::to_string(res.repeating) + " below " +
                   std::to_string(need_R);
        return res;
    }
    res.precondition_ok = true;
    res.required = static_cast<long>(e) - static_cast<long>(arg.i0);
    long prec = res.required + out_slack;
    unsigned long n_hi = (1ul << (e + arg.d)) + 1;
    unsigned long n_lo = (1ul << e) + 1;
    TwoAdic a = eval_P(n_hi, x + 1, prec);
    TwoAdic b = eval_P(n_lo, x + 1, prec);
    res.achieved = valuation_of(a - b).lower_bound();
    res.pass = res.achieved >= res.required;
    return res;
}

// One grid cell, all residues at once: the conforming arguments differ
// only in their low bits, so the two huge-index evaluations run as one
// batch with the shared high part of the exponent raised once per term.
struct SpecconjCell {
    std::vector<unsigned long> residues;
    std::vector<SpecconjResult> results;
    bool all_pass = true;
    long worst_margin = std::numeric_limits<long>::max();
};

inline SpecconjCell check_specconj_cell(unsigned i0, unsigned d, unsigned e,
                                        const std::vector<unsigned long>& residues,
                                        long out_slack = 8) {
    SpecconjCell cell;
    cell.residues = residues;
    long required = static_cast<long>(e) - static_cast<long>(i0);
    long prec = required + out_slack;
    std::vector<BigInt> points;
    std::vector<SpecconjResult> results(residues.size());
    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < residues.size(); ++i) {
        RepeatingArgument a;  // same construction as make_repeating
        a.i0 = i0;
        a.d = d;
        a.prefix = mod_pow2(BigInt(residues[i]), i0);
        a.block.assign(d, 1);
        a.block[0] = 0;
        long R = std::max<long>(2 * required - 1, d);
        a.total_bits = i0 + d + static_cast<unsigned>(R);
        while (a.block[(a.total_bits - 1 - i0) % d] == 0) ++a.total_bits;
        results[i].repeating = a.repeating_bits();
        results[i].required = required;
        if (results[i].repeating < 2 * required - 1) {
            results[i].note = "repetition count below requirement";
            continue;
        }
        results[i].precondition_ok = true;
        points.push_back(a.materialize() + 1);
        live.push_back(i);
    }
    auto hi = eval_P_batch((1ul << (e + d)) + 1, points, prec);
    auto lo = eval_P_batch((1ul << e) + 1, points, prec);
    for (std::size_t t = 0; t < live.size(); ++t) {
        SpecconjResult& r = results[live[t]];
        r.achieved = valuation_of(hi[t] - lo[t]).lower_bound();
        r.pass = r.achieved >= r.required;
        if (!r.pass) cell.all_pass = false;
        cell.worst_margin = std::min(cell.worst_margin, r.achieved - r.required);
    }
    cell.results = std::move(results);
    return cell;
}

// Canonical conforming argument: low bits r (bit i0 forced 0), block
// 0 1 1 ... 1, repeated until R(x) >= max(2(e-i0)-1, d) with the top bit 1.
inline RepeatingArgument make_repeating(unsigned i0, unsigned d, unsigned long r, unsigned e) {
    RepeatingArgument a;
    a.i0 = i0;
    a.d = d;
    a.prefix = mod_pow2(BigInt(r), i0);
    a.block.assign(d, 1);
    a.block[0] = 0;
    long R = std::max<long>(2 * (static_cast<long>(e) - static_cast<long>(i0)) - 1, d);
    a.total_bits = i0 + d + static_cast<unsigned>(R);
    // top bit must be 1 for lg to see the full length
    while (a.block[(a.total_bits - 1 - i0) % d] == 0) ++a.total_bits;
    return a;
}

// Convergence experiment: evaluates P_{2^{e0+dj}+1} at one eventually
// periodic argument and reports the valuations of successive differences.
struct DconjReport {
    std::vector<long> diff_nu;  // nu(Q_{j+1} - Q_j)
    bool monotone = true;
    long truncation_bits = 0;
};

inline DconjReport check_dconj(const RepeatingArgument& base, unsigned e0, unsigned j_max,
                               long prec = 24) {
    DconjReport rep;
    unsigned top_e = e0 + base.d * j_max;
    if (top_e > 16)
        throw std::invalid_argument(
            "check_dconj: top index exponent " + std::to_string(top_e) +
            " exceeds 16; the evaluation cost grows with 2^(e0 + d j_max)");
    RepeatingArgument arg = base;
    arg.total_bits = std::max<unsigned>(
        arg.total_bits, static_cast<unsigned>(2 * (top_e + base.d) - base.i0 + 8));
    rep.truncation_bits = arg.total_bits;
    BigInt x = arg.materialize();
    std::vector<TwoAdic> q;
    for (unsigned j = 0; j <= j_max; ++j)
        q.push_back(eval_P((1ul << (e0 + base.d * j)) + 1, x, prec));
    for (unsigned j = 0; j + 1 <= j_max; ++j) {
        long v = valuation_of(q[j + 1] - q[j]).lower_bound();
        if (!rep.diff_nu.empty() && v < rep.diff_nu.back()) rep.monotone = false;
        rep.diff_nu.push_back(v);
    }
    return rep;
}

// ---- stabilized-expansion table ----

struct LimitTableRow {
    unsigned e = 0;
    unsigned n0 = 0;            // first truncation index with a stable window
    std::string bits;           // backwards binary, `bits` wide
    std::optional<long> diff_windowed;  // min(nu, window) against e-3, when e-3 in range
    std::optional<long> diff_true;      // full nu of the same difference
};

inline BigInt block3_argument(unsigned nn) {
    BigInt z = 0;
    for (unsigned i = 0; i <= nn; ++i) z += BigInt(3) << (3 * i);
    return z;
}

// Rows of stabilized backwards-binary expansions of P_{2^e+1} at the
// period-3 arguments z_n = 3 sum 2^{3i}: the displayed string is the
// common value for all n past the row's threshold; the difference
// column compares with the e-3 row at the same argument, both as the
// window-limited value and as the true valuation.
inline std::vector<LimitTableRow> limit_table(const std::vector<std::pair<unsigned, unsigned>>& rows,
                                              long bits) {
    long prec = bits + 8;
    std::vector<LimitTableRow> out(rows.size());
    parallel_for(rows.size(), [&](std::size_t i) {
        auto [e, n0_hint] = rows[i];
        unsigned long n = (1ul << e) + 1;
        unsigned nn = n0_hint;
        TwoAdic cur = eval_P(n, block3_argument(nn), prec);
        for (;;) {
            TwoAdic next = eval_P(n, block3_argument(nn + 1), prec);
            if (backwards_binary(cur, bits) == backwards_binary(next, bits)) break;
            cur = next;
            ++nn;
            if (nn > n0_hint + 4) break;  // stability must appear quickly
        }
        LimitTableRow row;
        row.e = e;
        row.n0 = nn;
        row.bits = backwards_binary(cur, bits);
        if (e >= 3 && (1u << (e - 3)) >= 2) {
            bool have_lower = false;
            for (auto& [ee, hh] : rows)
                if (ee + 3 == e) have_lower = true;
            if (have_lower) {
                TwoAdic lower = eval_P((1ul << (e - 3)) + 1, block3_argument(nn), prec);
                Valuation dv = valuation_of(cur - lower);
                row.diff_true = dv.lower_bound();
                row.diff_windowed = std::min<long>(dv.lower_bound(), bits);
            }
        }
        out[i] = row;
    });
    return out;
}

}  // namespace pstirling

#endif
