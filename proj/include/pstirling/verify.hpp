#ifndef PSTIRLING_VERIFY_HPP
#define PSTIRLING_VERIFY_HPP

// Mechanical checks of the finite statements behind the zero structure:
// difference-term enumeration with a provable cutoff, the product-family
// theorems and their claims, the elementary identity suite, and the
// global valuation formula over an atlas.

#include <pstirling/report.hpp>
#include <pstirling/stirling.hpp>
#include <pstirling/twoadic.hpp>
#include <pstirling/zeros.hpp>

#include <json.hpp>

#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <utility>

namespace pstirling {

struct TermKey {
    long j = 1;  // j >= 1
    long k = 0;  // k >= 0
    friend bool operator<(const TermKey& a, const TermKey& b) {
        return a.j != b.j ? a.j < b.j : a.k < b.k;
    }
    friend bool operator==(const TermKey& a, const TermKey& b) {
        return a.j == b.j && a.k == b.k;
    }
};

using TermSet = std::set<TermKey>;

inline std::string term_set_str(const TermSet& s) {
    std::ostringstream os;
    os << "{";
    bool first = true;
    for (const auto& t : s) {
        if (!first) os << ",";
        os << "(" << t.j << "," << t.k << ")";
        first = false;
    }
    os << "}";
    return os.str();
}

// Valuation of one difference term
//   C(2^m x + p, k) * (1/2^d) C(2^{m+d}, j) * Phi_n(j+k)
// for a class of modulus 2^m. The middle factor contributes m - nu(j)
// for 1 <= j <= 2^{m+d}, independent of d.
inline Valuation term_nu(unsigned long n, long m, const BigInt& p, const BigInt& x, long d,
                         const TermKey& key) {
    if (key.j < 1 || key.j > (1l << (m + d))) throw std::invalid_argument("term_nu: j out of range");
    BigInt point = (x << m) + p;
    long vc = nu_binomial_poly(point, static_cast<unsigned long>(key.k));
    if (vc == kNuInfinity) return Valuation::infinity();
    Valuation vphi = phi_nu(n, static_cast<unsigned long>(key.j + key.k));
    if (!vphi.is_finite()) return Valuation::infinity();
    return Valuation::finite(vc + (m - nu(BigInt(key.j))) + vphi.value());
}

// Smallest J >= [n/2] such that every term with j+k > J has valuation
// strictly above c: nu(term) >= (m - lg(j)) + (j+k) - [n/2] there.
inline long term_cutoff(unsigned long n, long m, long c) {
    long half = static_cast<long>(n / 2);
    long J = half;
    while (m - lg(static_cast<unsigned long>(J + 1)) + (J + 1) - half <= c) ++J;
    return J;
}

struct MinTerms {
    bool any_finite = false;
    long min_nu = 0;
    TermSet argmin;
    long cutoff = 0;
    // all terms with valuation <= collect_up_to, when requested
    std::map<long, TermSet> levels;
};

// Minimal set of difference terms over j+k <= cutoff; the cutoff makes
// the result exact whenever the reported minimum is <= c (terms beyond
// it are strictly above c). collect_up_to >= 0 also gathers every level
// up to that bound.
inline MinTerms enumerate_min_terms(unsigned long n, long m, const BigInt& p, const BigInt& x,
                                    long d, long c, long collect_up_to = -1) {
    MinTerms out;
    long J = term_cutoff(n, m, c);
    out.cutoff = J;
    long jcap = std::min<long>(J, (m + d < 62) ? (1l << (m + d)) : J);
    BigInt point = (x << m) + p;
    // valuations of C(point, k) for k = 0..J, incrementally
    std::vector<long> vc(static_cast<std::size_t>(J) + 1, 0);
    {
        long acc = 0;
        bool dead = false;
        for (long k = 1; k <= J; ++k) {
            if (!dead) {
                BigInt f = point - (k - 1);
                if (f == 0)
                    dead = true;
                else
                    acc += nu(f) - nu(BigInt(k));
            }
            vc[static_cast<std::size_t>(k)] = dead ? kNuInfinity : acc;
        }
    }
    for (long j = 1; j <= jcap; ++j) {
        long vj = m - nu(BigInt(j));
        for (long k = 0; k + j <= J; ++k) {
            if (vc[static_cast<std::size_t>(k)] == kNuInfinity) continue;
            Valuation vphi = phi_nu(n, static_cast<unsigned long>(j + k));
            if (!vphi.is_finite()) continue;
            long v = vc[static_cast<std::size_t>(k)] + vj + vphi.value();
            if (!out.any_finite || v < out.min_nu) {
                out.any_finite = true;
                out.min_nu = v;
                out.argmin.clear();
                out.argmin.insert({j, k});
            } else if (v == out.min_nu) {
                out.argmin.insert({j, k});
            }
            if (collect_up_to >= 0 && v <= collect_up_to) out.levels[v].insert({j, k});
        }
    }
    return out;
}

// ---- the 2^e + Delta family (1 <= Delta <= 4) ----

inline long theorem_four_c(unsigned e, unsigned delta, const BigInt& p) {
    bool special = (delta == 3 && mpz_even_p(p.get_mpz_t())) ||
                   (delta == 4 && mpz_odd_p(p.get_mpz_t()));
    if (!special) return 0;
    return e == 2 ? 2 : 1;
}

struct TheoremFourOptions {
    long d_max = 6;
    long cap = 4096;
    std::vector<BigInt> extra_x = {BigInt(1) << 20};  // stability spot-checks
};

namespace detail {

// the tabulated per-term lower bound; for delta = 4 and odd p the two
// minimal terms sit at 0 and their sum carries the extra factor of 2
inline long table_bound(unsigned delta, const BigInt& p) {
    return (delta == 3 && mpz_even_p(p.get_mpz_t())) ? 1 : 0;
}

inline TermSet table_equality_set(unsigned e, unsigned delta, const BigInt& p) {
    long big = 1l << (e - 1);
    if (delta == 1 || delta == 2) return {{big, 0}};
    if (delta == 3) {
        if (mpz_odd_p(p.get_mpz_t())) return {{big, 1}};
        if (mod_pow2(p, 2) == 0) return {{big, 0}};
        return {{big, 0}, {big, 1}, {big, 2}};
    }
    if (mpz_even_p(p.get_mpz_t())) return {{big, 0}};
    return {{big, 0}, {big, 1}};
}

// Level-1 term set for Delta = 4, odd p, in the form the proof derives:
// at j = 2^{e-1} only k = 2 with p = 3 (4); at j = 2^{e-2} exactly when
// C(p,k) and C(2^{e-1}-3, 2^{e-2}+k-4) are both odd.
inline TermSet claim1_expected(unsigned e, const BigInt& p, long J) {
    TermSet want;
    long jh = 1l << (e - 1), jq = 1l << (e - 2);
    if (mod_pow2(p, 2) == 3 && jh + 2 <= J) want.insert({jh, 2});
    for (long k = 0; jq + k <= J; ++k) {
        if (nu_binomial_poly(p, static_cast<unsigned long>(k)) != 0) continue;
        long top = (1l << (e - 1)) - 3;
        long bot = jq + k - 4;
        if (bot < 0 || bot > top) continue;
        if (nu_binomial(BigInt(top), BigInt(bot)) == 0) want.insert({jq, k});
    }
    return want;
}

}  // namespace detail

// Verifies, for n = 2^e + Delta: the difference-quotient valuation law
// (for all p, d <= d_max, x over a full residue period), the equality
// sets of the term table (e >= 3), and the two auxiliary claims for
// Delta = 4 with odd p. e = 2 gets the direct small-case term check.
inline Report verify_theorem_four(unsigned e, unsigned delta,
                                  const TheoremFourOptions& opt = {}) {
    Report rep;
    if (e < 2 || delta < 1 || delta > 4) {
        rep.add("four", "e=" + std::to_string(e), false, "hypotheses need e >= 2, 1 <= delta <= 4");
        return rep;
    }
    unsigned long n = (1ul << e) + delta;
    long m = e - 1;
    long xs = 1l << m;

    // base point and difference-quotient law
    bool base_ok = true, wts_ok = true;
    std::string wts_detail;
    for (BigInt p = 0; p < (BigInt(1) << m); ++p) {
        long c = theorem_four_c(e, delta, p);
        Valuation b = probe_nu(n, p, opt.cap);
        if (!b.known_ge(c)) {
            base_ok = false;
            wts_detail = "nu(P_n(" + p.get_str() + ")) = " + b.str() + " < c";
        }
        long prec = c + opt.d_max + 8;
        auto vals = eval_P_progression(n, p, BigInt(1) << m,
                                       static_cast<std::size_t>(xs + (1l << opt.d_max)), prec);
        for (long d = 0; d <= opt.d_max && wts_ok; ++d)
            for (long x = 0; x < xs; ++x) {
                TwoAdic diff = vals[static_cast<std::size_t>(x + (1l << d))] -
                               vals[static_cast<std::size_t>(x)];
                if (!valuation_of(diff).known_eq(d + c)) {
                    wts_ok = false;
                    wts_detail = "difference law fails at p=" + p.get_str() + " d=" +
                                 std::to_string(d) + " x=" + std::to_string(x) + " (nu " +
                                 valuation_of(diff).str() + " want " + std::to_string(d + c) + ")";
                    break;
                }
            }
        if (!wts_ok) break;
    }
    rep.add("four.base", "e=" + std::to_string(e) + " delta=" + std::to_string(delta), base_ok);
    rep.add("four.difference_law", "e=" + std::to_string(e) + " delta=" + std::to_string(delta),
            wts_ok, wts_detail);

    if (e >= 3) {
        bool tbl_ok = true;
        std::string tbl_detail;
        for (BigInt p = 0; p < (BigInt(1) << m) && tbl_ok; ++p) {
            long bound = detail::table_bound(delta, p);
            TermSet want = detail::table_equality_set(e, delta, p);
            std::vector<BigInt> sample;
            for (long x = 0; x < 8; ++x) sample.push_back(x);
            for (const auto& x : opt.extra_x) sample.push_back(x);
            for (const auto& x : sample) {
                MinTerms mt = enumerate_min_terms(n, m, p, x, opt.d_max, bound);
                if (!mt.any_finite || mt.min_nu != bound || !(mt.argmin == want)) {
                    tbl_ok = false;
                    tbl_detail = "p=" + p.get_str() + " x=" + x.get_str() + ": min " +
                                 std::to_string(mt.min_nu) + " set " + term_set_str(mt.argmin) +
                                 " want " + std::to_string(bound) + " " + term_set_str(want);
                    break;
                }
            }
        }
        rep.add("four.term_table", "e=" + std::to_string(e) + " delta=" + std::to_string(delta),
                tbl_ok, tbl_detail);
    }

    if (e >= 3 && delta == 4) {
        // claim: the level-1 term set for odd p
        bool cl1_ok = true;
        std::string cl1_detail;
        for (BigInt p = 1; p < (BigInt(1) << m) && cl1_ok; p += 2) {
            for (const BigInt& x :
                 std::vector<BigInt>{BigInt(0), BigInt(1), BigInt(5), BigInt(1) << 20}) {
                MinTerms mt = enumerate_min_terms(n, m, p, x, opt.d_max, 1, 1);
                TermSet got = mt.levels.count(1) ? mt.levels[1] : TermSet{};
                TermSet want = detail::claim1_expected(e, p, mt.cutoff);
                if (!(got == want)) {
                    cl1_ok = false;
                    cl1_detail = "p=" + p.get_str() + " x=" + x.get_str() + ": got " +
                                 term_set_str(got) + " want " + term_set_str(want);
                    break;
                }
                if (e >= 4) {
                    // printed shorthand: j = 2^{e-2}, k = 0,1 mod 4, C(p,k) odd
                    TermSet shorthand;
                    if (mod_pow2(p, 2) == 3) shorthand.insert({1l << (e - 1), 2});
                    for (long k = 0; (1l << (e - 2)) + k <= mt.cutoff; ++k)
                        if ((k % 4 == 0 || k % 4 == 1) &&
                            nu_binomial_poly(p, static_cast<unsigned long>(k)) == 0)
                            shorthand.insert({1l << (e - 2), k});
                    if (!(got == shorthand)) {
                        cl1_ok = false;
                        cl1_detail = "shorthand mismatch at p=" + p.get_str() + ": got " +
                                     term_set_str(got) + " want " + term_set_str(shorthand);
                        break;
                    }
                }
            }
        }
        rep.add("four.claim_level1", "e=" + std::to_string(e), cl1_ok, cl1_detail);

        // claim: the two kernel sums at s = 2^{e-1}, 2^{e-1}+1 have equal
        // valuation and congruent odd parts (both 3 mod 4 once e >= 4)
        PhiExact a = eval_phi(n, 1ul << (e - 1));
        PhiExact b = eval_phi(n, (1ul << (e - 1)) + 1);
        bool cl2_ok = a.val.is_finite() && b.val.is_finite() && a.val == b.val;
        std::string cl2_detail;
        if (cl2_ok) {
            BigInt ua = mod_pow2(odd_part(a.numerator), 2);
            BigInt ub = mod_pow2(odd_part(b.numerator), 2);
            if (ua != ub) cl2_ok = false;
            if (e >= 4 && (ua != 3 || ub != 3)) cl2_ok = false;
            if (!cl2_ok)
                cl2_detail = "units mod 4: " + ua.get_str() + "," + ub.get_str();
        } else {
            cl2_detail = "valuations " + a.val.str() + " vs " + b.val.str();
        }
        rep.add("four.claim_kernel_sums", "e=" + std::to_string(e), cl2_ok, cl2_detail);
    }

    if (e == 2 && delta == 3) {
        // small-case structure: for x = 0 mod 4 and d >= 1 the only terms
        // below 2^3 sit at k=0, j in {1,3,4}, with exponents 2,1,1 and the
        // last two summing to 0 mod 8
        bool ok = true;
        std::string detail_s;
        for (long d = 1; d <= opt.d_max && ok; ++d) {
            for (long x = 0; x <= 12 && ok; x += 4) {
                long J = term_cutoff(n, m, 2);
                std::map<TermKey, mpq_class> low;
                for (long j = 1; j <= std::min<long>(J, 1l << (m + d)); ++j) {
                    for (long k = 0; j + k <= J; ++k) {
                        BigInt top = BigInt(2) * x;
                        BigInt cx;
                        if (top < k) continue;
                        mpz_bin_ui(cx.get_mpz_t(), top.get_mpz_t(), static_cast<unsigned long>(k));
                        if (cx == 0) continue;
                        BigInt cj;
                        mpz_bin_uiui(cj.get_mpz_t(), 1ul << (m + d), static_cast<unsigned long>(j));
                        PhiExact ph = eval_phi(n, static_cast<unsigned long>(j + k));
                        if (ph.numerator == 0) continue;
                        mpq_class term(cx * cj * ph.numerator);
                        BigInt den;
                        mpz_fac_ui(den.get_mpz_t(), n);
                        term /= mpq_class(den << d);
                        term.canonicalize();
                        if (term == 0) continue;
                        long v = nu(term.get_num()) - nu(term.get_den());
                        if (v < 3) low[{j, k}] = term;
                    }
                }
                TermSet got;
                for (auto& [key, val] : low) got.insert(key);
                TermSet want{{1, 0}, {3, 0}, {4, 0}};
                if (!(got == want)) {
                    ok = false;
                    detail_s = "d=" + std::to_string(d) + " x=" + std::to_string(x) +
                               ": low terms " + term_set_str(got);
                    break;
                }
                auto vq = [](const mpq_class& q) { return nu(q.get_num()) - nu(q.get_den()); };
                if (vq(low[{1, 0}]) != 2 || vq(low[{3, 0}]) != 1 || vq(low[{4, 0}]) != 1) {
                    ok = false;
                    detail_s = "term exponents not (2,1,1)";
                    break;
                }
                mpq_class s = low[{3, 0}] + low[{4, 0}];
                if (s != 0 && nu(s.get_num()) - nu(s.get_den()) < 3) {
                    ok = false;
                    detail_s = "pair sum not divisible by 8";
                }
            }
        }
        rep.add("four.small_case_terms", "e=2 delta=3", ok, detail_s);
    }
    return rep;
}

// ---- single-zero and double-zero product families ----

struct SingleTuple {
    unsigned long n;
    long p, q, p0, b;
    int eps;
};

inline std::vector<SingleTuple> single_admissible(unsigned long n) {
    std::vector<SingleTuple> out;
    if (n < 5) return out;
    long e = lg(n - 1);
    if (n <= (1ul << e)) return out;  // need n - 2^e >= 1
    long t = lg(n - (1ul << e));
    long half = 1l << (e - 1);
    for (long p = std::max(0l, static_cast<long>(n) - (1l << e) - half); p < half; ++p) {
        if (nu_binomial_poly(BigInt(n - 1 - p), static_cast<unsigned long>(p)) != 0) continue;
        long p0 = p % (1l << t);
        for (int eps = 0; eps <= 1; ++eps) {
            if (eps == 1 && n % 2 == 1) continue;
            long qeps = eps ? (1l << (nu(BigInt(n)) - 1)) : 0;
            for (long b = 0;; ++b) {
                long q = p + qeps + b * (1l << (t + 1));
                if (q >= half) break;
                out.push_back({n, p, q, p0, b, eps});
            }
        }
    }
    return out;
}

inline Report verify_theorem_single(unsigned long n) {
    Report rep;
    auto tuples = single_admissible(n);
    long e = (n >= 2) ? lg(n - 1) : 0;
    bool ok = true;
    std::string detail_s;
    for (const auto& tp : tuples) {
        long want_min = alpha(n) - 2 - alpha(BigInt(tp.p0));
        TermSet want{{1l << (e - 1), tp.p0}};
        for (long x = 0; x < 8 && ok; ++x) {
            MinTerms mt = enumerate_min_terms(n, e - 1, BigInt(tp.q), BigInt(x), 0, want_min);
            if (!mt.any_finite || mt.min_nu != want_min || !(mt.argmin == want)) {
                ok = false;
                detail_s = "q=" + std::to_string(tp.q) + " x=" + std::to_string(x) + ": min=" +
                           std::to_string(mt.min_nu) + " " + term_set_str(mt.argmin);
            }
        }
        if (!ok) break;
    }
    rep.add("single", "n=" + std::to_string(n) + " tuples=" + std::to_string(tuples.size()), ok,
            detail_s);
    return rep;
}

struct DoubleTuple {
    unsigned long n;
    long p, q, ell;
    int eps, delta;
};

inline std::vector<DoubleTuple> double_admissible(unsigned long n) {
    std::vector<DoubleTuple> out;
    if (n < 7) return out;
    long e = lg(n - 1);
    if (!(3l * (1l << (e - 1)) < static_cast<long>(n) && static_cast<long>(n) < (1l << (e + 1))))
        return out;
    long pm = (static_cast<long>(n) - 3 * (1l << (e - 1))) / 2;
    for (long p = 0; p <= pm; ++p) {
        if (static_cast<long>(n) == (1l << (e + 1)) - 1 && p == 0) continue;
        if (nu_binomial_poly(BigInt(n - 1 - p), static_cast<unsigned long>(p)) != 0) continue;
        long ell = lg(static_cast<unsigned long>((1l << (e + 1)) - (static_cast<long>(n) - p)));
        for (int eps = 0; eps <= 1; ++eps) {
            if (eps == 1 && n % 2 == 1) continue;
            long q = p + (eps ? (1l << (nu(BigInt(n)) - 1)) : 0);
            for (int delta = 0; delta <= 1; ++delta) out.push_back({n, p, q, ell, eps, delta});
        }
    }
    return out;
}

inline Report verify_theorem_double(unsigned long n) {
    Report rep;
    auto tuples = double_admissible(n);
    long e = (n >= 2) ? lg(n - 1) : 0;
    bool ok = true;
    std::string detail_s;
    for (const auto& tp : tuples) {
        long want_min = alpha(n) - 1 - alpha(BigInt(tp.p));
        TermSet want{{(1l << e) - (1l << tp.ell), tp.p}};
        if (tp.delta == 1) {
            want.insert({(1l << (e - 1)) - (1l << tp.ell), (1l << (e - 1)) + tp.p});
            want.insert({1l << (e - 1), (1l << (e - 1)) + tp.p - (1l << tp.ell)});
        }
        BigInt residue = BigInt(tp.delta) * (BigInt(1) << (e - 1)) + tp.q;
        for (long x = 0; x < 8 && ok; ++x) {
            MinTerms mt = enumerate_min_terms(n, e, residue, BigInt(x), 0, want_min);
            if (!mt.any_finite || mt.min_nu != want_min || !(mt.argmin == want)) {
                ok = false;
                detail_s = "p=" + std::to_string(tp.p) + " q=" + std::to_string(tp.q) + " delta=" +
                           std::to_string(tp.delta) + " x=" + std::to_string(x) + ": min=" +
                           std::to_string(mt.min_nu) + " " + term_set_str(mt.argmin) + " want " +
                           term_set_str(want);
            }
        }
        if (!ok) break;
    }
    rep.add("double", "n=" + std::to_string(n) + " tuples=" + std::to_string(tuples.size()), ok,
            detail_s);

    // the odd-binomial pivot lemma behind both families
    bool lem_ok = true;
    std::string lem_detail;
    long pm = (static_cast<long>(n) - 3 * (1l << (e - 1))) / 2;
    if (3l * (1l << (e - 1)) < static_cast<long>(n) && static_cast<long>(n) < (1l << (e + 1))) {
        for (long p = 0; p < pm; ++p) {
            if (nu_binomial_poly(BigInt(n - 1 - p), static_cast<unsigned long>(p)) != 0) continue;
            long ell = lg(static_cast<unsigned long>((1l << (e + 1)) - (static_cast<long>(n) - p)));
            for (long h = 0; h < e; ++h) {
                if (!(p < (1l << h))) continue;
                BigInt A = BigInt(n) - 1 - p - (1l << e) + (1l << h);
                BigInt B = BigInt(p) + (1l << e) - (1l << h);
                bool odd = (A >= B && B >= 0) ? (nu_binomial(A, B) == 0) : false;
                if (odd != (h == ell)) {
                    lem_ok = false;
                    lem_detail = "p=" + std::to_string(p) + " h=" + std::to_string(h);
                }
            }
        }
        rep.add("double.pivot_lemma", "n=" + std::to_string(n), lem_ok, lem_detail);
    }
    return rep;
}

// ---- identity suite ----

struct IdentityRanges {
    unsigned long sumid_n_max = 40;
    unsigned long sumid_d_max = 10;
    unsigned long stirowr_n_max = 32;
    unsigned long stirowr_k_max = 48;
    unsigned long refine_n_max = 48;
    long dplus1_b_max = 6;
    long dplus1_d_max = 8;
    unsigned dfact_e_max = 12;
};

namespace detail {

inline long nu_q(const mpq_class& q) {
    if (q == 0) throw std::invalid_argument("nu_q: zero");
    return nu(q.get_num()) - nu(q.get_den());
}

// nu(a - b) >= 2, i.e. a = b mod 4 as 2-adic rationals.
inline bool congruent_mod4(const mpq_class& a, const mpq_class& b) {
    mpq_class d = a - b;
    if (d == 0) return true;
    return nu_q(d) >= 2;
}

inline BigInt factorial(unsigned long n) {
    BigInt f;
    mpz_fac_ui(f.get_mpz_t(), n);
    return f;
}

inline BigInt pow_ui(unsigned long b, unsigned long e) {
    if (b == 0) return e == 0 ? 1 : 0;
    BigInt p;
    mpz_ui_pow_ui(p.get_mpz_t(), b, e);
    return p;
}

// sum_i C(nn, 2i+b) i^k (0^0 = 1)
inline BigInt even_index_power_sum(unsigned long nn, unsigned b, unsigned long k) {
    BigInt total = 0, c;
    for (unsigned long i = 0; 2 * i + b <= nn; ++i) {
        mpz_bin_uiui(c.get_mpz_t(), nn, 2 * i + b);
        total += c * pow_ui(i, k);
    }
    return total;
}

}  // namespace detail

inline Report verify_identity_suite(const IdentityRanges& r = {}) {
    Report rep;

    // sum_i C(2n,2i+1) C(i, n-d-1) == 2^{2d+1} C(n+d, 2d+1)
    {
        bool ok = true;
        std::string detail_s;
        for (unsigned long n = 1; n <= r.sumid_n_max && ok; ++n)
            for (unsigned long d = 0; d <= r.sumid_d_max; ++d) {
                BigInt lhs = 0, c1, c2;
                for (unsigned long i = 0; 2 * i + 1 <= 2 * n; ++i) {
                    if (n < d + 1 || i < n - d - 1) continue;
                    mpz_bin_uiui(c1.get_mpz_t(), 2 * n, 2 * i + 1);
                    mpz_bin_uiui(c2.get_mpz_t(), i, n - d - 1);
                    lhs += c1 * c2;
                }
                BigInt rhs;
                if (n + d >= 2 * d + 1)
                    mpz_bin_uiui(rhs.get_mpz_t(), n + d, 2 * d + 1);
                else
                    rhs = 0;
                rhs <<= (2 * d + 1);
                if (lhs != rhs) {
                    ok = false;
                    detail_s = "n=" + std::to_string(n) + " d=" + std::to_string(d);
                    break;
                }
            }
        rep.add("identity.odd_column_sum",
                "n<=" + std::to_string(r.sumid_n_max) + " d<=" + std::to_string(r.sumid_d_max), ok,
                detail_s);
    }

    // mod-4 forms of (1/n!) sum_i C(2n+eps, 2i+b) i^k
    {
        bool ok = true;
        std::string detail_s;
        for (unsigned long n = 1; n <= r.stirowr_n_max && ok; ++n) {
            BigInt nf = detail::factorial(n);
            for (unsigned long k = 0; k <= r.stirowr_k_max && ok; ++k) {
                const std::pair<unsigned, unsigned> cases[] = {{0u, 0u}, {1u, 0u}, {1u, 1u}};
                for (auto [eps, b] : cases) {
                    mpq_class lhs(detail::even_index_power_sum(2 * n + eps, b, k));
                    lhs /= mpq_class(nf);
                    BigInt rhs;
                    if (eps == 0 && b == 0)
                        rhs = stirling2(k, n) + BigInt(2 * n) * stirling2(k, n - 1);
                    else if (eps == 1 && b == 0)
                        rhs = BigInt(2 * n + 1) * stirling2(k, n) +
                              BigInt(2 * (n + 1)) * stirling2(k, n - 1);
                    else
                        rhs = stirling2(k, n) + BigInt(2 * (n + 1)) * stirling2(k, n - 1);
                    if (!detail::congruent_mod4(lhs, mpq_class(rhs))) {
                        ok = false;
                        detail_s = "n=" + std::to_string(n) + " k=" + std::to_string(k) + " eps=" +
                                   std::to_string(eps) + " b=" + std::to_string(b);
                        break;
                    }
                }
            }
        }
        rep.add("identity.half_index_mod4",
                "n<=" + std::to_string(r.stirowr_n_max) + " k<=" + std::to_string(r.stirowr_k_max),
                ok, detail_s);
    }

    // integral expansion over odd double factorials:
    // (1/n!) sum_i C(2n,2i+1) i^k == sum_d 2^{d+1} C(n+d,d) S(k,n-1-d)/(2d+1)!!
    {
        bool ok = true;
        std::string detail_s;
        for (unsigned long n = 1; n <= r.stirowr_n_max && ok; ++n) {
            BigInt nf = detail::factorial(n);
            for (unsigned long k = 0; k <= r.stirowr_k_max; ++k) {
                mpq_class lhs(detail::even_index_power_sum(2 * n, 1, k));
                lhs /= mpq_class(nf);
                mpq_class rhs = 0;
                BigInt dfact = 1, c;
                for (unsigned long d = 0; d + 1 <= n; ++d) {
                    if (d > 0) dfact *= (2 * d + 1);
                    mpz_bin_uiui(c.get_mpz_t(), n + d, d);
                    mpq_class term((c << (d + 1)) * stirling2(k, n - 1 - d));
                    term /= mpq_class(dfact);
                    rhs += term;
                }
                if (lhs != rhs) {
                    ok = false;
                    detail_s = "n=" + std::to_string(n) + " k=" + std::to_string(k);
                    break;
                }
            }
        }
        rep.add("identity.double_factorial_expansion",
                "n<=" + std::to_string(r.stirowr_n_max) + " k<=" + std::to_string(r.stirowr_k_max),
                ok, detail_s);
    }

    // kernel bound and equality: nu(Phi_n(k)) >= alpha(n)-1-alpha(k),
    // equality iff C(n-1-k,k) odd; and the mod-4 refinement
    {
        bool ok = true;
        std::string detail_s;
        for (unsigned long n = 1; n <= r.refine_n_max && ok; ++n) {
            for (unsigned long k = 0; k < n; ++k) {
                Valuation v = phi_nu(n, k);
                long bound = alpha(n) - 1 - alpha(BigInt(k));
                bool eq_want = (n - 1 - k >= k) && nu_binomial(BigInt(n - 1 - k), BigInt(k)) == 0;
                bool eq_got = v.is_finite() && v.value() == bound;
                if (!v.known_ge(bound) || eq_got != eq_want) {
                    ok = false;
                    detail_s = "bound/equality n=" + std::to_string(n) + " k=" + std::to_string(k);
                    break;
                }
                // sum_i C(n,2i+1) i^k / (2^{n-1-2k} k!) mod 4
                mpq_class lhs(detail::even_index_power_sum(n, 1, k));
                long E = static_cast<long>(n) - 1 - 2 * static_cast<long>(k);
                mpq_class den(detail::factorial(k));
                if (E >= 0)
                    den *= mpq_class(BigInt(1) << E);
                else
                    lhs *= mpq_class(BigInt(1) << (-E));
                lhs /= den;
                BigInt rhs = 0;
                if (n - 1 - k >= k) {
                    BigInt c;
                    mpz_bin_uiui(c.get_mpz_t(), n - 1 - k, k);
                    rhs = c;
                }
                if ((n - 1) % 2 == 0 && k % 2 == 0 && k >= 2 && n - 1 - k >= k - 2) {
                    BigInt c;
                    mpz_bin_uiui(c.get_mpz_t(), n - 1 - k, k - 2);
                    rhs += 2 * c;
                }
                if (!detail::congruent_mod4(lhs, mpq_class(rhs))) {
                    ok = false;
                    detail_s = "mod4 n=" + std::to_string(n) + " k=" + std::to_string(k);
                    break;
                }
            }
        }
        rep.add("identity.kernel_refinement", "n<=" + std::to_string(r.refine_n_max), ok, detail_s);
    }

    // nu((1/2^{d+1}) C(2^{d+1+b}, j) - (1/2^d) C(2^{d+b}, j))
    //   == 2b + d - lg(j-1) - nu(j), for j >= 2
    {
        bool ok = true;
        std::string detail_s;
        for (long b = 0; b <= r.dplus1_b_max && ok; ++b)
            for (long d = 0; d <= r.dplus1_d_max && ok; ++d) {
                unsigned long big = 1ul << (d + 1 + b), small = 1ul << (d + b);
                BigInt c_big = big, c_small = small;  // C(N, 1)
                for (unsigned long j = 2; j <= small; ++j) {
                    c_big = c_big * (big - j + 1) / j;
                    c_small = c_small * (small - j + 1) / j;
                    BigInt num = c_big - 2 * c_small;  // = 2^{d+1} (lhs difference)
                    long want = 2 * b + d - lg(j - 1) - nu(BigInt(j));
                    if (num == 0 || nu(num) - (d + 1) != want) {
                        ok = false;
                        detail_s = "b=" + std::to_string(b) + " d=" + std::to_string(d) + " j=" +
                                   std::to_string(j);
                        break;
                    }
                }
            }
        rep.add("identity.halving_stability",
                "b<=" + std::to_string(r.dplus1_b_max) + " d<=" + std::to_string(r.dplus1_d_max),
                ok, detail_s);
    }

    // 2^{2^e+d-1-alpha(d)}/(d! 2^e!) == same/(2^e+d)! mod 2^{e-lg d}.
    // Dividing out the odd unit 2^K/(2^e+d)! this is
    // nu(C(2^e+d, d) - 1) >= e - lg(d).
    {
        bool ok = true;
        std::string detail_s;
        for (unsigned e = 1; e <= r.dfact_e_max && ok; ++e) {
            long prec = e + 2;
            for (unsigned long d = 1; d < (1ul << e); ++d) {
                TwoAdic c = binomial_mod(BigInt((1ul << e) + d), d, prec);
                long need = static_cast<long>(e) - lg(d);
                if (need > 0 && mod_pow2(c.residue - 1, need) != 0) {
                    ok = false;
                    detail_s = "e=" + std::to_string(e) + " d=" + std::to_string(d);
                    break;
                }
            }
        }
        rep.add("identity.factorial_shift", "e<=" + std::to_string(r.dfact_e_max), ok, detail_s);
    }

    // nu(2^{2^e-r-1}/(2^e-r)!) = alpha(2^e-r) - 1 >= e-1-lg(D) for 0 < r <= D
    {
        bool ok = true;
        std::string detail_s;
        for (unsigned e = 1; e <= r.dfact_e_max && ok; ++e) {
            long worst_so_far = kNuInfinity;  // min over r <= D as D grows
            for (unsigned long D = 1; D < (1ul << e); ++D) {
                long a = alpha(static_cast<unsigned long>((1ul << e) - D)) - 1;
                worst_so_far = std::min(worst_so_far, a);
                if (worst_so_far < static_cast<long>(e) - 1 - lg(D)) {
                    ok = false;
                    detail_s = "e=" + std::to_string(e) + " D=" + std::to_string(D);
                    break;
                }
            }
        }
        rep.add("identity.tail_valuation", "e<=" + std::to_string(r.dfact_e_max), ok, detail_s);
    }

    return rep;
}

// ---- global valuation formula over an atlas ----

struct CorrectionTable {
    // n -> (cap, center): extra term min(cap, 2 nu(z - center))
    std::map<unsigned long, std::pair<long, long>> special;
};

inline CorrectionTable load_corrections(const std::string& path) {
    CorrectionTable t;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open corrections file: " + path);
    nlohmann::json j;
    in >> j;
    for (const auto& row : j.at("special"))
        t.special[row.at("n").get<unsigned long>()] = {row.at("cap").get<long>(),
                                                       row.at("center").get<long>()};
    return t;
}

// Right side of the valuation formula at z, or nullopt when some zero is
// too close for its witness depth (margin bits reserved).
inline std::optional<long> valuation_formula_rhs(unsigned long n, const BigInt& z,
                                                 const std::vector<const ZeroRecord*>& zeros,
                                                 const CorrectionTable& corr, long margin = 8) {
    long sum = 0;
    for (const auto* zr : zeros) {
        BigInt d = mod_pow2(z - zr->zero_bits.residue, zr->witness_depth);
        if (d == 0) return std::nullopt;
        long w = nu(d);
        if (w > zr->witness_depth - margin) return std::nullopt;
        sum += w;
    }
    sum -= nu_factorial((n - 1) / 2);
    auto it = corr.special.find(n);
    if (it != corr.special.end()) {
        auto [cap, center] = it->second;
        if (z == center)
            sum += cap;
        else
            sum += std::min(cap, 2 * nu(BigInt(z - center)));
    } else if ((n % 4 == 0 || n % 4 == 3) && mpz_odd_p(BigInt(z + n).get_mpz_t())) {
        sum += nu(BigInt((n + 1) / 2));
    }
    return sum;
}

struct CgenResult {
    long checked = 0;
    long skipped = 0;
    long mismatches = 0;
    std::string first_mismatch;
};

inline CgenResult verify_cgen(const Atlas& atlas, unsigned long n, long samples,
                              const CorrectionTable& corr, std::uint64_t seed = 0x5eed,
                              long cap = 4096) {
    CgenResult res;
    auto zeros = zeros_of(atlas, n);
    std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ull * n));
    for (long i = 0; i < samples; ++i) {
        BigInt z = BigInt(rng()) % (BigInt(1) << 40);
        auto rhs = valuation_formula_rhs(n, z, zeros, corr);
        if (!rhs) {
            ++res.skipped;
            continue;
        }
        Valuation lhs = probe_nu(n, z, cap);
        ++res.checked;
        if (!lhs.known_eq(*rhs)) {
            ++res.mismatches;
            if (res.first_mismatch.empty())
                res.first_mismatch = "z=" + z.get_str() + " lhs=" + lhs.str() + " rhs=" +
                                     std::to_string(*rhs);
        }
    }
    return res;
}

// Marks atlas zero records that fall under a verified product family.
inline void annotate_theorem_backed(Atlas& atlas) {
    for (auto& [n, reports] : atlas.by_n) {
        // 2^e + delta family
        long backing_c = -1;
        bool four_family = false;
        unsigned e4 = 0, d4 = 0;
        for (unsigned e = 2; e <= 30 && !four_family; ++e)
            for (unsigned delta = 1; delta <= 4; ++delta)
                if (n == (1ul << e) + delta) {
                    four_family = true;
                    e4 = e;
                    d4 = delta;
                    break;
                }
        std::function<void(ClassReport&)> walk = [&](ClassReport& r) {
            if (r.verdict == ClassReport::Verdict::EmpiricalZero) {
                ZeroRecord& z = *r.zero;
                if (four_family && z.cls.log_modulus == static_cast<long>(e4) - 1 &&
                    z.c == theorem_four_c(e4, d4, z.cls.residue))
                    z.status = "theorem:four";
            }
            for (auto& ch : r.children) walk(ch);
        };
        for (auto& top : reports) walk(top);

        // single-zero family: classes (q mod 2^{e-1}) with c = alpha(n)-2-alpha(p0)
        long e = (n >= 5) ? lg(n - 1) : 0;
        for (const auto& tp : single_admissible(n)) {
            for (auto& top : reports) {
                std::function<void(ClassReport&)> mark = [&](ClassReport& r) {
                    if (r.verdict == ClassReport::Verdict::EmpiricalZero &&
                        r.zero->cls.log_modulus == e - 1 && r.zero->cls.residue == tp.q &&
                        r.zero->c == alpha(n) - 2 - alpha(BigInt(tp.p0)) &&
                        r.zero->status == "empirical")
                        r.zero->status = "theorem:single";
                    for (auto& ch : r.children) mark(ch);
                };
                mark(top);
            }
        }
        for (const auto& tp : double_admissible(n)) {
            BigInt residue = BigInt(tp.delta) * (BigInt(1) << (e - 1)) + tp.q;
            for (auto& top : reports) {
                std::function<void(ClassReport&)> mark = [&](ClassReport& r) {
                    if (r.verdict == ClassReport::Verdict::EmpiricalZero &&
                        r.zero->cls.log_modulus == e && r.zero->cls.residue == residue &&
                        r.zero->c == alpha(n) - 1 - alpha(BigInt(tp.p)) &&
                        r.zero->status == "empirical")
                        r.zero->status = "theorem:double";
                    for (auto& ch : r.children) mark(ch);
                };
                mark(top);
            }
        }
    }
}

}  // namespace pstirling

#endif
