#ifndef PSTIRLING_ZEROS_HPP
#define PSTIRLING_ZEROS_HPP

// Locating the 2-adic zeros of P_n: adaptive-precision valuation probes,
// greedy bit extraction, recursive congruence-class classification with
// finite no-zero certificates, and atlas construction.

#include <pstirling/parallel.hpp>
#include <pstirling/stirling.hpp>
#include <pstirling/twoadic.hpp>

#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace pstirling {

struct CongruenceClass {
    long log_modulus = 0;      // m
    BigInt residue = 0;        // p < 2^m
    BigInt modulus() const { return BigInt(1) << log_modulus; }
    BigInt point(const BigInt& x) const { return (x << log_modulus) + residue; }
    CongruenceClass child(int bit) const {
        return CongruenceClass{log_modulus + 1, bit ? residue + modulus() : residue};
    }
};

struct ZeroRecord {
    unsigned long n = 0;
    CongruenceClass cls;
    TwoAdic zero_bits{0, 1};   // low witness_depth bits of the zero z itself
    long c = 0;                // nu(P_n(2^m x+p)) = nu(x-x0) + c
    long witness_depth = 0;    // known bits of z
    std::string status = "empirical";
};

struct ClassReport {
    enum class Verdict { CertifiedNoZero, EmpiricalZero, Split, Unresolved };
    CongruenceClass cls;
    Verdict verdict = Verdict::Unresolved;
    long v = 0;                      // certified valuation (CertifiedNoZero)
    long t_used = 0;                 // certificate modulus exponent
    std::optional<ZeroRecord> zero;  // EmpiricalZero
    std::vector<ClassReport> children;
    std::string reason;

    template <class F>
    void visit(F&& f) const {
        f(*this);
        for (const auto& ch : children) ch.visit(f);
    }
};

struct FinderLimits {
    long start_prec = 64;
    long cap = 4096;                  // probe escalation cap (bits)
    long witness_depth = 48;          // bits of each zero to pin down
    long split_max_log_modulus = 12;  // stop splitting at modulus 2^12
    long cert_extra = 14;             // certificate search depth beyond the class modulus
    int sample_log = 5;               // 2^sample_log fitting samples
    int validate_points = 64;
    unsigned threads = 0;
};

struct Atlas {
    std::map<unsigned long, std::vector<ClassReport>> by_n;
    long witness_depth = 0;
};

// nu(P_n(point)) with escalating working precision; AtLeast(cap) is a
// legitimate answer (the long-zero-run hazard), never an error.
inline Valuation probe_nu(unsigned long n, const BigInt& point, long cap, long start_prec = 64) {
    long prec = std::min(start_prec, cap);
    for (;;) {
        Valuation v = valuation_of(eval_P(n, point, prec));
        if (v.is_finite()) return v;
        if (prec >= cap) return Valuation::at_least(cap);
        prec = std::min(prec * 2, cap);
    }
}

namespace detail {

// f(x) = nu(P_n(2^m x + p)) - c as a Valuation (c subtracted when finite).
inline Valuation probe_f(unsigned long n, const CongruenceClass& cls, long c, const BigInt& x,
                         long cap) {
    Valuation v = probe_nu(n, cls.point(x), cap);
    if (v.is_finite()) return Valuation::finite(v.value() - c);
    return Valuation::at_least(v.lower_bound() - c);
}

inline std::mt19937_64 class_rng(unsigned long n, const CongruenceClass& cls, std::uint64_t salt) {
    std::uint64_t seed = 0x9e3779b97f4a7c15ull * (n + 1);
    seed ^= (static_cast<std::uint64_t>(cls.log_modulus) << 48) + mod_pow2(cls.residue, 48).get_ui();
    seed += salt;
    return std::mt19937_64(seed);
}

}  // namespace detail

struct MinPrimeViolation {
    BigInt x;
    long d;
    std::string detail;
};

struct MinPrimeReport {
    std::vector<MinPrimeViolation> violations;
    long indeterminate = 0;  // comparisons blocked by AtLeast probes
    bool ok() const { return violations.empty() && indeterminate == 0; }
};

// Checks the exact-or-strict minimum rule for f(x) = nu(P_n(2^m x+p)) - c:
// f(x + 2^d) = min(f(x), d) when f(x) != d, and > d when f(x) = d.
inline MinPrimeReport verify_min_prime(unsigned long n, const CongruenceClass& cls, long c,
                                       const std::vector<BigInt>& x_samples, long d_max,
                                       long cap = 4096) {
    MinPrimeReport rep;
    for (const auto& x : x_samples) {
        Valuation a = detail::probe_f(n, cls, c, x, cap);
        for (long d = 0; d <= d_max; ++d) {
            Valuation b = detail::probe_f(n, cls, c, x + (BigInt(1) << d), cap);
            if (a.is_finite()) {
                long av = a.value();
                if (av != d) {
                    long want = std::min(av, d);
                    if (!b.known_eq(want)) {
                        if (!b.is_finite() && b.lower_bound() > want) {
                            // AtLeast above the required exact value: violation
                            rep.violations.push_back({x, d, "f(x+2^d)=" + b.str() + " want " + std::to_string(want)});
                        } else if (!b.is_finite()) {
                            ++rep.indeterminate;
                        } else {
                            rep.violations.push_back({x, d, "f(x+2^d)=" + b.str() + " want " + std::to_string(want)});
                        }
                    }
                } else {
                    if (b.is_finite() && b.value() <= d)
                        rep.violations.push_back({x, d, "f(x+2^d)=" + b.str() + " want > " + std::to_string(d)});
                }
            } else {
                // f(x) only bounded below; if d < bound then min' forces exactly d
                if (d < a.lower_bound()) {
                    if (!b.known_eq(d)) {
                        if (b.is_finite())
                            rep.violations.push_back({x, d, "f(x+2^d)=" + b.str() + " want " + std::to_string(d)});
                        else
                            ++rep.indeterminate;
                    }
                } else {
                    ++rep.indeterminate;
                }
            }
        }
    }
    return rep;
}

struct ExtractOutcome {
    std::optional<ZeroRecord> record;
    std::string failure;  // nonempty on failure ("cap" / "pattern")
};

// Greedy bit extraction of the zero in a class where
// nu(P_n(2^m x + p)) = nu(x - x0) + c: the bit positions of x0 are
// e_0 = f(0), e_i = f(2^{e_0} + ... + 2^{e_{i-1}}), strictly increasing.
inline ExtractOutcome extract_zero(unsigned long n, const CongruenceClass& cls, long c,
                                   long depth, long cap) {
    long want_bits = depth - cls.log_modulus;  // bits of x0 to determine
    BigInt s = 0;
    long prev = -1;
    for (;;) {
        Valuation fv = detail::probe_f(n, cls, c, s, cap);
        if (!fv.is_finite()) {
            ExtractOutcome out;
            out.failure = "valuation exceeded cap " + std::to_string(cap) +
                          " at partial sum (long zero-run hazard)";
            return out;
        }
        long e = fv.value();
        if (e <= prev) {
            ExtractOutcome out;
            out.failure = "probe sequence not strictly increasing (pattern mismatch)";
            return out;
        }
        if (e >= want_bits) {
            ZeroRecord rec;
            rec.n = n;
            rec.cls = cls;
            rec.c = c;
            rec.witness_depth = cls.log_modulus + e;
            rec.zero_bits = TwoAdic(cls.point(s), rec.witness_depth);
            ExtractOutcome out;
            out.record = rec;
            return out;
        }
        s += BigInt(1) << e;
        prev = e;
    }
}

struct CertifyResult {
    bool certified = false;
    long v = 0;
    long t_used = 0;
    std::string why_not;
};

// Searches for t <= t_max and a constant v < t+1-lg(n) such that
// nu(P_n(y)) = v for every residue y mod 2^t in the class; periodicity
// then pins nu = v on the whole class, a finite no-zero certificate.
inline CertifyResult certify_no_zero(unsigned long n, const CongruenceClass& cls, long t_max,
                                     long cap = 4096) {
    long m = cls.log_modulus;
    long lgn = lg(n);
    Valuation first = probe_nu(n, cls.point(0), cap);
    if (!first.is_finite()) return {false, 0, 0, "valuation exceeded cap"};
    long v = first.value();
    for (long t = m; t <= t_max; ++t) {
        // new residues at level t: p + y 2^m for odd-indexed halves
        if (t > m) {
            BigInt count = BigInt(1) << (t - 1 - m);
            for (BigInt y = 0; y < count; ++y) {
                BigInt x = y + count;  // the residues added when refining to mod 2^t
                Valuation val = probe_nu(n, cls.point(x), cap);
                if (!val.known_eq(v))
                    return {false, 0, t, "valuation not constant on residues (saw " + val.str() +
                                             " vs " + std::to_string(v) + ")"};
            }
        }
        if (v < t + 1 - lgn) return {true, v, t, ""};
    }
    return {false, 0, t_max, "certificate bound t_max exhausted"};
}

// Full classification of one congruence class.
inline ClassReport classify(unsigned long n, const CongruenceClass& cls, const FinderLimits& lim) {
    ClassReport rep;
    rep.cls = cls;
    long m = cls.log_modulus;

    if (m > lim.split_max_log_modulus) {
        rep.verdict = ClassReport::Verdict::Unresolved;
        rep.reason = "split depth limit (modulus 2^" + std::to_string(m) + ")";
        return rep;
    }

    long nsamp = 1l << lim.sample_log;
    std::vector<Valuation> f;
    f.reserve(nsamp);
    bool all_finite = true;
    for (long x = 0; x < nsamp; ++x) {
        Valuation v = probe_nu(n, cls.point(x), lim.cap, lim.start_prec);
        if (!v.is_finite()) all_finite = false;
        f.push_back(v);
    }
    if (!all_finite) {
        rep.verdict = ClassReport::Verdict::Unresolved;
        rep.reason = "probe valuation exceeded cap " + std::to_string(lim.cap);
        return rep;
    }

    bool constant = true;
    for (const auto& v : f)
        if (v.value() != f[0].value()) constant = false;

    if (constant) {
        long budget = m + lim.cert_extra;
        CertifyResult cert = certify_no_zero(n, cls, budget, lim.cap);
        if (cert.certified) {
            rep.verdict = ClassReport::Verdict::CertifiedNoZero;
            rep.v = cert.v;
            rep.t_used = cert.t_used;
            return rep;
        }
        // fall through: not constant deeper in, or bound exhausted
    }

    long c = f[0].value();
    for (const auto& v : f) c = std::min(c, v.value());

    std::vector<BigInt> xs;
    for (long x = 0; x < nsamp / 2; ++x) xs.push_back(x);
    MinPrimeReport mp = verify_min_prime(n, cls, c, xs, lim.sample_log + 2, lim.cap);
    if (mp.indeterminate > 0) {
        rep.verdict = ClassReport::Verdict::Unresolved;
        rep.reason = "min-rule probes exceeded cap";
        return rep;
    }
    if (mp.ok()) {
        ExtractOutcome ext = extract_zero(n, cls, c, lim.witness_depth, lim.cap);
        if (!ext.record && ext.failure.find("cap") != std::string::npos) {
            rep.verdict = ClassReport::Verdict::Unresolved;
            rep.reason = ext.failure;
            return rep;
        }
        if (ext.record) {
            // validate the fitted law at fresh points
            auto rng = detail::class_rng(n, cls, 0xabcd);
            const ZeroRecord& rec = *ext.record;
            long x0bits = rec.witness_depth - m;
            BigInt x0 = mod_pow2(rec.zero_bits.residue >> m, x0bits);
            bool good = true;
            for (int i = 0; i < lim.validate_points && good; ++i) {
                BigInt x = BigInt(rng()) % (BigInt(1) << 40);
                BigInt dxm = mod_pow2(x - x0, x0bits);
                if (dxm == 0) continue;  // beyond witness depth, not checkable
                long w = nu(dxm);
                if (w >= x0bits - 8) continue;
                Valuation got = probe_nu(n, cls.point(x), lim.cap);
                if (!got.known_eq(w + c)) good = false;
            }
            if (good) {
                rep.verdict = ClassReport::Verdict::EmpiricalZero;
                rep.zero = rec;
                return rep;
            }
        }
        // extraction failed or validation failed: treat as pattern mismatch
    }

    if (m >= lim.split_max_log_modulus) {
        rep.verdict = ClassReport::Verdict::Unresolved;
        rep.reason = "no single-zero law and split depth limit reached";
        return rep;
    }
    rep.verdict = ClassReport::Verdict::Split;
    rep.children.push_back(classify(n, cls.child(0), lim));
    rep.children.push_back(classify(n, cls.child(1), lim));
    return rep;
}

// Starting modulus for the per-n classification: 2^{max(0, lg(n-1)-1)}.
inline long atlas_start_log_modulus(unsigned long n) {
    if (n <= 2) return 0;
    return std::max(0l, lg(n - 1) - 1);
}

inline std::vector<ClassReport> classify_all(unsigned long n, const FinderLimits& lim) {
    long m0 = atlas_start_log_modulus(n);
    std::vector<ClassReport> reports;
    BigInt count = BigInt(1) << m0;
    for (BigInt p = 0; p < count; ++p)
        reports.push_back(classify(n, CongruenceClass{m0, p}, lim));
    return reports;
}

inline Atlas build_atlas(unsigned long n_lo, unsigned long n_hi, const FinderLimits& lim) {
    Atlas atlas;
    atlas.witness_depth = lim.witness_depth;
    std::vector<unsigned long> ns;
    for (unsigned long n = n_lo; n <= n_hi; ++n) ns.push_back(n);
    std::vector<std::vector<ClassReport>> out(ns.size());
    parallel_for(ns.size(), [&](std::size_t i) { out[i] = classify_all(ns[i], lim); },
                 lim.threads);
    for (std::size_t i = 0; i < ns.size(); ++i) atlas.by_n[ns[i]] = std::move(out[i]);
    return atlas;
}

inline std::vector<const ZeroRecord*> zeros_of(const Atlas& atlas, unsigned long n) {
    std::vector<const ZeroRecord*> zs;
    auto it = atlas.by_n.find(n);
    if (it == atlas.by_n.end()) return zs;
    for (const auto& top : it->second)
        top.visit([&](const ClassReport& r) {
            if (r.verdict == ClassReport::Verdict::EmpiricalZero) zs.push_back(&*r.zero);
        });
    return zs;
}

struct ZeroCount {
    long zeros = 0;
    long unresolved = 0;
};

inline ZeroCount count_zeros(const Atlas& atlas, unsigned long n) {
    ZeroCount zc;
    auto it = atlas.by_n.find(n);
    if (it == atlas.by_n.end()) return zc;
    for (const auto& top : it->second)
        top.visit([&](const ClassReport& r) {
            if (r.verdict == ClassReport::Verdict::EmpiricalZero) ++zc.zeros;
            if (r.verdict == ClassReport::Verdict::Unresolved) ++zc.unresolved;
        });
    return zc;
}

// Observed zero-count law: 2[(n-1)/4], minus 2 when n = 13 mod 16, with
// the known exceptions n = 21, 71, 90 two lower still.
inline long expected_zero_count(unsigned long n) {
    long v = 2 * static_cast<long>((n - 1) / 4);
    if (n % 16 == 13) v -= 2;
    if (n == 21 || n == 71 || n == 90) v -= 2;
    return v;
}

struct BitrunRow {
    unsigned long n;
    CongruenceClass cls;
    long witness_depth;
    long longest_zero_run;
};

// Longest run of 0-bits in each extracted zero expansion.
inline std::vector<BitrunRow> scan_zero_bitruns(const Atlas& atlas) {
    std::vector<BitrunRow> rows;
    for (const auto& [n, reports] : atlas.by_n) {
        for (const auto& top : reports)
            top.visit([&](const ClassReport& r) {
                if (r.verdict != ClassReport::Verdict::EmpiricalZero) return;
                const ZeroRecord& z = *r.zero;
                long best = 0, cur = 0;
                for (long i = 0; i < z.witness_depth; ++i) {
                    if (mpz_tstbit(z.zero_bits.residue.get_mpz_t(), static_cast<mp_bitcnt_t>(i)))
                        cur = 0;
                    else
                        best = std::max(best, ++cur);
                }
                rows.push_back({n, z.cls, z.witness_depth, best});
            });
    }
    return rows;
}

}  // namespace pstirling

#endif
