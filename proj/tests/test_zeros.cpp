#include <pstirling/io.hpp>
#include <pstirling/zeros.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

using namespace pstirling;

TEST_CASE("probe_nu") {
    CHECK(probe_nu(1, 123456, 256) == Valuation::finite(0));
    CHECK(probe_nu(23, 14, 256) == Valuation::finite(4));
    CHECK(probe_nu(31, 2, 256) == Valuation::finite(7));
}

TEST_CASE("extract the even zero of P_5") {
    CongruenceClass cls{1, 0};
    auto out = extract_zero(5, cls, 0, 40, 2048);
    REQUIRE(out.record.has_value());
    const ZeroRecord& z = *out.record;
    CHECK(z.witness_depth >= 40);
    CHECK(mod_pow2(z.zero_bits.residue, 1) == 0);
    BigInt x0 = z.zero_bits.residue >> 1;
    // the fitted law at fresh points
    std::mt19937_64 rng(71);
    for (int i = 0; i < 40; ++i) {
        BigInt x = BigInt(rng()) % (BigInt(1) << 30);
        BigInt d = mod_pow2(x - x0, z.witness_depth - 1);
        if (d == 0) continue;
        CHECK(probe_nu(5, 2 * x, 2048) == Valuation::finite(nu(d)));
    }
}

TEST_CASE("first extracted bit is f(0)") {
    // the odd zero of P_5: f(0) = nu(P_5(1)) = 0, so x0 is odd
    auto out = extract_zero(5, CongruenceClass{1, 1}, 0, 30, 2048);
    REQUIRE(out.record.has_value());
    CHECK(mod_pow2(out.record->zero_bits.residue >> 1, 1) == 1);
}

TEST_CASE("deep class of P_29") {
    CongruenceClass cls{4, 10};
    auto out = extract_zero(29, cls, 2, 40, 2048);
    REQUIRE(out.record.has_value());
    const ZeroRecord& z = *out.record;
    CHECK(z.witness_depth >= 40);
    BigInt x0 = z.zero_bits.residue >> 4;
    std::mt19937_64 rng(73);
    for (int i = 0; i < 64; ++i) {
        BigInt x = BigInt(rng()) % (BigInt(1) << 30);
        BigInt d = mod_pow2(x - x0, z.witness_depth - 4);
        if (d == 0) continue;
        CHECK(probe_nu(29, (x << 4) + 10, 2048) == Valuation::finite(nu(d) + 2));
    }
}

TEST_CASE("exact-or-strict minimum rule") {
    std::vector<BigInt> xs;
    for (long x = 0; x < 32; ++x) xs.push_back(x);
    CHECK(verify_min_prime(29, CongruenceClass{4, 2}, 2, xs, 8).ok());
    CHECK(verify_min_prime(5, CongruenceClass{1, 1}, 0, xs, 8).ok());
    // a constant-valuation class violates the rule immediately
    auto rep = verify_min_prime(2, CongruenceClass{0, 0}, 0, {BigInt(0), BigInt(1)}, 4);
    CHECK_FALSE(rep.violations.empty());
    auto rep23 = verify_min_prime(23, CongruenceClass{4, 14}, 4, {BigInt(0), BigInt(3)}, 6);
    CHECK_FALSE(rep23.violations.empty());
}

TEST_CASE("no-zero certificates") {
    auto c23 = certify_no_zero(23, CongruenceClass{4, 14}, 16);
    CHECK(c23.certified);
    CHECK(c23.v == 4);
    for (int p = 0; p <= 1; ++p) {
        auto c4 = certify_no_zero(4, CongruenceClass{1, p}, 12);
        CHECK(c4.certified);
    }
    auto c5 = certify_no_zero(5, CongruenceClass{1, 0}, 14);
    CHECK_FALSE(c5.certified);

    // soundness spot-check: random huge points keep the certified value
    std::mt19937_64 rng(79);
    for (int i = 0; i < 64; ++i) {
        BigInt x = (BigInt(rng()) << 24) + (rng() % (1ul << 24));
        CHECK(probe_nu(23, (x << 4) + 14, 2048) == Valuation::finite(4));
    }
}

TEST_CASE("classification of single classes") {
    FinderLimits lim;
    lim.witness_depth = 24;

    ClassReport r2 = classify(2, CongruenceClass{0, 0}, lim);
    CHECK(r2.verdict == ClassReport::Verdict::CertifiedNoZero);

    ClassReport r29 = classify(29, CongruenceClass{3, 2}, lim);
    REQUIRE(r29.verdict == ClassReport::Verdict::Split);
    REQUIRE(r29.children.size() == 2);
    for (const auto& ch : r29.children) {
        CHECK(ch.verdict == ClassReport::Verdict::EmpiricalZero);
        CHECK(ch.zero->c == 2);
    }

    // three zeros in (4 mod 16) of P_53: 4 and 36 mod 64, plus one in 20 mod 32
    ClassReport r53 = classify(53, CongruenceClass{4, 4}, lim);
    std::vector<BigInt> mod32, mod64;
    r53.visit([&](const ClassReport& r) {
        if (r.verdict == ClassReport::Verdict::EmpiricalZero) {
            mod32.push_back(mod_pow2(r.zero->zero_bits.residue, 5));
            mod64.push_back(mod_pow2(r.zero->zero_bits.residue, 6));
        }
    });
    std::sort(mod32.begin(), mod32.end());
    std::sort(mod64.begin(), mod64.end());
    REQUIRE(mod32.size() == 3);
    CHECK(mod32 == std::vector<BigInt>{4, 4, 20});
    CHECK(mod64[0] == 4);
    CHECK(mod64[1] == 36);
}

TEST_CASE("atlas for the first product families") {
    FinderLimits lim;
    lim.witness_depth = 24;
    Atlas atlas = build_atlas(1, 12, lim);
    for (unsigned long n = 1; n <= 4; ++n) {
        auto zc = count_zeros(atlas, n);
        CHECK(zc.zeros == 0);
        CHECK(zc.unresolved == 0);
    }
    for (unsigned long n = 5; n <= 12; ++n) {
        auto zc = count_zeros(atlas, n);
        CHECK(zc.unresolved == 0);
        CHECK(zc.zeros == expected_zero_count(n));
        CHECK(zc.zeros == (n <= 8 ? 2 : 4));
    }

    // partition invariant: children split their parent class exactly
    for (const auto& [n, reports] : atlas.by_n)
        for (const auto& rep : reports)
            rep.visit([&](const ClassReport& r) {
                if (r.verdict != ClassReport::Verdict::Split) return;
                REQUIRE(r.children.size() == 2);
                CHECK(r.children[0].cls.log_modulus == r.cls.log_modulus + 1);
                CHECK(r.children[0].cls.residue == r.cls.residue);
                CHECK(r.children[1].cls.residue == r.cls.residue + r.cls.modulus());
            });

    // zero bits agree with the class they were found in
    for (const auto& [n, reports] : atlas.by_n)
        for (const auto& rep : reports)
            rep.visit([&](const ClassReport& r) {
                if (r.verdict != ClassReport::Verdict::EmpiricalZero) return;
                CHECK(mod_pow2(r.zero->zero_bits.residue, r.cls.log_modulus) == r.cls.residue);
                CHECK(r.zero->witness_depth >= lim.witness_depth);
            });
}

TEST_CASE("one zero per class in the 2^e+delta families") {
    // exactly 2^{e-1} zeros, one in each class mod 2^{e-1}, with the
    // additive constants the family case table prescribes
    FinderLimits lim;
    lim.witness_depth = 24;
    for (unsigned e = 2; e <= 7; ++e)
        for (unsigned delta = 1; delta <= 4; ++delta) {
            unsigned long n = (1ul << e) + delta;
            Atlas atlas = build_atlas(n, n, lim);
            auto zc = count_zeros(atlas, n);
            CHECK(zc.zeros == (1l << (e - 1)));
            CHECK(zc.unresolved == 0);
            std::set<BigInt> classes;
            for (const auto* z : zeros_of(atlas, n)) {
                BigInt p = mod_pow2(z->zero_bits.residue, e - 1);
                classes.insert(p);
                long c_want = (delta == 3 && mpz_even_p(p.get_mpz_t())) ||
                                      (delta == 4 && mpz_odd_p(p.get_mpz_t()))
                                  ? (e == 2 ? 2 : 1)
                                  : 0;
                CHECK(z->cls.log_modulus == static_cast<long>(e) - 1);
                CHECK(z->c == c_want);
            }
            CHECK(classes.size() == (1ul << (e - 1)));
        }
}

TEST_CASE("any lift agreeing on the witness bits keeps high valuation") {
    FinderLimits lim;
    lim.witness_depth = 32;
    std::mt19937_64 rng(83);
    for (unsigned long n : {5ul, 11ul, 29ul}) {
        Atlas atlas = build_atlas(n, n, lim);
        for (const auto* z : zeros_of(atlas, n)) {
            long m = z->cls.log_modulus;
            for (int i = 0; i < 6; ++i) {
                BigInt lift = z->zero_bits.residue + (BigInt(rng()) << z->witness_depth);
                Valuation v = probe_nu(n, lift, 4096);
                CHECK(v.known_ge(z->c + (z->witness_depth - m)));
            }
        }
    }
}

TEST_CASE("expected zero counts") {
    CHECK(expected_zero_count(13) == 4);  // the 13 mod 16 branch
    CHECK(expected_zero_count(21) == 8);  // exceptional row
    CHECK(expected_zero_count(29) == 12);
    CHECK(expected_zero_count(64) == 30);
}

TEST_CASE("bit-run scanner") {
    FinderLimits lim;
    Atlas atlas = build_atlas(5, 5, lim);  // default depth 48
    auto rows = scan_zero_bitruns(atlas);
    REQUIRE(rows.size() == 2);
    for (const auto& row : rows) {
        CHECK(row.longest_zero_run <= row.witness_depth);
        CHECK(row.longest_zero_run > 0);
    }
    Atlas empty;
    CHECK(scan_zero_bitruns(empty).empty());
}

TEST_CASE("atlas file round-trip") {
    FinderLimits lim;
    lim.witness_depth = 24;
    Atlas atlas = build_atlas(5, 8, lim);
    std::ostringstream os;
    write_atlas_jsonl(atlas, os);
    std::istringstream is(os.str());
    auto records = read_atlas_jsonl(is);
    for (unsigned long n = 5; n <= 8; ++n) {
        auto direct = zeros_of(atlas, n);
        auto loaded = zeros_from_records(records, n);
        REQUIRE(direct.size() == loaded.size());
        for (std::size_t i = 0; i < direct.size(); ++i) {
            CHECK(direct[i]->zero_bits.residue == loaded[i].zero_bits.residue);
            CHECK(direct[i]->witness_depth == loaded[i].witness_depth);
            CHECK(direct[i]->c == loaded[i].c);
        }
    }
}
