#include <pstirling/limits.hpp>

#include <catch2/catch_amalgamated.hpp>

using namespace pstirling;

TEST_CASE("large-index congruence, single points") {
    DelthmResult r = check_delthm(8, 3, 10);
    CHECK(r.pass);
    CHECK(r.required == 8 - std::max(lg(7ul) + 1, lg(3ul) - 1));

    // delta = 0, x = 0: the two sides are the same rational
    DelthmResult exact = check_delthm(6, 0, 0);
    CHECK(exact.pass);
    CHECK(exact.required == 64);

    // x <= delta keeps the argument-size term out of the modulus
    DelthmResult low = check_delthm(7, 5, 3);
    CHECK(low.pass);
    CHECK(low.required == 7 - (lg(5ul) - 1));
}

TEST_CASE("large-index congruence, small grid") {
    Report rep = check_delthm_grid(8, 7, 16);
    for (const auto& c : rep.checks) INFO(c.params << ": " << c.detail);
    CHECK(rep.all_pass());
}

TEST_CASE("repeating arguments") {
    RepeatingArgument a = make_repeating(5, 3, 9, 7);
    BigInt x = a.materialize();
    CHECK(mod_pow2(x, 5) == 9);
    CHECK(mpz_tstbit(x.get_mpz_t(), 5) == 0);
    // periodicity of the materialized bits
    for (unsigned i = a.i0; i + a.d < a.total_bits; ++i)
        CHECK(mpz_tstbit(x.get_mpz_t(), i) == mpz_tstbit(x.get_mpz_t(), i + a.d));
    CHECK(a.repeating_bits() >= 2 * (7 - 5) - 1);
}

TEST_CASE("repetition-count guard") {
    RepeatingArgument a = make_repeating(5, 2, 3, 6);
    a.total_bits = a.i0 + a.d + 1;  // far below the requirement
    SpecconjResult r = check_specconj(a, 9);
    CHECK_FALSE(r.precondition_ok);
    CHECK(r.note.find("repetition") != std::string::npos);
}

TEST_CASE("index-doubling differences obey the conjectured bound") {
    // one cell of the verified grid plus the block-011 example
    for (unsigned long r : {0ul, 3ul, 17ul, 30ul}) {
        RepeatingArgument a = make_repeating(5, 2, r, 6);
        SpecconjResult res = check_specconj(a, 6);
        REQUIRE(res.precondition_ok);
        CHECK(res.pass);
    }
    RepeatingArgument b = make_repeating(5, 3, 5, 7);
    b.block = {0, 1, 1};
    SpecconjResult res = check_specconj(b, 7);
    REQUIRE(res.precondition_ok);
    CHECK(res.pass);
    CHECK(res.achieved >= 2);
}

TEST_CASE("convergence experiment") {
    // the period-3 argument behind the reference table: diffs match its
    // difference column (4 then 8 for e0 = 4, d = 3)
    RepeatingArgument z3;
    z3.i0 = 2;
    z3.d = 3;
    z3.prefix = 3;  // bits 1,1 below i0
    z3.block = {0, 1, 1};
    z3.total_bits = 40;
    DconjReport rep = check_dconj(z3, 4, 2, 20);
    REQUIRE(rep.diff_nu.size() == 2);
    CHECK(rep.diff_nu[0] == 4);
    CHECK(rep.diff_nu[1] == 8);
    CHECK(rep.monotone);

    // a genuine period-2 argument
    RepeatingArgument p2;
    p2.i0 = 4;
    p2.d = 2;
    p2.prefix = 11;
    p2.block = {0, 1};
    p2.total_bits = 36;
    DconjReport rep3 = check_dconj(p2, 6, 3, 20);
    CHECK(rep3.monotone);
    REQUIRE(rep3.diff_nu.size() == 3);
    CHECK(rep3.diff_nu[0] < rep3.diff_nu[2]);

    // integers converge fast (all-zero repeating tail)
    RepeatingArgument ints;
    ints.i0 = 3;
    ints.d = 2;
    ints.prefix = 5;
    ints.block = {0, 0};
    ints.total_bits = 30;
    DconjReport rep2 = check_dconj(ints, 6, 3, 20);
    CHECK(rep2.monotone);
    for (std::size_t i = 0; i + 1 < rep2.diff_nu.size(); ++i)
        CHECK(rep2.diff_nu[i] < rep2.diff_nu[i + 1]);
}

TEST_CASE("stabilized expansion rows, low range") {
    std::vector<std::pair<unsigned, unsigned>> rows{{4, 4}, {5, 4}, {6, 5}, {7, 5}};
    auto table = limit_table(rows, 12);
    REQUIRE(table.size() == 4);
    CHECK(table[0].bits == "011011101000");
    CHECK(table[1].bits == "001110101111");
    CHECK(table[2].bits == "111101001101");
    CHECK(table[3].bits == "011001110011");
    REQUIRE(table[3].diff_windowed.has_value());
    CHECK(*table[3].diff_windowed == 4);
    CHECK(*table[3].diff_true == 4);
    // the e = 5 row stabilizes one step past the hinted threshold
    CHECK(table[1].n0 == 5);
}
