// Command-line front end: evaluation, atlas building, verification
// suites, limit experiments, golden-table comparison, and persistence.

#include <pstirling/io.hpp>
#include <pstirling/limits.hpp>
#include <pstirling/parallel.hpp>
#include <pstirling/stirling.hpp>
#include <pstirling/verify.hpp>
#include <pstirling/zeros.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace ps = pstirling;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitUnresolved = 3;

struct Range {
    unsigned long lo = 0, hi = 0;
};

Range parse_range(const std::string& s) {
    auto pos = s.find("..");
    Range r;
    if (pos == std::string::npos) {
        r.lo = r.hi = std::stoul(s);
    } else {
        r.lo = std::stoul(s.substr(0, pos));
        r.hi = std::stoul(s.substr(pos + 2));
    }
    if (r.hi < r.lo) throw CLI::ValidationError("range", "empty range " + s);
    return r;
}

std::string data_dir = PSTIRLING_DATA_DIR;

int report_exit(const ps::Report& rep, std::ostream& os) {
    rep.write_jsonl(os);
    return rep.all_pass() ? kExitOk : kExitVerifyFail;
}

ps::Atlas obtain_atlas(const std::string& atlas_path, unsigned long lo, unsigned long hi,
                       const ps::FinderLimits& lim, std::vector<ps::AtlasFileRecord>& records) {
    ps::Atlas atlas;
    if (!atlas_path.empty()) {
        std::ifstream in(atlas_path);
        if (!in) throw std::runtime_error("cannot open atlas file: " + atlas_path);
        records = ps::read_atlas_jsonl(in);
        return atlas;  // caller uses records
    }
    std::string cache_file;
    if (const char* cache = std::getenv("PSTIRLING_CACHE_DIR")) {
        cache_file = std::string(cache) + "/atlas_" + std::to_string(lo) + "_" +
                     std::to_string(hi) + "_d" + std::to_string(lim.witness_depth) + ".jsonl";
        std::ifstream in(cache_file);
        if (in) {
            records = ps::read_atlas_jsonl(in);
            return atlas;
        }
    }
    atlas = ps::build_atlas(lo, hi, lim);
    ps::annotate_theorem_backed(atlas);
    records = ps::atlas_records(atlas);
    if (!cache_file.empty()) {
        std::ofstream out(cache_file);
        if (out) ps::write_atlas_jsonl(atlas, out);
    }
    return atlas;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"2-adic partial Stirling functions: evaluation, zeros, verification"};
    app.set_config("--config");
    app.require_subcommand(1);
    app.add_option("--data-dir", data_dir, "directory with golden/reference data files");

    // ---- eval ----
    auto* eval = app.add_subcommand("eval", "evaluate P_n and relatives");
    unsigned long ev_n = 1;
    std::string ev_x = "0";
    long ev_prec = 64;
    long ev_phi = -1;
    bool ev_stirling = false, ev_uinf = false;
    long ev_pinf = -1;
    eval->add_option("--n", ev_n, "index n");
    eval->add_option("--x", ev_x, "argument x (integer)");
    eval->add_option("--prec", ev_prec, "output precision in bits");
    eval->add_option("--phi", ev_phi, "evaluate the even-offset kernel at this s");
    eval->add_flag("--stirling", ev_stirling, "evaluate S(x,n) exactly");
    eval->add_flag("--uinf", ev_uinf, "odd part of 2^inf! to prec bits");
    eval->add_option("--pinf", ev_pinf, "evaluate the large-index limit at delta");

    // ---- zeros ----
    auto* zeros = app.add_subcommand("zeros", "build a zero atlas");
    std::string zr_range = "5..16";
    long zr_depth = 48, zr_cap = 4096, zr_split = 12;
    std::string zr_out;
    zeros->add_option("--n", zr_range, "index range lo..hi");
    zeros->add_option("--depth", zr_depth, "witness depth in bits");
    zeros->add_option("--cap", zr_cap, "probe escalation cap in bits");
    zeros->add_option("--split-limit", zr_split, "log2 of the deepest split modulus");
    zeros->add_option("--out", zr_out, "output file (default stdout)");

    // ---- compare ----
    auto* compare = app.add_subcommand("compare", "compare an atlas with golden tables");
    std::string cp_atlas, cp_golden;
    compare->add_option("--atlas", cp_atlas, "atlas jsonl file")->required();
    compare->add_option("--golden", cp_golden, "golden jsonl file")->required();

    // ---- verify ----
    auto* verify = app.add_subcommand("verify", "run a verification suite");
    std::string vf_suite;
    verify->add_option("suite", vf_suite, "four|single|double|identities|cgen|p0|per|approx")
        ->required();
    std::string vf_e = "2..8", vf_delta = "1..4", vf_nrange;
    unsigned long vf_nmax = 64;
    long vf_dmax = 6, vf_samples = 1000, vf_xmax = 255, vf_tmax = 20, vf_kmax = 48;
    std::string vf_atlas;
    verify->add_option("--e", vf_e, "exponent range lo..hi");
    verify->add_option("--delta", vf_delta, "offset range lo..hi");
    verify->add_option("--n", vf_nrange, "index range lo..hi");
    verify->add_option("--n-max", vf_nmax, "largest index");
    verify->add_option("--d-max", vf_dmax, "largest d");
    verify->add_option("--k-max", vf_kmax, "largest k");
    verify->add_option("--x-max", vf_xmax, "largest x");
    verify->add_option("--t-max", vf_tmax, "largest t");
    verify->add_option("--samples", vf_samples, "random samples per index");
    verify->add_option("--atlas", vf_atlas, "atlas jsonl file (cgen)");

    // ---- limits ----
    auto* limits = app.add_subcommand("limits", "large-index experiments");
    std::string lm_kind;
    limits->add_option("kind", lm_kind, "table1|delthm|specconj|dconj")->required();
    long lm_bits = 12;
    std::string lm_e = "4..15", lm_d = "2..4", lm_x = "0..64", lm_delta = "0..31";
    unsigned long lm_i0 = 5, lm_e0 = 6, lm_jmax = 3, lm_residues = 16;
    std::string lm_block = "011";
    limits->add_option("--bits", lm_bits, "bits per expansion row");
    limits->add_option("--e", lm_e, "exponent range");
    limits->add_option("--delta", lm_delta, "offset range");
    limits->add_option("--x", lm_x, "argument range");
    limits->add_option("--d", lm_d, "period range");
    limits->add_option("--i0", lm_i0, "first repeating bit position");
    limits->add_option("--e0", lm_e0, "base exponent for the convergence experiment");
    limits->add_option("--jmax", lm_jmax, "number of index-doubling steps");
    limits->add_option("--residues", lm_residues, "residues per grid cell");
    limits->add_option("--block", lm_block, "repeating block, low bit first");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*eval) {
            if (ev_uinf) {
                ps::TwoAdic u = ps::u_2inf(ev_prec);
                std::cout << "residue_hex " << u.residue.get_str(16) << "\n";
                std::cout << "backwards_binary " << ps::backwards_binary(u, ev_prec) << "\n";
                return kExitOk;
            }
            if (ev_phi >= 0) {
                ps::PhiExact p = ps::eval_phi(ev_n, static_cast<unsigned long>(ev_phi));
                std::cout << "numerator " << p.numerator.get_str() << "\n";
                std::cout << "denominator " << ev_n << "!\n";
                std::cout << "nu " << p.val.str() << "\n";
                return kExitOk;
            }
            if (ev_stirling) {
                std::cout << ps::stirling2(std::stoul(ev_x), ev_n).get_str() << "\n";
                return kExitOk;
            }
            ps::TwoAdic v = (ev_pinf >= 0)
                                ? ps::eval_P_inf(static_cast<unsigned long>(ev_pinf),
                                                 std::stol(ev_x), ev_prec)
                                : ps::eval_P(ev_n, ps::BigInt(ev_x), ev_prec);
            std::cout << "residue_hex " << v.residue.get_str(16) << "\n";
            std::cout << "backwards_binary " << ps::backwards_binary(v, v.prec) << "\n";
            std::cout << "nu " << ps::valuation_of(v).str() << "\n";
            return kExitOk;
        }

        if (*zeros) {
            Range r = parse_range(zr_range);
            ps::FinderLimits lim;
            lim.witness_depth = zr_depth;
            lim.cap = zr_cap;
            lim.split_max_log_modulus = zr_split;
            if (lim.cap < lim.start_prec) lim.start_prec = lim.cap;
            if (zr_depth > zr_cap) throw CLI::ValidationError("zeros", "depth must not exceed cap");
            ps::Atlas atlas = ps::build_atlas(r.lo, r.hi, lim);
            ps::annotate_theorem_backed(atlas);
            long unresolved = 0;
            for (unsigned long n = r.lo; n <= r.hi; ++n)
                unresolved += ps::count_zeros(atlas, n).unresolved;
            if (!zr_out.empty()) {
                std::ofstream out(zr_out);
                if (!out) throw std::runtime_error("cannot write " + zr_out);
                ps::write_atlas_jsonl(atlas, out);
            } else {
                ps::write_atlas_jsonl(atlas, std::cout);
            }
            return unresolved ? kExitUnresolved : kExitOk;
        }

        if (*compare) {
            std::ifstream in(cp_atlas);
            if (!in) throw std::runtime_error("cannot open atlas file: " + cp_atlas);
            auto records = ps::read_atlas_jsonl(in);
            auto golden = ps::read_golden_boxes(cp_golden);
            ps::Report rep = ps::compare_structure(records, golden);
            return report_exit(rep, std::cout);
        }

        if (*verify) {
            ps::Report rep;
            if (vf_suite == "four") {
                Range re = parse_range(vf_e), rd = parse_range(vf_delta);
                std::vector<std::pair<unsigned, unsigned>> cells;
                for (unsigned long e = re.lo; e <= re.hi; ++e)
                    for (unsigned long d = rd.lo; d <= rd.hi; ++d) cells.push_back({e, d});
                std::vector<ps::Report> parts(cells.size());
                ps::parallel_for(cells.size(), [&](std::size_t i) {
                    ps::TheoremFourOptions opt;
                    opt.d_max = vf_dmax;
                    parts[i] = ps::verify_theorem_four(cells[i].first, cells[i].second, opt);
                });
                for (auto& p : parts) rep.merge(p);
            } else if (vf_suite == "single" || vf_suite == "double") {
                Range rn = vf_nrange.empty() ? Range{5, vf_nmax} : parse_range(vf_nrange);
                std::vector<unsigned long> ns;
                for (unsigned long n = rn.lo; n <= rn.hi; ++n) ns.push_back(n);
                std::vector<ps::Report> parts(ns.size());
                ps::parallel_for(ns.size(), [&](std::size_t i) {
                    parts[i] = (vf_suite == "single") ? ps::verify_theorem_single(ns[i])
                                                      : ps::verify_theorem_double(ns[i]);
                });
                for (auto& p : parts) rep.merge(p);
            } else if (vf_suite == "identities") {
                ps::IdentityRanges ranges;
                ranges.sumid_n_max = vf_nmax;
                ranges.sumid_d_max = static_cast<unsigned long>(vf_dmax);
                rep = ps::verify_identity_suite(ranges);
            } else if (vf_suite == "cgen") {
                Range rn = vf_nrange.empty() ? Range{1, 32} : parse_range(vf_nrange);
                ps::CorrectionTable corr =
                    ps::load_corrections(data_dir + "/valuation_corrections.json");
                ps::FinderLimits lim;
                std::vector<ps::AtlasFileRecord> records;
                ps::Atlas atlas = obtain_atlas(vf_atlas, rn.lo, rn.hi, lim, records);
                for (unsigned long n = rn.lo; n <= rn.hi; ++n) {
                    auto zrecs = ps::zeros_from_records(records, n);
                    std::vector<const ps::ZeroRecord*> zs;
                    for (auto& z : zrecs) zs.push_back(&z);
                    ps::CgenResult res{};
                    std::mt19937_64 rng(0x5eedull ^ (0x9e3779b97f4a7c15ull * n));
                    for (long i = 0; i < vf_samples; ++i) {
                        ps::BigInt z = ps::BigInt(rng()) % (ps::BigInt(1) << 40);
                        auto rhs = ps::valuation_formula_rhs(n, z, zs, corr);
                        if (!rhs) {
                            ++res.skipped;
                            continue;
                        }
                        ++res.checked;
                        if (!ps::probe_nu(n, z, lim.cap).known_eq(*rhs)) ++res.mismatches;
                    }
                    rep.add("cgen", "n=" + std::to_string(n), res.mismatches == 0,
                            "checked=" + std::to_string(res.checked) +
                                " skipped=" + std::to_string(res.skipped));
                }
            } else if (vf_suite == "p0") {
                bool ok = true;
                std::string detail;
                for (unsigned long n = 1; n <= vf_nmax && ok; ++n)
                    for (long x = 0; x <= vf_xmax; ++x) {
                        ps::Valuation v = ps::probe_nu(n, x, 4096);
                        long b = ps::nu_binomial_poly(ps::BigInt(2 * x) - n - 1,
                                                      static_cast<unsigned long>(n - 1));
                        bool want0 = (b == 0);
                        if (!v.known_ge(0) || want0 != v.known_eq(0)) {
                            ok = false;
                            detail = "n=" + std::to_string(n) + " x=" + std::to_string(x);
                            break;
                        }
                    }
                rep.add("p0", "n<=" + std::to_string(vf_nmax), ok, detail);
            } else if (vf_suite == "per") {
                bool ok = true;
                std::string detail;
                for (unsigned long n = 2; n <= vf_nmax && ok; ++n)
                    for (long t = ps::lg(n); t <= vf_tmax; ++t)
                        for (ps::BigInt x : std::vector<ps::BigInt>{0, 1, 5, 37, 1000}) {
                            long prec = t + 4;
                            ps::TwoAdic a = ps::eval_P(n, x + (ps::BigInt(1) << t), prec);
                            ps::TwoAdic b = ps::eval_P(n, x, prec);
                            if (!ps::valuation_of(a - b).known_ge(t + 1 - ps::lg(n))) {
                                ok = false;
                                detail = "n=" + std::to_string(n) + " t=" + std::to_string(t);
                                break;
                            }
                        }
                rep.add("per", "n<=" + std::to_string(vf_nmax), ok, detail);
            } else if (vf_suite == "approx") {
                bool ok = true;
                std::string detail;
                for (unsigned long n = 1; n <= std::min(vf_nmax, 24ul) && ok; ++n) {
                    ps::BigInt f;
                    mpz_fac_ui(f.get_mpz_t(), n);
                    for (unsigned long x = n; x <= n + 24; ++x) {
                        mpq_class p(ps::eval_T(n, x));
                        p /= mpq_class(f);
                        if (n % 2 == 0) p = -p;
                        mpq_class d = p - mpq_class(ps::stirling2(x, n));
                        if (d == 0) continue;
                        long v = ps::nu(d.get_num()) - ps::nu(d.get_den());
                        if (v < static_cast<long>(x) - ps::nu_factorial(n)) {
                            ok = false;
                            detail = "n=" + std::to_string(n) + " x=" + std::to_string(x);
                            break;
                        }
                    }
                }
                rep.add("approx", "n<=" + std::to_string(vf_nmax), ok, detail);
            } else {
                std::cerr << "unknown suite: " << vf_suite << "\n";
                return kExitUsage;
            }
            return report_exit(rep, std::cout);
        }

        if (*limits) {
            if (lm_kind == "table1") {
                Range re = parse_range(lm_e);
                // stabilization thresholds come packaged with the golden rows
                auto golden_path = data_dir + "/limit_table.jsonl";
                std::ifstream in(golden_path);
                std::vector<std::pair<unsigned, unsigned>> rows;
                std::map<unsigned, std::pair<std::string, std::optional<long>>> want;
                if (in) {
                    std::string line;
                    while (std::getline(in, line)) {
                        if (line.empty() || line[0] == '#') continue;
                        auto j = nlohmann::json::parse(line);
                        unsigned e = j.at("e").get<unsigned>();
                        if (e < re.lo || e > re.hi) continue;
                        rows.push_back({e, j.at("n0").get<unsigned>()});
                        want[e] = {j.at("bits").get<std::string>(),
                                   j.at("diff").is_null()
                                       ? std::optional<long>{}
                                       : std::optional<long>{j.at("diff").get<long>()}};
                    }
                }
                auto table = ps::limit_table(rows, lm_bits);
                bool all = true;
                for (const auto& row : table) {
                    std::string diff = row.diff_windowed
                                           ? std::to_string(*row.diff_windowed) +
                                                 " (true " + std::to_string(*row.diff_true) + ")"
                                           : "";
                    bool ok = true;
                    if (want.count(row.e)) {
                        ok = want[row.e].first.substr(0, lm_bits) ==
                             row.bits.substr(0, std::min<std::size_t>(row.bits.size(), lm_bits));
                        if (want[row.e].second && row.diff_windowed)
                            ok = ok && *want[row.e].second == *row.diff_windowed;
                    }
                    all = all && ok;
                    std::cout << "e=" << row.e << " n0=" << row.n0 << " " << row.bits << " "
                              << diff << (ok ? "" : "  MISMATCH") << "\n";
                }
                return all ? kExitOk : kExitVerifyFail;
            }
            if (lm_kind == "delthm") {
                Range re = parse_range(lm_e), rd = parse_range(lm_delta), rx = parse_range(lm_x);
                ps::Report rep;
                for (unsigned long e = re.lo; e <= re.hi; ++e) {
                    bool ok = true;
                    std::string detail;
                    long worst = std::numeric_limits<long>::max();
                    for (unsigned long d = rd.lo; d <= std::min(rd.hi, (1ul << e) - 1); ++d)
                        for (unsigned long x = rx.lo; x <= rx.hi; ++x) {
                            auto r = ps::check_delthm(e, d, x);
                            if (!r.pass) {
                                ok = false;
                                detail = "delta=" + std::to_string(d) + " x=" + std::to_string(x);
                            }
                            if (r.required >= 1) worst = std::min(worst, r.achieved - r.required);
                        }
                    rep.add("delthm", "e=" + std::to_string(e), ok,
                            ok ? "worst margin " + std::to_string(worst) : detail);
                }
                return report_exit(rep, std::cout);
            }
            if (lm_kind == "specconj") {
                Range re = parse_range(lm_e), rd = parse_range(lm_d);
                std::vector<std::pair<unsigned, unsigned>> cells;
                for (unsigned long d = rd.lo; d <= rd.hi; ++d)
                    for (unsigned long e = re.lo; e <= re.hi; ++e)
                        cells.push_back({static_cast<unsigned>(d), static_cast<unsigned>(e)});
                std::sort(cells.begin(), cells.end(), [](auto a, auto b) {
                    return a.first + a.second > b.first + b.second;
                });
                std::vector<unsigned long> rs;
                for (unsigned long rr = 0; rr < lm_residues; ++rr) rs.push_back(rr);
                std::vector<ps::SpecconjCell> out(cells.size());
                ps::parallel_for(cells.size(), [&](std::size_t i) {
                    out[i] = ps::check_specconj_cell(static_cast<unsigned>(lm_i0), cells[i].first,
                                                     cells[i].second, rs);
                });
                ps::Report rep;
                for (std::size_t i = 0; i < cells.size(); ++i) {
                    long tested = 0;
                    for (const auto& r : out[i].results)
                        if (r.precondition_ok) ++tested;
                    rep.add("specconj",
                            "i0=" + std::to_string(lm_i0) + " d=" + std::to_string(cells[i].first) +
                                " e=" + std::to_string(cells[i].second),
                            out[i].all_pass && tested == static_cast<long>(rs.size()),
                            "residues=" + std::to_string(tested) + " worst margin " +
                                std::to_string(out[i].worst_margin));
                }
                return report_exit(rep, std::cout);
            }
            if (lm_kind == "dconj") {
                Range rd = parse_range(lm_d);
                ps::Report rep;
                for (unsigned long d = rd.lo; d <= rd.hi; ++d) {
                    ps::RepeatingArgument a;
                    a.i0 = static_cast<unsigned>(lm_i0);
                    a.d = static_cast<unsigned>(d);
                    a.prefix = 5 % (ps::BigInt(1) << lm_i0);
                    a.block.assign(d, 0);
                    for (std::size_t i = 0; i < lm_block.size() && i < d; ++i)
                        a.block[i] = lm_block[i] == '1' ? 1 : 0;
                    a.block[0] = 0;
                    a.total_bits = a.i0 + 2 * a.d;
                    auto repd = ps::check_dconj(a, static_cast<unsigned>(lm_e0),
                                                static_cast<unsigned>(lm_jmax));
                    std::string seq;
                    for (long v : repd.diff_nu) seq += std::to_string(v) + " ";
                    rep.add("dconj", "d=" + std::to_string(d) + " e0=" + std::to_string(lm_e0),
                            repd.monotone, "diff nu: " + seq + "(truncation " +
                                               std::to_string(repd.truncation_bits) + " bits)");
                }
                return report_exit(rep, std::cout);
            }
            std::cerr << "unknown limits kind: " << lm_kind << "\n";
            return kExitUsage;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
