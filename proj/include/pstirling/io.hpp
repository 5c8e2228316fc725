#ifndef PSTIRLING_IO_HPP
#define PSTIRLING_IO_HPP

// Line-delimited persistence: atlas files, golden zero-class tables,
// and the structural comparison between them.

#include <pstirling/report.hpp>
#include <pstirling/zeros.hpp>

#include <json.hpp>

#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace pstirling {

struct AtlasFileRecord {
    unsigned long n = 0;
    long log_modulus = 0;
    BigInt residue = 0;
    std::string verdict;  // no_zero | zero | split | unresolved
    long v_or_c = 0;
    std::string zero_bits_hex;  // empty when null
    long witness_depth = -1;    // -1 when null
    std::string status;
};

namespace detail {

inline nlohmann::json record_to_json(const AtlasFileRecord& r) {
    nlohmann::json j{{"n", r.n},
                     {"log_modulus", r.log_modulus},
                     {"residue", r.residue.get_str()},
                     {"verdict", r.verdict},
                     {"v_or_c", r.v_or_c},
                     {"status", r.status}};
    if (r.verdict == "zero") {
        j["zero_bits_hex"] = r.zero_bits_hex;
        j["witness_depth"] = r.witness_depth;
    } else {
        j["zero_bits_hex"] = nullptr;
        j["witness_depth"] = nullptr;
    }
    return j;
}

inline void flatten_report(unsigned long n, const ClassReport& rep,
                           std::vector<AtlasFileRecord>& out) {
    AtlasFileRecord r;
    r.n = n;
    r.log_modulus = rep.cls.log_modulus;
    r.residue = rep.cls.residue;
    switch (rep.verdict) {
        case ClassReport::Verdict::CertifiedNoZero:
            r.verdict = "no_zero";
            r.v_or_c = rep.v;
            r.status = "certified(t=" + std::to_string(rep.t_used) + ")";
            break;
        case ClassReport::Verdict::EmpiricalZero:
            r.verdict = "zero";
            r.v_or_c = rep.zero->c;
            r.zero_bits_hex = rep.zero->zero_bits.residue.get_str(16);
            r.witness_depth = rep.zero->witness_depth;
            r.status = rep.zero->status;
            break;
        case ClassReport::Verdict::Split:
            r.verdict = "split";
            r.status = "split";
            break;
        case ClassReport::Verdict::Unresolved:
            r.verdict = "unresolved";
            r.status = rep.reason;
            break;
    }
    out.push_back(r);
    for (const auto& ch : rep.children) flatten_report(n, ch, out);
}

}  // namespace detail

inline std::vector<AtlasFileRecord> atlas_records(const Atlas& atlas) {
    std::vector<AtlasFileRecord> out;
    for (const auto& [n, reports] : atlas.by_n)
        for (const auto& rep : reports) detail::flatten_report(n, rep, out);
    return out;
}

inline void write_atlas_jsonl(const Atlas& atlas, std::ostream& os) {
    for (const auto& r : atlas_records(atlas)) os << detail::record_to_json(r).dump() << "\n";
}

inline std::vector<AtlasFileRecord> read_atlas_jsonl(std::istream& is) {
    std::vector<AtlasFileRecord> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        nlohmann::json j = nlohmann::json::parse(line);
        AtlasFileRecord r;
        r.n = j.at("n").get<unsigned long>();
        r.log_modulus = j.at("log_modulus").get<long>();
        r.residue = BigInt(j.at("residue").get<std::string>());
        r.verdict = j.at("verdict").get<std::string>();
        r.v_or_c = j.at("v_or_c").get<long>();
        r.status = j.value("status", "");
        if (!j.at("zero_bits_hex").is_null()) {
            r.zero_bits_hex = j.at("zero_bits_hex").get<std::string>();
            r.witness_depth = j.at("witness_depth").get<long>();
        }
        out.push_back(r);
    }
    return out;
}

inline std::vector<ZeroRecord> zeros_from_records(const std::vector<AtlasFileRecord>& records,
                                                  unsigned long n) {
    std::vector<ZeroRecord> zs;
    for (const auto& r : records) {
        if (r.n != n || r.verdict != "zero") continue;
        ZeroRecord z;
        z.n = n;
        z.cls = CongruenceClass{r.log_modulus, r.residue};
        z.c = r.v_or_c;
        z.witness_depth = r.witness_depth;
        z.zero_bits = TwoAdic(BigInt(r.zero_bits_hex, 16), r.witness_depth);
        z.status = r.status;
        zs.push_back(z);
    }
    return zs;
}

// ---- golden zero-class tables ----

struct GoldenBox {
    unsigned long n = 0;
    long box_log_modulus = 0;
    long box = 0;  // residue of the box
    std::vector<CongruenceClass> zero_classes;
    std::string marks;
};

inline std::vector<GoldenBox> read_golden_boxes(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open golden file: " + path);
    std::vector<GoldenBox> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        nlohmann::json j = nlohmann::json::parse(line);
        GoldenBox b;
        b.n = j.at("n").get<unsigned long>();
        b.box_log_modulus = j.at("box_log_modulus").get<long>();
        b.box = j.at("box").get<long>();
        for (const auto& z : j.at("zeros"))
            b.zero_classes.push_back(
                CongruenceClass{z.at("log_modulus").get<long>(), BigInt(z.at("residue").get<long>())});
        b.marks = j.value("marks", "");
        out.push_back(b);
    }
    return out;
}

// Structural comparison: every golden class holds exactly one located
// zero, every box's zero count matches, and located zeros never land in
// classes the table leaves empty.
inline Report compare_structure(const std::vector<AtlasFileRecord>& records,
                                const std::vector<GoldenBox>& golden) {
    Report rep;
    std::map<unsigned long, std::vector<const AtlasFileRecord*>> zeros_by_n;
    for (const auto& r : records)
        if (r.verdict == "zero") zeros_by_n[r.n].push_back(&r);

    std::map<unsigned long, bool> n_ok;
    std::map<unsigned long, std::string> n_detail;
    for (const auto& box : golden) {
        bool& ok = n_ok.emplace(box.n, true).first->second;
        auto& zs = zeros_by_n[box.n];
        auto zero_value = [&](const AtlasFileRecord* r) { return BigInt(r->zero_bits_hex, 16); };
        long in_box = 0;
        for (const auto* z : zs)
            if (mod_pow2(zero_value(z), box.box_log_modulus) == box.box) ++in_box;
        if (in_box != static_cast<long>(box.zero_classes.size())) {
            ok = false;
            n_detail[box.n] += "box " + std::to_string(box.box) + ": " + std::to_string(in_box) +
                               " zeros, table has " + std::to_string(box.zero_classes.size()) +
                               "; ";
        }
        for (const auto& cls : box.zero_classes) {
            long cnt = 0;
            for (const auto* z : zs) {
                if (z->witness_depth < cls.log_modulus) continue;
                if (mod_pow2(zero_value(z), cls.log_modulus) == cls.residue) ++cnt;
            }
            if (cnt != 1) {
                ok = false;
                n_detail[box.n] += "class (" + std::to_string(cls.log_modulus) + "," +
                                   cls.residue.get_str() + "): " + std::to_string(cnt) +
                                   " zeros; ";
            }
        }
    }
    for (const auto& [n, ok] : n_ok)
        rep.add("structure", "n=" + std::to_string(n), ok, n_detail[n]);
    return rep;
}

}  // namespace pstirling

#endif
