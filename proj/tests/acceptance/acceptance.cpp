// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.
#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "fmgram/contamination.hpp"
#include "fmgram/index_store.hpp"
#include "fmgram/query.hpp"
#include "oracles.hpp"

using namespace fmgram;
namespace fs = std::filesystem;

namespace {

// Tolerances and sizes.
constexpr double kRatioLo = 0.38, kRatioHi = 0.52;
constexpr double kBitsLo = 1.8, kBitsHi = 2.6;
constexpr uint64_t kMinEnglishBytes = 100'000'000;
constexpr int kOracleCorpora = 100;
constexpr int kOraclePatterns = 1000;
constexpr uint64_t kOracleMaxN = 64 * 1024;
constexpr double kOracleBudgetSeconds = 300;
constexpr int kShardQueries = 1000;
constexpr uint64_t kShardCorpusBytes = 400'000;
constexpr uint64_t kRoundTripBytes = 10'000'000;
constexpr uint64_t kLatencyTrials = 100;
constexpr double kLatencyGrowthLimit = 2.0;
constexpr double kSpeedupMin = 2.5;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int prec = 3) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(prec) << v;
    return s.str();
}

struct Context {
    fs::path work;
    std::string english_path;
    std::vector<RawDocument> english;
    uint64_t english_bytes = 0;
    // Filled by criterion 1, reused by 2, 8 and 10.
    std::optional<CorpusManifest> english_manifest;
    double english_build_t1 = 0;
};

fs::path fresh(const Context& cx, const std::string& name) {
    fs::path p = cx.work / name;
    fs::remove_all(p);
    return p;
}

uint64_t text_bytes(std::span<const RawDocument> docs) {
    uint64_t b = 0;
    for (const auto& d : docs) b += d.text.size();
    return b;
}

/// Space-separated words drawn from a fixed vocabulary.
std::vector<RawDocument> word_corpus(uint64_t target_bytes, uint64_t seed) {
    static const std::vector<std::string> words = {
        "river", "stone",  "light",  "quiet", "morning", "paper", "glass",   "field",  "north", "winter",
        "copper", "garden", "signal", "harbor", "ember",  "thread", "the",    "of",     "and",   "to",
        "a",     "in",     "is",     "was",   "for",     "on",    "with",    "as",     "by",    "at",
        "market", "letter", "window", "bridge", "forest", "valley", "engine", "silver", "orange", "pencil"};
    std::mt19937_64 rng(seed);
    std::vector<RawDocument> docs;
    uint64_t total = 0;
    while (total < target_bytes) {
        std::string text;
        uint64_t len = 200 + rng() % 4000;
        while (text.size() < len) {
            if (!text.empty()) text += (rng() % 12 == 0) ? ". " : " ";
            text += words[rng() % words.size()];
        }
        total += text.size() + 1;
        docs.push_back({std::move(text), {{"n", std::to_string(docs.size())}}});
    }
    return docs;
}

// ----- 1, 2, 10: English corpus size and build speed -----

Outcome english_ratio(Context& cx) {
    if (cx.english.empty()) return {false, "no English corpus given (--english-corpus)"};
    if (cx.english_bytes < kMinEnglishBytes)
        return {false, "English corpus has " + std::to_string(cx.english_bytes) + " text bytes, need >= 100 MB"};
    BuildOptions opt;
    opt.fm = {32, 64, 1};
    opt.input_bytes = cx.english_bytes;
    auto t0 = std::chrono::steady_clock::now();
    auto m = build_corpus(cx.english, fresh(cx, "english_t1"), opt);
    cx.english_build_t1 = seconds_since(t0);
    cx.english_manifest = m;
    double ratio = static_cast<double>(m.index_bytes()) / static_cast<double>(m.input_bytes);
    return {ratio >= kRatioLo && ratio <= kRatioHi,
            "ratio " + fmt(ratio, 4) + " (index " + std::to_string(m.index_bytes()) + " B / corpus " +
                std::to_string(m.input_bytes) + " B), build " + fmt(cx.english_build_t1, 1) + " s"};
}

Outcome english_entropy(Context& cx) {
    if (!cx.english_manifest) return {false, "criterion 1 did not produce an English index"};
    auto ci = CorpusIndex::open(cx.work / "english_t1");
    uint64_t payload = 0, n = 0;
    for (size_t s = 0; s < ci->shard_count(); ++s) {
        const auto& fm = ci->shard(s).text();
        payload += fm.wavelet().payload_bits();
        n += fm.size();
    }
    double bits = static_cast<double>(payload) / static_cast<double>(n);
    return {bits >= kBitsLo && bits <= kBitsHi, fmt(bits, 4) + " wavelet payload bits per BWT symbol"};
}

Outcome build_speedup(Context& cx) {
    if (!cx.english_manifest) return {false, "criterion 1 did not produce an English index"};
    BuildOptions opt;
    opt.fm = {32, 64, 8};
    opt.input_bytes = cx.english_bytes;
    auto t0 = std::chrono::steady_clock::now();
    build_corpus(cx.english, fresh(cx, "english_t8"), opt);
    double t8 = seconds_since(t0);
    double speedup = cx.english_build_t1 / t8;
    std::string detail = "threads 1: " + fmt(cx.english_build_t1, 1) + " s, threads 8: " + fmt(t8, 1) +
                         " s, speedup " + fmt(speedup, 2) + "x on " + std::to_string(default_threads()) +
                         " hardware thread(s)";
    bool same = true;
    for (const auto& s : cx.english_manifest->shards) {
        std::ifstream a(cx.work / "english_t1" / s.file, std::ios::binary), b(cx.work / "english_t8" / s.file, std::ios::binary);
        same = same && std::equal(std::istreambuf_iterator<char>(a), {}, std::istreambuf_iterator<char>(b), {});
    }
    detail += same ? ", outputs identical" : ", OUTPUTS DIFFER";
    fs::remove_all(cx.work / "english_t8");
    return {speedup >= kSpeedupMin && same, detail};
}

// ----- 3: random corpora against brute force -----

struct OracleTally {
    uint64_t patterns = 0, present = 0, located = 0, slices = 0;
    std::string problem;
};

OracleTally check_random_corpus(int c, uint64_t seed) {
    const unsigned sizes[] = {2, 4, 26, 256};
    const uint32_t rates[] = {4, 8, 16, 32};
    std::mt19937_64 rng(seed);
    OracleTally t;
    auto alpha = oracle::alphabet(sizes[c % 4]);
    uint64_t n = 1 + rng() % (kOracleMaxN - 1);
    std::string text = oracle::random_text(rng, n - 1, alpha);
    uint32_t a = rates[(c / 4) % 4];
    FmIndex fm = FmIndex::build(text, {a, 2 * a, 1});
    auto where = "corpus " + std::to_string(c) + " (alphabet " + std::to_string(alpha.size()) + ", n " +
                 std::to_string(text.size()) + ")";
    if (fm.size() != text.size()) return {0, 0, 0, 0, where + ": size mismatch"};
    for (int p = 0; p < kOraclePatterns; ++p) {
        std::string q = oracle::random_pattern(rng, text, alpha, p % 2 == 0);
        auto expect = oracle::naive_positions(text, q);
        SaRange r = fm.find(q);
        if (r.count() != expect.size()) {
            t.problem = where + " pattern " + std::to_string(p) + ": count " + std::to_string(r.count()) + " vs " +
                        std::to_string(expect.size());
            return t;
        }
        std::vector<uint64_t> got;
        got.reserve(r.count());
        for (uint64_t i = r.lo; i < r.hi; ++i) got.push_back(fm.locate(i));
        std::sort(got.begin(), got.end());
        if (got != expect) {
            t.problem = where + " pattern " + std::to_string(p) + ": located positions differ";
            return t;
        }
        t.located += got.size();
        t.present += !expect.empty();
        ++t.patterns;

        uint64_t start = rng() % text.size();
        uint64_t len = rng() % std::min<uint64_t>(200, text.size() - start + 1);
        if (fm.reconstruct(start, len) != text.substr(start, len)) {
            t.problem = where + ": slice [" + std::to_string(start) + "," + std::to_string(start + len) + ") differs";
            return t;
        }
        ++t.slices;
    }
    return t;
}

Outcome oracle_equivalence(Context&) {
    std::mt19937_64 seeder(20240611);
    std::vector<uint64_t> seeds(kOracleCorpora);
    for (auto& s : seeds) s = seeder();
    std::vector<OracleTally> tallies(kOracleCorpora);
    unsigned threads = default_threads();
    auto t0 = std::chrono::steady_clock::now();
    parallel_for(kOracleCorpora, threads, [&](uint64_t c) { tallies[c] = check_random_corpus(static_cast<int>(c), seeds[c]); });
    double secs = seconds_since(t0);
    OracleTally sum;
    for (const auto& t : tallies) {
        if (!t.problem.empty() && sum.problem.empty()) sum.problem = t.problem;
        sum.patterns += t.patterns;
        sum.present += t.present;
        sum.located += t.located;
        sum.slices += t.slices;
    }
    if (!sum.problem.empty()) return {false, sum.problem};
    return {secs <= kOracleBudgetSeconds,
            std::to_string(kOracleCorpora) + " corpora, " + std::to_string(sum.patterns) + " patterns (" +
                std::to_string(sum.present) + " present), " + std::to_string(sum.located) + " positions, " +
                std::to_string(sum.slices) + " slices in " + fmt(secs, 1) + " s on " + std::to_string(threads) +
                " thread(s), budget " + fmt(kOracleBudgetSeconds, 0) + " s"};
}

// ----- 4: banana -----

Outcome banana(Context& cx) {
    std::string t("banana\0", 7);
    std::vector<std::string> problems;
    auto check = [&](bool ok, const std::string& what) {
        if (!ok) problems.push_back(what);
    };
    const std::vector<uint64_t> sa = {6, 5, 3, 1, 0, 4, 2};
    check(oracle::naive_suffix_array(t) == sa, "brute-force SA");
    FmIndex fm = FmIndex::build(t, {3, 4, 1});
    std::vector<uint64_t> located;
    std::string bwt;
    for (uint64_t i = 0; i < fm.size(); ++i) {
        located.push_back(fm.locate(i));
        bwt.push_back(static_cast<char>(fm.bwt_at(i)));
    }
    check(located == sa, "SA");
    check(bwt == std::string("annb\0aa", 7), "BWT");
    SaRange r = fm.find("ana");
    check(r == SaRange{2, 4}, "find(ana)");
    std::set<uint64_t> pos;
    for (uint64_t i = r.lo; i < r.hi; ++i) pos.insert(fm.locate(i));
    check(pos == std::set<uint64_t>{1, 3}, "positions");
    check(fm.reconstruct(fm.locate(r.lo + 1) - 1, 3 + 2) == "banan", "context-1 reconstruction");

    auto dir = fresh(cx, "banana");
    std::vector<RawDocument> docs = {{"banana", {}}};
    build_corpus(docs, dir, {});
    auto ci = CorpusIndex::open(dir);
    check(count(*ci, "ana").total == 2, "corpus count");
    auto hits = find_docs(*ci, "ana", 10);
    check(hits.size() == 1 && hits[0].text == "banana", "corpus search");
    std::string detail = "SA=[6,5,3,1,0,4,2] BWT=annb\\0aa find(ana)=[2,4) positions {1,3} context \"banan\"";
    if (!problems.empty()) {
        detail = "mismatch:";
        for (auto& p : problems) detail += " " + p;
    }
    return {problems.empty(), detail};
}

// ----- 5: shard plans -----

uint64_t target_for(std::span<const RawDocument> docs, uint64_t k) {
    std::vector<uint64_t> sizes;
    for (const auto& d : docs) sizes.push_back(d.text.size());
    uint64_t total = text_bytes(docs);
    uint64_t largest = *std::max_element(sizes.begin(), sizes.end());
    for (uint64_t t = std::max(largest, (total + k - 1) / k);; t += std::max<uint64_t>(1, total / 1000))
        if (plan_shards(sizes, t).shard_count() <= k) return t;
}

/// Documents of pseudo-words over a generated vocabulary, so that most
/// substrings occur in only a few documents.
std::vector<RawDocument> vocab_corpus(uint64_t target_bytes, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::string> vocab(3000);
    for (auto& w : vocab)
        for (uint64_t len = 2 + rng() % 8; w.size() < len;) w.push_back(static_cast<char>('a' + rng() % 26));
    std::vector<RawDocument> docs;
    uint64_t total = 0;
    while (total < target_bytes) {
        std::string text;
        uint64_t len = 100 + rng() % 2000;
        while (text.size() < len) {
            if (!text.empty()) text += (rng() % 15 == 0) ? ". " : " ";
            text += vocab[rng() % vocab.size()];
        }
        total += text.size() + 1;
        docs.push_back({std::move(text), {{"n", std::to_string(docs.size())}}});
    }
    return docs;
}

Outcome shard_equivalence(Context& cx) {
    auto docs = vocab_corpus(kShardCorpusBytes, 5);
    std::string joined;
    for (const auto& d : docs) joined += d.text + '\xFF';

    std::mt19937_64 rng(55);
    std::vector<std::string> queries;
    for (int i = 0; i < kShardQueries; ++i) {
        if (i % 10 == 9) {
            queries.push_back("zq" + std::to_string(rng()));
            continue;
        }
        const auto& d = docs[rng() % docs.size()].text;
        uint64_t len = 1 + rng() % std::min<uint64_t>(40, d.size());
        queries.push_back(d.substr(rng() % (d.size() - len + 1), len));
    }

    // Every matching document is requested, with no per-shard scan cap.
    QueryOptions all;
    all.scan_limit = ~uint64_t{0};
    std::vector<uint64_t> ks = {1, 2, 4, 8};
    std::vector<std::vector<uint64_t>> totals(ks.size());
    std::vector<std::vector<std::multiset<std::string>>> hit_sets(ks.size());
    std::vector<uint64_t> shard_counts;
    for (size_t ki = 0; ki < ks.size(); ++ki) {
        BuildOptions opt;
        opt.fm = {32, 64, 1};
        opt.shard_bytes = target_for(docs, ks[ki]);
        auto dir = fresh(cx, "shards_k" + std::to_string(ks[ki]));
        build_corpus(docs, dir, opt);
        auto ci = CorpusIndex::open(dir);
        shard_counts.push_back(ci->shard_count());
        for (const auto& q : queries) {
            totals[ki].push_back(count(*ci, q).total);
            std::multiset<std::string> texts;
            for (const auto& h : find_docs(*ci, q, docs.size(), all)) texts.insert(h.text);
            hit_sets[ki].push_back(std::move(texts));
        }
        fs::remove_all(dir);
    }

    uint64_t mismatches = 0, nonzero = 0, widest = 0;
    std::string first_problem;
    for (size_t qi = 0; qi < queries.size(); ++qi) {
        const auto& q = queries[qi];
        uint64_t expect = oracle::naive_count(joined, q);
        std::multiset<std::string> matching;
        for (const auto& d : docs)
            if (d.text.find(q) != std::string::npos) matching.insert(d.text);
        nonzero += expect > 0;
        widest = std::max<uint64_t>(widest, matching.size());
        for (size_t ki = 0; ki < ks.size(); ++ki) {
            bool ok = totals[ki][qi] == expect && totals[ki][qi] == totals[0][qi] &&
                      hit_sets[ki][qi] == hit_sets[0][qi] && hit_sets[ki][qi] == matching;
            if (!ok) {
                ++mismatches;
                if (first_problem.empty())
                    first_problem = "query " + std::to_string(qi) + " k=" + std::to_string(ks[ki]);
            }
        }
    }
    std::string plans;
    for (size_t i = 0; i < ks.size(); ++i) plans += (i ? "," : "") + std::to_string(shard_counts[i]);
    bool plans_ok = shard_counts == std::vector<uint64_t>(ks.begin(), ks.end());
    std::string detail = std::to_string(queries.size()) + " queries over " + std::to_string(docs.size()) +
                         " documents (" + std::to_string(nonzero) + " present, up to " + std::to_string(widest) +
                         " matching documents) with shard counts {" + plans + "}, " + std::to_string(mismatches) +
                         " mismatches";
    if (!first_problem.empty()) detail += ", first at " + first_problem;
    return {mismatches == 0 && plans_ok, detail};
}

// ----- 6: mixed-language round trip -----

Outcome round_trip(Context& cx) {
    static const std::vector<std::string> pool = {
        "the",   "quick",  "brown", "fox",    "naïve", "café",  "Straße", "über",  "ñandú", "élève",
        "мир",   "привет", "книга", "γλώσσα", "λόγος", "日本語", "中文",   "汉字",  "한국어", "سلام",
        "שלום",  "हिन्दी",  "ไทย",   "🙂",    "🚀",    "∑∫",    "Ωmega",  "tab\t", "line\n", "nul\u0001"};
    std::mt19937_64 rng(66);
    auto input = cx.work / "mixed.jsonl";
    std::vector<std::string> raw;
    {
        std::ofstream out(input, std::ios::binary);
        uint64_t total = 0;
        while (total < kRoundTripBytes) {
            std::string text = "⟦" + std::to_string(raw.size()) + "⟧ ";
            uint64_t len = 30 + rng() % 5000;
            while (text.size() < len) {
                text += pool[rng() % pool.size()];
                if (rng() % 50 == 0) text.push_back('\0');
                text += ' ';
            }
            total += text.size();
            out << nlohmann::json({{"text", text}, {"meta", {{"i", raw.size()}}}}).dump() << "\n";
            raw.push_back(std::move(text));
        }
    }
    auto docs = read_jsonl(input.string());
    BuildOptions opt;
    opt.fm = {32, 64, 1};
    opt.shard_bytes = 3'000'000;
    auto dir = fresh(cx, "mixed_idx");
    build_corpus(docs, dir, opt);
    auto ci = CorpusIndex::open(dir);

    uint64_t bad = 0, long_docs = 0, bytes = 0, with_nul = 0;
    for (size_t i = 0; i < raw.size(); ++i) {
        Bytes expect = sanitize_document(raw[i]);
        with_nul += raw[i].find('\0') != std::string::npos;
        long_docs += expect.size() >= 1000;
        bytes += expect.size();
        auto hits = find_docs(*ci, "⟦" + std::to_string(i) + "⟧", 1);
        if (hits.size() != 1 || hits[0].text != expect || hits[0].meta.at("i") != std::to_string(i)) ++bad;
    }
    fs::remove_all(dir);
    fs::remove(input);
    return {bad == 0, std::to_string(raw.size()) + " documents (" + std::to_string(bytes) + " B, " +
                          std::to_string(long_docs) + " reconstructed in 10 chunks, " + std::to_string(with_nul) +
                          " with sanitized bytes), " + std::to_string(bad) + " mismatches across " +
                          std::to_string(ci->shard_count()) + " shards"};
}

// ----- 7: determinism -----

Outcome determinism(Context& cx) {
    auto docs = word_corpus(4'000'000, 7);
    std::vector<std::pair<std::string, unsigned>> runs = {{"det_a", 1}, {"det_b", 1}, {"det_c", 8}};
    CorpusManifest m;
    for (const auto& [name, threads] : runs) {
        BuildOptions opt;
        opt.fm = {32, 64, threads};
        opt.shard_bytes = 1'000'000;
        opt.name = "det";
        m = build_corpus(docs, fresh(cx, name), opt);
    }
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    uint64_t differing = 0;
    for (const auto& s : m.shards) {
        std::string a = slurp(cx.work / "det_a" / s.file);
        differing += a != slurp(cx.work / "det_b" / s.file);
        differing += a != slurp(cx.work / "det_c" / s.file);
    }
    differing += slurp(cx.work / "det_a" / "manifest.json") != slurp(cx.work / "det_c" / "manifest.json");
    for (const auto& [name, threads] : runs) fs::remove_all(cx.work / name);
    return {differing == 0, std::to_string(m.shards.size()) + " shard files compared across 2 runs at threads 1 and " +
                                "one at threads 8, " + std::to_string(differing) + " differ"};
}

// ----- 8: latency shape -----

std::vector<double> count_means(const CorpusIndex& ci, std::vector<uint64_t> lengths, uint64_t seed) {
    BenchSpec spec;
    spec.query_lengths = std::move(lengths);
    spec.context_lengths = {};
    spec.trials = kLatencyTrials;
    spec.seed = seed;
    spec.threads = 1;
    bench(ci, spec);  // warm the page cache
    std::vector<double> out;
    for (const auto& row : bench(ci, spec)) out.push_back(row.mean_ms);
    return out;
}

Outcome latency_shape(Context& cx) {
    fs::path big, small;
    std::string source;
    if (cx.english_manifest) {
        big = cx.work / "english_t1";
        uint64_t quarter = cx.english_bytes / 4, acc = 0;
        size_t cut = 0;
        while (cut < cx.english.size() && acc < quarter) acc += cx.english[cut++].text.size();
        BuildOptions opt;
        opt.fm = {32, 64, 1};
        small = fresh(cx, "english_quarter");
        build_corpus(std::span(cx.english).first(cut), small, opt);
        source = "English corpus and its first quarter";
    } else {
        auto docs = word_corpus(16'000'000, 8);
        BuildOptions opt;
        opt.fm = {32, 64, 1};
        big = fresh(cx, "latency_big");
        build_corpus(docs, big, opt);
        small = fresh(cx, "latency_small");
        build_corpus(std::span(docs).first(docs.size() / 4), small, opt);
        source = "synthetic 16 MB corpus and its first quarter";
    }
    auto big_ci = CorpusIndex::open(big);
    auto small_ci = CorpusIndex::open(small);
    auto means = count_means(*big_ci, {1, 10, 100, 1000}, 81);
    bool monotone = std::is_sorted(means.begin(), means.end());
    double at10_small = count_means(*small_ci, {10}, 82)[0];
    double at10_big = count_means(*big_ci, {10}, 82)[0];
    double growth = at10_big / at10_small;
    std::string detail = source + ": mean ms at |q|=1,10,100,1000: ";
    for (size_t i = 0; i < means.size(); ++i) detail += (i ? ", " : "") + fmt(means[i], 4);
    detail += "; |q|=10 grows " + fmt(growth, 2) + "x for " +
              fmt(static_cast<double>(big_ci->total_bytes()) / static_cast<double>(small_ci->total_bytes()), 2) +
              "x text";
    return {monotone && growth < kLatencyGrowthLimit, detail};
}

// ----- 9: contamination -----

/// Windows by ASCII word starts; the texts built below are ASCII.
std::vector<std::string> ascii_windows(const std::string& t) {
    std::vector<std::string> w;
    if (t.size() < kWindowChars) return {t};
    for (size_t i = 0; i + kWindowChars <= t.size(); ++i)
        if (t[i] != ' ' && (i == 0 || t[i - 1] == ' ')) w.push_back(t.substr(i, kWindowChars));
    if (w.empty()) w.push_back(t);
    return w;
}

Outcome contamination(Context& cx) {
    auto docs = word_corpus(1'000'000, 9);
    std::string joined;
    for (const auto& d : docs) joined += d.text + '\xFF';
    std::mt19937_64 rng(99);

    // A 50-byte stretch of corpus text starting at a word.
    auto corpus_window = [&] {
        for (;;) {
            const auto& d = docs[rng() % docs.size()].text;
            size_t p = rng() % d.size();
            p = d.find(' ', p);
            if (p == std::string::npos || p + 1 + kWindowChars > d.size()) continue;
            std::string w = d.substr(p + 1, kWindowChars);
            if (w.front() != ' ' && w.find("  ") == std::string::npos) return w;
        }
    };
    auto novel = [&](size_t len) {
        std::string s;
        while (s.size() < len) s += (s.empty() ? "" : " ") + std::string("zyq") + std::to_string(rng() % 100000);
        return s.substr(0, len);
    };

    // Every entry has exactly two windows: "xx " + 50 chars, starting at 0 and 3.
    const int total = 200, planted = 20, half = 10;
    std::vector<BenchmarkEntry> entries;
    for (int i = 0; i < total; ++i) {
        std::string text;
        if (i < planted) {
            for (;;) {
                const auto& d = docs[rng() % docs.size()].text;
                size_t p = d.find(' ', rng() % d.size());
                if (p == std::string::npos || p + 1 + kWindowChars + 3 > d.size()) continue;
                text = d.substr(p + 1, kWindowChars + 3);
                if (text[2] == ' ' && text[0] != ' ' && text[1] != ' ' && text[3] != ' ') break;
            }
        } else if (i < planted + half) {
            text = "zq " + corpus_window();
        } else {
            text = "zq " + novel(kWindowChars);
            if (text.back() == ' ') text.back() = 'x';
        }
        entries.push_back({"synthetic", std::to_string(i), "question", i % 2 ? "odd" : "even", text});
    }
    std::shuffle(entries.begin(), entries.end(), rng);

    auto dir = fresh(cx, "contam_idx");
    BuildOptions opt;
    opt.fm = {32, 64, 1};
    build_corpus(docs, dir, opt);
    auto ci = CorpusIndex::open(dir);
    auto rep = audit_benchmark(*ci, entries);

    std::map<std::string, const BenchmarkEntry*> by_id;
    for (const auto& e : entries) by_id[e.id] = &e;
    uint64_t eta_mismatch = 0, two_windows = 0;
    for (const auto& r : rep.entries) {
        auto windows = ascii_windows(by_id.at(r.id)->text);
        uint64_t hits = 0;
        for (const auto& w : windows) hits += joined.find(w) != std::string::npos;
        two_windows += windows.size() == 2;
        double eta = static_cast<double>(hits) / static_cast<double>(windows.size());
        if (r.substrings != windows.size() || r.hits != hits || r.eta != eta) ++eta_mismatch;
    }
    fs::remove_all(dir);
    bool ok = rep.sampled_size == static_cast<uint64_t>(total) && rep.dirty_rate == 0.10 &&
              rep.suspicious_rate == 0.05 && eta_mismatch == 0;
    return {ok, "dirtyRate " + fmt(rep.dirty_rate, 4) + ", suspiciousRate " + fmt(rep.suspicious_rate, 4) + " over " +
                    std::to_string(rep.sampled_size) + " entries (" + std::to_string(two_windows) +
                    " with two windows), " + std::to_string(eta_mismatch) + " eta mismatches"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fmgram acceptance suite"};
    Context cx;
    std::string work = "acceptance_work";
    std::vector<int> only;
    app.add_option("--english-corpus", cx.english_path, "JSONL English corpus of at least 100 MB");
    app.add_option("--work-dir", work, "Scratch directory");
    app.add_option("--only", only, "Run only these criteria");
    CLI11_PARSE(app, argc, argv);
    cx.work = work;
    fs::create_directories(cx.work);
    if (!cx.english_path.empty()) {
        try {
            cx.english = read_jsonl(cx.english_path);
            cx.english_bytes = text_bytes(cx.english);
        } catch (const std::exception& e) {
            std::cerr << "cannot read English corpus: " << e.what() << "\n";
        }
    }

    struct Criterion {
        int id;
        const char* title;
        Outcome (*run)(Context&);
    };
    // Order matters: 2, 8 and 10 reuse the index built by 1.
    const std::vector<Criterion> criteria = {
        {1, "compression ratio", english_ratio},
        {2, "wavelet bits per symbol", english_entropy},
        {3, "oracle equivalence", oracle_equivalence},
        {4, "banana golden fixture", banana},
        {5, "shard equivalence", shard_equivalence},
        {6, "mixed-language round trip", round_trip},
        {7, "deterministic shard files", determinism},
        {8, "count latency shape", latency_shape},
        {9, "contamination rates", contamination},
        {10, "threads 8 vs 1 build speedup", build_speedup},
    };
    std::map<int, Outcome> results;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        Outcome o;
        auto t0 = std::chrono::steady_clock::now();
        try {
            o = c.run(cx);
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        results[c.id] = o;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " " << c.title << ": " << o.detail << " ["
                  << fmt(seconds_since(t0), 1) << " s]" << std::endl;
    }
    fs::remove_all(cx.work / "english_t1");
    fs::remove_all(cx.work / "english_quarter");
    int failed = 0;
    for (const auto& [id, o] : results) failed += !o.pass;
    std::cout << results.size() - failed << " passed, " << failed << " failed" << std::endl;
    return failed ? 1 : 0;
}
