// Benchmark contamination auditing on top of corpus counts.
//
// Each entry is cut into 50-character windows starting at word starts;
// eta is the fraction of windows that occur in the corpus at least once.
#pragma once

#include <fstream>
#include <map>
#include <random>

#include <json.hpp>

#include "fmgram/query.hpp"
#include "fmgram/utf8.hpp"

namespace fmgram {

inline constexpr const char* kToolVersion = "fmgram 1.0.0";
inline constexpr size_t kWindowChars = 50;

struct BenchmarkEntry {
    std::string benchmark;
    std::string id;
    std::string field = "question";
    std::string subtask;
    std::string text;
};

enum class ContamClass { Clean, Suspicious, Dirty };

inline const char* class_name(ContamClass c) {
    switch (c) {
        case ContamClass::Clean: return "clean";
        case ContamClass::Suspicious: return "suspicious";
        case ContamClass::Dirty: return "dirty";
    }
    return "clean";
}

/// clean below 20%, dirty from 80%, suspicious in between; exact in
/// integers so the boundaries are not subject to rounding.
inline ContamClass classify(uint64_t hits, uint64_t windows) {
    if (windows == 0 || 5 * hits < windows) return ContamClass::Clean;
    if (5 * hits < 4 * windows) return ContamClass::Suspicious;
    return ContamClass::Dirty;
}

struct EntryResult {
    std::string id;
    std::string subtask;
    uint64_t substrings = 0;
    uint64_t hits = 0;
    double eta = 0;
    ContamClass cls = ContamClass::Clean;
};

/// Windows of 50 Unicode scalar values at every word start that has 50
/// characters left. Shorter texts, and texts whose only long stretch
/// precedes the first word, yield the whole text.
inline std::vector<Bytes> extract_substrings(std::string_view text) {
    std::u32string cps = utf8::decode(text);
    std::vector<Bytes> out;
    if (cps.empty()) return out;
    if (cps.size() < kWindowChars) {
        out.push_back(utf8::encode(cps));
        return out;
    }
    for (size_t i = 0; i + kWindowChars <= cps.size(); ++i) {
        bool word_start = !utf8::is_space(cps[i]) && (i == 0 || utf8::is_space(cps[i - 1]));
        if (word_start) out.push_back(utf8::encode(std::u32string_view(cps).substr(i, kWindowChars)));
    }
    if (out.empty()) out.push_back(utf8::encode(cps));
    return out;
}

/// Windows containing reserved bytes cannot occur in a sanitized corpus.
inline bool window_occurs(const CorpusIndex& ci, ByteView w, const QueryOptions& opt) {
    if (w.empty() || has_reserved_byte(w)) return false;
    return count_bytes(ci, w, opt).total > 0;
}

inline EntryResult entry_eta(const CorpusIndex& ci, const BenchmarkEntry& entry, const QueryOptions& opt = {}) {
    EntryResult r;
    r.id = entry.id;
    r.subtask = entry.subtask;
    auto windows = extract_substrings(entry.text);
    r.substrings = windows.size();
    QueryOptions inner{1, opt.deadline};
    std::vector<uint8_t> hit(windows.size(), 0);
    parallel_for(windows.size(), std::max(1u, opt.threads),
                 [&](uint64_t k) { hit[k] = window_occurs(ci, windows[k], inner); });
    for (auto h : hit) r.hits += h;
    r.eta = r.substrings ? static_cast<double>(r.hits) / static_cast<double>(r.substrings) : 0.0;
    r.cls = classify(r.hits, r.substrings);
    return r;
}

struct ContamReport {
    std::string benchmark;
    std::string corpus;
    uint64_t total_entries = 0;
    uint64_t sampled_size = 0;
    uint64_t seed = 0;
    double dirty_rate = 0;
    double suspicious_rate = 0;
    std::vector<EntryResult> entries;
};

namespace detail {

/// Uniform value in [0, bound) from a 64-bit generator, by rejection.
inline uint64_t bounded(std::mt19937_64& rng, uint64_t bound) {
    uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t x;
    do x = rng();
    while (x >= limit);
    return x % bound;
}

/// Fisher-Yates shuffle with a fixed mapping from generator output to
/// indices, so the order depends only on the seed.
template <class T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[bounded(rng, i)]);
}

}  // namespace detail

/// Indices of the audited entries: all of them when within the cap,
/// otherwise `cap` entries allocated to subtasks in proportion to their
/// size (largest remainder) and drawn by seeded shuffles. Ascending.
inline std::vector<size_t> sample_entries(const std::vector<BenchmarkEntry>& entries, uint64_t cap, uint64_t seed) {
    std::vector<size_t> all(entries.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = i;
    if (entries.size() <= cap) return all;

    std::vector<std::string> order;
    std::map<std::string, std::vector<size_t>> groups;
    for (size_t i = 0; i < entries.size(); ++i) {
        auto [it, fresh] = groups.try_emplace(entries[i].subtask);
        if (fresh) order.push_back(entries[i].subtask);
        it->second.push_back(i);
    }
    const uint64_t total = entries.size();
    std::vector<uint64_t> quota(order.size());
    std::vector<std::pair<uint64_t, size_t>> remainders;
    uint64_t assigned = 0;
    for (size_t g = 0; g < order.size(); ++g) {
        uint64_t size = groups[order[g]].size();
        quota[g] = cap * size / total;
        assigned += quota[g];
        remainders.emplace_back(cap * size % total, g);
    }
    std::stable_sort(remainders.begin(), remainders.end(), [](auto a, auto b) { return a.first > b.first; });
    for (size_t k = 0; assigned < cap; ++k, ++assigned) ++quota[remainders[k].second];

    std::mt19937_64 rng(seed);
    std::vector<size_t> picked;
    for (size_t g = 0; g < order.size(); ++g) {
        auto members = groups[order[g]];
        detail::shuffle(members, rng);
        picked.insert(picked.end(), members.begin(), members.begin() + static_cast<ptrdiff_t>(quota[g]));
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

inline ContamReport audit_benchmark(const CorpusIndex& ci, const std::vector<BenchmarkEntry>& entries,
                                    uint64_t sample_cap = 1000, uint64_t seed = 0, const QueryOptions& opt = {}) {
    if (entries.empty()) throw Error(Errc::MalformedInput, "benchmark has no entries");
    ContamReport rep;
    rep.benchmark = entries.front().benchmark;
    rep.corpus = ci.name();
    rep.total_entries = entries.size();
    rep.seed = seed;
    auto picked = sample_entries(entries, sample_cap, seed);
    rep.sampled_size = picked.size();
    rep.entries.resize(picked.size());
    QueryOptions inner{1, opt.deadline};
    parallel_for(picked.size(), std::max(1u, opt.threads),
                 [&](uint64_t k) { rep.entries[k] = entry_eta(ci, entries[picked[k]], inner); });
    uint64_t dirty = 0, suspicious = 0;
    for (const auto& e : rep.entries) {
        dirty += e.cls == ContamClass::Dirty;
        suspicious += e.cls == ContamClass::Suspicious;
    }
    rep.dirty_rate = static_cast<double>(dirty) / static_cast<double>(rep.sampled_size);
    rep.suspicious_rate = static_cast<double>(suspicious) / static_cast<double>(rep.sampled_size);
    return rep;
}

inline nlohmann::json report_to_json(const ContamReport& r) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : r.entries)
        entries.push_back({{"id", e.id},
                           {"subtask", e.subtask},
                           {"eta", e.eta},
                           {"substrings", e.substrings},
                           {"hits", e.hits},
                           {"class", class_name(e.cls)}});
    return {{"key", r.benchmark + "@" + r.corpus},
            {"benchmark", r.benchmark},
            {"corpus", r.corpus},
            {"total_entries", r.total_entries},
            {"sampled_size", r.sampled_size},
            {"seed", r.seed},
            {"dirty_rate", r.dirty_rate},
            {"suspicious_rate", r.suspicious_rate},
            {"entries", entries}};
}

inline ContamReport report_from_json(const nlohmann::json& j) {
    ContamReport r;
    r.benchmark = j.at("benchmark").get<std::string>();
    r.corpus = j.at("corpus").get<std::string>();
    r.total_entries = j.at("total_entries").get<uint64_t>();
    r.sampled_size = j.at("sampled_size").get<uint64_t>();
    r.seed = j.at("seed").get<uint64_t>();
    r.dirty_rate = j.at("dirty_rate").get<double>();
    r.suspicious_rate = j.at("suspicious_rate").get<double>();
    for (const auto& e : j.at("entries")) {
        EntryResult x;
        x.id = e.at("id").get<std::string>();
        x.subtask = e.at("subtask").get<std::string>();
        x.eta = e.at("eta").get<double>();
        x.substrings = e.at("substrings").get<uint64_t>();
        x.hits = e.at("hits").get<uint64_t>();
        std::string c = e.at("class").get<std::string>();
        x.cls = c == "dirty" ? ContamClass::Dirty : c == "suspicious" ? ContamClass::Suspicious : ContamClass::Clean;
        r.entries.push_back(std::move(x));
    }
    return r;
}

inline nlohmann::json bulletin_json(const std::vector<ContamReport>& reports) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : reports) rows.push_back(report_to_json(r));
    return {{"format", "fmgram-contamination-bulletin"},
            {"schema_version", 1},
            {"tool_version", kToolVersion},
            {"window_chars", kWindowChars},
            {"thresholds", {{"suspicious", 0.2}, {"dirty", 0.8}}},
            {"rows", rows}};
}

inline void emit_bulletin(const std::vector<ContamReport>& reports, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot write " + path);
    out << bulletin_json(reports).dump(2, ' ', false, nlohmann::json::error_handler_t::replace) << "\n";
    if (!out) throw Error(Errc::IoError, "short write to " + path);
}

inline std::vector<ContamReport> read_bulletin(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoError, "cannot open " + path);
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || j.value("format", "") != "fmgram-contamination-bulletin")
        throw Error(Errc::MalformedInput, path + " is not a bulletin");
    std::vector<ContamReport> out;
    for (const auto& row : j.at("rows")) out.push_back(report_from_json(row));
    return out;
}

/// Benchmark JSON Lines: {id, text, subtask?}. The text is taken from
/// `field` when present, otherwise from "text".
inline std::vector<BenchmarkEntry> load_benchmark(const std::string& path, const std::string& field = "question",
                                                  const std::string& name = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot open " + path);
    std::string bench = name.empty() ? std::filesystem::path(path).stem().string() : name;
    std::vector<BenchmarkEntry> entries;
    std::string line;
    uint64_t lineno = 0;
    auto bad = [&](const std::string& why) {
        return Error(Errc::MalformedInput, path + ":" + std::to_string(lineno) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw bad("not a JSON object");
        BenchmarkEntry e;
        e.benchmark = bench;
        e.field = field;
        auto id = j.find("id");
        if (id == j.end() || !(id->is_string() || id->is_number_integer())) throw bad("missing \"id\"");
        e.id = id->is_string() ? id->get<std::string>() : id->dump();
        auto t = j.find(field);
        if (t == j.end()) t = j.find("text");
        if (t == j.end() || !t->is_string()) throw bad("missing string field \"" + field + "\"");
        e.text = t->get<std::string>();
        bool blank = true;
        for (char32_t c : utf8::decode(e.text)) blank = blank && utf8::is_space(c);
        if (blank) throw bad("entry text is empty");
        if (auto s = j.find("subtask"); s != j.end() && !s->is_null()) {
            if (!s->is_string()) throw bad("\"subtask\" must be a string");
            e.subtask = s->get<std::string>();
        }
        entries.push_back(std::move(e));
    }
    if (entries.empty()) throw Error(Errc::MalformedInput, path + " has no entries");
    return entries;
}

}  // namespace fmgram
