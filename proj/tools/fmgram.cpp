// fmgram: build FM-indexes over JSON Lines corpora and query them.
#include <csignal>
#include <iomanip>
#include <iostream>
#include <map>
#include <regex>

#include <CLI11.hpp>

#include "fmgram/api.hpp"
#include "fmgram/contamination.hpp"
#include "fmgram/index_store.hpp"
#include "fmgram/query.hpp"

using namespace fmgram;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 5> kSteps = {"SA+BWT", "alphabet", "wavelet tree", "sample SA", "sample ISA"};

struct Failure {
    int code;
    std::string message;
};

int exit_code(Errc c, bool benchmark_input) {
    switch (c) {
        case Errc::EmptyCorpus: return 2;
        case Errc::UnknownIndex: return 3;
        case Errc::EmptyQuery:
        case Errc::InvalidQuery: return 4;
        case Errc::MalformedInput: return benchmark_input ? 5 : 1;
        default: return 1;
    }
}

uint64_t parse_size(const std::string& s) {
    static const std::regex re(R"(\s*(\d+)\s*([KMGT]?)(i?)B?\s*)", std::regex::icase);
    std::smatch m;
    if (!std::regex_match(s, m, re)) throw CLI::ValidationError("--shard-bytes", "cannot parse size '" + s + "'");
    uint64_t v = std::stoull(m[1]);
    if (m[2].length()) {
        uint64_t base = m[3].length() ? 1024 : 1000;
        int power = std::string("KMGT").find(static_cast<char>(std::toupper(m[2].str()[0]))) + 1;
        for (int i = 0; i < power; ++i) v *= base;
    }
    if (v == 0) throw CLI::ValidationError("--shard-bytes", "must be positive");
    return v;
}

const auto kPowerOfTwo = CLI::Validator(
    [](std::string& s) -> std::string {
        uint64_t v = 0;
        try {
            v = std::stoull(s);
        } catch (...) {
            return "not a number: " + s;
        }
        return v && std::has_single_bit(v) ? "" : "must be a power of two >= 1";
    },
    "POW2");

std::vector<uint64_t> parse_list(const std::string& s) {
    std::vector<uint64_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(std::stoull(item));
    return out;
}

// ----- index -----

struct IndexArgs {
    std::vector<std::string> inputs;
    std::string out;
    uint32_t sa_rate = 32, isa_rate = 64;
    std::string shard_bytes = "512MiB";
    unsigned threads = default_threads();
    std::string name;
    bool keep_blobs = false;
};

int run_index(const IndexArgs& a, bool as_json) {
    std::vector<RawDocument> docs;
    for (const auto& path : a.inputs) {
        auto part = read_jsonl(path);
        docs.insert(docs.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    BuildOptions opt;
    opt.fm = {a.sa_rate, a.isa_rate, std::max(1u, a.threads)};
    opt.shard_bytes = parse_size(a.shard_bytes);
    opt.name = a.name;
    opt.keep_blobs = a.keep_blobs;
    for (const auto& d : docs) opt.input_bytes += sanitize_document(d.text).size();

    std::map<std::string, double, std::less<>> step_seconds;
    std::string last_step;
    auto timer = [&](std::string_view step, double seconds) {
        step_seconds[std::string(step)] += seconds;
        last_step = step;
    };
    auto t0 = std::chrono::steady_clock::now();
    CorpusManifest m;
    try {
        m = build_corpus(docs, a.out, opt, timer);
    } catch (const Error& e) {
        if (e.code() == Errc::EmptyCorpus) throw;
        auto it = std::find(kSteps.begin(), kSteps.end(), last_step);
        std::string_view failing = it == kSteps.end() || it + 1 == kSteps.end() ? kSteps[0] : *(it + 1);
        throw Error(e.code(), "step " + std::string(failing) + " failed: " + e.what());
    }
    double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    double ratio = static_cast<double>(m.index_bytes()) / static_cast<double>(std::max<uint64_t>(1, m.input_bytes));

    if (as_json) {
        json steps = json::object();
        for (auto s : kSteps) steps[std::string(s)] = step_seconds[std::string(s)];
        std::cout << dump_json({{"index", a.out},
                                {"shards", m.shards.size()},
                                {"documents", m.doc_count},
                                {"corpus_bytes", m.input_bytes},
                                {"index_bytes", m.index_bytes()},
                                {"ratio", ratio},
                                {"steps", steps},
                                {"total_seconds", total}})
                  << "\n";
        return 0;
    }
    std::cout << std::fixed << std::setprecision(3);
    for (auto s : kSteps) std::cout << std::left << std::setw(14) << s << " " << step_seconds[std::string(s)] << " s\n";
    std::cout << std::left << std::setw(14) << "total" << " " << total << " s\n";
    std::cout << "documents: " << m.doc_count << "\n"
              << "shards: " << m.shards.size() << "\n"
              << "corpus bytes: " << m.input_bytes << "\n"
              << "index bytes: " << m.index_bytes() << "\n"
              << std::setprecision(4) << "index/corpus size ratio: " << ratio << "\n";
    return 0;
}

// ----- count / search -----

struct QueryArgs {
    std::string index;
    std::string query;
    uint64_t max_docs = 10;
    unsigned threads = default_threads();
    bool verify = false;
};

VerifyMode verify_mode(bool eager) { return eager ? VerifyMode::Eager : VerifyMode::Lazy; }

int run_count(const QueryArgs& a, bool as_json) {
    validate_query(a.query);
    auto ci = CorpusIndex::open(a.index, verify_mode(a.verify));
    auto r = count(*ci, a.query, {std::max(1u, a.threads), {}});
    if (as_json) {
        std::cout << dump_json({{"total", r.total}, {"per_shard", r.per_shard}, {"latency_ms", r.latency_ms}}) << "\n";
        return 0;
    }
    std::cout << "total: " << r.total << "\n";
    for (size_t s = 0; s < r.per_shard.size(); ++s) std::cout << "shard " << s << ": " << r.per_shard[s] << "\n";
    return 0;
}

int run_search(const QueryArgs& a) {
    validate_query(a.query);
    if (a.max_docs == 0) throw Error(Errc::InvalidQuery, "--max-docs must be positive");
    auto ci = CorpusIndex::open(a.index, verify_mode(a.verify));
    for (const auto& hit : find_docs(*ci, a.query, a.max_docs, {std::max(1u, a.threads), {}}))
        std::cout << dump_json(hit_to_json(hit)) << "\n";
    return 0;
}

// ----- contam -----

struct ContamArgs {
    std::string index;
    std::string benchmark;
    std::string field = "question";
    uint64_t cap = 1000;
    uint64_t seed = 0;
    std::string report;
    unsigned threads = default_threads();
};

int run_contam(const ContamArgs& a, bool as_json) {
    auto ci = CorpusIndex::open(a.index);
    std::vector<BenchmarkEntry> entries;
    try {
        entries = load_benchmark(a.benchmark, a.field);
        if (entries.empty()) throw Error(Errc::MalformedInput, a.benchmark + " has no entries");
    } catch (const Error& e) {
        throw Failure{exit_code(e.code(), true), e.what()};
    }
    auto rep = audit_benchmark(*ci, entries, a.cap, a.seed, {std::max(1u, a.threads), {}});
    if (!a.report.empty()) emit_bulletin({rep}, a.report);
    if (as_json) {
        std::cout << dump_json(report_to_json(rep)) << "\n";
        return 0;
    }
    std::cout << "benchmark: " << rep.benchmark << "\n"
              << "corpus: " << rep.corpus << "\n"
              << "sampledSize: " << rep.sampled_size << " of " << rep.total_entries << "\n"
              << std::fixed << std::setprecision(4) << "dirtyRate: " << rep.dirty_rate << "\n"
              << "suspiciousRate: " << rep.suspicious_rate << "\n";
    return 0;
}

// ----- bench -----

struct BenchArgs {
    std::vector<std::string> indexes;
    std::string query_lengths = "1,10,100,1000";
    std::string context_lengths = "10,100,1000";
    uint64_t trials = 100;
    uint64_t seed = 0;
    unsigned threads = default_threads();
};

int run_bench(const BenchArgs& a, bool as_json) {
    BenchSpec spec;
    spec.query_lengths = parse_list(a.query_lengths);
    spec.context_lengths = parse_list(a.context_lengths);
    spec.trials = a.trials;
    spec.seed = a.seed;
    spec.threads = std::max(1u, a.threads);
    if (spec.trials == 0 || (spec.query_lengths.empty() && spec.context_lengths.empty()))
        throw Error(Errc::EmptyCorpus, "bench has nothing to measure");

    std::vector<std::string> names;
    std::vector<std::vector<BenchRow>> columns;
    for (const auto& dir : a.indexes) {
        auto ci = CorpusIndex::open(dir);
        names.push_back(ci->name());
        columns.push_back(bench(*ci, spec));
    }
    if (as_json) {
        json out = json::array();
        for (size_t c = 0; c < columns.size(); ++c)
            for (const auto& r : columns[c])
                out.push_back({{"corpus", names[c]}, {"kind", r.kind}, {"length", r.length},
                               {"trials", r.trials}, {"mean_ms", r.mean_ms}});
        std::cout << dump_json(out) << "\n";
        return 0;
    }
    std::cout << std::left << std::setw(10) << "operation" << std::right << std::setw(8) << "length";
    for (const auto& n : names) std::cout << std::setw(16) << n;
    std::cout << "\n" << std::fixed << std::setprecision(3);
    for (size_t r = 0; r < columns.front().size(); ++r) {
        const auto& row = columns.front()[r];
        std::cout << std::left << std::setw(10) << row.kind << std::right << std::setw(8) << row.length;
        for (const auto& col : columns) {
            std::ostringstream cell;
            cell << std::fixed << std::setprecision(3) << col[r].mean_ms << " ms";
            std::cout << std::setw(16) << cell.str();
        }
        std::cout << "\n";
    }
    std::cout << "(mean of " << spec.trials << " trials)\n";
    return 0;
}

// ----- serve -----

struct ServeArgs {
    std::string config;
    std::string listen = "127.0.0.1:8080";
    unsigned workers = 2 * default_threads();
    bool verify = false;
};

ApiService* g_service = nullptr;

int run_serve(const ServeArgs& a) {
    auto colon = a.listen.rfind(':');
    if (colon == std::string::npos) throw Failure{1, "--listen must be host:port"};
    std::string host = a.listen.substr(0, colon);
    int port = std::stoi(a.listen.substr(colon + 1));
    ApiOptions opt;
    opt.workers = std::max(1u, a.workers);
    opt.verify = verify_mode(a.verify);
    ApiService service(ApiConfig::load(a.config), opt);
    service.load_all(true);
    g_service = &service;
    std::signal(SIGINT, [](int) { if (g_service) g_service->stop(); });
    std::signal(SIGTERM, [](int) { if (g_service) g_service->stop(); });
    std::cerr << "listening on " << host << ":" << port << std::endl;
    bool ok = service.listen(host.empty() ? "0.0.0.0" : host, port);
    g_service = nullptr;
    if (!ok) throw Failure{1, "cannot listen on " + a.listen};
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact n-gram search over large text corpora with FM-indexes", "fmgram"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);
    bool as_json = false;
    app.add_flag("--json", as_json, "Machine-readable JSON output");

    IndexArgs ia;
    auto* index = app.add_subcommand("index", "Build a sharded index from JSON Lines files");
    index->add_option("--input", ia.inputs, "Input JSONL files")->required()->expected(1, -1);
    index->add_option("--out", ia.out, "Output index directory")->required();
    index->add_option("--sa-rate", ia.sa_rate, "Suffix array sampling rate")->check(kPowerOfTwo)->capture_default_str();
    index->add_option("--isa-rate", ia.isa_rate, "Inverse suffix array sampling rate")
        ->check(kPowerOfTwo)
        ->capture_default_str();
    index->add_option("--shard-bytes", ia.shard_bytes, "Target shard size, e.g. 512MiB")->capture_default_str();
    index->add_option("--threads", ia.threads, "Worker threads")->check(CLI::PositiveNumber);
    index->add_option("--name", ia.name, "Corpus name stored in the manifest");
    index->add_flag("--keep-blobs", ia.keep_blobs, "Also write raw blobs and offset tables");
    index->add_flag("--json", as_json, "JSON output");

    QueryArgs qa;
    auto add_query_opts = [&](CLI::App* sub) {
        sub->add_option("--index", qa.index, "Index directory")->required();
        sub->add_option("--query", qa.query, "Query string")->required();
        sub->add_option("--threads", qa.threads, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_flag("--verify", qa.verify, "Verify all section checksums on open");
        sub->add_flag("--json", as_json, "JSON output");
    };
    auto* countc = app.add_subcommand("count", "Count occurrences of a string");
    add_query_opts(countc);
    auto* search = app.add_subcommand("search", "Print documents containing a string as JSON Lines");
    add_query_opts(search);
    search->add_option("--max-docs", qa.max_docs, "Maximum documents to return")->capture_default_str();

    ContamArgs ca;
    auto* contam = app.add_subcommand("contam", "Audit a benchmark for contamination");
    contam->add_option("--index", ca.index, "Index directory")->required();
    contam->add_option("--benchmark", ca.benchmark, "Benchmark JSONL file")->required();
    contam->add_option("--field", ca.field, "Entry field holding the text")->capture_default_str();
    contam->add_option("--cap", ca.cap, "Maximum sampled entries")->capture_default_str();
    contam->add_option("--seed", ca.seed, "Sampling seed")->capture_default_str();
    contam->add_option("--report", ca.report, "Report output path");
    contam->add_option("--threads", ca.threads, "Worker threads")->check(CLI::PositiveNumber);
    contam->add_flag("--json", as_json, "JSON output");

    BenchArgs ba;
    auto* benchc = app.add_subcommand("bench", "Measure mean query latency");
    benchc->add_option("--index", ba.indexes, "Index directories, one column each")->required()->expected(1, -1);
    benchc->add_option("--query-lengths", ba.query_lengths, "Comma-separated count query lengths")
        ->capture_default_str();
    benchc->add_option("--context-lengths", ba.context_lengths, "Comma-separated retrieval lengths")
        ->capture_default_str();
    benchc->add_option("--trials", ba.trials, "Queries per length")->capture_default_str();
    benchc->add_option("--seed", ba.seed, "Sampling seed")->capture_default_str();
    benchc->add_option("--threads", ba.threads, "Worker threads")->check(CLI::PositiveNumber);
    benchc->add_flag("--json", as_json, "JSON output");

    ServeArgs sa;
    auto* serve = app.add_subcommand("serve", "Run the HTTP query service");
    serve->add_option("--config", sa.config, "Corpus config file (default: $FMGRAM_CONFIG)");
    serve->add_option("--listen", sa.listen, "host:port")->capture_default_str();
    serve->add_option("--workers", sa.workers, "Request worker threads")->check(CLI::PositiveNumber);
    serve->add_flag("--verify", sa.verify, "Verify all section checksums on open");

    CLI11_PARSE(app, argc, argv);

    try {
        if (index->parsed()) return run_index(ia, as_json);
        if (countc->parsed()) return run_count(qa, as_json);
        if (search->parsed()) return run_search(qa);
        if (contam->parsed()) return run_contam(ca, as_json);
        if (benchc->parsed()) return run_bench(ba, as_json);
        if (serve->parsed()) return run_serve(sa);
    } catch (const Failure& f) {
        std::cerr << "fmgram: " << f.message << "\n";
        return f.code;
    } catch (const Error& e) {
        std::cerr << "fmgram: " << e.what() << "\n";
        return exit_code(e.code(), false);
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "fmgram: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
