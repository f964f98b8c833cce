// JSON-over-HTTP service for count and search requests over opened corpora.
//
// Endpoints: POST /v1/query, GET /v1/indexes, GET /v1/health. The request
// handlers are plain methods returning (status, body) so they can be
// exercised without a socket; `listen` wires them into an HTTP server.
#pragma once

#include <atomic>
#include <chrono>
#include <ctime>
#include <iostream>
#include <semaphore>
#include <shared_mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "fmgram/contamination.hpp"
#include "fmgram/query.hpp"

namespace fmgram {

inline constexpr const char* kConfigEnvVar = "FMGRAM_CONFIG";

/// Corpus name to index directory. Accepts either a flat object or one
/// nested under "corpora"; relative paths resolve against the file.
struct ApiConfig {
    std::map<std::string, std::filesystem::path> corpora;

    static ApiConfig from_json(const nlohmann::json& j, const std::filesystem::path& base = {}) {
        const auto& m = j.contains("corpora") ? j.at("corpora") : j;
        if (!m.is_object()) throw Error(Errc::MalformedInput, "config must map corpus names to directories");
        ApiConfig c;
        for (auto& [name, dir] : m.items()) {
            if (!dir.is_string()) throw Error(Errc::MalformedInput, "config entry '" + name + "' is not a path");
            std::filesystem::path p = dir.get<std::string>();
            c.corpora[name] = p.is_relative() && !base.empty() ? base / p : p;
        }
        return c;
    }

    /// Reads `path`, or the file named by FMGRAM_CONFIG when `path` is empty.
    static ApiConfig load(std::string path = {}) {
        if (path.empty()) {
            const char* env = std::getenv(kConfigEnvVar);
            if (!env || !*env) throw Error(Errc::MalformedInput, "no config file given and FMGRAM_CONFIG is unset");
            path = env;
        }
        std::ifstream in(path);
        if (!in) throw Error(Errc::IoError, "cannot open config " + path);
        auto j = nlohmann::json::parse(in, nullptr, false);
        if (j.is_discarded()) throw Error(Errc::MalformedInput, path + " is not JSON");
        return from_json(j, std::filesystem::path(path).parent_path());
    }
};

struct ApiOptions {
    unsigned workers = 2 * default_threads();
    std::chrono::milliseconds timeout{10'000};
    size_t max_query_bytes = 4096;
    uint64_t max_docs = 50;
    uint64_t default_docs = 10;
    VerifyMode verify = VerifyMode::Lazy;
    std::ostream* access_log = &std::cerr;
};

struct ApiResponse {
    int status = 200;
    std::string body;
};

class ApiService {
public:
    explicit ApiService(ApiConfig config, ApiOptions opt = {})
        : config_(std::move(config)), opt_(opt), reconstruct_slots_(std::max(1u, opt.workers)) {}

    ~ApiService() {
        stop();
        for (auto& t : loaders_)
            if (t.joinable()) t.join();
    }

    /// Called with the corpus name just before it is opened.
    void set_open_hook(std::function<void(const std::string&)> hook) { open_hook_ = std::move(hook); }

    /// Opens every configured corpus, in background threads when `async`.
    void load_all(bool async = true) {
        for (const auto& [name, dir] : config_.corpora) {
            {
                std::unique_lock lock(mu_);
                slots_[name] = Slot{"loading", {}, nullptr, dir};
            }
            if (async)
                loaders_.emplace_back([this, name = name, dir = dir] { open_now(name, dir); });
            else
                open_now(name, dir);
        }
    }

    /// Drops a corpus; in-flight requests keep their reference until done.
    bool close(const std::string& name) {
        std::unique_lock lock(mu_);
        return slots_.erase(name) > 0;
    }

    ApiResponse query(const std::string& body) {
        auto t0 = std::chrono::steady_clock::now();
        LogFields log;
        ApiResponse resp = query_impl(body, log);
        log.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        write_log("POST", "/v1/query", resp.status, log);
        return resp;
    }

    ApiResponse indexes() const {
        nlohmann::json list = nlohmann::json::array();
        std::shared_lock lock(mu_);
        for (const auto& [name, slot] : slots_) {
            if (!slot.ci) continue;
            const auto& m = slot.ci->manifest();
            list.push_back({{"name", name},
                            {"shard_count", slot.ci->shard_count()},
                            {"doc_count", m.doc_count},
                            {"text_bytes", slot.ci->total_bytes()},
                            {"index_bytes", m.index_bytes()}});
        }
        return {200, dump_json({{"indexes", list}})};
    }

    ApiResponse health() const {
        nlohmann::json corpora = nlohmann::json::object();
        std::shared_lock lock(mu_);
        for (const auto& [name, slot] : slots_) {
            nlohmann::json c = {{"status", slot.status}};
            if (!slot.error.empty()) c["error"] = slot.error;
            corpora[name] = c;
        }
        return {200, dump_json({{"status", "ok"}, {"version", kToolVersion}, {"corpora", corpora}})};
    }

    /// Binds and serves until `stop`. Returns false if binding failed.
    bool listen(const std::string& host, int port) {
        setup_server();
        return server_.listen(host, port);
    }

    /// Binds to an ephemeral port and serves on a background thread.
    int listen_background(const std::string& host = "127.0.0.1") {
        setup_server();
        int port = server_.bind_to_any_port(host);
        if (port <= 0) throw Error(Errc::IoError, "cannot bind " + host);
        serve_thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        return port;
    }

    void stop() {
        server_.stop();
        if (serve_thread_.joinable()) serve_thread_.join();
    }

private:
    struct Slot {
        std::string status;
        std::string error;
        std::shared_ptr<CorpusIndex> ci;
        std::filesystem::path dir;
    };

    struct LogFields {
        std::string corpus;
        std::string query_type;
        uint64_t query_bytes = 0;
        double latency_ms = 0;
    };

    void open_now(const std::string& name, const std::filesystem::path& dir) {
        try {
            if (open_hook_) open_hook_(name);
            auto ci = CorpusIndex::open(dir, opt_.verify, name);
            for (size_t s = 0; s < ci->shard_count(); ++s) {
                ci->shard(s).text();
                ci->shard(s).offsets();
            }
            std::unique_lock lock(mu_);
            if (auto it = slots_.find(name); it != slots_.end()) it->second = Slot{"ready", {}, ci, dir};
        } catch (const std::exception& e) {
            std::unique_lock lock(mu_);
            if (auto it = slots_.find(name); it != slots_.end()) it->second = Slot{"error", e.what(), nullptr, dir};
        }
    }

    static ApiResponse error(int status, const std::string& message) {
        return {status, dump_json({{"error", message}})};
    }

    ApiResponse query_impl(const std::string& body, LogFields& log) {
        auto j = nlohmann::json::parse(body, nullptr, false);
        if (j.is_discarded() || !j.is_object()) return error(400, "malformed request: body is not a JSON object");
        auto field = [&](const char* key) -> const nlohmann::json* {
            auto it = j.find(key);
            return it == j.end() ? nullptr : &*it;
        };
        auto* index = field("index");
        auto* type = field("query_type");
        auto* q = field("query");
        if (!index || !index->is_string()) return error(400, "malformed request: \"index\" must be a string");
        log.corpus = index->get<std::string>();
        if (!type || !type->is_string()) return error(400, "malformed request: \"query_type\" must be a string");
        log.query_type = type->get<std::string>();
        if (log.query_type != "count" && log.query_type != "search")
            return error(400, "malformed request: query_type must be \"count\" or \"search\"");
        if (!q || !q->is_string()) return error(400, "malformed request: \"query\" must be a string");
        const std::string& query = q->get_ref<const std::string&>();
        log.query_bytes = query.size();
        if (query.size() > opt_.max_query_bytes)
            return error(413, "query is " + std::to_string(query.size()) + " bytes; the limit is " +
                                  std::to_string(opt_.max_query_bytes));
        uint64_t max_docs = opt_.default_docs;
        if (auto* md = field("max_docs")) {
            if (!md->is_number_integer() || md->get<int64_t>() < 1 ||
                static_cast<uint64_t>(md->get<int64_t>()) > opt_.max_docs)
                return error(400, "max_docs must be an integer in [1, " + std::to_string(opt_.max_docs) + "]");
            max_docs = md->get<uint64_t>();
        }

        std::shared_ptr<CorpusIndex> ci;
        {
            std::shared_lock lock(mu_);
            auto it = slots_.find(log.corpus);
            if (it == slots_.end()) return error(404, "unknown index");
            if (it->second.status == "loading") return error(503, "index is loading");
            if (!it->second.ci) return error(503, "index failed to open: " + it->second.error);
            ci = it->second.ci;
        }

        QueryOptions qo{default_threads(), Deadline(opt_.timeout)};
        try {
            if (log.query_type == "count") {
                auto r = count(*ci, query, qo);
                return {200, dump_json({{"count", r.total}, {"per_shard", r.per_shard}, {"latency_ms", r.latency_ms}})};
            }
            auto t0 = std::chrono::steady_clock::now();
            reconstruct_slots_.acquire();
            std::vector<DocumentHit> hits;
            try {
                hits = find_docs(*ci, query, max_docs, qo);
            } catch (...) {
                reconstruct_slots_.release();
                throw;
            }
            reconstruct_slots_.release();
            nlohmann::json docs = nlohmann::json::array();
            for (const auto& h : hits) docs.push_back(hit_to_json(h));
            double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            return {200, dump_json({{"docs", docs}, {"latency_ms", ms}})};
        } catch (const Error& e) {
            switch (e.code()) {
                case Errc::EmptyQuery:
                case Errc::InvalidQuery: return error(400, e.what());
                case Errc::Timeout: return error(408, e.what());
                default: return error(500, e.what());
            }
        }
    }

    void write_log(const char* method, const char* path, int status, const LogFields& f) {
        if (!opt_.access_log) return;
        auto now = std::chrono::system_clock::now();
        std::time_t t = std::chrono::system_clock::to_time_t(now);
        auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
        std::tm tm{};
        gmtime_r(&t, &tm);
        char ts[96];
        std::snprintf(ts, sizeof ts, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                      tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
        nlohmann::json line = {{"timestamp", ts},     {"method", method},           {"path", path},
                               {"corpus", f.corpus},  {"query_type", f.query_type}, {"query_bytes", f.query_bytes},
                               {"latency_ms", f.latency_ms}, {"status", status}};
        std::lock_guard lock(log_mu_);
        *opt_.access_log << dump_json(line) << "\n";
        opt_.access_log->flush();
    }

    void setup_server() {
        unsigned workers = std::max(1u, opt_.workers);
        server_.new_task_queue = [workers] { return new httplib::ThreadPool(workers); };
        server_.set_payload_max_length(1 << 20);
        auto send = [](httplib::Response& res, const ApiResponse& r) {
            res.status = r.status;
            res.set_content(r.body, "application/json");
        };
        server_.Post("/v1/query", [this, send](const httplib::Request& req, httplib::Response& res) {
            send(res, query(req.body));
        });
        server_.Get("/v1/indexes", [this, send](const httplib::Request&, httplib::Response& res) {
            auto r = indexes();
            write_log("GET", "/v1/indexes", r.status, {});
            send(res, r);
        });
        server_.Get("/v1/health", [this, send](const httplib::Request&, httplib::Response& res) {
            auto r = health();
            write_log("GET", "/v1/health", r.status, {});
            send(res, r);
        });
    }

    ApiConfig config_;
    ApiOptions opt_;
    mutable std::shared_mutex mu_;
    std::map<std::string, Slot> slots_;
    std::vector<std::thread> loaders_;
    std::function<void(const std::string&)> open_hook_;
    std::counting_semaphore<1 << 16> reconstruct_slots_;
    std::mutex log_mu_;
    httplib::Server server_;
    std::thread serve_thread_;
};

}  // namespace fmgram
