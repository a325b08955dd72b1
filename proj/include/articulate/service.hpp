#pragma once

// Reviewer queue over candidate articulations. Decisions go to an
// append-only JSON-lines log that is fsync'd before a request is
// acknowledged; statistics are always a pure function of the log.

#include "articulate/catalog.hpp"
#include "articulate/embedding.hpp"
#include "articulate/predict.hpp"
#include "articulate/report.hpp"
#include "articulate/threshold.hpp"

#include <httplib.h>
#include <json.hpp>

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace articulate::service {

inline constexpr std::size_t kScenarioSize = 7;
inline constexpr const char* kNoneChoice = "NONE";

struct CourseCard {
    std::string course_id;
    std::string title;
    std::string description;
    std::string institution_id;
    double cosine = 0.0;
};

struct Scenario {
    std::string scenario_id; // "<source course id>-><receiving institution id>"
    CourseCard source;
    std::string receiving_institution_id;
    std::vector<CourseCard> candidates; // cosine descending, then course id
};

inline Json to_json(const Scenario& s) {
    Json src;
    src["course_id"] = s.source.course_id;
    src["title"] = s.source.title;
    src["description"] = s.source.description;
    src["institution_id"] = s.source.institution_id;
    Json cands = Json::array();
    for (const auto& c : s.candidates) {
        Json cj;
        cj["course_id"] = c.course_id;
        cj["title"] = c.title;
        cj["description"] = c.description;
        cj["cosine"] = c.cosine;
        cands.push_back(cj);
    }
    Json j;
    j["scenario_id"] = s.scenario_id;
    j["source_course"] = src;
    j["receiving_institution_id"] = s.receiving_institution_id;
    j["candidates"] = cands;
    return j;
}

/// One scenario per distinct (source course, receiving institution) in the
/// expansion; candidates are the top-k at that institution whatever their
/// cosine, since the threshold only gates which scenarios exist.
inline std::vector<Scenario> materialize_scenarios(const ExpansionResult& expansion, const EmbeddingTable& shared,
                                                   const Catalog& catalog, std::size_t k = kScenarioSize) {
    CandidateIndex index(shared, catalog);
    std::set<std::pair<std::string, std::string>> keys;
    for (const auto& p : expansion.new_pairs) keys.emplace(p.source_course_id, catalog.institution_of(p.target_course_id));
    std::vector<Scenario> out;
    for (const auto& [source, recv] : keys) {
        const Course& sc = catalog.course(source);
        Scenario s;
        s.scenario_id = source + "->" + recv;
        s.source = {sc.id, sc.title, sc.description, sc.institution_id, 1.0};
        s.receiving_institution_id = recv;
        for (const auto& e : rank_candidates(index, source, recv, k).entries) {
            const Course& c = catalog.course(e.course_id);
            s.candidates.push_back({c.id, c.title, c.description, c.institution_id, e.cosine});
        }
        out.push_back(std::move(s));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.scenario_id < b.scenario_id; });
    return out;
}

enum class Role { staff, faculty };

inline const char* to_string(Role r) { return r == Role::staff ? "staff" : "faculty"; }
inline std::optional<Role> parse_role(const std::string& s) {
    if (s == "staff") return Role::staff;
    if (s == "faculty") return Role::faculty;
    return std::nullopt;
}

struct Decision {
    std::string scenario_id;
    std::string reviewer_id;
    Role role = Role::staff;
    std::string choice; // candidate course id or "NONE"
    std::string ts;

    bool accepted() const { return choice != kNoneChoice; }
};

/// {"scenario_id","reviewer_id","role","choice","ts"}
inline Json to_json(const Decision& d) {
    Json j;
    j["scenario_id"] = d.scenario_id;
    j["reviewer_id"] = d.reviewer_id;
    j["role"] = to_string(d.role);
    j["choice"] = d.choice;
    j["ts"] = d.ts;
    return j;
}

inline std::string utc_timestamp() {
    using namespace std::chrono;
    const auto now = system_clock::now();
    const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
    const std::time_t t = system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[96];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                  tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
    return buf;
}

/// Append-only decision file. Records are replayed on open; a trailing line
/// without a newline was never acknowledged and is dropped.
class DecisionLog {
public:
    explicit DecisionLog(std::string path) : path_(std::move(path)) {
        replay();
        fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
        ARTICULATE_REQUIRE(fd_ >= 0, ErrorCode::IoError, "cannot open decision log " + path_ + ": " + std::strerror(errno));
    }
    ~DecisionLog() {
        if (fd_ >= 0) ::close(fd_);
    }
    DecisionLog(const DecisionLog&) = delete;
    DecisionLog& operator=(const DecisionLog&) = delete;

    /// Returns once the record is on stable storage.
    void append(const Decision& d) {
        std::string line = to_json(d).dump() + "\n";
        const char* p = line.data();
        std::size_t left = line.size();
        while (left > 0) {
            ssize_t n = ::write(fd_, p, left);
            if (n < 0 && errno == EINTR) continue;
            ARTICULATE_REQUIRE(n > 0, ErrorCode::IoError, "write to " + path_ + " failed: " + std::strerror(errno));
            p += n;
            left -= static_cast<std::size_t>(n);
        }
        ARTICULATE_REQUIRE(::fsync(fd_) == 0, ErrorCode::IoError, "fsync of " + path_ + " failed");
        records_.push_back(d);
    }

    const std::vector<Decision>& records() const noexcept { return records_; }
    std::size_t dropped_tail() const noexcept { return dropped_tail_; }
    const std::string& path() const noexcept { return path_; }

    static std::vector<Decision> read(const std::string& path, std::size_t* dropped = nullptr) {
        std::vector<Decision> out;
        std::ifstream in(path, std::ios::binary);
        if (dropped) *dropped = 0;
        if (!in) return out;
        std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        std::size_t pos = 0, lineno = 0;
        while (pos < data.size()) {
            auto nl = data.find('\n', pos);
            ++lineno;
            if (nl == std::string::npos) {
                if (dropped) *dropped = 1;
                break;
            }
            std::string line = data.substr(pos, nl - pos);
            pos = nl + 1;
            if (line.empty()) continue;
            try {
                auto j = nlohmann::json::parse(line);
                Decision d;
                d.scenario_id = j.at("scenario_id").get<std::string>();
                d.reviewer_id = j.at("reviewer_id").get<std::string>();
                auto role = parse_role(j.at("role").get<std::string>());
                ARTICULATE_REQUIRE(role.has_value(), ErrorCode::MalformedRow, "bad role");
                d.role = *role;
                d.choice = j.at("choice").get<std::string>();
                d.ts = j.at("ts").get<std::string>();
                out.push_back(std::move(d));
            } catch (const std::exception& e) {
                throw Error(ErrorCode::MalformedRow, path + " line " + std::to_string(lineno) + ": " + e.what());
            }
        }
        return out;
    }

private:
    void replay() { records_ = read(path_, &dropped_tail_); }

    std::string path_;
    int fd_ = -1;
    std::vector<Decision> records_;
    std::size_t dropped_tail_ = 0;
};

struct RoleStats {
    std::size_t decided = 0;
    std::size_t accepted = 0;
    std::optional<double> rate;
};

struct AdoptionStats {
    std::size_t total = 0;
    std::map<Role, RoleStats> roles;
    std::optional<double> overall_rate;  // unweighted mean of the available role rates
    std::optional<double> weighted_rate; // accepted / decided over all decisions

    friend bool operator==(const AdoptionStats& a, const AdoptionStats& b) {
        if (a.total != b.total || a.overall_rate != b.overall_rate || a.weighted_rate != b.weighted_rate) return false;
        for (Role r : {Role::staff, Role::faculty}) {
            const auto& x = a.roles.at(r);
            const auto& y = b.roles.at(r);
            if (x.decided != y.decided || x.accepted != y.accepted || x.rate != y.rate) return false;
        }
        return true;
    }
};

inline AdoptionStats adoption_stats(const std::vector<Decision>& decisions) {
    AdoptionStats s;
    s.roles[Role::staff];
    s.roles[Role::faculty];
    std::size_t accepted = 0;
    for (const auto& d : decisions) {
        auto& r = s.roles[d.role];
        ++r.decided;
        if (d.accepted()) {
            ++r.accepted;
            ++accepted;
        }
    }
    s.total = decisions.size();
    double sum = 0.0;
    int n = 0;
    for (auto& [role, r] : s.roles) {
        if (r.decided == 0) continue;
        r.rate = static_cast<double>(r.accepted) / static_cast<double>(r.decided);
        sum += *r.rate;
        ++n;
    }
    if (n > 0) s.overall_rate = sum / n;
    if (s.total > 0) s.weighted_rate = static_cast<double>(accepted) / static_cast<double>(s.total);
    return s;
}

/// Percentage with two decimals, e.g. 0.61230 -> "61.23".
inline std::string percent_text(double rate) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", rate * 100.0);
    return buf;
}

inline Json to_json(const AdoptionStats& s) {
    auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
    auto pct = [](const std::optional<double>& v) { return v ? Json(percent_text(*v)) : Json(nullptr); };
    Json roles;
    for (Role role : {Role::staff, Role::faculty}) {
        const auto& r = s.roles.at(role);
        Json rj;
        rj["decided"] = r.decided;
        rj["accepted"] = r.accepted;
        rj["rate"] = opt(r.rate);
        rj["rate_pct"] = pct(r.rate);
        roles[to_string(role)] = rj;
    }
    Json j;
    j["total_decisions"] = s.total;
    j["roles"] = roles;
    j["overall_rate"] = opt(s.overall_rate);
    j["overall_rate_pct"] = pct(s.overall_rate);
    j["weighted_rate"] = opt(s.weighted_rate);
    j["weighted_rate_pct"] = pct(s.weighted_rate);
    return j;
}

struct Response {
    int status = 200;
    Json body;
};

inline Response error_response(int status, const std::string& code, const std::string& detail) {
    Json j;
    j["error"] = code;
    j["detail"] = detail;
    return {status, j};
}

/// Transport-independent request handlers; every method is safe to call
/// from concurrent HTTP worker threads.
class ReviewService {
public:
    struct Options {
        std::size_t n_existing = 0;   // established articulations, for projection
        std::size_t n_candidates = 0; // above-threshold pairs, for projection
    };

    ReviewService(std::string decisions_path, std::optional<std::vector<Scenario>> scenarios, Options options)
        : log_(std::move(decisions_path)), options_(options) {
        if (scenarios) {
            loaded_ = true;
            for (auto& s : *scenarios) {
                order_.push_back(s.scenario_id);
                scenarios_.emplace(s.scenario_id, std::move(s));
            }
            std::sort(order_.begin(), order_.end());
        }
        for (const auto& d : log_.records()) decided_.emplace(d.scenario_id, d.reviewer_id);
    }

    Response queue(const std::string& reviewer, std::size_t limit) const {
        std::lock_guard lock(mu_);
        if (!loaded_) return error_response(503, "NoExpansionLoaded", "the service was started without candidate articulations");
        if (reviewer.empty()) return error_response(400, "MalformedRequest", "query parameter 'reviewer' is required");
        Json list = Json::array();
        for (const auto& id : order_) {
            if (list.size() >= limit) break;
            if (decided_.count({id, reviewer})) continue;
            list.push_back(to_json(scenarios_.at(id)));
        }
        return {200, list};
    }

    Response submit(const std::string& body) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& e) {
            return error_response(400, "MalformedRequest", std::string("body is not JSON: ") + e.what());
        }
        auto field = [&](const char* k) -> std::optional<std::string> {
            if (!j.is_object() || !j.contains(k) || !j[k].is_string()) return std::nullopt;
            return j[k].get<std::string>();
        };
        auto scenario_id = field("scenario_id");
        auto reviewer_id = field("reviewer_id");
        auto role_text = field("role");
        auto choice = field("choice");
        if (!scenario_id || !reviewer_id || reviewer_id->empty() || !role_text || !choice)
            return error_response(400, "MalformedRequest",
                                  "body needs string fields scenario_id, reviewer_id, role, choice");
        auto role = parse_role(*role_text);
        if (!role) return error_response(400, "MalformedRequest", "role must be 'staff' or 'faculty'");

        std::lock_guard lock(mu_);
        if (!loaded_) return error_response(503, "NoExpansionLoaded", "the service was started without candidate articulations");
        auto it = scenarios_.find(*scenario_id);
        if (it == scenarios_.end()) return error_response(404, "UnknownScenario", "no scenario '" + *scenario_id + "'");
        if (decided_.count({*scenario_id, *reviewer_id}))
            return error_response(409, "DecisionExists",
                                  "reviewer '" + *reviewer_id + "' already decided scenario '" + *scenario_id + "'");
        const auto& cands = it->second.candidates;
        const bool valid = *choice == kNoneChoice ||
                           std::any_of(cands.begin(), cands.end(), [&](const auto& c) { return c.course_id == *choice; });
        if (!valid)
            return error_response(422, "ChoiceNotInScenario",
                                  "'" + *choice + "' is not a candidate of scenario '" + *scenario_id + "'");
        Decision d{*scenario_id, *reviewer_id, *role, *choice, utc_timestamp()};
        try {
            log_.append(d);
        } catch (const Error& e) {
            return error_response(500, "IoError", e.detail());
        }
        decided_.emplace(d.scenario_id, d.reviewer_id);
        return {201, to_json(d)};
    }

    AdoptionStats stats() const {
        std::lock_guard lock(mu_);
        return adoption_stats(log_.records());
    }

    Response stats_response() const { return {200, to_json(stats())}; }

    /// Missing overrides fall back to the loaded expansion and the observed
    /// overall adoption rate.
    Response projection(std::optional<std::uint64_t> candidates, std::optional<std::uint64_t> existing,
                        std::optional<double> rate) const {
        const auto s = stats();
        if (!candidates && !loaded_)
            return error_response(503, "NoExpansionLoaded", "no expansion loaded and no 'candidates' override given");
        const std::uint64_t n_c = candidates.value_or(options_.n_candidates);
        const std::uint64_t n_e = existing.value_or(options_.n_existing);
        std::optional<double> r = rate ? rate : s.overall_rate;
        if (!r) return error_response(409, "NoAdoptionRate", "no decisions recorded and no 'rate' override given");
        if (*r < 0.0 || *r > 1.0) return error_response(400, "MalformedRequest", "rate must lie in [0, 1]");
        if (n_e < 1) return error_response(409, "NoExistingArticulations", "existing articulation count is zero");
        auto p = project_adoption(n_c, *r, n_e);
        Json j = to_json(p, n_c, *r, n_e);
        j["rate_source"] = rate ? "override" : "observed";
        return {200, j};
    }

    std::size_t scenario_count() const { return scenarios_.size(); }
    bool loaded() const { return loaded_; }

private:
    mutable std::mutex mu_;
    DecisionLog log_;
    Options options_;
    bool loaded_ = false;
    std::map<std::string, Scenario> scenarios_;
    std::vector<std::string> order_;
    std::set<std::pair<std::string, std::string>> decided_; // (scenario, reviewer)
};

namespace detail {

inline void reply(httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
}

template <typename T>
std::optional<T> query_number(const httplib::Request& req, const char* key, bool& bad) {
    if (!req.has_param(key)) return std::nullopt;
    const std::string v = req.get_param_value(key);
    try {
        std::size_t pos = 0;
        if constexpr (std::is_floating_point_v<T>) {
            double x = std::stod(v, &pos);
            if (pos == v.size()) return x;
        } else {
            if (!v.empty() && v[0] != '-') {
                auto x = std::stoull(v, &pos);
                if (pos == v.size()) return static_cast<T>(x);
            }
        }
    } catch (const std::exception&) {
    }
    bad = true;
    return std::nullopt;
}

} // namespace detail

inline void bind_routes(httplib::Server& server, ReviewService& svc) {
    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok", "text/plain"); });
    server.Get("/queue", [&svc](const httplib::Request& req, httplib::Response& res) {
        std::size_t limit = 10;
        bool bad = false;
        if (auto l = detail::query_number<std::uint64_t>(req, "limit", bad)) limit = static_cast<std::size_t>(*l);
        if (bad) return detail::reply(res, error_response(400, "MalformedRequest", "limit must be a non-negative integer"));
        detail::reply(res, svc.queue(req.get_param_value("reviewer"), limit));
    });
    server.Post("/decision", [&svc](const httplib::Request& req, httplib::Response& res) {
        detail::reply(res, svc.submit(req.body));
    });
    server.Get("/stats", [&svc](const httplib::Request&, httplib::Response& res) {
        detail::reply(res, svc.stats_response());
    });
    server.Get("/projection", [&svc](const httplib::Request& req, httplib::Response& res) {
        bool bad = false;
        auto candidates = detail::query_number<std::uint64_t>(req, "candidates", bad);
        auto existing = detail::query_number<std::uint64_t>(req, "existing", bad);
        auto rate = detail::query_number<double>(req, "rate", bad);
        if (bad) return detail::reply(res, error_response(400, "MalformedRequest", "numeric query parameter expected"));
        detail::reply(res, svc.projection(candidates, existing, rate));
    });
}

} // namespace articulate::service
