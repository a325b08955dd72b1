#pragma once

// JSON views of every report type plus the shared emitter. JSON objects are
// nlohmann::ordered_json so key order is fixed by construction.

#include "articulate/catalog.hpp"
#include "articulate/csv.hpp"
#include "articulate/dispersion.hpp"
#include "articulate/predict.hpp"
#include "articulate/threshold.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace articulate {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolName = "articulate";
inline constexpr const char* kToolVersion = "0.1.0";

enum class ReportFormat { json, table };

/// FNV-1a 64-bit digest of a file's bytes, as 16 hex digits.
inline std::string file_digest(const std::string& path) {
    const std::string bytes = csv::read_file(path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// {"tool", "version", "seed", "inputs": {name: {"path", "fnv1a64"}}}
inline Json provenance(std::uint64_t seed, const std::vector<std::pair<std::string, std::string>>& inputs) {
    Json p;
    p["tool"] = kToolName;
    p["version"] = kToolVersion;
    p["seed"] = seed;
    Json in = Json::object();
    for (const auto& [name, path] : inputs) {
        if (path.empty()) continue;
        in[name] = Json{{"path", path}, {"fnv1a64", file_digest(path)}};
    }
    p["inputs"] = in;
    return p;
}

inline Json to_json(const SegmentCounts& c) {
    return Json{{"2->2", c.two_to_two}, {"2->4", c.two_to_four}, {"4->4", c.four_to_four}, {"4->2", c.four_to_two}};
}

/// Key order: recall_at_1, recall_at_5, total, skipped, correct_at_k, per_fold.
inline Json to_json(const EvalReport& r) {
    Json j;
    j["recall_at_1"] = r.recall_at_1();
    j["recall_at_5"] = r.recall_at_5();
    j["total"] = r.total;
    j["skipped"] = r.skipped;
    Json hits = Json::object();
    for (const auto& [k, n] : r.correct_at_k) hits[std::to_string(k)] = n;
    j["correct_at_k"] = hits;
    Json folds = Json::array();
    for (const auto& f : r.per_fold) {
        Json fj;
        fj["fold"] = f.fold;
        fj["train_pairs"] = f.train_pairs;
        fj["evaluated"] = f.evaluated;
        fj["skipped"] = f.skipped;
        Json fh = Json::object();
        for (const auto& [k, n] : f.correct_at_k) fh[std::to_string(k)] = n;
        fj["correct_at_k"] = fh;
        fj["final_loss"] = f.final_loss;
        fj["epochs_run"] = f.epochs_run;
        folds.push_back(fj);
    }
    j["per_fold"] = folds;
    return j;
}

inline Json to_json(const ThresholdReport& r, bool include_roc = false) {
    Json j;
    j["best_threshold"] = r.best_threshold;
    j["auc"] = r.auc;
    j["n_pos"] = r.n_pos;
    j["n_neg"] = r.n_neg;
    j["pos_mean"] = r.pos_mean;
    j["neg_mean"] = r.neg_mean;
    j["roc_points"] = r.roc.size();
    if (include_roc) {
        Json pts = Json::array();
        for (const auto& p : r.roc)
            pts.push_back(Json{{"threshold", p.threshold}, {"tpr", p.tpr}, {"fpr", p.fpr}, {"tnr", p.tnr}, {"fnr", p.fnr}});
        j["roc"] = pts;
    }
    return j;
}

inline std::string roc_csv(const ThresholdReport& r) {
    std::ostringstream out;
    out << "threshold,tpr,fpr,tnr,fnr\n";
    char buf[160];
    for (const auto& p : r.roc) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", p.threshold, p.tpr, p.fpr, p.tnr, p.fnr);
        out << buf;
    }
    return out.str();
}

inline Json to_json(const ExpansionResult& r, std::size_t n_existing) {
    Json j;
    j["threshold"] = r.threshold;
    j["new_pairs"] = r.new_pairs.size();
    j["excluded_existing"] = r.excluded_existing;
    j["existing"] = n_existing;
    j["ratio_vs_existing"] = r.ratio_vs_existing;
    j["by_segment"] = to_json(r.by_segment);
    return j;
}

inline std::string expansions_csv(const ExpansionResult& r) {
    std::ostringstream out;
    out << "source_course_id,target_course_id,cosine\n";
    char buf[40];
    for (const auto& p : r.new_pairs) {
        std::snprintf(buf, sizeof buf, "%.17g", p.cosine);
        out << csv::join_row({p.source_course_id, p.target_course_id, buf});
    }
    return out.str();
}

inline Json to_json(const DispersionReport& r) {
    Json j;
    j["scope"] = r.scope == DispersionScope::system ? "system" : "institutional";
    j["groups"] = r.groups.size();
    j["share_decreased"] = r.share_decreased;
    j["mean_delta"] = r.mean_delta;
    j["excluded_singletons"] = r.excluded_singletons;
    j["courses_without_cip"] = r.courses_without_cip;
    Json rows = Json::array();
    for (const auto& g : r.groups) {
        Json gj;
        if (r.scope == DispersionScope::institutional) gj["institution_id"] = g.institution_id;
        gj["cip2"] = g.cip2;
        gj["n_courses"] = g.n_courses;
        gj["radius_before"] = g.radius_before;
        gj["radius_after"] = g.radius_after;
        gj["delta"] = g.delta;
        rows.push_back(gj);
    }
    j["per_cip"] = rows;
    return j;
}

inline std::string dispersion_csv(const DispersionReport& r) {
    std::ostringstream out;
    const bool inst = r.scope == DispersionScope::institutional;
    out << (inst ? "institution_id," : "") << "cip2,n_courses,radius_before,radius_after,delta\n";
    char buf[128];
    for (const auto& g : r.groups) {
        if (inst) out << csv::quote(g.institution_id) << ',';
        out << csv::quote(g.cip2) << ',';
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", g.n_courses, g.radius_before, g.radius_after, g.delta);
        out << buf;
    }
    return out.str();
}

inline Json to_json(const AdoptionProjection& p, std::uint64_t n_candidates, double rate, std::uint64_t n_existing) {
    Json j;
    j["n_candidates"] = n_candidates;
    j["adoption_rate"] = rate;
    j["n_existing"] = n_existing;
    j["expected_accepted"] = p.expected_accepted;
    j["fold_increase"] = p.fold_increase;
    return j;
}

namespace detail {

inline std::string scalar_text(const Json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_float()) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", v.get<double>());
        return buf;
    }
    return v.dump();
}

inline void render_rows(std::ostream& out, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width;
    for (const auto& r : rows)
        for (std::size_t c = 0; c < r.size(); ++c) {
            if (width.size() <= c) width.push_back(0);
            width[c] = std::max(width[c], r[c].size());
        }
    for (const auto& r : rows) {
        std::string line;
        for (std::size_t c = 0; c < r.size(); ++c) {
            line += r[c];
            if (c + 1 < r.size()) line += std::string(width[c] - r[c].size() + 2, ' ');
        }
        out << line << '\n';
    }
}

} // namespace detail

/// Aligned text: scalars as key/value lines, arrays of objects as tables,
/// nested objects flattened with dotted keys.
inline std::string render_table(const Json& report) {
    std::ostringstream out;
    std::vector<std::vector<std::string>> kv;
    std::vector<std::pair<std::string, const Json*>> tables;
    std::function<void(const std::string&, const Json&)> walk = [&](const std::string& prefix, const Json& obj) {
        for (const auto& [k, v] : obj.items()) {
            const std::string key = prefix.empty() ? k : prefix + "." + k;
            if (v.is_object()) walk(key, v);
            else if (v.is_array() && !v.empty() && v.front().is_object()) tables.emplace_back(key, &v);
            else kv.push_back({key, v.is_array() ? v.dump() : detail::scalar_text(v)});
        }
    };
    walk("", report);
    detail::render_rows(out, kv);
    for (const auto& [name, arr] : tables) {
        out << '\n' << name << '\n';
        std::vector<std::vector<std::string>> rows;
        std::vector<std::string> header;
        for (const auto& [k, v] : arr->front().items()) header.push_back(k);
        rows.push_back(header);
        for (const auto& row : *arr) {
            std::vector<std::string> r;
            for (const auto& h : header) r.push_back(row.contains(h) ? detail::scalar_text(row[h]) : "");
            rows.push_back(r);
        }
        detail::render_rows(out, rows);
    }
    return out.str();
}

inline std::string format_report(const Json& report, ReportFormat format) {
    return format == ReportFormat::json ? report.dump(2) + "\n" : render_table(report);
}

/// Writes the report to `path`, or to stdout when path is empty or "-".
inline void emit_report(const Json& report, ReportFormat format, const std::string& path = {}) {
    const std::string text = format_report(report, format);
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    ARTICULATE_REQUIRE(out, ErrorCode::IoError, "cannot write " + path);
    out << text;
    ARTICULATE_REQUIRE(out.good(), ErrorCode::IoError, "write failed for " + path);
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    ARTICULATE_REQUIRE(out, ErrorCode::IoError, "cannot write " + path);
    out << text;
    ARTICULATE_REQUIRE(out.good(), ErrorCode::IoError, "write failed for " + path);
}

} // namespace articulate
