#pragma once

#include "articulate/catalog.hpp"
#include "articulate/error.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace articulate {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Provenance { text, course2vec, concat, synthetic, shared };

inline const char* to_string(Provenance p) {
    switch (p) {
    case Provenance::text: return "text";
    case Provenance::course2vec: return "course2vec";
    case Provenance::concat: return "concat";
    case Provenance::synthetic: return "synthetic";
    case Provenance::shared: return "shared";
    }
    return "unknown";
}

/// Course id -> fixed-length vector. Keys iterate in ascending order.
struct EmbeddingTable {
    std::size_t dim = 0;
    std::map<std::string, Vector> vectors;
    Provenance provenance = Provenance::text;

    std::size_t size() const noexcept { return vectors.size(); }
    bool contains(const std::string& id) const { return vectors.count(id) != 0; }

    const Vector& at(const std::string& id) const {
        auto it = vectors.find(id);
        ARTICULATE_REQUIRE(it != vectors.end(), ErrorCode::MissingEmbedding, "no vector for course '" + id + "'");
        return it->second;
    }

    void insert(const std::string& id, Vector v) {
        ARTICULATE_REQUIRE(static_cast<std::size_t>(v.size()) == dim, ErrorCode::DimensionMismatch,
                           "vector for '" + id + "' has length " + std::to_string(v.size()) + ", expected " +
                               std::to_string(dim));
        auto [it, inserted] = vectors.emplace(id, std::move(v));
        ARTICULATE_REQUIRE(inserted, ErrorCode::DuplicateCourse, "duplicate vector for course '" + id + "'");
    }

    friend bool operator==(const EmbeddingTable& a, const EmbeddingTable& b) {
        if (a.dim != b.dim || a.vectors.size() != b.vectors.size()) return false;
        for (auto ia = a.vectors.begin(), ib = b.vectors.begin(); ia != a.vectors.end(); ++ia, ++ib)
            if (ia->first != ib->first || ia->second != ib->second) return false;
        return true;
    }
};

/// Reads one `{"course_id": ..., "vector": [...]}` object per line.
inline EmbeddingTable load_embeddings(const std::string& path, std::size_t expected_dim) {
    std::ifstream in(path);
    ARTICULATE_REQUIRE(in, ErrorCode::IoError, "cannot open " + path);
    EmbeddingTable table;
    table.dim = expected_dim;
    table.provenance = Provenance::text;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path + " line " + std::to_string(lineno);
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::MalformedRow, where + ": " + e.what());
        }
        if (!rec.is_object() || !rec.contains("course_id") || !rec["course_id"].is_string() ||
            !rec.contains("vector") || !rec["vector"].is_array())
            throw Error(ErrorCode::MalformedRow, where + ": expected {\"course_id\": str, \"vector\": [...]}");
        const auto id = rec["course_id"].get<std::string>();
        const auto& arr = rec["vector"];
        ARTICULATE_REQUIRE(arr.size() == expected_dim, ErrorCode::DimensionMismatch,
                           where + ": course '" + id + "' has " + std::to_string(arr.size()) +
                               " values, expected " + std::to_string(expected_dim));
        Vector v(static_cast<Eigen::Index>(expected_dim));
        for (std::size_t i = 0; i < arr.size(); ++i) {
            ARTICULATE_REQUIRE(arr[i].is_number(), ErrorCode::MalformedRow, where + ": non-numeric vector entry");
            double x = arr[i].get<double>();
            ARTICULATE_REQUIRE(std::isfinite(x), ErrorCode::MalformedRow, where + ": non-finite vector entry");
            v[static_cast<Eigen::Index>(i)] = x;
        }
        ARTICULATE_REQUIRE(!table.contains(id), ErrorCode::DuplicateCourse,
                           where + ": duplicate vector for course '" + id + "'");
        table.insert(id, std::move(v));
    }
    return table;
}

inline void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
    for (const auto& [id, v] : table.vectors) {
        nlohmann::ordered_json rec;
        rec["course_id"] = id;
        rec["vector"] = std::vector<double>(v.data(), v.data() + v.size());
        out << rec.dump() << '\n';
    }
}

inline void save_embeddings(const std::string& path, const EmbeddingTable& table) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    ARTICULATE_REQUIRE(out, ErrorCode::IoError, "cannot write " + path);
    write_embeddings(out, table);
    ARTICULATE_REQUIRE(out.good(), ErrorCode::IoError, "write failed for " + path);
}

/// Drops records whose course is not in the catalog; returns how many were dropped.
inline std::size_t restrict_to_catalog(EmbeddingTable& table, const Catalog& catalog,
                                       std::vector<std::string>* dropped = nullptr) {
    std::size_t n = 0;
    for (auto it = table.vectors.begin(); it != table.vectors.end();) {
        if (!catalog.find_course(it->first)) {
            if (dropped) dropped->push_back(it->first);
            it = table.vectors.erase(it);
            ++n;
        } else {
            ++it;
        }
    }
    return n;
}

inline constexpr double kUnitTolerance = 1e-12;

inline EmbeddingTable l2_normalize(const EmbeddingTable& table) {
    EmbeddingTable out;
    out.dim = table.dim;
    out.provenance = table.provenance;
    for (const auto& [id, v] : table.vectors) {
        double norm = v.norm();
        ARTICULATE_REQUIRE(norm > 0.0 && std::isfinite(norm), ErrorCode::ZeroVector,
                           "course '" + id + "' has a zero vector");
        // Vectors already unit-length to rounding are kept bit-identical, which
        // makes normalization idempotent.
        if (std::abs(norm - 1.0) <= kUnitTolerance) out.vectors.emplace(id, v);
        else out.vectors.emplace(id, v / norm);
    }
    return out;
}

enum class ComposeMode { concat };

/// Concatenates vectors of courses present in both tables; callers normalize
/// each side first.
inline EmbeddingTable compose(const EmbeddingTable& a, const EmbeddingTable& b,
                              ComposeMode mode = ComposeMode::concat) {
    (void)mode;
    EmbeddingTable out;
    out.dim = a.dim + b.dim;
    out.provenance = Provenance::concat;
    for (const auto& [id, va] : a.vectors) {
        auto it = b.vectors.find(id);
        if (it == b.vectors.end()) continue;
        Vector v(static_cast<Eigen::Index>(out.dim));
        v << va, it->second;
        out.vectors.emplace(id, std::move(v));
    }
    ARTICULATE_REQUIRE(!out.vectors.empty(), ErrorCode::DisjointKeys, "tables share no course ids");
    return out;
}

inline double cosine(const Vector& a, const Vector& b) {
    double na = a.norm();
    double nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return a.dot(b) / (na * nb);
}

} // namespace articulate
