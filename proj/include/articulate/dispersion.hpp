#pragma once

#include "articulate/catalog.hpp"
#include "articulate/embedding.hpp"

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace articulate {

/// Root-mean-square Euclidean distance from the centroid.
inline double effective_radius(std::span<const Vector> vectors) {
    ARTICULATE_REQUIRE(!vectors.empty(), ErrorCode::EmptyGroup, "effective radius of an empty group");
    const auto d = vectors.front().size();
    Vector centroid = Vector::Zero(d);
    for (const auto& v : vectors) {
        ARTICULATE_REQUIRE(v.size() == d, ErrorCode::MixedDimensions, "vectors of different lengths in one group");
        centroid += v;
    }
    centroid /= static_cast<double>(vectors.size());
    double ss = 0.0;
    for (const auto& v : vectors) ss += (v - centroid).squaredNorm();
    return std::sqrt(ss / static_cast<double>(vectors.size()));
}

enum class DispersionScope { system, institutional };

struct DispersionGroup {
    std::string institution_id; // empty for system scope
    std::string cip2;
    std::size_t n_courses = 0;
    double radius_before = 0.0;
    double radius_after = 0.0;
    double delta = 0.0; // after − before
};

struct DispersionReport {
    DispersionScope scope = DispersionScope::system;
    std::vector<DispersionGroup> groups; // ordered by (institution, cip2)
    double share_decreased = 0.0;
    double mean_delta = 0.0;
    std::size_t excluded_singletons = 0;
    std::size_t courses_without_cip = 0;
};

/// Radii of CIP groups before and after alignment; both tables are compared on
/// unit-normalized vectors and must cover the same courses.
inline DispersionReport dispersion_report(const EmbeddingTable& before, const EmbeddingTable& after,
                                          const Catalog& catalog, DispersionScope scope) {
    ARTICULATE_REQUIRE(before.size() == after.size(), ErrorCode::CoverageMismatch,
                       "tables cover " + std::to_string(before.size()) + " and " + std::to_string(after.size()) +
                           " courses");
    for (auto a = before.vectors.begin(), b = after.vectors.begin(); a != before.vectors.end(); ++a, ++b)
        ARTICULATE_REQUIRE(a->first == b->first, ErrorCode::CoverageMismatch,
                           "course '" + a->first + "' is not covered by both tables");
    const auto nb = l2_normalize(before);
    const auto na = l2_normalize(after);

    DispersionReport rep;
    rep.scope = scope;
    std::map<std::pair<std::string, std::string>, std::vector<std::string>> groups;
    for (const auto& [id, v] : nb.vectors) {
        const Course& c = catalog.course(id);
        if (!c.cip2) {
            ++rep.courses_without_cip;
            continue;
        }
        groups[{scope == DispersionScope::institutional ? c.institution_id : std::string{}, *c.cip2}].push_back(id);
    }
    std::size_t decreased = 0;
    double delta_sum = 0.0;
    for (const auto& [key, ids] : groups) {
        if (ids.size() < 2) {
            ++rep.excluded_singletons;
            continue;
        }
        std::vector<Vector> vb, va;
        for (const auto& id : ids) {
            vb.push_back(nb.vectors.at(id));
            va.push_back(na.vectors.at(id));
        }
        DispersionGroup g;
        g.institution_id = key.first;
        g.cip2 = key.second;
        g.n_courses = ids.size();
        g.radius_before = effective_radius(vb);
        g.radius_after = effective_radius(va);
        g.delta = g.radius_after - g.radius_before;
        if (g.delta < 0) ++decreased;
        delta_sum += g.delta;
        rep.groups.push_back(std::move(g));
    }
    if (!rep.groups.empty()) {
        rep.share_decreased = static_cast<double>(decreased) / static_cast<double>(rep.groups.size());
        rep.mean_delta = delta_sum / static_cast<double>(rep.groups.size());
    }
    return rep;
}

} // namespace articulate
