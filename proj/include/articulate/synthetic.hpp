#pragma once

// Seeded synthetic embeddings, including a planted-alignment mode in which
// equivalent courses share a latent vector rotated by a per-institution
// orthogonal matrix.

#include "articulate/catalog.hpp"
#include "articulate/embedding.hpp"
#include "articulate/linalg.hpp"

#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace articulate {

struct PlantedSpec {
    std::map<std::string, std::string> class_of; // course id -> equivalence class
    double noise = 0.01;                         // per-coordinate Gaussian sd
    double nuisance = 0.0;                       // weight of a per-institution offset direction
};

/// Ground truth behind a planted table: x = (z_c·R_i + nuisance·u_i + ε) / ‖·‖.
/// R_i are rotations (det +1), the component reachable from the identity.
struct PlantedTruth {
    std::map<std::string, Matrix> rotation;  // R_i
    std::map<std::string, Vector> nuisance;  // u_i (unit)
    std::map<std::string, Vector> latent;    // z_c (unit)
};

inline EmbeddingTable synthetic_embeddings(const Catalog& catalog, std::size_t dim, std::uint64_t seed,
                                           const std::optional<PlantedSpec>& planted = std::nullopt,
                                           PlantedTruth* truth = nullptr) {
    ARTICULATE_REQUIRE(dim >= 2, ErrorCode::InvalidConfig, "synthetic dimension must be at least 2");
    std::mt19937_64 rng(seed);
    EmbeddingTable table;
    table.dim = dim;
    table.provenance = Provenance::synthetic;

    PlantedTruth local;
    PlantedTruth& t = truth ? *truth : local;
    t = PlantedTruth{};
    if (planted) {
        for (const auto& [id, inst] : catalog.institutions()) t.rotation.emplace(id, random_orthogonal(dim, rng, true));
        for (const auto& [id, inst] : catalog.institutions()) t.nuisance.emplace(id, random_unit_vector(dim, rng));
        std::set<std::string> classes;
        for (const auto& [course, cls] : planted->class_of) classes.insert(cls);
        for (const auto& cls : classes) t.latent.emplace(cls, random_unit_vector(dim, rng));
    }

    std::normal_distribution<double> normal(0.0, 1.0);
    for (const auto& [id, course] : catalog.courses()) {
        Vector v;
        auto cls = planted ? planted->class_of.find(id) : std::map<std::string, std::string>::const_iterator{};
        if (planted && cls != planted->class_of.end()) {
            const Matrix& r = t.rotation.at(course.institution_id);
            v = r.transpose() * t.latent.at(cls->second); // row-vector z·R
            v += planted->nuisance * t.nuisance.at(course.institution_id);
            for (Eigen::Index k = 0; k < v.size(); ++k) v[k] += planted->noise * normal(rng);
            if (v.norm() == 0.0) v = random_unit_vector(dim, rng);
            v /= v.norm();
        } else {
            v = random_unit_vector(dim, rng);
        }
        table.vectors.emplace(id, std::move(v));
    }
    return table;
}

struct PlantedBenchmarkConfig {
    std::size_t institutions = 5;
    std::size_t courses_per_institution = 400;
    std::size_t classes = 800;
    std::size_t dim = 32;
    double noise = 0.01;
    double nuisance = 0.0;
    std::size_t two_year_institutions = 2;
    std::uint64_t seed = 42;
};

struct PlantedBenchmark {
    Catalog catalog;
    std::vector<ArticulationPair> pairs;         // every ordered cross-institution pair within a class
    std::map<std::string, std::string> class_of; // also written as the course's cip2
    EmbeddingTable embeddings;
    PlantedTruth truth;
};

/// Each institution offers a random subset of the equivalence classes, one
/// course per class; established pairs link every ordered pair of
/// institutions sharing a class.
inline PlantedBenchmark make_planted_benchmark(const PlantedBenchmarkConfig& cfg) {
    ARTICULATE_REQUIRE(cfg.courses_per_institution <= cfg.classes, ErrorCode::InvalidConfig,
                       "each institution offers at most one course per class");
    PlantedBenchmark bench;
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    char buf[32];
    std::vector<std::string> class_ids;
    for (std::size_t c = 0; c < cfg.classes; ++c) {
        std::snprintf(buf, sizeof buf, "K%04zu", c);
        class_ids.emplace_back(buf);
    }
    std::map<std::string, std::vector<std::string>> members; // class -> course ids
    for (std::size_t i = 0; i < cfg.institutions; ++i) {
        std::snprintf(buf, sizeof buf, "I%02zu", i);
        const std::string inst = buf;
        bench.catalog.add_institution(
            {inst, "Institution " + inst, i < cfg.two_year_institutions ? Segment::two_year : Segment::four_year});
        std::vector<std::string> offered = class_ids;
        std::shuffle(offered.begin(), offered.end(), rng);
        offered.resize(cfg.courses_per_institution);
        std::sort(offered.begin(), offered.end());
        for (std::size_t k = 0; k < offered.size(); ++k) {
            std::snprintf(buf, sizeof buf, "C%04zu", k);
            Course course;
            course.id = inst + ":" + buf;
            course.institution_id = inst;
            course.title = "Course " + offered[k] + " at " + inst;
            course.description = "Synthetic course for class " + offered[k] + ".";
            course.cip2 = offered[k];
            course.level = Level::lower_division;
            course.transferable = true;
            bench.class_of.emplace(course.id, offered[k]);
            members[offered[k]].push_back(course.id);
            bench.catalog.add_course(std::move(course));
        }
    }
    for (const auto& [cls, ids] : members)
        for (const auto& a : ids)
            for (const auto& b : ids)
                if (a != b) bench.pairs.push_back({a, b, PairStatus::established});

    PlantedSpec spec{bench.class_of, cfg.noise, cfg.nuisance};
    bench.embeddings = synthetic_embeddings(bench.catalog, cfg.dim, cfg.seed, spec, &bench.truth);
    return bench;
}

} // namespace articulate
