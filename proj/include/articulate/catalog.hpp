#pragma once

#include "articulate/csv.hpp"
#include "articulate/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace articulate {

enum class Segment { two_year, four_year };
enum class Level { lower_division, upper_division };
enum class PairStatus { established, candidate, accepted, rejected };

struct Institution {
    std::string id;
    std::string name;
    Segment segment = Segment::four_year;
};

struct Course {
    std::string id; // "<institution_id>:<local_code>"
    std::string institution_id;
    std::string title;
    std::string description;
    std::optional<std::string> cip2;
    Level level = Level::lower_division;
    bool transferable = true;
};

struct ArticulationPair {
    std::string source_course_id;
    std::string target_course_id;
    PairStatus status = PairStatus::established;

    friend bool operator==(const ArticulationPair&, const ArticulationPair&) = default;
};

struct EnrollmentEvent {
    int term_index = 0;
    std::string course_id;

    friend bool operator==(const EnrollmentEvent&, const EnrollmentEvent&) = default;
};

struct EnrollmentSequence {
    std::string student_id;
    std::vector<EnrollmentEvent> events; // sorted by (term_index, course_id)
};

/// Immutable after construction; lookups are by id. Containers are ordered
/// maps so iteration (and everything derived from it) is deterministic.
class Catalog {
public:
    Catalog() = default;

    void add_institution(Institution inst) {
        ARTICULATE_REQUIRE(!inst.id.empty(), ErrorCode::MalformedRow, "institution id is empty");
        auto [it, inserted] = institutions_.emplace(inst.id, inst);
        ARTICULATE_REQUIRE(inserted, ErrorCode::DuplicateId, "duplicate institution id '" + inst.id + "'");
    }

    void add_course(Course course) {
        ARTICULATE_REQUIRE(!course.id.empty(), ErrorCode::MalformedRow, "course id is empty");
        ARTICULATE_REQUIRE(!course.title.empty(), ErrorCode::MalformedRow,
                           "course '" + course.id + "' has an empty title");
        ARTICULATE_REQUIRE(institutions_.count(course.institution_id), ErrorCode::UnknownInstitution,
                           "course '" + course.id + "' references unknown institution '" +
                               course.institution_id + "'");
        const std::string prefix = course.institution_id + ":";
        ARTICULATE_REQUIRE(course.id.size() > prefix.size() && course.id.compare(0, prefix.size(), prefix) == 0,
                           ErrorCode::MalformedRow,
                           "course id '" + course.id + "' must start with '" + prefix + "'");
        ARTICULATE_REQUIRE(!courses_.count(course.id), ErrorCode::DuplicateId,
                           "duplicate course id '" + course.id + "'");
        by_institution_[course.institution_id].push_back(course.id);
        courses_.emplace(course.id, std::move(course));
    }

    const std::map<std::string, Institution>& institutions() const noexcept { return institutions_; }
    const std::map<std::string, Course>& courses() const noexcept { return courses_; }

    const Institution* find_institution(const std::string& id) const {
        auto it = institutions_.find(id);
        return it == institutions_.end() ? nullptr : &it->second;
    }
    const Course* find_course(const std::string& id) const {
        auto it = courses_.find(id);
        return it == courses_.end() ? nullptr : &it->second;
    }
    const Course& course(const std::string& id) const {
        const Course* c = find_course(id);
        ARTICULATE_REQUIRE(c, ErrorCode::UnknownCourse, "unknown course '" + id + "'");
        return *c;
    }
    const Institution& institution(const std::string& id) const {
        const Institution* i = find_institution(id);
        ARTICULATE_REQUIRE(i, ErrorCode::UnknownInstitution, "unknown institution '" + id + "'");
        return *i;
    }
    const std::string& institution_of(const std::string& course_id) const { return course(course_id).institution_id; }

    /// Course ids of one institution in ascending order.
    std::vector<std::string> courses_at(const std::string& institution_id) const {
        auto it = by_institution_.find(institution_id);
        if (it == by_institution_.end()) return {};
        auto ids = it->second;
        std::sort(ids.begin(), ids.end());
        return ids;
    }

    friend bool operator==(const Catalog& a, const Catalog& b) {
        if (a.institutions_.size() != b.institutions_.size() || a.courses_.size() != b.courses_.size()) return false;
        for (auto ia = a.institutions_.begin(), ib = b.institutions_.begin(); ia != a.institutions_.end(); ++ia, ++ib) {
            if (ia->first != ib->first || ia->second.name != ib->second.name ||
                ia->second.segment != ib->second.segment)
                return false;
        }
        for (auto ca = a.courses_.begin(), cb = b.courses_.begin(); ca != a.courses_.end(); ++ca, ++cb) {
            const Course& x = ca->second;
            const Course& y = cb->second;
            if (x.id != y.id || x.institution_id != y.institution_id || x.title != y.title ||
                x.description != y.description || x.cip2 != y.cip2 || x.level != y.level ||
                x.transferable != y.transferable)
                return false;
        }
        return true;
    }

private:
    std::map<std::string, Institution> institutions_;
    std::map<std::string, Course> courses_;
    std::map<std::string, std::vector<std::string>> by_institution_;
};

namespace detail {

inline std::string row_ref(const std::string& path, const csv::Record& r) {
    return path + " line " + std::to_string(r.line);
}

inline int parse_int(const std::string& s, const std::string& where) {
    std::size_t pos = 0;
    int v = 0;
    try {
        v = std::stoi(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    ARTICULATE_REQUIRE(!s.empty() && pos == s.size(), ErrorCode::MalformedRow,
                       where + ": '" + s + "' is not an integer");
    return v;
}

} // namespace detail

inline std::vector<Institution> load_institutions(const std::string& path) {
    std::vector<Institution> out;
    for (const auto& row : csv::read_table(path, {"id", "name", "segment"})) {
        const auto& f = row.fields;
        Institution inst{f[0], f[1], Segment::four_year};
        if (f[2] == "2") inst.segment = Segment::two_year;
        else if (f[2] == "4") inst.segment = Segment::four_year;
        else throw Error(ErrorCode::MalformedRow, detail::row_ref(path, row) + ": segment must be 2 or 4");
        ARTICULATE_REQUIRE(!inst.id.empty(), ErrorCode::MalformedRow, detail::row_ref(path, row) + ": empty id");
        out.push_back(std::move(inst));
    }
    return out;
}

inline Catalog load_catalog(const std::string& institutions_path, const std::string& courses_path) {
    Catalog catalog;
    for (auto& inst : load_institutions(institutions_path)) catalog.add_institution(std::move(inst));

    const std::vector<std::string> header{"id", "institution_id", "title", "description", "cip2", "level",
                                          "transferable"};
    for (const auto& row : csv::read_table(courses_path, header)) {
        const auto& f = row.fields;
        const std::string where = detail::row_ref(courses_path, row);
        Course c;
        c.id = f[0];
        c.institution_id = f[1];
        c.title = f[2];
        c.description = f[3];
        if (!f[4].empty()) c.cip2 = f[4];
        if (f[5] == "L") c.level = Level::lower_division;
        else if (f[5] == "U") c.level = Level::upper_division;
        else throw Error(ErrorCode::MalformedRow, where + ": level must be L or U");
        if (f[6] == "1") c.transferable = true;
        else if (f[6] == "0") c.transferable = false;
        else throw Error(ErrorCode::MalformedRow, where + ": transferable must be 0 or 1");
        try {
            catalog.add_course(std::move(c));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::MalformedRow) throw Error(e.code(), where + ": " + e.detail());
            throw;
        }
    }
    return catalog;
}

inline std::vector<ArticulationPair> load_articulations(const std::string& path, const Catalog& catalog) {
    std::vector<ArticulationPair> out;
    std::map<std::pair<std::string, std::string>, std::size_t> seen;
    for (const auto& row : csv::read_table(path, {"source_course_id", "target_course_id"})) {
        const std::string where = detail::row_ref(path, row);
        const auto& src = row.fields[0];
        const auto& dst = row.fields[1];
        ARTICULATE_REQUIRE(catalog.find_course(src), ErrorCode::UnknownCourse,
                           where + ": unknown source course '" + src + "'");
        ARTICULATE_REQUIRE(catalog.find_course(dst), ErrorCode::UnknownCourse,
                           where + ": unknown target course '" + dst + "'");
        ARTICULATE_REQUIRE(src != dst, ErrorCode::SelfPair, where + ": source equals target '" + src + "'");
        auto [it, inserted] = seen.emplace(std::make_pair(src, dst), row.line);
        ARTICULATE_REQUIRE(inserted, ErrorCode::DuplicateId,
                           where + ": pair " + src + " -> " + dst + " already established on line " +
                               std::to_string(it->second));
        out.push_back({src, dst, PairStatus::established});
    }
    return out;
}

inline std::vector<EnrollmentSequence> load_enrollments(const std::string& path, const Catalog& catalog) {
    std::map<std::string, std::vector<EnrollmentEvent>> by_student;
    for (const auto& row : csv::read_table(path, {"student_id", "term_index", "course_id"})) {
        const std::string where = detail::row_ref(path, row);
        ARTICULATE_REQUIRE(!row.fields[0].empty(), ErrorCode::MalformedRow, where + ": empty student id");
        int term = detail::parse_int(row.fields[1], where);
        ARTICULATE_REQUIRE(catalog.find_course(row.fields[2]), ErrorCode::UnknownCourse,
                           where + ": unknown course '" + row.fields[2] + "'");
        by_student[row.fields[0]].push_back({term, row.fields[2]});
    }
    std::vector<EnrollmentSequence> out;
    out.reserve(by_student.size());
    for (auto& [student, events] : by_student) {
        std::sort(events.begin(), events.end(), [](const auto& a, const auto& b) {
            return std::tie(a.term_index, a.course_id) < std::tie(b.term_index, b.course_id);
        });
        out.push_back({student, std::move(events)});
    }
    return out;
}

/// Counts per sending→receiving segment pathway.
struct SegmentCounts {
    std::size_t two_to_two = 0;
    std::size_t two_to_four = 0;
    std::size_t four_to_four = 0;
    std::size_t four_to_two = 0;

    std::size_t total() const noexcept { return two_to_two + two_to_four + four_to_four + four_to_two; }
    friend bool operator==(const SegmentCounts&, const SegmentCounts&) = default;
};

inline void count_pathway(SegmentCounts& counts, Segment from, Segment to) {
    if (from == Segment::two_year) (to == Segment::two_year ? counts.two_to_two : counts.two_to_four)++;
    else (to == Segment::two_year ? counts.four_to_two : counts.four_to_four)++;
}

inline SegmentCounts segment_breakdown(const std::vector<ArticulationPair>& pairs, const Catalog& catalog) {
    SegmentCounts counts;
    for (const auto& p : pairs) {
        const auto& from = catalog.institution(catalog.institution_of(p.source_course_id));
        const auto& to = catalog.institution(catalog.institution_of(p.target_course_id));
        count_pathway(counts, from.segment, to.segment);
    }
    return counts;
}

struct FanoutStats {
    double mean = 0.0;
    double std = 0.0; // population standard deviation
    std::size_t groups = 0;
};

/// Targets per (source course, receiving institution). Without a catalog the
/// receiving institution is taken from the target id prefix.
inline FanoutStats fanout_stats(const std::vector<ArticulationPair>& pairs, const Catalog* catalog = nullptr) {
    ARTICULATE_REQUIRE(!pairs.empty(), ErrorCode::EmptyInput, "fanout_stats needs at least one pair");
    std::map<std::pair<std::string, std::string>, std::size_t> groups;
    for (const auto& p : pairs) {
        std::string receiving;
        if (catalog) {
            receiving = catalog->institution_of(p.target_course_id);
        } else {
            auto colon = p.target_course_id.find(':');
            receiving = colon == std::string::npos ? p.target_course_id : p.target_course_id.substr(0, colon);
        }
        ++groups[{p.source_course_id, receiving}];
    }
    double n = static_cast<double>(groups.size());
    double sum = 0.0;
    for (const auto& [key, count] : groups) sum += static_cast<double>(count);
    double mean = sum / n;
    double ss = 0.0;
    for (const auto& [key, count] : groups) ss += (count - mean) * (count - mean);
    return {mean, std::sqrt(ss / n), groups.size()};
}

struct FoldAssignment {
    int k = 0;
    std::uint64_t seed = 0;
    std::vector<int> fold_of; // parallel to the pair list

    std::vector<std::size_t> members(int fold) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < fold_of.size(); ++i)
            if (fold_of[i] == fold) out.push_back(i);
        return out;
    }
    std::vector<std::size_t> sizes() const {
        std::vector<std::size_t> out(static_cast<std::size_t>(k), 0);
        for (int f : fold_of) ++out[static_cast<std::size_t>(f)];
        return out;
    }
};

/// Seeded shuffle, then round-robin: fold sizes differ by at most one.
template <typename T>
FoldAssignment make_folds(const std::vector<T>& pairs, int k, std::uint64_t seed) {
    ARTICULATE_REQUIRE(k >= 2, ErrorCode::InvalidConfig, "fold count must be at least 2");
    ARTICULATE_REQUIRE(pairs.size() >= static_cast<std::size_t>(k), ErrorCode::TooFewPairs,
                       std::to_string(pairs.size()) + " pairs cannot fill " + std::to_string(k) + " folds");
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    FoldAssignment fa{k, seed, std::vector<int>(pairs.size(), 0)};
    for (std::size_t pos = 0; pos < order.size(); ++pos) fa.fold_of[order[pos]] = static_cast<int>(pos % k);
    return fa;
}

} // namespace articulate
