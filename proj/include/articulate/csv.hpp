#pragma once

// Minimal RFC-4180 reader/writer: quoted fields, doubled quotes, embedded
// newlines, CRLF or LF line endings.

#include "articulate/error.hpp"

#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace articulate::csv {

struct Record {
    std::size_t line = 0; // 1-based line on which the record starts
    std::vector<std::string> fields;
};

inline std::vector<Record> parse(std::string_view text) {
    std::vector<Record> out;
    Record rec;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    bool row_has_content = false;
    std::size_t line = 1;
    rec.line = 1;

    auto end_field = [&] {
        rec.fields.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        if (row_has_content || !rec.fields.empty()) {
            end_field();
            out.push_back(std::move(rec));
        }
        rec = Record{};
        rec.line = line;
        row_has_content = false;
        field.clear();
        field_started = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"':
            if (field_started && !field.empty())
                throw Error(ErrorCode::MalformedRow,
                            "line " + std::to_string(line) + ": stray quote inside unquoted field");
            in_quotes = true;
            field_started = true;
            row_has_content = true;
            break;
        case ',':
            end_field();
            row_has_content = true;
            break;
        case '\r':
            break;
        case '\n':
            ++line;
            end_record();
            break;
        default:
            field.push_back(c);
            field_started = true;
            row_has_content = true;
        }
    }
    if (in_quotes)
        throw Error(ErrorCode::MalformedRow, "line " + std::to_string(rec.line) + ": unterminated quoted field");
    end_record();
    return out;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Parses a file and checks its header row; returns the data rows only.
inline std::vector<Record> read_table(const std::string& path, const std::vector<std::string>& header) {
    auto rows = parse(read_file(path));
    if (rows.empty()) throw Error(ErrorCode::MalformedRow, path + ": missing header");
    if (rows.front().fields != header) {
        std::string want;
        for (const auto& h : header) want += (want.empty() ? "" : ",") + h;
        throw Error(ErrorCode::MalformedRow, path + " line 1: expected header '" + want + "'");
    }
    rows.erase(rows.begin());
    for (const auto& r : rows) {
        if (r.fields.size() != header.size())
            throw Error(ErrorCode::MalformedRow,
                        path + " line " + std::to_string(r.line) + ": expected " +
                            std::to_string(header.size()) + " fields, got " + std::to_string(r.fields.size()));
    }
    return rows;
}

inline std::string quote(std::string_view field) {
    bool needs = field.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!needs) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline std::string join_row(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += quote(fields[i]);
    }
    out.push_back('\n');
    return out;
}

} // namespace articulate::csv
