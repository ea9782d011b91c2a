#pragma once

// Minimal RFC-4180 reader/writer: quoted fields, doubled quotes, embedded
// separators and line breaks inside quotes, CRLF or LF record ends.

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "t2s/common.hpp"

namespace t2s::csv {

using Row = std::vector<std::string>;

struct Record {
    std::size_t line;  // 1-based line where the record starts
    Row fields;
};

inline std::vector<Record> parse(std::string_view data) {
    std::vector<Record> records;
    Row row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;
    std::size_t record_line = 1;

    const auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    const auto end_record = [&] {
        end_field();
        // a lone empty field is a blank line
        if (!(row.size() == 1 && row[0].empty())) {
            records.push_back(Record{record_line, std::move(row)});
        }
        row.clear();
    };

    std::size_t i = 0;
    if (data.substr(0, 3) == "\xEF\xBB\xBF") {
        i = 3;
    }
    for (; i < data.size(); ++i) {
        const char c = data[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < data.size() && data[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') {
                    ++line;
                }
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (field_started) {
                    throw DataError("line " + std::to_string(line) + ": stray quote inside unquoted field");
                }
                in_quotes = true;
                field_started = true;
                break;
            case ',':
                end_field();
                break;
            case '\r':
                break;
            case '\n':
                end_record();
                ++line;
                record_line = line;
                break;
            default:
                field.push_back(c);
                field_started = true;
        }
    }
    if (in_quotes) {
        throw DataError("line " + std::to_string(record_line) + ": unterminated quoted field");
    }
    if (field_started || !field.empty() || !row.empty()) {
        end_record();
    }
    return records;
}

inline std::vector<Record> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot read CSV file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

inline std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
        return std::string(field);
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') {
            out += "\"\"";
        } else {
            out.push_back(c);
        }
    }
    out += '"';
    return out;
}

inline std::string format_row(const Row& row) {
    std::string out;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) {
            out += ',';
        }
        out += escape(row[i]);
    }
    out += '\n';
    return out;
}

/// Checks that the first record equals `expected` and returns the remaining ones.
inline std::vector<Record> expect_header(std::vector<Record> records, const Row& expected,
                                         const std::string& what) {
    if (records.empty()) {
        return records;
    }
    if (records.front().fields != expected) {
        std::string want;
        for (const auto& f : expected) {
            want += (want.empty() ? "" : ",") + f;
        }
        throw DataError(what + ": expected header '" + want + "'");
    }
    records.erase(records.begin());
    return records;
}

}  // namespace t2s::csv
