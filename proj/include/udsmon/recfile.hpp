#pragma once

// Sectioned record text used by every configuration and data file:
//
//   # comment
//   [section]
//   kind key=value key="quoted value" list=a,b,c
//
// Records remember their section and line so callers can raise ParseError
// with the exact location.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace udsmon {

class Record {
public:
    std::string origin;
    std::string section;
    std::string kind;
    std::size_t line = 0;
    std::vector<std::pair<std::string, std::string>> fields;

    std::optional<std::string> get(std::string_view key) const;
    bool has(std::string_view key) const { return get(key).has_value(); }

    // The accessors below throw ParseError pointing at this record.
    std::string require(std::string_view key) const;
    std::uint64_t require_number(std::string_view key) const;
    std::optional<std::uint64_t> number(std::string_view key) const;
    std::vector<std::string> list(std::string_view key) const;
    [[noreturn]] void fail(const std::string &what) const;
};

struct RecordFile {
    std::string origin;
    std::vector<Record> records;

    std::vector<const Record *> in_section(std::string_view section) const;
};

RecordFile parse_records(std::istream &in, const std::string &origin);
RecordFile parse_records_text(std::string_view text, const std::string &origin);
RecordFile load_records(const std::string &path);

// Numbers are written in hex ("0x..") or decimal; both parse back.
std::uint64_t parse_number(std::string_view text, bool &ok);

class RecordWriter {
public:
    explicit RecordWriter(std::ostream &out) : out_(out) {}

    void section(std::string_view name);
    void comment(std::string_view text);
    void record(std::string_view kind, const std::vector<std::pair<std::string, std::string>> &fields);

private:
    std::ostream &out_;
    bool first_section_ = true;
};

std::string join(const std::vector<std::string> &items, std::string_view sep);

} // namespace udsmon
