#include "udsmon/recfile.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "udsmon/error.hpp"
#include "udsmon/hex.hpp"

namespace udsmon {

std::optional<std::string> Record::get(std::string_view key) const {
    for (const auto &[k, v] : fields) {
        if (k == key) return v;
    }
    return std::nullopt;
}

void Record::fail(const std::string &what) const {
    throw ParseError(origin, line, "[" + section + "] " + kind + ": " + what);
}

std::string Record::require(std::string_view key) const {
    auto v = get(key);
    if (!v) fail("missing field '" + std::string(key) + "'");
    return *v;
}

std::optional<std::uint64_t> Record::number(std::string_view key) const {
    auto v = get(key);
    if (!v) return std::nullopt;
    bool ok = false;
    auto n = parse_number(*v, ok);
    if (!ok) fail("field '" + std::string(key) + "' is not a number: " + *v);
    return n;
}

std::uint64_t Record::require_number(std::string_view key) const {
    auto n = number(key);
    if (!n) fail("missing field '" + std::string(key) + "'");
    return *n;
}

std::vector<std::string> Record::list(std::string_view key) const {
    std::vector<std::string> out;
    auto v = get(key);
    if (!v || v->empty()) return out;
    std::string item;
    std::istringstream ss(*v);
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<const Record *> RecordFile::in_section(std::string_view section) const {
    std::vector<const Record *> out;
    for (const auto &r : records) {
        if (r.section == section) out.push_back(&r);
    }
    return out;
}

std::uint64_t parse_number(std::string_view text, bool &ok) {
    ok = false;
    if (text.starts_with("0x") || text.starts_with("0X")) {
        auto v = parse_hex_number(text);
        if (!v) return 0;
        ok = true;
        return *v;
    }
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    ok = ec == std::errc() && ptr == text.data() + text.size() && !text.empty();
    return value;
}

namespace {

void tokenize(std::string_view text, const std::string &origin, std::size_t line, Record &rec) {
    std::size_t i = 0;
    auto skip_ws = [&] {
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\r')) ++i;
    };
    skip_ws();
    std::size_t start = i;
    while (i < text.size() && text[i] != ' ' && text[i] != '\t' && text[i] != '\r') ++i;
    rec.kind = std::string(text.substr(start, i - start));
    if (rec.kind.find('=') != std::string::npos) {
        throw ParseError(origin, line, "record must start with a kind, got '" + rec.kind + "'");
    }
    while (true) {
        skip_ws();
        if (i >= text.size() || text[i] == '#') break;
        std::size_t key_start = i;
        while (i < text.size() && text[i] != '=' && text[i] != ' ' && text[i] != '\t') ++i;
        if (i >= text.size() || text[i] != '=') {
            throw ParseError(origin, line, "expected key=value near '" +
                                               std::string(text.substr(key_start, i - key_start)) + "'");
        }
        std::string key(text.substr(key_start, i - key_start));
        if (key.empty()) throw ParseError(origin, line, "empty key");
        ++i;
        std::string value;
        if (i < text.size() && text[i] == '"') {
            ++i;
            bool closed = false;
            while (i < text.size()) {
                char c = text[i++];
                if (c == '\\' && i < text.size()) {
                    value.push_back(text[i++]);
                } else if (c == '"') {
                    closed = true;
                    break;
                } else {
                    value.push_back(c);
                }
            }
            if (!closed) throw ParseError(origin, line, "unterminated quoted value for '" + key + "'");
        } else {
            std::size_t vs = i;
            while (i < text.size() && text[i] != ' ' && text[i] != '\t' && text[i] != '\r') ++i;
            value = std::string(text.substr(vs, i - vs));
        }
        for (const auto &[k, _] : rec.fields) {
            if (k == key) throw ParseError(origin, line, "duplicate key '" + key + "'");
        }
        rec.fields.emplace_back(std::move(key), std::move(value));
    }
}

bool needs_quotes(std::string_view v) {
    if (v.empty()) return true;
    for (char c : v) {
        if (c == ' ' || c == '\t' || c == '"' || c == '#' || c == '\\') return true;
    }
    return false;
}

} // namespace

RecordFile parse_records(std::istream &in, const std::string &origin) {
    RecordFile file;
    file.origin = origin;
    std::string section;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        auto first = text.find_first_not_of(" \t\r");
        if (first == std::string::npos || text[first] == '#') continue;
        std::string_view view(text);
        view.remove_prefix(first);
        if (view.front() == '[') {
            auto close = view.find(']');
            if (close == std::string_view::npos) throw ParseError(origin, line, "unterminated section header");
            section = std::string(view.substr(1, close - 1));
            if (section.empty()) throw ParseError(origin, line, "empty section name");
            continue;
        }
        if (section.empty()) throw ParseError(origin, line, "record outside of any section");
        Record rec;
        rec.origin = origin;
        rec.section = section;
        rec.line = line;
        tokenize(view, origin, line, rec);
        file.records.push_back(std::move(rec));
    }
    return file;
}

RecordFile parse_records_text(std::string_view text, const std::string &origin) {
    std::istringstream in{std::string(text)};
    return parse_records(in, origin);
}

RecordFile load_records(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    return parse_records(in, path);
}

void RecordWriter::section(std::string_view name) {
    if (!first_section_) out_ << '\n';
    first_section_ = false;
    out_ << '[' << name << "]\n";
}

void RecordWriter::comment(std::string_view text) { out_ << "# " << text << '\n'; }

void RecordWriter::record(std::string_view kind,
                          const std::vector<std::pair<std::string, std::string>> &fields) {
    out_ << kind;
    for (const auto &[k, v] : fields) {
        out_ << ' ' << k << '=';
        if (needs_quotes(v)) {
            out_ << '"';
            for (char c : v) {
                if (c == '"' || c == '\\') out_ << '\\';
                out_ << c;
            }
            out_ << '"';
        } else {
            out_ << v;
        }
    }
    out_ << '\n';
}

std::string join(const std::vector<std::string> &items, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

} // namespace udsmon
