#include "wtdelay/csv.hpp"

#include <array>
#include <charconv>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace wtdelay::csv {

std::string format(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (res.ec != std::errc{}) throw std::runtime_error("number formatting failed");
    return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw std::invalid_argument("not a number: '" + std::string(s) + "'");
    }
    return v;
}

long long parse_int(std::string_view s) {
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw std::invalid_argument("not an integer: '" + std::string(s) + "'");
    }
    return v;
}

void Writer::header(const std::vector<std::string>& names) {
    for (const auto& n : names) field(std::string_view(n));
    end_row();
}

void Writer::separator() {
    if (row_started_) os_ << ',';
    row_started_ = true;
}

Writer& Writer::field(double v) {
    separator();
    os_ << format(v);
    return *this;
}

Writer& Writer::field(long long v) {
    separator();
    os_ << v;
    return *this;
}

Writer& Writer::field(std::uint64_t v) {
    separator();
    os_ << v;
    return *this;
}

Writer& Writer::field(std::string_view v) {
    separator();
    os_ << v;
    return *this;
}

void Writer::end_row() {
    os_ << '\n';
    row_started_ = false;
}

std::size_t Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw std::invalid_argument("missing CSV column: " + std::string(name));
}

namespace {
std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}
}  // namespace

Table read(std::istream& is) {
    Table t;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            t.header = split(line);
            first = false;
        } else {
            auto row = split(line);
            if (row.size() != t.header.size()) throw std::invalid_argument("CSV row width does not match header");
            t.rows.push_back(std::move(row));
        }
    }
    if (first) throw std::invalid_argument("CSV input has no header row");
    return t;
}

}  // namespace wtdelay::csv
