#pragma once

// Minimal CSV plumbing: shortest round-trip number formatting, a row writer
// and a plain comma splitter. Fields never contain commas or quotes.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace wtdelay::csv {

/// Shortest decimal text that parses back to the same double.
std::string format(double v);

double parse_double(std::string_view s);
long long parse_int(std::string_view s);

class Writer {
public:
    explicit Writer(std::ostream& os) : os_(os) {}

    void header(const std::vector<std::string>& names);
    Writer& field(double v);
    Writer& field(long long v);
    Writer& field(int v) { return field(static_cast<long long>(v)); }
    Writer& field(std::uint64_t v);
    Writer& field(std::string_view v);
    Writer& field(const char* v) { return field(std::string_view(v)); }
    void end_row();

private:
    void separator();

    std::ostream& os_;
    bool row_started_ = false;
};

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a header column; throws if missing.
    std::size_t column(std::string_view name) const;
};

Table read(std::istream& is);

}  // namespace wtdelay::csv
