#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crashlens::csv {

/// Streaming RFC-4180 reader: quoted fields may contain commas, doubled
/// quotes and line breaks. CRLF and LF line endings are both accepted.
class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    /// Reads the next record into `fields`; false at end of input.
    bool next(std::vector<std::string>& fields);

    /// 1-based line number where the last returned record started.
    std::size_t record_line() const { return record_line_; }

private:
    std::istream& in_;
    std::size_t line_ = 1;
    std::size_t record_line_ = 0;
};

/// Header lookup by column name.
class Header {
public:
    Header() = default;
    explicit Header(std::vector<std::string> names);

    std::optional<std::size_t> find(std::string_view name) const;
    /// Throws DataError naming the missing column.
    std::size_t require(std::string_view name) const;
    const std::vector<std::string>& names() const { return names_; }

private:
    std::vector<std::string> names_;
};

std::string escape(std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

std::string_view trim(std::string_view s);

}  // namespace crashlens::csv
