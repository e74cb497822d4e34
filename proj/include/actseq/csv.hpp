#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace actseq::csv {

/// Minimal RFC-4180 reader: header row, quoted fields (embedded commas,
/// doubled quotes, newlines), CRLF tolerant. Loads the whole file up front;
/// inputs here are at most tens of MB.
class Reader {
public:
    explicit Reader(const std::string& path);

    const std::vector<std::string>& header() const { return header_; }

    /// Column index or -1.
    int column(const std::string& name) const;

    /// Column index; throws InputError naming the missing column.
    int require_column(const std::string& name) const;

    /// Advances to the next data record. Returns false at end of file.
    bool next();

    const std::vector<std::string>& row() const { return row_; }
    const std::string& field(int idx) const { return row_[static_cast<size_t>(idx)]; }

    /// 1-based index of the current data record (header excluded).
    long record_number() const { return record_number_; }

    const std::string& path() const { return path_; }

private:
    bool parse_record(std::vector<std::string>& out);

    std::string path_;
    std::string data_;
    size_t pos_ = 0;
    std::vector<std::string> header_;
    std::vector<std::string> row_;
    long record_number_ = 0;
};

/// Quotes a field if it contains a comma, quote, or newline.
std::string quote(const std::string& field);

void write_row(std::ostream& os, std::span<const std::string> fields);

/// Round-trip-exact decimal text for a double (17 significant digits).
std::string format_double(double v);

}  // namespace actseq::csv
