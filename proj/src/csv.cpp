#include "actseq/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "actseq/errors.hpp"

namespace actseq::csv {

Reader::Reader(const std::string& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open CSV file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    data_ = ss.str();
    if (!parse_record(header_)) throw InputError("empty CSV file: " + path);
}

int Reader::column(const std::string& name) const {
    for (size_t i = 0; i < header_.size(); ++i) {
        if (header_[i] == name) return static_cast<int>(i);
    }
    return -1;
}

int Reader::require_column(const std::string& name) const {
    int idx = column(name);
    if (idx < 0) throw InputError(path_ + ": missing column '" + name + "'");
    return idx;
}

bool Reader::next() {
    if (!parse_record(row_)) return false;
    ++record_number_;
    return true;
}

bool Reader::parse_record(std::vector<std::string>& out) {
    if (pos_ >= data_.size()) return false;
    out.clear();
    std::string field;
    bool quoted = false;
    while (pos_ < data_.size()) {
        char c = data_[pos_];
        if (quoted) {
            if (c == '"') {
                if (pos_ + 1 < data_.size() && data_[pos_ + 1] == '"') {
                    field.push_back('"');
                    pos_ += 2;
                } else {
                    quoted = false;
                    ++pos_;
                }
            } else {
                field.push_back(c);
                ++pos_;
            }
            continue;
        }
        if (c == '"' && field.empty()) {
            quoted = true;
            ++pos_;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
            ++pos_;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && pos_ + 1 < data_.size() && data_[pos_ + 1] == '\n') ++pos_;
            ++pos_;
            out.push_back(std::move(field));
            return true;
        } else {
            field.push_back(c);
            ++pos_;
        }
    }
    out.push_back(std::move(field));
    return true;
}

std::string quote(const std::string& field) {
    bool needs = field.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

void write_row(std::ostream& os, std::span<const std::string> fields) {
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i) os << ',';
        os << quote(fields[i]);
    }
    os << '\n';
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace actseq::csv
