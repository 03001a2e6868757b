#pragma once

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace hypocx {

/// CSV with a header row, RFC 4180 quoting and floats at 17 significant
/// digits. Complex values take two columns.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

    CsvWriter& add(const std::string& s) {
        row_.push_back(quote(s));
        return *this;
    }
    CsvWriter& add(const char* s) { return add(std::string(s)); }
    CsvWriter& add(double v) {
        row_.push_back(format(v));
        return *this;
    }
    CsvWriter& add(std::complex<double> z) { return add(z.real()).add(z.imag()); }
    CsvWriter& add(bool b) {
        row_.push_back(b ? "true" : "false");
        return *this;
    }
    template <class T>
        requires std::is_integral_v<T> && (!std::is_same_v<T, bool>)
    CsvWriter& add(T v) {
        row_.push_back(std::to_string(v));
        return *this;
    }

    /// Closes the current row; its width must match the header.
    void end_row() {
        if (row_.size() != header_.size())
            throw std::logic_error("CsvWriter: row has " + std::to_string(row_.size()) + " fields, header has " +
                                   std::to_string(header_.size()));
        rows_.push_back(std::move(row_));
        row_.clear();
    }

    void write(std::ostream& os) const {
        write_line(os, quoted_header());
        for (const auto& r : rows_) write_line(os, r);
    }

    void save(const std::string& path) const {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write '" + path + "'");
        write(os);
        if (!os) throw std::runtime_error("write failed for '" + path + "'");
    }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_.size(); }

    [[nodiscard]] static std::string format(double v) {
        if (std::isnan(v)) return "nan";
        if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

    [[nodiscard]] static std::string quote(const std::string& s) {
        if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
        std::string out = "\"";
        for (char c : s) {
            if (c == '"') out += '"';
            out += c;
        }
        return out + '"';
    }

private:
    [[nodiscard]] std::vector<std::string> quoted_header() const {
        std::vector<std::string> h;
        for (const auto& s : header_) h.push_back(quote(s));
        return h;
    }

    static void write_line(std::ostream& os, const std::vector<std::string>& fields) {
        for (std::size_t k = 0; k < fields.size(); ++k) {
            if (k) os << ',';
            os << fields[k];
        }
        os << "\r\n";
    }

    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
    std::vector<std::string> row_;
};

} // namespace hypocx
