#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace pltrap {

// shortest round-trip decimal form; locale-free and deterministic
inline std::string fmt_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string fmt_int(int64_t v) {
    char buf[24];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::string& header) : out_(path) {
        out_ << header << "\n";
    }
    void raw_row(const std::string& line) { out_ << line << "\n"; }
    template <typename... Ts>
    void row(const Ts&... fields) {
        bool first = true;
        ((out_ << (first ? "" : ",") << field_str(fields), first = false), ...);
        out_ << "\n";
    }
    bool good() const { return out_.good(); }

private:
    static std::string field_str(double v) { return fmt_double(v); }
    static std::string field_str(int v) { return fmt_int(v); }
    static std::string field_str(int64_t v) { return fmt_int(v); }
    static std::string field_str(uint64_t v) { return fmt_int(int64_t(v)); }
    static std::string field_str(const std::string& s) { return s; }
    static std::string field_str(const char* s) { return s; }
    std::ofstream out_;
};

} // namespace pltrap
