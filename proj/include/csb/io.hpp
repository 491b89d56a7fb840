#ifndef CSB_IO_HPP
#define CSB_IO_HPP

#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

#include "csb/core.hpp"

namespace csb {

// 17 significant digits: enough to reproduce any double exactly on re-read,
// and stable across runs, which keeps artifact files byte-comparable.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace io {

inline std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

// Tiny insertion-ordered JSON builders. Output formatting is fully under our
// control (doubles via fmt17), so identical runs serialize identically.
class JsonArr;

class JsonObj {
  public:
    JsonObj& add(const std::string& key, double v) { return raw(key, fmt17(v)); }
    JsonObj& add(const std::string& key, int v) { return raw(key, std::to_string(v)); }
    JsonObj& add(const std::string& key, std::size_t v) { return raw(key, std::to_string(v)); }
    JsonObj& add(const std::string& key, bool v) { return raw(key, v ? "true" : "false"); }
    JsonObj& add(const std::string& key, const char* v) {
        return raw(key, "\"" + json_escape(v) + "\"");
    }
    JsonObj& add(const std::string& key, const std::string& v) {
        return raw(key, "\"" + json_escape(v) + "\"");
    }
    JsonObj& raw(const std::string& key, const std::string& rendered) {
        if (!items_.empty()) items_ += ',';
        items_ += '"' + json_escape(key) + "\":" + rendered;
        return *this;
    }
    std::string str() const { return "{" + items_ + "}"; }

  private:
    std::string items_;
};

class JsonArr {
  public:
    JsonArr& add(double v) { return raw(fmt17(v)); }
    JsonArr& add(int v) { return raw(std::to_string(v)); }
    JsonArr& add(std::size_t v) { return raw(std::to_string(v)); }
    JsonArr& add(const std::string& v) { return raw("\"" + json_escape(v) + "\""); }
    JsonArr& raw(const std::string& rendered) {
        if (!items_.empty()) items_ += ',';
        items_ += rendered;
        return *this;
    }
    std::string str() const { return "[" + items_ + "]"; }

  private:
    std::string items_;
};

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << content;
    if (!f) throw std::runtime_error("write failed: " + path);
}

class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> header) : cols_(header.size()) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) out_ += ',';
            out_ += header[i];
        }
        out_ += '\n';
    }

    CsvWriter& cell(double v) { return cell_raw(fmt17(v)); }
    CsvWriter& cell(std::size_t v) { return cell_raw(std::to_string(v)); }
    CsvWriter& cell(int v) { return cell_raw(std::to_string(v)); }
    CsvWriter& cell(bool v) { return cell_raw(v ? "true" : "false"); }
    CsvWriter& cell(const std::string& v) { return cell_raw(v); }
    CsvWriter& cell_raw(const std::string& v) {
        if (in_row_) out_ += ',';
        out_ += v;
        in_row_ = true;
        if (++filled_ == cols_) end_row();
        return *this;
    }
    void end_row() {
        out_ += '\n';
        in_row_ = false;
        filled_ = 0;
    }
    void save(const std::string& path) const { write_text_file(path, out_); }
    const std::string& str() const { return out_; }

  private:
    std::string out_;
    std::size_t cols_ = 0;
    std::size_t filled_ = 0;
    bool in_row_ = false;
};

// Two-column time/cases file (header required). Returned values are raw; the
// caller checks the times against its grid.
inline std::pair<std::vector<double>, std::vector<double>> read_time_series_csv(
    const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open data file: " + path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("empty data file: " + path);
    std::vector<double> times, values;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected two comma-separated columns");
        char* end = nullptr;
        const std::string a = line.substr(0, comma), b = line.substr(comma + 1);
        const double t = std::strtod(a.c_str(), &end);
        if (end == a.c_str())
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad time value");
        const double v = std::strtod(b.c_str(), &end);
        if (end == b.c_str())
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad cases value");
        times.push_back(t);
        values.push_back(v);
    }
    return {std::move(times), std::move(values)};
}

// Exclusive-create lock file; a second command on the same output directory
// fails fast instead of interleaving writes.
class DirLock {
  public:
    explicit DirLock(const std::string& dir) : path_(dir + "/.lock") {
        fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd_ < 0) {
            if (errno == EEXIST)
                throw std::runtime_error("output directory is locked by another run: " + path_);
            throw std::runtime_error("cannot create lock file: " + path_ + ": " +
                                     std::strerror(errno));
        }
    }
    ~DirLock() {
        if (fd_ >= 0) {
            ::close(fd_);
            ::unlink(path_.c_str());
        }
    }
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

  private:
    std::string path_;
    int fd_ = -1;
};

}  // namespace io
}  // namespace csb

#endif
