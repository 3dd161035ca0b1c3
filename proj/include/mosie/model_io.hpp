#pragma once

// Line-oriented text container for model files: "key value" header lines,
// matrix blocks introduced by "matrix <name> <rows> <cols>" followed by one
// tab-separated row per line. Doubles are printed with %.17g so a save/load
// cycle reproduces them bit for bit.

#include <Eigen/Dense>
#include <cstdio>
#include <istream>
#include <sstream>
#include <string>

#include "mosie/error.hpp"

namespace mosie::io {

inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_matrix(std::ostream& os, const std::string& name, const Eigen::MatrixXd& m) {
    os << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (long i = 0; i < m.rows(); ++i) {
        for (long j = 0; j < m.cols(); ++j) {
            if (j) os << '\t';
            os << fmt_double(m(i, j));
        }
        os << '\n';
    }
}

class Reader {
public:
    Reader(std::istream& is, std::string path) : is_(is), path_(std::move(path)) {}

    std::string next_line() {
        std::string line;
        if (!std::getline(is_, line)) throw Error(Err::model, path_ + ": unexpected end of file");
        return line;
    }

    void expect_line(const std::string& expected) {
        const std::string line = next_line();
        if (line != expected)
            throw Error(Err::model, path_ + ": expected '" + expected + "', got '" + line + "'");
    }

    std::string read_keyed_string(const std::string& key) {
        const std::string line = next_line();
        std::istringstream ss(line);
        std::string k, v;
        if (!(ss >> k >> v) || k != key)
            throw Error(Err::model, path_ + ": expected key '" + key + "', got '" + line + "'");
        return v;
    }

    long read_keyed_int(const std::string& key) { return std::stol(read_keyed_string(key)); }
    double read_keyed_double(const std::string& key) { return std::stod(read_keyed_string(key)); }

    Eigen::MatrixXd read_matrix(const std::string& name) {
        const std::string line = next_line();
        std::istringstream ss(line);
        std::string tag, got_name;
        long rows = 0, cols = 0;
        if (!(ss >> tag >> got_name >> rows >> cols) || tag != "matrix" || got_name != name)
            throw Error(Err::model, path_ + ": expected matrix '" + name + "', got '" + line + "'");
        if (rows < 0 || cols < 0 || rows * cols > (1L << 28))
            throw Error(Err::model, path_ + ": implausible matrix size");
        Eigen::MatrixXd m(rows, cols);
        for (long i = 0; i < rows; ++i) {
            const std::string row = next_line();
            const char* p = row.c_str();
            char* endp = nullptr;
            for (long j = 0; j < cols; ++j) {
                m(i, j) = std::strtod(p, &endp);
                if (endp == p)
                    throw Error(Err::model, path_ + ": malformed matrix row in " + name);
                p = endp;
            }
        }
        return m;
    }

private:
    std::istream& is_;
    std::string path_;
};

} // namespace mosie::io
