#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "nlos/geometry.hpp"

namespace nlos {

// Parse failure carrying the offending 1-based line number.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& path, int line, const std::string& what)
        : std::runtime_error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

// Surfel file: one surfel per line, "px py pz nx ny nz area" in meters/m^2,
// '#' starts a comment line. Normals within 1e-3 of unit are renormalized,
// anything further off is rejected.
inline ObjectModel load_object(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open object file: " + path);
    ObjectModel o;
    o.name = path;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream fields(line);
        Surfel s;
        if (!(fields >> s.position.x >> s.position.y >> s.position.z >> s.normal.x >>
              s.normal.y >> s.normal.z >> s.area))
            throw ParseError(path, lineno, "expected 7 numeric fields");
        std::string extra;
        if (fields >> extra) throw ParseError(path, lineno, "trailing characters: '" + extra + "'");
        const double n = norm(s.normal);
        if (std::abs(n - 1.0) > 1e-3)
            throw ParseError(path, lineno, "normal norm " + std::to_string(n) + " too far from unit");
        // Keep already-unit normals bit-exact so save/load round-trips.
        if (std::abs(n - 1.0) > 1e-12) s.normal = s.normal / n;
        if (!(s.area > 0.0)) throw ParseError(path, lineno, "area must be > 0");
        o.surfels.push_back(s);
    }
    if (o.surfels.empty()) throw std::runtime_error(path + ": no surfels");
    return o;
}

inline void save_object(const ObjectModel& object, const std::string& path) {
    validate(object);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write object file: " + path);
    out << "# surfels: px py pz nx ny nz area\n";
    char buf[256];
    for (const auto& s : object.surfels) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g %.17g %.17g %.17g\n",
                      s.position.x, s.position.y, s.position.z, s.normal.x, s.normal.y,
                      s.normal.z, s.area);
        out << buf;
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace nlos
