#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "forceid/bem.hpp"
#include "forceid/errors.hpp"
#include "forceid/linalg.hpp"
#include "forceid/model.hpp"

namespace forceid::csv {

/// 17 significant digits, enough to round-trip every double.
inline std::string format(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Column-oriented table written as comma-separated text with a header row.
class Table {
public:
    explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(std::initializer_list<double> values) { add_row(std::vector<double>(values)); }

    void add_row(const std::vector<double>& values) {
        if (values.size() != header_.size())
            throw DimensionError("csv row has " + std::to_string(values.size()) +
                                 " fields, header has " + std::to_string(header_.size()));
        rows_.push_back(values);
    }

    const std::vector<std::string>& header() const noexcept { return header_; }
    const std::vector<std::vector<double>>& rows() const noexcept { return rows_; }

    void write(std::ostream& os) const {
        for (std::size_t i = 0; i < header_.size(); ++i) os << (i ? "," : "") << header_[i];
        os << '\n';
        for (const auto& row : rows_) {
            for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format(row[i]);
            os << '\n';
        }
    }

    std::string str() const {
        std::ostringstream os;
        write(os);
        return os.str();
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot open " + path.string() + " for writing");
        write(out);
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<double>> rows_;
};

inline Table traces_table(const bem::BoundaryTraces& tr) {
    Table t({"t", "v0", "vL", "dv0", "dvL"});
    for (std::size_t k = 0; k < tr.size(); ++k)
        t.add_row({tr.t[k], tr.v0[k], tr.vL[k], tr.dv0[k], tr.dvL[k]});
    return t;
}

/// Long format `x,t,<name>` of a sampled field.
inline Table field_table(const SampledField& f, const std::string& name) {
    Table t({"x", "t", name});
    for (std::size_t n = 0; n < f.ts.size(); ++n)
        for (std::size_t i = 0; i < f.xs.size(); ++i) t.add_row({f.xs[i], f.ts[n], f.at(i, n)});
    return t;
}

inline double parse_double(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
        text.remove_suffix(1);
    double v = 0.0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc{} || end != text.data() + text.size())
        throw ValidationError("not a number: '" + std::string(text) + "'");
    return v;
}

/// Reads a two-column `coordinate,value` file (header row required) into a tabulated profile.
inline Profile read_profile(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open sample file " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path.string() + " is empty");
    Vector coords, values;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": expected 'coordinate,value'");
        coords.push_back(parse_double(std::string_view(line).substr(0, comma)));
        values.push_back(parse_double(std::string_view(line).substr(comma + 1)));
    }
    return Profile::tabulated(std::move(coords), std::move(values), path.string());
}

}  // namespace forceid::csv
