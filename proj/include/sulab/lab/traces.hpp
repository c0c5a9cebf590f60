#pragma once

// Per-time aggregates across repetitions and their CSV form.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "sulab/errors.hpp"

namespace sulab::lab {

struct AggregateTrace {
    std::string series;
    std::vector<double> x;
    std::vector<double> mean;
    std::vector<double> std;  // population standard deviation (divisor R)

    std::size_t size() const noexcept { return x.size(); }
};

// Two-pass mean and population std at every index; reps must share a length.
inline AggregateTrace aggregate(std::string series, const std::vector<std::vector<double>>& reps,
                                std::vector<double> x = {}) {
    if (reps.empty()) throw DomainError("aggregate needs at least one repetition");
    const std::size_t len = reps.front().size();
    for (const auto& r : reps)
        if (r.size() != len) throw DimensionError("repetitions differ in length");
    if (x.empty()) {
        x.resize(len);
        for (std::size_t i = 0; i < len; ++i) x[i] = static_cast<double>(i + 1);
    }
    if (x.size() != len) throw DimensionError("x grid length mismatch");
    AggregateTrace a;
    a.series = std::move(series);
    a.x = std::move(x);
    a.mean.assign(len, 0.0);
    a.std.assign(len, 0.0);
    const double R = static_cast<double>(reps.size());
    for (std::size_t i = 0; i < len; ++i) {
        double s = 0.0;
        for (const auto& r : reps) s += r[i];
        const double m = s / R;
        double v = 0.0;
        for (const auto& r : reps) v += (r[i] - m) * (r[i] - m);
        a.mean[i] = m;
        a.std[i] = std::sqrt(v / R);
    }
    return a;
}

inline std::string format_number(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
    if (ec != std::errc()) throw std::runtime_error("number formatting failed");
    return std::string(buf, p);
}

// Header "t,series,mean,std"; series-major, then t ascending; LF endings.
inline void write_csv(std::ostream& out, const std::vector<AggregateTrace>& traces) {
    out << "t,series,mean,std\n";
    for (const auto& tr : traces) {
        if (tr.series.find_first_of(",\n\"") != std::string::npos)
            throw DomainError("series names may not contain commas, quotes or newlines");
        for (std::size_t i = 0; i < tr.size(); ++i)
            out << format_number(tr.x[i]) << ',' << tr.series << ',' << format_number(tr.mean[i]) << ','
                << format_number(tr.std[i]) << '\n';
    }
}

inline void emit_csv(const std::vector<AggregateTrace>& traces, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    write_csv(out, traces);
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

inline std::vector<AggregateTrace> parse_csv(std::istream& in) {
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line) || line != "t,series,mean,std") throw ParseError("bad CSV header", 1);
    std::vector<AggregateTrace> out;
    auto num = [&](std::string_view s) {
        double v = 0.0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size()) throw ParseError("bad number '" + std::string(s) + "'", lineno);
        return v;
    };
    while (std::getline(in, line)) {
        ++lineno;
        std::vector<std::string_view> f;
        std::string_view sv(line);
        std::size_t start = 0;
        for (std::size_t i = 0; i <= sv.size(); ++i)
            if (i == sv.size() || sv[i] == ',') {
                f.push_back(sv.substr(start, i - start));
                start = i + 1;
            }
        if (f.size() != 4) throw ParseError("expected 4 fields", lineno);
        if (out.empty() || out.back().series != f[1]) out.push_back({std::string(f[1]), {}, {}, {}});
        out.back().x.push_back(num(f[0]));
        out.back().mean.push_back(num(f[2]));
        out.back().std.push_back(num(f[3]));
    }
    return out;
}

}  // namespace sulab::lab
