#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wikirel {

inline constexpr std::string_view kVersion = "1.0.0";

// Raised for malformed or inconsistent input data. `where` carries file/line
// context when known.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
    DataError(const std::string& where, const std::string& msg)
        : std::runtime_error(where + ": " + msg) {}
};

// ------------------------------------------------------------
// time
// ------------------------------------------------------------

using Instant = std::chrono::sys_seconds;

inline constexpr double kSecondsPerDay = 86400.0;

inline double days_between(Instant from, Instant to) {
    return static_cast<double>((to - from).count()) / kSecondsPerDay;
}

namespace detail {

inline bool parse_digits(std::string_view s, std::size_t pos, std::size_t n, int& out) {
    if (pos + n > s.size()) return false;
    int v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
        if (s[i] < '0' || s[i] > '9') return false;
        v = v * 10 + (s[i] - '0');
    }
    out = v;
    return true;
}

} // namespace detail

// Parses `YYYY-MM-DDThh:mm:ssZ`. Throws DataError on anything else.
inline Instant parse_instant(std::string_view s) {
    using namespace std::chrono;
    int y, mo, d, h, mi, se;
    bool ok = s.size() == 20 && detail::parse_digits(s, 0, 4, y) && s[4] == '-' &&
              detail::parse_digits(s, 5, 2, mo) && s[7] == '-' &&
              detail::parse_digits(s, 8, 2, d) && s[10] == 'T' &&
              detail::parse_digits(s, 11, 2, h) && s[13] == ':' &&
              detail::parse_digits(s, 14, 2, mi) && s[16] == ':' &&
              detail::parse_digits(s, 17, 2, se) && s[19] == 'Z';
    if (!ok || h > 23 || mi > 59 || se > 59) {
        throw DataError("invalid timestamp '" + std::string(s) + "'");
    }
    year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) throw DataError("invalid date '" + std::string(s) + "'");
    return sys_days{ymd} + hours{h} + minutes{mi} + seconds{se};
}

// Parses `YYYY-MM-DD` as midnight UTC.
inline Instant parse_date(std::string_view s) {
    if (s.size() != 10) throw DataError("invalid date '" + std::string(s) + "'");
    return parse_instant(std::string(s) + "T00:00:00Z");
}

inline std::string format_instant(Instant t) {
    using namespace std::chrono;
    auto day_point = floor<days>(t);
    year_month_day ymd{day_point};
    hh_mm_ss hms{t - day_point};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

// ------------------------------------------------------------
// randomness
//
// Only raw engine output is consumed so that sequences are identical across
// standard library implementations (std::*_distribution is not portable).
// ------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Sub-seed for an independent stream `index` under `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

using Rng = std::mt19937_64;

// Uniform integer in [0, n). Rejection sampling keeps it unbiased.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return static_cast<std::size_t>(v % bound);
}

// Uniform real in [0, 1) with 53 random bits.
inline double uniform_real(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// ------------------------------------------------------------
// text helpers
// ------------------------------------------------------------

inline std::string_view trim(std::string_view s) {
    const char* ws = " \t\r\n\f\v";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

inline bool starts_with_ci(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) return false;
    return ascii_lower(s.substr(0, prefix.size())) == ascii_lower(prefix);
}

// 17 significant digits: enough to round-trip any double.
inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// 64-bit FNV-1a, used for catalog fingerprints.
inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// ------------------------------------------------------------
// CSV
// ------------------------------------------------------------

inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

// Splits one CSV record (RFC 4180 quoting, no embedded newlines).
inline std::vector<std::string> csv_split(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

} // namespace wikirel
