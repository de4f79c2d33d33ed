#pragma once

#include "wikirel/common.hpp"

#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace wikirel {

// Prefix rewrite table loaded from TSV `from<TAB>to`. Lookup picks the longest
// matching prefix.
class RedirectMap {
public:
    RedirectMap() = default;

    void add(std::string from, std::string to) { rules_[std::move(from)] = std::move(to); }

    bool empty() const { return rules_.empty(); }
    std::size_t size() const { return rules_.size(); }

    std::string apply(std::string_view url) const {
        for (std::size_t len = url.size(); len > 0; --len) {
            auto it = rules_.find(std::string(url.substr(0, len)));
            if (it != rules_.end()) return it->second + std::string(url.substr(len));
        }
        return std::string(url);
    }

    static RedirectMap from_tsv(std::istream& in, const std::string& source = "<redirects>") {
        RedirectMap m;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (trim(line).empty() || line[0] == '#') continue;
            auto tab = line.find('\t');
            if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
                throw DataError(source + ":" + std::to_string(line_no), "expected 'from<TAB>to'");
            }
            m.add(line.substr(0, tab), line.substr(tab + 1));
        }
        return m;
    }

    static RedirectMap from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw DataError(path, "cannot open redirect map");
        return from_tsv(in, path);
    }

private:
    std::map<std::string, std::string> rules_;
};

namespace detail {

inline int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

inline bool is_unreserved(unsigned char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' ||
           c == '.' || c == '_' || c == '~';
}

inline std::string decode_unreserved(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && i + 2 < s.size()) {
            int hi = hex_value(s[i + 1]);
            int lo = hex_value(s[i + 2]);
            if (hi >= 0 && lo >= 0) {
                auto c = static_cast<unsigned char>(hi * 16 + lo);
                if (is_unreserved(c)) {
                    out += static_cast<char>(c);
                    i += 2;
                    continue;
                }
            }
        }
        out += s[i];
    }
    return out;
}

inline bool valid_host_char(unsigned char c) {
    if (c >= 0x80) return true;  // IDN labels pass through as UTF-8
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '.' || c == '_' ||
           c == '[' || c == ']' || c == ':';
}

} // namespace detail

// Canonical form `scheme://host[:port]/path[?query]`, or nullopt for anything
// that is not an http(s) URL with a host.
inline std::optional<std::string> normalize_url(std::string_view raw, const RedirectMap* redirects = nullptr) {
    std::string input(trim(raw));
    if (redirects && !redirects->empty()) input = redirects->apply(input);

    auto colon = input.find("://");
    if (colon == std::string::npos) return std::nullopt;
    const std::string scheme = ascii_lower(std::string_view(input).substr(0, colon));
    if (scheme != "http" && scheme != "https") return std::nullopt;

    std::string_view rest = std::string_view(input).substr(colon + 3);
    if (auto hash = rest.find('#'); hash != std::string_view::npos) rest = rest.substr(0, hash);

    auto auth_end = rest.find_first_of("/?");
    std::string_view authority = rest.substr(0, auth_end);
    std::string_view tail = auth_end == std::string_view::npos ? std::string_view{} : rest.substr(auth_end);

    if (auto at = authority.rfind('@'); at != std::string_view::npos) authority = authority.substr(at + 1);

    std::string_view host_part = authority;
    std::string port;
    if (!authority.empty() && authority.front() == '[') {
        auto close = authority.find(']');
        if (close == std::string_view::npos) return std::nullopt;
        host_part = authority.substr(0, close + 1);
        auto after = authority.substr(close + 1);
        if (!after.empty()) {
            if (after.front() != ':') return std::nullopt;
            port = std::string(after.substr(1));
        }
    } else if (auto pc = authority.rfind(':'); pc != std::string_view::npos) {
        host_part = authority.substr(0, pc);
        port = std::string(authority.substr(pc + 1));
    }
    for (char c : port) {
        if (c < '0' || c > '9') return std::nullopt;
    }
    while (port.size() > 1 && port.front() == '0') port.erase(port.begin());
    if ((scheme == "http" && port == "80") || (scheme == "https" && port == "443")) port.clear();

    std::string host = ascii_lower(host_part);
    while (!host.empty() && host.back() == '.') host.pop_back();
    if (host.rfind("www.", 0) == 0) host.erase(0, 4);
    if (host.empty()) return std::nullopt;
    for (unsigned char c : host) {
        if (!detail::valid_host_char(c)) return std::nullopt;
    }

    std::string path = detail::decode_unreserved(tail);
    if (path.empty() || path.front() == '?') path.insert(path.begin(), '/');

    std::string out = scheme + "://" + host;
    if (!port.empty()) out += ":" + port;
    out += path;
    return out;
}

// Host of a canonical URL without the port. IPv6 literals keep their brackets.
inline std::string url_host(std::string_view url) {
    auto colon = url.find("://");
    std::string_view rest = colon == std::string_view::npos ? url : url.substr(colon + 3);
    auto end = rest.find_first_of("/?#");
    std::string_view authority = rest.substr(0, end);
    if (!authority.empty() && authority.front() == '[') {
        auto close = authority.find(']');
        return std::string(authority.substr(0, close == std::string_view::npos ? authority.size() : close + 1));
    }
    if (auto pc = authority.rfind(':'); pc != std::string_view::npos) authority = authority.substr(0, pc);
    return std::string(authority);
}

} // namespace wikirel
