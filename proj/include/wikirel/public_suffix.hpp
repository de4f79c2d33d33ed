#pragma once

#include "wikirel/common.hpp"
#include "wikirel/url.hpp"

#include <fstream>
#include <istream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace wikirel {

// Public suffix rule matcher over the publicsuffix.org list format: plain
// rules, `*.` wildcards and `!` exceptions. By default only the ICANN section
// is used; private-section rules (e.g. hosting providers) are opt-in.
class PublicSuffixList {
public:
    enum class Sections { icann, all };

    PublicSuffixList() = default;

    static PublicSuffixList parse(std::istream& in, Sections sections = Sections::icann) {
        PublicSuffixList psl;
        std::string line;
        bool in_private = false;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            std::string_view l = trim(line);
            if (l.starts_with("//")) {
                if (l.find("===BEGIN PRIVATE DOMAINS===") != std::string_view::npos) in_private = true;
                if (l.find("===END PRIVATE DOMAINS===") != std::string_view::npos) in_private = false;
                if (l.starts_with("// VERSION:")) psl.version_ = std::string(trim(l.substr(11)));
                continue;
            }
            if (l.empty()) continue;
            if (in_private && sections == Sections::icann) continue;
            // Only the first whitespace-delimited token is the rule.
            auto sp = l.find_first_of(" \t");
            if (sp != std::string_view::npos) l = l.substr(0, sp);
            psl.add_rule(l);
        }
        return psl;
    }

    static PublicSuffixList from_file(const std::string& path, Sections sections = Sections::icann) {
        std::ifstream in(path);
        if (!in) throw DataError(path, "cannot open public suffix list");
        return parse(in, sections);
    }

    void add_rule(std::string_view rule) {
        Kind kind = Kind::normal;
        if (rule.starts_with("!")) {
            kind = Kind::exception;
            rule.remove_prefix(1);
        } else if (rule.starts_with("*.")) {
            kind = Kind::wildcard;
            rule.remove_prefix(2);
        }
        auto& slot = rules_[ascii_lower(rule)];
        slot |= static_cast<unsigned>(kind);
    }

    std::size_t size() const { return rules_.size(); }
    const std::string& version() const { return version_; }

    // Registrable domain (public suffix plus one label) of `host`. Hosts that
    // are IP literals, match no rule, or are themselves a public suffix are
    // returned unchanged.
    std::string registrable_domain(std::string_view host) const {
        std::string h = ascii_lower(host);
        while (!h.empty() && h.back() == '.') h.pop_back();
        if (h.empty() || is_ip_literal(h)) return h;

        std::vector<std::size_t> starts{0};  // start offset of each label
        for (std::size_t i = 0; i < h.size(); ++i) {
            if (h[i] == '.') starts.push_back(i + 1);
        }
        const std::size_t n = starts.size();

        // Walk suffixes from longest to shortest; the first hit is the longest
        // matching rule. Exceptions win over any other rule.
        std::size_t suffix_labels = 0;
        for (std::size_t k = 0; k < n; ++k) {
            std::string_view suffix = std::string_view(h).substr(starts[k]);
            auto it = rules_.find(std::string(suffix));
            if (it != rules_.end() && (it->second & static_cast<unsigned>(Kind::exception))) {
                suffix_labels = n - k - 1;
                break;
            }
            if (it != rules_.end() && (it->second & static_cast<unsigned>(Kind::normal))) {
                suffix_labels = n - k;
                break;
            }
            // A wildcard rule registered at the parent of this suffix.
            if (k + 1 < n) {
                auto parent = rules_.find(std::string(std::string_view(h).substr(starts[k + 1])));
                if (parent != rules_.end() && (parent->second & static_cast<unsigned>(Kind::wildcard))) {
                    suffix_labels = n - k;
                    break;
                }
            }
        }
        if (suffix_labels == 0 || suffix_labels >= n) return h;
        return h.substr(starts[n - suffix_labels - 1]);
    }

    // Domain of a canonical URL.
    std::string extract_domain(std::string_view url) const { return registrable_domain(url_host(url)); }

    static bool is_ip_literal(std::string_view h) {
        if (!h.empty() && h.front() == '[') return true;
        int dots = 0;
        for (char c : h) {
            if (c == '.') {
                ++dots;
            } else if (c < '0' || c > '9') {
                return false;
            }
        }
        return dots == 3;
    }

private:
    enum class Kind : unsigned { normal = 1, wildcard = 2, exception = 4 };

    std::unordered_map<std::string, unsigned> rules_;
    std::string version_;
};

} // namespace wikirel
