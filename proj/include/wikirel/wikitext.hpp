#pragma once

#include "wikirel/common.hpp"

#include <cctype>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace wikirel {

// Citation URL extraction from raw wikitext.
//
// Sources of URLs:
//   - citation templates ({{cite ...}}, {{citation ...}}): `url`,
//     `chapter-url` and `doi` parameters;
//   - {{doi|...}} templates;
//   - bracketed external links `[http://... label]` and bare http(s) links
//     in the remaining text, including inside <ref> tags.
// DOIs become https://doi.org/<doi>. ISBN/ISSN identifiers produce nothing.
// Comments, <nowiki> spans and all other templates are ignored.

namespace detail {

inline std::string strip_spans(std::string_view text, std::string_view open, std::string_view close) {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto b = text.find(open, pos);
        if (b == std::string_view::npos) {
            out.append(text.substr(pos));
            break;
        }
        out.append(text.substr(pos, b - pos));
        auto e = text.find(close, b + open.size());
        if (e == std::string_view::npos) break;  // unterminated: drop the rest
        out += ' ';
        pos = e + close.size();
    }
    return out;
}

inline std::string strip_nowiki(std::string_view text) {
    std::string out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto b = text.find('<', pos);
        if (b == std::string_view::npos) {
            out.append(text.substr(pos));
            break;
        }
        out.append(text.substr(pos, b - pos));
        if (starts_with_ci(text.substr(b), "<nowiki")) {
            auto tag_end = text.find('>', b);
            if (tag_end == std::string_view::npos) break;
            if (text[tag_end - 1] == '/') {  // <nowiki/>
                pos = tag_end + 1;
                continue;
            }
            std::size_t e = tag_end;
            while (true) {
                e = text.find("</", e);
                if (e == std::string_view::npos || starts_with_ci(text.substr(e), "</nowiki")) break;
                ++e;
            }
            if (e == std::string_view::npos) break;
            auto close = text.find('>', e);
            pos = close == std::string_view::npos ? text.size() : close + 1;
            out += ' ';
            continue;
        }
        out += '<';
        pos = b + 1;
    }
    return out;
}

// Splits template body on top-level '|' (ignoring pipes inside nested
// templates and [[links]]).
inline std::vector<std::string_view> split_template(std::string_view body) {
    std::vector<std::string_view> parts;
    int braces = 0, brackets = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < body.size(); ++i) {
        char c = body[i];
        if (c == '{' && i + 1 < body.size() && body[i + 1] == '{') {
            ++braces;
            ++i;
        } else if (c == '}' && i + 1 < body.size() && body[i + 1] == '}' && braces > 0) {
            --braces;
            ++i;
        } else if (c == '[' && i + 1 < body.size() && body[i + 1] == '[') {
            ++brackets;
            ++i;
        } else if (c == ']' && i + 1 < body.size() && body[i + 1] == ']' && brackets > 0) {
            --brackets;
            ++i;
        } else if (c == '|' && braces == 0 && brackets == 0) {
            parts.push_back(body.substr(start, i - start));
            start = i + 1;
        }
    }
    parts.push_back(body.substr(start));
    return parts;
}

inline bool is_citation_template(std::string_view name) {
    std::string n = ascii_lower(trim(name));
    for (auto& c : n) {
        if (c == '_') c = ' ';
    }
    return n.rfind("cite", 0) == 0 || n == "citation" || n.rfind("citation ", 0) == 0;
}

inline std::string doi_url(std::string_view doi) {
    std::string_view d = trim(doi);
    if (starts_with_ci(d, "doi:")) d = trim(d.substr(4));
    if (d.empty() || d.find("{{") != std::string_view::npos) return {};
    return "https://doi.org/" + std::string(d);
}

inline void template_urls(std::string_view body, std::set<std::string>& out) {
    auto parts = split_template(body);
    if (parts.empty()) return;
    const std::string name = ascii_lower(trim(parts[0]));
    if (name == "doi") {
        if (parts.size() > 1) {
            auto u = doi_url(parts[1]);
            if (!u.empty()) out.insert(u);
        }
        return;
    }
    if (!is_citation_template(parts[0])) return;
    for (std::size_t i = 1; i < parts.size(); ++i) {
        auto eq = parts[i].find('=');
        if (eq == std::string_view::npos) continue;
        std::string key = ascii_lower(trim(parts[i].substr(0, eq)));
        std::string_view value = trim(parts[i].substr(eq + 1));
        if (value.empty() || value.find("{{") != std::string_view::npos) continue;
        if (key == "url" || key == "chapter-url" || key == "chapterurl") {
            out.insert(std::string(value));
        } else if (key == "doi") {
            auto u = doi_url(value);
            if (!u.empty()) out.insert(u);
        }
    }
}

// Replaces every top-level {{...}} span with a space, handing each span's body
// to `on_template`. Unbalanced openings are dropped to end of text.
template <typename F>
std::string remove_templates(std::string_view text, F&& on_template) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '{' && i + 1 < text.size() && text[i + 1] == '{') {
            int depth = 0;
            std::size_t j = i;
            while (j < text.size()) {
                if (text[j] == '{' && j + 1 < text.size() && text[j + 1] == '{') {
                    ++depth;
                    j += 2;
                } else if (text[j] == '}' && j + 1 < text.size() && text[j + 1] == '}') {
                    --depth;
                    j += 2;
                    if (depth == 0) break;
                } else {
                    ++j;
                }
            }
            if (depth != 0) break;
            on_template(text.substr(i + 2, j - i - 4));
            out += ' ';
            i = j;
        } else {
            out += text[i++];
        }
    }
    return out;
}

inline bool url_terminator(unsigned char c) {
    return c <= 0x20 || c == '[' || c == ']' || c == '<' || c == '>' || c == '"' || c == '{' || c == '}' ||
           c == '|' || c == 0x7f;
}

// Trailing punctuation is not part of a free link; ')' only if unbalanced.
inline std::string_view trim_link_tail(std::string_view url) {
    while (!url.empty()) {
        char c = url.back();
        if (c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' || c == '\'') {
            url.remove_suffix(1);
        } else if (c == ')' && url.find('(') == std::string_view::npos) {
            url.remove_suffix(1);
        } else {
            break;
        }
    }
    return url;
}

inline void free_links(std::string_view text, std::set<std::string>& out) {
    std::size_t i = 0;
    while (i < text.size()) {
        std::size_t start = std::string_view::npos;
        if (text[i] == '[' && i + 3 < text.size() && text[i + 1] == '/' && text[i + 2] == '/') {
            // protocol-relative bracket link
            std::size_t j = i + 1;
            while (j < text.size() && !url_terminator(static_cast<unsigned char>(text[j]))) ++j;
            if (j > i + 3) out.insert("https:" + std::string(text.substr(i + 1, j - i - 1)));
            i = j;
            continue;
        }
        if (starts_with_ci(text.substr(i), "http://") || starts_with_ci(text.substr(i), "https://")) {
            bool boundary = i == 0 || !std::isalnum(static_cast<unsigned char>(text[i - 1]));
            if (boundary) start = i;
        }
        if (start == std::string_view::npos) {
            ++i;
            continue;
        }
        std::size_t j = start;
        while (j < text.size() && !url_terminator(static_cast<unsigned char>(text[j]))) ++j;
        bool bracketed = start > 0 && text[start - 1] == '[';
        std::string_view url = text.substr(start, j - start);
        if (!bracketed) url = trim_link_tail(url);
        auto scheme_end = url.find("://");
        if (url.size() > scheme_end + 3) out.insert(std::string(url));
        i = j;
    }
}

} // namespace detail

inline std::set<std::string> extract_urls(std::string_view wikitext) {
    std::set<std::string> out;
    std::string text = detail::strip_spans(wikitext, "<!--", "-->");
    text = detail::strip_nowiki(text);
    std::string rest = detail::remove_templates(text, [&](std::string_view body) { detail::template_urls(body, out); });
    detail::free_links(rest, out);
    return out;
}

} // namespace wikirel
