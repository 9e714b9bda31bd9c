#include "uq/text.hpp"

#include <cctype>

namespace uq::text {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }
char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

const std::set<std::string>& abbreviations() {
    static const std::set<std::string> abbr = {
        "mr.", "mrs.", "ms.", "dr.", "prof.", "st.", "vs.", "etc.", "e.g.", "i.e.",
        "fig.", "eq.", "no.", "jr.", "sr.", "inc.", "cf.", "al.",
    };
    return abbr;
}

}  // namespace

std::string normalize_answer(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (is_space(s[b]) || is_punct(s[b]))) ++b;
    while (e > b && (is_space(s[e - 1]) || is_punct(s[e - 1]))) --e;
    std::string out;
    out.reserve(e - b);
    for (std::size_t i = b; i < e; ++i) out.push_back(lower(s[i]));
    return out;
}

std::vector<std::string> tokenize(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        std::string n = normalize_answer(cur);
        if (!n.empty()) out.push_back(std::move(n));
        cur.clear();
    };
    for (char c : s) {
        if (is_space(c))
            flush();
        else
            cur.push_back(c);
    }
    flush();
    return out;
}

std::set<std::string> token_set(const std::string& s) {
    auto toks = tokenize(s);
    return {toks.begin(), toks.end()};
}

std::vector<std::string> split_sentences(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    const std::size_t n = s.size();
    for (std::size_t i = 0; i < n; ++i) {
        const char c = s[i];
        if (c != '.' && c != '!' && c != '?') continue;
        // Consume a run of terminal punctuation (and closing quotes).
        std::size_t end = i + 1;
        while (end < n && (s[end] == '.' || s[end] == '!' || s[end] == '?' || s[end] == '"' ||
                           s[end] == '\''))
            ++end;
        // Needs whitespace then a capital / digit / opening quote to split.
        std::size_t ws = end;
        while (ws < n && is_space(s[ws])) ++ws;
        if (ws == end || ws >= n) continue;
        const char next = s[ws];
        if (!(std::isupper(static_cast<unsigned char>(next)) ||
              std::isdigit(static_cast<unsigned char>(next)) || next == '"' || next == '\''))
            continue;
        if (c == '.') {
            // Abbreviation guard: look back to the last word including the dot.
            std::size_t wb = i;
            while (wb > start && !is_space(s[wb - 1])) --wb;
            std::string word;
            for (std::size_t k = wb; k <= i; ++k) word.push_back(lower(s[k]));
            if (abbreviations().count(word)) continue;
        }
        std::string sent = s.substr(start, end - start);
        if (!sent.empty()) out.push_back(std::move(sent));
        start = ws;
        i = end - 1;
    }
    if (start < n) {
        std::string tail = s.substr(start);
        // Keep trailing fragment only if it has any non-space content.
        for (char c : tail) {
            if (!is_space(c)) {
                out.push_back(tail);
                break;
            }
        }
    }
    return out;
}

}  // namespace uq::text
