// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "latentem/contingency_table.hpp"
#include "latentem/errors.hpp"

namespace latentem {

namespace detail {

inline std::string trim(std::string_view s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string_view::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return std::string(s.substr(begin, end - begin + 1));
}

inline std::optional<double> try_parse_double(const std::string& cell) {
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return value;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return std::move(buffer).str();
}

}  // namespace detail

/// Dense CSV of non-negative counts with an optional header row and an
/// optional leading label column, both auto-detected (a non-numeric cell
/// marks a label). Values are normalized; all-zero rows or columns are
/// rejected as for any user-supplied count matrix.
inline ContingencyTable parse_csv(std::istream& in) {
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        std::vector<std::string> cells;
        std::stringstream fields(line);
        std::string cell;
        while (std::getline(fields, cell, ',')) cells.push_back(detail::trim(cell));
        rows.push_back(std::move(cells));
    }
    if (rows.empty()) throw ParseError("CSV input has no rows");

    auto all_numeric = [](const std::vector<std::string>& cells, std::size_t from) {
        for (std::size_t c = from; c < cells.size(); ++c)
            if (!detail::try_parse_double(cells[c])) return false;
        return true;
    };
    // A label column shows as a non-numeric first cell on every line (the
    // corner of a header row included); a header row shows as non-numeric
    // cells beyond that column. Numeric labels are indistinguishable from
    // data and are treated as data.
    bool label_col = true;
    for (const auto& cells : rows)
        if (detail::try_parse_double(cells[0])) label_col = false;
    const bool header_row = !all_numeric(rows[0], label_col ? 1 : 0);
    const std::size_t data_start = header_row ? 1 : 0;
    if (data_start >= rows.size()) throw ParseError("CSV input has no data rows");

    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    const std::size_t first_value = label_col ? 1 : 0;
    const std::size_t width = rows[data_start].size() - first_value;
    if (width == 0) throw ParseError("CSV input has no value columns");
    if (header_row) {
        const auto& head = rows[0];
        // The corner cell above the label column may be present or absent.
        std::size_t skip = 0;
        if (head.size() == width + first_value) skip = first_value;
        else if (head.size() == width) skip = 0;
        else throw ParseError("CSV header width does not match the data rows");
        col_labels.assign(head.begin() + static_cast<std::ptrdiff_t>(skip), head.end());
    }

    Matrix values(static_cast<Eigen::Index>(rows.size() - data_start),
                  static_cast<Eigen::Index>(width));
    for (std::size_t r = data_start; r < rows.size(); ++r) {
        const auto& cells = rows[r];
        if (cells.size() != width + first_value)
            throw ParseError("CSV row " + std::to_string(r + 1) + " has " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(width + first_value));
        if (label_col) row_labels.push_back(cells[0]);
        for (std::size_t c = first_value; c < cells.size(); ++c) {
            const auto value = detail::try_parse_double(cells[c]);
            if (!value)
                throw ParseError("CSV cell '" + cells[c] + "' at row " +
                                 std::to_string(r + 1) + " is not a number");
            values(static_cast<Eigen::Index>(r - data_start),
                   static_cast<Eigen::Index>(c - first_value)) = *value;
        }
    }
    return ContingencyTable::normalize(std::move(values), std::move(row_labels),
                                       std::move(col_labels));
}

inline ContingencyTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return parse_csv(in);
}

/// Whitespace-separated `src dst weight` lines aggregated into a square
/// table over the union of vertex labels, in order of first appearance.
/// Absent pairs are zero; `#` starts a comment. Zero rows or columns are
/// legitimate here (a pure source has an empty in-column).
inline ContingencyTable parse_edge_list(std::istream& in) {
    std::map<std::string, Eigen::Index> index;
    std::vector<std::string> labels;
    std::vector<std::tuple<Eigen::Index, Eigen::Index, double>> edges;
    auto vertex = [&](const std::string& label) {
        const auto [it, inserted] =
            index.try_emplace(label, static_cast<Eigen::Index>(labels.size()));
        if (inserted) labels.push_back(label);
        return it->second;
    };

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.resize(hash);
        std::stringstream fields(line);
        std::string src, dst, weight_text;
        if (!(fields >> src)) continue;  // blank line
        std::string extra;
        if (!(fields >> dst >> weight_text) || (fields >> extra))
            throw ParseError("edge list line " + std::to_string(line_no) +
                             " is not `src dst weight`");
        const auto weight = detail::try_parse_double(weight_text);
        if (!weight)
            throw ParseError("edge weight '" + weight_text + "' at line " +
                             std::to_string(line_no) + " is not a number");
        if (*weight < 0.0)
            throw NegativeEntryError("negative edge weight at line " +
                                     std::to_string(line_no));
        // Sequenced so the source claims its index before the target.
        const Eigen::Index src_index = vertex(src);
        const Eigen::Index dst_index = vertex(dst);
        edges.emplace_back(src_index, dst_index, *weight);
    }
    if (labels.empty()) throw ParseError("edge list has no edges");

    const auto n = static_cast<Eigen::Index>(labels.size());
    Matrix values = Matrix::Zero(n, n);
    for (const auto& [src, dst, weight] : edges) values(src, dst) += weight;
    return ContingencyTable::from_frequencies(std::move(values), labels, labels);
}

inline ContingencyTable read_edge_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return parse_edge_list(in);
}

// ---------------------------------------------------------------------------
// Text ingestion: letters a-z plus the blank space.

/// `observed` restricts the bigram table to symbols that actually occur;
/// `full` always uses the 27-symbol alphabet (space + a..z).
enum class AlphabetPolicy { observed, full };

namespace detail {

inline std::uint32_t decode_utf8(std::string_view text, std::size_t& pos) {
    const auto byte = [&](std::size_t offset) -> std::uint32_t {
        return static_cast<unsigned char>(text[pos + offset]);
    };
    const std::uint32_t lead = byte(0);
    std::size_t length;
    std::uint32_t cp;
    if (lead < 0x80) {
        length = 1;
        cp = lead;
    } else if ((lead & 0xE0) == 0xC0) {
        length = 2;
        cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
        length = 3;
        cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
        length = 4;
        cp = lead & 0x07;
    } else {
        throw UnmappableEncodingError("invalid UTF-8 lead byte at offset " +
                                      std::to_string(pos));
    }
    if (pos + length > text.size())
        throw UnmappableEncodingError("truncated UTF-8 sequence at offset " +
                                      std::to_string(pos));
    for (std::size_t k = 1; k < length; ++k) {
        if ((byte(k) & 0xC0) != 0x80)
            throw UnmappableEncodingError("invalid UTF-8 continuation at offset " +
                                          std::to_string(pos + k));
        cp = (cp << 6) | (byte(k) & 0x3F);
    }
    pos += length;
    return cp;
}

/// Base letter of an accented Latin codepoint under canonical (NFD)
/// decomposition, or 0 when the codepoint does not decompose to a basic
/// letter plus combining marks (ligatures like oe stay opaque and fall
/// through to the space mapping).
inline char accent_base(std::uint32_t cp) {
    switch (cp) {
        case 0xC0: case 0xC1: case 0xC2: case 0xC3: case 0xC4: case 0xC5:
        case 0xE0: case 0xE1: case 0xE2: case 0xE3: case 0xE4: case 0xE5:
        case 0x100: case 0x101: case 0x102: case 0x103: case 0x104: case 0x105:
            return 'a';
        case 0xC7: case 0xE7:
        case 0x106: case 0x107: case 0x108: case 0x109: case 0x10A: case 0x10B:
        case 0x10C: case 0x10D:
            return 'c';
        case 0x10E: case 0x10F:
            return 'd';
        case 0xC8: case 0xC9: case 0xCA: case 0xCB:
        case 0xE8: case 0xE9: case 0xEA: case 0xEB:
        case 0x112: case 0x113: case 0x114: case 0x115: case 0x116: case 0x117:
        case 0x118: case 0x119: case 0x11A: case 0x11B:
            return 'e';
        case 0x11C: case 0x11D: case 0x11E: case 0x11F: case 0x120: case 0x121:
        case 0x122: case 0x123:
            return 'g';
        case 0x124: case 0x125:
            return 'h';
        case 0xCC: case 0xCD: case 0xCE: case 0xCF:
        case 0xEC: case 0xED: case 0xEE: case 0xEF:
        case 0x128: case 0x129: case 0x12A: case 0x12B: case 0x12C: case 0x12D:
        case 0x12E: case 0x12F: case 0x130:
            return 'i';
        case 0x134: case 0x135:
            return 'j';
        case 0x136: case 0x137:
            return 'k';
        case 0x139: case 0x13A: case 0x13B: case 0x13C: case 0x13D: case 0x13E:
            return 'l';
        case 0xD1: case 0xF1:
        case 0x143: case 0x144: case 0x145: case 0x146: case 0x147: case 0x148:
            return 'n';
        case 0xD2: case 0xD3: case 0xD4: case 0xD5: case 0xD6:
        case 0xF2: case 0xF3: case 0xF4: case 0xF5: case 0xF6:
        case 0x14C: case 0x14D: case 0x14E: case 0x14F: case 0x150: case 0x151:
            return 'o';
        case 0x154: case 0x155: case 0x156: case 0x157: case 0x158: case 0x159:
            return 'r';
        case 0x15A: case 0x15B: case 0x15C: case 0x15D: case 0x15E: case 0x15F:
        case 0x160: case 0x161:
            return 's';
        case 0x162: case 0x163: case 0x164: case 0x165:
            return 't';
        case 0xD9: case 0xDA: case 0xDB: case 0xDC:
        case 0xF9: case 0xFA: case 0xFB: case 0xFC:
        case 0x168: case 0x169: case 0x16A: case 0x16B: case 0x16C: case 0x16D:
        case 0x16E: case 0x16F: case 0x170: case 0x171: case 0x172: case 0x173:
            return 'u';
        case 0x174: case 0x175:
            return 'w';
        case 0xDD: case 0xFD: case 0xFF:
        case 0x176: case 0x177: case 0x178:
            return 'y';
        case 0x179: case 0x17A: case 0x17B: case 0x17C: case 0x17D: case 0x17E:
            return 'z';
        default:
            return 0;
    }
}

inline bool is_combining_mark(std::uint32_t cp) { return cp >= 0x300 && cp <= 0x36F; }

}  // namespace detail

/// Reduces text to the 27-symbol stream used for bigram counting: letters
/// lower-cased, accents folded to their base letter, combining marks
/// stripped, every other character turned into a space, and space runs
/// collapsed. Leading or trailing blanks are kept, so a text wrapped in
/// spaces yields an exactly marginally homogeneous bigram table.
inline std::string tokenize_text(std::string_view text) {
    std::string tokens;
    tokens.reserve(text.size());
    auto emit = [&tokens](char c) {
        if (c == ' ' && !tokens.empty() && tokens.back() == ' ') return;
        tokens.push_back(c);
    };
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::uint32_t cp = detail::decode_utf8(text, pos);
        if (cp >= 'a' && cp <= 'z') {
            emit(static_cast<char>(cp));
        } else if (cp >= 'A' && cp <= 'Z') {
            emit(static_cast<char>(cp - 'A' + 'a'));
        } else if (detail::is_combining_mark(cp)) {
            // stripped: the preceding base letter already carries the token
        } else if (const char base = detail::accent_base(cp); base != 0) {
            emit(base);
        } else {
            emit(' ');
        }
    }
    return tokens;
}

/// Bigram table of consecutive token pairs. The space symbol is labeled "_".
inline ContingencyTable bigram_table(std::string_view text,
                                     AlphabetPolicy policy = AlphabetPolicy::observed) {
    const std::string tokens = tokenize_text(text);
    if (tokens.size() < 2)
        throw EmptyTextError("text yields fewer than two tokens; no bigrams");

    std::string alphabet;
    if (policy == AlphabetPolicy::full) {
        alphabet = " abcdefghijklmnopqrstuvwxyz";
    } else {
        bool seen[128] = {};
        for (const char c : tokens) seen[static_cast<unsigned char>(c)] = true;
        for (char c = ' '; c <= 'z'; ++c)  // ' ' sorts before 'a'..'z'
            if (seen[static_cast<unsigned char>(c)]) alphabet.push_back(c);
    }
    Eigen::Index of[128];
    std::fill(std::begin(of), std::end(of), Eigen::Index{-1});
    std::vector<std::string> labels;
    for (std::size_t s = 0; s < alphabet.size(); ++s) {
        of[static_cast<unsigned char>(alphabet[s])] = static_cast<Eigen::Index>(s);
        labels.emplace_back(1, alphabet[s] == ' ' ? '_' : alphabet[s]);
    }

    const auto n = static_cast<Eigen::Index>(alphabet.size());
    Matrix counts = Matrix::Zero(n, n);
    for (std::size_t t = 0; t + 1 < tokens.size(); ++t)
        counts(of[static_cast<unsigned char>(tokens[t])],
               of[static_cast<unsigned char>(tokens[t + 1])]) += 1.0;
    return ContingencyTable::from_frequencies(std::move(counts), labels, labels);
}

inline ContingencyTable ingest_text(const std::string& path,
                                    AlphabetPolicy policy = AlphabetPolicy::observed) {
    return bigram_table(detail::read_file(path), policy);
}

}  // namespace latentem
