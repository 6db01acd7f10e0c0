#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "deconv/error.hpp"
#include "deconv/ratings.hpp"

namespace deconv {

/// Shortest decimal representation that round-trips the exact double.
inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline std::optional<double> parse_double(std::string_view s) {
    // Trim surrounding whitespace; data files in the wild pad fields.
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    if (s.empty()) return std::nullopt;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size() || std::isnan(value)) {
        return std::nullopt;
    }
    return value;
}

/// FNV-1a 64-bit over raw file bytes; used for manifests and cache keys.
inline std::uint64_t file_digest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (got < static_cast<std::streamsize>(sizeof(buf))) break;
    }
    return h;
}

namespace detail {

struct RawTriplet {
    std::string user_id;
    std::string item_id;
    double value;
};

inline std::vector<std::string_view> split_fields(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

inline void check_scale(double v, const DatasetSpec& spec, std::size_t line_no) {
    if (v < spec.scale_min || v > spec.scale_max) {
        throw ParseError("rating " + format_double(v) + " outside scale [" +
                             format_double(spec.scale_min) + ", " + format_double(spec.scale_max) +
                             "]",
                         line_no);
    }
}

/// user,item,rating triplet rows; a non-numeric rating field on the first
/// row is treated as a header.
inline std::vector<RawTriplet> parse_triplets(std::istream& in, const DatasetSpec& spec,
                                              char sep, const std::string& sep_name) {
    std::vector<RawTriplet> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = strip_cr(line);
        if (sv.empty()) continue;
        auto fields = split_fields(sv, sep);
        if (fields.size() < 3) {
            throw ParseError("expected 3 " + sep_name + "-separated fields, got " +
                                 std::to_string(fields.size()),
                             line_no);
        }
        auto value = parse_double(fields[2]);
        if (!value) {
            if (line_no == 1) continue;  // header row
            throw ParseError("unparseable rating field '" + std::string(fields[2]) + "'", line_no);
        }
        check_scale(*value, spec, line_no);
        if (fields[0].empty() || fields[1].empty()) {
            throw ParseError("empty user or item id", line_no);
        }
        rows.push_back({std::string(fields[0]), std::string(fields[1]), *value});
    }
    return rows;
}

/// MovieLens u.data: user \t item \t rating \t timestamp. Timestamp ignored.
inline std::vector<RawTriplet> parse_ml100k(std::istream& in, const DatasetSpec& spec) {
    std::vector<RawTriplet> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = strip_cr(line);
        if (sv.empty()) continue;
        auto fields = split_fields(sv, '\t');
        if (fields.size() < 3) {
            throw ParseError("expected at least 3 tab-separated fields", line_no);
        }
        auto value = parse_double(fields[2]);
        if (!value) {
            throw ParseError("unparseable rating field '" + std::string(fields[2]) + "'", line_no);
        }
        check_scale(*value, spec, line_no);
        rows.push_back({std::string(fields[0]), std::string(fields[1]), *value});
    }
    return rows;
}

/// MovieLens ratings.dat: user::item::rating::timestamp.
inline std::vector<RawTriplet> parse_ml1m(std::istream& in, const DatasetSpec& spec) {
    std::vector<RawTriplet> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = strip_cr(line);
        if (sv.empty()) continue;
        std::vector<std::string_view> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t pos = sv.find("::", start);
            if (pos == std::string_view::npos) {
                fields.push_back(sv.substr(start));
                break;
            }
            fields.push_back(sv.substr(start, pos - start));
            start = pos + 2;
        }
        if (fields.size() < 3) {
            throw ParseError("expected at least 3 '::'-separated fields", line_no);
        }
        auto value = parse_double(fields[2]);
        if (!value) {
            throw ParseError("unparseable rating field '" + std::string(fields[2]) + "'", line_no);
        }
        check_scale(*value, spec, line_no);
        rows.push_back({std::string(fields[0]), std::string(fields[1]), *value});
    }
    return rows;
}

/// Jester spreadsheet export: one row per user, one column per joke, 99 marks
/// a missing rating. The official CSVs prepend a per-user rating count; that
/// column is detected (it equals the row's non-99 count on every row) and
/// dropped.
inline std::vector<RawTriplet> parse_jester(std::istream& in, const DatasetSpec& spec) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    bool count_column = true;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = strip_cr(line);
        if (sv.empty()) continue;
        auto fields = split_fields(sv, ',');
        if (width == 0) {
            width = fields.size();
            if (width < 2) throw ParseError("expected at least 2 columns", line_no);
        } else if (fields.size() != width) {
            throw ParseError("row has " + std::to_string(fields.size()) +
                                 " columns, expected " + std::to_string(width),
                             line_no);
        }
        std::vector<double> values;
        values.reserve(fields.size());
        for (const auto& f : fields) {
            auto v = parse_double(f);
            if (!v) throw ParseError("unparseable field '" + std::string(f) + "'", line_no);
            values.push_back(*v);
        }
        std::size_t rated = 0;
        for (std::size_t j = 1; j < values.size(); ++j) {
            if (values[j] != 99.0) ++rated;
        }
        if (values[0] != static_cast<double>(rated)) count_column = false;
        rows.push_back(std::move(values));
    }

    std::vector<RawTriplet> out;
    const std::size_t first_col = count_column ? 1 : 0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = first_col; c < rows[r].size(); ++c) {
            const double v = rows[r][c];
            if (v == 99.0) continue;
            // Line numbers restart at 1 for error reporting against the file.
            if (v < spec.scale_min || v > spec.scale_max) {
                throw ParseError("rating " + format_double(v) + " outside scale [" +
                                     format_double(spec.scale_min) + ", " +
                                     format_double(spec.scale_max) + "]",
                                 r + 1);
            }
            out.push_back({std::to_string(r + 1), std::to_string(c - first_col + 1), v});
        }
    }
    return out;
}

/// Compacts string IDs to contiguous indices in order of first appearance.
inline RatingsMatrix assemble(const std::vector<RawTriplet>& rows) {
    if (rows.empty()) throw DataError("empty matrix: no ratings parsed");
    std::map<std::string, int> user_index;
    std::map<std::string, int> item_index;
    std::vector<std::string> user_ids;
    std::vector<std::string> item_ids;
    std::vector<RatingEntry> entries;
    entries.reserve(rows.size());
    for (const auto& row : rows) {
        auto [uit, unew] = user_index.try_emplace(row.user_id, static_cast<int>(user_ids.size()));
        if (unew) user_ids.push_back(row.user_id);
        auto [iit, inew] = item_index.try_emplace(row.item_id, static_cast<int>(item_ids.size()));
        if (inew) item_ids.push_back(row.item_id);
        entries.push_back({uit->second, iit->second, row.value});
    }
    const int n_users = static_cast<int>(user_ids.size());
    const int n_items = static_cast<int>(item_ids.size());
    return RatingsMatrix(n_users, n_items, std::move(entries), std::move(user_ids),
                         std::move(item_ids));
}

}  // namespace detail

/// Parses the file under the spec's declared format, applies the min-RPI item
/// filter, and compacts indices. Duplicate (user, item) cells are rejected.
inline RatingsMatrix load_ratings(const std::filesystem::path& path, const DatasetSpec& spec) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path.string());

    std::vector<detail::RawTriplet> rows;
    switch (spec.format) {
        case DatasetSpec::Format::Csv:
            rows = detail::parse_triplets(in, spec, ',', "comma");
            break;
        case DatasetSpec::Format::Ml100k:
            rows = detail::parse_ml100k(in, spec);
            break;
        case DatasetSpec::Format::Ml1m:
            rows = detail::parse_ml1m(in, spec);
            break;
        case DatasetSpec::Format::Jester:
            rows = detail::parse_jester(in, spec);
            break;
    }
    RatingsMatrix raw = detail::assemble(rows);
    return filter_min_rpi(raw, spec.min_rpi);
}

/// Canonical triplet dump: header + rows sorted by compact (user, item).
/// load_ratings on the result reproduces the same matrix.
inline void write_ratings_csv(const RatingsMatrix& r, std::ostream& out) {
    out << "user_id,item_id,rating\n";
    for (const auto& e : r.entries()) {
        out << r.user_id(e.user) << ',' << r.item_id(e.item) << ',' << format_double(e.value)
            << '\n';
    }
}

inline void write_ratings_csv(const RatingsMatrix& r, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path.string());
    write_ratings_csv(r, out);
}

}  // namespace deconv
