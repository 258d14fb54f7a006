#ifndef SC3D_CORE_IO_HPP
#define SC3D_CORE_IO_HPP

#include "sc3d/core/types.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace sc3d {

// Structured CSV diagnostics; kind lets callers tell failure modes apart.
class DatasetParseError : public ParseError {
public:
    enum class Kind { io, malformed_header, missing_column, inconsistent_rows, non_numeric };

    DatasetParseError(Kind kind, const std::string& what) : ParseError(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

namespace detail {

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <class T>
std::optional<T> parse_number(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    T value{};
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, value);
    if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
    return value;
}

// Writes to a sibling temp file and renames, so readers never observe a
// half-written artifact and reruns overwrite cleanly.
inline void write_atomically(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
        out << content;
        if (!out) throw Error("failed writing '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace detail

// ---------------------------------------------------------------- dataset CSV

inline std::string dataset_to_csv(const TimeSeriesDataset& ds) {
    std::string out = "traj,t";
    for (int i = 0; i < ds.dim(); ++i) out += ",x" + std::to_string(i);
    out += '\n';
    for (int n = 0; n < ds.num_trajectories(); ++n) {
        for (int t = 0; t < ds.horizon(); ++t) {
            out += std::to_string(n);
            out += ',';
            out += std::to_string(t);
            for (int i = 0; i < ds.dim(); ++i) {
                out += ',';
                out += detail::format_double(ds.at(n, t, i));
            }
            out += '\n';
        }
    }
    return out;
}

inline TimeSeriesDataset dataset_from_csv(const std::string& text) {
    using Kind = DatasetParseError::Kind;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw DatasetParseError(Kind::malformed_header, "empty dataset file");
    const auto header = detail::split_csv(detail::trim(line));
    if (header.size() < 1 || detail::trim(header[0]) != "traj")
        throw DatasetParseError(Kind::missing_column, "missing column 'traj' (first header field)");
    if (header.size() < 2 || detail::trim(header[1]) != "t")
        throw DatasetParseError(Kind::missing_column, "missing column 't' (second header field)");
    const int d = static_cast<int>(header.size()) - 2;
    if (d < 1) throw DatasetParseError(Kind::malformed_header, "header has no variable columns");
    for (int i = 0; i < d; ++i) {
        const auto expect = "x" + std::to_string(i);
        if (detail::trim(header[static_cast<std::size_t>(i + 2)]) != expect)
            throw DatasetParseError(Kind::malformed_header,
                                    "header column " + std::to_string(i + 2) + " should be '" + expect + "'");
    }

    std::vector<std::vector<double>> rows;  // per row: values
    std::vector<std::pair<long, long>> keys;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto trimmed = detail::trim(line);
        if (trimmed.empty()) continue;
        const auto cells = detail::split_csv(trimmed);
        if (static_cast<int>(cells.size()) != d + 2)
            throw DatasetParseError(Kind::inconsistent_rows,
                                    "line " + std::to_string(line_no) + ": expected " + std::to_string(d + 2) +
                                        " cells, found " + std::to_string(cells.size()));
        auto traj = detail::parse_number<long>(cells[0]);
        auto t = detail::parse_number<long>(cells[1]);
        if (!traj || !t || *traj < 0 || *t < 0)
            throw DatasetParseError(Kind::non_numeric,
                                    "line " + std::to_string(line_no) + ": traj/t must be nonnegative integers");
        std::vector<double> vals(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i) {
            auto v = detail::parse_number<double>(cells[static_cast<std::size_t>(i + 2)]);
            if (!v || !std::isfinite(*v))
                throw DatasetParseError(Kind::non_numeric, "line " + std::to_string(line_no) + ", column x" +
                                                               std::to_string(i) + ": not a finite number");
            vals[static_cast<std::size_t>(i)] = *v;
        }
        keys.emplace_back(*traj, *t);
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw DatasetParseError(Kind::inconsistent_rows, "dataset has no rows");

    // Rows must be sorted by (traj, t) with contiguous indices.
    long n_traj = keys.back().first + 1;
    if (rows.size() % static_cast<std::size_t>(n_traj) != 0)
        throw DatasetParseError(Kind::inconsistent_rows, "row count is not a multiple of the trajectory count");
    const long horizon = static_cast<long>(rows.size()) / n_traj;
    for (std::size_t r = 0; r < keys.size(); ++r) {
        const long want_traj = static_cast<long>(r) / horizon;
        const long want_t = static_cast<long>(r) % horizon;
        if (keys[r].first != want_traj || keys[r].second != want_t)
            throw DatasetParseError(Kind::inconsistent_rows,
                                    "row " + std::to_string(r + 1) + ": expected (traj,t)=(" +
                                        std::to_string(want_traj) + "," + std::to_string(want_t) + "), found (" +
                                        std::to_string(keys[r].first) + "," + std::to_string(keys[r].second) + ")");
    }
    TimeSeriesDataset ds(static_cast<int>(n_traj), static_cast<int>(horizon), d);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (int i = 0; i < d; ++i)
            ds.at(static_cast<int>(keys[r].first), static_cast<int>(keys[r].second), i) =
                rows[r][static_cast<std::size_t>(i)];
    return ds;
}

inline void save_dataset(const TimeSeriesDataset& ds, const std::filesystem::path& path) {
    detail::write_atomically(path, dataset_to_csv(ds));
}

inline TimeSeriesDataset load_dataset(const std::filesystem::path& path) {
    std::string text;
    try {
        text = detail::read_file(path);
    } catch (const Error& e) {
        throw DatasetParseError(DatasetParseError::Kind::io, e.what());
    }
    return dataset_from_csv(text);
}

// ----------------------------------------------------------------- graph JSON

template <class Derived>
nlohmann::json matrix_to_json(const Eigen::MatrixBase<Derived>& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < m.cols(); ++c) {
            if constexpr (std::is_same_v<typename Derived::Scalar, std::uint8_t>)
                row.push_back(static_cast<int>(m(r, c)));
            else
                row.push_back(m(r, c));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j, int d, const std::string& what) {
    if (!j.is_array() || static_cast<int>(j.size()) != d)
        throw ParseError(what + ": expected " + std::to_string(d) + " rows");
    Matrix m(d, d);
    for (int r = 0; r < d; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<int>(row.size()) != d)
            throw ParseError(what + ": row " + std::to_string(r) + " must have " + std::to_string(d) + " entries");
        for (int c = 0; c < d; ++c) {
            const auto& v = row[static_cast<std::size_t>(c)];
            if (!v.is_number()) throw ParseError(what + ": non-numeric entry");
            m(r, c) = v.get<double>();
        }
    }
    return m;
}

inline BinaryMatrix binary_from_json(const nlohmann::json& j, int d, const std::string& what) {
    const Matrix m = matrix_from_json(j, d, what);
    BinaryMatrix out(d, d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
            if (m(r, c) != 0.0 && m(r, c) != 1.0) throw ParseError(what + ": entries must be 0 or 1");
            out(r, c) = static_cast<std::uint8_t>(m(r, c));
        }
    return out;
}

inline nlohmann::json graph_to_json(const DynamicGraph& g, const EdgeMasks* masks = nullptr) {
    nlohmann::json j;
    j["dim"] = g.dim;
    j["lag_order"] = g.lag_order;
    j["instant_enabled"] = g.instant_enabled;
    j["A"] = nlohmann::json::array();
    for (const auto& a : g.lag_matrices) j["A"].push_back(matrix_to_json(a));
    j["B"] = matrix_to_json(g.instant_matrix);
    if (masks) {
        nlohmann::json mj;
        mj["lag"] = nlohmann::json::array();
        for (const auto& m : masks->lag_masks) mj["lag"].push_back(matrix_to_json(m));
        mj["instant"] = matrix_to_json(masks->instant_mask);
        j["masks"] = std::move(mj);
    }
    return j;
}

struct GraphFile {
    DynamicGraph graph;
    std::optional<EdgeMasks> masks;
};

inline GraphFile graph_from_json(const nlohmann::json& j) {
    for (const char* key : {"dim", "lag_order", "instant_enabled", "A", "B"})
        if (!j.contains(key)) throw ParseError(std::string("graph JSON: missing key '") + key + "'");
    GraphFile out;
    auto& g = out.graph;
    g.dim = j.at("dim").get<int>();
    g.lag_order = j.at("lag_order").get<int>();
    g.instant_enabled = j.at("instant_enabled").get<bool>();
    if (g.dim <= 0 || g.lag_order <= 0) throw ParseError("graph JSON: dim and lag_order must be positive");
    const auto& a = j.at("A");
    if (!a.is_array() || static_cast<int>(a.size()) != g.lag_order)
        throw ParseError("graph JSON: 'A' must hold lag_order matrices");
    for (int l = 0; l < g.lag_order; ++l)
        g.lag_matrices.push_back(matrix_from_json(a[static_cast<std::size_t>(l)], g.dim, "A[" + std::to_string(l) + "]"));
    g.instant_matrix = matrix_from_json(j.at("B"), g.dim, "B");
    if (j.contains("masks")) {
        const auto& mj = j.at("masks");
        EdgeMasks m;
        const auto& lag = mj.at("lag");
        if (!lag.is_array() || static_cast<int>(lag.size()) != g.lag_order)
            throw ParseError("graph JSON: masks.lag must hold lag_order matrices");
        for (int l = 0; l < g.lag_order; ++l)
            m.lag_masks.push_back(binary_from_json(lag[static_cast<std::size_t>(l)], g.dim, "masks.lag"));
        m.instant_mask = binary_from_json(mj.at("instant"), g.dim, "masks.instant");
        out.masks = std::move(m);
    }
    g.validate();
    return out;
}

inline void save_graph(const DynamicGraph& g, const std::filesystem::path& path, const EdgeMasks* masks = nullptr) {
    detail::write_atomically(path, graph_to_json(g, masks).dump(2) + "\n");
}

inline GraphFile load_graph(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(detail::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("graph JSON '" + path.string() + "': " + e.what());
    }
    return graph_from_json(j);
}

}  // namespace sc3d

#endif  // SC3D_CORE_IO_HPP
