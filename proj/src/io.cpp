#include "cpekit/io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "cpekit/errors.hpp"

namespace cpekit {

namespace fs = std::filesystem;

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (res.ec != std::errc()) throw ComputationError("format_double: conversion failed");
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& context) {
    std::size_t b = 0, e = text.size();
    while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
    const char* first = text.data() + b;
    if (b < e && *first == '+') ++first;
    double v = 0.0;
    const auto res = std::from_chars(first, text.data() + e, v);
    if (b == e || res.ec != std::errc() || res.ptr != text.data() + e)
        throw InputError(context + ": cannot parse number '" + text + "'");
    if (!std::isfinite(v)) throw InputError(context + ": non-finite value '" + text + "'");
    return v;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::random_device rd;
    const fs::path tmp = path.string() + ".tmp" + std::to_string(rd());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot open '" + tmp.string() + "' for writing");
        out << content;
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw InputError("failed writing '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw InputError("cannot move artifact into place at '" + path.string() + "'");
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        out.push_back(line);
    }
    return out;
}

bool is_blank(const std::string& s) { return s.find_first_not_of(" \t") == std::string::npos; }

}  // namespace

std::string trajectory_to_csv(const Trajectory& t) {
    std::string out = "k";
    for (Index i = 0; i < t.dim(); ++i) out += ",z" + std::to_string(i + 1);
    out += "\n";
    for (Index k = 0; k < t.length(); ++k) {
        out += std::to_string(k);
        for (Index i = 0; i < t.dim(); ++i) out += "," + format_double(t.samples()(i, k));
        out += "\n";
    }
    return out;
}

Trajectory trajectory_from_csv(const std::string& text, const std::string& label) {
    const auto lines = lines_of(text);
    if (lines.empty()) throw InputError("trajectory CSV is empty");
    const auto header = split(lines.front(), ',');
    if (header.size() < 2 || header.front() != "k") throw InputError("trajectory CSV header must be 'k,z1,...,zm'");
    const Index m = static_cast<Index>(header.size()) - 1;
    if (lines.size() < 2) throw InputError("trajectory CSV has no samples");
    Matrix z(m, static_cast<Index>(lines.size()) - 1);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto cells = split(lines[r], ',');
        const std::string ctx = "trajectory CSV row " + std::to_string(r + 1);
        if (static_cast<Index>(cells.size()) != m + 1)
            throw InputError(ctx + ": expected " + std::to_string(m + 1) + " columns, found " +
                             std::to_string(cells.size()));
        for (Index i = 0; i < m; ++i) z(i, static_cast<Index>(r) - 1) = parse_double(cells[static_cast<size_t>(i) + 1], ctx);
    }
    return Trajectory(z, label);
}

std::string io_record_to_csv(const IoRecord& r) {
    std::string out = "k";
    for (Index i = 0; i < r.m(); ++i) out += ",u" + std::to_string(i + 1);
    for (Index i = 0; i < r.n(); ++i) out += ",x" + std::to_string(i + 1);
    out += "\n";
    const Matrix& x = r.states().samples();
    for (Index k = 0; k <= r.length(); ++k) {
        out += std::to_string(k);
        for (Index i = 0; i < r.m(); ++i) out += "," + (k < r.length() ? format_double(r.u()(i, k)) : std::string());
        for (Index i = 0; i < r.n(); ++i) out += "," + format_double(x(i, k));
        out += "\n";
    }
    return out;
}

IoRecord io_record_from_csv(const std::string& text) {
    const auto lines = lines_of(text);
    if (lines.size() < 3) throw InputError("IoRecord CSV needs a header and at least two rows");
    const auto header = split(lines.front(), ',');
    if (header.empty() || header.front() != "k") throw InputError("IoRecord CSV header must start with 'k'");
    Index m = 0, n = 0;
    for (std::size_t i = 1; i < header.size(); ++i) {
        if (!header[i].empty() && header[i][0] == 'u' && n == 0) ++m;
        else if (!header[i].empty() && header[i][0] == 'x') ++n;
        else throw InputError("IoRecord CSV header column '" + header[i] + "' is not u* or x* in order");
    }
    if (m < 1 || n < 1) throw InputError("IoRecord CSV needs at least one u and one x column");
    const Index rows = static_cast<Index>(lines.size()) - 1;
    Matrix u(m, rows - 1), x(n, rows);
    for (Index r = 0; r < rows; ++r) {
        const auto cells = split(lines[static_cast<size_t>(r) + 1], ',');
        const std::string ctx = "IoRecord CSV row " + std::to_string(r + 2);
        if (static_cast<Index>(cells.size()) != 1 + m + n)
            throw InputError(ctx + ": expected " + std::to_string(1 + m + n) + " columns, found " +
                             std::to_string(cells.size()));
        for (Index i = 0; i < m; ++i) {
            const std::string& c = cells[static_cast<size_t>(1 + i)];
            if (r == rows - 1) {
                if (!is_blank(c)) throw InputError(ctx + ": final row must leave input columns empty");
            } else {
                u(i, r) = parse_double(c, ctx);
            }
        }
        for (Index i = 0; i < n; ++i) x(i, r) = parse_double(cells[static_cast<size_t>(1 + m + i)], ctx);
    }
    return IoRecord(Trajectory(u, "u"), Trajectory(x, "x"));
}

void save_bundle(const TrajectoryBundle& bundle, const fs::path& dir, const std::string& manifest_name) {
    fs::create_directories(dir);
    nlohmann::json manifest;
    manifest["dim_m"] = bundle.dim();
    manifest["shared_prefix_count"] = bundle.shared_prefix_count();
    manifest["members"] = nlohmann::json::array();
    for (std::size_t i = 0; i < bundle.size(); ++i) {
        const std::string file = "member_" + std::to_string(i) + ".csv";
        write_file_atomic(dir / file, trajectory_to_csv(bundle.member(i)));
        manifest["members"].push_back(
            {{"file", file}, {"weight", bundle.weights()[i]}, {"label", bundle.member(i).label()}});
    }
    write_file_atomic(dir / manifest_name, manifest.dump(2) + "\n");
}

TrajectoryBundle load_bundle(const fs::path& manifest_path) {
    if (manifest_path.extension() == ".csv") {
        Trajectory t = trajectory_from_csv(read_file(manifest_path), manifest_path.stem().string());
        return TrajectoryBundle({t});
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(manifest_path));
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError("manifest '" + manifest_path.string() + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object() || !j.contains("members") || !j["members"].is_array())
        throw InputError("manifest must be an object with a 'members' array");
    const fs::path base = manifest_path.parent_path();
    std::vector<Trajectory> members;
    std::vector<double> weights;
    for (std::size_t i = 0; i < j["members"].size(); ++i) {
        const auto& e = j["members"][i];
        if (!e.contains("file") || !e["file"].is_string())
            throw InputError("manifest member " + std::to_string(i) + " lacks a 'file' string");
        double w = 1.0;
        if (e.contains("weight")) {
            if (!e["weight"].is_number()) throw InputError("manifest member " + std::to_string(i) + " weight is not a number");
            w = e["weight"].get<double>();
        }
        if (w == 0.0) throw InputError("manifest member " + std::to_string(i) + " has zero weight");
        const std::string label = e.contains("label") && e["label"].is_string() ? e["label"].get<std::string>()
                                                                                 : e["file"].get<std::string>();
        members.push_back(trajectory_from_csv(read_file(base / e["file"].get<std::string>()), label));
        weights.push_back(w);
    }
    std::size_t prefix = 0;
    if (j.contains("shared_prefix_count")) {
        if (!j["shared_prefix_count"].is_number_unsigned())
            throw InputError("manifest shared_prefix_count must be a non-negative integer");
        prefix = j["shared_prefix_count"].get<std::size_t>();
    }
    TrajectoryBundle bundle(members, weights, prefix);
    if (j.contains("dim_m") && j["dim_m"].get<Index>() != bundle.dim())
        throw InputError("manifest dim_m does not match the member files");
    return bundle;
}

std::string matrix_to_csv(const Matrix& m) {
    std::string out;
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) out += ",";
            out += format_double(m(i, j));
        }
        out += "\n";
    }
    return out;
}

Matrix matrix_from_csv(const std::string& text) {
    const auto lines = lines_of(text);
    if (lines.empty()) throw InputError("matrix CSV is empty");
    const std::size_t cols = split(lines.front(), ',').size();
    Matrix m(static_cast<Index>(lines.size()), static_cast<Index>(cols));
    for (std::size_t r = 0; r < lines.size(); ++r) {
        const auto cells = split(lines[r], ',');
        const std::string ctx = "matrix CSV row " + std::to_string(r + 1);
        if (cells.size() != cols) throw InputError(ctx + ": ragged row");
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Index>(r), static_cast<Index>(c)) = parse_double(cells[c], ctx);
    }
    return m;
}

}  // namespace cpekit
