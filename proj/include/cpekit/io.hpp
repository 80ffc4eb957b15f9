#pragma once

#include <filesystem>
#include <string>

#include "cpekit/trajectories.hpp"

namespace cpekit {

// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double v);
double parse_double(const std::string& text, const std::string& context);

// Writes to a temporary sibling file and renames it into place, so readers never see
// a partially written artifact.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

// Trajectory CSV: header "k,z1,...,zm", one row per sample.
std::string trajectory_to_csv(const Trajectory& t);
Trajectory trajectory_from_csv(const std::string& text, const std::string& label = {});

// IoRecord CSV: header "k,u1,...,um,x1,...,xn"; the final row leaves the u columns empty.
std::string io_record_to_csv(const IoRecord& r);
IoRecord io_record_from_csv(const std::string& text);

// Bundle manifest: JSON {dim_m, shared_prefix_count, members:[{file, weight, label}]},
// member files are trajectory CSVs relative to the manifest directory.
void save_bundle(const TrajectoryBundle& bundle, const std::filesystem::path& dir,
                 const std::string& manifest_name = "manifest.json");
// Accepts a manifest, or a single trajectory CSV (loaded as a one-member bundle with weight 1).
TrajectoryBundle load_bundle(const std::filesystem::path& manifest_path);

// Row-major matrix dump without header.
std::string matrix_to_csv(const Matrix& m);
Matrix matrix_from_csv(const std::string& text);

}  // namespace cpekit
