#pragma once

#include "ahr/markov.hpp"

#include <filesystem>
#include <map>
#include <string>

namespace ahr {

using Metadata = std::map<std::string, std::string>;

// Dataset CSV: header `i,z,y,x_1,...,x_d`, one row per observation (i and z
// zero-based), reals in 17 significant digits. Provenance goes to a sidecar
// `<stem>.meta` of `key = value` lines.

std::filesystem::path sidecar_path(const std::filesystem::path& csv);

/// Writes the CSV and, when the dataset has provenance or truth, the sidecar.
/// `extra` entries are appended to the sidecar verbatim.
void write_dataset(const Dataset& ds, const std::filesystem::path& csv, const Metadata& extra = {});

Metadata read_metadata(const std::filesystem::path& path);
void write_metadata(const Metadata& meta, const std::filesystem::path& path);

struct LoadedDataset {
  Dataset data;
  Metadata metadata;
};

/// Reads the CSV and its sidecar if present. With `beta_star` in the sidecar the
/// truth is restored and eps recomputed as y - X beta_star. Throws IoError.
LoadedDataset read_dataset(const std::filesystem::path& csv);

}  // namespace ahr
