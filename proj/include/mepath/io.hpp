#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "mepath/cv.hpp"
#include "mepath/dataset.hpp"
#include "mepath/lbi.hpp"
#include "mepath/model.hpp"

namespace mepath::io {

inline constexpr int kFormatVersion = 1;

// Shortest decimal text that parses back to the same double.
std::string format_real(double value);

// Comparisons: header `user,left,right,y[,weight]`. Features: header
// `item,f0,...,f{d-1}`, or identity features when no features text is given.
// Item and user ids are opaque strings indexed in lexicographic order. Lines
// starting with '#' are ignored.
ComparisonDataset parse_dataset(std::string_view comparisons_csv,
                                std::optional<std::string_view> features_csv);

// `features_file` empty means identity features.
ComparisonDataset load_dataset(const std::filesystem::path& comparisons_file,
                               const std::optional<std::filesystem::path>& features_file);

// Canonical text of a dataset. The weight column is written only when some
// weight differs from 1. Identity features have no features text.
std::string comparisons_csv(const ComparisonDataset& dataset);
std::optional<std::string> features_csv(const ComparisonDataset& dataset);
void save_dataset(const ComparisonDataset& dataset,
                  const std::filesystem::path& comparisons_file,
                  const std::optional<std::filesystem::path>& features_file);

// `kind,index,id` rows mapping dense indices back to user and item ids.
std::string id_map_csv(const ComparisonDataset& dataset);

// SHA-256 (hex) of the canonical dataset text.
std::string dataset_hash(const ComparisonDataset& dataset);

// Path files are JSON lines: a header object (format version, solver config,
// resolved step, dataset hash, id lists), one object per snapshot, and a final
// events object.
std::string serialize_path(const RegularizationPath& path,
                           const ComparisonDataset& dataset);
// Throws HashMismatch when the header hash differs from `dataset`'s.
RegularizationPath parse_path(std::string_view text,
                              const ComparisonDataset& dataset);
void save_path(const RegularizationPath& path, const ComparisonDataset& dataset,
               const std::filesystem::path& file);
RegularizationPath load_path(const std::filesystem::path& file,
                             const ComparisonDataset& dataset);

// Single-state JSON (selected model at t_cv, simulation ground truth).
std::string serialize_state(const ModelState& state,
                            const ComparisonDataset& dataset);
ModelState parse_state(std::string_view text, const ComparisonDataset& dataset);
void save_state(const ModelState& state, const ComparisonDataset& dataset,
                const std::filesystem::path& file);
ModelState load_state(const std::filesystem::path& file,
                      const ComparisonDataset& dataset);

// Fold x grid error table plus mean row and a summary line.
std::string cv_report_csv(const CvReport& report);

std::string read_file(const std::filesystem::path& file);
void write_file(const std::filesystem::path& file, std::string_view text);

}  // namespace mepath::io
