#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "breakeven/netmodel.hpp"

namespace breakeven {

struct DatasetSpec {
  enum class Kind { gaussian_blobs, spirals, xor_, csv };
  Kind kind = Kind::gaussian_blobs;
  std::size_t n = 512;
  std::size_t classes = 2;
  std::size_t dim = 2;
  double radius = 1.0;   // blobs: distance of class means from the origin
  double sigma = 0.5;    // blobs: isotropic std; spirals/xor: additive noise
  double turns = 1.0;    // spirals
  std::string path;      // csv
  double val_fraction = 0.2;

  nlohmann::json to_json() const;
  static DatasetSpec from_json(const nlohmann::json& j);
};

/// Materialized train/validation split. `all` keeps the original row order;
/// train_rows and val_rows are disjoint, sorted index sets into it.
struct Dataset {
  Batch all;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> val_rows;
  Batch train;
  Batch val;
  nlohmann::json provenance;
};

// Deterministic in seed. Throws InvalidParams, CsvParse, Io.
Dataset make_dataset(const DatasetSpec& spec, std::uint64_t seed);

// Parses "label,f1,...,fd" rows; a non-numeric first line is a header.
Batch parse_csv_dataset(const std::string& text);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace breakeven
