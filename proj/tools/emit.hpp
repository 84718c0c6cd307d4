#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "qres/experiments.hpp"

namespace qres::cli {

enum class Format { csv, json, svg };

struct PlotSpec {
  std::string x;
  std::vector<std::string> y;
  bool diagonal = false;  // y = x reference line
  bool lines = false;     // join points of each series
};

struct Output {
  std::string command;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();  // fully resolved parameters
  std::vector<ExperimentRecord> records;
  nlohmann::json payload = nlohmann::json::object();  // extra top-level members of the JSON form
  PlotSpec plot;
};

std::string version();
// FNV-1a 64 of the canonical (sorted, compact) config dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

// Throws UsageError on empty records or an unusable plot spec.
void emit(const Output& out, Format format, std::ostream& os);

}  // namespace qres::cli
