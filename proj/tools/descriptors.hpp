#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "qres/channels.hpp"
#include "qres/fock.hpp"
#include "qres/gaussian.hpp"

namespace qres::cli {

using nlohmann::json;

// Malformed invocation or descriptor; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Descriptor {
  json value;
  std::string where;  // file plus JSON pointer, prefixed to parse errors
};

// Reads a JSON file. Output documents of this tool are accepted too: the member `key` is used then.
Descriptor load_descriptor(const std::string& path, const std::string& key);

DensityOperator parse_state(const Descriptor& d);
json state_to_json(const DensityOperator& rho);

GaussianState parse_gaussian(const Descriptor& d);
json gaussian_to_json(const GaussianState& g);

ChoiMatrix parse_choi(const Descriptor& d);
json choi_to_json(const ChoiMatrix& c);

}  // namespace qres::cli
