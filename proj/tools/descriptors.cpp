#include "descriptors.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>

namespace qres::cli {
namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) { throw UsageError(where + ": " + what); }

std::string child(const std::string& where, const std::string& key) { return where + "/" + key; }

void check_keys(const Descriptor& d, std::initializer_list<const char*> allowed) {
  if (!d.value.is_object()) fail(d.where, "expected an object");
  for (const auto& [key, _] : d.value.items()) {
    bool ok = key == "kind";
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) fail(child(d.where, key), "unknown key");
  }
}

const json* member(const Descriptor& d, const char* key) {
  auto it = d.value.find(key);
  return it == d.value.end() ? nullptr : &*it;
}

const json& required(const Descriptor& d, const char* key) {
  const json* j = member(d, key);
  if (!j) fail(child(d.where, key), "missing");
  return *j;
}

double as_double(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

int as_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where, "expected an integer");
  return j.get<int>();
}

double number(const Descriptor& d, const char* key, double fallback) {
  const json* j = member(d, key);
  return j ? as_double(*j, child(d.where, key)) : fallback;
}

double number(const Descriptor& d, const char* key) { return as_double(required(d, key), child(d.where, key)); }

std::optional<int> integer(const Descriptor& d, const char* key) {
  const json* j = member(d, key);
  if (!j) return {};
  return as_int(*j, child(d.where, key));
}

int integer(const Descriptor& d, const char* key, int fallback) { return integer(d, key).value_or(fallback); }

// A bare number is real; [re, im] otherwise.
cplx as_complex(const json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2) fail(where, "expected a number or [re, im]");
  return {as_double(j[0], where + "/0"), as_double(j[1], where + "/1")};
}

RMatrix as_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where, "expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array()) fail(where + "/0", "expected an array");
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  RMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::string rw = where + "/" + std::to_string(r);
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) fail(rw, "ragged matrix row");
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = as_double(row[static_cast<std::size_t>(c)], rw + "/" + std::to_string(c));
  }
  return m;
}

RVector as_vector(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array");
  RVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = as_double(j[i], where + "/" + std::to_string(i));
  return v;
}

CMatrix complex_matrix(const Descriptor& d) {
  const RMatrix re = as_matrix(required(d, "re"), child(d.where, "re"));
  RMatrix im = RMatrix::Zero(re.rows(), re.cols());
  if (const json* j = member(d, "im")) {
    im = as_matrix(*j, child(d.where, "im"));
    if (im.rows() != re.rows() || im.cols() != re.cols()) fail(child(d.where, "im"), "shape differs from re");
  }
  CMatrix m(re.rows(), re.cols());
  m.real() = re;
  m.imag() = im;
  return m;
}

json rows_of(const RMatrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

std::string kind_of(const Descriptor& d) {
  if (!d.value.is_object()) fail(d.where, "expected an object");
  const json& k = required(d, "kind");
  if (!k.is_string()) fail(child(d.where, "kind"), "expected a string");
  return k.get<std::string>();
}

int dim_or(const Descriptor& d, double abs_alpha) { return integer(d, "dim", recommended_dim(abs_alpha)); }

GaussianState with_displacement(const Descriptor& d, GaussianState g) {
  const json* j = member(d, "displacement");
  if (!j) return g;
  const std::string where = child(d.where, "displacement");
  if (!j->is_array() || static_cast<int>(j->size()) != g.modes()) fail(where, "expected one [re, im] per mode");
  std::vector<cplx> gamma;
  for (std::size_t m = 0; m < j->size(); ++m) gamma.push_back(as_complex((*j)[m], where + "/" + std::to_string(m)));
  return displace(g, gamma);
}

}  // namespace

Descriptor load_descriptor(const std::string& path, const std::string& key) {
  std::ifstream in(path);
  if (!in) throw UsageError(path + ": cannot open");
  std::stringstream buf;
  buf << in.rdbuf();
  json j = json::parse(buf.str(), nullptr, false);
  if (j.is_discarded()) throw UsageError(path + ": not valid JSON");
  if (j.is_object() && !j.contains("kind") && j.contains(key)) return {j[key], path + ":/" + key};
  return {std::move(j), path + ":"};
}

DensityOperator parse_state(const Descriptor& d) {
  const std::string kind = kind_of(d);
  if (kind == "coherent" || kind == "cat") {
    check_keys(d, {"alpha", "dim", "eps"});
    const cplx alpha = as_complex(required(d, "alpha"), child(d.where, "alpha"));
    const int dim = dim_or(d, std::abs(alpha));
    const double eps = number(d, "eps", kDefaultTruncationEps);
    return (kind == "cat" ? make_cat(alpha, dim, eps) : make_coherent(alpha, dim, eps)).density();
  }
  if (kind == "fock") {
    check_keys(d, {"n", "dim"});
    const int n = as_int(required(d, "n"), child(d.where, "n"));
    return make_fock(n, integer(d, "dim", n + 1)).density();
  }
  if (kind == "lossy_photon") {
    check_keys(d, {"q", "dim"});
    return make_lossy_photon(number(d, "q"), integer(d, "dim", 3));
  }
  if (kind == "thermal") {
    check_keys(d, {"mean_photons", "dim"});
    const double n = number(d, "mean_photons");
    // enough levels for a geometric tail below 1e-10
    const int fallback = n > 0.0 ? static_cast<int>(std::ceil(std::log(1e-10) / std::log(n / (n + 1.0)))) + 1 : 2;
    return make_thermal(n, integer(d, "dim", fallback));
  }
  if (kind == "squeezed") {
    check_keys(d, {"r", "angle", "dim", "eps"});
    return make_squeezed_vacuum(number(d, "r"), integer(d, "dim", 60), number(d, "angle", 0.0),
                                number(d, "eps", kDefaultTruncationEps))
        .density();
  }
  if (kind == "two_mode_squeezed") {
    check_keys(d, {"r", "dim", "eps"});
    return make_two_mode_squeezed(number(d, "r"), integer(d, "dim", 20), number(d, "eps", kDefaultTruncationEps))
        .density();
  }
  if (kind == "density") {
    check_keys(d, {"dims", "re", "im", "tail", "spread"});
    CMatrix m = complex_matrix(d);
    Dims dims{static_cast<int>(m.rows())};
    if (const json* j = member(d, "dims")) {
      const std::string where = child(d.where, "dims");
      if (!j->is_array() || j->empty()) fail(where, "expected a non-empty array");
      dims.clear();
      for (std::size_t i = 0; i < j->size(); ++i) dims.push_back(as_int((*j)[i], where + "/" + std::to_string(i)));
    }
    const double tail = number(d, "tail", 0.0);
    DensityOperator rho(std::move(m), dims, tail, number(d, "spread", 0.0));
    rho.validate(tail == 0.0);
    return rho;
  }
  fail(child(d.where, "kind"), "unknown state kind '" + kind + "'");
}

json state_to_json(const DensityOperator& rho) {
  return {{"kind", "density"},
          {"dims", rho.dims()},
          {"re", rows_of(rho.matrix().real())},
          {"im", rows_of(rho.matrix().imag())},
          {"tail", rho.tail()},
          {"spread", rho.spread()}};
}

GaussianState parse_gaussian(const Descriptor& d) {
  const std::string kind = kind_of(d);
  if (kind == "gaussian") {
    check_keys(d, {"mean", "cov"});
    return {as_vector(required(d, "mean"), child(d.where, "mean")),
            as_matrix(required(d, "cov"), child(d.where, "cov"))};
  }
  if (kind == "vacuum" || kind == "coherent") {
    check_keys(d, {"modes", "displacement"});
    return with_displacement(d, GaussianState::vacuum(integer(d, "modes", 1)));
  }
  if (kind == "thermal") {
    check_keys(d, {"modes", "mean_photons", "displacement"});
    return with_displacement(d, GaussianState::thermal(integer(d, "modes", 1), number(d, "mean_photons")));
  }
  if (kind == "squeezed") {
    check_keys(d, {"r", "angle", "displacement"});
    return with_displacement(d, GaussianState::squeezed_vacuum(number(d, "r"), number(d, "angle", 0.0)));
  }
  if (kind == "two_mode_squeezed") {
    check_keys(d, {"r", "displacement"});
    return with_displacement(d, GaussianState::two_mode_squeezed(number(d, "r")));
  }
  fail(child(d.where, "kind"), "unknown Gaussian kind '" + kind + "'");
}

json gaussian_to_json(const GaussianState& g) {
  return {{"kind", "gaussian"},
          {"mean", std::vector<double>(g.mean().data(), g.mean().data() + g.mean().size())},
          {"cov", rows_of(g.cov())}};
}

ChoiMatrix parse_choi(const Descriptor& d) {
  const std::string kind = d.value.is_object() && !d.value.contains("kind") ? "choi" : kind_of(d);
  if (kind == "identity" || kind == "dephasing") {
    check_keys(d, {"d"});
    const int dim = as_int(required(d, "d"), child(d.where, "d"));
    if (dim < 1) fail(child(d.where, "d"), "must be positive");
    return kind == "identity" ? identity_channel(dim) : dephasing_channel(dim);
  }
  if (kind == "choi") {
    check_keys(d, {"d_in", "d_out", "re", "im"});
    ChoiMatrix c(complex_matrix(d), as_int(required(d, "d_in"), child(d.where, "d_in")),
                 as_int(required(d, "d_out"), child(d.where, "d_out")));
    c.validate();
    return c;
  }
  fail(child(d.where, "kind"), "unknown channel kind '" + kind + "'");
}

json choi_to_json(const ChoiMatrix& c) {
  return {{"kind", "choi"},
          {"d_in", c.d_in()},
          {"d_out", c.d_out()},
          {"re", rows_of(c.matrix().real())},
          {"im", rows_of(c.matrix().imag())}};
}

}  // namespace qres::cli
