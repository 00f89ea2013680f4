#include "conemorse/io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "conemorse/error.hpp"

namespace conemorse::io {

namespace {

[[noreturn]] void schema(const std::string& what) { throw Error(ErrorCode::kSchemaError, what); }

void only_keys(const Json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) schema(where + " must be an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) schema(where + " has unknown field '" + k + "'");
  }
}

const Json& field(const Json& j, const std::string& where, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) schema(where + " is missing '" + key + "'");
  return *it;
}

long long as_int(const Json& j, const std::string& what) {
  if (!j.is_number_integer()) schema(what + " must be an integer");
  return j.get<long long>();
}

int as_small_int(const Json& j, const std::string& what) {
  const long long v = as_int(j, what);
  if (v < -1'000'000 || v > 1'000'000) schema(what + " is out of range");
  return static_cast<int>(v);
}

std::string as_string(const Json& j, const std::string& what) {
  if (!j.is_string()) schema(what + " must be a string");
  return j.get<std::string>();
}

const Json& as_array(const Json& j, const std::string& what) {
  if (!j.is_array()) schema(what + " must be an array");
  return j;
}

std::vector<long long> coefficients(const chain::MorsePolynomial& p, int lo, int hi) {
  std::vector<long long> out;
  for (int k = lo; k <= hi; ++k) out.push_back(p.coefficient(k));
  return out;
}

Json laurent(const chain::MorsePolynomial& p) {
  Json j;
  j["min_degree"] = p.is_zero() ? 0 : p.min_degree();
  j["coefficients"] = p.is_zero() ? std::vector<long long>{} : p.coefficients();
  j["text"] = p.to_string();
  return j;
}

}  // namespace

morse::MorseData morse_data_from_json(const Json& j) {
  only_keys(j, "MorseData", {"dimension", "psi_degree", "psi_closed", "critical_points",
                             "flow_counts", "psi_integrals", "de_rham"});
  morse::MorseData d;
  d.dimension = as_small_int(field(j, "MorseData", "dimension"), "dimension");
  d.psi_degree = as_small_int(field(j, "MorseData", "psi_degree"), "psi_degree");
  const Json& closed = field(j, "MorseData", "psi_closed");
  if (!closed.is_boolean()) schema("psi_closed must be a boolean");
  d.psi_closed = closed.get<bool>();

  for (const auto& p : as_array(field(j, "MorseData", "critical_points"), "critical_points")) {
    only_keys(p, "critical point", {"id", "index"});
    d.critical_points.push_back({as_string(field(p, "critical point", "id"), "critical point id"),
                                 as_small_int(field(p, "critical point", "index"),
                                              "critical point index")});
  }
  for (const auto& f : as_array(field(j, "MorseData", "flow_counts"), "flow_counts")) {
    only_keys(f, "flow count", {"from", "to", "n"});
    d.flow_counts.push_back({as_string(field(f, "flow count", "from"), "flow count from"),
                             as_string(field(f, "flow count", "to"), "flow count to"),
                             as_int(field(f, "flow count", "n"), "flow count n")});
  }
  for (const auto& p : as_array(field(j, "MorseData", "psi_integrals"), "psi_integrals")) {
    only_keys(p, "psi integral", {"from", "to", "value"});
    const Json& v = field(p, "psi integral", "value");
    if (!v.is_number()) schema("psi integral value must be a number");
    d.psi_integrals.push_back({as_string(field(p, "psi integral", "from"), "psi integral from"),
                               as_string(field(p, "psi integral", "to"), "psi integral to"),
                               v.get<double>()});
  }
  if (const auto it = j.find("de_rham"); it != j.end()) {
    only_keys(*it, "de_rham", {"betti", "psi_ranks"});
    morse::DeRhamData dr;
    for (const auto& b : as_array(field(*it, "de_rham", "betti"), "de_rham.betti")) {
      dr.betti.push_back(as_small_int(b, "Betti number"));
    }
    for (const auto& r : as_array(field(*it, "de_rham", "psi_ranks"), "de_rham.psi_ranks")) {
      dr.psi_ranks.push_back(as_small_int(r, "psi rank"));
    }
    d.de_rham = std::move(dr);
  }
  morse::validate(d);
  return d;
}

Json morse_data_to_json(const morse::MorseData& d) {
  Json j;
  j["dimension"] = d.dimension;
  j["psi_degree"] = d.psi_degree;
  j["psi_closed"] = d.psi_closed;
  j["critical_points"] = Json::array();
  for (const auto& p : d.critical_points) j["critical_points"].push_back({{"id", p.id}, {"index", p.index}});
  j["flow_counts"] = Json::array();
  for (const auto& f : d.flow_counts) {
    j["flow_counts"].push_back({{"from", f.from}, {"to", f.to}, {"n", f.n}});
  }
  j["psi_integrals"] = Json::array();
  for (const auto& p : d.psi_integrals) {
    j["psi_integrals"].push_back({{"from", p.from}, {"to", p.to}, {"value", p.value}});
  }
  if (d.de_rham) {
    j["de_rham"] = {{"betti", d.de_rham->betti}, {"psi_ranks", d.de_rham->psi_ranks}};
  }
  return j;
}

morse::MorseData read_morse_data(const std::string& path) {
  std::ifstream in(path);
  if (!in) schema("cannot open '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    schema("'" + path + "' is not valid JSON: " + e.what());
  }
  return morse_data_from_json(j);
}

Json polynomial_to_json(const chain::MorsePolynomial& p, int k_lo, int k_hi) {
  return coefficients(p, k_lo, k_hi);
}

Json report_to_json(const morse::ConeMorseReport& r) {
  Json j;
  j["dimension"] = r.dimension;
  j["ell"] = r.ell;
  std::vector<int> degrees;
  for (int k = r.k_lo; k <= r.k_hi; ++k) degrees.push_back(k);
  j["degrees"] = degrees;
  j["m"] = polynomial_to_json(r.m, r.k_lo, r.k_hi);
  j["v"] = polynomial_to_json(r.v, r.k_lo, r.k_hi);
  j["v_ranks"] = Json::array();
  for (const auto& e : r.v_ranks) {
    j["v_ranks"].push_back({{"degree", e.degree},
                            {"rank", e.rank},
                            {"uncertain", e.uncertain},
                            {"pivot_tolerance", e.pivot_tolerance},
                            {"smallest_accepted_pivot", e.smallest_accepted_pivot},
                            {"largest_rejected_pivot", e.largest_rejected_pivot}});
  }
  j["cone_dims"] = polynomial_to_json(r.cone_dims, r.k_lo, r.k_hi);
  j["betti"] = r.betti ? polynomial_to_json(*r.betti, r.k_lo, r.k_hi) : Json(nullptr);
  j["r"] = r.r ? polynomial_to_json(*r.r, r.k_lo, r.k_hi) : Json(nullptr);
  j["b_psi"] = polynomial_to_json(r.b_psi, r.k_lo, r.k_hi);
  j["b_psi_source"] = r.b_psi_source;
  j["perfect"] = r.perfect;
  j["checks"] = Json::array();
  for (const auto& c : r.records) {
    j["checks"].push_back({{"check", c.check},
                           {"degree", c.degree},
                           {"lhs", c.lhs},
                           {"relation", c.relation},
                           {"rhs", c.rhs},
                           {"slack", c.slack()},
                           {"holds", c.holds}});
  }
  Json q;
  q["exists"] = r.q.q.has_value();
  q["q"] = r.q.q ? laurent(*r.q.q) : Json(nullptr);
  q["numerator"] = laurent(r.q.numerator);
  q["failure"] = r.q.failure ? Json(std::string(to_string(*r.q.failure))) : Json(nullptr);
  q["detail"] = r.q.detail;
  j["q_certificate"] = q;
  j["any_uncertain"] = r.any_uncertain();
  j["all_hold"] = r.all_hold();
  return j;
}

std::string report_to_csv(const morse::ConeMorseReport& r) {
  std::ostringstream out;
  out << "check,degree,lhs,relation,rhs,slack,holds\n";
  for (const auto& c : r.records) {
    out << c.check << ',' << c.degree << ',' << c.lhs << ',' << c.relation << ',' << c.rhs << ','
        << c.slack() << ',' << (c.holds ? "true" : "false") << '\n';
  }
  return out.str();
}

}  // namespace conemorse::io
