#include "result_io.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>

#include "fcausal/error.hpp"
#include "fcausal/panel_io.hpp"

namespace fcausal::cli {

namespace {

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

Json matrix_json(const Matrix& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vector_json(m.row(i).transpose()));
  return a;
}

}  // namespace

Json to_json(const Interval& iv) { return Json{{"lo", number(iv.lo)}, {"hi", number(iv.hi)}}; }

Json to_json(const BiasModel& bm) {
  Json j;
  j["rank"] = bm.gamma.cols();
  j["theta"] = matrix_json(bm.theta);
  j["gamma"] = matrix_json(bm.gamma);
  j["lambda_y"] = vector_json(bm.lambda_y);
  j["r_operator"] = matrix_json(bm.r_operator);
  j["bias_matrix"] = matrix_json(bm.bias_matrix);
  Json id;
  id["basis_indices"] = bm.id_check.basis_indices;
  id["condition_numbers"] = bm.id_check.condition_numbers;
  id["spanning_ok"] = bm.id_check.spanning_ok;
  id["spanning_condition"] = number(bm.id_check.spanning_condition);
  id["threshold"] = bm.id_check.threshold;
  j["id_check"] = id;
  // Per-unit partial-identification half-widths for a unit shift of the
  // unit's own exposure.
  Json bounds = Json::array();
  for (Eigen::Index i = 0; i < bm.gamma.rows(); ++i) {
    Vector delta = Vector::Zero(bm.gamma.rows());
    delta(i) = 1.0;
    bounds.push_back(to_json(partial_id_interval(bm.gamma, bm.r_operator, static_cast<int>(i), delta)));
  }
  j["partial_id_own_unit_shift"] = bounds;
  return j;
}

Json to_json(const EffectEstimate& est) {
  Json j;
  j["method"] = to_string(est.method);
  Json coefs;
  for (std::size_t k = 0; k < est.coef_names.size(); ++k) coefs[est.coef_names[k]] = number(est.beta(static_cast<Eigen::Index>(k)));
  j["coefficients"] = coefs;
  j["acd"] = number(est.summary.acd);
  Json ate;
  for (const auto& [shift, v] : est.summary.ate) ate[format_double(shift)] = number(v);
  j["ate"] = ate;
  j["shift_out_of_support"] = est.summary.shift_out_of_support;
  if (est.unit_beta.size() > 0) j["unit_slopes"] = vector_json(est.unit_beta);
  Json iv;
  for (const auto& [name, interval] : est.intervals) iv[name] = to_json(interval);
  j["intervals"] = iv;
  Json diag;
  const auto& d = est.diagnostics;
  diag["procrustes_residual"] = number(d.procrustes_residual);
  diag["identified"] = d.identified;
  diag["id_check_passed"] = d.id_check_passed;
  diag["reduced_off_block"] = d.reduced_off_block;
  diag["converged"] = d.converged;
  diag["iterations"] = d.iterations;
  diag["bootstrap_reps"] = d.bootstrap_reps;
  diag["bootstrap_failures"] = d.bootstrap_failures;
  diag["notes"] = d.notes;
  j["diagnostics"] = diag;
  if (est.bias_model) j["bias_model"] = to_json(*est.bias_model);
  return j;
}

Json to_json(const RankSelection& sel) {
  Json j;
  j["method"] = to_string(sel.method);
  j["rank"] = sel.rank;
  j["eigenvalues"] = vector_json(sel.eigenvalues);
  Json cands = Json::array();
  for (std::size_t k = 0; k < sel.scores.size(); ++k) {
    Json c{{"k", k + 1}, {"score", number(sel.scores[k])}};
    if (k < sel.thresholds.size()) c["threshold"] = number(sel.thresholds[k]);
    cands.push_back(c);
  }
  j["candidates"] = cands;
  return j;
}

Json to_json(const SimScenario& sc) {
  Json j;
  j["kind"] = to_string(sc.kind);
  j["name"] = sc.name();
  j["dims"] = Json{{"n", sc.n}, {"t", sc.t}, {"m", sc.m}, {"p", sc.p}};
  j["noise"] = Json{{"sigma_xi", sc.sigma_xi}, {"sigma_eps", sc.sigma_eps}, {"dist", to_string(sc.dist)}};
  j["truth"] = Json{{"beta", sc.beta}, {"beta2", sc.beta2}};
  j["rho"] = sc.rho;
  j["k_neighbors"] = sc.k_neighbors;
  const auto& k = sc.constants;
  j["constants"] = Json{{"exposure_common", k.exposure_common},   {"exposure_spread", k.exposure_spread},
                        {"outcome_common", k.outcome_common},     {"outcome_spread", k.outcome_spread},
                        {"field_amplitude", k.field_amplitude},   {"temporal_amplitude", k.temporal_amplitude},
                        {"temporal_period", k.temporal_period},   {"covariate_base_d", k.covariate_base_d},
                        {"covariate_base_y", k.covariate_base_y}, {"covariate_het_d", k.covariate_het_d},
                        {"covariate_het_y", k.covariate_het_y},   {"intercept", k.intercept}};
  return j;
}

Json to_json(const Truth& truth) {
  Json j;
  for (std::size_t k = 0; k < truth.names.size(); ++k) j[truth.names[k]] = number(truth.beta(static_cast<Eigen::Index>(k)));
  return j;
}

SimScenario scenario_from_json(const Json& j, SimScenario sc) {
  if (j.is_string()) return scenario_from_name(j.get<std::string>());
  if (!j.is_object()) throw Error(ErrorKind::InvalidArgument, "scenario must be a name or an object");
  if (j.contains("name")) sc = scenario_from_name(j["name"].get<std::string>());
  auto take = [](const Json& obj, const char* key, auto& field) {
    if (obj.contains(key)) field = obj[key].get<std::decay_t<decltype(field)>>();
  };
  if (j.contains("dims")) {
    const auto& d = j["dims"];
    take(d, "n", sc.n);
    take(d, "t", sc.t);
    take(d, "m", sc.m);
    take(d, "p", sc.p);
  }
  if (j.contains("noise")) {
    const auto& n = j["noise"];
    take(n, "sigma_xi", sc.sigma_xi);
    take(n, "sigma_eps", sc.sigma_eps);
    if (n.contains("dist")) sc.dist = noise_dist_from_string(n["dist"].get<std::string>());
  }
  if (j.contains("truth")) {
    take(j["truth"], "beta", sc.beta);
    take(j["truth"], "beta2", sc.beta2);
  }
  take(j, "rho", sc.rho);
  take(j, "k_neighbors", sc.k_neighbors);
  if (j.contains("constants")) {
    const auto& c = j["constants"];
    auto& k = sc.constants;
    take(c, "exposure_common", k.exposure_common);
    take(c, "exposure_spread", k.exposure_spread);
    take(c, "outcome_common", k.outcome_common);
    take(c, "outcome_spread", k.outcome_spread);
    take(c, "field_amplitude", k.field_amplitude);
    take(c, "temporal_amplitude", k.temporal_amplitude);
    take(c, "temporal_period", k.temporal_period);
    take(c, "covariate_base_d", k.covariate_base_d);
    take(c, "covariate_base_y", k.covariate_base_y);
    take(c, "covariate_het_d", k.covariate_het_d);
    take(c, "covariate_het_y", k.covariate_het_y);
    take(c, "intercept", k.intercept);
  }
  sc.validate();
  return sc;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string render_document(const Json& body, const std::string& timestamp) {
  Json doc;
  doc["timestamp"] = timestamp;
  for (const auto& [key, value] : body.items()) doc[key] = value;
  return doc.dump(2) + "\n";
}

void write_document(const std::filesystem::path& path, const Json& body) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << render_document(body, utc_timestamp());
}

void write_curve_csv(const std::filesystem::path& path, const EffectEstimate& est) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "grid,value,lo,hi\n";
  const auto& s = est.summary;
  const bool band = est.curve_lo.size() == s.grid.size();
  for (Eigen::Index k = 0; k < s.grid.size(); ++k) {
    out << format_double(s.grid(k)) << ',' << format_double(s.centered(k)) << ','
        << (band ? format_double(est.curve_lo(k)) : std::string("NA")) << ','
        << (band ? format_double(est.curve_hi(k)) : std::string("NA")) << '\n';
  }
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::InvalidArgument, path.string() + ": " + e.what());
  }
}

}  // namespace fcausal::cli
