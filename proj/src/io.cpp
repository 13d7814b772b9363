// Copyright 2026 The visgp Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "visgp/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "visgp/error.hpp"

namespace visgp::io {
namespace {

using nlohmann::json;

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

double parse_number(const std::string& field, std::size_t line, const std::string& column) {
  double v = 0.0;
  const char* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (field.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw Error(ErrorCode::InvalidInput,
                "line " + std::to_string(line) + ": bad or missing value '" + field + "' in column " + column);
  }
  return v;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

Table parse_table(const std::string& text) {
  Table t;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_fields(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw Error(ErrorCode::InvalidInput, "line " + std::to_string(lineno) + ": expected " +
                                               std::to_string(t.header.size()) + " fields, got " +
                                               std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.line_numbers.push_back(lineno);
  }
  if (t.header.empty()) throw Error(ErrorCode::InvalidInput, "empty CSV");
  return t;
}

std::size_t column(const Table& t, const std::string& name) {
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (t.header[i] == name) return i;
  }
  throw Error(ErrorCode::InvalidInput, "missing CSV column '" + name + "'");
}

std::vector<std::size_t> covariate_columns(const Table& t) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (t.header[i].rfind("covariate_", 0) == 0) out.push_back(i);
  }
  return out;
}

Ring ring_from_json(const json& coords) {
  Ring r;
  for (const auto& c : coords) {
    if (!c.is_array() || c.size() < 2) throw Error(ErrorCode::InvalidInput, "GeoJSON position must have two numbers");
    r.push_back({c[0].get<double>(), c[1].get<double>()});
  }
  if (r.size() > 1 && r.front() == r.back()) r.pop_back();
  return r;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidInput, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << contents;
  if (!out) throw Error(ErrorCode::InvalidInput, "cannot write " + path.string());
}

PolygonDomain parse_domain_geojson(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("domain is not valid JSON: ") + e.what());
  }
  if (j.value("type", "") == "FeatureCollection") {
    if (!j.contains("features") || j["features"].size() != 1) {
      throw Error(ErrorCode::InvalidInput, "FeatureCollection must hold exactly one polygon");
    }
    j = j["features"][0];
  }
  if (j.value("type", "") == "Feature") j = j.at("geometry");
  if (j.value("type", "") != "Polygon") throw Error(ErrorCode::InvalidInput, "domain geometry must be a Polygon");
  const json& rings = j.at("coordinates");
  if (!rings.is_array() || rings.empty()) throw Error(ErrorCode::InvalidInput, "Polygon has no rings");
  std::vector<Ring> holes;
  for (std::size_t i = 1; i < rings.size(); ++i) holes.push_back(ring_from_json(rings[i]));
  return PolygonDomain(ring_from_json(rings[0]), std::move(holes));
}

PolygonDomain parse_domain_csv(const std::string& text) {
  const Table t = parse_table(text);
  const std::size_t ci = column(t, "ring_id"), cx = column(t, "x"), cy = column(t, "y");
  std::map<long, Ring> rings;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double id = parse_number(t.rows[r][ci], t.line_numbers[r], "ring_id");
    rings[std::lround(id)].push_back({parse_number(t.rows[r][cx], t.line_numbers[r], "x"),
                                      parse_number(t.rows[r][cy], t.line_numbers[r], "y")});
  }
  if (!rings.contains(0)) throw Error(ErrorCode::InvalidInput, "domain CSV has no ring 0");
  std::vector<Ring> holes;
  for (auto& [id, ring] : rings) {
    if (ring.size() > 1 && ring.front() == ring.back()) ring.pop_back();
    if (id != 0) holes.push_back(ring);
  }
  return PolygonDomain(rings[0], std::move(holes));
}

PolygonDomain load_domain(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  if (path.extension() == ".csv") return parse_domain_csv(text);
  return parse_domain_geojson(text);
}

Observations parse_observations(const std::string& text) {
  const Table t = parse_table(text);
  const std::size_t cx = column(t, "x"), cy = column(t, "y"), cv = column(t, "value");
  const auto cov = covariate_columns(t);
  Observations o;
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  if (n == 0) throw Error(ErrorCode::InvalidInput, "no observations");
  o.y.resize(n);
  o.X.resize(n, static_cast<Eigen::Index>(cov.size()) + 1);
  for (std::size_t c : cov) o.covariates.push_back(t.header[c]);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = t.rows[r];
    const std::size_t ln = t.line_numbers[r];
    o.points.push_back({parse_number(row[cx], ln, "x"), parse_number(row[cy], ln, "y")});
    o.y(r) = parse_number(row[cv], ln, "value");
    o.X(r, 0) = 1.0;
    for (std::size_t c = 0; c < cov.size(); ++c) {
      o.X(r, static_cast<Eigen::Index>(c) + 1) = parse_number(row[cov[c]], ln, t.header[cov[c]]);
    }
  }
  return o;
}

Observations load_observations(const std::filesystem::path& path) { return parse_observations(read_file(path)); }

Sites parse_sites(const std::string& text, const std::vector<std::string>& covariates) {
  const Table t = parse_table(text);
  const std::size_t cx = column(t, "x"), cy = column(t, "y");
  std::vector<std::size_t> cov;
  for (const auto& name : covariates) cov.push_back(column(t, name));
  Sites s;
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  s.X.resize(n, static_cast<Eigen::Index>(cov.size()) + 1);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = t.rows[r];
    const std::size_t ln = t.line_numbers[r];
    s.points.push_back({parse_number(row[cx], ln, "x"), parse_number(row[cy], ln, "y")});
    s.X(r, 0) = 1.0;
    for (std::size_t c = 0; c < cov.size(); ++c) {
      s.X(r, static_cast<Eigen::Index>(c) + 1) = parse_number(row[cov[c]], ln, covariates[c]);
    }
  }
  return s;
}

Sites load_sites(const std::filesystem::path& path, const std::vector<std::string>& covariates) {
  return parse_sites(read_file(path), covariates);
}

std::string predictions_csv(std::span<const Point2> sites, std::span<const Prediction> preds) {
  std::string out = "x,y,mean,variance,lower,upper,n_neighbors,strategy,status\n";
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& p = preds[i];
    out += fmt(sites[i].x) + ',' + fmt(sites[i].y) + ',' + fmt(p.mean) + ',' + fmt(p.variance) + ',' + fmt(p.lower) +
           ',' + fmt(p.upper) + ',' + std::to_string(p.neighbor_count) + ',' + to_string(p.strategy) + ',' +
           to_string(p.status) + '\n';
  }
  return out;
}

json fit_to_json(const FitRecord& rec) {
  const auto& f = rec.fit;
  json j;
  j["method"] = to_string(f.method);
  j["converged"] = f.converged;
  j["iterations"] = f.iterations;
  j["loglik"] = f.loglik;
  j["grad_norm"] = f.grad_norm;
  j["beta"] = std::vector<double>(f.params.beta.data(), f.params.beta.data() + f.params.beta.size());
  j["sigma2"] = f.params.sigma2;
  j["phi"] = f.params.phi;
  j["tau2"] = f.params.tau2;
  j["family"] = to_string(rec.model.family);
  j["nu"] = rec.model.nu;
  j["covariates"] = rec.covariates;
  return j;
}

FitRecord fit_from_json(const json& j) {
  FitRecord rec;
  try {
    rec.fit.method = j.at("method").get<std::string>() == "sgd" ? FitMethod::GraphSGD : FitMethod::FullMLE;
    rec.fit.converged = j.at("converged").get<bool>();
    rec.fit.iterations = j.value("iterations", 0);
    rec.fit.loglik = j.at("loglik").get<double>();
    rec.fit.grad_norm = j.value("grad_norm", 0.0);
    const auto beta = j.at("beta").get<std::vector<double>>();
    rec.fit.params.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
    rec.fit.params.sigma2 = j.at("sigma2").get<double>();
    rec.fit.params.phi = j.at("phi").get<double>();
    rec.fit.params.tau2 = j.at("tau2").get<double>();
    rec.model.family = parse_family(j.at("family").get<std::string>());
    rec.model.nu = j.value("nu", 0.5);
    rec.covariates = j.value("covariates", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("malformed fit file: ") + e.what());
  }
  rec.fit.params.covariance(rec.model).validate();
  return rec;
}

std::string trace_csv(const std::vector<TraceEntry>& trace) {
  std::string out = "iteration,component,value\n";
  for (const auto& t : trace) {
    out += std::to_string(t.iteration) + ',' + std::to_string(t.component) + ',' + fmt(t.value) + '\n';
  }
  return out;
}

std::string sim_report_csv(const SimReport& report) {
  std::string out = "method,mse,coverage,ci_length,wall_seconds,replicates_ok,failures\n";
  for (const auto& r : report.rows) {
    out += to_string(r.method) + ',' + fmt(r.mse) + ',' + fmt(r.coverage) + ',' + fmt(r.ci_length) + ',' +
           fmt(r.wall_seconds) + ',' + std::to_string(r.replicates_ok) + ',' + std::to_string(r.failures) + '\n';
  }
  return out;
}

std::string sim_replicates_csv(const SimReport& report) {
  std::string out = "replicate,method,ok,mse,coverage,ci_length,wall_seconds,n_train,n_test,error\n";
  for (const auto& r : report.replicates) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out += std::to_string(r.replicate) + ',' + to_string(r.method) + ',' + (r.ok ? "1" : "0") + ',' + fmt(r.mse) +
           ',' + fmt(r.coverage) + ',' + fmt(r.ci_length) + ',' + fmt(r.wall_seconds) + ',' +
           std::to_string(r.n_train) + ',' + std::to_string(r.n_test) + ',' + err + '\n';
  }
  return out;
}

std::string matrix_csv(const Eigen::MatrixXd& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += fmt(m(i, j));
    }
    out += '\n';
  }
  return out;
}

void write_matrix_binary(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidInput, "cannot write " + path.string());
  const std::uint64_t dims[2] = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
  out.write(reinterpret_cast<const char*>(dims), sizeof dims);
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  out.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(sizeof(double) * rm.size()));
}

Eigen::MatrixXd read_matrix_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::uint64_t dims[2] = {0, 0};
  if (!in.read(reinterpret_cast<char*>(dims), sizeof dims)) {
    throw Error(ErrorCode::InvalidInput, "cannot read matrix header from " + path.string());
  }
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(static_cast<Eigen::Index>(dims[0]),
                                                                           static_cast<Eigen::Index>(dims[1]));
  if (!in.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(sizeof(double) * rm.size()))) {
    throw Error(ErrorCode::InvalidInput, "truncated matrix file " + path.string());
  }
  return rm;
}

void RunConfig::validate() const {
  for (const auto* p : {&domain_path, &data_path}) {
    if (!p->empty() && !std::filesystem::exists(*p)) throw Error(ErrorCode::InvalidInput, "no such file: " + *p);
  }
  if (k < 1) throw Error(ErrorCode::InvalidInput, "k must be at least 1");
  if (d_max && !(*d_max > 0)) throw Error(ErrorCode::InvalidInput, "d_max must be positive");
  if (fit_method != "full" && fit_method != "sgd") {
    throw Error(ErrorCode::InvalidInput, "fit method must be 'full' or 'sgd'");
  }
  if (!(level > 0 && level < 1)) throw Error(ErrorCode::InvalidInput, "level must lie in (0, 1)");
  if (nngp_threshold < 1 || nngp_neighbors < 1) throw Error(ErrorCode::InvalidInput, "NNGP settings must be positive");
  parse_strategy(strategy);
  model();
  sgd.validate();
}

ModelSpec RunConfig::model() const {
  ModelSpec m{parse_family(family), nu};
  if (m.family == CovFamily::Exponential) m.nu = 0.5;
  CovarianceModel{m.family, 1.0, 1.0, m.nu, 0.0}.validate();
  return m;
}

LikelihoodOptions RunConfig::likelihood() const {
  LikelihoodOptions o;
  o.model = model();
  o.nngp_threshold = static_cast<std::size_t>(nngp_threshold);
  o.nngp_neighbors = nngp_neighbors;
  return o;
}

void to_json(json& j, const RunConfig& c) {
  j = json{{"domain_path", c.domain_path},
           {"data_path", c.data_path},
           {"family", c.family},
           {"nu", c.nu},
           {"k", c.k},
           {"fit_method", c.fit_method},
           {"sgd",
            {{"alpha", c.sgd.alpha},
             {"decay", c.sgd.decay},
             {"epsilon", c.sgd.epsilon},
             {"epochs", c.sgd.epochs},
             {"seed", c.sgd.seed}}},
           {"strategy", c.strategy},
           {"level", c.level},
           {"seed", c.seed},
           {"cache_dir", c.cache_dir},
           {"nngp_threshold", c.nngp_threshold},
           {"nngp_neighbors", c.nngp_neighbors},
           {"gtol", c.gtol},
           {"max_iter", c.max_iter}};
  j["d_max"] = c.d_max ? json(*c.d_max) : json(nullptr);
}

void from_json(const json& j, RunConfig& c) {
  try {
    c.domain_path = j.value("domain_path", c.domain_path);
    c.data_path = j.value("data_path", c.data_path);
    c.family = j.value("family", c.family);
    c.nu = j.value("nu", c.nu);
    c.k = j.value("k", c.k);
    if (j.contains("d_max") && !j["d_max"].is_null()) c.d_max = j["d_max"].get<double>();
    c.fit_method = j.value("fit_method", c.fit_method);
    if (j.contains("sgd")) {
      const json& s = j["sgd"];
      c.sgd.alpha = s.value("alpha", c.sgd.alpha);
      c.sgd.decay = s.value("decay", c.sgd.decay);
      c.sgd.epsilon = s.value("epsilon", c.sgd.epsilon);
      c.sgd.epochs = s.value("epochs", c.sgd.epochs);
      c.sgd.seed = s.value("seed", c.sgd.seed);
    }
    c.strategy = j.value("strategy", c.strategy);
    c.level = j.value("level", c.level);
    c.seed = j.value("seed", c.seed);
    c.cache_dir = j.value("cache_dir", c.cache_dir);
    c.nngp_threshold = j.value("nngp_threshold", c.nngp_threshold);
    c.nngp_neighbors = j.value("nngp_neighbors", c.nngp_neighbors);
    c.gtol = j.value("gtol", c.gtol);
    c.max_iter = j.value("max_iter", c.max_iter);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("bad config: ") + e.what());
  }
}

}  // namespace visgp::io
