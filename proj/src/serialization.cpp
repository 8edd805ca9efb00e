#include "blqg/serialization.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "blqg/errors.hpp"

namespace blqg {

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw InputFormatError(path + ": " + what);
}

void require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) bad(path, "expected an object");
}

void reject_unknown(const Json& j, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  require_object(j, path);
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || item.key() == a;
    if (!known) bad(path + "." + item.key(), "unknown key");
  }
}

const Json& required(const Json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) bad(path + "." + key, "missing required key");
  return j.at(key);
}

double as_number(const Json& j, const std::string& path) {
  if (!j.is_number()) bad(path, "expected a number");
  return j.get<double>();
}

int as_int(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) bad(path, "expected an integer");
  return j.get<int>();
}

std::uint64_t as_u64(const Json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) {
    bad(path, "expected a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

std::string as_string(const Json& j, const std::string& path) {
  if (!j.is_string()) bad(path, "expected a string");
  return j.get<std::string>();
}

bool as_bool(const Json& j, const std::string& path) {
  if (!j.is_boolean()) bad(path, "expected a boolean");
  return j.get<bool>();
}

std::string one_of(const Json& j, const std::string& path,
                   std::initializer_list<const char*> choices) {
  const std::string s = as_string(j, path);
  std::string list;
  for (const char* c : choices) {
    if (s == c) return s;
    list += (list.empty() ? "" : ", ") + std::string(c);
  }
  bad(path, "'" + s + "' is not one of " + list);
}

Matrix rows_to_matrix(const Json& rows, const std::string& path) {
  const auto r = rows.size();
  if (r == 0) bad(path, "empty matrix");
  if (!rows.front().is_array()) {
    Matrix v(static_cast<Eigen::Index>(r), 1);
    for (std::size_t i = 0; i < r; ++i) {
      v(static_cast<Eigen::Index>(i), 0) = as_number(rows[i], path + "[" + std::to_string(i) + "]");
    }
    return v;
  }
  const auto c = rows.front().size();
  Matrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  for (std::size_t i = 0; i < r; ++i) {
    const std::string ri = path + "[" + std::to_string(i) + "]";
    if (!rows[i].is_array() || rows[i].size() != c) bad(ri, "rows must have equal length");
    for (std::size_t k = 0; k < c; ++k) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          as_number(rows[i][k], ri + "[" + std::to_string(k) + "]");
    }
  }
  return m;
}

}  // namespace

Json matrix_to_json(const Matrix& m) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    data.push_back(std::move(row));
  }
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const Json& j, const std::string& path) {
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  if (j.is_array()) return rows_to_matrix(j, path);
  if (!j.is_object()) bad(path, "expected a matrix");
  reject_unknown(j, path, {"rows", "cols", "data"});
  const int rows = as_int(required(j, path, "rows"), path + ".rows");
  const int cols = as_int(required(j, path, "cols"), path + ".cols");
  const Json& data = required(j, path, "data");
  if (!data.is_array()) bad(path + ".data", "expected an array of rows");
  Matrix m = rows_to_matrix(data, path + ".data");
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream msg;
    msg << "declared " << rows << "x" << cols << " but data is " << m.rows() << "x" << m.cols();
    bad(path, msg.str());
  }
  return m;
}

Json gain_to_json(const BehavioralGain& gain) {
  const SystemDims& d = gain.dims();
  const SparsityPartition part = sparsity_partition(gain);
  return Json{
      {"dims", {{"n", d.n}, {"m", d.m}, {"p", d.p}}},
      {"K", matrix_to_json(gain.matrix())},
      {"partition",
       {{"K1", matrix_to_json(part.K1)},
        {"K2", matrix_to_json(part.K2)},
        {"K3", matrix_to_json(part.K3)}}},
      {"k2_inf_norm", part.K2.size() ? part.K2.cwiseAbs().rowwise().sum().maxCoeff() : 0.0},
      {"is_sparse", part.is_sparse},
  };
}

BehavioralGain gain_from_json(const Json& j, const std::string& path) {
  require_object(j, path);
  const Json& dj = required(j, path, "dims");
  const std::string dp = path + ".dims";
  reject_unknown(dj, dp, {"n", "m", "p"});
  SystemDims d{as_int(required(dj, dp, "n"), dp + ".n"), as_int(required(dj, dp, "m"), dp + ".m"),
               as_int(required(dj, dp, "p"), dp + ".p")};
  Matrix k = matrix_from_json(required(j, path, "K"), path + ".K");
  try {
    return BehavioralGain(std::move(k), d);
  } catch (const DimensionError& e) {
    bad(path + ".K", e.what());
  }
}

Json controller_to_json(const DynamicController& ctrl) {
  return Json{{"E", matrix_to_json(ctrl.E)},
              {"F", matrix_to_json(ctrl.F)},
              {"G", matrix_to_json(ctrl.G)},
              {"H", matrix_to_json(ctrl.H)}};
}

DynamicController controller_from_json(const Json& j, const std::string& path) {
  require_object(j, path);
  DynamicController c{matrix_from_json(required(j, path, "E"), path + ".E"),
                      matrix_from_json(required(j, path, "F"), path + ".F"),
                      matrix_from_json(required(j, path, "G"), path + ".G"),
                      matrix_from_json(required(j, path, "H"), path + ".H")};
  try {
    c.check(static_cast<int>(c.G.rows()), static_cast<int>(c.F.cols()));
  } catch (const DimensionError& e) {
    bad(path, e.what());
  }
  return c;
}

Json behavioral_system_to_json(const BehavioralSystem& b) {
  const BlockLayout& l = b.layout;
  Json out{
      {"dims", {{"n", b.dims.n}, {"m", b.dims.m}, {"p", b.dims.p}}},
      {"layout",
       {{"u", {l.u_offset, l.u_size}},
        {"y", {l.y_offset, l.y_size}},
        {"w", {l.w_offset, l.w_size}},
        {"v", {l.v_offset, l.v_size}}}},
      {"A", matrix_to_json(b.A)},   {"Bu", matrix_to_json(b.Bu)}, {"Bw", matrix_to_json(b.Bw)},
      {"Bv", matrix_to_json(b.Bv)}, {"C", matrix_to_json(b.C)},   {"Au", matrix_to_json(b.Au)},
      {"Ay", matrix_to_json(b.Ay)}, {"Aw", matrix_to_json(b.Aw)}, {"Av", matrix_to_json(b.Av)},
      {"H", matrix_to_json(b.H)},
  };
  if (b.Qz.size()) out["Qz"] = matrix_to_json(b.Qz);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

ArmijoParams parse_armijo(const Json& j, const std::string& path) {
  reject_unknown(j, path, {"alpha0", "beta", "sigma", "max_backtracks"});
  ArmijoParams a;
  if (j.contains("alpha0")) a.alpha0 = as_number(j["alpha0"], path + ".alpha0");
  if (j.contains("beta")) a.beta = as_number(j["beta"], path + ".beta");
  if (j.contains("sigma")) a.sigma = as_number(j["sigma"], path + ".sigma");
  if (j.contains("max_backtracks")) {
    a.max_backtracks = as_int(j["max_backtracks"], path + ".max_backtracks");
  }
  try {
    a.check();
  } catch (const InputFormatError& e) {
    bad(path, e.what());
  }
  return a;
}

DemoSettings parse_demo(const Json& j, const std::string& path) {
  reject_unknown(j, path,
                 {"source", "path", "t0", "k", "horizon", "U_N", "Y_N", "validate_horizon"});
  DemoSettings d;
  if (j.contains("source")) d.source = one_of(j["source"], path + ".source", {"generate", "csv", "matrices"});
  if (j.contains("path")) d.path = as_string(j["path"], path + ".path");
  if (j.contains("t0")) d.t0 = as_int(j["t0"], path + ".t0");
  if (j.contains("k")) d.k = as_int(j["k"], path + ".k");
  if (j.contains("horizon")) d.horizon = as_int(j["horizon"], path + ".horizon");
  if (j.contains("U_N")) d.U_N = matrix_from_json(j["U_N"], path + ".U_N");
  if (j.contains("Y_N")) d.Y_N = matrix_from_json(j["Y_N"], path + ".Y_N");
  if (j.contains("validate_horizon")) {
    d.validate_horizon = as_int(j["validate_horizon"], path + ".validate_horizon");
  }
  if (d.source == "csv" && d.path.empty()) bad(path + ".path", "required for source 'csv'");
  if (d.source == "matrices" && (!d.U_N || !d.Y_N)) {
    bad(path, "source 'matrices' needs U_N and Y_N");
  }
  return d;
}

ExperimentSettings parse_experiment(const Json& j, const std::string& path) {
  reject_unknown(j, path,
                 {"seed", "seeds", "horizon", "controller", "mode", "init", "armijo", "max_iters",
                  "grad_tol", "eig_range", "freeze_k2", "demo"});
  ExperimentSettings e;
  if (j.contains("seed")) e.seed = as_u64(j["seed"], path + ".seed");
  if (j.contains("seeds")) {
    const std::string sp = path + ".seeds";
    if (!j["seeds"].is_array() || j["seeds"].empty()) bad(sp, "expected a non-empty array");
    for (std::size_t i = 0; i < j["seeds"].size(); ++i) {
      e.seeds.push_back(as_u64(j["seeds"][i], sp + "[" + std::to_string(i) + "]"));
    }
  }
  if (j.contains("horizon")) {
    e.horizon = as_int(j["horizon"], path + ".horizon");
    if (e.horizon < 0) bad(path + ".horizon", "must be non-negative");
  }
  if (j.contains("controller")) {
    e.controller = one_of(j["controller"], path + ".controller", {"none", "classical", "behavioral"});
  }
  if (j.contains("mode")) e.mode = one_of(j["mode"], path + ".mode", {"behavioral", "dynamic", "both"});
  if (j.contains("init")) e.init = one_of(j["init"], path + ".init", {"pole-placement", "optimal"});
  if (j.contains("armijo")) e.armijo = parse_armijo(j["armijo"], path + ".armijo");
  if (j.contains("max_iters")) {
    e.max_iters = as_int(j["max_iters"], path + ".max_iters");
    if (e.max_iters < 0) bad(path + ".max_iters", "must be non-negative");
  }
  if (j.contains("grad_tol")) e.grad_tol = as_number(j["grad_tol"], path + ".grad_tol");
  if (j.contains("eig_range")) {
    const std::string rp = path + ".eig_range";
    const Json& r = j["eig_range"];
    if (!r.is_array() || r.size() != 2) bad(rp, "expected [low, high]");
    e.eig_low = as_number(r[0], rp + "[0]");
    e.eig_high = as_number(r[1], rp + "[1]");
    if (!(e.eig_low >= 0.0 && e.eig_low < e.eig_high && e.eig_high < 1.0)) {
      bad(rp, "must satisfy 0 <= low < high < 1");
    }
  }
  if (j.contains("freeze_k2")) e.freeze_k2 = as_bool(j["freeze_k2"], path + ".freeze_k2");
  if (j.contains("demo")) e.demo = parse_demo(j["demo"], path + ".demo");
  return e;
}

OutputSettings parse_output(const Json& j, const std::string& path) {
  reject_unknown(j, path, {"directory", "prefix"});
  OutputSettings o;
  if (j.contains("directory")) o.directory = as_string(j["directory"], path + ".directory");
  if (j.contains("prefix")) o.prefix = as_string(j["prefix"], path + ".prefix");
  return o;
}

LtiSystem parse_system(const Json& j, const std::string& path) {
  reject_unknown(j, path, {"A", "B", "C", "Qw", "Rv", "Sigma0"});
  auto mat = [&](const char* key) { return matrix_from_json(required(j, path, key), path + "." + key); };
  Matrix a = mat("A"), b = mat("B"), c = mat("C"), qw = mat("Qw"), rv = mat("Rv");
  if (j.contains("Sigma0")) {
    return LtiSystem(a, b, c, qw, rv, matrix_from_json(j["Sigma0"], path + ".Sigma0"));
  }
  return LtiSystem(a, b, c, qw, rv);
}

}  // namespace

ExperimentConfig parse_config(const Json& j) {
  reject_unknown(j, "$", {"system", "weights", "experiment", "output"});
  LtiSystem sys = parse_system(required(j, "$", "system"), "$.system");
  const Json& wj = required(j, "$", "weights");
  reject_unknown(wj, "$.weights", {"Qx", "Ru"});
  LqgWeights w{matrix_from_json(required(wj, "$.weights", "Qx"), "$.weights.Qx"),
               matrix_from_json(required(wj, "$.weights", "Ru"), "$.weights.Ru")};
  w.check(sys.dims());
  ExperimentSettings e;
  if (j.contains("experiment")) e = parse_experiment(j["experiment"], "$.experiment");
  OutputSettings o;
  if (j.contains("output")) o = parse_output(j["output"], "$.output");
  return ExperimentConfig{std::move(sys), std::move(w), std::move(e), std::move(o)};
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputFormatError("cannot open config file '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputFormatError(path + ": " + e.what());
  }
  return parse_config(j);
}

}  // namespace blqg
