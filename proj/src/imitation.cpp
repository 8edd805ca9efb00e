#include "blqg/imitation.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <sstream>
#include <vector>

#include "blqg/errors.hpp"

namespace blqg {

void ExpertData::check() const {
  const int rows = dims.n * dims.m + dims.n * dims.p;
  if (U_N.rows() != dims.m || Y_N.rows() != rows || U_N.cols() != Y_N.cols() ||
      U_N.cols() != k) {
    throw DimensionError("expert data: U_N must be m x k and Y_N (nm+np) x k");
  }
}

int sufficient_samples(int n, int m, int p) {
  if (n <= 0 || m <= 0 || p <= 0) throw DimensionError("dimensions must be positive");
  return n + n * m + n * p;
}

int subspace_id_samples(int n, int m, int p) {
  if (n <= 0 || m <= 0 || p <= 0) throw DimensionError("dimensions must be positive");
  return 2 * (n + 1) * (m + p + 1) - 1;
}

ExpertData assemble_expert_data(const Matrix& inputs, const Matrix& outputs,
                                const SystemDims& dims, int t0, int k) {
  const int n = dims.n, m = dims.m, p = dims.p;
  if (k <= 0) k = n * m + n * p;
  if (inputs.rows() != m || outputs.rows() != p) {
    throw DimensionError("expert record has the wrong number of channels");
  }
  if (t0 < n) {
    std::ostringstream msg;
    msg << "expert window start t0 = " << t0 << " must be at least n = " << n;
    throw DimensionError(msg.str());
  }
  const int last = t0 + k - 1;
  if (last >= inputs.cols() || last >= outputs.cols()) {
    std::ostringstream msg;
    msg << "expert record too short: need samples up to t = " << last << ", have "
        << std::min(inputs.cols(), outputs.cols());
    throw DimensionError(msg.str());
  }
  ExpertData d;
  d.t0 = t0;
  d.k = k;
  d.dims = dims;
  d.U_N.resize(m, k);
  d.Y_N.resize(n * m + n * p, k);
  for (int j = 0; j < k; ++j) {
    const int t = t0 + j;
    d.U_N.col(j) = inputs.col(t);
    for (int i = 0; i < n; ++i) {
      d.Y_N.block(i * m, j, m, 1) = inputs.col(t - n + i);
      d.Y_N.block(n * m + i * p, j, p, 1) = outputs.col(t - n + 1 + i);
    }
  }
  return d;
}

ExpertData assemble_expert_data(const Trajectory& traj, const SystemDims& dims, int t0, int k) {
  return assemble_expert_data(traj.u, traj.y, dims, t0, k);
}

LearnedGain learn_gain(const ExpertData& data) {
  data.check();
  const SystemDims& d = data.dims;
  const Matrix k13 = data.U_N * pinv(data.Y_N);
  Matrix full = Matrix::Zero(d.m, d.history_dim());
  full.leftCols(d.n * d.m) = k13.leftCols(d.n * d.m);
  full.rightCols(d.n * d.p) = k13.rightCols(d.n * d.p);

  LearnedGain out;
  out.gain = BehavioralGain(full, d);
  out.data_rank = rank(data.Y_N);
  out.input_rank = rank(data.U_N);
  out.residual = (data.U_N - k13 * data.Y_N).norm();
  const int full_rank = static_cast<int>(std::min(data.U_N.rows(), data.U_N.cols()));
  if (out.input_rank < full_rank) {
    std::ostringstream msg;
    msg << "expert inputs have rank " << out.input_rank << " < " << full_rank
        << "; the learned gain is the minimum-norm fit";
    out.warning = msg.str();
  }
  return out;
}

RolloutReport validate_by_rollout(const LtiSystem& sys, const BehavioralGain& learned,
                                  const BehavioralGain& reference, const LqgWeights& weights,
                                  int horizon, std::uint64_t seed) {
  const BehavioralSystem bsys = lift_problem(sys, weights);
  const GainCost ref = cost_of_gain(bsys, reference, weights);
  const GainCost lrn = cost_of_gain(bsys, learned, weights);

  const Trajectory a = simulate(sys, BehavioralLaw{learned}, horizon, seed);
  const Trajectory b = simulate(sys, BehavioralLaw{reference}, horizon, seed);

  RolloutReport r;
  r.horizon = horizon;
  r.output_deviation = (a.y - b.y).cwiseAbs().maxCoeff();
  r.input_deviation = horizon > 0 ? (a.u - b.u).cwiseAbs().maxCoeff() : 0.0;
  r.learned_cost = lrn.cost;
  r.reference_cost = ref.cost;
  r.relative_cost_gap = std::abs(lrn.cost - ref.cost) / std::abs(ref.cost);
  r.projector_distance =
      ((learned.matrix() - reference.matrix()) * gauge_projector(bsys, ref.P)).norm();
  return r;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

[[noreturn]] void bad_line(int line, const std::string& what) {
  std::ostringstream msg;
  msg << "expert csv line " << line << ": " << what;
  throw InputFormatError(msg.str());
}

template <typename T>
T parse_number(const std::string& cell, int line, const char* what) {
  T value{};
  const auto* first = cell.data();
  const auto* last = first + cell.size();
  const auto res = std::from_chars(first, last, value);
  if (cell.empty() || res.ec != std::errc() || res.ptr != last) {
    bad_line(line, std::string("cannot parse ") + what + " '" + cell + "'");
  }
  return value;
}

}  // namespace

ExpertLog read_expert_csv(std::istream& is, int m, int p) {
  std::string line;
  int lineno = 0;
  if (!std::getline(is, line)) throw InputFormatError("expert csv: empty input");
  ++lineno;
  std::vector<std::string> expected{"t"};
  for (int i = 1; i <= m; ++i) expected.push_back("u" + std::to_string(i));
  for (int i = 1; i <= p; ++i) expected.push_back("y" + std::to_string(i));
  auto header = split_csv(line);
  for (auto& h : header) h = trim(h);
  if (header != expected) {
    std::string want;
    for (const auto& e : expected) want += (want.empty() ? "" : ",") + e;
    bad_line(lineno, "header must be '" + want + "'");
  }

  std::vector<int> times;
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split_csv(line);
    if (static_cast<int>(cells.size()) != 1 + m + p) {
      bad_line(lineno, "expected " + std::to_string(1 + m + p) + " fields, found " +
                           std::to_string(cells.size()));
    }
    const int t = parse_number<int>(trim(cells[0]), lineno, "time index");
    if (!times.empty() && t != times.back() + 1) {
      bad_line(lineno, "time index " + std::to_string(t) + " does not follow " +
                           std::to_string(times.back()));
    }
    std::vector<double> vals;
    for (int i = 1; i <= m + p; ++i) {
      vals.push_back(parse_number<double>(trim(cells[static_cast<std::size_t>(i)]), lineno,
                                          "value"));
    }
    times.push_back(t);
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw InputFormatError("expert csv: no data rows");

  ExpertLog log;
  log.first_t = times.front();
  const auto count = static_cast<Eigen::Index>(rows.size());
  log.inputs.resize(m, count);
  log.outputs.resize(p, count);
  for (Eigen::Index j = 0; j < count; ++j) {
    const auto& r = rows[static_cast<std::size_t>(j)];
    for (int i = 0; i < m; ++i) log.inputs(i, j) = r[static_cast<std::size_t>(i)];
    for (int i = 0; i < p; ++i) log.outputs(i, j) = r[static_cast<std::size_t>(m + i)];
  }
  return log;
}

}  // namespace blqg
