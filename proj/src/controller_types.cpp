#include "blqg/controller_types.hpp"

#include <sstream>

#include "blqg/errors.hpp"

namespace blqg {

void DynamicController::check(int m, int p) const {
  const auto nc = E.rows();
  std::ostringstream msg;
  if (E.cols() != nc) msg << "E must be square; ";
  if (F.rows() != nc || F.cols() != p) msg << "F must be " << nc << "x" << p << "; ";
  if (G.rows() != m || G.cols() != nc) msg << "G must be " << m << "x" << nc << "; ";
  if (H.rows() != m || H.cols() != p) msg << "H must be " << m << "x" << p << "; ";
  if (!msg.str().empty()) throw DimensionError("dynamic controller: " + msg.str());
}

BehavioralGain::BehavioralGain(Matrix k, SystemDims dims) : k_(std::move(k)), dims_(dims) {
  if (k_.rows() != dims_.m || k_.cols() != dims_.history_dim()) {
    std::ostringstream msg;
    msg << "behavioral gain must be " << dims_.m << "x" << dims_.history_dim() << ", got "
        << k_.rows() << "x" << k_.cols();
    throw DimensionError(msg.str());
  }
}

BehavioralGain BehavioralGain::zero(SystemDims dims) {
  return BehavioralGain(Matrix::Zero(dims.m, dims.history_dim()), dims);
}

}  // namespace blqg
