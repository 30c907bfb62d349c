#include "gapkit/errors.hpp"

namespace gapkit {
namespace {

std::string DegenerateMessage(std::optional<std::size_t> row) {
  std::string msg = "degenerate vector (norm below 1e-12)";
  if (row) msg += " at row " + std::to_string(*row);
  return msg;
}

}  // namespace

DegenerateVectorError::DegenerateVectorError(std::optional<std::size_t> row)
    : Error(ErrorKind::kDegenerate, DegenerateMessage(row)), row_(row) {}

}  // namespace gapkit
