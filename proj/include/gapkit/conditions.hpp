#pragma once

// Textual adapter conditions for transfer experiments.
//
// A condition is a '+'-joined list of steps applied in order:
//
//   none            no adapter (only valid on its own)
//   noise:<w>       Gaussian noise with scale w
//   mean            mean shift fit on the held-out paired split
//   neg_mean        negated mean shift
//   rng:<m>         random constant shift of magnitude m
//   linear[:<l>]    least-squares linear map, ridge lambda l (default 1e-4)
//   cov[:<s>]       structured covariance noise, scale s (default 1)
//   file:<path>     a fitted adapter or pipeline JSON document
//
// e.g. "mean+noise:0.08", "linear+noise:0.08", "cov".

#include <string>
#include <vector>

#include "gapkit/transferlab.hpp"

namespace gapkit {

Condition ParseCondition(const std::string& text);

// Comma-separated list of conditions.
std::vector<Condition> ParseConditionList(const std::string& text);

}  // namespace gapkit
