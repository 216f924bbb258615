#pragma once

#include <string>

#include "rpg/answer.hpp"
#include "rpg/knowledge.hpp"
#include "rpg/program.hpp"

namespace rpg {

// Source text covered by tokens s..e. Throws RangeError when the range is
// reversed, out of bounds, or crosses a region boundary.
std::string detokenize(const LinearizedInput& input, int start, int end);

// Bottom-up evaluation of a node. Atomic nodes run first, then the
// higher-order operation over their results.
Value evaluate(const Node& node, const LinearizedInput& input);

// Executes a validated program. Throws DivisionByZero, NonNumericCell or
// RangeError; ties in ARGMAX/ARGMIN go to the earliest argument.
Answer execute(const Program& program, const LinearizedInput& input,
               std::optional<Scale> scale = std::nullopt);

// Indicator I(f(G) = A). Numbers compare after 4-dp rounding within `tol`;
// text compares normalized, span sets as multisets; scales must agree when
// both answers carry one.
bool answers_match(const Answer& predicted, const Answer& gold,
                   double tol = 5e-5);

}  // namespace rpg
