#pragma once

#include <string>

#include "nego/logic.hpp"

namespace nego {

// Canonical single-line rendering of the text grammar. Printing is the
// inverse of parsing on ASTs: parse_formula(to_text(f)) is structurally
// equal to f.
std::string to_text(const Term& t);
std::string to_text(const Formula& f);
inline std::string to_text(const TermPtr& t) { return to_text(*t); }
inline std::string to_text(const FormulaPtr& f) { return to_text(*f); }

}  // namespace nego
