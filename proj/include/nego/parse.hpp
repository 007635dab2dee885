#pragma once

#include <string_view>

#include "nego/config_type.hpp"
#include "nego/logic.hpp"
#include "nego/policy.hpp"

namespace nego {

// All parse functions throw ParseError with line/column on bad syntax.
FormulaPtr parse_formula(std::string_view text);
TermPtr parse_term(std::string_view text);

// Also rejects duplicate parameters and constraint variables outside the
// parameter list (the conditions a type must satisfy syntactically).
ConfigType parse_config_type(std::string_view text);

Policy parse_policy(std::string_view text);

// sequence of `id = config-type` entries; every type is checked at load
// (quantifier-free, satisfiable)
Registry parse_registry(std::string_view text, std::vector<std::string>* warnings = nullptr);

}  // namespace nego
