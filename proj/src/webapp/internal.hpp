// Term helpers shared by the webapp sources.
#pragma once

#include <string_view>
#include <utility>
#include <vector>

#include "webtlr/webapp.hpp"

namespace webtlr::web {

Term id_term(std::string_view sort, std::string_view token);
Term nat_term(unsigned long v);
unsigned long nat_of(const Term& t);  // throws BuiltinError
Term op(std::string_view name, std::vector<Term> args);

// AC containers with identity: build (flattened) and take apart.
Term bag_of(std::string_view name, std::string_view empty, std::vector<Term> items);
std::vector<Term> items_of(const Term& t, std::string_view name, std::string_view empty);
std::vector<Position> item_positions(const Term& t, const Position& at, std::string_view name,
                                     std::string_view empty);

std::vector<std::pair<std::string, std::string>> condition_tests(const Term& cond);

// Builtins and protocol rules over the model's theory.
void install_protocol(WebModel& model);

}  // namespace webtlr::web
