#include "webapp/internal.hpp"

namespace webtlr::web {

bool cur_page(const Term& state, std::string_view idb, std::string_view page) {
  if (state.symbol() != "WS") return false;
  for (const auto& b : items_of(state.arg(0), "brs", "br-empty")) {
    if (b.symbol() == "B" && b.arg(0).symbol() == idb && b.arg(2).symbol() == page) return true;
  }
  return false;
}

bool has_state_predicate(const WebModel& model, std::string_view name, std::size_t arity) {
  if (name == "curPage") return arity == 2;
  return arity == 0 && model.predicate(name) != nullptr;
}

bool eval_predicate(const WebModel& model, std::string_view name, const std::vector<std::string>& args,
                    const Term& state) {
  if (name == "curPage") {
    if (args.size() != 2) throw Error("curPage takes a browser id and a page name");
    return cur_page(state, args[0], args[1]);
  }
  const PredicateDef* p = model.predicate(name);
  if (!p || !args.empty()) throw Error("unknown predicate '" + std::string(name) + "'");
  return !filter_match(p->pattern, state).criterion.empty();
}

}  // namespace webtlr::web
