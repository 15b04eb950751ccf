#include "webapp/internal.hpp"

namespace webtlr::web {

namespace {

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

std::string query_text(const LinkDef& l) {
  std::string out = "[";
  for (std::size_t i = 0; i < l.params.size(); ++i) {
    if (i) out += ", ";
    out += l.params[i];
  }
  return out + "]";
}

}  // namespace

std::string render_dot(const WebModel& model) {
  std::string out = "digraph navigation {\n";
  for (const auto& p : model.pages) {
    out += "  \"" + dot_escape(p.name) + "\"";
    if (p.name == model.scenario.entry) out += " [shape=doublecircle]";
    out += ";\n";
  }
  for (const auto& p : model.pages) {
    for (const auto& l : p.links) {
      out += "  \"" + dot_escape(p.name) + "\" -> \"" + dot_escape(l.target) + "\" [style=solid, label=\"" +
             dot_escape(condition_text(l.cond) + " / " + query_text(l)) + "\"];\n";
    }
    for (const auto& c : p.continuations) {
      out += "  \"" + dot_escape(p.name) + "\" -> \"" + dot_escape(c.target) + "\" [style=dashed, label=\"" +
             dot_escape(condition_text(c.cond)) + "\"];\n";
    }
  }
  return out + "}\n";
}

nlohmann::json graph_json(const WebModel& model) {
  nlohmann::json nodes = nlohmann::json::array();
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& p : model.pages) {
    nodes.push_back({{"id", p.name}, {"entry", p.name == model.scenario.entry}});
    for (const auto& l : p.links) {
      edges.push_back({{"from", p.name},
                       {"to", l.target},
                       {"kind", "link"},
                       {"condition", condition_text(l.cond)},
                       {"query", l.params},
                       {"label", condition_text(l.cond) + " / " + query_text(l)}});
    }
    for (const auto& c : p.continuations) {
      edges.push_back({{"from", p.name},
                       {"to", c.target},
                       {"kind", "continuation"},
                       {"condition", condition_text(c.cond)},
                       {"label", condition_text(c.cond)}});
    }
  }
  return {{"nodes", nodes}, {"edges", edges}, {"dot", render_dot(model)}};
}

}  // namespace webtlr::web
