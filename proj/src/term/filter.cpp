#include "webtlr/filter.hpp"

#include "lexer.hpp"
#include "webtlr/canonical.hpp"

namespace webtlr {

namespace {

FilterPattern parse_node(detail::TermLexer& lex) {
  const auto& tok = lex.peek();
  if (tok.kind != detail::Tok::name && tok.kind != detail::Tok::string) lex.fail("expected a filter pattern");
  detail::Token head = lex.next();
  FilterPattern fp;
  if (head.kind == detail::Tok::name && head.text == "?") {
    fp.kind = FilterPattern::Kind::relevant;
  } else if (head.kind == detail::Tok::name && head.text == "_") {
    fp.kind = FilterPattern::Kind::blank;
  } else {
    fp.kind = FilterPattern::Kind::name;
    fp.fragment = head.kind == detail::Tok::string ? head.text.substr(1, head.text.size() - 2) : head.text;
  }
  if (lex.peek().kind == detail::Tok::lparen) {
    if (fp.kind != FilterPattern::Kind::name) lex.fail("'?' and '_' take no arguments");
    lex.next();
    if (lex.peek().kind != detail::Tok::rparen) {
      for (;;) {
        fp.args.push_back(parse_node(lex));
        if (lex.peek().kind == detail::Tok::comma) {
          lex.next();
          continue;
        }
        break;
      }
    }
    lex.expect(detail::Tok::rparen, "')'");
  }
  return fp;
}

bool has_selector(const FilterPattern& fp) {
  if (fp.kind != FilterPattern::Kind::blank) return true;
  for (const auto& a : fp.args) {
    if (has_selector(a)) return true;
  }
  return false;
}

bool try_match(const FilterPattern& fp, const Term& t, const Position& at, PositionSet& relevant,
               PositionSet& kept) {
  switch (fp.kind) {
    case FilterPattern::Kind::blank:
      return true;
    case FilterPattern::Kind::relevant: {
      std::vector<Position> all;
      collect_positions(t, at, all);
      for (auto& p : all) {
        relevant.insert(p);
        kept.insert(std::move(p));
      }
      return true;
    }
    case FilterPattern::Kind::name:
      if (fp.args.size() != t.arity() || !fragment_matches(fp.fragment, t)) return false;
      {
        const std::size_t before = relevant.size();
        for (std::uint32_t i = 0; i < t.arity(); ++i) {
          if (!try_match(fp.args[i], t.arg(i), at.child(i + 1), relevant, kept)) return false;
        }
        // A matched name node with no relevant material below is itself relevant.
        if (relevant.size() == before) relevant.insert(at);
        kept.insert(at);
      }
      return true;
  }
  return false;
}

void scan(const FilterPattern& fp, const Term& t, const Position& at, PositionSet& relevant, PositionSet& kept) {
  PositionSet r;
  PositionSet k;
  if (try_match(fp, t, at, r, k)) {
    relevant.insert(r.begin(), r.end());
    kept.insert(k.begin(), k.end());
  }
  for (std::uint32_t i = 0; i < t.arity(); ++i) scan(fp, t.arg(i), at.child(i + 1), relevant, kept);
}

}  // namespace

std::string FilterPattern::str() const {
  std::string out;
  switch (kind) {
    case Kind::relevant:
      return "?";
    case Kind::blank:
      return "_";
    case Kind::name:
      out = fragment;
      break;
  }
  if (!args.empty()) {
    out += '(';
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (i) out += ',';
      out += args[i].str();
    }
    out += ')';
  }
  return out;
}

FilterPattern parse_filter(std::string_view text) {
  detail::TermLexer lex(text);
  FilterPattern fp = parse_node(lex);
  if (lex.peek().kind != detail::Tok::end) lex.fail("trailing input after filter pattern");
  if (!has_selector(fp)) throw Error("filter pattern '" + std::string(text) + "' selects nothing (only '_')");
  return fp;
}

bool fragment_matches(const std::string& fragment, const Term& node) {
  return !node.is_variable() && node.symbol().find(fragment) != std::string::npos;
}

PositionSet ancestor_closure(const PositionSet& positions) {
  PositionSet out;
  for (const auto& p : positions) {
    std::vector<std::uint32_t> path = p.path();
    for (;;) {
      if (!out.insert(Position(path)).second) break;
      if (path.empty()) break;
      path.pop_back();
    }
  }
  return out;
}

FilterResult filter_match(const FilterPattern& fp, const Term& subject) {
  PositionSet relevant;
  PositionSet kept;
  scan(fp, subject, Position{}, relevant, kept);
  FilterResult out;
  out.criterion = relevant;
  out.slice.original = subject;
  out.slice.kept = ancestor_closure(kept);
  return out;
}

// ---------------------------------------------------------------------------
// SlicedTerm

SlicedTerm SlicedTerm::full(const Term& t) {
  SlicedTerm s{t, {}};
  for (auto& p : positions(t)) s.kept.insert(std::move(p));
  return s;
}

namespace {
void holes_rec(const SlicedTerm& s, const Term& t, const Position& at, std::vector<Position>& out) {
  if (s.is_hole(at)) {
    out.push_back(at);
    return;
  }
  for (std::uint32_t i = 0; i < t.arity(); ++i) holes_rec(s, t.arg(i), at.child(i + 1), out);
}
}  // namespace

std::vector<Position> SlicedTerm::holes() const {
  std::vector<Position> out;
  holes_rec(*this, original, Position{}, out);
  return out;
}

std::size_t SlicedTerm::symbol_count() const { return kept.size() + holes().size(); }

namespace {
void render_rec(const Signature& sig, const SlicedTerm& s, const Term& t, const Position& at, std::string_view hole,
                bool compress, std::string& out) {
  if (s.is_hole(at)) {
    out += hole;
    return;
  }
  out += t.symbol();
  if (t.arity() == 0) return;
  const bool ac = !t.is_variable() && sig.op(t.op()).decl.is_ac();
  out += '(';
  bool first = true;
  bool previous_hole = false;
  for (std::uint32_t i = 0; i < t.arity(); ++i) {
    Position child = at.child(i + 1);
    bool h = s.is_hole(child);
    if (compress && ac && h && previous_hole) continue;
    if (!first) out += ',';
    first = false;
    render_rec(sig, s, t.arg(i), child, hole, compress, out);
    previous_hole = h;
  }
  out += ')';
}

Term pattern_rec(const Signature& sig, const SlicedTerm& s, const Term& t, const Position& at,
                 const std::string& prefix, bool merge, std::size_t& counter) {
  if (s.is_hole(at)) return Term::variable(sig, prefix + std::to_string(counter++), t.sort());
  if (t.arity() == 0) return t;
  const bool ac = sig.op(t.op()).decl.is_ac();
  std::vector<Term> args;
  bool merged = false;
  for (std::uint32_t i = 0; i < t.arity(); ++i) {
    Position child = at.child(i + 1);
    if (ac && merge && s.is_hole(child)) {
      if (!merged) args.push_back(Term::variable(sig, prefix + std::to_string(counter++), t.sort()));
      merged = true;
      continue;
    }
    args.push_back(pattern_rec(sig, s, t.arg(i), child, prefix, merge, counter));
  }
  if (ac && args.size() == 1) return args.front();
  return Term::make(sig, t.op(), std::move(args));
}
}  // namespace

std::string SlicedTerm::render(const Signature& sig, std::string_view hole, bool compress) const {
  std::string out;
  render_rec(sig, *this, original, Position{}, hole, compress, out);
  return out;
}

Term SlicedTerm::to_pattern(const Signature& sig, const std::string& prefix, bool merge_ac_holes) const {
  std::size_t counter = 0;
  return flatten(sig, pattern_rec(sig, *this, original, Position{}, prefix, merge_ac_holes, counter));
}

}  // namespace webtlr
