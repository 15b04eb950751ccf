#include "webtlr/term.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <mutex>
#include <unordered_set>

#include "webtlr/canonical.hpp"

namespace webtlr {

namespace detail {

struct Node {
  OpId op = -1;
  std::string symbol;
  SortId sort = -1;
  std::vector<Term> args;
  std::uint64_t sig = 0;
  std::size_t hash = 0;
  std::size_t size = 1;
  bool ground = true;
  bool canonical = true;
  mutable std::once_flag rendered_once;
  mutable std::string rendered;
};

namespace {

struct NodeHash {
  std::size_t operator()(const std::shared_ptr<const Node>& n) const { return n->hash; }
};

struct NodeEq {
  bool operator()(const std::shared_ptr<const Node>& a, const std::shared_ptr<const Node>& b) const {
    return a->hash == b->hash && a->op == b->op && a->sort == b->sort && a->sig == b->sig &&
           a->symbol == b->symbol && a->args == b->args;
  }
};

struct InternTable {
  std::mutex mutex;
  std::unordered_set<std::shared_ptr<const Node>, NodeHash, NodeEq> nodes;
};

InternTable& table() {
  static InternTable* t = new InternTable();
  return *t;
}

std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

}  // namespace
}  // namespace detail

// ---------------------------------------------------------------------------
// Signature

namespace {
std::atomic<std::uint64_t> next_signature_uid{1};
}

Signature::Signature() : uid_(next_signature_uid++) {}

SortId Signature::add_sort(const std::string& name, bool literal) {
  if (auto it = sort_index_.find(name); it != sort_index_.end()) {
    if (sorts_[it->second].literal != literal) {
      throw SortError("sort '" + name + "' redeclared with a different literal flag");
    }
    return it->second;
  }
  SortId id = static_cast<SortId>(sorts_.size());
  sorts_.push_back({name, literal, -1});
  sort_index_.emplace(name, id);
  if (literal) {
    OpInfo info;
    info.decl.name = "<" + name + ">";
    info.decl.result_sort = name;
    info.decl.ctor = true;
    info.result = id;
    info.literal = true;
    sorts_[id].literal_op = static_cast<OpId>(ops_.size());
    ops_.push_back(std::move(info));
  }
  return id;
}

OpId Signature::add_op(OperatorDecl decl) {
  if (decl.name.empty()) throw SortError("operator with empty name");
  if (op_index_.count(decl.name)) throw SortError("operator '" + decl.name + "' declared twice");
  if (decl.assoc && !decl.comm) {
    throw SortError("operator '" + decl.name + "': assoc without comm is not supported");
  }
  if (!decl.identity.empty() && !decl.assoc) {
    throw SortError("operator '" + decl.name + "': identity requires assoc");
  }
  OpInfo info;
  info.result = sort(decl.result_sort);
  for (const auto& s : decl.arg_sorts) info.args.push_back(sort(s));
  if (decl.assoc && (info.args.size() != 2 || info.args[0] != info.result || info.args[1] != info.result)) {
    throw SortError("operator '" + decl.name + "': assoc requires a binary operator over its result sort");
  }
  if (decl.comm && (info.args.size() != 2 || info.args[0] != info.args[1])) {
    throw SortError("operator '" + decl.name + "': comm requires a binary operator with equal argument sorts");
  }
  info.decl = std::move(decl);
  OpId id = static_cast<OpId>(ops_.size());
  op_index_.emplace(info.decl.name, id);
  ops_.push_back(std::move(info));
  return id;
}

void Signature::validate() {
  for (auto& info : ops_) {
    if (info.decl.identity.empty()) continue;
    auto id = find_op(info.decl.identity);
    if (!id) throw SortError("identity '" + info.decl.identity + "' of '" + info.decl.name + "' is not declared");
    const auto& e = ops_[*id];
    if (!e.args.empty() || e.result != info.result) {
      throw SortError("identity '" + info.decl.identity + "' of '" + info.decl.name +
                      "' must be a constant of sort " + sort_name(info.result));
    }
    info.identity = *id;
  }
}

std::optional<SortId> Signature::find_sort(std::string_view name) const {
  auto it = sort_index_.find(name);
  if (it == sort_index_.end()) return std::nullopt;
  return it->second;
}

SortId Signature::sort(std::string_view name) const {
  auto s = find_sort(name);
  if (!s) throw SortError("unknown sort '" + std::string(name) + "'");
  return *s;
}

std::optional<OpId> Signature::find_op(std::string_view name) const {
  auto it = op_index_.find(name);
  if (it == op_index_.end()) return std::nullopt;
  return it->second;
}

OpId Signature::op_id(std::string_view name) const {
  auto id = find_op(name);
  if (!id) throw SortError("unknown operator '" + std::string(name) + "'");
  return *id;
}

// ---------------------------------------------------------------------------
// Term

Term Term::intern(detail::Node&& n) {
  auto candidate = std::make_shared<detail::Node>();
  candidate->op = n.op;
  candidate->symbol = std::move(n.symbol);
  candidate->sort = n.sort;
  candidate->args = std::move(n.args);
  candidate->sig = n.sig;
  std::size_t h = std::hash<std::string>{}(candidate->symbol);
  h = detail::mix(h, static_cast<std::size_t>(candidate->op + 7));
  h = detail::mix(h, static_cast<std::size_t>(candidate->sort));
  h = detail::mix(h, static_cast<std::size_t>(candidate->sig));
  std::size_t size = 1;
  bool ground = candidate->op >= 0;
  for (const auto& a : candidate->args) {
    h = detail::mix(h, a.hash());
    size += a.size();
    ground = ground && a.is_ground();
  }
  candidate->hash = h;
  candidate->size = size;
  candidate->ground = ground;
  candidate->canonical = n.canonical;
  auto& tab = detail::table();
  std::lock_guard lock(tab.mutex);
  auto [it, inserted] = tab.nodes.insert(candidate);
  return Term(*it);
}

Term Term::variable(const Signature& sig, std::string name, SortId sort) {
  detail::Node n;
  n.op = -1;
  n.symbol = std::move(name);
  n.sort = sort;
  n.sig = sig.uid();
  return intern(std::move(n));
}

Term Term::literal(const Signature& sig, SortId sort, std::string token) {
  if (!sig.is_literal_sort(sort)) {
    throw SortError("sort " + sig.sort_name(sort) + " does not accept literal '" + token + "'");
  }
  detail::Node n;
  n.op = sig.literal_op(sort);
  n.symbol = std::move(token);
  n.sort = sort;
  n.sig = sig.uid();
  return intern(std::move(n));
}

Term Term::constant(const Signature& sig, std::string_view name) {
  return make(sig, sig.op_id(name), {});
}

Term Term::make(const Signature& sig, std::string_view op, std::vector<Term> args) {
  return make(sig, sig.op_id(op), std::move(args));
}

Term Term::make(const Signature& sig, OpId op, std::vector<Term> args) {
  const auto& info = sig.op(op);
  if (info.literal) throw SortError("literal family " + info.decl.name + " cannot be applied");
  const bool ac = info.decl.is_ac();
  if (ac) {
    if (args.size() < 2) {
      throw SortError("AC operator '" + info.decl.name + "' needs at least two arguments");
    }
  } else if (args.size() != info.args.size()) {
    throw SortError("operator '" + info.decl.name + "' expects " + std::to_string(info.args.size()) +
                    " arguments, got " + std::to_string(args.size()));
  }
  for (std::size_t i = 0; i < args.size(); ++i) {
    SortId want = ac ? info.result : info.args[i];
    if (!args[i]) throw SortError("null argument to '" + info.decl.name + "'");
    if (args[i].sort() != want) {
      throw SortError("operator '" + info.decl.name + "' argument " + std::to_string(i + 1) + " has sort " +
                      sig.sort_name(args[i].sort()) + ", expected " + sig.sort_name(want));
    }
  }
  bool canonical = true;
  for (const auto& a : args) canonical = canonical && a.is_canonical();
  if (canonical && ac) {
    for (std::size_t i = 0; i < args.size() && canonical; ++i) {
      if (args[i].op() == op || (info.identity >= 0 && args[i].op() == info.identity)) canonical = false;
      if (i > 0 && term_less(args[i], args[i - 1])) canonical = false;
    }
  } else if (canonical && info.decl.comm) {
    canonical = !term_less(args[1], args[0]);
  }
  detail::Node n;
  n.op = op;
  n.symbol = info.decl.name;
  n.sort = info.result;
  n.args = std::move(args);
  n.sig = sig.uid();
  n.canonical = canonical;
  return intern(std::move(n));
}

bool Term::is_variable() const { return node_->op < 0; }
bool Term::is_ground() const { return node_->ground; }
bool Term::is_canonical() const { return node_->canonical; }
OpId Term::op() const { return node_->op; }
const std::string& Term::symbol() const { return node_->symbol; }
SortId Term::sort() const { return node_->sort; }
std::span<const Term> Term::args() const { return node_->args; }
std::size_t Term::size() const { return node_->size; }
std::size_t Term::hash() const { return node_->hash; }
std::uint64_t Term::sig_uid() const { return node_->sig; }

const std::string& Term::str() const {
  const auto* n = node_.get();
  std::call_once(n->rendered_once, [n] {
    std::string out = n->symbol;
    if (!n->args.empty()) {
      out += '(';
      for (std::size_t i = 0; i < n->args.size(); ++i) {
        if (i) out += ',';
        out += n->args[i].str();
      }
      out += ')';
    }
    n->rendered = std::move(out);
  });
  return n->rendered;
}

bool term_less(const Term& a, const Term& b) {
  if (a == b) return false;
  return a.str() < b.str();
}

// ---------------------------------------------------------------------------
// Position

namespace {
constexpr std::string_view kLambda = "\xCE\x9B";
}

Position Position::parse(std::string_view text) {
  std::string_view s = text;
  while (!s.empty() && (s.front() == ' ')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ')) s.remove_suffix(1);
  if (s.starts_with(kLambda)) {
    s.remove_prefix(kLambda.size());
  } else if (s.starts_with("L")) {
    s.remove_prefix(1);
  }
  if (s.starts_with(".")) s.remove_prefix(1);
  std::vector<std::uint32_t> path;
  if (s.empty()) return Position(path);
  std::size_t i = 0;
  while (i <= s.size()) {
    std::size_t j = s.find('.', i);
    if (j == std::string_view::npos) j = s.size();
    auto part = s.substr(i, j - i);
    if (part.empty()) throw PositionError("malformed position '" + std::string(text) + "'");
    std::uint32_t v = 0;
    for (char c : part) {
      if (c < '0' || c > '9') throw PositionError("malformed position '" + std::string(text) + "'");
      v = v * 10 + static_cast<std::uint32_t>(c - '0');
    }
    if (v == 0) throw PositionError("positions are 1-based: '" + std::string(text) + "'");
    path.push_back(v);
    i = j + 1;
  }
  return Position(path);
}

Position Position::child(std::uint32_t index) const {
  auto p = path_;
  p.push_back(index);
  return Position(std::move(p));
}

Position Position::parent() const {
  if (path_.empty()) throw PositionError("root has no parent");
  auto p = path_;
  p.pop_back();
  return Position(std::move(p));
}

Position Position::concat(const Position& suffix) const {
  auto p = path_;
  p.insert(p.end(), suffix.path_.begin(), suffix.path_.end());
  return Position(std::move(p));
}

bool Position::is_prefix_of(const Position& other) const {
  if (path_.size() > other.path_.size()) return false;
  return std::equal(path_.begin(), path_.end(), other.path_.begin());
}

Position Position::suffix_after(const Position& prefix) const {
  return Position(std::vector<std::uint32_t>(path_.begin() + static_cast<long>(prefix.depth()), path_.end()));
}

std::string Position::str() const {
  std::string out(kLambda);
  for (auto v : path_) out += "." + std::to_string(v);
  return out;
}

std::string Position::machine_str() const {
  std::string out;
  for (std::size_t i = 0; i < path_.size(); ++i) {
    if (i) out += '.';
    out += std::to_string(path_[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Position-based access

bool valid_position(const Term& t, const Position& p) {
  const Term* cur = &t;
  for (auto idx : p.path()) {
    if (idx == 0 || idx > cur->arity()) return false;
    cur = &cur->arg(idx - 1);
  }
  return true;
}

Term subterm_at(const Term& t, const Position& p) {
  const Term* cur = &t;
  for (auto idx : p.path()) {
    if (idx == 0 || idx > cur->arity()) {
      throw PositionError("position " + p.str() + " is not valid in " + t.str());
    }
    cur = &cur->arg(idx - 1);
  }
  return *cur;
}

void collect_positions(const Term& t, const Position& at, std::vector<Position>& out) {
  out.push_back(at);
  for (std::uint32_t i = 0; i < t.arity(); ++i) collect_positions(t.arg(i), at.child(i + 1), out);
}

std::vector<Position> positions(const Term& t) {
  std::vector<Position> out;
  out.reserve(t.size());
  collect_positions(t, Position{}, out);
  return out;
}

namespace {
Term replace_rec(const Signature& sig, const Term& t, const std::vector<std::uint32_t>& path, std::size_t depth,
                 const Term& s) {
  if (depth == path.size()) return s;
  auto idx = path[depth];
  if (idx == 0 || idx > t.arity()) throw PositionError("invalid replacement position");
  std::vector<Term> args(t.args().begin(), t.args().end());
  args[idx - 1] = replace_rec(sig, args[idx - 1], path, depth + 1, s);
  return Term::make(sig, t.op(), std::move(args));
}
}  // namespace

Term replace_at_raw(const Signature& sig, const Term& t, const Position& p, const Term& s) {
  if (!valid_position(t, p)) throw PositionError("position " + p.str() + " is not valid in " + t.str());
  if (p.is_root()) return s;
  Term old = subterm_at(t, p);
  if (old.sort() != s.sort()) {
    throw SortError("replacement of sort " + sig.sort_name(s.sort()) + " at " + p.str() + " expects " +
                    sig.sort_name(old.sort()));
  }
  return replace_rec(sig, t, p.path(), 0, s);
}

Term replace_at(const Signature& sig, const Term& t, const Position& p, const Term& s) {
  return flatten(sig, replace_at_raw(sig, t, p, s));
}

Term substitute(const Signature& sig, const Term& t, const Substitution& sub) {
  if (t.is_variable()) {
    auto it = sub.find(t.symbol());
    return it == sub.end() ? t : it->second;
  }
  if (t.is_ground() || t.arity() == 0) return t;
  std::vector<Term> args;
  args.reserve(t.arity());
  bool changed = false;
  for (const auto& a : t.args()) {
    args.push_back(substitute(sig, a, sub));
    changed = changed || !(args.back() == a);
  }
  return changed ? Term::make(sig, t.op(), std::move(args)) : t;
}

void collect_variables(const Term& t, std::vector<std::string>& out) {
  if (t.is_variable()) {
    if (std::find(out.begin(), out.end(), t.symbol()) == out.end()) out.push_back(t.symbol());
    return;
  }
  if (t.is_ground()) return;
  for (const auto& a : t.args()) collect_variables(a, out);
}

namespace {
void occurrences_rec(const Term& t, const std::string& var, const Position& at, std::vector<Position>& out) {
  if (t.is_variable()) {
    if (t.symbol() == var) out.push_back(at);
    return;
  }
  if (t.is_ground()) return;
  for (std::uint32_t i = 0; i < t.arity(); ++i) occurrences_rec(t.arg(i), var, at.child(i + 1), out);
}
}  // namespace

std::vector<Position> variable_occurrences(const Term& t, const std::string& var) {
  std::vector<Position> out;
  occurrences_rec(t, var, Position{}, out);
  return out;
}

std::string render(const Substitution& s) {
  std::string out = "{";
  bool first = true;
  for (const auto& [k, v] : s) {
    if (!first) out += ", ";
    first = false;
    out += k + " |-> " + v.str();
  }
  return out + "}";
}

}  // namespace webtlr
