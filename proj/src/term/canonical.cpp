#include "webtlr/canonical.hpp"

#include <algorithm>
#include <map>

namespace webtlr {

namespace {

// Untracked flattening.

void gather_ac(const Signature& sig, OpId f, OpId identity, const Term& t, std::vector<Term>& items);

Term flatten_rec(const Signature& sig, const Term& t) {
  if (t.is_canonical()) return t;
  const auto& info = sig.op(t.op());
  if (info.decl.is_ac()) {
    std::vector<Term> items;
    for (const auto& a : t.args()) gather_ac(sig, t.op(), info.identity, a, items);
    std::stable_sort(items.begin(), items.end(), term_less);
    if (items.empty()) return Term::make(sig, info.identity, {});
    if (items.size() == 1) return items.front();
    return Term::make(sig, t.op(), std::move(items));
  }
  std::vector<Term> args;
  args.reserve(t.arity());
  for (const auto& a : t.args()) args.push_back(flatten_rec(sig, a));
  if (info.decl.comm && term_less(args[1], args[0])) std::swap(args[0], args[1]);
  return Term::make(sig, t.op(), std::move(args));
}

void gather_ac(const Signature& sig, OpId f, OpId identity, const Term& t, std::vector<Term>& items) {
  if (t.op() == f) {
    for (const auto& a : t.args()) gather_ac(sig, f, identity, a, items);
    return;
  }
  if (identity >= 0 && t.op() == identity) return;
  Term c = flatten_rec(sig, t);
  if (c.op() == f) {
    for (const auto& a : c.args()) items.push_back(a);
  } else if (!(identity >= 0 && c.op() == identity)) {
    items.push_back(c);
  }
}

// Tracked flattening.

enum class Tag { copy, normal, internal, collapsed, identity };

struct Mapping {
  Position flat;
  Tag tag;
};

using MapTable = std::map<Position, Mapping>;

struct Item {
  Term term;
  // Mappings of the item's own unflat nodes, flat positions relative to the
  // item root.
  std::vector<std::pair<Position, Mapping>> maps;
};

Item canon(const Signature& sig, const Term& u, const Position& r);

void gather_tracked(const Signature& sig, OpId f, OpId identity, const Term& u, const Position& r,
                    std::vector<Item>& items, std::vector<std::pair<Position, Mapping>>& own) {
  if (u.op() == f) {
    own.push_back({r, {Position{}, Tag::internal}});
    for (std::uint32_t k = 0; k < u.arity(); ++k) {
      gather_tracked(sig, f, identity, u.arg(k), r.child(k + 1), items, own);
    }
    return;
  }
  if (identity >= 0 && u.op() == identity) {
    own.push_back({r, {Position{}, Tag::identity}});
    return;
  }
  Item it = canon(sig, u, r);
  if (it.term.op() == f) {
    // A collapsed descendant produced an f-node: splice its arguments.
    std::vector<Item> split(it.term.arity());
    for (std::uint32_t j = 0; j < it.term.arity(); ++j) split[j].term = it.term.arg(j);
    for (auto& [pos, m] : it.maps) {
      if (m.flat.is_root() && m.tag == Tag::identity) {
        own.push_back({pos, m});
      } else if (m.flat.is_root() && m.tag == Tag::copy) {
        own.push_back({pos, {Position{}, Tag::internal}});
        for (std::uint32_t j = 0; j < it.term.arity(); ++j) {
          split[j].maps.push_back({pos.child(j + 1), {Position{}, Tag::copy}});
        }
      } else if (m.flat.is_root()) {
        own.push_back({pos, {Position{}, Tag::internal}});
      } else {
        auto j = m.flat[0] - 1;
        split[j].maps.push_back({pos, {m.flat.suffix_after(Position{m.flat[0]}), m.tag}});
      }
    }
    for (auto& s : split) items.push_back(std::move(s));
  } else if (identity >= 0 && it.term.op() == identity) {
    for (auto& [pos, m] : it.maps) own.push_back({pos, {Position{}, Tag::identity}});
  } else {
    items.push_back(std::move(it));
  }
}

Item canon(const Signature& sig, const Term& u, const Position& r) {
  Item out;
  if (u.is_canonical()) {
    out.term = u;
    out.maps.push_back({r, {Position{}, Tag::copy}});
    return out;
  }
  const auto& info = sig.op(u.op());
  if (info.decl.is_ac()) {
    std::vector<Item> items;
    std::vector<std::pair<Position, Mapping>> own;
    for (std::uint32_t k = 0; k < u.arity(); ++k) {
      gather_tracked(sig, u.op(), info.identity, u.arg(k), r.child(k + 1), items, own);
    }
    std::stable_sort(items.begin(), items.end(),
                     [](const Item& a, const Item& b) { return term_less(a.term, b.term); });
    if (items.size() >= 2) {
      std::vector<Term> args;
      for (const auto& it : items) args.push_back(it.term);
      out.term = Term::make(sig, u.op(), std::move(args));
      out.maps.push_back({r, {Position{}, Tag::normal}});
      for (auto& o : own) out.maps.push_back(std::move(o));
      for (std::uint32_t k = 0; k < items.size(); ++k) {
        for (auto& [pos, m] : items[k].maps) {
          out.maps.push_back({pos, {Position{k + 1}.concat(m.flat), m.tag}});
        }
      }
      return out;
    }
    out.term = items.empty() ? Term::make(sig, info.identity, {}) : items.front().term;
    out.maps.push_back({r, {Position{}, Tag::collapsed}});
    for (auto& o : own) out.maps.push_back(std::move(o));
    if (!items.empty()) {
      for (auto& m : items.front().maps) out.maps.push_back(std::move(m));
    }
    return out;
  }
  std::vector<Item> kids;
  for (std::uint32_t k = 0; k < u.arity(); ++k) kids.push_back(canon(sig, u.arg(k), r.child(k + 1)));
  std::vector<std::uint32_t> order(kids.size());
  for (std::uint32_t k = 0; k < order.size(); ++k) order[k] = k;
  if (info.decl.comm && term_less(kids[1].term, kids[0].term)) std::swap(order[0], order[1]);
  std::vector<Term> args;
  for (auto k : order) args.push_back(kids[k].term);
  out.term = Term::make(sig, u.op(), std::move(args));
  out.maps.push_back({r, {Position{}, Tag::normal}});
  for (std::uint32_t slot = 0; slot < order.size(); ++slot) {
    for (auto& [pos, m] : kids[order[slot]].maps) {
      out.maps.push_back({pos, {Position{slot + 1}.concat(m.flat), m.tag}});
    }
  }
  return out;
}

bool emit(const Term& u, const Position& r, const Position& expected, const MapTable& maps,
          std::vector<PermutationEntry>& out) {
  const auto& m = maps.at(r);
  switch (m.tag) {
    case Tag::copy:
      out.push_back({PermutationEntry::Kind::copy, r, m.flat, "", 0});
      return m.flat == expected;
    case Tag::identity:
      if (u.arity() == 0) {
        out.push_back({PermutationEntry::Kind::identity, r, std::nullopt, u.symbol(), 0});
        return false;
      }
      out.push_back({PermutationEntry::Kind::node, r, std::nullopt, u.symbol(), static_cast<std::uint32_t>(u.arity())});
      for (std::uint32_t k = 0; k < u.arity(); ++k) emit(u.arg(k), r.child(k + 1), Position{}, maps, out);
      return false;
    case Tag::normal: {
      std::size_t mark = out.size();
      bool same = m.flat == expected;
      for (std::uint32_t k = 0; k < u.arity(); ++k) {
        same = emit(u.arg(k), r.child(k + 1), m.flat.child(k + 1), maps, out) && same;
      }
      if (same) {
        out.resize(mark);
        out.push_back({PermutationEntry::Kind::copy, r, m.flat, "", 0});
        return true;
      }
      out.push_back({PermutationEntry::Kind::node, r, m.flat, u.symbol(), static_cast<std::uint32_t>(u.arity())});
      return false;
    }
    case Tag::internal:
    case Tag::collapsed:
      out.push_back({PermutationEntry::Kind::node, r, m.flat, u.symbol(), static_cast<std::uint32_t>(u.arity())});
      for (std::uint32_t k = 0; k < u.arity(); ++k) emit(u.arg(k), r.child(k + 1), m.flat.child(k + 1), maps, out);
      return false;
  }
  return false;
}

}  // namespace

Term flatten(const Signature& sig, const Term& t) { return flatten_rec(sig, t); }

TrackedFlatten flatten_tracked(const Signature& sig, const Term& t) {
  Item root = canon(sig, t, Position{});
  MapTable table;
  for (auto& [pos, m] : root.maps) table.emplace(pos, m);
  TrackedFlatten out;
  out.canonical = root.term;
  emit(t, Position{}, Position{}, table, out.record.entries);
  std::sort(out.record.entries.begin(), out.record.entries.end(),
            [](const auto& a, const auto& b) { return a.unflat < b.unflat; });
  return out;
}

std::optional<Position> PermutationRecord::to_flat(const Position& unflat) const {
  // Deepest entry whose unflat position is a prefix of `unflat`.
  const PermutationEntry* best = nullptr;
  for (const auto& e : entries) {
    if (e.unflat.is_prefix_of(unflat) && (!best || e.unflat.depth() > best->unflat.depth())) best = &e;
  }
  if (!best) return std::nullopt;
  switch (best->kind) {
    case PermutationEntry::Kind::copy:
      return best->flat->concat(unflat.suffix_after(best->unflat));
    case PermutationEntry::Kind::node:
      if (best->unflat == unflat) return best->flat;
      return std::nullopt;
    case PermutationEntry::Kind::identity:
      return std::nullopt;
  }
  return std::nullopt;
}

std::optional<Position> PermutationRecord::to_unflat(const Position& flat) const {
  for (std::size_t len = flat.depth() + 1; len-- > 0;) {
    Position prefix(std::vector<std::uint32_t>(flat.path().begin(), flat.path().begin() + static_cast<long>(len)));
    const PermutationEntry* node = nullptr;
    for (const auto& e : entries) {
      if (!e.flat || !(*e.flat == prefix)) continue;
      if (e.kind == PermutationEntry::Kind::copy) return e.unflat.concat(flat.suffix_after(prefix));
      if (e.kind == PermutationEntry::Kind::node && (!node || e.unflat.depth() < node->unflat.depth())) node = &e;
    }
    if (node && len == flat.depth()) return node->unflat;
  }
  return std::nullopt;
}

Term PermutationRecord::rebuild_unflat(const Signature& sig, const Term& flat) const {
  std::map<Position, const PermutationEntry*> index;
  for (const auto& e : entries) index.emplace(e.unflat, &e);
  auto build = [&](auto&& self, const Position& r) -> Term {
    auto it = index.find(r);
    if (it == index.end()) throw Error("permutation record does not cover " + r.str());
    const auto& e = *it->second;
    switch (e.kind) {
      case PermutationEntry::Kind::copy:
        return subterm_at(flat, *e.flat);
      case PermutationEntry::Kind::identity:
        return Term::constant(sig, e.op);
      case PermutationEntry::Kind::node: {
        std::vector<Term> args;
        for (std::uint32_t k = 0; k < e.arity; ++k) args.push_back(self(self, r.child(k + 1)));
        return Term::make(sig, e.op, std::move(args));
      }
    }
    throw Error("unreachable");
  };
  return build(build, Position{});
}

bool PermutationRecord::is_identity() const {
  return entries.size() == 1 && entries[0].kind == PermutationEntry::Kind::copy && entries[0].unflat.is_root() &&
         entries[0].flat->is_root();
}

Unflattened unflatten(const Signature& sig, const Term& t, const std::optional<Term>& shape) {
  Term target;
  if (shape) {
    if (!(flatten(sig, *shape) == flatten(sig, t))) {
      throw Error("unflatten: shape " + shape->str() + " is not AC-equal to " + t.str());
    }
    target = *shape;
  } else if (t.arity() > 2 && t.op() >= 0 && sig.op(t.op()).decl.is_ac()) {
    Term acc = Term::make(sig, t.op(), {t.arg(0), t.arg(1)});
    for (std::size_t i = 2; i < t.arity(); ++i) acc = Term::make(sig, t.op(), {acc, t.arg(i)});
    target = acc;
  } else {
    target = t;
  }
  auto tracked = flatten_tracked(sig, target);
  return {target, std::move(tracked.record)};
}

bool ac_equal(const Signature& sig, const Term& a, const Term& b) { return flatten(sig, a) == flatten(sig, b); }

}  // namespace webtlr
