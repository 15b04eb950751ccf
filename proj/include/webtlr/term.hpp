// Sorted terms over a user-declared signature.
//
// Terms are immutable and hash-consed: two terms are structurally equal iff
// they share the same node, so operator== is a pointer comparison.  AC
// operators (assoc + comm, optionally with an identity) are stored in
// canonical form as a single variadic node whose arguments are sorted by
// their rendered text; see canonical.hpp.
#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace webtlr {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error(what + " at " + std::to_string(line) + ":" + std::to_string(column)),
        line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

class SortError : public Error {
 public:
  using Error::Error;
};

class PositionError : public Error {
 public:
  using Error::Error;
};

using SortId = int;
using OpId = int;

struct OperatorDecl {
  std::string name;
  std::vector<std::string> arg_sorts;
  std::string result_sort;
  bool assoc = false;
  bool comm = false;
  bool ctor = false;
  std::string identity;  // empty when the operator has no identity element

  bool is_ac() const { return assoc && comm; }
};

class Signature {
 public:
  struct OpInfo {
    OperatorDecl decl;
    std::vector<SortId> args;
    SortId result = -1;
    OpId identity = -1;
    bool literal = false;  // member of a literal family (any token is a constant)
  };

  Signature();

  SortId add_sort(const std::string& name, bool literal = false);
  OpId add_op(OperatorDecl decl);
  // Checks cross-references that can only be resolved once every operator is
  // declared (identity constants).  Throws SortError.
  void validate();

  std::optional<SortId> find_sort(std::string_view name) const;
  SortId sort(std::string_view name) const;
  const std::string& sort_name(SortId s) const { return sorts_.at(s).name; }
  bool is_literal_sort(SortId s) const { return sorts_.at(s).literal; }
  std::size_t sort_count() const { return sorts_.size(); }

  std::optional<OpId> find_op(std::string_view name) const;
  OpId op_id(std::string_view name) const;
  const OpInfo& op(OpId id) const { return ops_.at(id); }
  std::size_t op_count() const { return ops_.size(); }
  OpId literal_op(SortId s) const { return sorts_.at(s).literal_op; }

  std::uint64_t uid() const { return uid_; }

 private:
  struct SortInfo {
    std::string name;
    bool literal = false;
    OpId literal_op = -1;
  };
  std::vector<SortInfo> sorts_;
  std::vector<OpInfo> ops_;
  std::map<std::string, SortId, std::less<>> sort_index_;
  std::map<std::string, OpId, std::less<>> op_index_;
  std::uint64_t uid_;
};

namespace detail {
struct Node;
}

class Term {
 public:
  Term() = default;

  static Term variable(const Signature& sig, std::string name, SortId sort);
  static Term literal(const Signature& sig, SortId sort, std::string token);
  static Term constant(const Signature& sig, std::string_view name);
  // Builds op(args) after checking arity and argument sorts.  No
  // normalization is applied; use flatten() for the canonical form.
  static Term make(const Signature& sig, OpId op, std::vector<Term> args);
  static Term make(const Signature& sig, std::string_view op, std::vector<Term> args);

  bool is_variable() const;
  bool is_ground() const;
  bool is_canonical() const;
  OpId op() const;  // -1 for variables
  const std::string& symbol() const;
  SortId sort() const;
  std::span<const Term> args() const;
  std::size_t arity() const { return args().size(); }
  const Term& arg(std::size_t i) const { return args()[i]; }  // 0-based
  std::size_t size() const;  // number of symbol occurrences
  std::size_t hash() const;
  std::uint64_t sig_uid() const;
  const std::string& str() const;  // rendered text, cached

  explicit operator bool() const { return node_ != nullptr; }
  bool operator==(const Term& o) const { return node_ == o.node_; }
  const void* identity() const { return node_.get(); }

 private:
  explicit Term(std::shared_ptr<const detail::Node> n) : node_(std::move(n)) {}
  static Term intern(detail::Node&& n);
  std::shared_ptr<const detail::Node> node_;
};

struct TermHash {
  std::size_t operator()(const Term& t) const { return t.hash(); }
};

// Fixed total order used for AC argument sorting: lexicographic on the
// rendered text.
bool term_less(const Term& a, const Term& b);

class Position {
 public:
  Position() = default;
  explicit Position(std::vector<std::uint32_t> path) : path_(std::move(path)) {}
  Position(std::initializer_list<std::uint32_t> path) : path_(path) {}

  static Position parse(std::string_view text);

  bool is_root() const { return path_.empty(); }
  std::size_t depth() const { return path_.size(); }
  const std::vector<std::uint32_t>& path() const { return path_; }
  std::uint32_t operator[](std::size_t i) const { return path_[i]; }

  Position child(std::uint32_t index) const;
  Position parent() const;
  Position concat(const Position& suffix) const;
  bool is_prefix_of(const Position& other) const;
  // Requires is_prefix_of(other); returns the remaining path.
  Position suffix_after(const Position& prefix) const;

  std::string str() const;  // "Λ.1.2" or "Λ"
  std::string machine_str() const;  // "1.2" or ""

  auto operator<=>(const Position&) const = default;
  bool operator==(const Position&) const = default;

 private:
  std::vector<std::uint32_t> path_;
};

using Substitution = std::map<std::string, Term>;

bool valid_position(const Term& t, const Position& p);
Term subterm_at(const Term& t, const Position& p);
// All positions of t in preorder.
std::vector<Position> positions(const Term& t);
void collect_positions(const Term& t, const Position& at, std::vector<Position>& out);
// Replacement without re-canonicalization.
Term replace_at_raw(const Signature& sig, const Term& t, const Position& p, const Term& s);
// Replacement followed by flatten.
Term replace_at(const Signature& sig, const Term& t, const Position& p, const Term& s);

// Instantiates the variables of t; unbound variables are kept.  No
// normalization is applied.
Term substitute(const Signature& sig, const Term& t, const Substitution& sub);
void collect_variables(const Term& t, std::vector<std::string>& out);
// Positions of every occurrence of the named variable.
std::vector<Position> variable_occurrences(const Term& t, const std::string& var);

std::string render(const Substitution& s);

struct ParseOptions {
  std::map<std::string, SortId, std::less<>> variables;
  bool canonicalize = true;
  std::optional<SortId> expected_sort;
};

Term parse_term(std::string_view text, const Signature& sig, const ParseOptions& options = {});

}  // namespace webtlr
