// Acceptance run: one pass/fail line per criterion 1-9.
// Usage: acceptance [criterion numbers...]; exits 1 when any criterion fails.
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "ac_oracle.hpp"
#include "forum.hpp"
#include "ltl_oracle.hpp"
#include "small_sig.hpp"
#include "webtlr/canonical.hpp"
#include "webtlr/filter.hpp"
#include "webtlr/ltl.hpp"
#include "webtlr/slicer.hpp"

using namespace webtlr;
using namespace webtlr::testing;

namespace {

// Pinned limits.
constexpr double kRefutationSeconds = 60.0;
constexpr double kFixSeconds = 120.0;
constexpr double kMinReduction = 0.85;
constexpr std::size_t kWindow = 7;
constexpr std::size_t kReplaySamples = 100;
constexpr std::size_t kMatchCases = 500;
constexpr std::size_t kEqualityCases = 500;
constexpr std::size_t kMaxFlatArgs = 5;
constexpr int kMaxTemporalOps = 3;
constexpr std::size_t kMaxLasso = 6;

const char* kProperty = "[] ~ (curPage(bidAlfred, Admin) /\\ curPage(bidAnna, Admin))";
const char* kPattern = "B(?,_,?,_,_,_,_,_,_)";

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

const ltl::Verdict& buggy_verdict() {
  static ltl::Verdict v = [] {
    const auto& m = corpus("forum-buggy.nav");
    return ltl::check_webapp(m, ltl::parse_property(m, kProperty));
  }();
  return v;
}

SlicedTrace pattern_slice(const web::WebModel& m, const Trace& t) {
  auto crit = criterion_from_pattern(t, t.states.size() - 1, parse_filter(kPattern));
  return slice_trace(m.theory, t, crit);
}

Outcome refutation() {
  auto t0 = std::chrono::steady_clock::now();
  const auto& v = buggy_verdict();
  double secs = seconds_since(t0);
  Outcome o;
  if (v.status != ltl::Status::refuted) {
    o.detail = std::string("verdict ") + ltl::status_name(v.status);
    return o;
  }
  const Term& last = v.trace.states.back();
  bool both = web::cur_page(last, "bidAlfred", "Admin") && web::cur_page(last, "bidAnna", "Admin");
  o.pass = both && secs < kRefutationSeconds;
  o.detail = "refuted, " + std::to_string(v.trace.states.size()) + " trace states, final state " +
             (both ? "has" : "lacks") + " both browsers on Admin, " + fixed(secs, 1) + " s (limit " +
             fixed(kRefutationSeconds, 0) + " s)";
  return o;
}

Outcome fix_verification() {
  const auto& m = corpus("forum-fixed.nav");
  auto t0 = std::chrono::steady_clock::now();
  auto v = ltl::check_webapp(m, ltl::parse_property(m, kProperty));
  double secs = seconds_since(t0);
  Outcome o;
  o.pass = v.status == ltl::Status::fulfilled && v.exhausted.empty() && v.trace.states.empty() &&
           secs < kFixSeconds;
  o.detail = std::string(ltl::status_name(v.status)) + ", " + std::to_string(v.stats.states) + " states, " +
             std::to_string(v.stats.product_states) + " product states exhausted, " + fixed(secs, 1) +
             " s (limit " + fixed(kFixSeconds, 0) + " s)";
  return o;
}

Outcome filter_example() {
  auto sig = topic_signature();
  auto t = p(sig, topic_term_text());
  auto r = filter_match(parse_filter("topic(astro, #posts(?))"), t);
  PositionSet expected;
  for (const char* q : {"Λ.1.1", "Λ.1.2.1", "Λ.3.1", "Λ.3.2.1"}) expected.insert(Position::parse(q));
  std::string printed = r.slice.render(sig, "•");
  const std::string want = "topic_info(topic(astronomy,#posts(520)),•,topic(astrology,#posts(20)),•)";
  Outcome o;
  o.pass = r.criterion == expected && printed == want;
  std::string crit;
  for (const auto& q : r.criterion) crit += (crit.empty() ? "" : ", ") + q.str();
  o.detail = "criterion {" + crit + "}, slice " + printed;
  return o;
}

Outcome flat_unflat_example() {
  auto sig = small_signature();
  auto source = raw(sig, "f(b, f(f(b,a), c))");
  auto flat = flatten_tracked(sig, source);
  auto un = unflatten(sig, flat.canonical, raw(sig, "f(f(b,c),f(a,b))"));
  bool round_trip = un.record.rebuild_unflat(sig, flat.canonical) == un.term;
  for (const auto& q : positions(un.term)) {
    auto f = un.record.to_flat(q);
    if (!f) continue;
    if (subterm_at(flat.canonical, *f).symbol() != subterm_at(un.term, q).symbol()) round_trip = false;
    if (subterm_at(un.term, q).arity() == 0 && un.record.to_unflat(*f) != q) round_trip = false;
  }
  Outcome o;
  o.pass = flat.canonical.str() == "f(a,b,b,c)" && un.term.str() == "f(f(b,c),f(a,b))" && round_trip;
  o.detail = "flatten " + flat.canonical.str() + ", unflatten " + un.term.str() + ", positions " +
             (round_trip ? "round-trip" : "do not round-trip");
  return o;
}

Outcome reduction() {
  const auto& m = corpus("forum-buggy.nav");
  const auto& v = buggy_verdict();
  if (v.status != ltl::Status::refuted) return {false, "no counterexample"};
  auto sliced = pattern_slice(m, v.trace);
  auto bounds = group_boundaries(v.trace);
  std::size_t n = std::min(kWindow, bounds.size());
  auto w = sliced.window(std::vector<std::size_t>(bounds.end() - static_cast<std::ptrdiff_t>(n), bounds.end()));
  Outcome o;
  o.pass = n == kWindow && w.reduction() >= kMinReduction;
  o.detail = "final " + std::to_string(n) + " states |T| = " + std::to_string(w.original) +
             ", |T•| = " + std::to_string(w.sliced) + ", ratio " + fixed(w.ratio(), 3) + ", reduction " +
             fixed(100 * w.reduction(), 1) + "% (min " + fixed(100 * kMinReduction, 0) + "%)";
  return o;
}

Outcome slicing_soundness() {
  struct Case {
    const char* file;
    const char* property;
  };
  const Case cases[] = {{"forum-buggy.nav", kProperty},
                        {"webmail-back.nav", "[] (curPage(carol, Logout) -> [] ~ curPage(carol, Inbox))"},
                        {"checkout-refresh.nav", "[] ~ curPage(dave, Error)"}};
  Outcome o{true, ""};
  for (const auto& c : cases) {
    const auto& m = corpus(c.file);
    auto v = ltl::check_webapp(m, ltl::parse_property(m, c.property));
    if (v.status != ltl::Status::refuted) return {false, std::string(c.file) + " not refuted"};
    auto sliced = pattern_slice(m, v.trace);
    auto r = replay_check(m.theory, v.trace, sliced, kReplaySamples, 7);
    o.pass = o.pass && r.samples == kReplaySamples && r.ok();
    o.detail += std::string(c.file) + " " + std::to_string(r.agreed) + "/" + std::to_string(r.samples) + ", ";
  }
  // Mutation: drop the kept identifier of Alfred's browser in the initial state.
  const auto& m = corpus("forum-buggy.nav");
  const auto& v = buggy_verdict();
  auto broken = pattern_slice(m, v.trace);
  auto& first = broken.states[0];
  std::optional<Position> id;
  for (const auto& q : first.kept) {
    if (q.depth() == 3 && subterm_at(first.original, q).symbol() == "bidAlfred") id = q;
  }
  bool detected = false;
  if (id) {
    first.kept.erase(*id);
    detected = !replay_check(m.theory, v.trace, broken, kReplaySamples, 7).ok();
  }
  o.pass = o.pass && detected;
  o.detail += std::string("mutation ") + (detected ? "detected" : "not detected");
  return o;
}

Outcome script_semantics() {
  const auto& m = corpus("forum-buggy.nav");
  const Term& access = m.page("Access")->script;
  auto good = web::eval_script(access, {}, m.scenario.db, {{"user", "alfred"}, {"pass", "secretAlfred"}});
  bool six = true;
  for (const char* k : {"reg", "adm", "mod", "can-create", "can-write", "can-read"}) {
    auto it = good.session.find(k);
    six = six && it != good.session.end() && it->second == "yes";
  }
  auto bad = web::eval_script(access, {}, m.scenario.db, {{"user", "alfred"}, {"pass", "wrong"}});
  auto reg = bad.session.find("reg");
  bool denied = reg != bad.session.end() && reg->second == "no";
  Outcome o;
  o.pass = six && denied;
  o.detail = std::string("correct password: six keys ") + (six ? "yes" : "not all yes") + ", wrong password: reg=" +
             (reg == bad.session.end() ? "unset" : reg->second);
  return o;
}

Outcome matching_oracle() {
  auto sig = small_signature();
  std::mt19937 rng(13);
  std::size_t match_bad = 0;
  for (std::size_t i = 0; i < kMatchCases; ++i) {
    auto mc = random_match_case(sig, rng, kMaxFlatArgs);
    if (engine_match(sig, mc.pattern, mc.subject) != brute_match(sig, mc.op, mc.pargs, mc.subject)) ++match_bad;
  }
  std::mt19937 rng2(12);
  std::size_t eq_bad = 0;
  for (std::size_t i = 0; i < kEqualityCases; ++i) {
    int leaves = 0;
    Term a = random_raw(sig, rng2, 4, leaves, 6);
    Term b;
    if (i % 2) {
      b = shuffle_ac(sig, a, rng2);
    } else {
      leaves = 0;
      b = random_raw(sig, rng2, 4, leaves, 6);
    }
    if (ac_equal(sig, a, b) != brute_ac_equal(sig, a, b)) ++eq_bad;
  }
  Outcome o;
  o.pass = match_bad == 0 && eq_bad == 0;
  o.detail = "match_modulo " + std::to_string(kMatchCases - match_bad) + "/" + std::to_string(kMatchCases) +
             ", canonical equality " + std::to_string(kEqualityCases - eq_bad) + "/" + std::to_string(kEqualityCases);
  return o;
}

Outcome ltl_oracle() {
  const std::map<std::string, int> bits{{"p", 0}, {"q", 1}};
  auto table = enumerate_formulas(kMaxTemporalOps);
  auto lassos = all_lassos(kMaxLasso, 4);
  std::size_t bad_formulas = 0;
  std::string first_bad;
  for (const auto& f : table.formulas) {
    auto a = ltl::to_buchi(f);
    ltl::LassoAcceptor acc(a);
    bool bad = false;
    for (const auto& l : lassos) {
      std::vector<Letter> stem, cycle;
      for (Letter x : l.stem) stem.push_back(to_automaton_letter(x, a));
      for (Letter x : l.cycle) cycle.push_back(to_automaton_letter(x, a));
      if (acc.accepts(stem, cycle) != LassoEvaluator(l).holds(f, bits)) {
        bad = true;
        break;
      }
    }
    if (bad && first_bad.empty()) first_bad = f.str();
    bad_formulas += bad;
  }
  Outcome o;
  o.pass = bad_formulas == 0;
  o.detail = std::to_string(table.formulas.size()) + " formulas x " + std::to_string(lassos.size()) +
             " lassos, " + std::to_string(bad_formulas) + " disagreeing formulas" +
             (first_bad.empty() ? "" : " (first: " + first_bad + ")");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"refutation reproduction", refutation},
      {"fix verification", fix_verification},
      {"filter example", filter_example},
      {"flat/unflat example", flat_unflat_example},
      {"reduction figure", reduction},
      {"empirical slicing soundness", slicing_soundness},
      {"script semantics", script_semantics},
      {"matching oracle", matching_oracle},
      {"LTL translation oracle", ltl_oracle},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (int i = 0; i < 9; ++i) {
    if (!only.empty() && !only.count(i + 1)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << (i + 1) << " (" << criteria[i].first
              << "): " << o.detail << std::endl;
  }
  return failed ? 1 : 0;
}
