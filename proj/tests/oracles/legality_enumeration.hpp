#pragma once

// Exhaustive cross-check of the incremental legality session against batch
// validation. The walk enumerates every decoding-token sequence up to a
// length bound, pruning only prefixes that cannot finish a tree within the
// bound, so any complete sequence either side accepts is visited. Legal
// moves cut by the bound are checked for a legal completion instead.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rpg/error.hpp"
#include "rpg/legality.hpp"
#include "rpg/program.hpp"

namespace rpg::oracle {

struct EnumerationStats {
  std::uint64_t complete_sequences = 0;  // sequences ending in EOS
  std::uint64_t accepted = 0;            // accepted by both sides
  std::uint64_t discrepancies = 0;
  std::uint64_t states = 0;              // live session states visited
  std::uint64_t dead_ends = 0;           // live, open states with no move
  std::uint64_t failed_completions = 0;  // cut moves that cannot finish
  std::uint64_t frontier_checks = 0;
  std::vector<std::string> examples;     // first few discrepancies
};

namespace detail {

// Grammar-only shape of a prefix: open higher-order frames and how many
// positions the current atomic op still needs. Knows nothing about types.
struct Shape {
  int open = 0;
  int pending_pos = 0;
  bool root_started = false;
  bool root_done = false;
  bool finished = false;
  bool broken = false;
};

inline Shape step(Shape s, const DecodingToken& t) {
  using K = DecodingToken::Kind;
  if (s.broken || s.finished) {
    s.broken = true;
    return s;
  }
  auto node_done = [&]() {
    if (s.open == 0) s.root_done = true;
  };
  if (s.pending_pos > 0) {
    if (t.kind != K::Pos) {
      s.broken = true;
    } else if (--s.pending_pos == 0) {
      node_done();
    }
    return s;
  }
  if (s.root_done) {
    if (t.kind == K::Eos) s.finished = true;
    else s.broken = true;
    return s;
  }
  switch (t.kind) {
    case K::Op:
      s.root_started = true;
      if (is_atomic(t.op)) s.pending_pos = 2;
      else ++s.open;
      break;
    case K::Const:
      s.root_started = true;
      node_done();
      break;
    case K::Close:
      if (s.open == 0) s.broken = true;
      else if (--s.open == 0) s.root_done = true;
      break;
    default:
      s.broken = true;
  }
  return s;
}

// Fewest extra tokens that make the shape a finished sequence.
inline int min_finish(const Shape& s) {
  if (s.finished) return 0;
  if (!s.root_started) return 2;  // CONST EOS
  return s.pending_pos + s.open + 1;
}

struct Walker {
  const std::shared_ptr<const RangeIndex>& index;
  const LegalityConfig& config;
  const LinearizedInput& input;
  std::size_t max_len;
  bool check_completions;
  std::vector<DecodingToken> alphabet;
  EnumerationStats stats;
  std::vector<DecodingToken> seq;

  bool complete_greedily(LegalitySession s) {
    while (!s.closed()) {
      auto next = s.legal_next();
      if (next.empty()) return false;
      s.advance(next.front());
    }
    return validate(*s.program(), input, config).ok();
  }

  void finish(const std::optional<LegalitySession>& session) {
    ++stats.complete_sequences;
    bool session_ok = session && session->closed();
    bool oracle_ok = false;
    try {
      Program p = from_decoding_tokens(seq);
      oracle_ok = validate(p, input, config).ok();
      if (session_ok && !(*session->program() == p)) session_ok = false;
    } catch (const MalformedSequence&) {
      oracle_ok = false;
    }
    if (session_ok && oracle_ok) ++stats.accepted;
    if (session_ok != oracle_ok) {
      ++stats.discrepancies;
      if (stats.examples.size() < 8) {
        std::string text = session_ok ? "session-only:" : "validate-only:";
        for (const auto& t : seq) text += " " + t.to_string();
        stats.examples.push_back(text);
      }
    }
  }

  void walk(const Shape& shape, const std::optional<LegalitySession>& session) {
    if (shape.finished) {
      finish(session);
      return;
    }
    std::vector<DecodingToken> legal;
    if (session) {
      ++stats.states;
      legal = session->legal_next();
      if (legal.empty()) ++stats.dead_ends;
    }
    std::vector<DecodingToken> cut;
    for (const auto& t : alphabet) {
      Shape next = step(shape, t);
      bool live = session && std::binary_search(legal.begin(), legal.end(), t);
      if (next.broken) {
        // Grammar says no; the session must agree.
        if (live) ++stats.discrepancies;
        continue;
      }
      if (seq.size() + 1 + min_finish(next) > max_len) {
        if (live) cut.push_back(t);
        continue;
      }
      std::optional<LegalitySession> child;
      if (live) child = session->advanced(t);
      seq.push_back(t);
      walk(next, child);
      seq.pop_back();
    }
    if (!check_completions) return;
    for (const auto& t : cut) {
      ++stats.frontier_checks;
      if (!complete_greedily(session->advanced(t))) ++stats.failed_completions;
    }
  }
};

}  // namespace detail

// `max_len` counts every token including BOS and EOS.
inline EnumerationStats enumerate_legality(const LinearizedInput& input,
                                           const LegalityConfig& config,
                                           std::size_t max_len,
                                           bool check_completions = true) {
  auto index = std::make_shared<const RangeIndex>(input, config);
  detail::Walker w{index, config, input, max_len, check_completions, {}, {}, {}};
  w.alphabet.push_back(DecodingToken::eos());
  w.alphabet.push_back(DecodingToken::close());
  for (Op op : kAllOps) w.alphabet.push_back(DecodingToken::operation(op));
  for (Constant c : kAllConstants) w.alphabet.push_back(DecodingToken::constant_token(c));
  for (int i = 0; i < input.size(); ++i) w.alphabet.push_back(DecodingToken::position(i));

  LegalitySession session(index, config);
  w.seq.push_back(DecodingToken::bos());
  w.walk(detail::Shape{}, session);
  return w.stats;
}

}  // namespace rpg::oracle
