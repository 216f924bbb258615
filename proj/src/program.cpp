#include "rpg/program.hpp"

#include <cctype>
#include <charconv>
#include <sstream>

#include "rpg/error.hpp"

namespace rpg {
namespace {

constexpr std::string_view kOpNames[kOpCount] = {
    "SPAN", "CELL", "VALUE", "CV",  "KV",   "COUNT", "MULTI_SPANS", "ARGMAX",
    "ARGMIN", "SUM", "DIFF", "TIMES", "DIV", "AVG", "CHANGE_R"};

// Fixed argument counts enforced at parse time; -1 means variadic.
constexpr int fixed_arity(Op op) {
  switch (op) {
    case Op::Kv:
    case Op::Sum:
    case Op::Diff:
    case Op::Times:
    case Op::Div:
    case Op::ChangeR:
      return 2;
    default:
      return -1;
  }
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Program run() {
    Program p{node()};
    skip_ws();
    if (pos_ != text_.size()) fail("trailing input");
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw SyntaxError(what, pos_);
  }

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  void expect(char c) {
    if (!peek(c)) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  long long integer() {
    skip_ws();
    std::size_t b = pos_;
    while (pos_ < text_.size() &&
           std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    if (b == pos_) fail("expected integer");
    long long v = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + b, text_.data() + pos_, v);
    if (ec != std::errc() || v > 1'000'000'000) {
      pos_ = b;
      fail("integer out of range");
    }
    return v;
  }

  Node node() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    if (std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      std::size_t at = pos_;
      auto c = constant_from_value(integer());
      if (!c) {
        pos_ = at;
        fail("constant must be 0, 1 or 100");
      }
      return Node::constant_node(*c);
    }
    std::size_t name_at = pos_;
    std::string name;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
            text_[pos_] == '_')) {
      name.push_back(static_cast<char>(
          std::toupper(static_cast<unsigned char>(text_[pos_]))));
      ++pos_;
    }
    if (name.empty()) fail("expected operation or constant");
    auto op = op_from_name(name);
    if (!op) {
      pos_ = name_at;
      fail("unknown operation '" + name + "'");
    }
    expect('(');
    if (is_atomic(*op)) {
      long long s = integer();
      expect(',');
      long long e = integer();
      if (peek(',')) {
        throw ArityError(std::string(op_name(*op)) +
                         " takes exactly 2 indices");
      }
      expect(')');
      return Node::atomic(*op, static_cast<int>(s), static_cast<int>(e));
    }
    std::vector<Node> args;
    args.push_back(node());
    while (peek(',')) {
      ++pos_;
      args.push_back(node());
    }
    expect(')');
    int arity = fixed_arity(*op);
    if (arity >= 0 && static_cast<int>(args.size()) != arity) {
      throw ArityError(std::string(op_name(*op)) + " takes " +
                       std::to_string(arity) + " arguments, got " +
                       std::to_string(args.size()));
    }
    return Node::higher(*op, std::move(args));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

void print_into(const Node& n, std::string& out) {
  switch (n.kind) {
    case Node::Kind::Const:
      out += std::to_string(constant_value(n.constant));
      return;
    case Node::Kind::Atomic:
      out += op_name(n.op);
      out += '(';
      out += std::to_string(n.start);
      out += ',';
      out += std::to_string(n.end);
      out += ')';
      return;
    case Node::Kind::Higher:
      out += op_name(n.op);
      out += '(';
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i) out += ", ";
        print_into(n.args[i], out);
      }
      out += ')';
      return;
  }
}

void signature_into(const Node& n, std::string& out) {
  if (n.is_const()) return;
  if (!out.empty()) out += '/';
  out += op_name(n.op);
  for (const auto& a : n.args) signature_into(a, out);
}

void flatten(const Node& n, std::vector<DecodingToken>& out) {
  switch (n.kind) {
    case Node::Kind::Const:
      out.push_back(DecodingToken::constant_token(n.constant));
      return;
    case Node::Kind::Atomic:
      out.push_back(DecodingToken::operation(n.op));
      out.push_back(DecodingToken::position(n.start));
      out.push_back(DecodingToken::position(n.end));
      return;
    case Node::Kind::Higher:
      out.push_back(DecodingToken::operation(n.op));
      for (const auto& a : n.args) flatten(a, out);
      out.push_back(DecodingToken::close());
      return;
  }
}

class Unflattener {
 public:
  explicit Unflattener(std::span<const DecodingToken> tokens)
      : tokens_(tokens) {}

  Program run() {
    if (tokens_.empty() || tokens_[0].kind != DecodingToken::Kind::Bos) {
      throw MalformedSequence("sequence must start with BOS");
    }
    pos_ = 1;
    Node root = node();
    if (next().kind != DecodingToken::Kind::Eos) {
      throw MalformedSequence("expected EOS after the root node");
    }
    if (pos_ != tokens_.size()) {
      throw MalformedSequence("tokens after EOS");
    }
    return Program{std::move(root)};
  }

 private:
  const DecodingToken& next() {
    if (pos_ >= tokens_.size()) throw MalformedSequence("incomplete sequence");
    return tokens_[pos_++];
  }

  const DecodingToken& peek() {
    if (pos_ >= tokens_.size()) throw MalformedSequence("incomplete sequence");
    return tokens_[pos_];
  }

  Node node() {
    const DecodingToken& t = next();
    switch (t.kind) {
      case DecodingToken::Kind::Const:
        return Node::constant_node(t.constant);
      case DecodingToken::Kind::Op: {
        if (is_atomic(t.op)) {
          const DecodingToken& s = next();
          const DecodingToken& e = next();
          if (s.kind != DecodingToken::Kind::Pos ||
              e.kind != DecodingToken::Kind::Pos) {
            throw MalformedSequence("atomic operation needs two positions");
          }
          return Node::atomic(t.op, s.pos, e.pos);
        }
        Op op = t.op;
        std::vector<Node> args;
        while (peek().kind != DecodingToken::Kind::Close) {
          args.push_back(node());
        }
        ++pos_;
        return Node::higher(op, std::move(args));
      }
      default:
        throw MalformedSequence("unexpected " + t.to_string() + " at token " +
                                std::to_string(pos_ - 1));
    }
  }

  std::span<const DecodingToken> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string_view op_name(Op op) { return kOpNames[static_cast<int>(op)]; }

std::optional<Op> op_from_name(std::string_view name) {
  if (name == "CELL_VALUE") return Op::CellValue;
  for (int i = 0; i < kOpCount; ++i) {
    if (kOpNames[i] == name) return static_cast<Op>(i);
  }
  return std::nullopt;
}

std::optional<Constant> constant_from_value(long long value) {
  switch (value) {
    case 0: return Constant::Zero;
    case 1: return Constant::One;
    case 100: return Constant::Hundred;
    default: return std::nullopt;
  }
}

Node Node::atomic(Op op, int start, int end) {
  Node n;
  n.kind = Kind::Atomic;
  n.op = op;
  n.start = start;
  n.end = end;
  return n;
}

Node Node::higher(Op op, std::vector<Node> args) {
  Node n;
  n.kind = Kind::Higher;
  n.op = op;
  n.args = std::move(args);
  return n;
}

Node Node::constant_node(Constant c) {
  Node n;
  n.kind = Kind::Const;
  n.constant = c;
  return n;
}

Program parse_program(std::string_view text) { return Parser(text).run(); }

std::string print_node(const Node& node) {
  std::string out;
  print_into(node, out);
  return out;
}

std::string print_program(const Program& program) {
  return print_node(program.root);
}

std::string operation_signature(const Program& program) {
  std::string out;
  signature_into(program.root, out);
  return out;
}

int decoding_length(const Program& program) {
  return static_cast<int>(to_decoding_tokens(program).size()) - 1;
}

int DecodingToken::id() const {
  switch (kind) {
    case Kind::Bos: return 0;
    case Kind::Eos: return 1;
    case Kind::Close: return 2;
    case Kind::Op: return 3 + static_cast<int>(op);
    case Kind::Const: return 18 + static_cast<int>(constant);
    case Kind::Pos: return kPosIdBase + pos;
  }
  return -1;
}

DecodingToken DecodingToken::from_id(int id) {
  if (id < 0) throw MalformedSequence("negative token id");
  if (id == 0) return bos();
  if (id == 1) return eos();
  if (id == 2) return close();
  if (id < 3 + kOpCount) return operation(static_cast<Op>(id - 3));
  if (id < kPosIdBase) return constant_token(static_cast<Constant>(id - 18));
  return position(id - kPosIdBase);
}

std::string DecodingToken::to_string() const {
  switch (kind) {
    case Kind::Bos: return "BOS";
    case Kind::Eos: return "EOS";
    case Kind::Close: return "CLOSE";
    case Kind::Op: return "OP(" + std::string(op_name(op)) + ")";
    case Kind::Pos: return "POS(" + std::to_string(pos) + ")";
    case Kind::Const:
      return "CONST(" + std::to_string(constant_value(constant)) + ")";
  }
  return "?";
}

DecodingToken DecodingToken::parse(std::string_view text) {
  if (text == "BOS") return bos();
  if (text == "EOS") return eos();
  if (text == "CLOSE") return close();
  auto open = text.find('(');
  if (open == std::string_view::npos || text.back() != ')') {
    throw SyntaxError("bad decoding token '" + std::string(text) + "'", 0);
  }
  std::string_view head = text.substr(0, open);
  std::string_view arg = text.substr(open + 1, text.size() - open - 2);
  if (head == "OP") {
    auto op = op_from_name(arg);
    if (!op) throw SyntaxError("unknown operation '" + std::string(arg) + "'", open + 1);
    return operation(*op);
  }
  long long v = -1;
  auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), v);
  if (ec != std::errc() || ptr != arg.data() + arg.size() || v < 0) {
    throw SyntaxError("bad integer in '" + std::string(text) + "'", open + 1);
  }
  if (head == "POS") return position(static_cast<int>(v));
  if (head == "CONST") {
    auto c = constant_from_value(v);
    if (!c) throw SyntaxError("constant must be 0, 1 or 100", open + 1);
    return constant_token(*c);
  }
  throw SyntaxError("bad decoding token '" + std::string(text) + "'", 0);
}

std::vector<DecodingToken> to_decoding_tokens(const Program& program) {
  std::vector<DecodingToken> out{DecodingToken::bos()};
  flatten(program.root, out);
  out.push_back(DecodingToken::eos());
  return out;
}

Program from_decoding_tokens(std::span<const DecodingToken> tokens) {
  return Unflattener(tokens).run();
}

std::vector<DecodingToken> parse_token_list(std::string_view text) {
  std::vector<DecodingToken> out;
  std::istringstream in{std::string(text)};
  std::string word;
  while (in >> word) out.push_back(DecodingToken::parse(word));
  return out;
}

}  // namespace rpg
