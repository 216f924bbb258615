#include <doctest.h>

#include "oracles/random_contexts.hpp"
#include "rpg/error.hpp"
#include "rpg/program.hpp"

using namespace rpg;

namespace {

std::vector<std::string> token_names(const Program& p) {
  std::vector<std::string> out;
  for (const auto& t : to_decoding_tokens(p)) out.push_back(t.to_string());
  return out;
}

}  // namespace

TEST_CASE("parse the figure1 program") {
  Program p = parse_program("DIFF(CV(131,134), CV(135,138))");
  Node expected = Node::higher(Op::Diff, {Node::atomic(Op::CellValue, 131, 134),
                                          Node::atomic(Op::CellValue, 135, 138)});
  CHECK(p.root == expected);
  CHECK(print_program(p) == "DIFF(CV(131,134), CV(135,138))");
}

TEST_CASE("parse atomic, constants and long names") {
  CHECK(parse_program("CELL(5,5)").root == Node::atomic(Op::Cell, 5, 5));
  CHECK(parse_program("SUM(1, VALUE(9,9))").root ==
        Node::higher(Op::Sum, {Node::constant_node(Constant::One), Node::atomic(Op::Value, 9, 9)}));
  CHECK(parse_program("CELL_VALUE(2,3)").root == Node::atomic(Op::CellValue, 2, 3));
  CHECK(parse_program(" DIFF ( CV( 1 , 2 ),100 ) ").root.args[1] ==
        Node::constant_node(Constant::Hundred));
}

TEST_CASE("print constants and unary count") {
  CHECK(print_program(Program{Node::constant_node(Constant::Hundred)}) == "100");
  CHECK(print_program(Program{Node::higher(Op::Count, {Node::atomic(Op::Cell, 3, 3)})}) ==
        "COUNT(CELL(3,3))");
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(parse_program("FOO(1,2)"), SyntaxError);
  CHECK_THROWS_AS(parse_program("DIFF(CV(1,2)"), SyntaxError);
  CHECK_THROWS_AS(parse_program("SUM(2, 3)"), SyntaxError);
  CHECK_THROWS_AS(parse_program("CELL(1)"), Error);
  CHECK_THROWS_AS(parse_program("KV(CELL(1,1))"), ArityError);
  CHECK_THROWS_AS(parse_program(""), SyntaxError);
}

TEST_CASE("decoding tokens") {
  CHECK(token_names(parse_program("DIFF(CV(1,2), CV(3,4))")) ==
        std::vector<std::string>{"BOS", "OP(DIFF)", "OP(CV)", "POS(1)", "POS(2)", "OP(CV)",
                                 "POS(3)", "POS(4)", "CLOSE", "EOS"});
  CHECK(token_names(parse_program("SPAN(7,9)")) ==
        std::vector<std::string>{"BOS", "OP(SPAN)", "POS(7)", "POS(9)", "EOS"});
  CHECK(token_names(parse_program("COUNT(CELL(0,0))")) ==
        std::vector<std::string>{"BOS", "OP(COUNT)", "OP(CELL)", "POS(0)", "POS(0)", "CLOSE",
                                 "EOS"});
}

TEST_CASE("token ids are stable") {
  CHECK(DecodingToken::bos().id() == 0);
  CHECK(DecodingToken::eos().id() == 1);
  CHECK(DecodingToken::close().id() == 2);
  CHECK(DecodingToken::operation(Op::Span).id() == 3);
  CHECK(DecodingToken::operation(Op::ChangeR).id() == 17);
  CHECK(DecodingToken::constant_token(Constant::Zero).id() == 18);
  CHECK(DecodingToken::constant_token(Constant::Hundred).id() == 20);
  CHECK(DecodingToken::position(0).id() == 21);
  for (int id = 0; id < 80; ++id) {
    CHECK(DecodingToken::from_id(id).id() == id);
    auto t = DecodingToken::from_id(id);
    CHECK(DecodingToken::parse(t.to_string()) == t);
  }
}

TEST_CASE("malformed token sequences") {
  CHECK_THROWS_AS(from_decoding_tokens(parse_token_list("OP(SPAN) POS(1) POS(2) EOS")),
                  MalformedSequence);
  CHECK_THROWS_AS(from_decoding_tokens(parse_token_list("BOS OP(SPAN) POS(1) POS(2)")),
                  MalformedSequence);
  CHECK_THROWS_AS(from_decoding_tokens(parse_token_list("BOS OP(DIFF) 1 EOS")), Error);
  CHECK_THROWS_AS(from_decoding_tokens(parse_token_list("BOS CLOSE EOS")), MalformedSequence);
}

TEST_CASE("operation signature") {
  CHECK(operation_signature(parse_program("DIFF(CV(1,2), CV(3,4))")) == "DIFF/CV/CV");
  CHECK(operation_signature(parse_program("SPAN(7,9)")) == "SPAN");
  CHECK(operation_signature(parse_program(
            "ARGMAX(KV(CELL(1,1), CV(2,2)), KV(CELL(3,3), CV(4,4)))")) ==
        "ARGMAX/KV/CELL/CV/KV/CELL/CV");
}

TEST_CASE("decoding length counts EOS but not BOS") {
  CHECK(decoding_length(parse_program("SPAN(7,9)")) == 4);
  CHECK(decoding_length(parse_program("DIFF(CV(1,2), CV(3,4))")) == 9);
  CHECK(decoding_length(parse_program("100")) == 2);
}

TEST_CASE("random programs round trip through text and tokens") {
  oracle::Rng rng(1234);
  for (int i = 0; i < 1000; ++i) {
    Program p{oracle::random_structural_node(rng, 3)};
    std::string text = print_program(p);
    Program back = parse_program(text);
    CHECK(back == p);
    CHECK(print_program(back) == text);
    CHECK(from_decoding_tokens(to_decoding_tokens(p)) == p);
  }
}
