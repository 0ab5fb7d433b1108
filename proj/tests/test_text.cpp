#include <doctest.h>

#include "gosc/text.hpp"

using namespace gosc;

TEST_CASE("how-to prefix is stripped only at the start, case-insensitively") {
  CHECK(text::strip_how_to("How to Draw Santa Claus") == "Draw Santa Claus");
  CHECK(text::strip_how_to("how TO draw") == "draw");
  CHECK(text::strip_how_to("Learn How to Draw") == "Learn How to Draw");
  CHECK(text::strip_how_to("Howto Draw") == "Howto Draw");
  CHECK(text::strip_how_to("Cómo dibujar") == "Cómo dibujar");
}

TEST_CASE("canonical text is trimmed and NFC") {
  // "e" + combining acute -> precomposed U+00E9
  CHECK(text::canonical("  Cafe\xcc\x81 \n") == "Caf\xc3\xa9");
  CHECK(text::canonical("\xe3\x80\x80x\xc2\xa0") == "x");  // ideographic space, nbsp
  CHECK(text::nfc("Caf\xc3\xa9") == "Caf\xc3\xa9");
}

TEST_CASE("tokenizer lowercases words and drops punctuation") {
  CHECK(text::tokenize("Order drinks first.") == std::vector<std::string>{"order", "drinks", "first"});
  CHECK(text::tokenize("  ,;! ").empty());
  CHECK(text::tokenize("Ÿes 42") == std::vector<std::string>{"ÿes", "42"});
}

TEST_CASE("sentence case upper-cases the first code point only") {
  CHECK(text::sentence_case("a bomber") == "A bomber");
  CHECK(text::sentence_case("élan vital") == "Élan vital");
  CHECK(text::sentence_case("") == "");
  CHECK(text::sentence_case("42 things") == "42 things");
}
