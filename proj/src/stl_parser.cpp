#include "stlplan/stl.hpp"

#include <cctype>
#include <charconv>
#include <vector>

namespace stlplan::stl {

namespace {

enum class Tok { Ident, Number, LParen, RParen, LBracket, RBracket, Comma, Bang, Amp, Pipe, Le, Ge, End };

struct Token {
  Tok kind;
  std::string text;
  double number = 0.0;
  int line = 1;
  int column = 1;
};

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::End: return "end of input";
    case Tok::Number:
    case Tok::Ident: return "'" + t.text + "'";
    default: return "'" + t.text + "'";
  }
}

std::string join(const std::set<std::string>& s) {
  std::string out;
  for (const auto& e : s) out += (out.empty() ? "" : ", ") + e;
  return out;
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t{Tok::End, "", 0.0, line_, col_};
      if (pos_ >= text_.size()) {
        out.push_back(t);
        return out;
      }
      const char c = text_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t b = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
          advance();
        }
        t.kind = Tok::Ident;
        t.text = std::string(text_.substr(b, pos_ - b));
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '+') {
        double v = 0.0;
        const char* first = text_.data() + pos_;
        if (c == '+') ++first;
        auto res = std::from_chars(first, text_.data() + text_.size(), v);
        if (res.ec != std::errc() || res.ptr == first) {
          throw ParseError("malformed number", line_, col_, {"number"});
        }
        const auto len = static_cast<std::size_t>(res.ptr - (text_.data() + pos_));
        t.kind = Tok::Number;
        t.text = std::string(text_.substr(pos_, len));
        t.number = v;
        for (std::size_t i = 0; i < len; ++i) advance();
      } else {
        auto single = [&](Tok k) {
          t.kind = k;
          t.text = std::string(1, c);
          advance();
        };
        const char next = pos_ + 1 < text_.size() ? text_[pos_ + 1] : '\0';
        switch (c) {
          case '(': single(Tok::LParen); break;
          case ')': single(Tok::RParen); break;
          case '[': single(Tok::LBracket); break;
          case ']': single(Tok::RBracket); break;
          case ',': single(Tok::Comma); break;
          case '!': single(Tok::Bang); break;
          case '&': single(Tok::Amp); break;
          case '|': single(Tok::Pipe); break;
          case '<':
          case '>':
            t.kind = c == '<' ? Tok::Le : Tok::Ge;
            t.text = std::string(1, c);
            advance();
            if (next == '=') {
              t.text += '=';
              advance();
            }
            break;
          default:
            throw ParseError(std::string("unexpected character '") + c + "'", line_, col_,
                             {"operator", "identifier", "number"});
        }
      }
      out.push_back(t);
    }
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }
  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) advance();
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  FormulaPtr parse() {
    FormulaPtr f = disjunct();
    if (peek().kind != Tok::End) fail({"'&'", "'|'", "'U'", "end of input"});
    return f;
  }

 private:
  const Token& peek() const { return toks_[i_]; }
  const Token& take() { return toks_[i_++]; }

  [[noreturn]] void fail(std::set<std::string> expected) const {
    const Token& t = peek();
    throw ParseError("unexpected " + describe(t) + ", expected one of: " + join(expected), t.line,
                     t.column, std::move(expected));
  }

  const Token& expect(Tok kind, const std::string& name) {
    if (peek().kind != kind) fail({name});
    return take();
  }

  bool at_ident(std::string_view word) const {
    return peek().kind == Tok::Ident && peek().text == word;
  }

  double number() { return expect(Tok::Number, "number").number; }

  Vec2 point() {
    expect(Tok::LParen, "'('");
    Vec2 p;
    p.x = number();
    expect(Tok::Comma, "','");
    p.y = number();
    expect(Tok::RParen, "')'");
    return p;
  }

  TimeInterval interval() {
    expect(Tok::LBracket, "'['");
    TimeInterval iv;
    iv.lo = number();
    expect(Tok::Comma, "','");
    iv.hi = number();
    expect(Tok::RBracket, "']'");
    return iv;
  }

  void signal_variable() {
    if (!at_ident("x")) fail({"'x'"});
    take();
  }

  FormulaPtr disjunct() {
    FormulaPtr f = conjunct();
    while (peek().kind == Tok::Pipe) {
      take();
      f = disjunction(f, conjunct());
    }
    return f;
  }

  FormulaPtr conjunct() {
    FormulaPtr f = until_chain();
    while (peek().kind == Tok::Amp) {
      take();
      f = conjunction(f, until_chain());
    }
    return f;
  }

  FormulaPtr until_chain() {
    FormulaPtr f = unary();
    while (at_ident("U")) {
      take();
      const TimeInterval iv = interval();
      f = until(f, unary(), iv);
    }
    return f;
  }

  FormulaPtr unary() {
    const Token& t = peek();
    if (t.kind == Tok::Bang) {
      take();
      if (at_ident("box")) return box(false);
      return negation(unary());
    }
    if (t.kind == Tok::LParen) {
      take();
      FormulaPtr f = disjunct();
      expect(Tok::RParen, "')'");
      return f;
    }
    if (t.kind == Tok::Ident) {
      if (t.text == "true") {
        take();
        return make_true();
      }
      if (t.text == "G" || t.text == "F") {
        const bool is_always = t.text == "G";
        take();
        const TimeInterval iv = interval();
        expect(Tok::LParen, "'('");
        FormulaPtr body = disjunct();
        expect(Tok::RParen, "')'");
        return is_always ? always(body, iv) : eventually(body, iv);
      }
      if (t.text == "ball") return ball();
      if (t.text == "box") return box(true);
      if (t.text == "halfplane") return halfplane();
    }
    fail({"'!'", "'('", "'true'", "'G'", "'F'", "'ball'", "'box'", "'halfplane'"});
  }

  FormulaPtr ball() {
    take();
    expect(Tok::LParen, "'('");
    signal_variable();
    expect(Tok::Comma, "','");
    BallAtom a;
    a.center = point();
    expect(Tok::RParen, "')'");
    if (peek().kind == Tok::Le) {
      a.inside = true;
    } else if (peek().kind == Tok::Ge) {
      a.inside = false;
    } else {
      fail({"'<='", "'>='", "'<'", "'>'"});
    }
    take();
    a.radius = number();
    return predicate(a);
  }

  FormulaPtr box(bool inside) {
    take();
    expect(Tok::LParen, "'('");
    signal_variable();
    expect(Tok::Comma, "','");
    BoxAtom a;
    a.lower = point();
    expect(Tok::Comma, "','");
    a.upper = point();
    expect(Tok::RParen, "')'");
    a.inside = inside;
    return predicate(a);
  }

  FormulaPtr halfplane() {
    take();
    expect(Tok::LParen, "'('");
    HalfPlaneAtom a;
    const Token& axis = peek();
    if (axis.kind == Tok::Ident && (axis.text == "x0" || axis.text == "x")) {
      a.axis = 0;
    } else if (axis.kind == Tok::Ident && (axis.text == "x1" || axis.text == "y")) {
      a.axis = 1;
    } else {
      fail({"'x0'", "'x1'"});
    }
    take();
    expect(Tok::Comma, "','");
    a.a = number();
    expect(Tok::Comma, "','");
    a.b = number();
    expect(Tok::RParen, "')'");
    return predicate(a);
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
};

}  // namespace

ParseError::ParseError(const std::string& message, int line, int column,
                       std::set<std::string> expected)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line),
      column_(column),
      expected_(std::move(expected)) {}

FormulaPtr parse_formula(std::string_view text) { return Parser(Lexer(text).run()).parse(); }

}  // namespace stlplan::stl
