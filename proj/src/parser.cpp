#include "xqfed/parser.hpp"

#include <algorithm>
#include <cctype>
#include <string_view>

#include "xqfed/errors.hpp"

namespace xqfed {

PrefixMap defaultPrefixes() {
  return PrefixMap{
      {"rdf", "http://www.w3.org/1999/02/22-rdf-syntax-ns#"},
      {"owl", "http://www.w3.org/2002/07/owl#"},
      {"ex", "http://example.org/"},
      {"dbo", "http://dbpedia.org/ontology/"},
      {"xs", "http://www.w3.org/2001/XMLSchema#"},
  };
}

namespace {

bool ciEqual(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  return true;
}

bool isNameStart(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool isNameChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

bool isDigit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }

/// Character cursor with 1-based line/column tracking. Offsets allow FLWR
/// bodies embedded in a SPARQL query to report absolute positions.
struct Cursor {
  std::string_view text;
  std::size_t pos = 0;
  int line = 1;
  int col = 1;

  Cursor(std::string_view t, int startLine = 1, int startCol = 1)
      : text(t), line(startLine), col(startCol) {}

  bool eof() const { return pos >= text.size(); }
  char peek(std::size_t k = 0) const {
    return pos + k < text.size() ? text[pos + k] : '\0';
  }
  char advance() {
    char c = text[pos++];
    if (c == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    return c;
  }
};

[[noreturn]] void syntaxError(const Cursor& c, const std::string& message,
                              std::vector<std::string> expected = {}) {
  throw ParseError(ErrorCode::SyntaxError, message, c.line, c.col,
                   std::move(expected));
}

std::string lexQuotedString(Cursor& c) {
  char quote = c.advance();
  std::string out;
  while (true) {
    if (c.eof()) syntaxError(c, "unterminated string literal");
    char ch = c.advance();
    if (ch == quote) break;
    if (ch == '\\') {
      if (c.eof()) syntaxError(c, "unterminated escape sequence");
      char esc = c.advance();
      switch (esc) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case '\\': out.push_back('\\'); break;
        case '\'': out.push_back('\''); break;
        case '"': out.push_back('"'); break;
        default: syntaxError(c, std::string("unknown escape '\\") + esc + "'");
      }
    } else {
      out.push_back(ch);
    }
  }
  return out;
}

/// Lexes digits with optional thousands separators (10,000,000) and an
/// optional decimal part; separators are stripped.
std::string lexNumber(Cursor& c) {
  std::string out;
  while (isDigit(c.peek())) out.push_back(c.advance());
  while (c.peek() == ',' && isDigit(c.peek(1)) && isDigit(c.peek(2)) &&
         isDigit(c.peek(3)) && !isDigit(c.peek(4))) {
    c.advance();  // ','
    out.push_back(c.advance());
    out.push_back(c.advance());
    out.push_back(c.advance());
  }
  if (c.peek() == '.' && isDigit(c.peek(1))) {
    out.push_back(c.advance());
    while (isDigit(c.peek())) out.push_back(c.advance());
  }
  return out;
}

// ---------------------------------------------------------------------------
// SPARQL lexer
// ---------------------------------------------------------------------------

enum class Tok {
  Ident,    // bare name (possibly a keyword)
  PName,    // prefix:local
  Var,      // ?name
  Iri,      // <...>
  String,
  Number,
  LBrace, RBrace, LParen, RParen,
  Dot, Semicolon, Star, Op,
  Eof,
};

const char* tokName(Tok t) {
  switch (t) {
    case Tok::Ident: return "identifier";
    case Tok::PName: return "prefixed name";
    case Tok::Var: return "variable";
    case Tok::Iri: return "IRI";
    case Tok::String: return "string";
    case Tok::Number: return "number";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::Dot: return "'.'";
    case Tok::Semicolon: return "';'";
    case Tok::Star: return "'*'";
    case Tok::Op: return "operator";
    case Tok::Eof: return "end of input";
  }
  return "?";
}

struct Token {
  Tok kind = Tok::Eof;
  std::string text;
  int line = 1;
  int col = 1;
};

class SparqlLexer {
public:
  explicit SparqlLexer(std::string_view text) : cursor_(text) {}

  Token next() {
    if (hasPeeked_) {
      hasPeeked_ = false;
      return peeked_;
    }
    return lex();
  }

  const Token& peek() {
    if (!hasPeeked_) {
      peeked_ = lex();
      hasPeeked_ = true;
    }
    return peeked_;
  }

  /// Raw scan from just after a consumed '(' to its balanced ')', honoring
  /// quotes. Returns the body text and its start position; consumes the ')'.
  std::string scanBalancedParens(int& bodyLine, int& bodyCol) {
    std::string out;
    bodyLine = cursor_.line;
    bodyCol = cursor_.col;
    int depth = 1;
    while (true) {
      if (cursor_.eof())
        syntaxError(cursor_, "unterminated XQueryFILTER body", {"')'"});
      char c = cursor_.peek();
      if (c == '\'' || c == '"') {
        char quote = c;
        out.push_back(cursor_.advance());
        while (true) {
          if (cursor_.eof()) syntaxError(cursor_, "unterminated string literal");
          char ch = cursor_.advance();
          out.push_back(ch);
          if (ch == '\\' && !cursor_.eof()) {
            out.push_back(cursor_.advance());
            continue;
          }
          if (ch == quote) break;
        }
        continue;
      }
      if (c == '(') ++depth;
      if (c == ')') {
        --depth;
        if (depth == 0) {
          cursor_.advance();
          return out;
        }
      }
      out.push_back(cursor_.advance());
    }
  }

  const Cursor& cursor() const { return cursor_; }

private:
  void skipLayout() {
    while (!cursor_.eof()) {
      char c = cursor_.peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        cursor_.advance();
      } else if (c == '#') {
        while (!cursor_.eof() && cursor_.peek() != '\n') cursor_.advance();
      } else {
        break;
      }
    }
  }

  Token lex() {
    skipLayout();
    Token t;
    t.line = cursor_.line;
    t.col = cursor_.col;
    if (cursor_.eof()) {
      t.kind = Tok::Eof;
      return t;
    }
    char c = cursor_.peek();
    if (c == '?' || c == '$') {
      cursor_.advance();
      if (!isNameStart(cursor_.peek()))
        syntaxError(cursor_, "variable name expected after '?'");
      std::string name;
      while (isNameChar(cursor_.peek())) name.push_back(cursor_.advance());
      t.kind = Tok::Var;
      t.text = std::move(name);
      return t;
    }
    if (c == '<') {
      // IRIREF when the run up to '>' has no whitespace; otherwise '<'/'<='.
      std::size_t k = 1;
      bool iri = false;
      while (cursor_.pos + k < cursor_.text.size()) {
        char ch = cursor_.text[cursor_.pos + k];
        if (ch == '>') {
          iri = k > 1;
          break;
        }
        if (std::isspace(static_cast<unsigned char>(ch)) || ch == '<') break;
        ++k;
      }
      if (iri) {
        cursor_.advance();
        std::string value;
        while (cursor_.peek() != '>') value.push_back(cursor_.advance());
        cursor_.advance();
        t.kind = Tok::Iri;
        t.text = std::move(value);
        return t;
      }
      cursor_.advance();
      t.kind = Tok::Op;
      t.text = "<";
      if (cursor_.peek() == '=') {
        cursor_.advance();
        t.text = "<=";
      }
      return t;
    }
    if (c == '\'' || c == '"') {
      t.kind = Tok::String;
      t.text = lexQuotedString(cursor_);
      return t;
    }
    if (isDigit(c)) {
      t.kind = Tok::Number;
      t.text = lexNumber(cursor_);
      return t;
    }
    if (isNameStart(c)) {
      std::string name;
      while (isNameChar(cursor_.peek())) name.push_back(cursor_.advance());
      if (cursor_.peek() == ':') {
        // prefixed name (the local part may be empty, e.g. "ex:")
        cursor_.advance();
        std::string local;
        while (isNameChar(cursor_.peek()) || cursor_.peek() == '-' ||
               (cursor_.peek() == '.' && isNameChar(cursor_.peek(1))))
          local.push_back(cursor_.advance());
        t.kind = Tok::PName;
        t.text = name + ":" + local;
        return t;
      }
      t.kind = Tok::Ident;
      t.text = std::move(name);
      return t;
    }
    cursor_.advance();
    switch (c) {
      case '{': t.kind = Tok::LBrace; return t;
      case '}': t.kind = Tok::RBrace; return t;
      case '(': t.kind = Tok::LParen; return t;
      case ')': t.kind = Tok::RParen; return t;
      case '.': t.kind = Tok::Dot; return t;
      case ';': t.kind = Tok::Semicolon; return t;
      case '*': t.kind = Tok::Star; return t;
      case '+': case '-': case '/':
        t.kind = Tok::Op;
        t.text = std::string(1, c);
        return t;
      case '=':
        t.kind = Tok::Op;
        t.text = "=";
        return t;
      case '>':
        t.kind = Tok::Op;
        t.text = ">";
        if (cursor_.peek() == '=') {
          cursor_.advance();
          t.text = ">=";
        }
        return t;
      case '!':
        if (cursor_.peek() == '=') {
          cursor_.advance();
          t.kind = Tok::Op;
          t.text = "!=";
          return t;
        }
        break;
      default: break;
    }
    syntaxError(cursor_, std::string("unexpected character '") + c + "'");
  }

  Cursor cursor_;
  Token peeked_;
  bool hasPeeked_ = false;
};

// ---------------------------------------------------------------------------
// FLWR lexer
// ---------------------------------------------------------------------------

enum class XTok {
  Ident,     // may contain ':' and '-' (xs:date, base-uri)
  XqVar,     // $name
  SparqlVar, // ?name
  String,
  Number,
  LParen, RParen, LBracket, RBracket, LBrace, RBrace,
  Comma, Slash, DSlash, Assign, Cmp,
  TagOpen, TagClose,
  Eof,
};

const char* xtokName(XTok t) {
  switch (t) {
    case XTok::Ident: return "name";
    case XTok::XqVar: return "$variable";
    case XTok::SparqlVar: return "?variable";
    case XTok::String: return "string";
    case XTok::Number: return "number";
    case XTok::LParen: return "'('";
    case XTok::RParen: return "')'";
    case XTok::LBracket: return "'['";
    case XTok::RBracket: return "']'";
    case XTok::LBrace: return "'{'";
    case XTok::RBrace: return "'}'";
    case XTok::Comma: return "','";
    case XTok::Slash: return "'/'";
    case XTok::DSlash: return "'//'";
    case XTok::Assign: return "':='";
    case XTok::Cmp: return "comparison operator";
    case XTok::TagOpen: return "element constructor";
    case XTok::TagClose: return "closing tag";
    case XTok::Eof: return "end of input";
  }
  return "?";
}

struct XToken {
  XTok kind = XTok::Eof;
  std::string text;
  int line = 1;
  int col = 1;
};

class FlwrLexer {
public:
  FlwrLexer(std::string_view text, int startLine, int startCol)
      : cursor_(text, startLine, startCol) {}

  XToken next() {
    if (hasPeeked_) {
      hasPeeked_ = false;
      return peeked_;
    }
    return lex();
  }

  const XToken& peek() {
    if (!hasPeeked_) {
      peeked_ = lex();
      hasPeeked_ = true;
    }
    return peeked_;
  }

  const Cursor& cursor() const { return cursor_; }

private:
  void skipLayout() {
    while (!cursor_.eof() &&
           std::isspace(static_cast<unsigned char>(cursor_.peek())))
      cursor_.advance();
  }

  std::string lexName() {
    std::string name;
    name.push_back(cursor_.advance());
    while (true) {
      char c = cursor_.peek();
      if (isNameChar(c)) {
        name.push_back(cursor_.advance());
      } else if ((c == '-' || c == ':') && isNameStart(cursor_.peek(1))) {
        name.push_back(cursor_.advance());
      } else {
        break;
      }
    }
    return name;
  }

  XToken lex() {
    skipLayout();
    XToken t;
    t.line = cursor_.line;
    t.col = cursor_.col;
    if (cursor_.eof()) {
      t.kind = XTok::Eof;
      return t;
    }
    char c = cursor_.peek();
    if (c == '$' || c == '?') {
      cursor_.advance();
      if (!isNameStart(cursor_.peek()))
        syntaxError(cursor_, "variable name expected");
      std::string name;
      while (isNameChar(cursor_.peek())) name.push_back(cursor_.advance());
      t.kind = c == '$' ? XTok::XqVar : XTok::SparqlVar;
      t.text = std::move(name);
      return t;
    }
    if (c == '\'' || c == '"') {
      t.kind = XTok::String;
      t.text = lexQuotedString(cursor_);
      return t;
    }
    if (isDigit(c)) {
      t.kind = XTok::Number;
      t.text = lexNumber(cursor_);
      return t;
    }
    if (isNameStart(c)) {
      t.kind = XTok::Ident;
      t.text = lexName();
      return t;
    }
    switch (c) {
      case '*':
        cursor_.advance();
        t.kind = XTok::Ident;
        t.text = "*";
        return t;
      case '(': cursor_.advance(); t.kind = XTok::LParen; return t;
      case ')': cursor_.advance(); t.kind = XTok::RParen; return t;
      case '[': cursor_.advance(); t.kind = XTok::LBracket; return t;
      case ']': cursor_.advance(); t.kind = XTok::RBracket; return t;
      case '{': cursor_.advance(); t.kind = XTok::LBrace; return t;
      case '}': cursor_.advance(); t.kind = XTok::RBrace; return t;
      case ',': cursor_.advance(); t.kind = XTok::Comma; return t;
      case '/':
        cursor_.advance();
        if (cursor_.peek() == '/') {
          cursor_.advance();
          t.kind = XTok::DSlash;
        } else {
          t.kind = XTok::Slash;
        }
        return t;
      case ':':
        if (cursor_.peek(1) == '=') {
          cursor_.advance();
          cursor_.advance();
          t.kind = XTok::Assign;
          return t;
        }
        break;
      case '=':
        cursor_.advance();
        t.kind = XTok::Cmp;
        t.text = "=";
        return t;
      case '!':
        if (cursor_.peek(1) == '=') {
          cursor_.advance();
          cursor_.advance();
          t.kind = XTok::Cmp;
          t.text = "!=";
          return t;
        }
        break;
      case '>':
        cursor_.advance();
        t.kind = XTok::Cmp;
        t.text = ">";
        if (cursor_.peek() == '=') {
          cursor_.advance();
          t.text = ">=";
        }
        return t;
      case '<': {
        // '<name>' opens an element constructor, '</name>' closes one;
        // otherwise a comparison (XQuery itself requires the space).
        if (cursor_.peek(1) == '/') {
          cursor_.advance();
          cursor_.advance();
          if (!isNameStart(cursor_.peek()))
            syntaxError(cursor_, "element name expected in closing tag");
          std::string name = lexName();
          if (cursor_.peek() != '>')
            syntaxError(cursor_, "'>' expected in closing tag");
          cursor_.advance();
          t.kind = XTok::TagClose;
          t.text = std::move(name);
          return t;
        }
        if (isNameStart(cursor_.peek(1))) {
          std::size_t k = 1;
          std::string name;
          while (cursor_.pos + k < cursor_.text.size()) {
            char ch = cursor_.text[cursor_.pos + k];
            if (isNameChar(ch) || ch == '-') {
              name.push_back(ch);
              ++k;
            } else {
              break;
            }
          }
          if (cursor_.peek(k) == '>') {
            for (std::size_t i = 0; i <= k; ++i) cursor_.advance();
            t.kind = XTok::TagOpen;
            t.text = std::move(name);
            return t;
          }
        }
        cursor_.advance();
        t.kind = XTok::Cmp;
        t.text = "<";
        if (cursor_.peek() == '=') {
          cursor_.advance();
          t.text = "<=";
        }
        return t;
      }
      default: break;
    }
    syntaxError(cursor_, std::string("unexpected character '") + c + "'");
}

  Cursor cursor_;
  XToken peeked_;
  bool hasPeeked_ = false;
};

// ---------------------------------------------------------------------------
// FLWR parser
// ---------------------------------------------------------------------------

class FlwrParser {
public:
  FlwrParser(std::string_view text, int startLine, int startCol)
      : lexer_(text, startLine, startCol) {}

  FlwrQuery parseQuery() {
    FlwrQuery q;
    if (lexer_.peek().kind == XTok::Ident && lexer_.peek().text == "count") {
      q.countWrapped = true;
      lexer_.next();
      expect(XTok::LParen);
      parseBody(q);
      expect(XTok::RParen);
    } else {
      parseBody(q);
    }
    XToken t = lexer_.peek();
    if (t.kind != XTok::Eof)
      throw ParseError(ErrorCode::SyntaxError,
                       "unexpected input after RETURN expression", t.line, t.col,
                       {"end of input"});
    return q;
  }

private:
  [[noreturn]] void errorAt(const XToken& t, const std::string& message,
                            std::vector<std::string> expected = {}) {
    throw ParseError(ErrorCode::SyntaxError, message, t.line, t.col,
                     std::move(expected));
  }

  XToken expect(XTok kind) {
    XToken t = lexer_.next();
    if (t.kind != kind)
      errorAt(t, std::string(xtokName(kind)) + " expected", {xtokName(kind)});
    return t;
  }

  bool peekKeyword(const char* kw) {
    const XToken& t = lexer_.peek();
    return t.kind == XTok::Ident && ciEqual(t.text, kw);
  }

  void expectKeyword(const char* kw) {
    XToken t = lexer_.next();
    if (t.kind != XTok::Ident || !ciEqual(t.text, kw))
      errorAt(t, std::string("'") + kw + "' expected", {kw});
  }

  void parseBody(FlwrQuery& q) {
    while (peekKeyword("for")) {
      lexer_.next();
      XToken var = expect(XTok::XqVar);
      expectKeyword("in");
      q.forClauses.push_back({var.text, parseExprSingle()});
    }
    while (peekKeyword("let")) {
      lexer_.next();
      XToken var = expect(XTok::XqVar);
      expect(XTok::Assign);
      q.letClauses.push_back({var.text, parseExprSingle()});
    }
    if (peekKeyword("where")) {
      lexer_.next();
      q.whereExpr = parseExprSingle();
    }
    expectKeyword("return");
    q.returnExpr = parseExprSingle();
  }

  XqExpr parseExprSingle() { return parseOr(); }

  XqExpr parseOr() {
    XqExpr lhs = parseAnd();
    while (peekKeyword("or")) {
      lexer_.next();
      lhs = XqExpr::boolOp("or", std::move(lhs), parseAnd());
    }
    return lhs;
  }

  XqExpr parseAnd() {
    XqExpr lhs = parseCmp();
    while (peekKeyword("and")) {
      lexer_.next();
      lhs = XqExpr::boolOp("and", std::move(lhs), parseCmp());
    }
    return lhs;
  }

  XqExpr parseCmp() {
    XqExpr lhs = parsePath();
    if (lexer_.peek().kind == XTok::Cmp) {
      XToken op = lexer_.next();
      return XqExpr::compare(op.text, std::move(lhs), parsePath());
    }
    return lhs;
  }

  XqExpr::Step parseStep(bool descendant) {
    XqExpr::Step step;
    step.descendant = descendant;
    XToken t = lexer_.next();
    if (t.kind == XTok::Ident) {
      step.nameTest = t.text;
    } else {
      errorAt(t, "name test expected in path step", {"name", "'*'"});
    }
    while (lexer_.peek().kind == XTok::LBracket) {
      lexer_.next();
      step.predicates.push_back(parseExprSingle());
      expect(XTok::RBracket);
    }
    return step;
  }

  std::vector<XqExpr::Step> parseTrailingSteps() {
    std::vector<XqExpr::Step> steps;
    while (true) {
      XTok k = lexer_.peek().kind;
      if (k == XTok::Slash) {
        lexer_.next();
        steps.push_back(parseStep(false));
      } else if (k == XTok::DSlash) {
        lexer_.next();
        steps.push_back(parseStep(true));
      } else {
        break;
      }
    }
    return steps;
  }

  XqExpr withTrailingSteps(XqExpr primary) {
    XTok k = lexer_.peek().kind;
    if (k != XTok::Slash && k != XTok::DSlash) return primary;
    return XqExpr::rootedPath(std::move(primary), parseTrailingSteps());
  }

  XqExpr parsePath() {
    const XToken& t = lexer_.peek();
    switch (t.kind) {
      case XTok::XqVar: {
        XToken v = lexer_.next();
        return withTrailingSteps(XqExpr::xqVar(v.text));
      }
      case XTok::SparqlVar: {
        XToken v = lexer_.next();
        return withTrailingSteps(XqExpr::sparqlVar(v.text));
      }
      case XTok::String: {
        XToken s = lexer_.next();
        return XqExpr::stringLit(s.text);
      }
      case XTok::Number: {
        XToken n = lexer_.next();
        return XqExpr::numberLit(n.text);
      }
      case XTok::LParen: {
        lexer_.next();
        std::vector<XqExpr> items;
        items.push_back(parseExprSingle());
        bool isSequence = false;
        while (lexer_.peek().kind == XTok::Comma) {
          isSequence = true;
          lexer_.next();
          items.push_back(parseExprSingle());
        }
        expect(XTok::RParen);
        if (isSequence) return XqExpr::sequence(std::move(items));
        return withTrailingSteps(std::move(items.front()));
      }
      case XTok::TagOpen: {
        XToken open = lexer_.next();
        return parseElementBody(open);
      }
      case XTok::Ident: {
        XToken name = lexer_.next();
        if (lexer_.peek().kind == XTok::LParen) {
          lexer_.next();
          std::vector<XqExpr> args;
          if (lexer_.peek().kind != XTok::RParen) {
            args.push_back(parseExprSingle());
            while (lexer_.peek().kind == XTok::Comma) {
              lexer_.next();
              args.push_back(parseExprSingle());
            }
          }
          expect(XTok::RParen);
          return withTrailingSteps(XqExpr::call(name.text, std::move(args)));
        }
        // relative path starting with a child step
        XqExpr::Step first;
        first.descendant = false;
        first.nameTest = name.text;
        while (lexer_.peek().kind == XTok::LBracket) {
          lexer_.next();
          first.predicates.push_back(parseExprSingle());
          expect(XTok::RBracket);
        }
        std::vector<XqExpr::Step> steps;
        steps.push_back(std::move(first));
        for (auto& s : parseTrailingSteps()) steps.push_back(std::move(s));
        return XqExpr::relativePath(std::move(steps));
      }
      default:
        errorAt(t, "expression expected",
                {"$variable", "?variable", "string", "number", "name", "'('"});
    }
  }

  XqExpr parseElementBody(const XToken& open) {
    std::vector<XqExpr> children;
    while (true) {
      const XToken& t = lexer_.peek();
      if (t.kind == XTok::TagClose) {
        XToken close = lexer_.next();
        if (close.text != open.text)
          errorAt(close, "mismatched closing tag </" + close.text +
                             "> for <" + open.text + ">");
        return XqExpr::element(open.text, std::move(children));
      }
      if (t.kind == XTok::TagOpen) {
        XToken nested = lexer_.next();
        children.push_back(parseElementBody(nested));
        continue;
      }
      if (t.kind == XTok::LBrace) {
        lexer_.next();
        children.push_back(parseExprSingle());
        expect(XTok::RBrace);
        continue;
      }
      errorAt(t, "element content expected",
              {"'{'", "nested element", "closing tag"});
    }
  }

  FlwrLexer lexer_;
};

// ---------------------------------------------------------------------------
// SPARQL parser
// ---------------------------------------------------------------------------

class SparqlParser {
public:
  SparqlParser(std::string_view text, const PrefixMap& prefixes)
      : lexer_(text), prefixes_(prefixes), source_(text) {}

  ExtendedQuery parseQuery() {
    ExtendedQuery q;
    q.sourceText = std::string(source_);
    parsePrologue();
    expectKeyword("select");
    parseProjection(q);
    expectKeyword("where");
    q.where = parseGroup(/*topLevel=*/true, /*inService=*/false);
    Token t = lexer_.peek();
    if (t.kind != Tok::Eof)
      errorAt(t, "unexpected input after query", {"end of input"});
    validate(q);
    return q;
  }

private:
  [[noreturn]] void errorAt(const Token& t, const std::string& message,
                            std::vector<std::string> expected = {}) {
    throw ParseError(ErrorCode::SyntaxError, message, t.line, t.col,
                     std::move(expected));
  }

  Token expect(Tok kind) {
    Token t = lexer_.next();
    if (t.kind != kind)
      errorAt(t, std::string(tokName(kind)) + " expected", {tokName(kind)});
    return t;
  }

  bool peekKeyword(const char* kw) {
    const Token& t = lexer_.peek();
    return t.kind == Tok::Ident && ciEqual(t.text, kw);
  }

  void expectKeyword(const char* kw) {
    Token t = lexer_.next();
    if (t.kind != Tok::Ident || !ciEqual(t.text, kw))
      errorAt(t, std::string("'") + kw + "' expected", {kw});
  }

  void parsePrologue() {
    while (peekKeyword("prefix")) {
      lexer_.next();
      Token name = lexer_.next();
      if (name.kind != Tok::PName || name.text.back() != ':')
        errorAt(name, "prefix name expected", {"prefix:"});
      Token iri = expect(Tok::Iri);
      prefixes_[name.text.substr(0, name.text.size() - 1)] = iri.text;
    }
  }

  void parseProjection(ExtendedQuery& q) {
    if (lexer_.peek().kind == Tok::LParen) {
      // SELECT ( COUNT(*) AS ?v ) — cardinality probe form
      lexer_.next();
      expectKeyword("count");
      expect(Tok::LParen);
      expect(Tok::Star);
      expect(Tok::RParen);
      expectKeyword("as");
      Token v = expect(Tok::Var);
      expect(Tok::RParen);
      q.countProbe = true;
      q.selectVars.push_back(Variable{v.text});
      return;
    }
    while (lexer_.peek().kind == Tok::Var)
      q.selectVars.push_back(Variable{lexer_.next().text});
    if (q.selectVars.empty())
      errorAt(lexer_.peek(), "projection variable expected", {"variable"});
  }

  std::string expandPName(const Token& t) {
    auto colon = t.text.find(':');
    std::string prefix = t.text.substr(0, colon);
    std::string local = t.text.substr(colon + 1);
    auto it = prefixes_.find(prefix);
    if (it == prefixes_.end())
      errorAt(t, "unknown prefix '" + prefix + ":'");
    return it->second + local;
  }

  VarOrTerm parseVarOrTerm(bool allowLiteral) {
    Token t = lexer_.next();
    switch (t.kind) {
      case Tok::Var: return Variable{t.text};
      case Tok::Iri: return RdfTerm::iri(t.text);
      case Tok::PName: return RdfTerm::iri(expandPName(t));
      case Tok::String: {
        if (!allowLiteral) errorAt(t, "literal not allowed here");
        RdfTerm term = RdfTerm::literal(t.text);
        // optional ^^datatype or @lang
        // (lexer has no dedicated tokens; accept the common forms)
        return term;
      }
      case Tok::Number: {
        if (!allowLiteral) errorAt(t, "literal not allowed here");
        std::string dt = t.text.find('.') == std::string::npos
                             ? "http://www.w3.org/2001/XMLSchema#integer"
                             : "http://www.w3.org/2001/XMLSchema#decimal";
        return RdfTerm::typedLiteral(t.text, dt);
      }
      default:
        errorAt(t, "variable or term expected",
                {"variable", "IRI", "prefixed name", "literal"});
    }
  }

  void parseTriplesSameSubject(GraphPattern& out) {
    VarOrTerm subject = parseVarOrTerm(/*allowLiteral=*/true);
    while (true) {
      VarOrTerm predicate = parseVarOrTerm(/*allowLiteral=*/false);
      VarOrTerm object = parseVarOrTerm(/*allowLiteral=*/true);
      out.triples.push_back(TriplePattern{subject, predicate, object});
      const Token& t = lexer_.peek();
      if (t.kind == Tok::Semicolon) {
        lexer_.next();
        continue;
      }
      if (t.kind == Tok::Dot) {
        lexer_.next();
        return;
      }
      if (t.kind == Tok::RBrace) return;  // final '.' may be omitted
      errorAt(t, "'.' or ';' expected after triple", {"'.'", "';'"});
    }
  }

  FilterExpr parseFilterPrimary() {
    Token t = lexer_.next();
    switch (t.kind) {
      case Tok::Var: return FilterExpr::variable(t.text);
      case Tok::Number: return FilterExpr::number(t.text);
      case Tok::String: return FilterExpr::str(t.text);
      case Tok::Iri: {
        FilterExpr e;
        e.kind = FilterExpr::Kind::Iri;
        e.value = t.text;
        return e;
      }
      case Tok::PName: {
        FilterExpr e;
        e.kind = FilterExpr::Kind::Iri;
        e.value = expandPName(t);
        return e;
      }
      case Tok::LParen: {
        FilterExpr inner = parseFilterExpr();
        expect(Tok::RParen);
        return inner;
      }
      default:
        errorAt(t, "filter operand expected",
                {"variable", "number", "string", "'('"});
    }
  }

  FilterExpr parseFilterMul() {
    FilterExpr lhs = parseFilterPrimary();
    while (true) {
      const Token& t = lexer_.peek();
      bool star = t.kind == Tok::Star;
      if (star || (t.kind == Tok::Op && t.text == "/")) {
        lexer_.next();
        FilterExpr e;
        e.kind = FilterExpr::Kind::Arith;
        e.op = star ? "*" : "/";
        e.args.push_back(std::move(lhs));
        e.args.push_back(parseFilterPrimary());
        lhs = std::move(e);
      } else {
        return lhs;
      }
    }
  }

  FilterExpr parseFilterAdd() {
    FilterExpr lhs = parseFilterMul();
    while (lexer_.peek().kind == Tok::Op &&
           (lexer_.peek().text == "+" || lexer_.peek().text == "-")) {
      std::string op = lexer_.next().text;
      FilterExpr e;
      e.kind = FilterExpr::Kind::Arith;
      e.op = op;
      e.args.push_back(std::move(lhs));
      e.args.push_back(parseFilterMul());
      lhs = std::move(e);
    }
    return lhs;
  }

  FilterExpr parseFilterExpr() {
    FilterExpr lhs = parseFilterAdd();
    const Token& t = lexer_.peek();
    if (t.kind == Tok::Op &&
        (t.text == "=" || t.text == "!=" || t.text == "<" || t.text == "<=" ||
         t.text == ">" || t.text == ">=")) {
      std::string op = lexer_.next().text;
      return FilterExpr::compare(op, std::move(lhs), parseFilterAdd());
    }
    return lhs;
  }

  void parseFilter(GraphPattern& out) {
    expect(Tok::LParen);
    out.filters.push_back(parseFilterExpr());
    expect(Tok::RParen);
    if (lexer_.peek().kind == Tok::Dot) lexer_.next();
  }

  void parseService(GraphPattern& out) {
    ServiceBlock svc;
    Token iri = expect(Tok::Iri);
    svc.endpointIri = iri.text;
    expect(Tok::LBrace);
    if (peekKeyword("select")) {
      lexer_.next();
      svc.hasSubselect = true;
      while (lexer_.peek().kind == Tok::Var)
        svc.subselectVars.push_back(Variable{lexer_.next().text});
      if (svc.subselectVars.empty())
        errorAt(lexer_.peek(), "projection variable expected", {"variable"});
      expectKeyword("where");
      svc.inner = parseGroup(/*topLevel=*/false, /*inService=*/true);
    } else {
      svc.inner = parseGroupBody(/*topLevel=*/false, /*inService=*/true);
    }
    expect(Tok::RBrace);
    out.services.push_back(std::move(svc));
  }

  void parseXQueryFilter(GraphPattern& out, bool topLevel, bool inService,
                         const Token& kw) {
    if (inService)
      throw ParseError(ErrorCode::XQueryFilterInService,
                       "XQueryFILTER is not allowed inside SERVICE", kw.line,
                       kw.col);
    if (!topLevel)
      throw ParseError(ErrorCode::XQueryFilterInService,
                       "XQueryFILTER is only allowed in the top-level group",
                       kw.line, kw.col);
    if (seenXQueryFilter_)
      throw ParseError(ErrorCode::MultipleXQueryFilters,
                       "at most one XQueryFILTER per query", kw.line, kw.col);
    seenXQueryFilter_ = true;
    expect(Tok::LParen);
    int bodyLine = 0, bodyCol = 0;
    std::string body = lexer_.scanBalancedParens(bodyLine, bodyCol);
    FlwrParser flwr(body, bodyLine, bodyCol);
    XQueryFilterClause clause;
    clause.body = flwr.parseQuery();
    if (clause.body.countWrapped)
      throw ParseError(ErrorCode::SyntaxError,
                       "count(...) probe form is not allowed in XQueryFILTER",
                       bodyLine, bodyCol);
    std::set<Variable> vars = sparqlVariables(clause.body);
    if (vars.empty())
      throw ParseError(ErrorCode::NoSparqlVarInXQuery,
                       "XQueryFILTER body must reference exactly one SPARQL "
                       "variable, found none",
                       bodyLine, bodyCol);
    if (vars.size() > 1)
      throw ParseError(ErrorCode::MultipleSparqlVarsInXQuery,
                       "XQueryFILTER body must reference exactly one SPARQL "
                       "variable, found " + std::to_string(vars.size()),
                       bodyLine, bodyCol);
    if (!hasBooleanReturn(clause.body))
      throw ParseError(ErrorCode::NonBooleanReturn,
                       "XQueryFILTER RETURN must be boolean-valued (contains, "
                       "exists, not, a comparison or a boolean connective)",
                       bodyLine, bodyCol);
    clause.linkVariable = *vars.begin();
    out.xqueryFilters.push_back(std::move(clause));
    if (lexer_.peek().kind == Tok::Dot) lexer_.next();
  }

  static void collectFilterVars(const FilterExpr& e, std::set<Variable>& out) {
    if (e.kind == FilterExpr::Kind::Var) out.insert(Variable{e.value});
    for (const auto& a : e.args) collectFilterVars(a, out);
  }

  /// Filter variables must be bound by triples of their group (any nesting
  /// level) or an enclosing one.
  void validateFilterScope(const GraphPattern& p, std::set<Variable> scope) {
    std::set<Variable> own = tripleVariables(p);
    scope.insert(own.begin(), own.end());
    for (const auto& f : p.filters) {
      std::set<Variable> used;
      collectFilterVars(f, used);
      for (const auto& v : used)
        if (!scope.count(v))
          throw ParseError(ErrorCode::SyntaxError,
                           "FILTER references ?" + v.name +
                               ", which no triple pattern binds",
                           1, 1);
    }
    for (const auto& svc : p.services) validateFilterScope(svc.inner, scope);
    for (const auto& branch : p.unions) validateFilterScope(branch, scope);
  }

  GraphPattern parseGroupBody(bool topLevel, bool inService) {
    GraphPattern out;
    while (true) {
      const Token& t = lexer_.peek();
      switch (t.kind) {
        case Tok::RBrace:
        case Tok::Eof:
          return out;
        case Tok::Var:
        case Tok::Iri:
        case Tok::String:
        case Tok::Number:
          parseTriplesSameSubject(out);
          break;
        case Tok::PName:
          parseTriplesSameSubject(out);
          break;
        case Tok::Ident: {
          if (ciEqual(t.text, "filter")) {
            lexer_.next();
            parseFilter(out);
          } else if (ciEqual(t.text, "service")) {
            lexer_.next();
            parseService(out);
          } else if (ciEqual(t.text, "xqueryfilter")) {
            Token kw = lexer_.next();
            parseXQueryFilter(out, topLevel, inService, kw);
          } else if (ciEqual(t.text, "union")) {
            errorAt(t, "UNION without a preceding group");
          } else {
            errorAt(t, "unexpected identifier '" + t.text + "' in group",
                    {"FILTER", "SERVICE", "XQueryFILTER", "triple pattern"});
          }
          break;
        }
        case Tok::LBrace: {
          if (!out.unions.empty())
            errorAt(t, "only one UNION chain per group is supported");
          out.unions.push_back(parseGroup(false, inService));
          while (peekKeyword("union")) {
            lexer_.next();
            out.unions.push_back(parseGroup(false, inService));
          }
          break;
        }
        default:
          errorAt(t, "unexpected token in group");
      }
    }
  }

  GraphPattern parseGroup(bool topLevel, bool inService) {
    expect(Tok::LBrace);
    GraphPattern out = parseGroupBody(topLevel, inService);
    expect(Tok::RBrace);
    return out;
  }

  void validate(const ExtendedQuery& q) {
    validateFilterScope(q.where, {});
    for (const auto& clause : q.where.xqueryFilters) {
      std::set<Variable> bound;
      for (const auto& tp : q.where.triples) {
        if (const auto* v = std::get_if<Variable>(&tp.subject)) bound.insert(*v);
        if (const auto* v = std::get_if<Variable>(&tp.predicate)) bound.insert(*v);
        if (const auto* v = std::get_if<Variable>(&tp.object)) bound.insert(*v);
      }
      if (!bound.count(clause.linkVariable))
        throw ParseError(ErrorCode::LinkVarNotInPattern,
                         "XQueryFILTER variable ?" + clause.linkVariable.name +
                             " does not occur in the surrounding triples",
                         1, 1);
    }
  }

  SparqlLexer lexer_;
  PrefixMap prefixes_;
  std::string_view source_;
  bool seenXQueryFilter_ = false;
};

}  // namespace

ExtendedQuery parseExtendedQuery(const std::string& text,
                                 const PrefixMap& prefixes) {
  SparqlParser parser(text, prefixes);
  return parser.parseQuery();
}

FlwrQuery parseFlwr(const std::string& text) {
  FlwrParser parser(text, 1, 1);
  return parser.parseQuery();
}

DecomposedQuery decompose(const ExtendedQuery& q) {
  if (q.where.xqueryFilters.empty())
    throw MediatorError(ErrorCode::NoXQueryFilter, Stage::Parse,
                        "query has no XQueryFILTER clause");
  DecomposedQuery d;
  d.sparqlInstance = q;
  d.sparqlInstance.where.xqueryFilters.clear();
  d.xqueryInstance = q.where.xqueryFilters.front().body;
  d.linkVariable = q.where.xqueryFilters.front().linkVariable;
  return d;
}

}  // namespace xqfed
