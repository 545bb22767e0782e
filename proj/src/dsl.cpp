#include "edskit/dsl.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace edskit::dsl {

namespace {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------- lexer ----

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, LBracket, RBracket, Comma, End };

struct Token {
  Tok type = Tok::End;
  std::string text;
  double number = 0.0;
  Position pos;
};

const char* token_name(Tok t) {
  switch (t) {
    case Tok::Number: return "number";
    case Tok::Ident: return "identifier";
    case Tok::Plus: return "'+'";
    case Tok::Minus: return "'-'";
    case Tok::Star: return "'*'";
    case Tok::Slash: return "'/'";
    case Tok::Caret: return "'^'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::LBracket: return "'['";
    case Tok::RBracket: return "']'";
    case Tok::Comma: return "','";
    case Tok::End: return "end of input";
  }
  return "?";
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool is_ident_char(char c) { return is_ident_start(c) || is_digit(c); }

std::vector<Token> lex(const std::string& s) {
  std::vector<Token> out;
  Position pos;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (s[i] == '\n') {
        ++pos.line;
        pos.column = 1;
      } else {
        ++pos.column;
      }
    }
  };
  while (i < s.size()) {
    const char c = s[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      advance(1);
      continue;
    }
    Token tok;
    tok.pos = pos;
    if (is_digit(c) || (c == '.' && i + 1 < s.size() && is_digit(s[i + 1]))) {
      std::size_t j = i;
      while (j < s.size() && is_digit(s[j])) ++j;
      if (j < s.size() && s[j] == '.') {
        ++j;
        while (j < s.size() && is_digit(s[j])) ++j;
      }
      if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
        if (k < s.size() && is_digit(s[k])) {
          while (k < s.size() && is_digit(s[k])) ++k;
          j = k;
        } else {
          throw ParseError("malformed exponent in number", pos);
        }
      }
      tok.type = Tok::Number;
      tok.text = s.substr(i, j - i);
      auto r = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), tok.number);
      if (r.ec != std::errc() || !std::isfinite(tok.number)) throw ParseError("number out of range", pos);
      advance(j - i);
    } else if (is_ident_start(c)) {
      std::size_t j = i;
      while (j < s.size() && is_ident_char(s[j])) ++j;
      tok.type = Tok::Ident;
      tok.text = s.substr(i, j - i);
      advance(j - i);
    } else {
      switch (c) {
        case '+': tok.type = Tok::Plus; break;
        case '-': tok.type = Tok::Minus; break;
        case '*': tok.type = Tok::Star; break;
        case '/': tok.type = Tok::Slash; break;
        case '^': tok.type = Tok::Caret; break;
        case '(': tok.type = Tok::LParen; break;
        case ')': tok.type = Tok::RParen; break;
        case '[': tok.type = Tok::LBracket; break;
        case ']': tok.type = Tok::RBracket; break;
        case ',': tok.type = Tok::Comma; break;
        default: {
          std::string shown = (static_cast<unsigned char>(c) < 0x20 || static_cast<unsigned char>(c) >= 0x7f)
                                  ? "byte 0x" + [&] {
                                      std::ostringstream os;
                                      os << std::hex << static_cast<int>(static_cast<unsigned char>(c));
                                      return os.str();
                                    }()
                                  : std::string("'") + c + "'";
          throw ParseError("unexpected character " + shown, pos);
        }
      }
      tok.text = std::string(1, c);
      advance(1);
    }
    out.push_back(std::move(tok));
  }
  Token end;
  end.type = Tok::End;
  end.pos = pos;
  out.push_back(end);
  return out;
}

// --------------------------------------------------------------- parser ----

struct FunctionInfo {
  const char* name;
  int arity;
};

constexpr FunctionInfo kFunctions[] = {{"sqrt", 1}, {"abs", 1},   {"sin", 1},   {"cos", 1},
                                       {"exp", 1},  {"dot", 2},   {"cross", 2}, {"norm2", 1}};

const FunctionInfo* find_function(const std::string& name) {
  for (const auto& f : kFunctions)
    if (name == f.name) return &f;
  return nullptr;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  ExprPtr parse_all() {
    ExprPtr e = expr();
    if (peek().type != Tok::End) fail("unexpected " + describe(peek()));
    return e;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  Token take() { return toks_[pos_++]; }
  bool accept(Tok t) {
    if (peek().type != t) return false;
    ++pos_;
    return true;
  }
  void expect(Tok t) {
    if (!accept(t)) fail(std::string("expected ") + token_name(t) + ", found " + describe(peek()));
  }
  static std::string describe(const Token& t) {
    if (t.type == Tok::Number || t.type == Tok::Ident) return std::string(token_name(t.type)) + " '" + t.text + "'";
    return token_name(t.type);
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, peek().pos); }

  struct DepthGuard {
    Parser& p;
    explicit DepthGuard(Parser& parser) : p(parser) {
      if (++p.depth_ > kMaxDepth) p.fail("expression nested deeper than " + std::to_string(kMaxDepth));
    }
    ~DepthGuard() { --p.depth_; }
  };

  static ExprPtr node(Kind k, Position pos, std::vector<ExprPtr> args, std::string name = {}, double number = 0.0) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->pos = pos;
    e->args = std::move(args);
    e->name = std::move(name);
    e->number = number;
    return e;
  }

  ExprPtr expr() {
    DepthGuard guard(*this);
    ExprPtr lhs = term();
    for (;;) {
      const Position pos = peek().pos;
      if (accept(Tok::Plus)) {
        lhs = node(Kind::Add, pos, {lhs, term()});
      } else if (accept(Tok::Minus)) {
        lhs = node(Kind::Subtract, pos, {lhs, term()});
      } else {
        return lhs;
      }
    }
  }

  ExprPtr term() {
    DepthGuard guard(*this);
    ExprPtr lhs = factor();
    for (;;) {
      const Position pos = peek().pos;
      if (accept(Tok::Star)) {
        lhs = node(Kind::Multiply, pos, {lhs, factor()});
      } else if (accept(Tok::Slash)) {
        lhs = node(Kind::Divide, pos, {lhs, factor()});
      } else {
        return lhs;
      }
    }
  }

  ExprPtr factor() {
    DepthGuard guard(*this);
    ExprPtr base = atom();
    const Position pos = peek().pos;
    if (accept(Tok::Caret)) return node(Kind::Power, pos, {base, factor()});
    return base;
  }

  ExprPtr atom() {
    DepthGuard guard(*this);
    const Token& t = peek();
    const Position pos = t.pos;
    switch (t.type) {
      case Tok::Number: {
        const double value = take().number;
        return node(Kind::Number, pos, {}, {}, value);
      }
      case Tok::Minus:
        take();
        return node(Kind::Negate, pos, {atom()});
      case Tok::LParen: {
        take();
        ExprPtr e = expr();
        expect(Tok::RParen);
        return e;
      }
      case Tok::LBracket: {
        take();
        std::vector<ExprPtr> elems{expr()};
        while (accept(Tok::Comma)) elems.push_back(expr());
        expect(Tok::RBracket);
        return node(Kind::Vector, pos, std::move(elems));
      }
      case Tok::Ident: {
        std::string name = take().text;
        if (peek().type != Tok::LParen) return node(Kind::Identifier, pos, {}, std::move(name));
        const FunctionInfo* fn = find_function(name);
        if (!fn) throw ParseError("unknown function '" + name + "'", pos);
        take();
        std::vector<ExprPtr> args{expr()};
        while (accept(Tok::Comma)) args.push_back(expr());
        expect(Tok::RParen);
        if (static_cast<int>(args.size()) != fn->arity)
          throw ParseError("function '" + name + "' takes " + std::to_string(fn->arity) + " argument(s), got " +
                               std::to_string(args.size()),
                           pos);
        return node(Kind::Call, pos, std::move(args), std::move(name));
      }
      default:
        fail("unexpected " + describe(t));
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int depth_ = 0;
};

std::string format_number(double d) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, r.ptr);
}

}  // namespace

ExprPtr parse(const std::string& text) { return Parser(lex(text)).parse_all(); }

std::string to_string(const Expr& e) {
  auto bin = [&](const char* op) { return "(" + to_string(*e.args[0]) + " " + op + " " + to_string(*e.args[1]) + ")"; };
  switch (e.kind) {
    case Kind::Number: return format_number(e.number);
    case Kind::Identifier: return e.name;
    case Kind::Negate: return "(-" + to_string(*e.args[0]) + ")";
    case Kind::Add: return bin("+");
    case Kind::Subtract: return bin("-");
    case Kind::Multiply: return bin("*");
    case Kind::Divide: return bin("/");
    case Kind::Power: return "(" + to_string(*e.args[0]) + "^" + to_string(*e.args[1]) + ")";
    case Kind::Call:
    case Kind::Vector: {
      std::string s = e.kind == Kind::Call ? e.name + "(" : "[";
      for (std::size_t i = 0; i < e.args.size(); ++i) s += (i ? ", " : "") + to_string(*e.args[i]);
      return s + (e.kind == Kind::Call ? ")" : "]");
    }
  }
  return {};
}

// ------------------------------------------------------------- compiler ----

namespace {

[[noreturn]] void semantic_error(const std::string& msg, Position pos) {
  throw SchemaError(msg + " at line " + std::to_string(pos.line) + ", column " + std::to_string(pos.column));
}

struct Resolved {
  int coord = -1;  // scalar coordinate
  int block = -1;  // vector block level (0 x, 1 v, 2 vp, 3 vpp)
};

std::optional<Resolved> resolve(const std::string& name, const JetLayout& jet) {
  if (name == "t") return Resolved{0, -1};
  static const char* prefixes[] = {"x", "v", "vp", "vpp"};
  for (int level = 3; level >= 0; --level) {
    const std::string pre = prefixes[level];
    if (name == pre) return Resolved{-1, level};
    if (name.size() > pre.size() && name.compare(0, pre.size(), pre) == 0) {
      const std::string digits = name.substr(pre.size());
      if (!std::all_of(digits.begin(), digits.end(), is_digit) || digits[0] == '0') continue;
      if (digits.size() > 6) return std::nullopt;
      const int k = std::stoi(digits);
      if (k >= 1 && k <= jet.q()) return Resolved{jet.level(level, k - 1), -1};
      return std::nullopt;
    }
  }
  const int p = jet.param_index(name);
  if (p >= 0) return Resolved{jet.param(p), -1};
  return std::nullopt;
}

struct Value {
  bool vector = false;
  TaylorScalar s;
  std::vector<TaylorScalar> v;
};

bool is_constant(const Expr& e) {
  if (e.kind == Kind::Identifier || e.kind == Kind::Call || e.kind == Kind::Vector) return false;
  for (const auto& x : e.args)
    if (!is_constant(*x)) return false;
  return true;
}

// Evaluates a constant (identifier-free) scalar subexpression.
double constant_value(const Expr& e) {
  switch (e.kind) {
    case Kind::Number: return e.number;
    case Kind::Negate: return -constant_value(*e.args[0]);
    case Kind::Add: return constant_value(*e.args[0]) + constant_value(*e.args[1]);
    case Kind::Subtract: return constant_value(*e.args[0]) - constant_value(*e.args[1]);
    case Kind::Multiply: return constant_value(*e.args[0]) * constant_value(*e.args[1]);
    case Kind::Divide: {
      const double d = constant_value(*e.args[1]);
      if (std::abs(d) < kSingularThreshold) semantic_error("division by zero in a constant exponent", e.pos);
      return constant_value(*e.args[0]) / d;
    }
    case Kind::Power: return std::pow(constant_value(*e.args[0]), constant_value(*e.args[1]));
    default: semantic_error("exponent must be a numeric constant expression", e.pos);
  }
}

struct Checker {
  const JetLayout& jet;
  int order = 0;
  std::string order_identifier;
  std::vector<const Expr*> denominators;
  std::unordered_map<const Expr*, double> exponents;

  // returns 0 for scalars, otherwise the vector dimension
  int check(const Expr& e) {
    switch (e.kind) {
      case Kind::Number: return 0;
      case Kind::Identifier: {
        auto r = resolve(e.name, jet);
        if (!r) semantic_error("unknown identifier '" + e.name + "'", e.pos);
        const int level = r->coord >= 0 ? jet.order_of(r->coord) : r->block;
        if (level > order || order_identifier.empty()) {
          if (level > order || (level == order && order_identifier.empty())) {
            order = std::max(order, level);
            order_identifier = e.name;
          }
        }
        return r->coord >= 0 ? 0 : jet.q();
      }
      case Kind::Negate: return check(*e.args[0]);
      case Kind::Add:
      case Kind::Subtract: {
        const int a = check(*e.args[0]), b = check(*e.args[1]);
        if (a != b) semantic_error("operands of '" + std::string(e.kind == Kind::Add ? "+" : "-") +
                                       "' have different shapes (" + shape(a) + " and " + shape(b) + ")",
                                   e.pos);
        return a;
      }
      case Kind::Multiply: {
        const int a = check(*e.args[0]), b = check(*e.args[1]);
        if (a && b) semantic_error("'*' of two vectors; use dot or cross", e.pos);
        return a ? a : b;
      }
      case Kind::Divide: {
        const int a = check(*e.args[0]), b = check(*e.args[1]);
        if (b) semantic_error("division by a vector", e.pos);
        denominators.push_back(e.args[1].get());
        return a;
      }
      case Kind::Power: {
        const int a = check(*e.args[0]);
        if (a) semantic_error("'^' needs a scalar base", e.pos);
        if (!is_constant(*e.args[1])) {
          if (check(*e.args[1])) semantic_error("'^' needs a scalar exponent", e.args[1]->pos);
          denominators.push_back(e.args[0].get());
          return 0;
        }
        const double p = constant_value(*e.args[1]);
        if (!std::isfinite(p)) semantic_error("exponent is not finite", e.args[1]->pos);
        exponents[&e] = p;
        if (p < 0.0 || std::nearbyint(p) != p) denominators.push_back(e.args[0].get());
        return 0;
      }
      case Kind::Vector: {
        for (const auto& x : e.args)
          if (check(*x)) semantic_error("vector literal entries must be scalars", x->pos);
        return static_cast<int>(e.args.size());
      }
      case Kind::Call: {
        std::vector<int> k;
        for (const auto& x : e.args) k.push_back(check(*x));
        const std::string& f = e.name;
        if (f == "dot") {
          if (!k[0] || k[0] != k[1]) semantic_error("dot needs two vectors of equal length", e.pos);
          return 0;
        }
        if (f == "cross") {
          if (k[0] != 3 || k[1] != 3) semantic_error("cross needs two 3-vectors", e.pos);
          return 3;
        }
        if (f == "norm2") {
          if (!k[0]) semantic_error("norm2 needs a vector", e.pos);
          return 0;
        }
        if (k[0]) semantic_error(f + " needs a scalar argument", e.pos);
        return 0;
      }
    }
    return 0;
  }

  static std::string shape(int k) { return k ? "vector of " + std::to_string(k) : "scalar"; }
};

struct Evaluator {
  const JetLayout& jet;
  std::span<const TaylorScalar> b;
  const std::unordered_map<const Expr*, double>& exponents;

  Value scalar(TaylorScalar s) const { return {false, std::move(s), {}}; }

  Value eval(const Expr& e) const {
    switch (e.kind) {
      case Kind::Number: return scalar(TaylorScalar(e.number));
      case Kind::Identifier: {
        auto r = resolve(e.name, jet);
        if (r->coord >= 0) return scalar(b[r->coord]);
        Value out{true, {}, {}};
        for (int a = 0; a < jet.q(); ++a) out.v.push_back(b[jet.level(r->block, a)]);
        return out;
      }
      case Kind::Negate: {
        Value x = eval(*e.args[0]);
        if (!x.vector) return scalar(-x.s);
        for (auto& c : x.v) c = -c;
        return x;
      }
      case Kind::Add:
      case Kind::Subtract: {
        Value x = eval(*e.args[0]);
        const Value y = eval(*e.args[1]);
        const bool add = e.kind == Kind::Add;
        if (!x.vector) return scalar(add ? x.s + y.s : x.s - y.s);
        for (std::size_t i = 0; i < x.v.size(); ++i) x.v[i] = add ? x.v[i] + y.v[i] : x.v[i] - y.v[i];
        return x;
      }
      case Kind::Multiply: {
        Value x = eval(*e.args[0]);
        Value y = eval(*e.args[1]);
        if (!x.vector && !y.vector) return scalar(x.s * y.s);
        if (x.vector) std::swap(x, y);
        for (auto& c : y.v) c = x.s * c;
        return y;
      }
      case Kind::Divide: {
        Value x = eval(*e.args[0]);
        const Value y = eval(*e.args[1]);
        if (!x.vector) return scalar(x.s / y.s);
        const TaylorScalar inv = 1.0 / y.s;
        for (auto& c : x.v) c = c * inv;
        return x;
      }
      case Kind::Power: {
        const TaylorScalar base = eval(*e.args[0]).s;
        if (const auto it = exponents.find(&e); it != exponents.end()) return scalar(pow(base, it->second));
        return scalar(exp(eval(*e.args[1]).s * log(base)));
      }
      case Kind::Vector: {
        Value out{true, {}, {}};
        for (const auto& x : e.args) out.v.push_back(eval(*x).s);
        return out;
      }
      case Kind::Call: {
        const std::string& f = e.name;
        const Value x = eval(*e.args[0]);
        if (f == "dot" || f == "cross") {
          const Value y = eval(*e.args[1]);
          if (f == "dot") {
            TaylorScalar s(0.0);
            for (std::size_t i = 0; i < x.v.size(); ++i) s += x.v[i] * y.v[i];
            return scalar(s);
          }
          const auto& a = x.v;
          const auto& c = y.v;
          return {true, {}, {a[1] * c[2] - a[2] * c[1], a[2] * c[0] - a[0] * c[2], a[0] * c[1] - a[1] * c[0]}};
        }
        if (f == "norm2") {
          TaylorScalar s(0.0);
          for (const auto& c : x.v) s += c * c;
          return scalar(sqrt(s));
        }
        if (f == "sqrt") return scalar(sqrt(x.s));
        if (f == "abs") return scalar(abs(x.s));
        if (f == "sin") return scalar(sin(x.s));
        if (f == "cos") return scalar(cos(x.s));
        if (f == "exp") return scalar(exp(x.s));
        throw SchemaError("unknown function '" + f + "'");
      }
    }
    throw SchemaError("corrupt expression");
  }
};

}  // namespace

Compiled::Compiled(ExprPtr expr, JetLayoutPtr jet) : expr_(std::move(expr)), jet_(std::move(jet)) {
  Checker c{*jet_, 0, {}, {}, {}};
  if (c.check(*expr_)) semantic_error("expression is a vector; a scalar is required", expr_->pos);
  order_ = c.order;
  order_identifier_ = c.order_identifier;
  denominators_ = std::move(c.denominators);
  exponents_ = std::make_shared<const std::unordered_map<const Expr*, double>>(std::move(c.exponents));
}

TaylorScalar Compiled::evaluate(std::span<const TaylorScalar> bindings) const {
  return Evaluator{*jet_, bindings, *exponents_}.eval(*expr_).s;
}

double Compiled::evaluate(const JetPoint& p) const {
  const auto b = constant_bindings(p);
  return evaluate(std::span<const TaylorScalar>(b)).value();
}

double Compiled::margin(const JetPoint& p) const {
  double m = std::numeric_limits<double>::infinity();
  if (denominators_.empty()) return m;
  const auto b = constant_bindings(p);
  const Evaluator ev{*jet_, b, *exponents_};
  for (const Expr* d : denominators_) {
    try {
      m = std::min(m, std::abs(ev.eval(*d).s.value()));
    } catch (const Error&) {
      return 0.0;
    }
  }
  return m;
}

namespace {

bool has_identifier(const Expr& e) {
  if (e.kind == Kind::Identifier) return true;
  return std::any_of(e.args.begin(), e.args.end(), [](const ExprPtr& a) { return has_identifier(*a); });
}

}  // namespace

ScalarField Compiled::field(std::string description) const {
  if (!has_identifier(*expr_)) {
    // constant fields let prolongation drop vanishing terms
    const std::vector<TaylorScalar> none(jet_->size(), TaylorScalar(0.0));
    try {
      const double value = evaluate(std::span<const TaylorScalar>(none)).value();
      return ScalarField::constant(jet_, value).with_description(std::move(description));
    } catch (const Error&) {
    }
  }
  auto self = std::make_shared<const Compiled>(*this);
  return ScalarField(
      jet_, order_, [self](std::span<const TaylorScalar> b) { return self->evaluate(b); }, std::move(description));
}

// ------------------------------------------------------------ documents ----

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

namespace {

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaError(what + " is not valid JSON: " + e.what());
  }
}

void require_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& what) {
  if (!j.is_object()) throw SchemaError(what + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; }) == allowed.end())
      throw SchemaError(what + ": unexpected key '" + it.key() + "'");
  }
}

std::string entry_text(const json& j, const std::string& where) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number()) return format_number(j.get<double>());
  throw SchemaError(where + " must be an expression string or a number");
}

Compiled compile_entry(const json& j, const JetLayoutPtr& jet, const std::string& where, int max_order) {
  const std::string text = entry_text(j, where);
  ExprPtr e;
  try {
    e = parse(text);
  } catch (const ParseError& err) {
    throw ParseError(where + ": " + err.what(), err.position());
  }
  Compiled c(e, jet);
  if (c.order() > max_order) throw JetOrderViolation(where, c.order_identifier());
  return c;
}

bool reserved_name(const std::string& name, int q) {
  JetLayout probe(q);
  return resolve(name, probe).has_value() || find_function(name) != nullptr;
}

std::vector<std::pair<std::string, double>> read_parameters(const json& j, int q, const std::string& what) {
  std::vector<std::pair<std::string, double>> out;
  if (j.is_null()) return out;
  if (!j.is_object()) throw SchemaError(what + ": \"parameters\" must be an object of numbers");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& name = it.key();
    if (name.empty() || !is_ident_start(name[0]) || !std::all_of(name.begin(), name.end(), is_ident_char))
      throw SchemaError(what + ": parameter name '" + name + "' is not an identifier");
    if (reserved_name(name, q)) throw SchemaError(what + ": parameter name '" + name + "' is reserved");
    if (!it.value().is_number()) throw SchemaError(what + ": parameter '" + name + "' must be a number");
    out.emplace_back(name, it.value().get<double>());
  }
  return out;
}

const json& array_of(const json& j, std::size_t n, const std::string& where) {
  if (!j.is_array() || j.size() != n)
    throw SchemaError(where + " must be an array of " + std::to_string(n) + " entries");
  return j;
}

MarginFn combine_margins(std::vector<Compiled> parts) {
  auto shared = std::make_shared<const std::vector<Compiled>>(std::move(parts));
  return [shared](const JetPoint& p) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& c : *shared) m = std::min(m, c.margin(p));
    return m;
  };
}

}  // namespace

Model load_model(const std::string& json_text) {
  const json doc = parse_json(json_text, "model document");
  require_keys(doc, {"q", "parameters", "triple", "system", "lagrangian", "description"}, "model document");
  if (!doc.contains("q") || !doc["q"].is_number_integer() || doc["q"].get<long long>() < 1 ||
      doc["q"].get<long long>() > 64)
    throw SchemaError("model document: \"q\" must be an integer in 1..64");
  const int q = doc["q"].get<int>();
  const int kinds = static_cast<int>(doc.contains("triple")) + static_cast<int>(doc.contains("system")) +
                    static_cast<int>(doc.contains("lagrangian"));
  if (kinds != 1) throw SchemaError("model document needs exactly one of \"triple\", \"system\", \"lagrangian\"");

  const auto params = read_parameters(doc.contains("parameters") ? doc["parameters"] : json(), q, "model document");
  std::vector<std::string> names;
  Model model;
  for (const auto& [n, v] : params) {
    names.push_back(n);
    model.params.push_back(v);
  }
  model.jet = JetLayout::make(q, names);
  const auto& jet = model.jet;
  std::vector<Compiled> all;

  if (doc.contains("triple")) {
    const json& t = doc["triple"];
    require_keys(t, {"A", "B", "c"}, "triple");
    FieldTriple tr{jet, {}, {}, {}, model.params, {}};
    auto matrix = [&](const char* key, std::vector<std::vector<ScalarField>>& out) {
      if (!t.contains(key)) throw SchemaError(std::string("triple needs \"") + key + "\"");
      const json& m = array_of(t[key], q, std::string("triple.") + key);
      out.assign(q, std::vector<ScalarField>(q));
      for (int a = 0; a < q; ++a) {
        const json& row = array_of(m[a], q, std::string("triple.") + key + " row " + std::to_string(a + 1));
        for (int b = 0; b < q; ++b) {
          const std::string where = std::string(key) + "[" + std::to_string(a + 1) + "][" + std::to_string(b + 1) + "]";
          Compiled c = compile_entry(row[b], jet, where, 1);
          out[a][b] = c.field(where).with_order(1);
          all.push_back(std::move(c));
        }
      }
    };
    matrix("A", tr.A);
    matrix("B", tr.B);
    if (!t.contains("c")) throw SchemaError("triple needs \"c\"");
    const json& cv = array_of(t["c"], q, "triple.c");
    for (int a = 0; a < q; ++a) {
      const std::string where = "c[" + std::to_string(a + 1) + "]";
      Compiled c = compile_entry(cv[a], jet, where, 1);
      tr.c.push_back(c.field(where).with_order(1));
      all.push_back(std::move(c));
    }
    tr.margin = combine_margins(all);
    SamplePlan plan;
    plan.count = 20;
    plan.seed = 20;
    for (const auto& p : sample_points(plan, *jet, model.params, tr.margin)) {
      const double d = tr.skew_defect(p);
      if (d > 1e-10) throw SchemaError("triple.A is not skew-symmetric (defect " + format_number(d) + ")");
    }
    model.type = Model::Type::Triple;
    model.triple = std::move(tr);
  } else if (doc.contains("system")) {
    const json& s = doc["system"];
    require_keys(s, {"E"}, "system");
    if (!s.contains("E")) throw SchemaError("system needs \"E\"");
    const json& ev = array_of(s["E"], q, "system.E");
    ThirdOrderSystem sys{jet, {}, model.params, {}};
    for (int a = 0; a < q; ++a) {
      const std::string where = "E[" + std::to_string(a + 1) + "]";
      Compiled c = compile_entry(ev[a], jet, where, 3);
      sys.E.push_back(c.field(where).with_order(3));
      all.push_back(std::move(c));
    }
    sys.margin = combine_margins(all);
    model.type = Model::Type::System;
    model.system = std::move(sys);
  } else {
    const json& l = doc["lagrangian"];
    require_keys(l, {"L"}, "lagrangian");
    if (!l.contains("L")) throw SchemaError("lagrangian needs \"L\"");
    Compiled c = compile_entry(l["L"], jet, "L", 2);
    LagrangianField lag{jet, c.field("L").with_order(2), model.params, {}};
    all.push_back(std::move(c));
    lag.margin = combine_margins(all);
    check_affine(lag);
    model.type = Model::Type::Lagrangian;
    model.lagrangian = std::move(lag);
  }
  return model;
}

Model load_model_file(const std::string& path) { return load_model(read_file(path)); }

ThirdOrderSystem Model::to_system() const {
  switch (type) {
    case Type::Triple: return assemble(*triple);
    case Type::System: return *system;
    case Type::Lagrangian: return euler_poisson(*lagrangian);
  }
  throw SchemaError("empty model");
}

FieldTriple Model::to_triple() const {
  if (type == Type::Triple) return *triple;
  return extract(to_system(), {0, 1}).triple;
}

GeneratorDoc load_generator_doc(const std::string& json_text) {
  const json doc = parse_json(json_text, "generator document");
  require_keys(doc, {"tau", "xi", "param_action", "parameters", "description"}, "generator document");
  if (!doc.contains("tau") || !doc.contains("xi")) throw SchemaError("generator document needs \"tau\" and \"xi\"");
  GeneratorDoc g;
  g.tau = entry_text(doc["tau"], "tau");
  if (!doc["xi"].is_array() || doc["xi"].empty()) throw SchemaError("\"xi\" must be a nonempty array");
  for (std::size_t a = 0; a < doc["xi"].size(); ++a) g.xi.push_back(entry_text(doc["xi"][a], "xi[" + std::to_string(a + 1) + "]"));
  if (doc.contains("param_action")) {
    const json& pa = doc["param_action"];
    if (!pa.is_object()) throw SchemaError("\"param_action\" must be an object");
    for (auto it = pa.begin(); it != pa.end(); ++it) g.param_action[it.key()] = entry_text(it.value(), "param_action." + it.key());
  }
  g.parameters = read_parameters(doc.contains("parameters") ? doc["parameters"] : json(), static_cast<int>(g.xi.size()),
                                 "generator document");
  return g;
}

GeneratorDoc load_generator_doc_file(const std::string& path) { return load_generator_doc(read_file(path)); }

Generator bind_generator(const GeneratorDoc& doc, const JetLayoutPtr& jet) {
  if (static_cast<int>(doc.xi.size()) != jet->q())
    throw SchemaError("generator has " + std::to_string(doc.xi.size()) + " xi entries but the model has q = " +
                      std::to_string(jet->q()));
  Generator g;
  g.tau = compile_entry(json(doc.tau), jet, "tau", 0).field(doc.tau);
  for (int a = 0; a < jet->q(); ++a) {
    const std::string where = "xi" + std::to_string(a + 1);
    g.xi.push_back(compile_entry(json(doc.xi[a]), jet, where, 0).field(doc.xi[a]));
  }
  if (!doc.param_action.empty()) {
    g.param_action.resize(jet->num_params());
    for (const auto& [name, text] : doc.param_action) {
      const int k = jet->param_index(name);
      if (k < 0) throw SchemaError("param_action names unknown parameter '" + name + "'");
      const std::string where = "param_action." + name;
      g.param_action[k] = compile_entry(json(text), jet, where, 0).field(text);
    }
  }
  g.validate();
  return g;
}

JetPoint load_point(const std::string& json_text, const JetLayout& jet, const std::vector<double>& defaults) {
  const json doc = parse_json(json_text, "point document");
  require_keys(doc, {"t", "x", "v", "vp", "vpp", "params", "description"}, "point document");
  const int q = jet.q();
  JetPoint p = JetPoint::zeros(q, jet.num_params());
  for (int k = 0; k < jet.num_params() && k < static_cast<int>(defaults.size()); ++k) p.params[k] = defaults[k];
  if (doc.contains("t")) {
    if (!doc["t"].is_number()) throw SchemaError("point.t must be a number");
    p.t = doc["t"].get<double>();
  }
  auto block = [&](const char* key, std::vector<double>& out) {
    if (!doc.contains(key)) return;
    const json& a = doc[key];
    if (!a.is_array() || static_cast<int>(a.size()) != q)
      throw SchemaError(std::string("point.") + key + " must hold " + std::to_string(q) + " numbers");
    for (int i = 0; i < q; ++i) {
      if (!a[i].is_number()) throw SchemaError(std::string("point.") + key + " must hold numbers");
      out[i] = a[i].get<double>();
    }
  };
  block("x", p.x);
  block("v", p.v);
  block("vp", p.vp);
  block("vpp", p.vpp);
  if (doc.contains("params")) {
    const json& pa = doc["params"];
    if (!pa.is_object()) throw SchemaError("point.params must be an object");
    for (auto it = pa.begin(); it != pa.end(); ++it) {
      const int k = jet.param_index(it.key());
      if (k < 0) throw SchemaError("point.params names unknown parameter '" + it.key() + "'");
      if (!it.value().is_number()) throw SchemaError("point.params." + it.key() + " must be a number");
      p.params[k] = it.value().get<double>();
    }
  }
  if (!p.finite()) throw SchemaError("point has nonfinite entries");
  return p;
}

JetPoint load_point_file(const std::string& path, const JetLayout& jet, const std::vector<double>& defaults) {
  return load_point(read_file(path), jet, defaults);
}

}  // namespace edskit::dsl
