#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "edskit/errors.hpp"
#include "edskit/generator.hpp"
#include "edskit/jet.hpp"
#include "edskit/variational.hpp"

namespace edskit::dsl {

struct Position {
  int line = 1;
  int column = 1;
};

/// Lexical, syntax or unknown-function error with the offending position.
class ParseError : public SchemaError {
 public:
  ParseError(const std::string& message, Position pos)
      : SchemaError(message + " at line " + std::to_string(pos.line) + ", column " + std::to_string(pos.column)),
        pos_(pos) {}
  Position position() const noexcept { return pos_; }

 private:
  Position pos_;
};

enum class Kind { Number, Identifier, Negate, Add, Subtract, Multiply, Divide, Power, Call, Vector };

/// Expression tree node. Children are shared so trees can be copied cheaply.
struct Expr {
  Kind kind = Kind::Number;
  double number = 0.0;
  std::string name;  // identifier or function name
  std::vector<std::shared_ptr<const Expr>> args;
  Position pos;
};

using ExprPtr = std::shared_ptr<const Expr>;

/// Nesting limit of the recursive-descent parser.
inline constexpr int kMaxDepth = 256;

/// Parses one expression:
///   expr   := term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := atom ('^' factor)?
///   atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')' | '-' atom
///           | '[' expr (',' expr)* ']'
ExprPtr parse(const std::string& text);

/// Fully parenthesized rendering that parses back to an equal tree.
std::string to_string(const Expr& e);

/// Checked expression ready for evaluation over a jet layout.
class Compiled {
 public:
  /// Throws SchemaError on unknown identifiers or kind/arity mismatches.
  Compiled(ExprPtr expr, JetLayoutPtr jet);

  const Expr& expr() const noexcept { return *expr_; }
  /// Highest jet order read and the first identifier reaching it.
  int order() const noexcept { return order_; }
  const std::string& order_identifier() const noexcept { return order_identifier_; }

  TaylorScalar evaluate(std::span<const TaylorScalar> bindings) const;
  double evaluate(const JetPoint& p) const;
  /// Smallest |denominator| (|base| for powers with negative or fractional exponent).
  double margin(const JetPoint& p) const;

  ScalarField field(std::string description) const;

 private:
  ExprPtr expr_;
  JetLayoutPtr jet_;
  int order_ = 0;
  std::string order_identifier_;
  std::vector<const Expr*> denominators_;
  std::shared_ptr<const std::unordered_map<const Expr*, double>> exponents_;
};

// --- documents --------------------------------------------------------------

struct Model {
  enum class Type { Triple, System, Lagrangian };
  Type type = Type::System;
  JetLayoutPtr jet;
  std::vector<double> params;
  std::optional<FieldTriple> triple;
  std::optional<ThirdOrderSystem> system;
  std::optional<LagrangianField> lagrangian;

  /// The system described by the document (assembled or Euler-Poisson if needed).
  ThirdOrderSystem to_system() const;
  /// The triple (extracted if the document holds a system or Lagrangian).
  FieldTriple to_triple() const;
};

/// Parses and validates a model document (JSON text).
Model load_model(const std::string& json_text);
Model load_model_file(const std::string& path);

struct GeneratorDoc {
  std::string tau;
  std::vector<std::string> xi;
  std::map<std::string, std::string> param_action;
  std::vector<std::pair<std::string, double>> parameters;
};

GeneratorDoc load_generator_doc(const std::string& json_text);
GeneratorDoc load_generator_doc_file(const std::string& path);
/// Compiles the generator against a layout; coefficients may read t, x and parameters.
Generator bind_generator(const GeneratorDoc& doc, const JetLayoutPtr& jet);

/// Point document {"t", "x", "v", "vp", "vpp", "params": {name: value}}; missing
/// coordinates are zero and missing parameters take `defaults` (or zero).
JetPoint load_point(const std::string& json_text, const JetLayout& jet, const std::vector<double>& defaults = {});
JetPoint load_point_file(const std::string& path, const JetLayout& jet, const std::vector<double>& defaults = {});

std::string read_file(const std::string& path);

}  // namespace edskit::dsl
