#pragma once
// Expression language for entire transcendental functions: parser, exact
// symbolic derivative, and a flat compiled evaluator with exp saturation.
// Entirety is enforced syntactically: division only by nonzero constants,
// log/sqrt only of constant sub-trees (folded at parse time).

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "pinch/plane.hpp"

namespace pinch {

enum class NodeKind : std::uint8_t {
  constant,
  variable,  // z
  neg,
  add,
  sub,
  mul,
  div_const,  // right child constant, nonzero
  exp_fn,
  sin_fn,
  cos_fn,
};

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  NodeKind kind;
  cplx value{0.0, 0.0};  // constant payload
  ExprPtr a, b;
};

struct Expr {
  ExprPtr root;
  bool valid() const { return root != nullptr; }
};

// Node factories (with trivial constant folding on neg/add/sub/mul).
Expr expr_const(cplx c);
Expr expr_z();
Expr expr_neg(Expr a);
Expr expr_add(Expr a, Expr b);
Expr expr_sub(Expr a, Expr b);
Expr expr_mul(Expr a, Expr b);
Expr expr_div(Expr a, Expr b_const);
Expr expr_exp(Expr a);
Expr expr_sin(Expr a);
Expr expr_cos(Expr a);

struct ParseError : std::runtime_error {
  size_t position;
  ParseError(const std::string& msg, size_t pos)
      : std::runtime_error(msg + " (at position " + std::to_string(pos) + ")"), position(pos) {}
};

// Grammar: expr := term (('+'|'-') term)* ; term := unary (('*'|'/') unary)* ;
// unary := '-' unary | primary ; primary := number | 'pi' | 'i' | 'z' |
// func '(' expr ')' | '(' expr ')' ; func := exp|sin|cos|log|sqrt.
Expr parse(const std::string& text);

Expr differentiate(const Expr& e);
std::string to_string(const Expr& e);
bool expr_equal(const Expr& a, const Expr& b);
bool is_constant_expr(const Expr& e);

// exp arguments with real part beyond this bound saturate: the flag is set
// and the argument is clamped, yielding a finite marker value near 1e304.
constexpr double kExpSaturationRe = 700.0;

// Flat postfix program; an order of magnitude faster than tree walking in
// the per-pixel iteration loops.
class CompiledExpr {
 public:
  CompiledExpr() = default;
  explicit CompiledExpr(const Expr& e);
  cplx eval(cplx z, bool& saturated) const;
  cplx eval(cplx z) const {
    bool s = false;
    return eval(z, s);
  }

 private:
  struct Op {
    NodeKind code;
    cplx k;
  };
  std::vector<Op> ops_;
  int depth_need_ = 0;
};

cplx eval_expr(const Expr& e, cplx z, bool& saturated);

// A parsed function bundled with its exact derivative and the singular-value
// seeds the probes need.
struct EntireMap {
  std::string name;
  Expr f;
  Expr df;
  CompiledExpr cf;
  CompiledExpr cdf;
  std::vector<cplx> critical_seeds;      // representative critical points
  std::vector<cplx> asymptotic_values;   // declared finite asymptotic values
  bool periodic_2pii = false;            // inverse branches differ by 2*pi*i translates

  cplx eval(cplx z) const { return cf.eval(z); }
  cplx eval(cplx z, bool& sat) const { return cf.eval(z, sat); }
  cplx deriv(cplx z) const { return cdf.eval(z); }
  cplx deriv(cplx z, bool& sat) const { return cdf.eval(z, sat); }
};

EntireMap make_entire_map(const std::string& name, const Expr& e);
EntireMap make_entire_map(const std::string& name, const std::string& text);

// Named examples: bergweiler, fatou, baker-dominguez, hyp2, parabolic.
EntireMap catalog(const std::string& name);
std::vector<std::string> catalog_names();

}  // namespace pinch
