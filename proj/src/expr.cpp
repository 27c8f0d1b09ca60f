#include "pinch/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <sstream>

namespace pinch {

namespace {

ExprPtr node(NodeKind k, cplx v = {}, ExprPtr a = nullptr, ExprPtr b = nullptr) {
  auto n = std::make_shared<ExprNode>();
  n->kind = k;
  n->value = v;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

bool is_const_node(const ExprPtr& n) { return n && n->kind == NodeKind::constant; }

bool is_const_val(const ExprPtr& n, double re, double im = 0.0) {
  return is_const_node(n) && n->value == cplx(re, im);
}

}  // namespace

Expr expr_const(cplx c) { return {node(NodeKind::constant, c)}; }
Expr expr_z() { return {node(NodeKind::variable)}; }

Expr expr_neg(Expr a) {
  if (is_const_node(a.root)) return expr_const(-a.root->value);
  return {node(NodeKind::neg, {}, a.root)};
}

Expr expr_add(Expr a, Expr b) {
  if (is_const_val(a.root, 0.0)) return b;
  if (is_const_val(b.root, 0.0)) return a;
  if (is_const_node(a.root) && is_const_node(b.root))
    return expr_const(a.root->value + b.root->value);
  return {node(NodeKind::add, {}, a.root, b.root)};
}

Expr expr_sub(Expr a, Expr b) {
  if (is_const_val(b.root, 0.0)) return a;
  if (is_const_node(a.root) && is_const_node(b.root))
    return expr_const(a.root->value - b.root->value);
  if (is_const_val(a.root, 0.0)) return expr_neg(b);
  return {node(NodeKind::sub, {}, a.root, b.root)};
}

Expr expr_mul(Expr a, Expr b) {
  if (is_const_val(a.root, 0.0) || is_const_val(b.root, 0.0)) return expr_const(0.0);
  if (is_const_val(a.root, 1.0)) return b;
  if (is_const_val(b.root, 1.0)) return a;
  if (is_const_node(a.root) && is_const_node(b.root))
    return expr_const(a.root->value * b.root->value);
  return {node(NodeKind::mul, {}, a.root, b.root)};
}

Expr expr_div(Expr a, Expr b_const) {
  if (!is_const_node(b_const.root))
    throw std::runtime_error("non-entire construct: division by a non-constant");
  if (b_const.root->value == cplx(0.0, 0.0))
    throw std::runtime_error("division by zero constant");
  if (is_const_node(a.root)) return expr_const(a.root->value / b_const.root->value);
  return {node(NodeKind::div_const, {}, a.root, b_const.root)};
}

Expr expr_exp(Expr a) {
  if (is_const_node(a.root)) return expr_const(std::exp(a.root->value));
  return {node(NodeKind::exp_fn, {}, a.root)};
}
Expr expr_sin(Expr a) {
  if (is_const_node(a.root)) return expr_const(std::sin(a.root->value));
  return {node(NodeKind::sin_fn, {}, a.root)};
}
Expr expr_cos(Expr a) {
  if (is_const_node(a.root)) return expr_const(std::cos(a.root->value));
  return {node(NodeKind::cos_fn, {}, a.root)};
}

bool is_constant_expr(const Expr& e) { return is_const_node(e.root); }

// ---------------------------------------------------------------- parser

namespace {

struct Parser {
  const std::string& s;
  size_t pos = 0;

  explicit Parser(const std::string& text) : s(text) {}

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  bool peek(char c) {
    skip_ws();
    return pos < s.size() && s[pos] == c;
  }
  bool accept(char c) {
    if (peek(c)) {
      ++pos;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) throw ParseError(std::string("expected '") + c + "'", pos);
  }

  bool ident_ahead(const char* w) {
    skip_ws();
    size_t n = std::strlen(w);
    if (s.compare(pos, n, w) != 0) return false;
    // keyword must not continue as a longer identifier
    size_t end = pos + n;
    if (end < s.size() && (std::isalnum(static_cast<unsigned char>(s[end])) || s[end] == '_'))
      return false;
    pos = end;
    return true;
  }

  Expr parse_expr() {
    Expr e = parse_term();
    for (;;) {
      if (accept('+'))
        e = expr_add(e, parse_term());
      else if (accept('-'))
        e = expr_sub(e, parse_term());
      else
        return e;
    }
  }

  Expr parse_term() {
    Expr e = parse_unary();
    for (;;) {
      if (accept('*'))
        e = expr_mul(e, parse_unary());
      else if (accept('/')) {
        size_t at = pos;
        Expr d = parse_unary();
        if (!is_constant_expr(d))
          throw ParseError("non-entire construct: non-constant denominator", at);
        if (d.root->value == cplx(0.0, 0.0)) throw ParseError("division by zero", at);
        e = expr_div(e, d);
      } else
        return e;
    }
  }

  Expr parse_unary() {
    if (accept('-')) return expr_neg(parse_unary());
    return parse_primary();
  }

  Expr parse_primary() {
    skip_ws();
    if (pos >= s.size()) throw ParseError("unexpected end of input", pos);
    char c = s[pos];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (accept('(')) {
      Expr e = parse_expr();
      expect(')');
      return e;
    }
    if (ident_ahead("pi")) return expr_const(kPi);
    if (ident_ahead("exp")) return parse_call(NodeKind::exp_fn);
    if (ident_ahead("sin")) return parse_call(NodeKind::sin_fn);
    if (ident_ahead("cos")) return parse_call(NodeKind::cos_fn);
    if (ident_ahead("log")) return parse_const_call("log");
    if (ident_ahead("sqrt")) return parse_const_call("sqrt");
    if (ident_ahead("i")) return expr_const(cplx(0.0, 1.0));
    if (ident_ahead("z")) return expr_z();
    throw ParseError("unexpected character", pos);
  }

  Expr parse_call(NodeKind k) {
    expect('(');
    Expr a = parse_expr();
    expect(')');
    switch (k) {
      case NodeKind::exp_fn: return expr_exp(a);
      case NodeKind::sin_fn: return expr_sin(a);
      default: return expr_cos(a);
    }
  }

  Expr parse_const_call(const char* name) {
    size_t at = pos;
    expect('(');
    Expr a = parse_expr();
    expect(')');
    if (!is_constant_expr(a))
      throw ParseError(std::string("non-entire construct: ") + name + " of a non-constant", at);
    cplx v = a.root->value;
    if (std::strcmp(name, "log") == 0) {
      if (v == cplx(0.0, 0.0)) throw ParseError("log of zero", at);
      return expr_const(std::log(v));
    }
    return expr_const(std::sqrt(v));
  }

  Expr parse_number() {
    skip_ws();
    const char* start = s.c_str() + pos;
    char* end = nullptr;
    double v = std::strtod(start, &end);
    if (end == start) throw ParseError("malformed number", pos);
    pos += static_cast<size_t>(end - start);
    return expr_const(v);
  }
};

}  // namespace

Expr parse(const std::string& text) {
  Parser p(text);
  Expr e = p.parse_expr();
  p.skip_ws();
  if (p.pos != text.size()) throw ParseError("trailing input", p.pos);
  return e;
}

// ---------------------------------------------------------- derivative

Expr differentiate(const Expr& e) {
  const ExprNode* n = e.root.get();
  switch (n->kind) {
    case NodeKind::constant: return expr_const(0.0);
    case NodeKind::variable: return expr_const(1.0);
    case NodeKind::neg: return expr_neg(differentiate({n->a}));
    case NodeKind::add: return expr_add(differentiate({n->a}), differentiate({n->b}));
    case NodeKind::sub: return expr_sub(differentiate({n->a}), differentiate({n->b}));
    case NodeKind::mul:
      return expr_add(expr_mul(differentiate({n->a}), Expr{n->b}),
                      expr_mul(Expr{n->a}, differentiate({n->b})));
    case NodeKind::div_const: return expr_div(differentiate({n->a}), Expr{n->b});
    case NodeKind::exp_fn: return expr_mul(differentiate({n->a}), Expr{e.root});
    case NodeKind::sin_fn: return expr_mul(differentiate({n->a}), expr_cos(Expr{n->a}));
    case NodeKind::cos_fn:
      return expr_neg(expr_mul(differentiate({n->a}), expr_sin(Expr{n->a})));
  }
  throw std::logic_error("unreachable");
}

// ------------------------------------------------------------- printing

namespace {

void print_node(std::ostringstream& out, const ExprPtr& n);

void print_child(std::ostringstream& out, const ExprPtr& n, bool parens) {
  if (parens) out << '(';
  print_node(out, n);
  if (parens) out << ')';
}

int precedence(NodeKind k) {
  switch (k) {
    case NodeKind::add:
    case NodeKind::sub: return 1;
    case NodeKind::mul:
    case NodeKind::div_const: return 2;
    case NodeKind::neg: return 3;
    default: return 4;
  }
}

void print_const(std::ostringstream& out, cplx v) {
  char buf[64];
  if (v.imag() == 0.0) {
    std::snprintf(buf, sizeof buf, "%.17g", v.real());
    if (v.real() < 0.0) {
      out << '(' << buf << ')';
    } else {
      out << buf;
    }
  } else {
    char buf2[64];
    std::snprintf(buf, sizeof buf, "%.17g", v.real());
    std::snprintf(buf2, sizeof buf2, "%.17g", v.imag());
    out << '(' << buf << '+' << buf2 << "*i)";
  }
}

void print_node(std::ostringstream& out, const ExprPtr& n) {
  switch (n->kind) {
    case NodeKind::constant: print_const(out, n->value); return;
    case NodeKind::variable: out << 'z'; return;
    case NodeKind::neg:
      out << '-';
      print_child(out, n->a, precedence(n->a->kind) < precedence(NodeKind::neg));
      return;
    case NodeKind::add:
      print_node(out, n->a);
      out << " + ";
      print_child(out, n->b, precedence(n->b->kind) < 1);
      return;
    case NodeKind::sub:
      print_node(out, n->a);
      out << " - ";
      print_child(out, n->b, precedence(n->b->kind) <= 1);
      return;
    case NodeKind::mul:
      print_child(out, n->a, precedence(n->a->kind) < 2);
      out << '*';
      print_child(out, n->b, precedence(n->b->kind) < 2);
      return;
    case NodeKind::div_const:
      print_child(out, n->a, precedence(n->a->kind) < 2);
      out << '/';
      print_child(out, n->b, true);
      return;
    case NodeKind::exp_fn:
      out << "exp(";
      print_node(out, n->a);
      out << ')';
      return;
    case NodeKind::sin_fn:
      out << "sin(";
      print_node(out, n->a);
      out << ')';
      return;
    case NodeKind::cos_fn:
      out << "cos(";
      print_node(out, n->a);
      out << ')';
      return;
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::ostringstream out;
  print_node(out, e.root);
  return out.str();
}

bool expr_equal(const Expr& a, const Expr& b) {
  const ExprNode *x = a.root.get(), *y = b.root.get();
  if (!x || !y) return x == y;
  if (x->kind != y->kind) return false;
  if (x->kind == NodeKind::constant) return x->value == y->value;
  if (x->a && !expr_equal({x->a}, {y->a})) return false;
  if (x->b && !expr_equal({x->b}, {y->b})) return false;
  return true;
}

// ----------------------------------------------------------- evaluation

namespace {

inline cplx sat_exp(cplx w, bool& saturated) {
  if (w.real() >= kExpSaturationRe) {
    saturated = true;
    w = cplx(kExpSaturationRe, w.imag());
  }
  return std::exp(w);
}

// sin/cos grow like exp(|Im|); clamp on the same bound.
inline cplx sat_sin(cplx w, bool& saturated) {
  if (std::abs(w.imag()) >= kExpSaturationRe) {
    saturated = true;
    w = cplx(w.real(), std::copysign(kExpSaturationRe, w.imag()));
  }
  return std::sin(w);
}

inline cplx sat_cos(cplx w, bool& saturated) {
  if (std::abs(w.imag()) >= kExpSaturationRe) {
    saturated = true;
    w = cplx(w.real(), std::copysign(kExpSaturationRe, w.imag()));
  }
  return std::cos(w);
}

}  // namespace

cplx eval_expr(const Expr& e, cplx z, bool& saturated) {
  const ExprNode* n = e.root.get();
  switch (n->kind) {
    case NodeKind::constant: return n->value;
    case NodeKind::variable: return z;
    case NodeKind::neg: return -eval_expr({n->a}, z, saturated);
    case NodeKind::add: return eval_expr({n->a}, z, saturated) + eval_expr({n->b}, z, saturated);
    case NodeKind::sub: return eval_expr({n->a}, z, saturated) - eval_expr({n->b}, z, saturated);
    case NodeKind::mul: return eval_expr({n->a}, z, saturated) * eval_expr({n->b}, z, saturated);
    case NodeKind::div_const: return eval_expr({n->a}, z, saturated) / n->b->value;
    case NodeKind::exp_fn: return sat_exp(eval_expr({n->a}, z, saturated), saturated);
    case NodeKind::sin_fn: return sat_sin(eval_expr({n->a}, z, saturated), saturated);
    case NodeKind::cos_fn: return sat_cos(eval_expr({n->a}, z, saturated), saturated);
  }
  throw std::logic_error("unreachable");
}

CompiledExpr::CompiledExpr(const Expr& e) {
  // postfix order
  std::vector<const ExprNode*> work{e.root.get()};
  std::vector<const ExprNode*> order;
  while (!work.empty()) {
    const ExprNode* n = work.back();
    work.pop_back();
    order.push_back(n);
    if (n->a) work.push_back(n->a.get());
    if (n->b && n->kind != NodeKind::div_const) work.push_back(n->b.get());
  }
  int depth = 0, maxdepth = 0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const ExprNode* n = *it;
    Op op{n->kind, {}};
    if (n->kind == NodeKind::constant) op.k = n->value;
    if (n->kind == NodeKind::div_const) op.k = cplx(1.0, 0.0) / n->b->value;
    switch (n->kind) {
      case NodeKind::constant:
      case NodeKind::variable: ++depth; break;
      case NodeKind::add:
      case NodeKind::sub:
      case NodeKind::mul: --depth; break;
      default: break;
    }
    maxdepth = std::max(maxdepth, depth);
    ops_.push_back(op);
  }
  depth_need_ = maxdepth;
  if (depth_need_ > 64) throw std::runtime_error("expression too deep to compile");
}

cplx CompiledExpr::eval(cplx z, bool& saturated) const {
  // fixed local stack keeps evaluation reentrant across render threads
  cplx st[64];
  int top = -1;
  for (const Op& op : ops_) {
    switch (op.code) {
      case NodeKind::constant: st[++top] = op.k; break;
      case NodeKind::variable: st[++top] = z; break;
      case NodeKind::neg: st[top] = -st[top]; break;
      case NodeKind::add: --top; st[top] += st[top + 1]; break;
      case NodeKind::sub: --top; st[top] -= st[top + 1]; break;
      case NodeKind::mul: --top; st[top] *= st[top + 1]; break;
      case NodeKind::div_const: st[top] *= op.k; break;
      case NodeKind::exp_fn: st[top] = sat_exp(st[top], saturated); break;
      case NodeKind::sin_fn: st[top] = sat_sin(st[top], saturated); break;
      case NodeKind::cos_fn: st[top] = sat_cos(st[top], saturated); break;
    }
  }
  return st[top];
}

// -------------------------------------------------------------- catalog

EntireMap make_entire_map(const std::string& name, const Expr& e) {
  EntireMap m;
  m.name = name;
  m.f = e;
  m.df = differentiate(e);
  m.cf = CompiledExpr(m.f);
  m.cdf = CompiledExpr(m.df);
  return m;
}

EntireMap make_entire_map(const std::string& name, const std::string& text) {
  return make_entire_map(name, parse(text));
}

namespace {

std::vector<cplx> vertical_ladder(cplx base, double step_im, int k_range) {
  std::vector<cplx> v;
  for (int k = -k_range; k <= k_range; ++k) v.push_back(base + cplx(0.0, step_im * k));
  return v;
}

}  // namespace

EntireMap catalog(const std::string& name) {
  const double two_pi = 2.0 * kPi;
  if (name == "bergweiler") {
    auto m = make_entire_map(name, "2 - log(2) + 2*z - exp(z)");
    m.critical_seeds = vertical_ladder(cplx(std::log(2.0), 0.0), two_pi, 4);
    m.periodic_2pii = true;
    return m;
  }
  if (name == "fatou") {
    auto m = make_entire_map(name, "z + 1 + exp(-z)");
    m.critical_seeds = vertical_ladder(cplx(0.0, 0.0), two_pi, 4);
    m.periodic_2pii = true;
    return m;
  }
  if (name == "baker-dominguez") {
    auto m = make_entire_map(name, "z + exp(-z)");
    m.critical_seeds = vertical_ladder(cplx(0.0, 0.0), two_pi, 4);
    m.periodic_2pii = true;
    return m;
  }
  if (name == "hyp2") {
    auto m = make_entire_map(name, "z + 1.8 + 0.6*sin(z)");
    // 1 + 0.6 cos z = 0 at z = pi + 2*pi*k +/- i*log(3)
    std::vector<cplx> seeds;
    for (int k = -2; k <= 2; ++k) {
      seeds.push_back(cplx(kPi + two_pi * k, std::log(3.0)));
      seeds.push_back(cplx(kPi + two_pi * k, -std::log(3.0)));
    }
    m.critical_seeds = seeds;
    m.periodic_2pii = true;  // real period 2*pi; translate seeds reused along i axis too
    return m;
  }
  if (name == "parabolic") {
    auto m = make_entire_map(name, "z + log((sqrt(5) - 1)/2) + exp(z)");
    m.critical_seeds = vertical_ladder(cplx(0.0, kPi), two_pi, 4);
    m.periodic_2pii = true;
    return m;
  }
  throw std::runtime_error("unknown catalog entry: " + name);
}

std::vector<std::string> catalog_names() {
  return {"bergweiler", "fatou", "baker-dominguez", "hyp2", "parabolic"};
}

}  // namespace pinch
