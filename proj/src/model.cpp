#include "ostrograd/model.hpp"

#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "ostrograd/error.hpp"
#include "ostrograd/serialize.hpp"

namespace ostrograd {

namespace {

enum class Tok { Ident, Number, Punct, End };

struct Token {
  Tok kind;
  std::string text;
  int line, col;
};

[[noreturn]] void fail(ErrorKind k, int line, int col, const std::string& msg) {
  throw Error(k, "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + msg);
}

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t j = 0; j < n; ++j, ++i) {
      if (s[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '#') {
      while (i < s.size() && s[i] != '\n') advance(1);
      continue;
    }
    int l = line, cl = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      out.push_back({Tok::Ident, std::string(s.substr(i, j - i)), l, cl});
      advance(j - i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      std::size_t j = i;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      if (j < s.size() && s[j] == '.') {
        ++j;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      }
      if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
        if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
          j = k;
          while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
        }
      }
      out.push_back({Tok::Number, std::string(s.substr(i, j - i)), l, cl});
      advance(j - i);
      continue;
    }
    if (std::string_view(";,()[]=+-*/^'").find(c) != std::string_view::npos) {
      out.push_back({Tok::Punct, std::string(1, c), l, cl});
      advance(1);
      continue;
    }
    fail(ErrorKind::Parse, l, cl, std::string("unexpected character '") + c + "'");
  }
  out.push_back({Tok::End, "", line, col});
  return out;
}

// A value in an expression: a scalar, or the vector q_i over all dofs.
struct Value {
  Expr scalar;
  std::vector<Expr> vec;
  bool is_vec = false;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : toks_(lex(text)) {}

  ModelFile run() {
    expect_word("model");
    m_.name = ident("model name");
    expect(";");
    while (peek().kind != Tok::End) statement();
    if (!have_lagrangian_) fail(ErrorKind::Semantic, peek().line, peek().col, "missing 'lagrangian = ...;'");
    return std::move(m_);
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  ModelFile m_;
  bool have_dof_ = false, have_order_ = false, have_base_ = false, have_lagrangian_ = false;
  std::set<std::string> names_;
  // while parsing a parameter definition only its arguments are visible
  const std::vector<std::string>* locals_ = nullptr;

  const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
  const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  bool at(std::string_view p) const { return peek().kind == Tok::Punct && peek().text == p; }
  bool accept(std::string_view p) {
    if (!at(p)) return false;
    ++pos_;
    return true;
  }
  [[noreturn]] void syntax(const Token& t, const std::string& msg) { fail(ErrorKind::Parse, t.line, t.col, msg); }
  [[noreturn]] void semantic(const Token& t, const std::string& msg) { fail(ErrorKind::Semantic, t.line, t.col, msg); }
  static std::string shown(const Token& t) { return t.kind == Tok::End ? "end of input" : "'" + t.text + "'"; }

  void expect(std::string_view p) {
    if (!accept(p)) syntax(peek(), "expected '" + std::string(p) + "' but found " + shown(peek()));
  }
  void expect_word(std::string_view w) {
    if (peek().kind != Tok::Ident || peek().text != w)
      syntax(peek(), "expected '" + std::string(w) + "' but found " + shown(peek()));
    ++pos_;
  }
  std::string ident(const char* what) {
    if (peek().kind != Tok::Ident) syntax(peek(), std::string("expected ") + what + " but found " + shown(peek()));
    return next().text;
  }
  long integer(const char* what) {
    const Token& t = peek();
    if (t.kind != Tok::Number || t.text.find_first_not_of("0123456789") != std::string::npos)
      syntax(t, std::string("expected ") + what + " (a non-negative integer) but found " + shown(t));
    ++pos_;
    try {
      return std::stol(t.text);
    } catch (...) {
      semantic(t, std::string(what) + " is too large");
    }
  }

  void claim(const Token& at, const std::string& name) {
    static const std::set<std::string> reserved{"model", "dof", "order", "base", "param", "const", "lagrangian",
                                                "sqrt", "sin", "cos", "exp", "log", "d", "dot", "norm2", "p"};
    if (reserved.count(name)) semantic(at, "'" + name + "' is a reserved word");
    if (name.size() > 1 && (name[0] == 'q' || name[0] == 'p' || name[0] == 'F') && std::isdigit(static_cast<unsigned char>(name[1])))
      semantic(at, "'" + name + "' looks like a coordinate name");
    if (!names_.insert(name).second) semantic(at, "duplicate name '" + name + "'");
  }

  void need_header(const Token& t) {
    if (!have_dof_ || !have_order_) semantic(t, "'dof' and 'order' must come before '" + t.text + "'");
  }

  void statement() {
    const Token& t = peek();
    if (t.kind != Tok::Ident) syntax(t, "expected a statement but found " + shown(t));
    std::string w = next().text;
    if (w == "dof") {
      if (have_dof_) semantic(t, "'dof' given twice");
      do {
        const Token& d = peek();
        std::string name = ident("dof name");
        claim(d, name);
        m_.dofs.push_back(name);
      } while (accept(","));
      have_dof_ = true;
    } else if (w == "order") {
      if (have_order_) semantic(t, "'order' given twice");
      const Token& o = peek();
      long k = integer("order");
      if (k < 1 || k > 9) semantic(o, "order must be between 1 and 9");
      m_.order = static_cast<int>(k);
      have_order_ = true;
    } else if (w == "base") {
      if (have_base_) semantic(t, "'base' given twice");
      if (!m_.params.empty() || have_lagrangian_) semantic(t, "'base' must come before parameters and the lagrangian");
      const Token& b = peek();
      m_.base = ident("base variable");
      if (m_.base != "t") claim(b, m_.base);
      have_base_ = true;
    } else if (w == "param") {
      need_header(t);
      param();
    } else if (w == "const") {
      constant();
    } else if (w == "lagrangian") {
      need_header(t);
      if (have_lagrangian_) semantic(t, "'lagrangian' given twice");
      expect("=");
      const Token& e = peek();
      Value v = expr();
      if (v.is_vec) semantic(e, "the lagrangian must be a scalar");
      m_.lagrangian = v.scalar;
      have_lagrangian_ = true;
    } else {
      syntax(t, "unknown statement '" + w + "'");
    }
    expect(";");
  }

  void param() {
    const Token& nt = peek();
    ParamFunction p;
    p.name = ident("parameter name");
    claim(nt, p.name);
    expect("(");
    std::set<std::string> seen;
    if (!at(")")) {
      do {
        const Token& a = peek();
        std::string arg = ident("argument");
        std::vector<std::string> expanded;
        if (arg == base()) {
          expanded.push_back(arg);
        } else if (auto c = coordinate(arg)) {
          if (c->second < 0) {
            for (std::size_t A = 0; A < m_.dofs.size(); ++A) expanded.push_back(q_name(c->first, A));
          } else {
            expanded.push_back(arg);
          }
        } else {
          semantic(a, "parameter arguments must be the base variable or coordinates, not '" + arg + "'");
        }
        for (auto& e : expanded) {
          if (!seen.insert(e).second) semantic(a, "repeated argument '" + e + "'");
          p.args.push_back(e);
        }
      } while (accept(","));
    }
    expect(")");
    if (accept("=")) {
      const Token& e = peek();
      locals_ = &p.args;
      Value v = expr();
      locals_ = nullptr;
      if (v.is_vec) semantic(e, "a parameter definition must be a scalar");
      p.definition = v.scalar;
    }
    m_.params.push_back(std::move(p));
  }

  void constant() {
    const Token& nt = peek();
    Constant c;
    c.name = ident("constant name");
    claim(nt, c.name);
    if (accept("=")) {
      const Token& e = peek();
      auto saved = locals_;
      static const std::vector<std::string> none;
      locals_ = &none;
      Value v = expr();
      locals_ = saved;
      if (v.is_vec) semantic(e, "a constant must be a scalar");
      c.value = v.scalar;
    }
    m_.constants.push_back(std::move(c));
  }

  const std::string& base() const { return m_.base; }
  std::string q_name(int i, std::size_t A) const { return "q" + std::to_string(i) + m_.dofs[A]; }

  // q<i><dof> -> (i, A); q<i> -> (i, -1)
  std::optional<std::pair<int, int>> coordinate(const std::string& s) const {
    if (s.size() < 2 || s[0] != 'q' || !std::isdigit(static_cast<unsigned char>(s[1]))) return std::nullopt;
    std::size_t j = 1;
    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
    int i = std::stoi(s.substr(1, j - 1));
    std::string rest = s.substr(j);
    if (rest.empty()) return std::make_pair(i, -1);
    for (std::size_t A = 0; A < m_.dofs.size(); ++A)
      if (m_.dofs[A] == rest) return std::make_pair(i, static_cast<int>(A));
    return std::nullopt;
  }

  Value scalar(Expr e) { return Value{std::move(e), {}, false}; }

  Expr need_scalar(const Value& v, const Token& t) {
    if (v.is_vec) semantic(t, "a coordinate vector is only allowed inside dot(), norm2() or parameter arguments");
    return v.scalar;
  }

  Value expr() {
    const Token& t0 = peek();
    Value v = term();
    while (at("+") || at("-")) {
      bool plus = next().text == "+";
      const Token& t = peek();
      Expr r = need_scalar(term(), t);
      Expr l = need_scalar(v, t0);
      v = scalar(plus ? l + r : l - r);
    }
    return v;
  }

  Value term() {
    const Token& t0 = peek();
    Value v = unary();
    while (at("*") || at("/")) {
      bool mul = next().text == "*";
      const Token& t = peek();
      Expr r = need_scalar(unary(), t);
      Expr l = need_scalar(v, t0);
      if (!mul && r.is_number() && r.number().is_zero()) semantic(t, "division by zero");
      v = scalar(mul ? l * r : l / r);
    }
    return v;
  }

  Value unary() {
    if (accept("-")) {
      const Token& t = peek();
      return scalar(-need_scalar(unary(), t));
    }
    if (accept("+")) return unary();
    return power();
  }

  Value power() {
    const Token& t0 = peek();
    Value b = primary();
    if (!accept("^")) return b;
    const Token& et = peek();
    Expr e = need_scalar(unary(), et);
    if (!e.is_number()) semantic(et, "exponents must be numbers");
    return scalar(sym::pow(need_scalar(b, t0), e.number()));
  }

  std::vector<Value> call_args() {
    std::vector<Value> out;
    expect("(");
    if (!at(")")) {
      do out.push_back(expr());
      while (accept(","));
    }
    expect(")");
    return out;
  }

  Value primary() {
    const Token& t = peek();
    if (t.kind == Tok::Number) {
      ++pos_;
      auto n = sym::Number::parse(t.text);
      if (!n) syntax(t, "malformed number '" + t.text + "'");
      return scalar(Expr(*n));
    }
    if (accept("(")) {
      Value v = expr();
      expect(")");
      return v;
    }
    if (t.kind != Tok::Ident) syntax(t, "expected an expression but found " + shown(t));
    std::string name = next().text;

    static const std::map<std::string, Expr (*)(const Expr&)> unary_fns{
        {"sqrt", sym::sqrt}, {"sin", sym::sin}, {"cos", sym::cos}, {"exp", sym::exp}, {"log", sym::log}};
    if (auto it = unary_fns.find(name); it != unary_fns.end() && at("(")) {
      auto args = call_args();
      if (args.size() != 1) semantic(t, name + "() takes one argument");
      return scalar(it->second(need_scalar(args[0], t)));
    }
    if ((name == "dot" || name == "norm2") && at("(") && !locals_) {
      auto args = call_args();
      std::size_t want = name == "dot" ? 2 : 1;
      if (args.size() != want) semantic(t, name + "() takes " + std::to_string(want) + " argument" + (want > 1 ? "s" : ""));
      for (auto& a : args)
        if (!a.is_vec) semantic(t, name + "() needs coordinate vectors such as q1");
      const auto& u = args[0].vec;
      const auto& v = args.size() > 1 ? args[1].vec : args[0].vec;
      std::vector<Expr> terms;
      for (std::size_t A = 0; A < u.size(); ++A) terms.push_back(u[A] * v[A]);
      return scalar(sym::add(std::move(terms)));
    }
    if (name == "d" && at("(") && !locals_) {
      expect("(");
      const Token& dt = peek();
      std::string dof = ident("dof name");
      expect(",");
      const Token& it = peek();
      long i = integer("derivative order");
      expect(")");
      std::size_t A = 0;
      while (A < m_.dofs.size() && m_.dofs[A] != dof) ++A;
      if (A == m_.dofs.size()) semantic(dt, "unknown dof '" + dof + "'");
      if (i > m_.order) semantic(it, "coordinate d(" + dof + "," + std::to_string(i) + ") exceeds order " + std::to_string(m_.order));
      return scalar(Expr::symbol(q_name(static_cast<int>(i), A)));
    }
    // parameter function, with optional derivative orders
    for (const auto& p : m_.params) {
      if (p.name != name) continue;
      std::vector<int> orders;
      if (accept("'")) {
        int c = 1;
        while (accept("'")) ++c;
        if (p.args.size() != 1) semantic(t, "primes only apply to functions of one argument; use " + name + "[...]");
        orders = {c};
      } else if (accept("[")) {
        do {
          orders.push_back(static_cast<int>(integer("derivative order")));
        } while (accept(","));
        expect("]");
        if (orders.size() != p.args.size())
          semantic(t, "derivative orders for '" + name + "' need " + std::to_string(p.args.size()) + " entries");
      }
      if (!at("(")) syntax(peek(), "expected '(' after function '" + name + "'");
      auto args = call_args();
      std::vector<Expr> flat;
      for (auto& a : args) {
        if (a.is_vec) {
          flat.insert(flat.end(), a.vec.begin(), a.vec.end());
        } else {
          flat.push_back(a.scalar);
        }
      }
      if (flat.size() != p.args.size())
        semantic(t, "'" + name + "' takes " + std::to_string(p.args.size()) + " arguments, got " + std::to_string(flat.size()));
      return scalar(sym::fn(name, std::move(flat), std::move(orders)));
    }
    if (locals_) {
      for (const auto& a : *locals_)
        if (a == name) return scalar(Expr::symbol(name));
      for (const auto& c : m_.constants)
        if (c.name == name) return scalar(Expr::symbol(name));
      semantic(t, "unknown symbol '" + name + "' in a definition");
    }
    if (name == base()) return scalar(Expr::symbol(name));
    for (const auto& c : m_.constants)
      if (c.name == name) return scalar(Expr::symbol(name));
    for (std::size_t A = 0; A < m_.dofs.size(); ++A)
      if (m_.dofs[A] == name) return scalar(Expr::symbol(q_name(0, A)));
    if (auto c = coordinate(name)) {
      if (c->first > m_.order)
        semantic(t, "coordinate " + name + " exceeds order " + std::to_string(m_.order));
      if (c->second >= 0) return scalar(Expr::symbol(name));
      Value v;
      v.is_vec = true;
      for (std::size_t A = 0; A < m_.dofs.size(); ++A) v.vec.push_back(Expr::symbol(q_name(c->first, A)));
      return v;
    }
    semantic(t, "unknown symbol '" + name + "'");
  }
};

}  // namespace

JetSpec ModelFile::spec() const { return JetSpec(dofs, order, base, params, constants); }

Lagrangian ModelFile::build() const { return Lagrangian(spec(), lagrangian); }

ModelFile parse_model(std::string_view text) {
  ModelFile m = Parser(text).run();
  m.build();  // surfaces remaining rule violations as Semantic errors
  return m;
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Argument, "cannot open model file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

std::string print_model(const ModelFile& m) {
  std::ostringstream os;
  os << "model " << m.name << ";\n";
  os << "dof ";
  for (std::size_t i = 0; i < m.dofs.size(); ++i) os << (i ? ", " : "") << m.dofs[i];
  os << ";\norder " << m.order << ";\n";
  os << "base " << m.base << ";\n";
  for (const auto& c : m.constants) {
    os << "const " << c.name;
    if (c.value) os << " = " << sym::to_infix(*c.value);
    os << ";\n";
  }
  for (const auto& p : m.params) {
    os << "param " << p.name << "(";
    for (std::size_t i = 0; i < p.args.size(); ++i) os << (i ? ", " : "") << p.args[i];
    os << ")";
    if (p.definition) os << " = " << sym::to_infix(*p.definition);
    os << ";\n";
  }
  os << "lagrangian = " << sym::to_infix(m.lagrangian) << ";\n";
  return os.str();
}

bool operator==(const ModelFile& a, const ModelFile& b) {
  if (a.name != b.name || a.dofs != b.dofs || a.order != b.order || a.base != b.base) return false;
  if (a.params.size() != b.params.size() || a.constants.size() != b.constants.size()) return false;
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    const auto &p = a.params[i], &q = b.params[i];
    if (p.name != q.name || p.args != q.args || p.definition.has_value() != q.definition.has_value()) return false;
    if (p.definition && !(*p.definition == *q.definition)) return false;
  }
  for (std::size_t i = 0; i < a.constants.size(); ++i) {
    const auto &c = a.constants[i], &d = b.constants[i];
    if (c.name != d.name || c.value.has_value() != d.value.has_value()) return false;
    if (c.value && !(*c.value == *d.value)) return false;
  }
  return a.lagrangian == b.lagrangian;
}

}  // namespace ostrograd
