#include "ostrograd/serialize.hpp"

#include <cctype>

#include "ostrograd/error.hpp"

namespace ostrograd::sym {

namespace {

const char* kind_tag(Kind k) {
  switch (k) {
    case Kind::Num: return "num";
    case Kind::Sym: return "sym";
    case Kind::Fn: return "fn";
    case Kind::Pow: return "pow";
    case Kind::Mul: return "mul";
    case Kind::Add: return "add";
    case Kind::Sin: return "sin";
    case Kind::Cos: return "cos";
    case Kind::Exp: return "exp";
    case Kind::Log: return "log";
  }
  return "?";
}

std::optional<Kind> tag_kind(std::string_view s) {
  static const std::pair<const char*, Kind> table[] = {
      {"num", Kind::Num}, {"sym", Kind::Sym}, {"fn", Kind::Fn},   {"pow", Kind::Pow}, {"mul", Kind::Mul},
      {"add", Kind::Add}, {"sin", Kind::Sin}, {"cos", Kind::Cos}, {"exp", Kind::Exp}, {"log", Kind::Log}};
  for (auto& [t, k] : table)
    if (s == t) return k;
  return std::nullopt;
}

void prefix_rec(const Expr& e, std::string& out) {
  switch (e.kind()) {
    case Kind::Num:
      out += e.number().str();
      return;
    case Kind::Sym:
      out += e.name();
      return;
    case Kind::Fn:
      out += "(fn ";
      out += e.name();
      out += " (";
      for (std::size_t i = 0; i < e.orders().size(); ++i) {
        if (i) out += ' ';
        out += std::to_string(e.orders()[i]);
      }
      out += ')';
      break;
    case Kind::Pow:
      out += "(^ ";
      prefix_rec(e.base(), out);
      out += ' ';
      out += e.exponent().str();
      out += ')';
      return;
    case Kind::Mul:
      out += "(*";
      break;
    case Kind::Add:
      out += "(+";
      break;
    default:
      out += '(';
      out += kind_tag(e.kind());
      break;
  }
  for (const Expr& k : e.args()) {
    out += ' ';
    prefix_rec(k, out);
  }
  out += ')';
}

class PrefixParser {
 public:
  explicit PrefixParser(std::string_view s) : s_(s) {}

  Expr parse() {
    Expr e = expr();
    skip();
    if (pos_ != s_.size()) fail("trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorKind::Parse, "prefix expression, offset " + std::to_string(pos_) + ": " + msg);
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  std::string_view atom() {
    skip();
    std::size_t b = pos_;
    while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != '(' &&
           s_[pos_] != ')')
      ++pos_;
    if (b == pos_) fail("expected atom");
    return s_.substr(b, pos_ - b);
  }
  void expect(char c) {
    skip();
    if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  bool peek(char c) {
    skip();
    return pos_ < s_.size() && s_[pos_] == c;
  }
  static bool numeric_token(std::string_view t) {
    if (t == "nan" || t == "inf" || t == "-inf") return true;
    std::size_t i = (t[0] == '-' || t[0] == '+') ? 1 : 0;
    return i < t.size() && (std::isdigit(static_cast<unsigned char>(t[i])) || t[i] == '.');
  }
  Number number(std::string_view t) {
    auto n = Number::parse(t);
    if (!n) fail("bad number '" + std::string(t) + "'");
    return *n;
  }

  Expr expr() {
    skip();
    if (!peek('(')) {
      std::string_view t = atom();
      if (numeric_token(t)) return Expr(number(t));
      return Expr::symbol(t);
    }
    expect('(');
    std::string_view head = atom();
    std::vector<Expr> kids;
    Expr r;
    if (head == "fn") {
      std::string_view name = atom();
      expect('(');
      std::vector<int> orders;
      while (!peek(')')) {
        std::string_view t = atom();
        int v = 0;
        for (char c : t) {
          if (!std::isdigit(static_cast<unsigned char>(c))) fail("bad derivative order");
          v = v * 10 + (c - '0');
        }
        orders.push_back(v);
      }
      expect(')');
      while (!peek(')')) kids.push_back(expr());
      if (orders.size() != kids.size()) fail("derivative orders do not match argument count");
      r = raw::fn(name, std::move(orders), std::move(kids));
    } else if (head == "^") {
      Expr b = expr();
      Number x = number(atom());
      r = raw::pow(b, x);
    } else if (head == "+" || head == "*") {
      while (!peek(')')) kids.push_back(expr());
      if (kids.size() < 2) fail("sum and product need at least two operands");
      r = head == "+" ? raw::add(std::move(kids)) : raw::mul(std::move(kids));
    } else {
      auto k = tag_kind(head);
      if (!k || (*k != Kind::Sin && *k != Kind::Cos && *k != Kind::Exp && *k != Kind::Log))
        fail("unknown head '" + std::string(head) + "'");
      r = raw::unary(*k, expr());
    }
    expect(')');
    return r;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------- infix

enum Prec { kSum = 1, kProd = 2, kNeg = 3, kPow = 4, kAtom = 5 };

std::string infix_rec(const Expr& e, int& prec);

std::string wrap(const Expr& e, int need) {
  int p = 0;
  std::string s = infix_rec(e, p);
  return p < need ? "(" + s + ")" : s;
}

std::string number_infix(const Number& n, int& prec) {
  std::string s = n.str();
  if (n.sign() < 0) {
    prec = kNeg;
  } else if (n.is_exact() && !n.is_integer()) {
    prec = kProd;
  } else {
    prec = kAtom;
  }
  return s;
}

std::string product_infix(const Expr& e, int& prec) {
  std::vector<Expr> num, den;
  Number coef(1);
  for (const Expr& f : e.args()) {
    if (f.is_number()) {
      coef = coef * f.number();
    } else if (f.kind() == Kind::Pow && f.exponent().sign() < 0) {
      den.push_back(pow(f.base(), -f.exponent()));
    } else {
      num.push_back(f);
    }
  }
  std::string s;
  bool neg = coef.sign() < 0;
  Number mag = neg ? -coef : coef;
  if (!mag.is_one() || (!mag.is_exact())) {
    int p;
    s = number_infix(mag, p);
    if (p < kProd) s = "(" + s + ")";
  }
  for (const Expr& f : num) {
    if (!s.empty()) s += "*";
    s += wrap(f, kPow);
  }
  if (s.empty()) s = "1";
  if (!den.empty()) {
    std::string d;
    for (const Expr& f : den) {
      if (!d.empty()) d += "*";
      d += wrap(f, kPow);
    }
    s += den.size() == 1 && (den[0].kind() != Kind::Mul) ? "/" + d : "/(" + d + ")";
  }
  prec = kProd;
  if (neg) {
    s = "-" + s;
    prec = kNeg;
  }
  return s;
}

std::string infix_rec(const Expr& e, int& prec) {
  switch (e.kind()) {
    case Kind::Num:
      return number_infix(e.number(), prec);
    case Kind::Sym:
      prec = kAtom;
      return e.name();
    case Kind::Fn: {
      std::string s = e.name();
      const auto& o = e.orders();
      bool any = false;
      for (int v : o) any = any || v != 0;
      if (any) {
        if (o.size() == 1) {
          s += std::string(static_cast<std::size_t>(o[0]), '\'');
        } else {
          s += '[';
          for (std::size_t i = 0; i < o.size(); ++i) s += (i ? "," : "") + std::to_string(o[i]);
          s += ']';
        }
      }
      s += '(';
      for (std::size_t i = 0; i < e.args().size(); ++i) {
        int p;
        if (i) s += ", ";
        s += infix_rec(e.args()[i], p);
      }
      s += ')';
      prec = kAtom;
      return s;
    }
    case Kind::Pow: {
      const Number& x = e.exponent();
      prec = kAtom;
      if (x == Number::rational(1, 2)) {
        int p;
        return "sqrt(" + infix_rec(e.base(), p) + ")";
      }
      if (x.sign() < 0) {
        prec = kProd;
        return "1/" + wrap(pow(e.base(), -x), kPow);
      }
      prec = kPow;
      std::string xs = x.str();
      if (!x.is_integer()) xs = "(" + xs + ")";
      return wrap(e.base(), kAtom) + "^" + xs;
    }
    case Kind::Mul:
      return product_infix(e, prec);
    case Kind::Add: {
      std::string s;
      for (std::size_t i = 0; i < e.args().size(); ++i) {
        const Expr& t = e.args()[i];
        int p;
        std::string ts = infix_rec(t, p);
        if (i == 0) {
          s = ts;
        } else if (!ts.empty() && ts[0] == '-') {
          s += " - " + ts.substr(1);
        } else {
          s += " + " + ts;
        }
      }
      prec = kSum;
      return s;
    }
    default: {
      int p;
      prec = kAtom;
      return std::string(kind_tag(e.kind())) + "(" + infix_rec(e.args()[0], p) + ")";
    }
  }
}

}  // namespace

std::string to_prefix(const Expr& e) {
  std::string out;
  prefix_rec(e, out);
  return out;
}

Expr parse_prefix(std::string_view text) { return PrefixParser(text).parse(); }

nlohmann::json to_json(const Expr& e) {
  nlohmann::json j;
  j["kind"] = kind_tag(e.kind());
  switch (e.kind()) {
    case Kind::Num:
      j["value"] = e.number().str();
      return j;
    case Kind::Sym:
      j["name"] = e.name();
      return j;
    case Kind::Fn:
      j["name"] = e.name();
      j["orders"] = e.orders();
      break;
    case Kind::Pow:
      j["exponent"] = e.exponent().str();
      break;
    default:
      break;
  }
  nlohmann::json kids = nlohmann::json::array();
  for (const Expr& k : e.args()) kids.push_back(to_json(k));
  j["children"] = std::move(kids);
  return j;
}

Expr from_json(const nlohmann::json& j) {
  auto bad = [](const std::string& m) { return Error(ErrorKind::Parse, "expression JSON: " + m); };
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) throw bad("missing kind");
  auto k = tag_kind(j["kind"].get<std::string>());
  if (!k) throw bad("unknown kind " + j["kind"].get<std::string>());
  auto number = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_string()) throw bad(std::string("missing ") + key);
    auto n = Number::parse(j[key].get<std::string>());
    if (!n) throw bad("bad number");
    return *n;
  };
  if (*k == Kind::Num) return Expr(number("value"));
  if (*k == Kind::Sym) {
    if (!j.contains("name") || !j["name"].is_string()) throw bad("symbol without name");
    return Expr::symbol(j["name"].get<std::string>());
  }
  std::vector<Expr> kids;
  if (!j.contains("children") || !j["children"].is_array()) throw bad("missing children");
  for (const auto& c : j["children"]) kids.push_back(from_json(c));
  switch (*k) {
    case Kind::Fn: {
      if (!j.contains("orders") || !j.contains("name")) throw bad("function without name/orders");
      auto orders = j["orders"].get<std::vector<int>>();
      if (orders.size() != kids.size()) throw bad("order count mismatch");
      return raw::fn(j["name"].get<std::string>(), std::move(orders), std::move(kids));
    }
    case Kind::Pow:
      if (kids.size() != 1) throw bad("power needs one child");
      return raw::pow(kids[0], number("exponent"));
    case Kind::Add:
    case Kind::Mul:
      if (kids.size() < 2) throw bad("sum/product needs two children");
      return *k == Kind::Add ? raw::add(std::move(kids)) : raw::mul(std::move(kids));
    default:
      if (kids.size() != 1) throw bad("function needs one child");
      return raw::unary(*k, kids[0]);
  }
}

std::string to_infix(const Expr& e) {
  int p;
  return infix_rec(e, p);
}

}  // namespace ostrograd::sym
