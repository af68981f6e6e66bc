#include "hessianlab/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

namespace hessianlab {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

class ExprParser {
  public:
    explicit ExprParser(const std::string& text) : text_(text) {}

    FieldExpr run() {
        FieldExpr e;
        e.text_ = text_;
        nodes_ = &e.nodes_;
        pos_ = 0;
        e.root_ = parse_expr();
        skip_ws();
        if (pos_ != text_.size()) fail("trailing input");
        return e;
    }

  private:
    const std::string& text_;
    size_t pos_ = 0;
    std::vector<FieldExpr::Node>* nodes_ = nullptr;

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("expression parse error at position " + std::to_string(pos_) + ": " +
                         what);
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    int add_node(FieldExpr::Node n) {
        nodes_->push_back(n);
        return static_cast<int>(nodes_->size()) - 1;
    }

    int parse_expr() {
        int lhs = parse_term();
        while (true) {
            if (eat('+')) {
                const int rhs = parse_term();
                lhs = add_node({FieldExpr::Op::add, 0.0, -1, lhs, rhs});
            } else if (eat('-')) {
                const int rhs = parse_term();
                lhs = add_node({FieldExpr::Op::sub, 0.0, -1, lhs, rhs});
            } else {
                return lhs;
            }
        }
    }

    int parse_term() {
        int lhs = parse_factor();
        while (true) {
            if (eat('*')) {
                const int rhs = parse_factor();
                lhs = add_node({FieldExpr::Op::mul, 0.0, -1, lhs, rhs});
            } else if (eat('/')) {
                const int rhs = parse_factor();
                lhs = add_node({FieldExpr::Op::div, 0.0, -1, lhs, rhs});
            } else {
                return lhs;
            }
        }
    }

    int parse_factor() {
        if (eat('-')) return add_node({FieldExpr::Op::neg, 0.0, -1, parse_factor(), -1});
        return parse_primary();
    }

    int parse_primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            const int inner = parse_expr();
            if (!eat(')')) fail("expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* start = text_.c_str() + pos_;
            char* end = nullptr;
            const double v = std::strtod(start, &end);
            if (end == start) fail("malformed number");
            pos_ += static_cast<size_t>(end - start);
            return add_node({FieldExpr::Op::constant, v, -1, -1, -1});
        }
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
        fail(std::string("unknown token '") + c + "'");
    }

    int parse_ident() {
        const size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        const std::string name = text_.substr(start, pos_ - start);
        if (name == "absz2") return add_node({FieldExpr::Op::absz2, 0.0, -1, -1, -1});
        if (name == "cospi2" || name == "sinpi2") {
            if (!eat('(')) fail("expected '(' after " + name);
            const int arg = parse_expr();
            if (!eat(')')) fail("expected ')'");
            const auto op = name == "cospi2" ? FieldExpr::Op::cospi2 : FieldExpr::Op::sinpi2;
            return add_node({op, 0.0, -1, arg, -1});
        }
        if (name == "max") {
            if (!eat('(')) fail("expected '(' after max");
            const int a = parse_expr();
            if (!eat(',')) fail("expected ',' in max");
            const int b = parse_expr();
            if (!eat(')')) fail("expected ')'");
            return add_node({FieldExpr::Op::max2, 0.0, -1, a, b});
        }
        // x<i>, y<i>, re_z<i>
        auto coord_index = [&](const std::string& digits) -> int {
            if (digits.size() != 1 || digits[0] < '1' || digits[0] > '3') return -1;
            return digits[0] - '1';
        };
        if (name.size() == 2 && (name[0] == 'x' || name[0] == 'y')) {
            const int i = coord_index(name.substr(1));
            if (i >= 0)
                return add_node(
                    {FieldExpr::Op::coord, 0.0, 2 * i + (name[0] == 'y' ? 1 : 0), -1, -1});
        }
        if (name.size() == 5 && name.rfind("re_z", 0) == 0) {
            const int i = coord_index(name.substr(4));
            if (i >= 0) return add_node({FieldExpr::Op::coord, 0.0, 2 * i, -1, -1});
        }
        pos_ = start;
        fail("unknown token '" + name + "'");
    }
};

FieldExpr FieldExpr::parse(const std::string& text) { return ExprParser(text).run(); }

double FieldExpr::eval_node(int id, std::span<const double> xy) const {
    const Node& n = nodes_[id];
    switch (n.op) {
        case Op::constant:
            return n.value;
        case Op::coord:
            if (n.axis >= static_cast<int>(xy.size()))
                throw EvaluationError("expression references a coordinate beyond the dimension");
            return xy[n.axis];
        case Op::absz2: {
            double s = 0.0;
            for (double v : xy) s += v * v;
            return s;
        }
        case Op::add:
            return eval_node(n.a, xy) + eval_node(n.b, xy);
        case Op::sub:
            return eval_node(n.a, xy) - eval_node(n.b, xy);
        case Op::mul:
            return eval_node(n.a, xy) * eval_node(n.b, xy);
        case Op::div: {
            const double den = eval_node(n.b, xy);
            if (std::abs(den) < 1e-12)
                throw EvaluationError("expression divides by a near-zero value on the grid");
            return eval_node(n.a, xy) / den;
        }
        case Op::neg:
            return -eval_node(n.a, xy);
        case Op::cospi2:
            return std::cos(kTwoPi * eval_node(n.a, xy));
        case Op::sinpi2:
            return std::sin(kTwoPi * eval_node(n.a, xy));
        case Op::max2:
            return std::max(eval_node(n.a, xy), eval_node(n.b, xy));
    }
    throw EvaluationError("corrupt expression tree");
}

double FieldExpr::eval(std::span<const double> xy) const {
    if (root_ < 0) throw EvaluationError("empty expression");
    return eval_node(root_, xy);
}

}  // namespace hessianlab
