#pragma once

#include <span>
#include <string>
#include <vector>

#include "hessianlab/errors.hpp"

namespace hessianlab {

// Whitelisted field expressions: real literals, + - * /, parentheses,
// x<i>, y<i>, absz2, re_z<i>, cospi2(e), sinpi2(e), max(a, b).
class FieldExpr {
  public:
    static FieldExpr parse(const std::string& text);

    // Evaluate at a grid point with coordinates (x1, y1, ..., xn, yn).
    // Division by |denominator| < 1e-12 raises EvaluationError, as does a
    // coordinate reference beyond n.
    double eval(std::span<const double> xy) const;

    const std::string& text() const { return text_; }

  private:
    enum class Op { constant, coord, absz2, add, sub, mul, div, neg, cospi2, sinpi2, max2 };
    struct Node {
        Op op;
        double value = 0.0;  // constant
        int axis = -1;       // coord
        int a = -1, b = -1;  // children
    };
    std::string text_;
    std::vector<Node> nodes_;
    int root_ = -1;

    double eval_node(int id, std::span<const double> xy) const;
    friend class ExprParser;
};

}  // namespace hessianlab
