#pragma once

#include <vector>

namespace pointscat {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    int size() const { return static_cast<int>(nodes.size()); }
};

// n-point Gauss-Legendre rule on [-1, 1], nodes ascending.
const QuadratureRule& gauss_legendre(int n);

// Same rule mapped to [lo, hi].
QuadratureRule gauss_legendre(int n, double lo, double hi);

// n_panels equal panels on [lo, hi], each carrying a p-point Gauss rule.
QuadratureRule composite_gauss(int n_panels, int p, double lo, double hi);

}  // namespace pointscat
