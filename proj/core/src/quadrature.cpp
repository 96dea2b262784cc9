#include "pointscat/quadrature.hpp"

#include <boost/math/special_functions/legendre.hpp>

#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace pointscat {

namespace {

QuadratureRule build_rule(int n) {
    QuadratureRule r;
    const std::vector<double> zeros = boost::math::legendre_p_zeros<double>(n);  // nonnegative half
    std::vector<double> pos;
    for (double z : zeros) pos.push_back(z);
    auto weight = [n](double x) {
        const double d = boost::math::legendre_p_prime(n, x);
        return 2.0 / ((1.0 - x * x) * d * d);
    };
    for (auto it = pos.rbegin(); it != pos.rend(); ++it) {
        if (*it == 0.0) continue;
        r.nodes.push_back(-*it);
        r.weights.push_back(weight(*it));
    }
    if (n % 2 == 1) {
        r.nodes.push_back(0.0);
        r.weights.push_back(weight(0.0));
    }
    for (double z : pos) {
        if (z == 0.0) continue;
        r.nodes.push_back(z);
        r.weights.push_back(weight(z));
    }
    return r;
}

}  // namespace

const QuadratureRule& gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
    static std::mutex mu;
    static std::map<int, std::unique_ptr<QuadratureRule>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<QuadratureRule>(build_rule(n));
    return *slot;
}

QuadratureRule gauss_legendre(int n, double lo, double hi) {
    const QuadratureRule& ref = gauss_legendre(n);
    QuadratureRule r;
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        r.nodes[i] = mid + half * ref.nodes[i];
        r.weights[i] = half * ref.weights[i];
    }
    return r;
}

QuadratureRule composite_gauss(int n_panels, int p, double lo, double hi) {
    const QuadratureRule& ref = gauss_legendre(p);
    QuadratureRule r;
    const double width = (hi - lo) / n_panels;
    r.nodes.reserve(static_cast<std::size_t>(n_panels) * p);
    r.weights.reserve(static_cast<std::size_t>(n_panels) * p);
    for (int k = 0; k < n_panels; ++k) {
        const double mid = lo + (k + 0.5) * width;
        for (int i = 0; i < p; ++i) {
            r.nodes.push_back(mid + 0.5 * width * ref.nodes[i]);
            r.weights.push_back(0.5 * width * ref.weights[i]);
        }
    }
    return r;
}

}  // namespace pointscat
