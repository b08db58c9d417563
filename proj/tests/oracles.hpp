#pragma once
// Independent reference computations used only by tests.

#include <cmath>
#include <numbers>
#include <vector>

namespace oracle {

/// log of sum_k w_k N(x; sqrt(ab) mu_k, (ab s2_k + 1 - ab) I), isotropic components.
inline double log_marginal(const std::vector<double>& x, const std::vector<double>& w,
                           const std::vector<std::vector<double>>& mu, const std::vector<double>& s2, double ab) {
    double total = 0.0;
    const double d = static_cast<double>(x.size());
    for (std::size_t k = 0; k < w.size(); ++k) {
        const double var = ab * s2[k] + 1.0 - ab;
        double q = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = x[i] - std::sqrt(ab) * mu[k][i];
            q += r * r;
        }
        total += w[k] * std::exp(-0.5 * q / var) / std::pow(2.0 * std::numbers::pi * var, d / 2.0);
    }
    return std::log(total);
}

/// Central differences with step h.
template <typename F>
std::vector<double> fd_gradient(F f, std::vector<double> x, double h) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double up = f(x);
        x[i] = keep - h;
        const double down = f(x);
        x[i] = keep;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

/// Pairwise AUROC and threshold sweep written out longhand.
inline double brute_auroc(const std::vector<double>& ind, const std::vector<double>& ood) {
    double wins = 0.0, ties = 0.0;
    for (double o : ood) {
        for (double i : ind) {
            if (o > i) wins += 1.0;
            if (o == i) ties += 1.0;
        }
    }
    return (wins + 0.5 * ties) / (static_cast<double>(ind.size()) * static_cast<double>(ood.size()));
}

/// Largest candidate threshold among the OOD scores with TPR >= target.
inline double brute_fpr(const std::vector<double>& ind, const std::vector<double>& ood, double target) {
    double best_threshold = -INFINITY;
    bool found = false;
    for (double c : ood) {
        double tp = 0;
        for (double o : ood) tp += o >= c ? 1 : 0;
        if (tp / static_cast<double>(ood.size()) >= target - 1e-12 && (!found || c > best_threshold)) {
            best_threshold = c;
            found = true;
        }
    }
    double fp = 0;
    for (double i : ind) fp += i >= best_threshold ? 1 : 0;
    return fp / static_cast<double>(ind.size());
}

}  // namespace oracle
