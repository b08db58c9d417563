#include <doctest.h>

#include <cmath>
#include <numeric>

#include "ddpood/errors.hpp"
#include "ddpood/metrics.hpp"
#include "ddpood/random.hpp"
#include "oracles.hpp"

using namespace ddpood;

namespace {

std::vector<double> draw(Rng& rng, std::size_t n, double shift, bool coarse) {
    std::vector<double> v(n);
    for (double& x : v) {
        x = rng.normal() + shift;
        if (coarse) x = std::round(x * 2) / 2;  // forces ties
    }
    return v;
}

}  // namespace

TEST_SUITE("metrics") {
    TEST_CASE("auroc examples") {
        const std::vector<double> ind{1, 2}, ood{1.5, 3};
        CHECK(auroc(ind, ood) == 0.75);
        CHECK(auroc(std::vector<double>{0, 1}, std::vector<double>{2, 3}) == 1.0);
        const std::vector<double> same{0.1, 0.4, 0.4, 2.0};
        CHECK(auroc(same, same) == 0.5);
    }

    TEST_CASE("auroc equals the pairwise count") {
        Rng rng(3);
        for (int trial = 0; trial < 40; ++trial) {
            const std::size_t n = 1 + rng.index(200), m = 1 + rng.index(200);
            const bool coarse = trial % 2 == 0;
            const auto ind = draw(rng, n, 0.0, coarse);
            const auto ood = draw(rng, m, 0.7, coarse);
            CHECK(auroc(ind, ood) == oracle::brute_auroc(ind, ood));
            CHECK(fpr_at_tpr(ind, ood) == oracle::brute_fpr(ind, ood, 0.95));
            CHECK(fpr_at_tpr(ind, ood, 0.5) == oracle::brute_fpr(ind, ood, 0.5));
        }
    }

    TEST_CASE("auroc orientation and monotone invariance") {
        Rng rng(4);
        auto ind = draw(rng, 150, 0.0, false), ood = draw(rng, 120, 1.0, false);
        const double a = auroc(ind, ood);
        std::vector<double> ni(ind), no(ood);
        for (double& x : ni) x = -x;
        for (double& x : no) x = -x;
        CHECK(auroc(ni, no) == doctest::Approx(1 - a).epsilon(1e-15));
        for (double& x : ind) x = std::exp(3 * x) + 1;
        for (double& x : ood) x = std::exp(3 * x) + 1;
        CHECK(auroc(ind, ood) == a);
    }

    TEST_CASE("fpr at 95") {
        CHECK(fpr_at_tpr(std::vector<double>{0, 1}, std::vector<double>{2, 3}) == 0.0);
        // Twenty OOD scores 1..20: the threshold keeps 19 of them, so it sits at 2.
        std::vector<double> ood(20);
        std::iota(ood.begin(), ood.end(), 1.0);
        const std::vector<double> ind{1.0, 1.5, 2.0, 2.5, 30.0};
        CHECK(fpr_at_tpr(ind, ood) == doctest::Approx(3.0 / 5.0));
        // Identical multisets flag about the target fraction.
        Rng rng(9);
        const auto scores = draw(rng, 1000, 0.0, false);
        CHECK(fpr_at_tpr(scores, scores) == doctest::Approx(0.95).epsilon(0.002));
        CHECK_THROWS_AS(fpr_at_tpr(ind, ood, 0.0), ConfigError);
        CHECK_THROWS_AS(fpr_at_tpr(ind, ood, 1.5), ConfigError);
    }

    TEST_CASE("bad input") {
        const std::vector<double> empty, one{1.0}, bad{NAN};
        CHECK_THROWS_AS(auroc(empty, one), ConfigError);
        CHECK_THROWS_AS(auroc(one, empty), ConfigError);
        CHECK_THROWS_AS(auroc(one, bad), ConfigError);
        CHECK_THROWS_AS(fpr_at_tpr(empty, one), ConfigError);
        CHECK_THROWS_AS(summarize(empty), ConfigError);
    }

    TEST_CASE("summaries") {
        const std::vector<double> single{0.8};
        CHECK(summarize(single).std == 0.0);
        const std::vector<double> two{80, 90};
        CHECK(summarize(two).mean == 85.0);
        CHECK(summarize(two).std == 5.0);
        const std::vector<double> table{90.53, 92.85, 95.09, 93.66, 92.65};
        const Summary s = summarize(table);
        CHECK(s.mean == doctest::Approx(92.956).epsilon(1e-12));
        CHECK(std::round(s.mean * 10) / 10 == doctest::Approx(93.0));
    }
}
