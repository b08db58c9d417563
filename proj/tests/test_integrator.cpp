#include <doctest.h>

#include <cmath>

#include "ddpood/errors.hpp"
#include "ddpood/integrator.hpp"

using namespace ddpood;

namespace {

std::shared_ptr<const NoiseSchedule> schedule() {
    static auto s = std::make_shared<const NoiseSchedule>(default_schedule());
    return s;
}

// Exact deterministic flow for a single isotropic Gaussian N(mu, s2 I): in
// the scaled variables y = x / sqrt(ab), r = sqrt((1 - ab) / ab), the
// deviation y - mu grows like sqrt(s2 + r^2).
Vec exact_flow(const Vec& x, int t_from, int t_to, const Vec& mu, double s2) {
    const double a0 = schedule()->alpha_bar(t_from), a1 = schedule()->alpha_bar(t_to);
    const double r0 = (1 - a0) / a0, r1 = (1 - a1) / a1;
    const double g = std::sqrt((s2 + r1) / (s2 + r0));
    Vec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double y = x[i] / std::sqrt(a0);
        out[i] = std::sqrt(a1) * (mu[i] + (y - mu[i]) * g);
    }
    return out;
}

class ZeroField final : public ScoreField {
public:
    explicit ZeroField(std::shared_ptr<const NoiseSchedule> s) : ScoreField(std::move(s)) {}
    std::size_t dim() const override { return 2; }
    bool is_conditional() const override { return false; }
    void eps(std::span<const double>, double, Label, std::span<double> out) const override {
        std::fill(out.begin(), out.end(), 0.0);
    }
    void score(std::span<const double>, double, Label, std::span<double> out) const override {
        std::fill(out.begin(), out.end(), 0.0);
    }
    using ScoreField::eps;
    using ScoreField::score;
};

double max_diff(const Vec& a, const Vec& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_SUITE("integrator") {
    TEST_CASE("forward diffusion endpoints") {
        const Vec x0{1.5, -2.0}, noise{0.3, 0.4};
        CHECK(forward_diffuse(x0, 0, noise, *schedule()) == x0);
        CHECK(std::sqrt(schedule()->alpha_bar(1000)) < 7e-3);
        const Vec xT = forward_diffuse(x0, 1000, noise, *schedule());
        CHECK(max_diff(xT, noise) < 0.02);
        CHECK_THROWS_AS(forward_diffuse(x0, 10, Vec{1.0}, *schedule()), DimensionError);
    }

    TEST_CASE("forward diffusion moments") {
        Rng rng(12);
        const Vec x0{1.0};
        const int t = 500;
        const int n = 100000;
        double sum = 0, sum_sq = 0;
        for (int i = 0; i < n; ++i) {
            const double v = forward_diffuse(x0, t, rng.normal_vector(1), *schedule())[0];
            sum += v;
            sum_sq += v * v;
        }
        const double mean = sum / n, var = sum_sq / n - mean * mean;
        const double ab = schedule()->alpha_bar(t);
        CHECK(std::abs(mean - std::sqrt(ab)) < 3 * std::sqrt((1 - ab) / n));
        CHECK(std::abs(var - (1 - ab)) < 3 * (1 - ab) * std::sqrt(2.0 / n));
    }

    TEST_CASE("reverse step algebra") {
        const Vec x0{0.7, -0.2}, noise{1.1, -0.5};
        for (int t : {1, 20, 333, 1000}) {
            const Vec xt = forward_diffuse(x0, t, noise, *schedule());
            const Vec back = reverse_step(xt, noise, t, t, 0.0, std::nullopt, *schedule());
            CHECK(max_diff(back, x0) <= 1e-10);
        }
        const Vec x{0.4, 2.0}, eps{-0.3, 0.8};
        for (int t : {20, 500, 1000}) {
            const Vec a = reverse_step(x, eps, t, 20, 0.0, std::nullopt, *schedule());
            const Vec b = transfer(x, eps, t, t - 20, *schedule());
            CHECK(max_diff(a, b) <= 1e-12);
            const Vec c = reverse_step(x, Vec{0, 0}, t, 20, 0.0, std::nullopt, *schedule());
            const double r = std::sqrt(schedule()->alpha_bar(t - 20) / schedule()->alpha_bar(t));
            CHECK(c[0] == doctest::Approx(r * 0.4).epsilon(1e-15));
        }
        CHECK_THROWS_AS(reverse_step(x, eps, 100, 20, 1.0, Vec{0, 0}, *schedule()), ConfigError);
        CHECK_THROWS_AS(reverse_step(x, eps, 100, 20, 0.1, std::nullopt, *schedule()), ConfigError);
        CHECK_THROWS_AS(reverse_step(x, eps, 10, 20, 0.0, std::nullopt, *schedule()), IndexError);
    }

    TEST_CASE("transfer runs both ways") {
        const Vec x{0.4, 2.0}, eps{-0.3, 0.8};
        const Vec down = transfer(x, eps, 400, 380, *schedule());
        const Vec up = transfer(down, eps, 380, 400, *schedule());
        CHECK(max_diff(up, x) < 1e-13);
    }

    TEST_CASE("multistep blend") {
        const std::vector<Vec> same(4, Vec{0.25, -1.0});
        CHECK(pndm_combine(same)[0] == doctest::Approx(0.25).epsilon(1e-15));
        CHECK(pndm_combine(same)[1] == doctest::Approx(-1.0).epsilon(1e-15));
        // eps(t) = a + b t on t, t + d, t + 2d, t + 3d. The fourth-order
        // weights integrate that line over the next step: value at t - d/2.
        const double a = 0.3, b = -0.01, t = 500, d = 20;
        std::vector<Vec> hist;
        for (int k = 0; k < 4; ++k) hist.push_back({a + b * (t + k * d)});
        CHECK(pndm_combine(hist)[0] == doctest::Approx(a + b * (t - d / 2)).epsilon(1e-13));
        CHECK_THROWS_AS(pndm_combine(std::vector<Vec>(3, Vec{1.0})), ConfigError);
    }

    TEST_CASE("deterministic methods track the exact single-Gaussian flow") {
        const Vec mu{1.0, -0.5};
        const MixtureField field(GaussianMixture::isotropic({1.0}, {mu}, 0.25), schedule());
        const Vec x{0.8, 1.4};
        const Vec exact = exact_flow(x, 1000, 0, mu, 0.25);
        RunOptions o;
        o.method = IntegratorMethod::PNDM;
        const Vec pndm = run_ddp(field, x, 1000, 0, 20, o).final_state();
        o.method = IntegratorMethod::DDIM;
        const Vec ddim = run_ddp(field, x, 1000, 0, 20, o).final_state();
        const Vec ddim_fine = run_ddp(field, x, 1000, 0, 1, o).final_state();
        o.method = IntegratorMethod::PF;
        const Vec pf = run_ddp(field, x, 1000, 0, 20, o).final_state();
        MESSAGE("50-step endpoint error: pndm " << max_diff(pndm, exact) << ", ddim " << max_diff(ddim, exact)
                                                << ", ddim 1000 steps " << max_diff(ddim_fine, exact));
        CHECK(max_diff(pndm, exact) < max_diff(ddim, exact));
        CHECK(max_diff(ddim_fine, exact) < max_diff(ddim, exact));
        // Fifty multistep steps beat a thousand first-order ones.
        CHECK(max_diff(pndm, exact) < max_diff(ddim_fine, exact));
        CHECK(max_diff(pndm, exact) < 1.5e-3);
        // The probability-flow drift is the continuous-time form of the same
        // process; it agrees with the discrete flow up to O(beta) effects.
        CHECK(max_diff(pf, exact) < 0.05);
    }

    TEST_CASE("pf step with zero drift leaves x alone") {
        auto tiny = std::make_shared<const NoiseSchedule>(build_linear_schedule(10, 1e-300, 1e-300));
        const ZeroField field(tiny);
        const Vec x{0.3, -7.0};
        CHECK(pf_rk4_step(x, 5.0, -1.0, field) == x);
    }

    TEST_CASE("pf rk4 converges at fourth order") {
        const Vec mu{1.0, -0.5};
        const MixtureField field(GaussianMixture::isotropic({1.0}, {mu}, 0.25), schedule());
        const Vec x{0.8, 1.4};
        RunOptions o;
        o.method = IntegratorMethod::PF;
        const Vec a = run_ddp(field, x, 1000, 200, 200, o).final_state();
        const Vec b = run_ddp(field, x, 1000, 200, 100, o).final_state();
        const Vec c = run_ddp(field, x, 1000, 200, 50, o).final_state();
        const double ratio = max_diff(a, b) / max_diff(b, c);
        MESSAGE("successive difference ratio " << ratio);
        CHECK(ratio > 10.0);
    }

    TEST_CASE("run_ddp contracts") {
        const MixtureField field(GaussianMixture::isotropic({0.5, 0.5}, {{2, 0}, {-2, 0}}, 1.0, {0, 1}), schedule());
        const Vec x{0.5, 0.5};
        RunOptions o;
        const Trajectory id = run_ddp(field, x, 300, 300, 20, o);
        CHECK(id.states.size() == 1);
        CHECK(id.final_state() == x);

        const Trajectory full = run_ddp(field, x, 1000, 0, 20, o);
        CHECK(full.states.size() == 51);
        CHECK(full.steps.front() == 1000);
        CHECK(full.steps.back() == 0);

        o.method = IntegratorMethod::DDPM;
        CHECK_THROWS_AS(run_ddp(field, x, 0, 1000, 20, o), IntegrationError);
        CHECK_THROWS_AS(run_ddp(field, x, 1000, 0, 20, o), ConfigError);
        Rng r1(5), r2(5);
        o.rng = &r1;
        const Trajectory d1 = run_ddp(field, x, 1000, 0, 20, o);
        o.rng = &r2;
        const Trajectory d2 = run_ddp(field, x, 1000, 0, 20, o);
        CHECK(d1.states == d2.states);

        RunOptions g;
        g.condition = 0;
        g.omega = 3.0;
        const Vec guided = run_ddp(field, Vec{0.0, 0.0}, 600, 0, 20, g).final_state();
        CHECK(guided[0] > 0.5);  // pulled toward the label-0 component at (2, 0)

        const std::vector<Trajectory> runs{full};
        const std::string csv = trajectories_csv(runs);
        CHECK(csv.rfind("sample_id,t,x0,x1\n0,1000,", 0) == 0);
    }

    TEST_CASE("round trips") {
        const MixtureField field(GaussianMixture::isotropic({0.5, 0.5}, {{2, 0}, {-2, 0}}, 1.0), schedule());
        const Vec x{1.7, 0.4};
        CHECK(reconstruction_error(field, x, 0, 20, IntegratorMethod::DDIM) == 0.0);
        const double ddim = reconstruction_error(field, x, 1000, 20, IntegratorMethod::DDIM);
        const double pndm = reconstruction_error(field, x, 1000, 20, IntegratorMethod::PNDM);
        const double pf = reconstruction_error(field, x, 1000, 20, IntegratorMethod::PF);
        MESSAGE("round trip ddim " << ddim << " pndm " << pndm << " pf " << pf);
        CHECK(pndm * 2 <= ddim);
        CHECK(pf * 2 <= ddim);
        double previous = 0.0;
        for (int t = 200; t <= 1000; t += 200) {
            const double e = reconstruction_error(field, x, t, 20, IntegratorMethod::DDIM);
            CHECK(e >= previous);
            previous = e;
        }
        CHECK_THROWS_AS(reconstruction_error(field, x, 1000, 20, IntegratorMethod::DDPM), ConfigError);
    }

    TEST_CASE("DDPM keeps the standard normal stationary") {
        const MixtureField field(GaussianMixture::isotropic({1.0}, {{0.0}}, 1.0), schedule());
        Rng rng(77);
        RunOptions o;
        o.method = IntegratorMethod::DDPM;
        o.rng = &rng;
        o.keep_states = false;
        const int n = 4000;
        double sum = 0, sum_sq = 0;
        for (int i = 0; i < n; ++i) {
            const double v = run_ddp(field, rng.normal_vector(1), 1000, 0, 1, o).final_state()[0];
            sum += v;
            sum_sq += v * v;
        }
        const double mean = sum / n, var = sum_sq / n - mean * mean;
        CHECK(std::abs(mean) < 4 / std::sqrt(n));
        CHECK(std::abs(var - 1.0) < 4 * std::sqrt(2.0 / n));
    }

    TEST_CASE("method names") {
        CHECK(parse_method("PNDM") == IntegratorMethod::PNDM);
        CHECK(parse_method("pf-rk4") == IntegratorMethod::PF);
        CHECK_THROWS_AS(parse_method("euler"), ConfigError);
    }
}
