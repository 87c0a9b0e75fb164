#include <doctest.h>

#include <cmath>

#include "kcbo/consensus.hpp"
#include "kcbo/diagnostics.hpp"
#include "kcbo/rng.hpp"

using namespace kcbo;

namespace {

// Unstabilized softmax in extended precision; the independent oracle for the
// stabilized implementation. Valid while alpha * f stays inside long double
// exponent range.
std::vector<double> naive_consensus_ld(const std::vector<double>& positions, int J, int d,
                                       double alpha, const ObjectiveSpec& f) {
    long double wsum = 0.0L;
    std::vector<long double> acc(d, 0.0L);
    for (int j = 0; j < J; ++j) {
        const long double w =
            expl(-static_cast<long double>(alpha) * f.eval({positions.data() + j * d, (std::size_t)d}));
        wsum += w;
        for (int i = 0; i < d; ++i) acc[i] += w * positions[j * d + i];
    }
    std::vector<double> out(d);
    for (int i = 0; i < d; ++i) out[i] = static_cast<double>(acc[i] / wsum);
    return out;
}

ObjectiveSpec shifted_objective(const ObjectiveSpec& base, const std::vector<double>& c) {
    ObjectiveSpec out = base;
    out.eval_rows = nullptr;
    out.eval = [base, c](std::span<const double> x) {
        std::vector<double> y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] - c[i];
        return base.eval({y.data(), y.size()});
    };
    return out;
}

}  // namespace

TEST_CASE("weighted_consensus worked examples") {
    SUBCASE("single particle is its own consensus") {
        const std::vector<double> x{1.5, -2.0};
        const auto f = make_objective("tanh_quadratic", 2);
        const auto c = weighted_consensus(x, 1, 2, 3.0, f);
        CHECK(c.point[0] == 1.5);
        CHECK(c.point[1] == -2.0);
    }
    SUBCASE("alpha = 0 is the arithmetic mean") {
        const std::vector<double> x{0.0, 2.0};
        const auto f = make_objective("tanh_quadratic", 1);
        const auto c = weighted_consensus(x, 2, 1, 0.0, f);
        CHECK(c.point[0] == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("hand-evaluated softmax: alpha = ln 3, weights {3/4, 1/4}") {
        // f(0) = 0, f(1) = 1 via a linear ramp objective
        ObjectiveSpec f;
        f.name = "ramp";
        f.dim = 1;
        f.f_lower = 0.0;
        f.f_upper = 1.0;
        f.lipschitz = 1.0;
        f.eval = [](std::span<const double> x) { return std::clamp(x[0], 0.0, 1.0); };
        const std::vector<double> x{0.0, 1.0};
        const auto c = weighted_consensus(x, 2, 1, std::log(3.0), f);
        CHECK(c.point[0] == doctest::Approx(0.25).epsilon(1e-14));
        const auto d = delta_alpha(x, 2, 1, std::log(3.0), f);
        CHECK(d[0] == doctest::Approx(0.25).epsilon(1e-13));
    }
}

TEST_CASE("delta_alpha trivial cases") {
    const auto f = make_objective("cosine_well", 2);
    RngStream s(7, 0);
    std::vector<double> x(10 * 2);
    for (auto& v : x) v = s.gaussian();
    SUBCASE("alpha = 0 gives the zero vector") {
        const auto d = delta_alpha(x, 10, 2, 0.0, f);
        for (double v : d) CHECK(std::abs(v) < 1e-14);
    }
    SUBCASE("all particles at one point") {
        std::vector<double> same(6 * 2, 0.7);
        const auto d = delta_alpha(same, 6, 2, 2.5, f);
        for (double v : d) CHECK(std::abs(v) < 1e-14);
    }
}

TEST_CASE("noise_matrix_apply and tau") {
    SUBCASE("zero displacement kills both kinds") {
        const std::vector<double> x{0.0, 0.0}, dw{1.0, -2.0};
        for (auto kind : {NoiseKind::Isotropic, NoiseKind::Anisotropic}) {
            const auto out = noise_matrix_apply(x, kind, dw);
            CHECK(out[0] == 0.0);
            CHECK(out[1] == 0.0);
        }
    }
    SUBCASE("isotropic scales by |x|") {
        const std::vector<double> x{3.0, 4.0}, dw{1.0, 0.0};
        const auto out = noise_matrix_apply(x, NoiseKind::Isotropic, dw);
        CHECK(out[0] == doctest::Approx(5.0).epsilon(1e-15));
        CHECK(out[1] == 0.0);
    }
    SUBCASE("anisotropic acts diagonally") {
        const std::vector<double> x{3.0, 4.0}, dw{1.0, 1.0};
        const auto out = noise_matrix_apply(x, NoiseKind::Anisotropic, dw);
        CHECK(out[0] == 3.0);
        CHECK(out[1] == 4.0);
    }
    CHECK(tau_of(NoiseKind::Isotropic, 5) == 5.0);
    CHECK(tau_of(NoiseKind::Anisotropic, 5) == 1.0);
    CHECK(chi_of(NoiseKind::Isotropic, 3, 8.0) == 9.0);
}

TEST_CASE("stabilized consensus matches the extended-precision oracle") {
    RngStream s(42, 0);
    const auto f = make_objective("tanh_rastrigin", 3);
    for (int trial = 0; trial < 200; ++trial) {
        const int J = 1 + static_cast<int>(s.uniform() * 12);
        const int d = 1 + static_cast<int>(s.uniform() * 3);
        const auto fd = make_objective("tanh_rastrigin", d);
        const double alpha = 20.0 * s.uniform() / fd.range();
        std::vector<double> x(J * d);
        for (auto& v : x) v = 4.0 * s.uniform_sym();
        const auto fast = weighted_consensus(x, J, d, alpha, fd);
        const auto slow = naive_consensus_ld(x, J, d, alpha, fd);
        for (int i = 0; i < d; ++i) {
            const double scale = std::max(1.0, std::abs(slow[i]));
            REQUIRE(std::abs(fast.point[i] - slow[i]) <= 1e-12 * scale);
        }
    }
    (void)f;
}

TEST_CASE("weighted-mean displacement inequality (moment bound)") {
    RngStream s(43, 0);
    for (int trial = 0; trial < 300; ++trial) {
        const int J = 2 + static_cast<int>(s.uniform() * 24);
        const int d = 1 + static_cast<int>(s.uniform() * 3);
        const auto f = make_objective("cosine_well", d);
        const double alpha = 3.0 * s.uniform();
        std::vector<double> x(J * d);
        for (auto& v : x) v = 3.0 * s.gaussian();
        const auto delta = delta_alpha(x, J, d, alpha, f);
        double dn2 = 0.0;
        for (double v : delta) dn2 += v * v;
        const double dn = std::sqrt(dn2);
        const double factor = std::exp(alpha * f.range());
        for (double q : {2.0, 4.0, 8.0}) {
            const double lhs = std::pow(dn, q);
            const double rhs = factor * centered_moment(x, J, d, q);
            REQUIRE(lhs <= rhs * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("translation covariance with the shifted objective") {
    RngStream s(44, 0);
    const int J = 9, d = 2;
    const auto f = make_objective("ackley", d);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(J * d), c(d);
        for (auto& v : x) v = 2.0 * s.gaussian();
        for (auto& v : c) v = 3.0 * s.uniform_sym();
        const double alpha = 2.0 * s.uniform();
        auto shifted = x;
        for (int j = 0; j < J; ++j)
            for (int i = 0; i < d; ++i) shifted[j * d + i] += c[i];
        const auto base = weighted_consensus(x, J, d, alpha, f);
        const auto moved = weighted_consensus(shifted, J, d, alpha, shifted_objective(f, c));
        for (int i = 0; i < d; ++i)
            REQUIRE(std::abs(moved.point[i] - (base.point[i] + c[i])) <=
                    1e-12 * std::max(1.0, std::abs(base.point[i]) + std::abs(c[i])));
    }
}

TEST_CASE("no overflow for alpha * range up to 700") {
    ObjectiveSpec f;
    f.name = "ramp";
    f.dim = 1;
    f.f_lower = 0.0;
    f.f_upper = 1.0;
    f.lipschitz = 1.0;
    f.eval = [](std::span<const double> x) { return std::clamp(x[0], 0.0, 1.0); };
    std::vector<double> x{0.0, 0.25, 0.5, 1.0};
    const auto c = weighted_consensus(x, 4, 1, 700.0, f);
    CHECK(std::isfinite(c.point[0]));
    CHECK(c.point[0] == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(std::isfinite(c.log_partition));
}

TEST_CASE("consensus stays in the coordinate hull") {
    RngStream s(45, 0);
    for (int trial = 0; trial < 100; ++trial) {
        const int J = 2 + static_cast<int>(s.uniform() * 10);
        const int d = 1 + static_cast<int>(s.uniform() * 4);
        const auto f = make_objective("tanh_quadratic", d);
        std::vector<double> x(J * d);
        for (auto& v : x) v = 10.0 * s.uniform_sym();
        const auto c = weighted_consensus(x, J, d, 5.0 * s.uniform(), f);
        for (int i = 0; i < d; ++i) {
            double lo = x[i], hi = x[i];
            for (int j = 1; j < J; ++j) {
                lo = std::min(lo, x[j * d + i]);
                hi = std::max(hi, x[j * d + i]);
            }
            REQUIRE(c.point[i] >= lo - 1e-12);
            REQUIRE(c.point[i] <= hi + 1e-12);
        }
    }
}

TEST_CASE("consensus error paths") {
    const auto f = make_objective("cosine_well", 1);
    std::vector<double> empty;
    CHECK_THROWS_AS(weighted_consensus(empty, 0, 1, 1.0, f), EmptyEnsembleError);
    std::vector<double> bad{0.5, std::nan("")};
    CHECK_THROWS_AS(weighted_consensus(bad, 2, 1, 1.0, f), NumericalError);
}
