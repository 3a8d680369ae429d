#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "csae/numerics.hpp"
#include "csae/rng.hpp"

using namespace csae;
using Catch::Approx;

TEST_CASE("matvec", "[numerics]") {
    SECTION("identity") {
        MatF w(2, 2);
        w(0, 0) = 1;
        w(1, 1) = 1;
        VecF x{3, 7};
        const VecF y = matvec(w, x);
        REQUIRE(y == VecF{3, 7});
    }
    SECTION("hand multiplication") {
        MatF w(2, 2);
        w(0, 0) = 1;
        w(0, 1) = 2;
        w(1, 0) = 3;
        w(1, 1) = 4;
        const VecF y = matvec(w, VecF{1, 1});
        REQUIRE(y[0] == Approx(3));
        REQUIRE(y[1] == Approx(7));
    }
    SECTION("zero matrix annihilates") {
        MatF w(2, 2);
        const VecF y = matvec(w, VecF{5, 5});
        REQUIRE(y == VecF{0, 0});
    }
    SECTION("dimension mismatch throws") {
        MatF w(2, 3);
        REQUIRE_THROWS_AS(matvec(w, VecF{1, 2}), ValidationError);
    }
    SECTION("linearity on random inputs") {
        Rng rng(11);
        for (int trial = 0; trial < 50; ++trial) {
            MatF w(5, 4);
            for (auto& v : w.data) v = static_cast<float>(rng.next_normal());
            VecF x(4), y(4), mix(4);
            const float a = static_cast<float>(rng.next_uniform(-2, 2));
            const float b = static_cast<float>(rng.next_uniform(-2, 2));
            for (std::size_t i = 0; i < 4; ++i) {
                x[i] = static_cast<float>(rng.next_normal());
                y[i] = static_cast<float>(rng.next_normal());
                mix[i] = a * x[i] + b * y[i];
            }
            const VecF lhs = matvec(w, mix);
            const VecF wx = matvec(w, x);
            const VecF wy = matvec(w, y);
            for (std::size_t i = 0; i < 5; ++i) {
                const double rhs = static_cast<double>(a) * wx[i] + static_cast<double>(b) * wy[i];
                REQUIRE(lhs[i] == Approx(rhs).margin(1e-5 * (1.0 + std::abs(rhs))));
            }
        }
    }
}

TEST_CASE("topk_mask", "[numerics]") {
    SECTION("forced by ordering") {
        VecF v{3, 1, 2, 5};
        REQUIRE(topk_mask(std::span<const float>(v), 2) == std::vector<std::size_t>{0, 3});
    }
    SECTION("ties break toward the lower index") {
        VecF v{1, 1, 1};
        REQUIRE(topk_mask(std::span<const float>(v), 2) == std::vector<std::size_t>{0, 1});
    }
    SECTION("all-negative input") {
        VecF v{-1, -2, -3};
        REQUIRE(topk_mask(std::span<const float>(v), 1) == std::vector<std::size_t>{0});
    }
    SECTION("k out of range") {
        VecF v{1, 2};
        REQUIRE_THROWS_AS(topk_mask(std::span<const float>(v), 0), ValidationError);
        REQUIRE_THROWS_AS(topk_mask(std::span<const float>(v), 3), ValidationError);
    }
    SECTION("cardinality and append invariance") {
        Rng rng(5);
        for (int trial = 0; trial < 1000; ++trial) {
            const std::size_t n = 2 + rng.next_below(20);
            const std::size_t k = 1 + rng.next_below(n);
            VecF v(n);
            for (auto& x : v) x = static_cast<float>(rng.next_normal());
            const auto idx = topk_mask(std::span<const float>(v), k);
            REQUIRE(idx.size() == k);
            float kth = v[idx[0]];
            for (std::size_t i : idx) kth = std::min(kth, v[i]);
            // appending entries strictly below the k-th largest changes nothing
            VecF extended = v;
            extended.push_back(kth - 1.0f);
            extended.push_back(kth - 2.0f);
            REQUIRE(topk_mask(std::span<const float>(extended), k) == idx);
            // every excluded entry is <= the k-th largest
            for (std::size_t i = 0; i < n; ++i) {
                if (std::find(idx.begin(), idx.end(), i) == idx.end()) {
                    REQUIRE(v[i] <= kth);
                }
            }
        }
    }
}

TEST_CASE("pearson", "[numerics]") {
    SECTION("self correlation") {
        VecD a{1, 2, 3};
        REQUIRE(pearson(std::span<const double>(a), std::span<const double>(a)) == Approx(1.0));
    }
    SECTION("negation") {
        VecD a{1, 2, 3};
        VecD b{3, 2, 1};
        REQUIRE(pearson(std::span<const double>(a), std::span<const double>(b)) == Approx(-1.0));
    }
    SECTION("direct formula example") {
        VecD a{1, 2, 3, 4};
        VecD b{1, 3, 2, 4};
        REQUIRE(pearson(std::span<const double>(a), std::span<const double>(b)) == Approx(0.8));
    }
    SECTION("zero variance yields 0") {
        VecD a{2, 2, 2};
        VecD b{1, 2, 3};
        REQUIRE(pearson(std::span<const double>(a), std::span<const double>(b)) == 0.0);
    }
    SECTION("contract errors") {
        VecD a{1, 2};
        VecD b{1, 2, 3};
        REQUIRE_THROWS_AS(pearson(std::span<const double>(a), std::span<const double>(b)),
                          ValidationError);
        VecD c{1};
        REQUIRE_THROWS_AS(pearson(std::span<const double>(c), std::span<const double>(c)),
                          ValidationError);
    }
    SECTION("bounds and affine relation") {
        Rng rng(3);
        for (int trial = 0; trial < 1000; ++trial) {
            const std::size_t n = 2 + rng.next_below(16);
            VecD a(n), b(n);
            for (std::size_t i = 0; i < n; ++i) {
                a[i] = rng.next_normal();
                b[i] = rng.next_normal();
            }
            const double rho = pearson(std::span<const double>(a), std::span<const double>(b));
            REQUIRE(std::abs(rho) <= 1.0);
            const double c = rng.next_uniform(-3, 3);
            const double dshift = rng.next_uniform(-3, 3);
            if (c == 0.0) continue;
            VecD scaled(n);
            for (std::size_t i = 0; i < n; ++i) scaled[i] = c * a[i] + dshift;
            const double self =
                pearson(std::span<const double>(a), std::span<const double>(scaled));
            REQUIRE(self == Approx(c > 0 ? 1.0 : -1.0).margin(1e-9));
        }
    }
}

TEST_CASE("sigmoid and log-sigmoid", "[numerics]") {
    REQUIRE(sigmoid(0.0) == Approx(0.5));
    REQUIRE(log_sigmoid(0.0) == Approx(-std::log(2.0)));
    REQUIRE(log_sigmoid(-1000.0) == Approx(-1000.0).margin(1e-9));
    REQUIRE(std::isfinite(log_sigmoid(-1e8)));
    SECTION("sigmoid(x) + sigmoid(-x) = 1") {
        Rng rng(9);
        for (int trial = 0; trial < 1000; ++trial) {
            const double x = rng.next_uniform(-40, 40);
            REQUIRE(sigmoid(x) + sigmoid(-x) == Approx(1.0).margin(1e-7));
        }
    }
}

TEST_CASE("rng determinism and forking", "[numerics][rng]") {
    SECTION("identical seeds give identical sequences") {
        Rng a(123456), b(123456);
        for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
    }
    SECTION("forks do not depend on parent draw position") {
        Rng a(42), b(42);
        (void)b.next_u64();
        (void)b.next_u64();
        Rng fa = a.fork(3);
        Rng fb = b.fork(3);
        for (int i = 0; i < 20; ++i) REQUIRE(fa.next_u64() == fb.next_u64());
    }
    SECTION("unit draws stay in [0,1)") {
        Rng rng(77);
        for (int i = 0; i < 1000; ++i) {
            const double u = rng.next_unit();
            REQUIRE(u >= 0.0);
            REQUIRE(u < 1.0);
        }
    }
}
