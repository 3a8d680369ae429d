#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "csae/rng.hpp"
#include "csae/sae.hpp"

using namespace csae;
using Catch::Approx;

namespace {

SaeParams zero_params(std::size_t d, std::size_t n, std::size_t k) {
    SaeParams p;
    p.w_enc = MatF(n, d);
    p.b_enc.assign(n, 0.0f);
    p.w_dec = MatF(d, n);
    p.b_pre.assign(d, 0.0f);
    p.k = k;
    p.k_aux = k;
    return p;
}

}  // namespace

TEST_CASE("encode", "[sae]") {
    SECTION("all-zero parameters give the zero code and reconstruction") {
        SaeParams p = zero_params(2, 3, 2);
        const EncodeResult enc = encode(p, VecF{1.5f, -2.0f});
        REQUIRE(enc.v == VecD{0, 0, 0});
        REQUIRE(enc.support == std::vector<std::size_t>{0, 1});  // zero ties, lower index
        REQUIRE(enc.z_values == VecD{0, 0});
        REQUIRE(enc.x_hat == VecD{0, 0});
    }
    SECTION("hand-evaluated 2x3 encoder") {
        SaeParams p = zero_params(2, 3, 1);
        p.w_enc(0, 0) = 1;
        p.w_enc(1, 1) = 1;
        p.w_enc(2, 0) = 1;
        p.w_enc(2, 1) = 1;
        const EncodeResult enc = encode(p, VecF{1, 2});
        REQUIRE(enc.v == VecD{1, 2, 3});
        REQUIRE(enc.support == std::vector<std::size_t>{2});
        REQUIRE(enc.z_values == VecD{3});
    }
    SECTION("input equal to b_pre centers to zero pre-activations") {
        SaeParams p = zero_params(2, 3, 1);
        Rng rng(4);
        for (auto& w : p.w_enc.data) w = static_cast<float>(rng.next_normal());
        p.b_pre = {0.7f, -1.1f};
        const EncodeResult enc = encode(p, VecF{0.7f, -1.1f});
        for (double v : enc.v) REQUIRE(v == Approx(0.0).margin(1e-12));
    }
    SECTION("dimension mismatch throws") {
        SaeParams p = zero_params(2, 3, 1);
        REQUIRE_THROWS_AS(encode(p, VecF{1, 2, 3}), ValidationError);
    }
    SECTION("post-TopK sparsity never exceeds k") {
        Rng rng(10);
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t d = 3 + rng.next_below(5);
            const std::size_t n = 4 + rng.next_below(12);
            const std::size_t k = 1 + rng.next_below(n);
            SaeParams p = zero_params(d, n, k);
            for (auto& w : p.w_enc.data) w = static_cast<float>(rng.next_normal());
            for (auto& w : p.w_dec.data) w = static_cast<float>(rng.next_normal());
            VecF x(d);
            for (auto& v : x) v = static_cast<float>(rng.next_normal());
            const EncodeResult enc = encode(p, x);
            REQUIRE(enc.support.size() == k);
            std::size_t nonzero = 0;
            for (double z : enc.z_values) nonzero += z != 0.0 ? 1 : 0;
            REQUIRE(nonzero <= k);
        }
    }
    SECTION("permutation equivariance over latents") {
        Rng rng(21);
        const std::size_t d = 4, n = 6, k = 2;
        SaeParams p = zero_params(d, n, k);
        for (auto& w : p.w_enc.data) w = static_cast<float>(rng.next_normal());
        // keep pre-activations positive and distinct; index tie-breaking at
        // ReLU zeros is deliberately not permutation-equivariant
        for (auto& b : p.b_enc) b = static_cast<float>(rng.next_uniform(2.0, 4.0));
        // a permutation with no fixed points
        const std::size_t perm[n] = {3, 4, 5, 0, 1, 2};
        SaeParams q = p;
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t r = 0; r < d; ++r) q.w_enc(perm[j], r) = p.w_enc(j, r);
            q.b_enc[perm[j]] = p.b_enc[j];
        }
        VecF x(d);
        for (auto& v : x) v = static_cast<float>(rng.next_normal());
        const EncodeResult a = encode(p, x);
        const EncodeResult b = encode(q, x);
        for (std::size_t j = 0; j < n; ++j) REQUIRE(b.v[perm[j]] == a.v[j]);
        std::vector<std::size_t> mapped;
        for (std::size_t j : a.support) mapped.push_back(perm[j]);
        std::sort(mapped.begin(), mapped.end());
        REQUIRE(b.support == mapped);
    }
}

TEST_CASE("decode", "[sae]") {
    SaeParams p = zero_params(2, 3, 2);
    p.w_dec(0, 0) = 1;  // column 0 = [1, 0]
    p.w_dec(1, 1) = 1;  // column 1 = [0, 1]
    SECTION("empty support returns b_pre") {
        p.b_pre = {0.25f, -0.5f};
        const VecD out = decode(p, {}, {});
        REQUIRE(out == VecD{0.25, -0.5});
    }
    SECTION("single column") {
        const std::size_t support[] = {0};
        const double values[] = {1.0};
        REQUIRE(decode(p, support, values) == VecD{1, 0});
    }
    SECTION("two columns plus offset") {
        p.b_pre = {1.0f, 1.0f};
        const std::size_t support[] = {0, 1};
        const double values[] = {2.0, 3.0};
        REQUIRE(decode(p, support, values) == VecD{3, 4});
    }
    SECTION("latent index out of range") {
        const std::size_t support[] = {7};
        const double values[] = {1.0};
        REQUIRE_THROWS_AS(decode(p, support, values), ValidationError);
    }
}

TEST_CASE("round trip at k = n with an inverse decoder", "[sae]") {
    // W_enc = [[2,1],[1,2]], W_dec = its inverse; all pre-activations positive
    SaeParams p = zero_params(2, 2, 2);
    p.w_enc(0, 0) = 2;
    p.w_enc(0, 1) = 1;
    p.w_enc(1, 0) = 1;
    p.w_enc(1, 1) = 2;
    const float third = 1.0f / 3.0f;
    p.w_dec(0, 0) = 2 * third;
    p.w_dec(0, 1) = -third;
    p.w_dec(1, 0) = -third;
    p.w_dec(1, 1) = 2 * third;
    Rng rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        VecF x{static_cast<float>(rng.next_uniform(0.5, 2.0)),
               static_cast<float>(rng.next_uniform(0.5, 2.0))};
        const EncodeResult enc = encode(p, x);
        for (double v : enc.v) REQUIRE(v > 0.0);
        REQUIRE(enc.x_hat[0] == Approx(x[0]).margin(1e-4));
        REQUIRE(enc.x_hat[1] == Approx(x[1]).margin(1e-4));
    }
}

TEST_CASE("init_params", "[sae]") {
    SECTION("b_pre starts at the data mean") {
        Rng rng(6);
        VecF mean{0.5f, -0.25f, 0.125f};
        SaeParams p = init_params(3, 8, 2, 4, mean, rng);
        REQUIRE(p.b_pre == mean);
        Rng rng2(6);
        SaeParams z = init_params(3, 8, 2, 4, VecF{0, 0, 0}, rng2);
        REQUIRE(z.b_pre == VecF{0, 0, 0});
    }
    SECTION("decoder columns are unit norm and encoder is the transpose") {
        Rng rng(123);
        SaeParams p = init_params(5, 16, 3, 6, VecF(5, 0.0f), rng);
        for (std::size_t j = 0; j < p.n(); ++j) {
            double norm2 = 0.0;
            for (std::size_t r = 0; r < p.d(); ++r) {
                norm2 += static_cast<double>(p.w_dec(r, j)) * p.w_dec(r, j);
                REQUIRE(p.w_enc(j, r) == p.w_dec(r, j));
            }
            REQUIRE(std::sqrt(norm2) == Approx(1.0).margin(1e-6));
        }
        for (float b : p.b_enc) REQUIRE(b == 0.0f);
    }
    SECTION("same seed gives bit-identical parameters") {
        Rng a(99), b(99);
        SaeParams pa = init_params(4, 10, 2, 4, VecF(4, 0.0f), a);
        SaeParams pb = init_params(4, 10, 2, 4, VecF(4, 0.0f), b);
        REQUIRE(pa == pb);
    }
}

TEST_CASE("dead latent tracker", "[sae]") {
    SECTION("fresh tracker with an empty support increments everyone") {
        DeadLatentTracker t(4, 3);
        t.observe({}, {});
        for (std::uint32_t c : t.since_fired) REQUIRE(c == 1);
        REQUIRE(t.dead_count() == 0);
    }
    SECTION("firing at window-1 resets the counter") {
        DeadLatentTracker t(2, 5);
        for (int i = 0; i < 4; ++i) t.observe({}, {});
        REQUIRE_FALSE(t.is_dead(0));
        const std::size_t support[] = {0};
        const double values[] = {1.0};
        t.observe(support, values);
        REQUIRE(t.since_fired[0] == 0);
        REQUIRE(t.since_fired[1] == 5);
        REQUIRE_FALSE(t.is_dead(0));
        REQUIRE(t.is_dead(1));
    }
    SECTION("a zero-valued support entry does not count as firing") {
        DeadLatentTracker t(2, 2);
        const std::size_t support[] = {0};
        const double values[] = {0.0};
        t.observe(support, values);
        t.observe(support, values);
        REQUIRE(t.is_dead(0));
        REQUIRE(t.dead_set() == std::vector<std::size_t>{0, 1});
    }
}
