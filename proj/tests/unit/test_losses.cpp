#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "csae/losses.hpp"
#include "csae/rng.hpp"
#include "finite_diff.hpp"

using namespace csae;
using Catch::Approx;

TEST_CASE("recon_loss", "[losses]") {
    VecF x{1, 2};
    VecD same{1, 2};
    REQUIRE(recon_loss(std::span<const float>(x), std::span<const double>(same)) == 0.0);
    VecF a{1, 0};
    VecD zero{0, 0};
    REQUIRE(recon_loss(std::span<const float>(a), std::span<const double>(zero)) == Approx(1.0));
    VecD far{2, 4};
    REQUIRE(recon_loss(std::span<const float>(x), std::span<const double>(far)) == Approx(5.0));
    VecD wrong{1, 2, 3};
    REQUIRE_THROWS_AS(recon_loss(std::span<const float>(x), std::span<const double>(wrong)),
                      ValidationError);
}

TEST_CASE("aux_loss", "[losses]") {
    SaeParams p;
    p.w_enc = MatF(3, 2);
    p.b_enc.assign(3, 0.0f);
    p.w_dec = MatF(2, 3);
    p.b_pre.assign(2, 0.0f);
    p.k = 1;
    p.k_aux = 1;
    p.w_dec(0, 0) = 1;  // dead latent 0 decodes to [1, 0]

    EncodeResult enc;
    enc.v = {1.0, -2.0, -3.0};

    SECTION("no dead latents") {
        enc.x_hat = {0.0, 0.0};
        REQUIRE(aux_loss(p, VecF{1, 0}, enc, {}) == 0.0);
    }
    SECTION("perfect residual fit") {
        enc.x_hat = {0.0, 0.0};  // residual [1, 0] matches 1 * column 0
        const std::size_t dead[] = {0};
        REQUIRE(aux_loss(p, VecF{1, 0}, enc, dead) == Approx(0.0));
    }
    SECTION("orthogonal residual") {
        enc.x_hat = {0.0, 0.0};  // residual [0, 1]; e = [0,1] - [1,0]
        const std::size_t dead[] = {0};
        REQUIRE(aux_loss(p, VecF{0, 1}, enc, dead) == Approx(2.0));
    }
    SECTION("dead latents that never fire leave the residual untouched") {
        enc.v = {-1.0, -2.0, -3.0};
        enc.x_hat = {1.0, 0.0};  // r = 0
        const std::size_t dead[] = {0, 1};
        REQUIRE(aux_loss(p, VecF{1, 0}, enc, dead) == Approx(0.0));
    }
}

TEST_CASE("ca_loss", "[losses]") {
    SECTION("single pair at v = 0") {
        MatD v(1, 4);
        REQUIRE(ca_loss(v, {{2}}) == Approx(std::log(2.0)));
    }
    SECTION("saturated pair vanishes") {
        MatD v(1, 2);
        v(0, 1) = 1000.0;
        REQUIRE(ca_loss(v, {{1}}) == Approx(0.0).margin(1e-12));
    }
    SECTION("mean over pairs") {
        MatD v(2, 3);
        REQUIRE(ca_loss(v, {{0}, {1}}) == Approx(std::log(2.0)));
    }
    SECTION("no targets means zero loss") {
        MatD v(2, 3);
        REQUIRE(ca_loss(v, {{}, {}}) == 0.0);
    }
    SECTION("monotonically decreasing in each targeted pre-activation") {
        MatD v(1, 2);
        double prev = ca_loss(v, {{0}});
        for (double x = 0.5; x < 8; x += 0.5) {
            v(0, 0) = x;
            const double cur = ca_loss(v, {{0}});
            REQUIRE(cur < prev);
            prev = cur;
        }
    }
    SECTION("target index out of range") {
        MatD v(1, 2);
        REQUIRE_THROWS_AS(ca_loss(v, {{5}}), ValidationError);
    }
}

TEST_CASE("oc_loss", "[losses]") {
    SECTION("identical columns for the only pair") {
        MatD v(3, 2);
        for (std::size_t i = 0; i < 3; ++i) v(i, 0) = v(i, 1) = static_cast<double>(i);
        const std::size_t o[] = {0};
        const std::size_t s[] = {1};
        REQUIRE(oc_loss(v, o, s) == Approx(1.0));
    }
    SECTION("constant column contributes zero") {
        MatD v(3, 2);
        for (std::size_t i = 0; i < 3; ++i) {
            v(i, 0) = 5.0;
            v(i, 1) = static_cast<double>(i);
        }
        const std::size_t o[] = {0};
        const std::size_t s[] = {1};
        REQUIRE(oc_loss(v, o, s) == 0.0);
    }
    SECTION("squared pearson example") {
        MatD v(4, 2);
        const double a[] = {1, 2, 3, 4};
        const double b[] = {1, 3, 2, 4};
        for (std::size_t i = 0; i < 4; ++i) {
            v(i, 0) = a[i];
            v(i, 1) = b[i];
        }
        const std::size_t o[] = {0};
        const std::size_t s[] = {1};
        REQUIRE(oc_loss(v, o, s) == Approx(0.64));
    }
    SECTION("empty sets or tiny batches yield zero") {
        MatD v(1, 2);
        const std::size_t o[] = {0};
        const std::size_t s[] = {1};
        REQUIRE(oc_loss(v, {}, s) == 0.0);
        REQUIRE(oc_loss(v, o, {}) == 0.0);
        REQUIRE(oc_loss(v, o, s) == 0.0);  // B = 1
    }
    SECTION("invariant to positive affine rescaling of a latent column") {
        Rng rng(14);
        MatD v(6, 4);
        for (auto& x : v.data) x = rng.next_normal();
        const std::size_t o[] = {0, 1};
        const std::size_t s[] = {2, 3};
        const double before = oc_loss(v, o, s);
        for (std::size_t i = 0; i < 6; ++i) v(i, 2) = 3.5 * v(i, 2) + 4.0;
        REQUIRE(oc_loss(v, o, s) == Approx(before).margin(1e-12));
    }
}

TEST_CASE("l1_loss", "[losses]") {
    MatD zero(2, 3);
    REQUIRE(l1_loss(zero) == 0.0);
    MatD v(1, 2);
    v(0, 0) = 3;
    v(0, 1) = -1;
    REQUIRE(l1_loss(v) == Approx(2.0));
    SECTION("positive homogeneity") {
        Rng rng(8);
        MatD m(3, 4);
        for (auto& x : m.data) x = rng.next_normal();
        const double base = l1_loss(m);
        MatD scaled = m;
        for (auto& x : scaled.data) x *= 2.5;
        REQUIRE(l1_loss(scaled) == Approx(2.5 * base));
    }
}

TEST_CASE("global_ce_loss", "[losses]") {
    SECTION("uniform softmax") {
        MatD v(1, 2);
        const std::size_t cls[] = {0};
        REQUIRE(global_ce_loss(v, cls) == Approx(std::log(2.0)));
    }
    SECTION("saturated class vanishes") {
        MatD v(1, 3);
        v(0, 1) = 500.0;
        const std::size_t cls[] = {1};
        REQUIRE(global_ce_loss(v, cls) == Approx(0.0).margin(1e-12));
    }
    SECTION("direct softmax evaluation") {
        MatD v(1, 3);
        v(0, 0) = 1;
        v(0, 1) = 2;
        v(0, 2) = 3;
        const std::size_t cls[] = {2};
        REQUIRE(global_ce_loss(v, cls) == Approx(0.40760596).margin(1e-6));
    }
    SECTION("class index out of range") {
        MatD v(1, 2);
        const std::size_t cls[] = {4};
        REQUIRE_THROWS_AS(global_ce_loss(v, cls), ValidationError);
    }
    SECTION("unlabeled samples are skipped") {
        MatD v(2, 2);
        v(1, 0) = 900.0;  // would dominate if counted
        const std::size_t cls[] = {0, kNoClass};
        REQUIRE(global_ce_loss(v, cls) == Approx(std::log(2.0)));
    }
}

TEST_CASE("loss report decomposition", "[losses]") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        auto inst = csae::testing::make_instance(rng);
        const LossWeights w{1.0 / 32.0, 3.0, 0.1, 0.01};
        const auto [rep, grads] = total_loss_and_grads(inst.params, inst.batch, w, inst.dead);
        REQUIRE(rep.total ==
                Approx(rep.recon + w.alpha * rep.aux + w.beta * (rep.ca + w.gamma * rep.oc) +
                       w.lambda * rep.l1)
                    .margin(1e-6));
    }
}

TEST_CASE("loss weights validate", "[losses]") {
    LossWeights bad{-0.1, 0, 0, 0};
    REQUIRE_THROWS_AS(bad.validate(), ValidationError);
}
