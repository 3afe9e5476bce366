#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fedsciml/finite_diff.hpp"
#include "fedsciml/mlp.hpp"
#include "fedsciml/optim.hpp"
#include "fedsciml/rng.hpp"

using namespace fedsciml;
using nn::Activation;
using nn::MlpParams;
using nn::MlpSpec;

TEST_CASE("glorot init: determinism, bound, zero biases") {
    MlpSpec spec{{2, 3, 1}, Activation::Tanh, 1234};
    MlpParams a = nn::init_glorot(spec);
    MlpParams b = nn::init_glorot(spec);
    CHECK(a.flatten() == b.flatten());

    const double bound = std::sqrt(6.0 / (2 + 3));
    for (double w : a.layers[0].w) {
        CHECK(std::fabs(w) <= bound);
    }
    for (const auto& layer : a.layers)
        for (double bias : layer.b)
            CHECK(bias == 0.0);

    MlpSpec other = spec;
    other.seed = 999;
    CHECK(nn::init_glorot(other).flatten() != a.flatten());
}

TEST_CASE("flatten/unflatten round-trips bit-exactly") {
    MlpSpec spec{{3, 5, 4, 2}, Activation::Sin, 7};
    MlpParams p = nn::init_glorot(spec);
    auto flat = p.flatten();
    MlpParams q = MlpParams::from_flat(spec, flat);
    CHECK(q.flatten() == flat);
    CHECK(q.layers.size() == p.layers.size());
}

TEST_CASE("forward: zero net, identity tanh net, dimension errors") {
    MlpSpec spec{{1, 4, 1}, Activation::Tanh, 0};
    MlpParams zeros = MlpParams::zeros(spec);
    auto y = nn::mlp_forward_values(zeros, std::vector<double>{0.7});
    CHECK(y[0] == 0.0);

    // 1 -> 1 "identity" tanh net: single hidden unit, unit weights
    MlpSpec tiny{{1, 1, 1}, Activation::Tanh, 0};
    MlpParams ident = MlpParams::zeros(tiny);
    ident.layers[0].w[0] = 1.0;
    ident.layers[1].w[0] = 1.0;
    auto out = nn::mlp_forward_values(ident, std::vector<double>{0.3});
    CHECK(out[0] == doctest::Approx(std::tanh(0.3)).epsilon(1e-15));

    CHECK_THROWS_AS((void)nn::mlp_forward_values(zeros, std::vector<double>{1.0, 2.0}),
                    UsageError);
}

TEST_CASE("forward on tape matches tape-free evaluation and finite differences") {
    MlpSpec spec{{2, 6, 6, 1}, Activation::Tanh, 42};
    MlpParams p = nn::init_glorot(spec);
    const std::vector<double> x{0.3, -0.8};

    ad::Tape tape;
    auto flat = p.flatten();
    auto leaves = nn::lift(tape, flat);
    std::vector<ad::Var> xs{tape.leaf(x[0]), tape.leaf(x[1])};
    auto y = nn::mlp_forward(tape, spec, leaves, xs);
    auto y_vals = nn::mlp_forward_values(p, x);
    CHECK(y[0].value() == doctest::Approx(y_vals[0]).epsilon(1e-14));

    // gradient w.r.t. the input matches central differences
    auto f = [&](ad::Tape& t, std::span<const ad::Var> v) {
        auto lv = nn::lift(t, flat);
        return nn::mlp_forward(t, spec, lv, v)[0];
    };
    auto rep = ad::finite_diff_check(f, x, 1, 1e-5);
    CHECK(rep.max_rel_err < 1e-5);
}

TEST_CASE("mse loss") {
    ad::Tape t;
    std::vector<ad::Var> preds{t.leaf(1.0), t.leaf(3.0)};
    std::vector<double> targets{0.0, 0.0};
    CHECK(nn::mse_loss(t, preds, targets).value() == 5.0); // (1 + 9) / 2

    std::vector<ad::Var> same{t.leaf(2.0)};
    std::vector<double> tgt{2.0};
    CHECK(nn::mse_loss(t, same, tgt).value() == 0.0);

    std::vector<double> single{1.0};
    std::vector<ad::Var> p2{t.leaf(2.0)};
    CHECK(nn::mse_loss(t, p2, single).value() == 1.0);

    std::vector<ad::Var> none;
    std::vector<double> empty;
    CHECK_THROWS_AS((void)nn::mse_loss(t, none, empty), UsageError);
}

TEST_CASE("adam: first step closed form, zero gradient, determinism") {
    std::vector<double> theta{0.0};
    auto state = nn::AdamState::init(1);
    nn::adam_step(theta, std::vector<double>{1.0}, state, 1e-3);
    CHECK(theta[0] == doctest::Approx(-1e-3 / (1.0 + 1e-8)).epsilon(1e-12));

    std::vector<double> frozen{0.5};
    auto s2 = nn::AdamState::init(1);
    for (int i = 0; i < 10; ++i)
        nn::adam_step(frozen, std::vector<double>{0.0}, s2, 1e-3);
    CHECK(frozen[0] == 0.5);

    // identical runs are bitwise identical
    auto run = [] {
        std::vector<double> th{0.2, -0.4};
        auto st = nn::AdamState::init(2);
        CounterRng rng(3, 3);
        for (int i = 0; i < 50; ++i) {
            std::vector<double> g{rng.uniform(-1, 1), rng.uniform(-1, 1)};
            nn::adam_step(th, g, st, 1e-2);
        }
        return th;
    };
    CHECK(run() == run());

    std::vector<double> bad{0.0};
    auto s3 = nn::AdamState::init(1);
    CHECK_THROWS_AS(nn::adam_step(bad, std::vector<double>{std::nan("")}, s3, 1e-3),
                    NumericError);
    CHECK(bad[0] == 0.0);
    CHECK(s3.t == 0); // state untouched on failure
}

TEST_CASE("adam with beta1=beta2=0 reduces to sign descent") {
    nn::AdamConfig cfg{0.0, 0.0, 1e-12};
    std::vector<double> theta{1.0};
    auto st = nn::AdamState::init(1, cfg);
    nn::adam_step(theta, std::vector<double>{0.37}, st, 0.1);
    CHECK(theta[0] == doctest::Approx(1.0 - 0.1).epsilon(1e-9));
    nn::adam_step(theta, std::vector<double>{-2.5}, st, 0.1);
    CHECK(theta[0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("sgd step") {
    std::vector<double> theta{1.0};
    nn::sgd_step(theta, std::vector<double>{2.0}, 0.1);
    CHECK(theta[0] == doctest::Approx(0.8).epsilon(1e-15));
    nn::sgd_step(theta, std::vector<double>{0.0}, 0.1);
    CHECK(theta[0] == doctest::Approx(0.8).epsilon(1e-15));

    // one centralized step on the quadratic (theta - 1)^2: g = 2(theta-1)
    double th = 0.0;
    const double g = 2.0 * (th - 1.0);
    std::vector<double> v{th};
    nn::sgd_step(v, std::vector<double>{g}, 0.1);
    CHECK(v[0] == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("combine: identity, averaging, dataset weights") {
    MlpSpec spec{{1, 2, 1}, Activation::Tanh, 5};
    MlpParams a = nn::init_glorot(spec);

    std::vector<MlpParams> one{a};
    std::vector<double> w1{1.0};
    CHECK(nn::combine(one, w1).flatten() == a.flatten());

    MlpParams z = MlpParams::zeros(spec);
    MlpParams two = MlpParams::zeros(spec);
    for (auto& layer : two.layers) {
        std::fill(layer.w.begin(), layer.w.end(), 2.0);
        std::fill(layer.b.begin(), layer.b.end(), 2.0);
    }
    std::vector<MlpParams> pair{z, two};
    std::vector<double> w{0.5, 0.5};
    for (double v : nn::combine(pair, w).flatten())
        CHECK(v == 1.0);

    // N1 = 3, N2 = 1 -> weights (0.75, 0.25); theta = (0, 4) -> 1
    for (auto& layer : two.layers) {
        std::fill(layer.w.begin(), layer.w.end(), 4.0);
        std::fill(layer.b.begin(), layer.b.end(), 4.0);
    }
    std::vector<MlpParams> pair2{z, two};
    std::vector<double> wn{0.75, 0.25};
    for (double v : nn::combine(pair2, wn).flatten())
        CHECK(v == 1.0);

    std::vector<double> badw{0.4, 0.4};
    CHECK_THROWS_AS((void)nn::combine(pair2, badw), UsageError);
}

TEST_CASE("combine is affine: combine([theta,theta],[a,1-a]) == theta") {
    MlpSpec spec{{2, 3, 2}, Activation::Relu, 77};
    MlpParams p = nn::init_glorot(spec);
    auto flat = p.flatten();
    for (double alpha : {0.0, 0.25, 0.5, 1.0 / 3.0, 0.9}) {
        std::vector<std::vector<double>> lst{flat, flat};
        std::vector<double> w{alpha, 1.0 - alpha};
        auto mixed = nn::combine(lst, w);
        for (std::size_t i = 0; i < flat.size(); ++i)
            CHECK(mixed[i] == doctest::Approx(flat[i]).epsilon(1e-15));
    }
}

TEST_CASE("checkpoint round trip") {
    MlpSpec spec{{3, 8, 8, 2}, Activation::Sin, 2024};
    MlpParams p = nn::init_glorot(spec);
    std::stringstream ss;
    nn::save_params(ss, p);
    MlpParams q = nn::load_params(ss);
    CHECK(q.activation == p.activation);
    CHECK(q.flatten() == p.flatten());
}
