#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fgan/gan.hpp"
#include "fgan/rng.hpp"
#include "fgan/sim.hpp"
#include "test_util.hpp"

using namespace fgan;

namespace {

// Discriminator that computes sigmoid(x) for scalar inputs.
GanModel scalar_gan() {
    GanModel m = make_gan(1, 1, 42, {}, {});
    m.discriminator_params.values = {1.0, 0.0};
    return m;
}

// Discriminator with zero weights: D == 0.5 everywhere.
GanModel half_gan(std::size_t feature_dim = 1) {
    GanModel m = make_gan(feature_dim, 1, 42, {}, {});
    for (double& v : m.discriminator_params.values) v = 0.0;
    return m;
}

Batch batch_of(std::vector<std::vector<double>> samples) {
    Batch b;
    b.samples = std::move(samples);
    return b;
}

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

TEST_CASE("value function at the indistinguishability point is 2 ln(1/2)") {
    GanModel m = half_gan();
    Batch real = batch_of({{0.3}, {-2.0}});
    Batch fake = batch_of({{5.0}});
    const double v = value_function(m, real, fake);
    CHECK(std::fabs(v - 2.0 * std::log(0.5)) <= 1e-12);
    CHECK(discriminator_loss(m, real, fake) == -v);
}

TEST_CASE("value function stays finite at saturated outputs via clamping") {
    GanModel m = make_gan(1, 1, 42, {}, {});
    m.discriminator_params.values = {1000.0, 0.0};
    Batch real = batch_of({{1.0}});   // D -> 1, clamped to 1 - 1e-7
    Batch fake = batch_of({{-1.0}});  // D -> 0, clamped to 1e-7
    const double v = value_function(m, real, fake);
    const double expected = 2.0 * std::log(1.0 - 1e-7);
    CHECK(std::isfinite(v));
    CHECK(v == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("value function on single-sample batches") {
    GanModel m = scalar_gan();
    Batch real = batch_of({{logit(0.8)}});
    Batch fake = batch_of({{logit(0.4)}});
    const double v = value_function(m, real, fake);
    CHECK(v == doctest::Approx(std::log(0.8) + std::log(0.6)).epsilon(1e-12));
    CHECK(v == doctest::Approx(-0.7340).epsilon(1e-4));
}

TEST_CASE("generator loss is ln 2 at D == 1/2 and decreases as D rises") {
    GanModel m = half_gan();
    Batch fake = batch_of({{1.0}, {2.0}});
    CHECK(generator_loss(m, fake) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    GanModel s = scalar_gan();
    Batch low = batch_of({{logit(0.4)}});
    Batch high = batch_of({{logit(0.6)}});
    CHECK(generator_loss(s, low) > generator_loss(s, high));
}

TEST_CASE("zero-weight discriminator on a symmetric batch has zero gradient") {
    MlpSpec spec;
    spec.layer_sizes = {1, 1};
    spec.output_activation = OutputActivation::sigmoid;
    ParamVector p;
    p.values = {0.0, 0.0};
    Batch real = batch_of({{0.7}, {-0.7}});
    Batch fake = batch_of({{0.7}, {-0.7}});
    ParamVector g = discriminator_gradient(spec, p, real, fake);
    CHECK(g.values[0] == 0.0);  // weight
    CHECK(g.values[1] == 0.0);  // bias
}

TEST_CASE("discriminator gradient matches finite differences") {
    MlpSpec spec;
    spec.layer_sizes = {3, 4, 1};
    spec.hidden_activation = HiddenActivation::relu;
    spec.output_activation = OutputActivation::sigmoid;
    ParamVector params = init_params(spec, 31337);

    Rng rng(555);
    Batch real, fake;
    for (int i = 0; i < 5; ++i) {
        real.samples.push_back({rng.next_normal(), rng.next_normal(), rng.next_normal()});
    }
    for (int i = 0; i < 3; ++i) {
        fake.samples.push_back({rng.next_normal(), rng.next_normal(), rng.next_normal()});
    }

    ParamVector analytic = discriminator_gradient(spec, params, real, fake);
    GanModel probe = make_gan(3, 2, 9, {4}, {4});
    probe.discriminator_spec = spec;
    auto numeric = testutil::finite_difference_gradient(
        params, [&](const ParamVector& p) {
            GanModel m = probe;
            m.discriminator_params = p;
            return discriminator_loss(m, real, fake);
        });
    CHECK(testutil::worst_gradient_mismatch(analytic.values, numeric) == -1);
}

TEST_CASE("generator gradient matches finite differences and has the right size") {
    GanModel m = make_gan(3, 2, 77, {4}, {5});
    Rng rng(888);
    std::vector<std::vector<double>> noise;
    for (int i = 0; i < 4; ++i) noise.push_back({rng.next_normal(), rng.next_normal()});

    ParamVector analytic = generator_gradient(m, noise);
    CHECK(analytic.size() == m.generator_params.size());  // generator params only

    auto numeric = testutil::finite_difference_gradient(
        m.generator_params, [&](const ParamVector& p) {
            GanModel probe = m;
            probe.generator_params = p;
            Batch fake;
            for (const auto& z : noise) fake.samples.push_back(generate_sample(probe, z));
            return generator_loss(probe, fake);
        });
    CHECK(testutil::worst_gradient_mismatch(analytic.values, numeric) == -1);
}

TEST_CASE("overflowing parameters raise a numerical error naming the layer") {
    MlpSpec spec;
    spec.layer_sizes = {1, 2, 1};
    spec.hidden_activation = HiddenActivation::relu;
    spec.output_activation = OutputActivation::sigmoid;
    ParamVector p;
    p.values.assign(spec.param_count(), 0.0);
    p.values[0] = 1e308;  // first hidden weight overflows the activation
    p.values[1] = 1e308;
    Batch real = batch_of({{2.0}});
    Batch fake = batch_of({{3.0}});
    CHECK_THROWS_WITH_AS(discriminator_gradient(spec, p, real, fake),
                         doctest::Contains("layer"), std::runtime_error);
}

TEST_CASE("train_round validates its inputs") {
    GanModel m = make_gan(2, 2, 5, {4}, {4});
    Batch pool = batch_of({{0.1, 0.2}});
    TrainHyper hyper;
    hyper.steps = 0;
    CHECK_THROWS_AS(train_round(m, pool, hyper), std::invalid_argument);

    hyper.steps = 1;
    Batch empty;
    CHECK_THROWS_AS(train_round(m, empty, hyper), std::runtime_error);
}

TEST_CASE("train_round with zero learning rate is the identity on parameters") {
    GanModel m = make_gan(2, 2, 5, {4}, {4});
    Batch pool = batch_of({{0.1, 0.2}, {-0.3, 0.4}});
    TrainHyper hyper;
    hyper.learning_rate = 0.0;
    hyper.steps = 1;
    hyper.batch_size = 2;
    hyper.rng_seed = 11;
    TrainResult r = train_round(m, pool, hyper);
    CHECK(r.model.generator_params == m.generator_params);
    CHECK(r.model.discriminator_params == m.discriminator_params);
    CHECK(r.trace.size() == 1);
}

TEST_CASE("train_round is bit-deterministic in the seed") {
    GanModel m = make_gan(2, 2, 5, {4}, {4});
    Rng rng(21);
    Batch pool;
    for (int i = 0; i < 32; ++i) pool.samples.push_back({rng.next_normal(), rng.next_normal()});
    TrainHyper hyper;
    hyper.steps = 5;
    hyper.batch_size = 8;
    hyper.rng_seed = 1001;
    TrainResult a = train_round(m, pool, hyper);
    TrainResult b = train_round(m, pool, hyper);
    CHECK(a.model.generator_params == b.model.generator_params);
    CHECK(a.model.discriminator_params == b.model.discriminator_params);

    hyper.rng_seed = 1002;
    TrainResult c = train_round(m, pool, hyper);
    CHECK(a.model.discriminator_params.values != c.model.discriminator_params.values);
}

TEST_CASE("semi-supervised mode changes the discriminator trajectory") {
    GanModel m = make_gan(2, 2, 5, {4}, {4});
    Rng rng(22);
    Batch pool;
    for (int i = 0; i < 16; ++i) pool.samples.push_back({rng.next_normal(), rng.next_normal()});
    Batch mal;
    for (int i = 0; i < 8; ++i) {
        mal.samples.push_back({rng.next_normal() + 4.0, rng.next_normal()});
    }
    TrainHyper hyper;
    hyper.steps = 3;
    hyper.batch_size = 8;
    hyper.rng_seed = 7;
    TrainResult plain = train_round(m, pool, hyper);
    TrainResult semi = train_round(m, pool, hyper, &mal);
    CHECK(plain.model.discriminator_params.values !=
          semi.model.discriminator_params.values);
}

TEST_CASE("a trained discriminator separates a genuine cluster from far points") {
    // Genuine data: unit gaussian at the origin in 2-D, trained in
    // semi-supervised mode against a broad background scatter. A pure
    // two-player run cannot control the discriminator far off the data (the
    // generator starts on top of a unit gaussian, so D gets no gradient out
    // at radius 5); the labelled fake pool is what pins the far field down.
    const std::size_t d = 2;
    GanModel m = make_gan(d, 2, 12345, {16, 8}, {16});
    Rng rng(2024);
    Batch pool;
    for (int i = 0; i < 256; ++i) pool.samples.push_back({rng.next_normal(), rng.next_normal()});
    Batch background;
    for (int i = 0; i < 256; ++i) {
        background.samples.push_back(
            {12.0 * rng.next_double() - 6.0, 12.0 * rng.next_double() - 6.0});
    }

    TrainHyper hyper;
    hyper.learning_rate = 0.05;
    hyper.batch_size = 32;
    hyper.steps = 500;
    hyper.rng_seed = 99;
    TrainResult r = train_round(m, pool, hyper, &background);

    std::vector<std::vector<double>> held_out;
    for (int i = 0; i < 128; ++i) held_out.push_back({rng.next_normal(), rng.next_normal()});
    std::vector<std::vector<double>> far;
    for (int i = 0; i < 128; ++i) {
        const double angle = 2.0 * std::numbers::pi * i / 128.0;
        far.push_back({5.0 * std::cos(angle), 5.0 * std::sin(angle)});
    }

    double mean_genuine = 0.0, mean_far = 0.0;
    for (const auto& x : held_out) mean_genuine += discriminator_prob(r.model, x);
    for (const auto& x : far) mean_far += discriminator_prob(r.model, x);
    mean_genuine /= held_out.size();
    mean_far /= far.size();
    CHECK(mean_genuine - mean_far >= 0.2);

    // Anomaly scores separate the two groups nearly perfectly.
    std::vector<double> gs, ms;
    for (const auto& x : held_out) gs.push_back(anomaly_score(r.model, x));
    for (const auto& x : far) ms.push_back(anomaly_score(r.model, x));
    CHECK(rank_auc(gs, ms) > 0.9);
}

TEST_CASE("anomaly score is the complement of the discriminator probability") {
    GanModel m = scalar_gan();
    std::vector<double> x = {logit(0.9)};
    CHECK(anomaly_score(m, x) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(classify(m, x, 0.5) == Label::genuine);
}

TEST_CASE("classification at the threshold is malicious") {
    GanModel m = half_gan();  // D == 0.5 everywhere, so score == 0.5
    std::vector<double> x = {1.23};
    CHECK(anomaly_score(m, x) == 0.5);
    CHECK(classify(m, x, 0.5) == Label::malicious);
    CHECK_THROWS_AS(classify(m, x, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(classify(m, x, 1.0), std::invalid_argument);
}

TEST_CASE("model hash tracks parameter changes") {
    GanModel a = make_gan(2, 2, 5, {4}, {4});
    GanModel b = a;
    CHECK(model_hash(a) == model_hash(b));
    b.discriminator_params.values[0] += 1e-12;
    CHECK(model_hash(a) != model_hash(b));
}
