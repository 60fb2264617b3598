#include "opal/tasks.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace opal;

namespace {

Environment box_env(Objective f, std::size_t dim, std::size_t budget) {
    return Environment(std::move(f), Eigen::VectorXd::Constant(dim, -100.0), Eigen::VectorXd::Constant(dim, 100.0),
                       budget);
}

}  // namespace

TEST_CASE("analytic functions hit their known optima") {
    std::vector<double> zero(7, 0.0), ones(7, 1.0);
    CHECK(fn::sphere(zero) == 0.0);
    CHECK(std::abs(fn::rastrigin(zero)) < 1e-12);
    CHECK(std::abs(fn::ackley(zero)) < 1e-12);
    CHECK(fn::rosenbrock(ones) == 0.0);
    const std::vector<double> x{1.0, 2.0};
    CHECK(fn::sphere(x) == 5.0);
}

TEST_CASE("every family has minimum 0 in its untransformed frame") {
    for (Family f : kAllFamilies) {
        const auto obj = make_function(f, 6, 11);
        std::vector<double> opt(6, f == Family::rosenbrock ? 1.0 : 0.0);
        CAPTURE(to_string(f));
        CHECK(std::abs(obj(opt)) < 1e-9);
        Rng rng(3);
        std::uniform_real_distribution<double> u(-50.0, 50.0);
        for (int t = 0; t < 50; ++t) {
            std::vector<double> x(6);
            for (auto& v : x) v = u(rng);
            CHECK(obj(x) >= -1e-9);
        }
    }
}

TEST_CASE("rosenbrock needs two dimensions") {
    CHECK_THROWS_AS(make_function(Family::rosenbrock, 1), std::invalid_argument);
    CHECK_NOTHROW(make_function(Family::sphere, 1));
    CHECK_THROWS_AS(family_from_string("levy"), std::invalid_argument);
}

TEST_CASE("environment counts every evaluation and records the trajectory") {
    Environment env = box_env([](std::span<const double> x) { return fn::sphere(x); }, 3, 5);
    const std::vector<double> x{0.0, 0.0, 0.0};
    CHECK(env.evaluate(x) == 0.0);
    CHECK(env.evals_used() == 1);
    CHECK(env.trajectory().size() == 1);
    for (int i = 0; i < 4; ++i) env.evaluate(x);
    CHECK(env.remaining() == 0);
    CHECK_THROWS_AS(env.evaluate(x), BudgetExhausted);
    env.permit_overshoot(2);
    CHECK(env.remaining() == 2);
    env.evaluate(x);
    CHECK(env.evals_used() == 6);
    CHECK(env.trajectory().size() == 6);
}

TEST_CASE("non-finite objective values are replaced and counted") {
    Environment env = box_env([](std::span<const double>) { return std::nan(""); }, 2, 3);
    const std::vector<double> x{1.0, 1.0};
    CHECK(env.evaluate(x) == kNonFiniteFitness);
    CHECK(env.nonfinite_count() == 1);
}

TEST_CASE("recording can be switched off without affecting the count") {
    Environment env = box_env([](std::span<const double> x) { return fn::sphere(x); }, 2, 10);
    const std::vector<double> x{1.0, 1.0};
    env.evaluate(x);
    env.set_recording(false);
    env.evaluate(x);
    CHECK(env.evals_used() == 2);
    CHECK(env.trajectory().size() == 1);
}

TEST_CASE("rotations are orthogonal") {
    Rng rng(7);
    for (std::size_t d : {1u, 2u, 10u, 30u}) {
        const Eigen::MatrixXd R = random_rotation(d, rng);
        CHECK((R.transpose() * R - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("task optimum sits at the shift with value equal to the bias") {
    for (Family f : kAllFamilies)
        for (bool cec : {false, true}) {
            const TaskSpec spec = make_task(f, 10, 99, 10000, 0.0, cec);
            CAPTURE(to_string(f));
            CHECK(spec.shift.minCoeff() >= -80.0);
            CHECK(spec.shift.maxCoeff() <= 80.0);
            const auto obj = task_objective(spec);
            const std::vector<double> s(spec.shift.data(), spec.shift.data() + spec.shift.size());
            CHECK(obj(s) == doctest::Approx(spec.bias).epsilon(1e-9).scale(1.0));
            CHECK(spec.label == label_for(f));
        }
}

TEST_CASE("noise-free tasks are deterministic bitwise") {
    const TaskSpec spec = make_task(Family::composition_blend, 5, 4, 5000);
    Environment env = make_environment(spec);
    const std::vector<double> x{3.0, -4.0, 10.0, 0.5, 7.0};
    const double a = env.evaluate(x);
    const double b = env.evaluate(x);
    CHECK(a == b);
}

TEST_CASE("label table follows construction") {
    CHECK(label_for(Family::sphere) == LandscapeLabel::unimodal);
    CHECK(label_for(Family::rosenbrock) == LandscapeLabel::unimodal);
    CHECK(label_for(Family::rastrigin) == LandscapeLabel::simple_multimodal);
    CHECK(label_for(Family::ackley) == LandscapeLabel::simple_multimodal);
    CHECK(label_for(Family::nn_landscape) == LandscapeLabel::simple_multimodal);
    CHECK(label_for(Family::hybrid_blend) == LandscapeLabel::hybrid);
    CHECK(label_for(Family::composition_blend) == LandscapeLabel::composition);
}

TEST_CASE("labels do not depend on the affine transform") {
    for (Family f : kAllFamilies) {
        const auto a = make_task(f, 10, 1, 1000);
        const auto b = make_task(f, 10, 2, 1000);
        CHECK(a.label == b.label);
    }
}

TEST_CASE("mixed pool covers all labels and sets budget 1000 d") {
    Rng rng(2024);
    std::set<LandscapeLabel> seen;
    std::size_t noisy = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto task = sample_task(rng, TaskPool::mixed);
        seen.insert(task.spec.label);
        CHECK(task.spec.budget == 1000 * task.spec.dim);
        CHECK((task.spec.dim == 10 || task.spec.dim == 30 || task.spec.dim == 50));
        CHECK(task.env.lower().minCoeff() == -100.0);
        CHECK(task.env.upper().maxCoeff() == 100.0);
        if (task.spec.noise_sigma > 0) ++noisy;
    }
    CHECK(seen.size() == 4);
    CHECK(noisy > 200);
    CHECK(noisy < 400);
}

TEST_CASE("restricted pool draws only CEC-like noise-free tasks from its subset") {
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        const auto task = sample_task(rng, TaskPool::restricted);
        const auto& fams = restricted_families();
        CHECK(std::find(fams.begin(), fams.end(), task.spec.family) != fams.end());
        CHECK(task.spec.cec_like);
        CHECK(task.spec.noise_sigma == 0.0);
        REQUIRE(task.env.known_shift().has_value());
        CHECK(*task.env.known_shift() == task.spec.bias);
    }
}

TEST_CASE("task records round-trip") {
    const TaskSpec spec = make_task(Family::hybrid_blend, 30, 1234567, 30000, 0.25, true);
    const TaskSpec back = task_from_record(to_record(spec));
    CHECK(back.family == spec.family);
    CHECK(back.dim == spec.dim);
    CHECK(back.seed == spec.seed);
    CHECK(back.noise_sigma == spec.noise_sigma);
    CHECK(back.label == spec.label);
    CHECK(back.budget == spec.budget);
    CHECK(back.cec_like);
    CHECK((back.rotation - spec.rotation).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.shift - spec.shift).cwiseAbs().maxCoeff() == 0.0);
}
