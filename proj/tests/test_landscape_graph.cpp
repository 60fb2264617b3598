#include "opal/landscape_graph.hpp"
#include "opal/tasks.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

using namespace opal;

namespace {

RowMatrix random_points(std::size_t n, std::size_t d, Rng& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    RowMatrix X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = u(rng);
    return X;
}

std::vector<double> sphere_fitness(const RowMatrix& X) {
    std::vector<double> f(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) f[static_cast<std::size_t>(i)] = X.row(i).squaredNorm();
    return f;
}

std::vector<std::size_t> iota(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

}  // namespace

TEST_CASE("short trajectories are kept whole by every strategy") {
    Rng rng(1);
    std::vector<double> f(100);
    for (auto& v : f) v = std::uniform_real_distribution<double>()(rng);
    for (auto s : {SubsampleStrategy::time_uniform, SubsampleStrategy::random, SubsampleStrategy::fitness_stratified,
                   SubsampleStrategy::mixed})
        CHECK(subsample(100, 300, s, f, rng) == iota(100));
}

TEST_CASE("time-uniform subsample includes both ends with even gaps") {
    Rng rng(1);
    std::vector<double> f(1000, 0.0);
    const auto idx = subsample(1000, 300, SubsampleStrategy::time_uniform, f, rng);
    REQUIRE(idx.size() == 300);
    CHECK(idx.front() == 0);
    CHECK(idx.back() == 999);
    const double gap = 999.0 / 299.0;
    for (std::size_t i = 1; i < idx.size(); ++i) CHECK(std::abs(static_cast<double>(idx[i] - idx[i - 1]) - gap) <= 1.0);
}

TEST_CASE("mixed and stratified subsamples are exact-size, sorted and distinct") {
    Rng rng(9);
    std::vector<double> f(1000);
    for (auto& v : f) v = std::normal_distribution<double>()(rng);
    for (auto s : {SubsampleStrategy::mixed, SubsampleStrategy::fitness_stratified, SubsampleStrategy::random}) {
        const auto idx = subsample(1000, 300, s, f, rng);
        CHECK(idx.size() == 300);
        CHECK(std::is_sorted(idx.begin(), idx.end()));
        CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == 300);
        CHECK(idx.back() < 1000);
    }
}

TEST_CASE("stratified subsample draws across the fitness range") {
    Rng rng(3);
    std::vector<double> f(1000);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = static_cast<double>(i);
    const auto idx = subsample(1000, 100, SubsampleStrategy::fitness_stratified, f, rng);
    std::array<int, 10> per_bin{};
    for (auto i : idx) ++per_bin[i / 100];
    for (int c : per_bin) CHECK(c == 10);
}

TEST_CASE("node features: ranks, time, constant fitness and dimension column") {
    RowMatrix X(3, 2);
    X << 0, 0, 1, 0, 0, 2;
    const std::vector<double> f{3.0, 1.0, 2.0};
    const std::vector<std::size_t> orig{0, 1, 2};
    const Eigen::MatrixXd H = node_features(X, f, orig, 3, 2);
    CHECK(H(0, kRankNorm) == 1.0);
    CHECK(H(1, kRankNorm) == 0.0);
    CHECK(H(2, kRankNorm) == 0.5);
    CHECK(H(1, kDistBest) == 0.0);
    CHECK(H(0, kDistBest) == doctest::Approx(1.0));
    CHECK(H(2, kDistBest) == doctest::Approx(std::sqrt(5.0)));
    CHECK(H(0, kTimeNorm) == 0.0);
    CHECK(H(2, kTimeNorm) == 1.0);
    CHECK(H(0, kDimFeature) == doctest::Approx(std::log(3.0)));

    RowMatrix one(1, 1);
    one << 5.0;
    const std::vector<double> f1{7.0};
    const std::vector<std::size_t> o1{0};
    const Eigen::MatrixXd H1 = node_features(one, f1, o1, 1, 1);
    CHECK(H1(0, kTimeNorm) == 0.0);
    CHECK(H1(0, kDimFeature) == doctest::Approx(0.6931471805599453));
    CHECK(H1(0, kFitnessZ) == 0.0);

    const std::vector<double> flat(3, 4.0);
    const Eigen::MatrixXd Hc = node_features(X, flat, orig, 3, 2);
    CHECK(Hc.col(kFitnessZ).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("local improvement is measured along time order") {
    RowMatrix X = RowMatrix::Zero(3, 1);
    const std::vector<double> f{5.0, 4.0, 6.0};
    const std::vector<std::size_t> orig{10, 20, 30};
    const Eigen::MatrixXd H = node_features(X, f, orig, 40, 1);
    // raw signal [0, 1, -2], standardized
    const Eigen::Vector3d raw(0.0, 1.0, -2.0);
    const double mu = raw.mean();
    const double sd = std::sqrt((raw.array() - mu).square().mean());
    for (int i = 0; i < 3; ++i) CHECK(H(i, kLocalImprovement) == doctest::Approx((raw[i] - mu) / (sd + kStandardizeEps)));
}

TEST_CASE("standardized columns have zero mean and unit variance") {
    Rng rng(4);
    const RowMatrix X = random_points(50, 3, rng);
    const auto f = sphere_fitness(X);
    const auto orig = iota(50);
    const Eigen::MatrixXd H = node_features(X, f, orig, 50, 3);
    for (int c : {int(kFitnessZ), int(kLocalImprovement)}) {
        const Eigen::VectorXd col = H.col(c);
        CHECK(std::abs(col.mean()) < 1e-9);
        CHECK((col.array() - col.mean()).square().mean() == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("k-NN adjacency shapes") {
    Rng rng(5);
    const RowMatrix three = random_points(3, 2, rng);
    CHECK(knn_adjacency(three, 10) == Eigen::MatrixXd::Ones(3, 3));
    const RowMatrix one = random_points(1, 2, rng);
    CHECK(knn_adjacency(one, 10) == Eigen::MatrixXd::Ones(1, 1));

    const RowMatrix X = random_points(40, 4, rng);
    const Eigen::MatrixXd A = knn_adjacency(X, 5);
    CHECK(A == A.transpose());
    CHECK(A.diagonal() == Eigen::VectorXd::Ones(40));
    for (Eigen::Index i = 0; i < 40; ++i) CHECK(A.row(i).sum() >= 6.0);
    CHECK(((A.array() == 0.0) || (A.array() == 1.0)).all());
}

TEST_CASE("k-NN distance ties go to the lower index") {
    RowMatrix X(5, 1);
    X << 0.0, 1.0, -1.0, 1.5, -1.5;
    const Eigen::MatrixXd A = knn_adjacency(X, 1);
    // node 0 sees 1 and 2 at equal distance and picks 1; nodes 1 and 2 point elsewhere
    CHECK(A(0, 1) == 1.0);
    CHECK(A(0, 2) == 0.0);
    CHECK(A(2, 4) == 1.0);
}

TEST_CASE("build_graph caps nodes, honours identity mode and stays finite") {
    Rng rng(6);
    const RowMatrix X = random_points(2000, 5, rng);
    const auto f = sphere_fitness(X);
    GraphConfig cfg;
    const TrajectoryGraph g = build_graph(X, f, 5, cfg, rng);
    CHECK(g.nodes() == 300);
    CHECK(g.k_eff == 10);
    CHECK(g.selected.size() == 300);
    CHECK(g.points.rows() == 300);
    CHECK(g.H.allFinite());

    cfg.mode = GraphMode::identity;
    Rng a(1), b(1);
    GraphConfig knn;
    const TrajectoryGraph gi = build_graph(X, f, 5, cfg, a);
    const TrajectoryGraph gk = build_graph(X, f, 5, knn, b);
    CHECK(gi.A == Eigen::MatrixXd::Identity(300, 300));
    CHECK(gi.H == gk.H);

    const RowMatrix small = random_points(50, 3, rng);
    const TrajectoryGraph gs = build_graph(small, sphere_fitness(small), 3, GraphConfig{}, rng);
    CHECK(gs.nodes() == 50);
    CHECK(gs.H.allFinite());

    RowMatrix empty(0, 3);
    std::vector<double> none;
    CHECK_THROWS_AS(build_graph(empty, none, 3, GraphConfig{}, rng), std::invalid_argument);
}

TEST_CASE("graph is equivariant under a permutation of the points") {
    Rng rng(8);
    const RowMatrix X = random_points(60, 3, rng);
    const auto f = sphere_fitness(X);
    const auto orig = iota(60);
    std::vector<std::size_t> perm = iota(60);
    std::shuffle(perm.begin(), perm.end(), rng);
    RowMatrix Xp(60, 3);
    std::vector<double> fp(60);
    std::vector<std::size_t> op(60);
    for (std::size_t i = 0; i < 60; ++i) {
        Xp.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(perm[i]));
        fp[i] = f[perm[i]];
        op[i] = orig[perm[i]];
    }
    const Eigen::MatrixXd H = node_features(X, f, orig, 60, 3);
    const Eigen::MatrixXd Hp = node_features(Xp, fp, op, 60, 3);
    const Eigen::MatrixXd A = knn_adjacency(X, 10);
    const Eigen::MatrixXd Ap = knn_adjacency(Xp, 10);
    for (std::size_t i = 0; i < 60; ++i) {
        CHECK((Hp.row(static_cast<Eigen::Index>(i)) - H.row(static_cast<Eigen::Index>(perm[i]))).cwiseAbs().maxCoeff() < 1e-12);
        for (std::size_t j = 0; j < 60; ++j)
            CHECK(Ap(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) ==
                  A(static_cast<Eigen::Index>(perm[i]), static_cast<Eigen::Index>(perm[j])));
    }
}

TEST_CASE("environment graph uses the unit box and the recorded trajectory") {
    const TaskSpec spec = make_task(Family::rastrigin, 4, 2, 4000);
    Environment env = make_environment(spec);
    Rng rng(3);
    std::uniform_real_distribution<double> u(-100.0, 100.0);
    for (int i = 0; i < 500; ++i) {
        std::vector<double> x(4);
        for (auto& v : x) v = u(rng);
        env.evaluate(x);
    }
    const TrajectoryGraph g = build_graph(env, GraphConfig{}, rng);
    CHECK(g.nodes() == 300);
    CHECK(g.points.minCoeff() >= 0.0);
    CHECK(g.points.maxCoeff() <= 1.0);
    CHECK(g.H.col(kDistBest).maxCoeff() <= 2.0 + 1e-12);
}
