#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "talkstab/embedding_control.hpp"
#include "talkstab/fixtures.hpp"
#include "talkstab/rng.hpp"

using namespace talkstab;

namespace {

// 68-point set with the inner-lip rows placed explicitly; everything else at
// the origin.
LandmarkSet ibug_set(double upper_y, double lower_y) {
    LandmarkSet set;
    set.dim = 2;
    set.coords.assign(68 * 2, 0.0);
    for (int idx : {61, 62, 63}) set.coords[idx * 2 + 1] = upper_y;
    for (int idx : {65, 66, 67}) set.coords[idx * 2 + 1] = lower_y;
    return set;
}

LandmarkSet inner6_set(std::initializer_list<std::pair<double, double>> pts) {
    LandmarkSet set;
    set.dim = 2;
    for (const auto& [x, y] : pts) {
        set.coords.push_back(x);
        set.coords.push_back(y);
    }
    return set;
}

EmbeddingVector emb(std::initializer_list<double> v) { return EmbeddingVector{v}; }

} // namespace

TEST_CASE("lip_distance", "[embedding_control]") {
    const LipScheme scheme68 = lip_scheme("ibug68");
    const LipScheme scheme6 = lip_scheme("inner6");

    SECTION("symmetric construction") {
        REQUIRE(lip_distance(ibug_set(1.0, -1.0), scheme68) == Catch::Approx(2.0));
    }
    SECTION("closed mouth") {
        REQUIRE(lip_distance(ibug_set(0.3, 0.3), scheme68) == 0.0);
    }
    SECTION("hand-computed centroids") {
        const LandmarkSet set =
            inner6_set({{0, 2}, {1, 2}, {2, 2}, {0, 0}, {1, 0}, {2, 0}});
        REQUIRE(lip_distance(set, scheme6) == Catch::Approx(2.0));
    }
    SECTION("missing indices") {
        LandmarkSet small;
        small.dim = 2;
        small.coords.assign(10, 0.0); // 5 points, ibug68 indices absent
        REQUIRE_THROWS_AS(lip_distance(small, scheme68), ValidationError);
    }
    SECTION("non-finite coordinates") {
        LandmarkSet set = ibug_set(1.0, -1.0);
        set.coords[61 * 2] = std::numeric_limits<double>::quiet_NaN();
        REQUIRE_THROWS_AS(lip_distance(set, scheme68), ValidationError);
    }
    SECTION("unknown scheme name") {
        REQUIRE_THROWS_AS(lip_scheme("dlib5"), ValidationError);
    }
}

TEST_CASE("lip_distance is invariant under rigid motions", "[embedding_control]") {
    CounterRng rng(606);
    const LipScheme scheme = lip_scheme("inner6");
    for (int trial = 0; trial < 50; ++trial) {
        CounterRng stream = rng.stream(trial);
        LandmarkSet set;
        set.dim = 2;
        for (int p = 0; p < 6; ++p) {
            set.coords.push_back(stream.uniform(-3, 3));
            set.coords.push_back(stream.uniform(-3, 3));
        }
        const double base = lip_distance(set, scheme);

        const double theta = stream.uniform(0, 2 * std::numbers::pi);
        const double tx = stream.uniform(-10, 10), ty = stream.uniform(-10, 10);
        LandmarkSet moved = set;
        for (size_t p = 0; p < 6; ++p) {
            const double x = set.x(p), y = set.y(p);
            moved.coords[p * 2 + 0] = std::cos(theta) * x - std::sin(theta) * y + tx;
            moved.coords[p * 2 + 1] = std::sin(theta) * x + std::cos(theta) * y + ty;
        }
        REQUIRE(lip_distance(moved, scheme) == Catch::Approx(base).margin(1e-9));
    }
}

TEST_CASE("select_anchor", "[embedding_control]") {
    const LipScheme scheme = lip_scheme("ibug68");

    auto track_from_gammas = [&](const std::vector<double>& gammas) {
        LandmarkTrack track;
        track.dim = 2;
        for (double g : gammas) track.frames.push_back(ibug_set(g / 2, -g / 2));
        return track;
    };

    SECTION("argmin of the lip distance") {
        const auto track = track_from_gammas({3.0, 1.0, 2.0});
        const std::vector<EmbeddingVector> embs = {emb({1, 0}), emb({2, 0}), emb({3, 0})};
        const AnchorSelection sel = select_anchor(track, embs, scheme);
        REQUIRE(sel.index == 1);
        REQUIRE(sel.state.anchor_gamma == Catch::Approx(1.0));
        REQUIRE(sel.state.anchor_embedding.values == std::vector<double>{2, 0});
    }
    SECTION("ties break to the lowest index") {
        const auto track = track_from_gammas({2.0, 2.0});
        const AnchorSelection sel =
            select_anchor(track, {emb({1}), emb({2})}, scheme);
        REQUIRE(sel.index == 0);
    }
    SECTION("agrees with an exhaustive scan") {
        CounterRng rng(112);
        std::vector<double> gammas;
        std::vector<EmbeddingVector> embs;
        for (int i = 0; i < 50; ++i) {
            gammas.push_back(rng.uniform(0.1, 9.0));
            embs.push_back(emb({static_cast<double>(i)}));
        }
        const auto track = track_from_gammas(gammas);
        size_t best = 0;
        for (size_t i = 1; i < gammas.size(); ++i)
            if (gammas[i] < gammas[best]) best = i;
        REQUIRE(select_anchor(track, embs, scheme).index == best);
    }
    SECTION("length mismatch and empty track") {
        const auto track = track_from_gammas({1.0});
        REQUIRE_THROWS_AS(select_anchor(track, {}, scheme), ValidationError);
        REQUIRE_THROWS_AS(select_anchor(LandmarkTrack{}, {}, scheme), ValidationError);
    }
}

TEST_CASE("compute_lambda", "[embedding_control]") {
    ControllerState state;
    state.anchor_embedding = emb({0});
    state.anchor_gamma = 1.0;

    REQUIRE(compute_lambda(6.0, 3.0, state) == 2.0);
    REQUIRE(compute_lambda(5.0, 5.0, state) == 1.0);
    REQUIRE(compute_lambda(1.0, 0.0, state) == 4.0); // clamped at lambda_max
    REQUIRE(compute_lambda(0.0, 1.0, state) == 0.25); // clamped at lambda_min
    REQUIRE_THROWS_AS(compute_lambda(-1.0, 1.0, state), ValidationError);

    SECTION("scale invariance, exact for power-of-two factors") {
        CounterRng rng(42);
        for (int trial = 0; trial < 100; ++trial) {
            const double gc = rng.uniform(0.01, 8.0);
            const double gp = rng.uniform(0.01, 8.0);
            const double base = compute_lambda(gc, gp, state);
            for (double c : {0.125, 0.5, 2.0, 64.0})
                REQUIRE(compute_lambda(c * gc, c * gp, state) == base);
            const double c = rng.uniform(0.2, 5.0);
            REQUIRE(compute_lambda(c * gc, c * gp, state) ==
                    Catch::Approx(base).epsilon(1e-14));
        }
    }
}

TEST_CASE("adjust_embedding", "[embedding_control]") {
    ControllerState state;
    state.anchor_embedding = emb({0, 0});

    SECTION("affine identities are exact") {
        const EmbeddingVector current = emb({0.123456, -9.75});
        REQUIRE(adjust_embedding(state, current, 1.0).values == current.values);
        REQUIRE(adjust_embedding(state, current, 0.0).values ==
                state.anchor_embedding.values);
    }
    SECTION("extrapolation arithmetic") {
        const EmbeddingVector out = adjust_embedding(state, emb({1, 2}), 2.0);
        REQUIRE(out.values == std::vector<double>{2, 4});
    }
    SECTION("dimension mismatch") {
        REQUIRE_THROWS_AS(adjust_embedding(state, emb({1, 2, 3}), 1.0), ValidationError);
    }
}

TEST_CASE("adjusted embeddings stay on the anchor-current line", "[embedding_control]") {
    CounterRng rng(2718);
    for (int trial = 0; trial < 1000; ++trial) {
        CounterRng stream = rng.stream(trial);
        const int dim = 2 + static_cast<int>(stream.next_double() * 30);
        ControllerState state;
        EmbeddingVector current;
        for (int i = 0; i < dim; ++i) {
            state.anchor_embedding.values.push_back(stream.gaussian(0, 2));
            current.values.push_back(stream.gaussian(0, 2));
        }
        const double lambda = stream.uniform(-2, 3);
        const EmbeddingVector out = adjust_embedding(state, current, lambda);

        double dir_norm2 = 0, dot = 0;
        std::vector<double> r(dim), dir(dim);
        for (int i = 0; i < dim; ++i) {
            dir[i] = current.values[i] - state.anchor_embedding.values[i];
            r[i] = out.values[i] - state.anchor_embedding.values[i];
            dir_norm2 += dir[i] * dir[i];
            dot += r[i] * dir[i];
        }
        const double dir_norm = std::sqrt(dir_norm2);
        if (dir_norm < 1e-9) continue;
        double residual2 = 0;
        for (int i = 0; i < dim; ++i) {
            const double perp = r[i] - (dot / dir_norm2) * dir[i];
            residual2 += perp * perp;
        }
        REQUIRE(std::sqrt(residual2) < 1e-9 * dir_norm);

        // opening/closing directionality at the vector level
        double rn = 0;
        for (double v : r) rn += v * v;
        if (lambda > 1.0) REQUIRE(std::sqrt(rn) > dir_norm);
        if (lambda < 1.0 && lambda >= 0.0) REQUIRE(std::sqrt(rn) < dir_norm);
    }
}

TEST_CASE("quasi-monotonicity checker", "[embedding_control]") {
    SECTION("affine mapping holds in all three cases") {
        std::vector<double> grid = {-1, 0, 0.5, 1, 2};
        std::vector<double> f;
        for (double l : grid) f.push_back(3 + 2 * l); // stays in R+ across the grid
        const QmVerdict v = quasi_monotonicity_check(grid, f);
        REQUIRE(v.holds);
    }
    SECTION("interior spike is flagged at its lambda") {
        const std::vector<double> grid = {0, 0.5, 1};
        const std::vector<double> f = {1, 5, 3};
        const QmVerdict v = quasi_monotonicity_check(grid, f);
        REQUIRE_FALSE(v.holds);
        REQUIRE(v.violated_case == QmCase::interpolate);
        REQUIRE(v.lambda == 0.5);
        const auto j = verdict_to_json(v);
        REQUIRE(j["verdict"] == "violated");
        REQUIRE(j["case"] == "interpolate");
        REQUIRE(j["lambda"] == 0.5);
    }
    SECTION("missing endpoints are rejected") {
        const std::vector<double> grid = {0, 0.5};
        const std::vector<double> f = {1, 2};
        REQUIRE_THROWS_MATCHES(quasi_monotonicity_check(grid, f), ValidationError,
                               Catch::Matchers::MessageMatches(
                                   Catch::Matchers::ContainsSubstring("missing endpoint")));
    }
    SECTION("unsorted grid is rejected") {
        const std::vector<double> grid = {1, 0};
        const std::vector<double> f = {1, 2};
        REQUIRE_THROWS_AS(quasi_monotonicity_check(grid, f), ValidationError);
    }
    SECTION("synthetic mouth family measured through the projection chain") {
        FixtureSpec spec;
        spec.kind = "mouth_model";
        spec.seed = 31415;
        const MouthModelFixture fx = mouth_model_fixture(spec);
        const LipScheme scheme = lip_scheme(fx.scheme);

        // f(lambda) = lip distance of the shape at alpha1 interpolated between
        // a closed-ish and an open mouth; affine by construction.
        const double a0 = 0.2, a1 = 1.0;
        std::vector<double> grid, f;
        for (int i = 0; i <= 20; ++i) {
            const double l = -0.5 + 2.0 * i / 20.0; // 21 points including 0 and 1
            grid.push_back(l);
            FaceParams p;
            p.alpha = Eigen::VectorXd::Zero(fx.model.m);
            p.beta = Eigen::VectorXd::Zero(fx.model.m);
            p.alpha(0) = (1 - l) * a0 + l * a1;
            const auto lms = project_landmarks(synthesize(fx.model, p).shape, fx.model);
            f.push_back(lip_distance(lms, scheme));
        }
        REQUIRE(quasi_monotonicity_check(grid, f).holds);
    }
}
