#include <catch2/catch_amalgamated.hpp>

#include "talkstab/fixtures.hpp"
#include "talkstab/rng.hpp"

#include "test_util.hpp"

using namespace talkstab;

TEST_CASE("counter RNG reproduces the pinned reference stream", "[fixtures]") {
    // SplitMix64 reference outputs for seeds 0 and 42.
    CounterRng r0(0);
    REQUIRE(r0.next_u64() == 0xe220a8397b1dcdafull);
    REQUIRE(r0.next_u64() == 0x6e789e6aa1b965f4ull);
    REQUIRE(r0.next_u64() == 0x06c45d188009454full);
    CounterRng r42(42);
    REQUIRE(r42.next_u64() == 0xbdd732262feb6e95ull);
    REQUIRE(r42.next_u64() == 0x28efe333b266f103ull);

    SECTION("random access matches sequential draws") {
        CounterRng a(1234), b(1234);
        a.next_u64();
        a.next_u64();
        REQUIRE(a.next_u64() == b.at(2));
    }
    SECTION("gaussian draws are deterministic and standardized") {
        CounterRng a(7), b(7);
        double sum = 0, sq = 0;
        for (int i = 0; i < 20000; ++i) {
            const double g = a.next_gaussian();
            sum += g;
            sq += g * g;
        }
        REQUIRE(sum / 20000 == Catch::Approx(0.0).margin(0.03));
        REQUIRE(sq / 20000 == Catch::Approx(1.0).margin(0.03));
        REQUIRE(b.next_gaussian() == CounterRng(7).next_gaussian());
    }
}

TEST_CASE("same seed and spec give byte-identical fixtures", "[fixtures]") {
    TempDir d1("fxa"), d2("fxb");
    FixtureSpec spec;
    spec.kind = "flicker";
    spec.seed = 99;
    spec.width = 32;
    spec.height = 24;
    spec.frames = 6;
    make_fixture(spec, d1.str());
    make_fixture(spec, d2.str());

    for (const auto& entry : std::filesystem::recursive_directory_iterator(d1.path)) {
        if (!entry.is_regular_file()) continue;
        const auto rel = std::filesystem::relative(entry.path(), d1.path);
        CAPTURE(rel.string());
        REQUIRE(read_file_bytes(entry.path().string()) ==
                read_file_bytes((d2.path / rel).string()));
    }
}

TEST_CASE("translation fixture records its ground truth", "[fixtures]") {
    TempDir dir("fxt");
    FixtureSpec spec;
    spec.kind = "translation";
    spec.seed = 5;
    spec.width = 24;
    spec.height = 20;
    spec.frames = 4;
    spec.dx = 1;
    spec.dy = 0;
    const auto manifest = make_fixture(spec, dir.str());
    REQUIRE(manifest["true_flow"]["dx"] == 1.0);
    REQUIRE(manifest["true_flow"]["dy"] == 0.0);

    const FrameSequence seq = load_frames(dir.str("frames/frame_%05d.pgm"));
    REQUIRE(seq.size() == 4);
    // integer shift: frame 1 shows frame 0's content displaced by +1 in x
    for (int y = 0; y < 20; ++y)
        for (int x = 1; x < 24; ++x)
            REQUIRE(seq.frames[1].at(x, y) == seq.frames[0].at(x - 1, y));
}

TEST_CASE("flicker fixture accounts for its injected flow noise", "[fixtures]") {
    FixtureSpec spec;
    spec.kind = "flicker";
    spec.seed = 1234;
    spec.width = 48;
    spec.height = 36;
    spec.frames = 16;
    spec.flow_noise_sigma = 0.1;
    const FlickerFixture fx = flicker_fixture(spec);

    REQUIRE(fx.real.size() == 16);
    REQUIRE(fx.analytic_flow.size() == 15);
    // realized injected variance close to sigma^2 and recorded exactly
    const double expected = spec.flow_noise_sigma * spec.flow_noise_sigma;
    REQUIRE(fx.injected_variance_x == Catch::Approx(expected).epsilon(0.05));
    REQUIRE(fx.injected_variance_y == Catch::Approx(expected).epsilon(0.05));

    // analytic flow is uniform per field and matches the offset deltas
    for (size_t t = 0; t < fx.analytic_flow.size(); ++t) {
        const float want = static_cast<float>(fx.offsets[t + 1] - fx.offsets[t]);
        REQUIRE(fx.analytic_flow.fields[t].u[0] == want);
        REQUIRE(fx.analytic_flow.fields[t].u[100] == want);
        REQUIRE(fx.analytic_flow.fields[t].v[0] == 0.f);
    }
}

TEST_CASE("gaussian flow fixture has the declared noise level", "[fixtures]") {
    FixtureSpec spec;
    spec.kind = "gaussian_flow";
    spec.seed = 777;
    spec.width = 10;
    spec.height = 8;
    spec.frames = 2000;
    const GaussianFlowFixture fx = gaussian_flow_fixture(spec);
    REQUIRE(fx.true_d == Catch::Approx(std::sqrt(0.02)).margin(1e-12));

    // difference fake - real is the injected noise; pooled variance near 0.01
    double sum = 0, sq = 0;
    size_t n = 0;
    for (size_t t = 0; t < fx.real.size(); ++t)
        for (size_t i = 0; i < fx.real.fields[t].u.size(); ++i) {
            const double d = fx.fake.fields[t].u[i] - fx.real.fields[t].u[i];
            sum += d;
            sq += d * d;
            ++n;
        }
    const double var = (sq - sum * sum / n) / (n - 1);
    REQUIRE(var == Catch::Approx(spec.noise_variance_per_component).epsilon(0.05));
}

TEST_CASE("mouth model manifest gamma is affine in alpha1", "[fixtures]") {
    TempDir dir("fxm");
    FixtureSpec spec;
    spec.kind = "mouth_model";
    spec.seed = 100;
    spec.alpha_grid = {0.0, 0.5, 1.0};
    const auto manifest = make_fixture(spec, dir.str());
    const double intercept = manifest["gamma_intercept"].get<double>();
    const double slope = manifest["gamma_slope"].get<double>();
    const auto gammas = manifest["gamma"].get<std::vector<double>>();
    REQUIRE(gammas.size() == 3);
    for (size_t i = 0; i < 3; ++i)
        REQUIRE(gammas[i] ==
                Catch::Approx(intercept + slope * spec.alpha_grid[i]).margin(1e-6));

    // the model container written alongside loads and validates
    const MorphableModel model = load_model(dir.str("model.json"));
    REQUIRE(model.landmark_indices.size() == 6);
}

TEST_CASE("blur ladder writes one file per sigma", "[fixtures]") {
    TempDir dir("fxb");
    FixtureSpec spec;
    spec.kind = "blur_ladder";
    spec.seed = 6;
    spec.width = 80;
    spec.height = 72;
    spec.blur_sigmas = {0.0, 2.0};
    const auto manifest = make_fixture(spec, dir.str());
    REQUIRE(manifest["files"].size() == 2);
    for (const auto& name : manifest["files"]) {
        const Raster img = load_pnm(dir.str(name.get<std::string>()));
        REQUIRE(img.width == 80);
    }
}

TEST_CASE("unknown fixture kind is rejected", "[fixtures]") {
    TempDir dir("fxu");
    FixtureSpec spec;
    spec.kind = "nonsense";
    REQUIRE_THROWS_AS(make_fixture(spec, dir.str()), ValidationError);
}
