#include <catch2/catch_amalgamated.hpp>

#include <cstring>

#include "talkstab/fixtures.hpp"
#include "talkstab/horn_schunck.hpp"

using namespace talkstab;

namespace {

// mean flow over the interior, at least `trim` pixels from every border
struct InteriorMean {
    double u = 0, v = 0, abs_u = 0, abs_v = 0;
};

InteriorMean interior_mean(const FlowField& f, int trim = 3) {
    InteriorMean m;
    int n = 0;
    for (int y = trim; y < f.height - trim; ++y)
        for (int x = trim; x < f.width - trim; ++x) {
            m.u += f.u_at(x, y);
            m.v += f.v_at(x, y);
            m.abs_u += std::abs(f.u_at(x, y));
            m.abs_v += std::abs(f.v_at(x, y));
            ++n;
        }
    m.u /= n;
    m.v /= n;
    m.abs_u /= n;
    m.abs_v /= n;
    return m;
}

} // namespace

TEST_CASE("identical frames give exactly zero flow", "[optical_flow]") {
    FixtureSpec spec;
    spec.kind = "translation";
    spec.seed = 3;
    spec.frames = 2;
    spec.dx = 0;
    spec.dy = 0;
    const FrameSequence seq = translation_sequence(spec);
    const FlowField f = dense_flow(seq.frames[0], seq.frames[1]);
    for (float v : f.u) REQUIRE(v == 0.0f);
    for (float v : f.v) REQUIRE(v == 0.0f);
}

TEST_CASE("smooth horizontal ramp shifted right by one pixel", "[optical_flow]") {
    Raster a = make_raster(64, 48, 1), b = make_raster(64, 48, 1);
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 64; ++x) {
            a.at(x, y) = x / 63.0;
            b.at(x, y) = std::max(0.0, (x - 1) / 63.0);
        }
    const auto m = interior_mean(dense_flow(a, b));
    REQUIRE(m.u > 0.8);
    REQUIRE(m.u < 1.2);
    REQUIRE(m.abs_v < 0.1);
}

TEST_CASE("vertical 2px shift of band-limited noise, 3 levels", "[optical_flow]") {
    FixtureSpec spec;
    spec.kind = "translation";
    spec.seed = 21;
    spec.width = 64;
    spec.height = 64;
    spec.frames = 2;
    spec.dx = 0;
    spec.dy = 2;
    const FrameSequence seq = translation_sequence(spec);
    FlowParams params;
    params.levels = 3;
    const auto m = interior_mean(dense_flow(seq.frames[0], seq.frames[1], params));
    REQUIRE(m.v > 1.6);
    REQUIRE(m.v < 2.4);
}

TEST_CASE("flow_series basics", "[optical_flow]") {
    SECTION("two identical frames give a series of one zero field") {
        FrameSequence seq;
        append_frame(seq, make_raster(16, 16, 1, 0.5));
        append_frame(seq, make_raster(16, 16, 1, 0.5));
        const FlowSeries series = flow_series(seq);
        REQUIRE(series.size() == 1);
        for (float v : series.fields[0].u) REQUIRE(v == 0.0f);
    }

    SECTION("one frame is an error") {
        FrameSequence seq;
        append_frame(seq, make_raster(16, 16, 1, 0.5));
        REQUIRE_THROWS_AS(flow_series(seq), ValidationError);
    }

    SECTION("constant-velocity translation gives consistent fields") {
        FixtureSpec spec;
        spec.kind = "translation";
        spec.seed = 41;
        spec.frames = 4;
        spec.dx = 1;
        spec.dy = 0;
        const FlowSeries series = flow_series(translation_sequence(spec));
        REQUIRE(series.size() == 3);
        std::vector<double> means;
        for (const auto& f : series.fields) {
            const auto m = interior_mean(f);
            REQUIRE(m.u > 0.8);
            REQUIRE(m.u < 1.2);
            means.push_back(m.u);
        }
        for (size_t i = 1; i < means.size(); ++i)
            REQUIRE(std::abs(means[i] - means[0]) < 0.2);
    }
}

TEST_CASE("flow validation and degenerate sizes", "[optical_flow]") {
    SECTION("dimension mismatch") {
        REQUIRE_THROWS_AS(dense_flow(make_raster(8, 8, 1), make_raster(9, 8, 1)),
                          ValidationError);
    }
    SECTION("bad parameters") {
        FlowParams p;
        p.lambda_hs = 0;
        REQUIRE_THROWS_AS(dense_flow(make_raster(8, 8, 1), make_raster(8, 8, 1), p),
                          ValidationError);
        p = FlowParams{};
        p.iterations = 0;
        REQUIRE_THROWS_AS(dense_flow(make_raster(8, 8, 1), make_raster(8, 8, 1), p),
                          ValidationError);
        p = FlowParams{};
        p.levels = 0;
        REQUIRE_THROWS_AS(dense_flow(make_raster(8, 8, 1), make_raster(8, 8, 1), p),
                          ValidationError);
    }
    SECTION("tiny image never errors on excess levels") {
        FlowParams p;
        p.levels = 6;
        p.iterations = 5;
        const FlowField f = dense_flow(make_raster(3, 3, 1, 0.2), make_raster(3, 3, 1, 0.2), p);
        REQUIRE(f.width == 3);
        for (float v : f.u) REQUIRE(v == 0.0f);
    }
}

TEST_CASE("flow output is deterministic", "[optical_flow]") {
    FixtureSpec spec;
    spec.kind = "translation";
    spec.seed = 17;
    spec.frames = 2;
    spec.dx = 1;
    spec.dy = 1;
    const FrameSequence seq = translation_sequence(spec);
    const FlowField a = dense_flow(seq.frames[0], seq.frames[1]);
    const FlowField b = dense_flow(seq.frames[0], seq.frames[1]);
    REQUIRE(std::memcmp(a.u.data(), b.u.data(), a.u.size() * 4) == 0);
    REQUIRE(std::memcmp(a.v.data(), b.v.data(), a.v.size() * 4) == 0);
}

TEST_CASE("flow output is identical for any thread budget", "[optical_flow]") {
    FixtureSpec spec;
    spec.kind = "translation";
    spec.seed = 23;
    spec.frames = 2;
    spec.dx = 1;
    spec.dy = 0;
    spec.width = 80;
    spec.height = 70;
    const FrameSequence seq = translation_sequence(spec);

    setenv("TALKSTAB_THREADS", "1", 1);
    const FlowField serial = dense_flow(seq.frames[0], seq.frames[1]);
    setenv("TALKSTAB_THREADS", "4", 1);
    const FlowField threaded = dense_flow(seq.frames[0], seq.frames[1]);
    unsetenv("TALKSTAB_THREADS");
    REQUIRE(serial.u == threaded.u);
    REQUIRE(serial.v == threaded.v);
}

TEST_CASE("flow is approximately equivariant under global brightness scaling",
          "[optical_flow]") {
    CounterRng rng(31);
    const int w = 64, h = 48, margin = 8;
    const Raster canvas =
        fixture_detail::make_texture(rng, w + 2 * margin, h + 2 * margin, 1, 0.0, 0.5);
    const Raster a = fixture_detail::sample_window(canvas, w, h, margin, margin);
    const Raster b = fixture_detail::sample_window(canvas, w, h, margin - 1.0, margin);

    // The property belongs to the converged variational solution, so give the
    // solver enough sweeps; lambda stays at its default.
    FlowParams params;
    params.iterations = 400;
    const FlowField base = dense_flow(a, b, params);
    for (double c : {0.5, 2.0}) {
        Raster a2 = a, b2 = b;
        for (double& v : a2.data) v *= c;
        for (double& v : b2.data) v *= c;
        const FlowField f = dense_flow(a2, b2, params);
        double num = 0, den = 0;
        for (size_t i = 0; i < f.u.size(); ++i) {
            const double du = f.u[i] - base.u[i];
            const double dv = f.v[i] - base.v[i];
            num += du * du + dv * dv;
            den += static_cast<double>(base.u[i]) * base.u[i] +
                   static_cast<double>(base.v[i]) * base.v[i];
        }
        REQUIRE(std::sqrt(num / den) < 0.10);
    }
}
