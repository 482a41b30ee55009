#include "oracles.hpp"

#include "pnpr/denoisers.hpp"
#include "pnpr/pnp.hpp"
#include "pnpr/protocol.hpp"

#include <doctest.h>

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <stdexcept>
#include <thread>

using namespace pnpr;

namespace {

using Bytes = std::vector<std::uint8_t>;

DenoiserSpec spec_of(DenoiserSpec::Kind kind)
{
    DenoiserSpec s;
    s.kind = kind;
    return s;
}

double mean_of(const RealGrid& g)
{
    double s = 0.0;
    for (double v : g)
        s += v;
    return s / static_cast<double>(g.size());
}

// Values exactly representable as f32, so wire round trips are bit-exact.
RealGrid float_grid(std::size_t rows, std::size_t cols, std::uint64_t seed)
{
    RealGrid g = oracle::random_real(rows, cols, seed, -300.0, 300.0);
    for (auto& v : g)
        v = static_cast<float>(v);
    return g;
}

/// Serves connections on an ephemeral loopback port, one at a time, each
/// with `handler`, until destroyed.
class Peer {
public:
    using Handler = std::function<void(TcpStream&)>;

    explicit Peer(Handler handler) : handler_(std::move(handler))
    {
        thread_ = std::jthread([this] {
            while (!stopping_) {
                TcpStream s;
                try {
                    s = listener_.accept();
                } catch (...) {
                    return;
                }
                if (stopping_)
                    return;
                ++connections_;
                try {
                    handler_(s);
                } catch (...) {
                }
            }
        });
    }

    ~Peer()
    {
        stopping_ = true;
        listener_.shutdown();
    }

    std::string address() const { return "127.0.0.1:" + std::to_string(listener_.port()); }
    Endpoint endpoint() const { return Endpoint::parse(address()); }
    int connections() const { return connections_; }

private:
    TcpListener listener_;
    Handler handler_;
    std::atomic<bool> stopping_{false};
    std::atomic<int> connections_{0};
    std::jthread thread_;
};

wire::RequestFrame read_request(TcpStream& s)
{
    auto f = wire::read_frame([&](std::span<std::uint8_t> b) { s.recv_exact(b); });
    return std::get<wire::RequestFrame>(f);
}

void reply(TcpStream& s, const wire::RequestFrame& req, std::vector<float> pixels)
{
    s.send_all(wire::encode(wire::ResponseFrame{req.width, req.height, std::move(pixels)}));
}

// Answers every request on the connection with `fn(request)`.
Peer::Handler serve(std::function<void(TcpStream&, const wire::RequestFrame&)> fn)
{
    return [fn](TcpStream& s) {
        for (;;)
            fn(s, read_request(s));
    };
}

Peer::Handler echo() { return serve([](TcpStream& s, const wire::RequestFrame& r) { reply(s, r, r.pixels); }); }

} // namespace

TEST_CASE("sigma zero is the identity for every kind")
{
    const Image x = oracle::random_complex(1, 8, 8, 1);
    for (auto kind : {DenoiserSpec::Kind::identity, DenoiserSpec::Kind::gaussian, DenoiserSpec::Kind::median,
                      DenoiserSpec::Kind::total_variation, DenoiserSpec::Kind::external}) {
        DenoiserSpec s = spec_of(kind);
        s.endpoint = "127.0.0.1:9";
        CHECK(denoise(s, x, 0.0) == x);
    }
}

TEST_CASE("identity at any sigma")
{
    const Image x = oracle::random_complex(1, 8, 8, 2);
    CHECK(denoise(spec_of(DenoiserSpec::Kind::identity), x, 40.0) == x);
}

TEST_CASE("total variation leaves constant images unchanged")
{
    const Image x = to_image(RealGrid(12, 9, 77.0));
    for (double sigma : {1.0, 10.0, 49.0})
        CHECK(denoise(spec_of(DenoiserSpec::Kind::total_variation), x, sigma) == x);
}

TEST_CASE("total variation shrinks an isolated spike")
{
    RealGrid x(9, 9);
    x(4, 4) = 200.0;
    const RealGrid out = tv_denoise(x, 40.0, 1.0);
    CHECK(out(4, 4) < 200.0);
    CHECK(out(4, 4) >= 0.0);
    CHECK(tv_denoise(x, 0.0, 1.0) == x);
}

TEST_CASE("total variation agrees with smoothed-TV gradient descent")
{
    RealGrid f(16, 16);
    pnpr::Rng rng(7);
    for (std::size_t r = 0; r < 16; ++r)
        for (std::size_t c = 0; c < 16; ++c)
            f(r, c) = (c < 8 ? 60.0 : 180.0) + 15.0 * rng.normal();
    const double lambda = 20.0;

    const RealGrid ref = oracle::smoothed_tv_descent(f, lambda, 0.05, 100000);
    const RealGrid got = tv_denoise(f, lambda, 1.0);
    const double obj_ref = tv_objective(ref, f, lambda);
    const double obj_got = tv_objective(got, f, lambda);
    CHECK(std::abs(obj_got - obj_ref) <= 0.005 * obj_ref);
    CHECK(oracle::max_abs_diff(got, ref) <= 1.0);
}

TEST_CASE("tv_solve reports a small duality gap")
{
    const RealGrid f = oracle::random_real(20, 20, 9);
    const auto sol = tv_solve(f, 15.0, 0.05, 20000);
    CHECK(sol.gap <= 0.5 * 400 * 0.05 * 0.05);
    CHECK(sol.objective == doctest::Approx(tv_objective(sol.image, f, 15.0)).epsilon(1e-12));
    CHECK_THROWS_AS(tv_solve(f, -1.0), std::invalid_argument);
}

TEST_CASE("gaussian and TV preserve the mean")
{
    const RealGrid x = oracle::random_real(16, 12, 10);
    CHECK(std::abs(mean_of(gaussian_smooth(x, 1.7)) - mean_of(x)) <= 1e-6);
    CHECK(std::abs(mean_of(tv_denoise(x, 25.0, 1.0)) - mean_of(x)) <= 1e-6);
}

TEST_CASE("outputs keep the shape and stay finite")
{
    const RealGrid x = oracle::random_real(7, 13, 11);
    for (auto kind : {DenoiserSpec::Kind::gaussian, DenoiserSpec::Kind::median, DenoiserSpec::Kind::total_variation}) {
        const Image out = denoise(spec_of(kind), to_image(x), 30.0);
        CHECK(out.same_shape(to_image(x)));
        CHECK(all_finite(out));
    }
}

TEST_CASE("complex input is denoised per component")
{
    const Image x = oracle::random_complex(1, 10, 10, 12);
    const auto s = spec_of(DenoiserSpec::Kind::total_variation);
    const Image out = denoise(s, x, 0.5);
    CHECK(real_part(out) == tv_denoise(real_part(x), 0.5, s.tv_weight, s.tv_tolerance, s.tv_max_iterations));
    CHECK(imag_part(out) == tv_denoise(imag_part(x), 0.5, s.tv_weight, s.tv_tolerance, s.tv_max_iterations));
}

TEST_CASE("gaussian smoothing")
{
    const RealGrid x = oracle::random_real(8, 8, 13);
    CHECK(gaussian_smooth(x, 0.0) == x);

    // A delta spreads into a normalised kernel.
    RealGrid d(9, 9);
    d(4, 4) = 1.0;
    const RealGrid k = gaussian_smooth(d, 1.0);
    CHECK(mean_of(k) * 81.0 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(k(4, 4) > k(4, 5));
    CHECK(k(4, 5) == doctest::Approx(k(5, 4)).epsilon(1e-12));
}

TEST_CASE("median filter removes salt noise")
{
    RealGrid x(7, 7, 10.0);
    x(3, 3) = 255.0;
    CHECK(median_filter(x, 1) == RealGrid(7, 7, 10.0));
    CHECK(median_filter(x, 0) == x);
}

TEST_CASE("denoiser kind names")
{
    CHECK(parse_denoiser_kind("tv") == DenoiserSpec::Kind::total_variation);
    CHECK(parse_denoiser_kind("total-variation") == DenoiserSpec::Kind::total_variation);
    CHECK(parse_denoiser_kind("gaussian-smoothing") == DenoiserSpec::Kind::gaussian);
    CHECK(parse_denoiser_kind("external") == DenoiserSpec::Kind::external);
    CHECK(std::string(to_string(DenoiserSpec::Kind::median)) == "median");
    CHECK_THROWS_AS(parse_denoiser_kind("bm3d"), std::invalid_argument);

    DenoiserSpec bad;
    bad.tv_weight = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("request frame byte layout")
{
    RealGrid x(1, 2);
    x(0, 0) = 1.0;
    x(0, 1) = -2.5;
    const Bytes bytes = wire::encode(wire::make_request(x, 25.0));
    Bytes expected = {'P', 'N', 'P', 'D', 2, 0, 0, 0, 1, 0, 0, 0};
    for (float f : {25.0f, 1.0f, -2.5f}) {
        const auto u = std::bit_cast<std::uint32_t>(f);
        for (int i = 0; i < 4; ++i)
            expected.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
    }
    CHECK(bytes == expected);
}

TEST_CASE("frames round-trip through encode and decode")
{
    const auto req = wire::make_request(float_grid(3, 5, 14), 7.0);
    const auto back = std::get<wire::RequestFrame>(wire::decode(wire::encode(req)));
    CHECK(back.width == 5);
    CHECK(back.height == 3);
    CHECK(back.sigma == 7.0f);
    CHECK(back.pixels == req.pixels);

    const wire::ResponseFrame resp{2, 2, {1.0f, 2.0f, 3.0f, 4.0f}};
    CHECK(std::get<wire::ResponseFrame>(wire::decode(wire::encode(resp))).pixels == resp.pixels);

    const wire::ErrorFrame err{"model not loaded"};
    CHECK(std::get<wire::ErrorFrame>(wire::decode(wire::encode(err))).message == err.message);
}

TEST_CASE("malformed frames are rejected")
{
    Bytes good = wire::encode(wire::ResponseFrame{1, 1, {0.5f}});

    Bytes bad_magic = good;
    bad_magic[3] = 'X';
    CHECK_THROWS_AS(wire::decode(bad_magic), ProtocolError);

    CHECK_THROWS_AS(wire::decode(Bytes(good.begin(), good.end() - 1)), ProtocolError);
    Bytes trailing = good;
    trailing.push_back(0);
    CHECK_THROWS_AS(wire::decode(trailing), ProtocolError);

    Bytes zero = good;
    zero[4] = 0;
    CHECK_THROWS_AS(wire::decode(zero), ProtocolError);

    Bytes huge = {'P', 'N', 'P', 'R', 0xff, 0xff, 0, 0, 0xff, 0xff, 0, 0};
    CHECK_THROWS_AS(wire::decode(huge), ProtocolError);

    Bytes long_error = {'P', 'N', 'P', 'E', 0xff, 0xff, 0xff, 0x7f};
    CHECK_THROWS_AS(wire::decode(long_error), ProtocolError);

    CHECK_THROWS_AS(wire::to_grid(2, 2, {1.0f}), ProtocolError);
}

TEST_CASE("endpoint parsing and environment fallback")
{
    const auto ep = Endpoint::parse("127.0.0.1:5000");
    CHECK(ep.host == "127.0.0.1");
    CHECK(ep.port == 5000);
    CHECK(ep.to_string() == "127.0.0.1:5000");
    for (const char* bad : {"localhost", ":80", "host:", "host:0", "host:70000", "host:8x"})
        CHECK_THROWS_AS(Endpoint::parse(bad), std::invalid_argument);

    ::unsetenv("PNP_DENOISER_ADDR");
    CHECK_THROWS_AS(resolve_endpoint(""), DenoiserError);
    ::setenv("PNP_DENOISER_ADDR", "localhost:7001", 1);
    CHECK(resolve_endpoint("").port == 7001);
    CHECK(resolve_endpoint("10.0.0.1:9").port == 9);
    ::unsetenv("PNP_DENOISER_ADDR");

    CHECK_THROWS_AS(make_denoiser(spec_of(DenoiserSpec::Kind::external)), DenoiserError);
}

TEST_CASE("echo peer round-trips 1000 frames bit-exactly")
{
    Peer peer(echo());
    DenoiserClient client(peer.endpoint(), 5.0);
    pnpr::Rng rng(15);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t rows = 1 + rng.next_u64() % 24, cols = 1 + rng.next_u64() % 24;
        const RealGrid x = float_grid(rows, cols, 1000 + i);
        const RealGrid out = client.denoise(x, rng.uniform(0.0, 50.0));
        REQUIRE(out == x);
    }
    CHECK(peer.connections() == 1);
}

TEST_CASE("external denoiser through the Denoiser interface")
{
    SUBCASE("identity peer returns the input")
    {
        Peer peer(echo());
        DenoiserSpec s = spec_of(DenoiserSpec::Kind::external);
        s.endpoint = peer.address();
        Image x(6, 6);
        const RealGrid re = float_grid(6, 6, 16), im = float_grid(6, 6, 17);
        x = from_parts(re, im);
        CHECK(denoise(s, x, 25.0) == x);
    }
    SUBCASE("a smoothing peer is applied with the requested sigma")
    {
        Peer peer(serve([](TcpStream& s, const wire::RequestFrame& r) {
            const RealGrid out = gaussian_smooth(wire::to_grid(r.width, r.height, r.pixels), r.sigma / 10.0);
            std::vector<float> px(out.begin(), out.end());
            reply(s, r, px);
        }));
        DenoiserSpec s = spec_of(DenoiserSpec::Kind::external);
        s.endpoint = peer.address();
        const RealGrid x = float_grid(8, 8, 18);
        const Image out = denoise(s, to_image(x), 20.0);
        CHECK(oracle::max_abs_diff(real_part(out), gaussian_smooth(x, 2.0)) <= 1e-3);
    }
}

TEST_CASE("peer failures surface as errors")
{
    const RealGrid x = float_grid(4, 4, 19);

    SUBCASE("error frame carries the message and the client reconnects")
    {
        std::atomic<int> calls{0};
        Peer peer(serve([&](TcpStream& s, const wire::RequestFrame& r) {
            if (calls++ == 0)
                s.send_all(wire::encode(wire::ErrorFrame{"sigma out of range"}));
            else
                reply(s, r, r.pixels);
        }));
        DenoiserClient client(peer.endpoint(), 5.0);
        try {
            client.denoise(x, 60.0);
            FAIL("expected an error");
        } catch (const ProtocolError&) {
            FAIL("error frame should not be a protocol error");
        } catch (const DenoiserError& e) {
            CHECK(std::string(e.what()).find("sigma out of range") != std::string::npos);
        }
        CHECK(client.denoise(x, 10.0) == x);
        CHECK(peer.connections() == 2);
    }
    SUBCASE("shape mismatch")
    {
        Peer peer(serve([](TcpStream& s, const wire::RequestFrame& r) {
            s.send_all(wire::encode(wire::ResponseFrame{r.width + 1, r.height, std::vector<float>(
                                                                                   (r.width + 1) * r.height)}));
        }));
        DenoiserClient client(peer.endpoint(), 5.0);
        CHECK_THROWS_AS(client.denoise(x, 1.0), ProtocolError);
    }
    SUBCASE("non-finite pixels")
    {
        Peer peer(serve([](TcpStream& s, const wire::RequestFrame& r) {
            auto px = r.pixels;
            px[0] = std::numeric_limits<float>::quiet_NaN();
            reply(s, r, px);
        }));
        DenoiserClient client(peer.endpoint(), 5.0);
        CHECK_THROWS_AS(client.denoise(x, 1.0), ProtocolError);
    }
    SUBCASE("malformed magic")
    {
        Peer peer(serve([](TcpStream& s, const wire::RequestFrame&) {
            const Bytes junk = {'H', 'T', 'T', 'P', '/', '1', '.', '1'};
            s.send_all(junk);
        }));
        DenoiserClient client(peer.endpoint(), 5.0);
        CHECK_THROWS_AS(client.denoise(x, 1.0), ProtocolError);
    }
    SUBCASE("connection closed mid-frame")
    {
        Peer peer(serve([](TcpStream& s, const wire::RequestFrame& r) {
            Bytes full = wire::encode(wire::ResponseFrame{r.width, r.height, r.pixels});
            full.resize(full.size() / 2);
            s.send_all(full);
            s.close();
        }));
        DenoiserClient client(peer.endpoint(), 5.0);
        CHECK_THROWS_AS(client.denoise(x, 1.0), ProtocolError);
    }
    SUBCASE("timeout")
    {
        Peer peer(serve([](TcpStream& s, const wire::RequestFrame& r) {
            std::this_thread::sleep_for(std::chrono::milliseconds(600));
            reply(s, r, r.pixels);
        }));
        DenoiserClient client(peer.endpoint(), 0.2);
        CHECK_THROWS_AS(client.denoise(x, 1.0), DenoiserError);
    }
    SUBCASE("nothing listening")
    {
        std::uint16_t port = 0;
        {
            TcpListener l;
            port = l.port();
        }
        DenoiserClient client(Endpoint{"127.0.0.1", port}, 1.0);
        CHECK_THROWS_AS(client.denoise(x, 1.0), DenoiserError);
    }
}

TEST_CASE("a failing external denoiser aborts a run with its partial trace")
{
    std::atomic<int> calls{0};
    Peer peer(serve([&](TcpStream& s, const wire::RequestFrame& r) {
        if (++calls > 3)
            s.send_all(wire::encode(wire::ErrorFrame{"backend crashed"}));
        else
            reply(s, r, r.pixels);
    }));
    const auto op = MeasurementOperator::fourier(8);
    const Image x = to_image(oracle::random_real(8, 8, 20));
    PnPConfig cfg;
    cfg.schedule = Schedule::geometric(40.0, 5.0, 10);
    cfg.denoiser = spec_of(DenoiserSpec::Kind::external);
    cfg.denoiser.endpoint = peer.address();
    try {
        pnp_pr_run(op, abs(op.forward(x)), x, cfg);
        FAIL("expected RunAborted");
    } catch (const RunAborted& e) {
        CHECK(e.partial().trace.size() == 3);
        CHECK(std::string(e.what()).find("backend crashed") != std::string::npos);
    }
}
