#include "pnpr/protocol.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <cstring>

namespace pnpr {

namespace wire {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float v)
{
    put_u32(out, std::bit_cast<std::uint32_t>(v));
}

void put_magic(std::vector<std::uint8_t>& out, const char (&magic)[4])
{
    for (char c : magic)
        out.push_back(static_cast<std::uint8_t>(c));
}

std::uint32_t get_u32(const std::uint8_t* p)
{
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint32_t read_u32(const ReadExact& read)
{
    std::uint8_t b[4];
    read(b);
    return get_u32(b);
}

std::vector<float> read_pixels(const ReadExact& read, std::uint32_t width, std::uint32_t height)
{
    const std::uint64_t count = static_cast<std::uint64_t>(width) * height;
    if (width == 0 || height == 0)
        throw ProtocolError("frame has zero width or height");
    if (count > max_pixels)
        throw ProtocolError("frame of " + std::to_string(width) + "x" + std::to_string(height) +
                            " exceeds the pixel limit");
    std::vector<std::uint8_t> raw(count * 4);
    read(raw);
    std::vector<float> px(count);
    for (std::size_t i = 0; i < count; ++i)
        px[i] = std::bit_cast<float>(get_u32(raw.data() + 4 * i));
    return px;
}

bool magic_is(const std::uint8_t (&got)[4], const char (&magic)[4])
{
    return std::memcmp(got, magic, 4) == 0;
}

} // namespace

std::vector<std::uint8_t> encode(const RequestFrame& f)
{
    std::vector<std::uint8_t> out;
    out.reserve(16 + 4 * f.pixels.size());
    put_magic(out, request_magic);
    put_u32(out, f.width);
    put_u32(out, f.height);
    put_f32(out, f.sigma);
    for (float v : f.pixels)
        put_f32(out, v);
    return out;
}

std::vector<std::uint8_t> encode(const ResponseFrame& f)
{
    std::vector<std::uint8_t> out;
    out.reserve(12 + 4 * f.pixels.size());
    put_magic(out, response_magic);
    put_u32(out, f.width);
    put_u32(out, f.height);
    for (float v : f.pixels)
        put_f32(out, v);
    return out;
}

std::vector<std::uint8_t> encode(const ErrorFrame& f)
{
    std::vector<std::uint8_t> out;
    put_magic(out, error_magic);
    put_u32(out, static_cast<std::uint32_t>(f.message.size()));
    out.insert(out.end(), f.message.begin(), f.message.end());
    return out;
}

Frame read_frame(const ReadExact& read)
{
    std::uint8_t magic[4];
    read(magic);
    if (magic_is(magic, request_magic)) {
        RequestFrame f;
        f.width = read_u32(read);
        f.height = read_u32(read);
        f.sigma = std::bit_cast<float>(read_u32(read));
        f.pixels = read_pixels(read, f.width, f.height);
        return f;
    }
    if (magic_is(magic, response_magic)) {
        ResponseFrame f;
        f.width = read_u32(read);
        f.height = read_u32(read);
        f.pixels = read_pixels(read, f.width, f.height);
        return f;
    }
    if (magic_is(magic, error_magic)) {
        const std::uint32_t len = read_u32(read);
        if (len > max_error_bytes)
            throw ProtocolError("error frame message too long");
        std::string msg(len, '\0');
        read(std::span(reinterpret_cast<std::uint8_t*>(msg.data()), msg.size()));
        return ErrorFrame{std::move(msg)};
    }
    std::string shown;
    for (auto b : magic)
        shown += (b >= 32 && b < 127) ? static_cast<char>(b) : '?';
    throw ProtocolError("unknown frame magic '" + shown + "'");
}

Frame decode(std::span<const std::uint8_t> bytes)
{
    std::size_t pos = 0;
    const ReadExact read = [&](std::span<std::uint8_t> dst) {
        if (bytes.size() - pos < dst.size())
            throw ProtocolError("truncated frame");
        std::memcpy(dst.data(), bytes.data() + pos, dst.size());
        pos += dst.size();
    };
    Frame f = read_frame(read);
    if (pos != bytes.size())
        throw ProtocolError("trailing bytes after frame");
    return f;
}

RequestFrame make_request(const RealGrid& x, double sigma)
{
    if (x.planes() != 1)
        throw std::invalid_argument("denoiser request: single-plane image expected");
    RequestFrame f;
    f.width = static_cast<std::uint32_t>(x.cols());
    f.height = static_cast<std::uint32_t>(x.rows());
    f.sigma = static_cast<float>(sigma);
    f.pixels.reserve(x.size());
    for (double v : x)
        f.pixels.push_back(static_cast<float>(v));
    return f;
}

RealGrid to_grid(std::uint32_t width, std::uint32_t height, const std::vector<float>& pixels)
{
    if (static_cast<std::uint64_t>(width) * height != pixels.size())
        throw ProtocolError("pixel count does not match frame dimensions");
    RealGrid g(height, width);
    for (std::size_t i = 0; i < pixels.size(); ++i)
        g[i] = pixels[i];
    return g;
}

} // namespace wire

// ---------------------------------------------------------------------------

Endpoint Endpoint::parse(const std::string& text)
{
    const auto colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
        throw std::invalid_argument("endpoint must be host:port, got '" + text + "'");
    Endpoint ep;
    ep.host = text.substr(0, colon);
    const std::string port = text.substr(colon + 1);
    char* end = nullptr;
    const long value = std::strtol(port.c_str(), &end, 10);
    if (*end != '\0' || value <= 0 || value > 65535)
        throw std::invalid_argument("invalid port in endpoint '" + text + "'");
    ep.port = static_cast<std::uint16_t>(value);
    return ep;
}

std::string Endpoint::to_string() const
{
    return host + ":" + std::to_string(port);
}

Endpoint resolve_endpoint(const std::string& configured)
{
    if (!configured.empty())
        return Endpoint::parse(configured);
    if (const char* env = std::getenv("PNP_DENOISER_ADDR"); env && *env)
        return Endpoint::parse(env);
    throw DenoiserError("external denoiser: no endpoint configured and PNP_DENOISER_ADDR is unset");
}

namespace {

std::string errno_text(const char* what)
{
    return std::string(what) + ": " + std::strerror(errno);
}

} // namespace

TcpStream::~TcpStream()
{
    close();
}

TcpStream::TcpStream(TcpStream&& other) noexcept : fd_(other.fd_)
{
    other.fd_ = -1;
}

TcpStream& TcpStream::operator=(TcpStream&& other) noexcept
{
    if (this != &other) {
        close();
        fd_ = other.fd_;
        other.fd_ = -1;
    }
    return *this;
}

void TcpStream::close() noexcept
{
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

void TcpStream::set_timeout(std::chrono::milliseconds timeout)
{
    timeval tv{};
    tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
    tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    ::setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
}

TcpStream TcpStream::connect(const Endpoint& ep, std::chrono::milliseconds timeout)
{
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const int rc = ::getaddrinfo(ep.host.c_str(), std::to_string(ep.port).c_str(), &hints, &res);
    if (rc != 0)
        throw DenoiserError("cannot resolve " + ep.to_string() + ": " + ::gai_strerror(rc));

    std::string last_error = "no addresses";
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
        TcpStream s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
        if (!s.is_open()) {
            last_error = errno_text("socket");
            continue;
        }
        s.set_timeout(timeout);
        if (::connect(s.fd_, ai->ai_addr, ai->ai_addrlen) == 0) {
            int one = 1;
            ::setsockopt(s.fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            ::freeaddrinfo(res);
            return s;
        }
        last_error = errno_text("connect");
    }
    ::freeaddrinfo(res);
    throw DenoiserError("cannot connect to denoiser at " + ep.to_string() + " (" + last_error + ")");
}

void TcpStream::send_all(std::span<const std::uint8_t> bytes)
{
    std::size_t sent = 0;
    while (sent < bytes.size()) {
        const ssize_t n = ::send(fd_, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            throw DenoiserError(errno_text("send"));
        }
        sent += static_cast<std::size_t>(n);
    }
}

void TcpStream::recv_exact(std::span<std::uint8_t> bytes)
{
    std::size_t got = 0;
    while (got < bytes.size()) {
        const ssize_t n = ::recv(fd_, bytes.data() + got, bytes.size() - got, 0);
        if (n == 0)
            throw ProtocolError("connection closed mid-frame (" + std::to_string(got) + " of " +
                                std::to_string(bytes.size()) + " bytes)");
        if (n < 0) {
            if (errno == EINTR)
                continue;
            if (errno == EAGAIN || errno == EWOULDBLOCK)
                throw DenoiserError("timed out waiting for denoiser");
            throw DenoiserError(errno_text("recv"));
        }
        got += static_cast<std::size_t>(n);
    }
}

bool TcpStream::at_eof()
{
    std::uint8_t b;
    for (;;) {
        const ssize_t n = ::recv(fd_, &b, 1, 0);
        if (n == 0)
            return true;
        if (n > 0)
            return false;
        if (errno != EINTR)
            return true;
    }
}

TcpListener::TcpListener(std::uint16_t port)
{
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0)
        throw std::runtime_error(errno_text("socket"));
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd_, 16) != 0) {
        const std::string msg = errno_text("bind/listen");
        ::close(fd_);
        throw std::runtime_error(msg);
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener()
{
    shutdown();
    if (fd_ >= 0)
        ::close(fd_);
}

TcpStream TcpListener::accept()
{
    for (;;) {
        const int fd = ::accept(fd_, nullptr, nullptr);
        if (fd >= 0)
            return TcpStream(fd);
        if (errno != EINTR)
            throw std::runtime_error(errno_text("accept"));
    }
}

void TcpListener::shutdown() noexcept
{
    if (fd_ >= 0)
        ::shutdown(fd_, SHUT_RDWR);
}

// ---------------------------------------------------------------------------

DenoiserClient::DenoiserClient(Endpoint endpoint, double timeout_seconds)
    : endpoint_(std::move(endpoint)),
      timeout_(static_cast<long long>(timeout_seconds * 1000.0))
{
}

RealGrid DenoiserClient::denoise(const RealGrid& x, double sigma)
{
    const auto request = wire::make_request(x, sigma);
    try {
        if (!stream_.is_open())
            stream_ = TcpStream::connect(endpoint_, timeout_);
        stream_.send_all(wire::encode(request));
        wire::Frame frame = wire::read_frame([this](std::span<std::uint8_t> b) { stream_.recv_exact(b); });

        if (auto* err = std::get_if<wire::ErrorFrame>(&frame))
            throw DenoiserError("denoiser at " + endpoint_.to_string() + " reported: " + err->message);
        auto* resp = std::get_if<wire::ResponseFrame>(&frame);
        if (!resp)
            throw ProtocolError("expected a response frame, got a request frame");
        if (resp->width != request.width || resp->height != request.height)
            throw ProtocolError("shape mismatch: sent " + std::to_string(request.width) + "x" +
                                std::to_string(request.height) + ", received " + std::to_string(resp->width) +
                                "x" + std::to_string(resp->height));
        for (float v : resp->pixels)
            if (!std::isfinite(v))
                throw ProtocolError("denoiser returned non-finite pixels");
        return wire::to_grid(resp->width, resp->height, resp->pixels);
    } catch (...) {
        stream_.close();
        throw;
    }
}

} // namespace pnpr
