#pragma once

// Framed binary protocol for out-of-process denoisers.
//
//   request  = "PNPD" u32 width  u32 height  f32 sigma  f32 pixels[width*height]
//   response = "PNPR" u32 width  u32 height             f32 pixels[width*height]
//   error    = "PNPE" u32 length  u8 message[length]     (UTF-8)
//
// All integers and floats are little-endian; pixels are row-major. One
// request is in flight per connection.

#include "pnpr/denoisers.hpp"
#include "pnpr/grid.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace pnpr {

class ProtocolError : public DenoiserError {
public:
    using DenoiserError::DenoiserError;
};

namespace wire {

inline constexpr char request_magic[4] = {'P', 'N', 'P', 'D'};
inline constexpr char response_magic[4] = {'P', 'N', 'P', 'R'};
inline constexpr char error_magic[4] = {'P', 'N', 'P', 'E'};

/// Upper bounds enforced while decoding, so a corrupt header cannot trigger a
/// huge allocation.
inline constexpr std::uint64_t max_pixels = 1ULL << 26;
inline constexpr std::uint32_t max_error_bytes = 1U << 20;

struct RequestFrame {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    float sigma = 0.0f;
    std::vector<float> pixels;
};

struct ResponseFrame {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<float> pixels;
};

struct ErrorFrame {
    std::string message;
};

using Frame = std::variant<RequestFrame, ResponseFrame, ErrorFrame>;

std::vector<std::uint8_t> encode(const RequestFrame& f);
std::vector<std::uint8_t> encode(const ResponseFrame& f);
std::vector<std::uint8_t> encode(const ErrorFrame& f);

/// Reads exactly span.size() bytes or throws.
using ReadExact = std::function<void(std::span<std::uint8_t>)>;

/// Reads one frame. Unknown magic, oversized headers and truncated payloads
/// raise ProtocolError.
Frame read_frame(const ReadExact& read);

/// Convenience: decodes a complete frame held in memory; trailing bytes are
/// an error.
Frame decode(std::span<const std::uint8_t> bytes);

RequestFrame make_request(const RealGrid& x, double sigma);
RealGrid to_grid(std::uint32_t width, std::uint32_t height, const std::vector<float>& pixels);

} // namespace wire

struct Endpoint {
    std::string host;
    std::uint16_t port = 0;

    /// "host:port"; the host may be a name or an IPv4 literal.
    static Endpoint parse(const std::string& text);
    std::string to_string() const;
};

/// `configured` when non-empty, else $PNP_DENOISER_ADDR; throws DenoiserError
/// if neither is set.
Endpoint resolve_endpoint(const std::string& configured);

/// Owning TCP stream socket with send/receive timeouts.
class TcpStream {
public:
    TcpStream() = default;
    explicit TcpStream(int fd) noexcept : fd_(fd) {}
    ~TcpStream();
    TcpStream(TcpStream&& other) noexcept;
    TcpStream& operator=(TcpStream&& other) noexcept;
    TcpStream(const TcpStream&) = delete;
    TcpStream& operator=(const TcpStream&) = delete;

    static TcpStream connect(const Endpoint& ep, std::chrono::milliseconds timeout);

    bool is_open() const noexcept { return fd_ >= 0; }
    void close() noexcept;
    void set_timeout(std::chrono::milliseconds timeout);

    void send_all(std::span<const std::uint8_t> bytes);
    void recv_exact(std::span<std::uint8_t> bytes);
    /// Reads until the peer closes; returns false if any byte arrived.
    bool at_eof();

private:
    int fd_ = -1;
};

/// Listening socket on 127.0.0.1; port 0 picks an ephemeral port.
class TcpListener {
public:
    explicit TcpListener(std::uint16_t port = 0);
    ~TcpListener();
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    std::uint16_t port() const noexcept { return port_; }
    TcpStream accept();
    /// Unblocks a pending accept().
    void shutdown() noexcept;

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

/// Client half of the protocol. Connects lazily; any failure closes the
/// connection, so the next call reconnects.
class DenoiserClient {
public:
    DenoiserClient(Endpoint endpoint, double timeout_seconds);

    RealGrid denoise(const RealGrid& x, double sigma);
    const Endpoint& endpoint() const noexcept { return endpoint_; }

private:
    Endpoint endpoint_;
    std::chrono::milliseconds timeout_;
    TcpStream stream_;
};

} // namespace pnpr
