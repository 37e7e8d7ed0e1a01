#include "rlfuzz/eval/protocol.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace rlfuzz::evalsvc {

Bytes frame_message(const Message& m) {
    ByteWriter w;
    w.u32be(uint32_t(1 + 8 + m.body.size()));
    w.u8(m.type);
    w.u64be(m.job_id);
    w.raw(m.body.data(), m.body.size());
    return w.take();
}

Bytes encode_pong(const WorkerDescriptor& d) {
    ByteWriter w;
    w.u16be(uint16_t(d.name.size()));
    w.raw(d.name.data(), d.name.size());
    w.u16be(uint16_t(d.target_name.size()));
    w.raw(d.target_name.data(), d.target_name.size());
    w.u64be(d.pid);
    return w.take();
}

WorkerDescriptor decode_pong(const Bytes& b) {
    ByteReader r(b);
    WorkerDescriptor d;
    uint16_t n = r.u16be();
    d.name.resize(n);
    r.raw(d.name.data(), n);
    n = r.u16be();
    d.target_name.resize(n);
    r.raw(d.target_name.data(), n);
    d.pid = r.u64be();
    return d;
}

Bytes encode_exec(const ExecBody& e) {
    ByteWriter w;
    w.u16be(uint16_t(e.target_name.size()));
    w.raw(e.target_name.data(), e.target_name.size());
    w.u32be(uint32_t(e.test_cases.size()));
    for (const auto& tc : e.test_cases) {
        w.u32be(uint32_t(tc.size()));
        w.raw(tc.data(), tc.size());
    }
    return w.take();
}

ExecBody decode_exec(const Bytes& b) {
    ByteReader r(b);
    ExecBody e;
    uint16_t n = r.u16be();
    e.target_name.resize(n);
    r.raw(e.target_name.data(), n);
    uint32_t count = r.u32be();
    e.test_cases.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        uint32_t len = r.u32be();
        std::string tc(len, '\0');
        r.raw(tc.data(), len);
        e.test_cases.push_back(std::move(tc));
    }
    return e;
}

Bytes encode_result(const ResultBody& res) {
    ByteWriter w;
    w.u32be(uint32_t(res.cases.size()));
    for (const auto& c : res.cases) {
        w.u8(c.status);
        w.u64be(c.wall_time_us);
        w.u32be(uint32_t(c.coverage.size()));
        for (const auto& b : c.coverage) {
            w.u16be(b.module_id);
            w.u32be(b.offset);
        }
    }
    w.u16be(uint16_t(res.module_table.size()));
    for (const auto& [id, path] : res.module_table) {
        w.u16be(id);
        w.u16be(uint16_t(path.size()));
        w.raw(path.data(), path.size());
    }
    return w.take();
}

ResultBody decode_result(const Bytes& b) {
    ByteReader r(b);
    ResultBody res;
    uint32_t count = r.u32be();
    res.cases.resize(count);
    for (uint32_t i = 0; i < count; ++i) {
        CaseResult& c = res.cases[i];
        c.status = r.u8();
        c.wall_time_us = r.u64be();
        uint32_t n = r.u32be();
        for (uint32_t j = 0; j < n; ++j) {
            uint16_t mod = r.u16be();
            uint32_t off = r.u32be();
            c.coverage.insert(cov::BasicBlockId{mod, off});
        }
    }
    uint16_t mods = r.u16be();
    for (uint16_t i = 0; i < mods; ++i) {
        uint16_t id = r.u16be();
        uint16_t len = r.u16be();
        std::string path(len, '\0');
        r.raw(path.data(), len);
        res.module_table.emplace_back(id, std::move(path));
    }
    return res;
}

Bytes encode_error(const ErrorBody& e) {
    ByteWriter w;
    w.u16be(e.code);
    w.u16be(uint16_t(e.message.size()));
    w.raw(e.message.data(), e.message.size());
    return w.take();
}

ErrorBody decode_error(const Bytes& b) {
    ByteReader r(b);
    ErrorBody e;
    e.code = r.u16be();
    uint16_t len = r.u16be();
    e.message.resize(len);
    r.raw(e.message.data(), len);
    return e;
}

// ---- sockets ----

Socket::~Socket() { close_now(); }

Socket::Socket(Socket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }

Socket& Socket::operator=(Socket&& other) noexcept {
    if (this != &other) {
        close_now();
        fd_ = other.fd_;
        other.fd_ = -1;
    }
    return *this;
}

void Socket::close_now() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

Socket Socket::connect_to(const std::string& host, uint16_t port) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw ProtocolError("socket() failed: " + std::string(strerror(errno)));
    Socket s(fd);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
        throw ProtocolError("bad host address: " + host);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
        throw ProtocolError("connect to " + host + ":" + std::to_string(port) +
                            " failed: " + strerror(errno));
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return s;
}

Socket Socket::listen_on(const std::string& host, uint16_t port, int backlog) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw ProtocolError("socket() failed: " + std::string(strerror(errno)));
    Socket s(fd);
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
        throw ProtocolError("bad listen address: " + host);
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
        throw ProtocolError("bind failed: " + std::string(strerror(errno)));
    if (::listen(fd, backlog) != 0) throw ProtocolError("listen failed: " + std::string(strerror(errno)));
    return s;
}

Socket Socket::accept_one() {
    int cfd = ::accept(fd_, nullptr, nullptr);
    if (cfd < 0) throw ProtocolError("accept failed: " + std::string(strerror(errno)));
    int one = 1;
    ::setsockopt(cfd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return Socket(cfd);
}

uint16_t Socket::local_port() const {
    sockaddr_in addr{};
    socklen_t len = sizeof addr;
    if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0)
        throw ProtocolError("getsockname failed");
    return ntohs(addr.sin_port);
}

void Socket::send_all(const void* data, size_t n) {
    const char* p = static_cast<const char*>(data);
    size_t sent = 0;
    while (sent < n) {
        ssize_t r = ::send(fd_, p + sent, n - sent, MSG_NOSIGNAL);
        if (r <= 0) {
            if (r < 0 && errno == EINTR) continue;
            throw ProtocolError("send failed: " + std::string(r < 0 ? strerror(errno) : "peer closed"));
        }
        sent += size_t(r);
    }
}

bool Socket::recv_all(void* data, size_t n) {
    char* p = static_cast<char*>(data);
    size_t got = 0;
    while (got < n) {
        ssize_t r = ::recv(fd_, p + got, n - got, 0);
        if (r == 0) {
            if (got == 0) return false;
            throw ProtocolError("connection closed mid-message");
        }
        if (r < 0) {
            if (errno == EINTR) continue;
            throw ProtocolError("recv failed: " + std::string(strerror(errno)));
        }
        got += size_t(r);
    }
    return true;
}

void send_message(Socket& s, const Message& m) {
    Bytes framed = frame_message(m);
    s.send_all(framed.data(), framed.size());
}

std::optional<Message> recv_message(Socket& s, size_t max_payload) {
    uint8_t hdr[4];
    if (!s.recv_all(hdr, 4)) return std::nullopt;
    uint32_t len = (uint32_t(hdr[0]) << 24) | (uint32_t(hdr[1]) << 16) | (uint32_t(hdr[2]) << 8) |
                   uint32_t(hdr[3]);
    if (len < 9) throw ProtocolError("frame too short");
    if (len > max_payload) throw ProtocolError("frame exceeds the payload bound");
    Bytes payload(len);
    if (!s.recv_all(payload.data(), len)) throw ProtocolError("connection closed mid-frame");
    Message m;
    m.type = payload[0];
    uint64_t job = 0;
    for (int i = 0; i < 8; ++i) job = (job << 8) | payload[size_t(1 + i)];
    m.job_id = job;
    m.body.assign(payload.begin() + 9, payload.end());
    return m;
}

}  // namespace rlfuzz::evalsvc
