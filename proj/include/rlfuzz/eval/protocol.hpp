#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rlfuzz/bytes.hpp"
#include "rlfuzz/coverage.hpp"

namespace rlfuzz::evalsvc {

struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Length-prefixed messages over TCP: a 4-byte big-endian payload length,
// then the payload {type: u8, job_id: u64be, body}. All integers inside a
// body are big-endian; strings and blobs carry explicit length prefixes.
enum MessageType : uint8_t {
    MSG_PING = 0x01,
    MSG_PONG = 0x02,
    MSG_EXEC = 0x03,
    MSG_RESULT = 0x04,
    MSG_ERROR = 0x05,
};

struct Message {
    uint8_t type = 0;
    uint64_t job_id = 0;
    Bytes body;
};

Bytes frame_message(const Message& m);

// ---- body payloads ----

struct WorkerDescriptor {
    std::string name;
    std::string target_name;
    uint64_t pid = 0;
};

struct ExecBody {
    std::string target_name;
    std::vector<std::string> test_cases;
};

enum CaseStatus : uint8_t {
    CASE_OK = 0,
    CASE_TIMEOUT = 1,
    CASE_CRASH = 2,
};

struct CaseResult {
    uint8_t status = CASE_OK;
    uint64_t wall_time_us = 0;
    cov::CoverageSet coverage;
};

struct ResultBody {
    std::vector<CaseResult> cases;
    std::vector<std::pair<uint16_t, std::string>> module_table;
};

struct ErrorBody {
    uint16_t code = 0;
    std::string message;
};

Bytes encode_pong(const WorkerDescriptor& d);
WorkerDescriptor decode_pong(const Bytes& b);
Bytes encode_exec(const ExecBody& e);
ExecBody decode_exec(const Bytes& b);
Bytes encode_result(const ResultBody& r);
ResultBody decode_result(const Bytes& b);
Bytes encode_error(const ErrorBody& e);
ErrorBody decode_error(const Bytes& b);

// ---- sockets ----

class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    ~Socket();
    Socket(Socket&& other) noexcept;
    Socket& operator=(Socket&& other) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;

    static Socket connect_to(const std::string& host, uint16_t port);
    static Socket listen_on(const std::string& host, uint16_t port, int backlog = 16);
    Socket accept_one();

    bool valid() const { return fd_ >= 0; }
    int fd() const { return fd_; }
    uint16_t local_port() const;
    void close_now();

    void send_all(const void* data, size_t n);
    // false on clean peer shutdown before any byte arrived
    bool recv_all(void* data, size_t n);

private:
    int fd_ = -1;
};

void send_message(Socket& s, const Message& m);
// nullopt on clean EOF at a message boundary
std::optional<Message> recv_message(Socket& s, size_t max_payload = 256 * 1024 * 1024);

}  // namespace rlfuzz::evalsvc
