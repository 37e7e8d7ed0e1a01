#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "rlfuzz/eval/protocol.hpp"
#include "rlfuzz/harness.hpp"

namespace rlfuzz::evalsvc {

struct WorkerOptions {
    std::string listen_host = "127.0.0.1";
    uint16_t port = 0;  // 0 picks an ephemeral port
    std::string name = "worker";
    int timeout_ms = 10000;  // per test case
    // command template for isolated execution, e.g.
    // "/path/to/cli target exec-case --target toy --input {input} --out {out}".
    // Empty runs cases in-process.
    std::string isolate_command;
    std::string work_dir = "/tmp";
    // fault-injection hook: abort the connection after executing this many
    // cases (negative disables)
    long fail_after_cases = -1;
};

// Serves execution requests over the wire protocol. Test cases of one batch
// run sequentially; concurrent connections are answered but their executions
// are serialized.
class Worker {
public:
    Worker(WorkerOptions opts, cov::TargetHarness& harness);
    ~Worker();

    uint16_t port() const { return port_; }
    const WorkerOptions& options() const { return opts_; }

    void serve();        // blocks until stop()
    void serve_async();  // starts a background serving thread
    void stop();

private:
    void handle_connection(std::shared_ptr<Socket> conn);
    CaseResult execute_case(const std::string& test_case);
    CaseResult execute_isolated(const std::string& test_case);

    WorkerOptions opts_;
    cov::TargetHarness& harness_;
    Socket listener_;
    uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::atomic<long> cases_executed_{0};
    std::mutex exec_mutex_;
    std::thread serve_thread_;
    std::vector<std::thread> conn_threads_;
    std::vector<std::weak_ptr<Socket>> open_conns_;
    std::mutex conn_mutex_;
    uint64_t case_serial_ = 0;
};

}  // namespace rlfuzz::evalsvc
