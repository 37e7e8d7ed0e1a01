#include "rlfuzz/eval/worker.hpp"

#include <cerrno>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <fstream>

#include "rlfuzz/toy_target.hpp"

namespace rlfuzz::evalsvc {

Worker::Worker(WorkerOptions opts, cov::TargetHarness& harness)
    : opts_(std::move(opts)), harness_(harness) {
    listener_ = Socket::listen_on(opts_.listen_host, opts_.port);
    port_ = listener_.local_port();
}

Worker::~Worker() {
    stop();
}

void Worker::stop() {
    if (stopping_.exchange(true)) return;
    if (serve_thread_.joinable()) serve_thread_.join();  // poll loop sees the flag
    {
        // force handlers blocked in recv off their sockets
        std::lock_guard<std::mutex> lk(conn_mutex_);
        for (auto& weak : open_conns_)
            if (auto conn = weak.lock()) ::shutdown(conn->fd(), SHUT_RDWR);
    }
    std::lock_guard<std::mutex> lk(conn_mutex_);
    for (auto& t : conn_threads_)
        if (t.joinable()) t.join();
    conn_threads_.clear();
    open_conns_.clear();
    listener_.close_now();
}

void Worker::serve_async() {
    serve_thread_ = std::thread([this] { serve(); });
}

void Worker::serve() {
    while (!stopping_) {
        pollfd pfd{listener_.fd(), POLLIN, 0};
        int rc = ::poll(&pfd, 1, 100);
        if (rc < 0) {
            if (errno == EINTR) continue;
            break;
        }
        if (rc == 0 || !(pfd.revents & POLLIN)) continue;

        std::shared_ptr<Socket> conn;
        try {
            conn = std::make_shared<Socket>(listener_.accept_one());
        } catch (const ProtocolError&) {
            break;
        }
        std::lock_guard<std::mutex> lk(conn_mutex_);
        open_conns_.push_back(conn);
        conn_threads_.emplace_back([this, conn] { handle_connection(conn); });
    }
}

void Worker::handle_connection(std::shared_ptr<Socket> conn_ptr) {
    Socket& conn = *conn_ptr;
    while (!stopping_) {
        std::optional<Message> msg;
        try {
            msg = recv_message(conn);
        } catch (const ProtocolError&) {
            return;  // broken connection
        }
        if (!msg) return;  // clean EOF

        try {
            if (msg->type == MSG_PING) {
                WorkerDescriptor d;
                d.name = opts_.name;
                d.target_name = harness_.descriptor().name;
                d.pid = uint64_t(::getpid());
                send_message(conn, Message{MSG_PONG, msg->job_id, encode_pong(d)});
            } else if (msg->type == MSG_EXEC) {
                ExecBody exec;
                try {
                    exec = decode_exec(msg->body);
                } catch (const std::exception& e) {
                    // malformed message: protocol error reply, connection kept
                    send_message(conn, Message{MSG_ERROR, msg->job_id,
                                               encode_error({1, std::string("malformed exec: ") + e.what()})});
                    continue;
                }

                ResultBody result;
                {
                    // one test case at a time, across all connections
                    std::lock_guard<std::mutex> lk(exec_mutex_);
                    for (const auto& tc : exec.test_cases) {
                        long done = cases_executed_.fetch_add(1);
                        if (opts_.fail_after_cases >= 0 && done >= opts_.fail_after_cases) {
                            // injected fault: drop the connection mid-job
                            conn.close_now();
                            return;
                        }
                        result.cases.push_back(execute_case(tc));
                    }
                }
                auto desc = harness_.descriptor();
                for (size_t i = 0; i < desc.module_paths.size(); ++i)
                    result.module_table.emplace_back(uint16_t(i), desc.module_paths[i]);
                send_message(conn, Message{MSG_RESULT, msg->job_id, encode_result(result)});
            } else {
                send_message(conn, Message{MSG_ERROR, msg->job_id,
                                           encode_error({2, "unknown message type"})});
            }
        } catch (const ProtocolError&) {
            return;  // peer went away while replying
        }
    }
}

CaseResult Worker::execute_case(const std::string& test_case) {
    if (!opts_.isolate_command.empty()) return execute_isolated(test_case);

    CaseResult r;
    auto t0 = std::chrono::steady_clock::now();
    try {
        r.coverage = harness_.execute(test_case);
        r.status = CASE_OK;
    } catch (const std::exception&) {
        r.status = CASE_CRASH;
    }
    auto t1 = std::chrono::steady_clock::now();
    r.wall_time_us = uint64_t(std::chrono::duration_cast<std::chrono::microseconds>(t1 - t0).count());
    return r;
}

CaseResult Worker::execute_isolated(const std::string& test_case) {
    CaseResult r;
    std::string input_path = opts_.work_dir + "/" + opts_.name + "_case_" +
                             std::to_string(case_serial_) + ".html";
    std::string out_path = opts_.work_dir + "/" + opts_.name + "_cov_" +
                           std::to_string(case_serial_) + ".txt";
    ++case_serial_;
    {
        std::ofstream f(input_path, std::ios::binary);
        f.write(test_case.data(), std::streamsize(test_case.size()));
    }

    std::string cmd = opts_.isolate_command;
    auto replace_all = [](std::string& s, const std::string& from, const std::string& to) {
        for (size_t p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size()))
            s.replace(p, from.size(), to);
    };
    replace_all(cmd, "{input}", input_path);
    replace_all(cmd, "{out}", out_path);

    auto t0 = std::chrono::steady_clock::now();
    pid_t pid = ::fork();
    if (pid < 0) {
        r.status = CASE_CRASH;
        return r;
    }
    if (pid == 0) {
        // child: exec the helper through the shell right away
        ::execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }

    auto deadline = t0 + std::chrono::milliseconds(opts_.timeout_ms);
    int status = 0;
    bool finished = false;
    while (std::chrono::steady_clock::now() < deadline) {
        pid_t w = ::waitpid(pid, &status, WNOHANG);
        if (w == pid) {
            finished = true;
            break;
        }
        ::usleep(2000);
    }
    if (!finished) {
        ::kill(pid, SIGKILL);
        ::waitpid(pid, &status, 0);
        r.status = CASE_TIMEOUT;
    } else if (WIFEXITED(status) && WEXITSTATUS(status) == 0) {
        try {
            r.coverage = cov::coverage_load(out_path);
            r.status = CASE_OK;
        } catch (const std::exception&) {
            r.status = CASE_CRASH;
        }
    } else {
        r.status = CASE_CRASH;
    }
    auto t1 = std::chrono::steady_clock::now();
    r.wall_time_us = uint64_t(std::chrono::duration_cast<std::chrono::microseconds>(t1 - t0).count());
    std::remove(input_path.c_str());
    std::remove(out_path.c_str());
    return r;
}

}  // namespace rlfuzz::evalsvc
