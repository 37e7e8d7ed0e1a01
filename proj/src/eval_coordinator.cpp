#include "rlfuzz/eval/coordinator.hpp"

#include <algorithm>
#include <stdexcept>
#include <thread>

namespace rlfuzz::evalsvc {

void Coordinator::add_worker(const std::string& host, uint16_t port) {
    WorkerConn w;
    w.host = host;
    w.port = port;
    w.socket = std::make_unique<Socket>(Socket::connect_to(host, port));
    send_message(*w.socket, Message{MSG_PING, 0, {}});
    auto reply = recv_message(*w.socket);
    if (!reply || reply->type != MSG_PONG)
        throw ProtocolError("worker " + host + ":" + std::to_string(port) +
                            " did not answer the health check");
    w.descriptor = decode_pong(reply->body);
    w.alive = true;
    std::lock_guard<std::mutex> lk(mutex_);
    workers_.push_back(std::move(w));
}

size_t Coordinator::worker_count() const {
    std::lock_guard<std::mutex> lk(mutex_);
    return workers_.size();
}

size_t Coordinator::live_worker_count() const {
    std::lock_guard<std::mutex> lk(mutex_);
    size_t n = 0;
    for (const auto& w : workers_)
        if (w.alive) ++n;
    return n;
}

std::vector<WorkerDescriptor> Coordinator::workers() const {
    std::lock_guard<std::mutex> lk(mutex_);
    std::vector<WorkerDescriptor> out;
    for (const auto& w : workers_) out.push_back(w.descriptor);
    return out;
}

bool Coordinator::run_sub_batch(WorkerConn& w, uint64_t job_id, const std::string& target,
                                const std::vector<size_t>& indices,
                                const std::vector<std::string>& cases,
                                std::vector<CaseResult>& out, std::vector<std::string>& out_names) {
    ExecBody exec;
    exec.target_name = target;
    for (size_t idx : indices) exec.test_cases.push_back(cases[idx]);

    try {
        send_message(*w.socket, Message{MSG_EXEC, job_id, encode_exec(exec)});
        auto reply = recv_message(*w.socket);
        if (!reply) throw ProtocolError("worker closed the connection");
        if (reply->type == MSG_ERROR) {
            ErrorBody err = decode_error(reply->body);
            throw ProtocolError("worker protocol error: " + err.message);
        }
        if (reply->type != MSG_RESULT) throw ProtocolError("unexpected reply type");
        ResultBody result = decode_result(reply->body);
        if (result.cases.size() != indices.size())
            throw ProtocolError("worker returned a result count mismatch");
        for (size_t i = 0; i < indices.size(); ++i) {
            out[indices[i]] = std::move(result.cases[i]);
            out_names[indices[i]] = w.descriptor.name;
        }
        return true;
    } catch (const ProtocolError&) {
        w.alive = false;
        w.socket.reset();
        return false;
    }
}

JobResult Coordinator::submit_batch(const JobRequest& request) {
    if (request.test_cases.empty())
        throw std::invalid_argument("submit_batch: a job needs at least one test case");

    std::lock_guard<std::mutex> lk(mutex_);
    JobResult result;
    result.job_id = request.job_id;
    result.cases.resize(request.test_cases.size());
    result.executed_by.assign(request.test_cases.size(), "");

    std::vector<size_t> pending(request.test_cases.size());
    for (size_t i = 0; i < pending.size(); ++i) pending[i] = i;

    while (!pending.empty()) {
        std::vector<WorkerConn*> live;
        for (auto& w : workers_)
            if (w.alive) live.push_back(&w);
        if (live.empty()) throw ProtocolError("no live workers available");

        // round-robin split of the pending cases over the live workers
        std::vector<std::vector<size_t>> shares(live.size());
        for (size_t i = 0; i < pending.size(); ++i) shares[i % live.size()].push_back(pending[i]);

        std::vector<std::vector<size_t>> failed_shares(live.size());
        std::vector<std::thread> threads;
        for (size_t wi = 0; wi < live.size(); ++wi) {
            if (shares[wi].empty()) continue;
            threads.emplace_back([this, &request, &result, &live, &shares, &failed_shares, wi] {
                bool ok = run_sub_batch(*live[wi], request.job_id, request.target_name, shares[wi],
                                        request.test_cases, result.cases, result.executed_by);
                if (!ok) failed_shares[wi] = shares[wi];
            });
        }
        for (auto& t : threads) t.join();

        pending.clear();
        for (const auto& f : failed_shares) pending.insert(pending.end(), f.begin(), f.end());
        std::sort(pending.begin(), pending.end());
    }
    return result;
}

}  // namespace rlfuzz::evalsvc
