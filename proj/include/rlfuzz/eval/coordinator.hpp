#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "rlfuzz/eval/protocol.hpp"

namespace rlfuzz::evalsvc {

struct JobRequest {
    uint64_t job_id = 0;
    std::string target_name;
    std::vector<std::string> test_cases;
};

struct JobResult {
    uint64_t job_id = 0;
    std::vector<CaseResult> cases;  // one per request case, in request order
    std::vector<std::string> executed_by;  // worker name per case
};

// Connects to a set of workers, splits batches round-robin, reassembles
// results in request order and reassigns the share of a worker that dies
// mid-job.
class Coordinator {
public:
    // connects and health-checks; throws when the worker is unreachable
    void add_worker(const std::string& host, uint16_t port);

    size_t worker_count() const;
    size_t live_worker_count() const;
    std::vector<WorkerDescriptor> workers() const;

    JobResult submit_batch(const JobRequest& request);

private:
    struct WorkerConn {
        std::string host;
        uint16_t port = 0;
        WorkerDescriptor descriptor;
        std::unique_ptr<Socket> socket;
        bool alive = false;
    };

    // sends one sub-batch and collects the reply; marks the worker dead on
    // connection failure and returns false
    bool run_sub_batch(WorkerConn& w, uint64_t job_id, const std::string& target,
                       const std::vector<size_t>& indices,
                       const std::vector<std::string>& cases, std::vector<CaseResult>& out,
                       std::vector<std::string>& out_names);

    mutable std::mutex mutex_;
    std::vector<WorkerConn> workers_;
};

}  // namespace rlfuzz::evalsvc
