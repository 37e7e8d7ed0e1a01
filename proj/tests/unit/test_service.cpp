#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <thread>

#include "rlfuzz/eval/coordinator.hpp"
#include "rlfuzz/eval/store.hpp"
#include "rlfuzz/eval/worker.hpp"
#include "rlfuzz/grammar.hpp"
#include "rlfuzz/harness.hpp"
#include "rlfuzz/toy_target.hpp"

using namespace rlfuzz;
using namespace rlfuzz::evalsvc;

namespace fs = std::filesystem;

namespace {

std::vector<std::string> sample_cases(int n, uint64_t seed) {
    grammar::GrammarConfig cfg = grammar::default_grammar(seed);
    Rng rng(seed);
    std::vector<std::string> cases;
    for (int i = 0; i < n; ++i) {
        std::vector<std::string> tags;
        for (int t = 0; t < 12; ++t)
            tags.push_back(grammar::generate_tag(rng, cfg.tags[rng.uniform(cfg.tags.size())], 0.05));
        cases.push_back(grammar::build_test_case(tags, grammar::kDefaultTemplate).content);
    }
    return cases;
}

std::string temp_path(const char* name) {
    return (fs::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("protocol: body encoders round trip") {
    WorkerDescriptor d{"w1", "toy", 4242};
    WorkerDescriptor d2 = decode_pong(encode_pong(d));
    CHECK(d2.name == "w1");
    CHECK(d2.target_name == "toy");
    CHECK(d2.pid == 4242);

    ExecBody e;
    e.target_name = "toy";
    e.test_cases = {"<html>", std::string("\x00\x01\xFF", 3), ""};
    ExecBody e2 = decode_exec(encode_exec(e));
    CHECK(e2.target_name == "toy");
    CHECK(e2.test_cases == e.test_cases);

    ResultBody r;
    r.cases.resize(2);
    r.cases[0].status = CASE_OK;
    r.cases[0].wall_time_us = 1234;
    r.cases[0].coverage = {{0, 7}, {1, 0xFFFFFFFF}};
    r.cases[1].status = CASE_TIMEOUT;
    r.module_table = {{0, "bundled://toyhtml"}};
    ResultBody r2 = decode_result(encode_result(r));
    CHECK(r2.cases[0].coverage == r.cases[0].coverage);
    CHECK(r2.cases[1].status == CASE_TIMEOUT);
    CHECK(r2.module_table == r.module_table);

    ErrorBody err{7, "nope"};
    ErrorBody err2 = decode_error(encode_error(err));
    CHECK(err2.code == 7);
    CHECK(err2.message == "nope");
}

TEST_CASE("protocol: frame layout is length-prefixed big-endian") {
    Message m{MSG_PING, 0x0102030405060708ULL, {0xAA}};
    Bytes f = frame_message(m);
    REQUIRE(f.size() == 4 + 1 + 8 + 1);
    CHECK(f[0] == 0);
    CHECK(f[1] == 0);
    CHECK(f[2] == 0);
    CHECK(f[3] == 10);  // payload length
    CHECK(f[4] == MSG_PING);
    CHECK(f[5] == 0x01);
    CHECK(f[12] == 0x08);
    CHECK(f[13] == 0xAA);
}

TEST_CASE("worker answers health checks with its descriptor") {
    cov::ToyTargetHarness harness;
    WorkerOptions opts;
    opts.name = "unit-worker";
    Worker worker(opts, harness);
    worker.serve_async();

    Coordinator coord;
    coord.add_worker("127.0.0.1", worker.port());
    CHECK(coord.worker_count() == 1);
    CHECK(coord.workers()[0].name == "unit-worker");
    CHECK(coord.workers()[0].target_name == "toy");
    worker.stop();
}

TEST_CASE("remote coverage is bit-identical to local execution") {
    cov::ToyTargetHarness harness;
    Worker worker(WorkerOptions{}, harness);
    worker.serve_async();

    Coordinator coord;
    coord.add_worker("127.0.0.1", worker.port());

    auto cases = sample_cases(9, 77);
    JobRequest req{1, "toy", cases};
    JobResult res = coord.submit_batch(req);
    REQUIRE(res.cases.size() == cases.size());
    for (size_t i = 0; i < cases.size(); ++i) {
        CHECK(res.cases[i].status == CASE_OK);
        CHECK(res.cases[i].coverage == cov::toy_target_execute(cases[i]));
    }
    worker.stop();
}

TEST_CASE("batches split across workers and merge in request order") {
    cov::ToyTargetHarness h1, h2, h3;
    Worker w1(WorkerOptions{.name = "w1"}, h1);
    Worker w2(WorkerOptions{.name = "w2"}, h2);
    Worker w3(WorkerOptions{.name = "w3"}, h3);
    for (Worker* w : {&w1, &w2, &w3}) w->serve_async();

    Coordinator coord;
    for (Worker* w : {&w1, &w2, &w3}) coord.add_worker("127.0.0.1", w->port());

    auto cases = sample_cases(16, 5);
    JobResult res = coord.submit_batch({3, "toy", cases});
    REQUIRE(res.cases.size() == 16);
    for (size_t i = 0; i < cases.size(); ++i)
        CHECK(res.cases[i].coverage == cov::toy_target_execute(cases[i]));

    // all three workers saw a share (round robin)
    std::set<std::string> names(res.executed_by.begin(), res.executed_by.end());
    CHECK(names.size() == 3);
    for (Worker* w : {&w1, &w2, &w3}) w->stop();
}

TEST_CASE("a worker dying mid-job gets its share reassigned") {
    cov::ToyTargetHarness h1, h2;
    WorkerOptions dying;
    dying.name = "dying";
    dying.fail_after_cases = 2;  // dies on its third case
    Worker w1(dying, h1);
    Worker w2(WorkerOptions{.name = "steady"}, h2);
    w1.serve_async();
    w2.serve_async();

    Coordinator coord;
    coord.add_worker("127.0.0.1", w1.port());
    coord.add_worker("127.0.0.1", w2.port());

    auto cases = sample_cases(12, 31);
    JobResult res = coord.submit_batch({9, "toy", cases});
    REQUIRE(res.cases.size() == 12);
    for (size_t i = 0; i < cases.size(); ++i)
        CHECK(res.cases[i].coverage == cov::toy_target_execute(cases[i]));
    CHECK(coord.live_worker_count() == 1);
    w1.stop();
    w2.stop();
}

TEST_CASE("no live workers is an immediate error") {
    Coordinator coord;
    CHECK_THROWS_AS(coord.submit_batch({1, "toy", {"<html>"}}), std::exception);
}

TEST_CASE("malformed exec gets an error reply and the connection survives") {
    cov::ToyTargetHarness harness;
    Worker worker(WorkerOptions{}, harness);
    worker.serve_async();

    Socket s = Socket::connect_to("127.0.0.1", worker.port());
    send_message(s, Message{MSG_EXEC, 5, {0xFF}});  // truncated body
    auto reply = recv_message(s);
    REQUIRE(reply.has_value());
    CHECK(reply->type == MSG_ERROR);
    CHECK(reply->job_id == 5);

    // connection still works
    send_message(s, Message{MSG_PING, 6, {}});
    auto pong = recv_message(s);
    REQUIRE(pong.has_value());
    CHECK(pong->type == MSG_PONG);
    worker.stop();
}

TEST_CASE("unknown message type gets an error reply") {
    cov::ToyTargetHarness harness;
    Worker worker(WorkerOptions{}, harness);
    worker.serve_async();
    Socket s = Socket::connect_to("127.0.0.1", worker.port());
    send_message(s, Message{0x7F, 1, {}});
    auto reply = recv_message(s);
    REQUIRE(reply.has_value());
    CHECK(reply->type == MSG_ERROR);
    worker.stop();
}

TEST_CASE("two concurrent coordinator connections are both answered") {
    cov::ToyTargetHarness harness;
    Worker worker(WorkerOptions{}, harness);
    worker.serve_async();

    auto cases = sample_cases(6, 91);
    auto run_one = [&](uint64_t job) {
        Coordinator coord;
        coord.add_worker("127.0.0.1", worker.port());
        JobResult res = coord.submit_batch({job, "toy", cases});
        for (size_t i = 0; i < cases.size(); ++i)
            CHECK(res.cases[i].coverage == cov::toy_target_execute(cases[i]));
    };
    std::thread t1(run_one, 1), t2(run_one, 2);
    t1.join();
    t2.join();
    worker.stop();
}

TEST_CASE("isolated execution times out and other cases are unaffected") {
    cov::ToyTargetHarness harness;
    WorkerOptions opts;
    opts.timeout_ms = 300;
    opts.isolate_command = "sleep 5";  // never writes coverage
    Worker worker(opts, harness);
    worker.serve_async();

    Coordinator coord;
    coord.add_worker("127.0.0.1", worker.port());
    JobResult res = coord.submit_batch({1, "toy", {"<br>", "<hr>"}});
    REQUIRE(res.cases.size() == 2);
    CHECK(res.cases[0].status == CASE_TIMEOUT);
    CHECK(res.cases[1].status == CASE_TIMEOUT);
    worker.stop();
}

// ---- experience store ----

TEST_CASE("experience record serialization round trips all field shapes") {
    Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        ExperienceRecord rec;
        rec.episode_id = rng.next_u64();
        rec.sequence = uint32_t(rng.uniform(1000));
        rec.generator_checkpoint = trial % 3 ? "ckpt_" + std::to_string(trial) : "";
        rec.experience.action = int(rng.uniform(100));
        rec.experience.reward = trial % 5 ? rng.gaussian() : 0.0;
        rec.experience.terminal = trial % 2 == 0;
        size_t ns = rng.uniform(50);
        for (size_t i = 0; i < ns; ++i)
            rec.experience.state.push_back(int(rng.uniform(107)));
        size_t nn = rng.uniform(50);
        for (size_t i = 0; i < nn; ++i)
            rec.experience.next_state.push_back(int(rng.uniform(107)));
        CHECK(deserialize_record(serialize_record(rec)) == rec);
    }
}

TEST_CASE("store: append then stream returns identical records in order") {
    std::string path = temp_path("store_unit.log");
    fs::remove(path);
    ExperienceStore store = ExperienceStore::create(path);
    Rng rng(2);
    std::vector<ExperienceRecord> originals;
    for (int i = 0; i < 500; ++i) {
        ExperienceRecord rec;
        rec.episode_id = uint64_t(i / 10);
        rec.sequence = uint32_t(i % 10);
        rec.generator_checkpoint = "g";
        rec.experience.action = i % 7;
        rec.experience.reward = i % 10 == 9 ? 1.5 : 0.0;
        rec.experience.terminal = i % 10 == 9;
        rec.experience.state = {i, i + 1};
        rec.experience.next_state = {i + 1, i + 2};
        store.append(rec);
        originals.push_back(rec);
    }
    CHECK(store.count() == 500);
    auto all = store.stream(0);
    REQUIRE(all.size() == 500);
    for (size_t i = 0; i < all.size(); ++i) CHECK(all[i] == originals[i]);

    // stream from an offset and from the end
    CHECK(store.stream(498).size() == 2);
    CHECK(store.stream(500).empty());

    // reopen preserves everything
    ExperienceStore reopened = ExperienceStore::open(path);
    CHECK(reopened.count() == 500);
    CHECK(!reopened.recovered_torn_tail());
    CHECK(reopened.read(123) == originals[123]);
    fs::remove(path);
}

TEST_CASE("store: torn tail at any cut point is rolled back cleanly") {
    std::string path = temp_path("store_torn.log");
    for (size_t keep = 0; keep < 40; keep += 7) {
        fs::remove(path);
        uint64_t full_size;
        uint64_t before_last;
        {
            ExperienceStore store = ExperienceStore::create(path);
            for (int i = 0; i < 4; ++i) {
                ExperienceRecord rec;
                rec.episode_id = uint64_t(i);
                rec.experience.state = {1, 2, 3};
                rec.experience.next_state = {4, 5, 6};
                store.append(rec);
            }
            before_last = fs::file_size(path);
            ExperienceRecord last;
            last.episode_id = 99;
            last.experience.state = {7, 8, 9};
            store.append(last);
            full_size = fs::file_size(path);
        }
        // simulate a crash mid-write of the last record; keep == 0 cuts at
        // the record boundary, which is a clean file rather than a torn one
        uint64_t cut = before_last + std::min<uint64_t>(keep, full_size - before_last - 1);
        fs::resize_file(path, cut);

        ExperienceStore store = ExperienceStore::open(path);
        CHECK(store.count() == 4);  // the torn record is absent
        CHECK(store.recovered_torn_tail() == (cut != before_last));
        if (cut != before_last) CHECK(store.recovered_at_offset() == before_last);

        // appends after recovery are clean
        ExperienceRecord rec;
        rec.episode_id = 1000;
        store.append(rec);
        ExperienceStore again = ExperienceStore::open(path);
        CHECK(again.count() == 5);
        CHECK(!again.recovered_torn_tail());
        CHECK(again.read(4).episode_id == 1000);
    }
    fs::remove(path);
}

TEST_CASE("store: corrupt record stops the stream at the last valid one") {
    std::string path = temp_path("store_corrupt.log");
    fs::remove(path);
    {
        ExperienceStore store = ExperienceStore::create(path);
        for (int i = 0; i < 3; ++i) {
            ExperienceRecord rec;
            rec.episode_id = uint64_t(i);
            rec.experience.state = {i};
            store.append(rec);
        }
    }
    // flip a byte in the last record's payload
    auto size = fs::file_size(path);
    std::FILE* f = std::fopen(path.c_str(), "r+b");
    std::fseek(f, long(size - 2), SEEK_SET);
    int c = std::fgetc(f);
    std::fseek(f, long(size - 2), SEEK_SET);
    std::fputc(c ^ 0xFF, f);
    std::fclose(f);

    ExperienceStore store = ExperienceStore::open(path);
    CHECK(store.count() == 2);
    CHECK(store.recovered_torn_tail());
    CHECK(store.recovered_at_offset() > 16);
    fs::remove(path);
}

TEST_CASE("store: rejects foreign files") {
    std::string path = temp_path("store_bogus.log");
    {
        std::ofstream f(path, std::ios::binary);
        f << "this is not a store";
    }
    CHECK_THROWS_AS(ExperienceStore::open(path), StoreError);
    fs::remove(path);
}
