#pragma once

#include <cstdio>
#include <mutex>
#include <string>
#include <vector>

#include "rlfuzz/bytes.hpp"
#include "rlfuzz/ddqn.hpp"

namespace rlfuzz::evalsvc {

struct StoreError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExperienceRecord {
    uint64_t episode_id = 0;
    uint32_t sequence = 0;  // unique within an episode
    std::string generator_checkpoint;
    ddqn::Experience experience;

    bool operator==(const ExperienceRecord&) const = default;
};

Bytes serialize_record(const ExperienceRecord& rec);
ExperienceRecord deserialize_record(const Bytes& data);

struct StoreOptions {
    bool fsync_each_append = false;
};

// Append-only log with a 16-byte header {magic, version} and per-record
// CRC32. Opening rebuilds the offset index and rolls back a torn tail, so a
// crash between append and acknowledgment leaves no partial record visible.
class ExperienceStore {
public:
    using Options = StoreOptions;

    // creates a fresh store (truncates an existing file)
    static ExperienceStore create(const std::string& path, Options opts = {});
    // opens an existing store, scanning and recovering
    static ExperienceStore open(const std::string& path, Options opts = {});

    ExperienceStore(ExperienceStore&&) noexcept = default;
    ExperienceStore& operator=(ExperienceStore&&) noexcept = default;
    ~ExperienceStore();

    // durable before return (flushed; fsynced when configured)
    void append(const ExperienceRecord& rec);

    size_t count() const;
    ExperienceRecord read(size_t index) const;
    // records in append order starting at from_sequence
    std::vector<ExperienceRecord> stream(size_t from_sequence,
                                         size_t max_count = SIZE_MAX) const;

    // recovery report from open()
    bool recovered_torn_tail() const { return recovered_; }
    uint64_t recovered_at_offset() const { return recovered_offset_; }

    const std::string& path() const { return path_; }

private:
    ExperienceStore() = default;
    void scan_and_index();

    std::string path_;
    Options opts_;
    struct FileCloser {
        void operator()(std::FILE* f) const {
            if (f) std::fclose(f);
        }
    };
    std::unique_ptr<std::FILE, FileCloser> file_;
    std::vector<uint64_t> offsets_;
    mutable std::unique_ptr<std::mutex> mutex_ = std::make_unique<std::mutex>();
    bool recovered_ = false;
    uint64_t recovered_offset_ = 0;
};

}  // namespace rlfuzz::evalsvc
