#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

namespace ragopt {

/// Append-only JSONL run log. One record per line:
///   {"seq": N, "ts": "<ISO8601 UTC>", "type": "<record type>", "data": {...}}
/// Sequence numbers are strictly increasing within a file; a dedicated
/// writer task drains an internal ordered queue so concurrent pipeline
/// workers never interleave partial lines, and every line is flushed as it
/// is written so the log survives crashes mid-step.
class RunLogger {
public:
    explicit RunLogger(const std::filesystem::path& file, bool append = false);
    ~RunLogger();

    RunLogger(const RunLogger&) = delete;
    RunLogger& operator=(const RunLogger&) = delete;

    /// Enqueues a record and returns its sequence number.
    std::uint64_t append(const std::string& type, nlohmann::json data);

    /// Blocks until every enqueued record is on disk.
    void flush();

    const std::filesystem::path& path() const { return path_; }

    /// Parses every record line of an existing log file.
    static std::vector<nlohmann::json> read_all(const std::filesystem::path& file);

private:
    void writer_loop();

    std::filesystem::path path_;
    std::ofstream out_;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::condition_variable drained_;
    std::deque<std::string> queue_;
    std::uint64_t next_seq_ = 1;
    bool stopping_ = false;
    std::size_t in_flight_ = 0;
    std::thread writer_;
};

} // namespace ragopt
