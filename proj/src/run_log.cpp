#include "ragopt/run_log.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>

#include "ragopt/errors.hpp"

namespace ragopt {

namespace {

std::string iso8601_utc_now() {
    using namespace std::chrono;
    const auto now = system_clock::now();
    const std::time_t secs = system_clock::to_time_t(now);
    const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                  static_cast<int>(ms));
    return buf;
}

} // namespace

RunLogger::RunLogger(const std::filesystem::path& file, bool append) : path_(file) {
    if (file.has_parent_path()) {
        std::filesystem::create_directories(file.parent_path());
    }
    if (append && std::filesystem::exists(file)) {
        // continue the sequence from the existing tail
        for (const auto& rec : read_all(file)) {
            if (rec.contains("seq")) {
                const auto seq = rec["seq"].get<std::uint64_t>();
                if (seq >= next_seq_) {
                    next_seq_ = seq + 1;
                }
            }
        }
        out_.open(file, std::ios::app);
    } else {
        out_.open(file, std::ios::trunc);
    }
    if (!out_) {
        throw DataError("cannot open run log for writing: " + file.string());
    }
    writer_ = std::thread([this] { writer_loop(); });
}

RunLogger::~RunLogger() {
    {
        std::unique_lock<std::mutex> lock(mutex_);
        stopping_ = true;
    }
    cv_.notify_all();
    if (writer_.joinable()) {
        writer_.join();
    }
}

std::uint64_t RunLogger::append(const std::string& type, nlohmann::json data) {
    nlohmann::json record{{"ts", iso8601_utc_now()}, {"type", type}, {"data", std::move(data)}};
    std::uint64_t seq;
    {
        std::unique_lock<std::mutex> lock(mutex_);
        seq = next_seq_++;
        record["seq"] = seq;
        queue_.push_back(record.dump());
        ++in_flight_;
    }
    cv_.notify_one();
    return seq;
}

void RunLogger::flush() {
    std::unique_lock<std::mutex> lock(mutex_);
    drained_.wait(lock, [this] { return in_flight_ == 0; });
    out_.flush();
}

void RunLogger::writer_loop() {
    for (;;) {
        std::string line;
        {
            std::unique_lock<std::mutex> lock(mutex_);
            cv_.wait(lock, [this] { return !queue_.empty() || stopping_; });
            if (queue_.empty()) {
                return;
            }
            line = std::move(queue_.front());
            queue_.pop_front();
        }
        out_ << line << '\n';
        out_.flush();
        {
            std::unique_lock<std::mutex> lock(mutex_);
            --in_flight_;
        }
        drained_.notify_all();
    }
}

std::vector<nlohmann::json> RunLogger::read_all(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw DataError("cannot open run log: " + file.string());
    }
    std::vector<nlohmann::json> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            records.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception&) {
            // a torn final line after a crash is expected; stop there
            break;
        }
    }
    return records;
}

} // namespace ragopt
