#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <mutex>
#include <optional>
#include <ostream>

#include "minerscope/telemetry.hpp"

namespace minerscope {

/// Streams VisitRecords out as newline-delimited lines. write() is
/// thread-safe so parallel collector sessions can share one writer.
class ArchiveWriter {
public:
    explicit ArchiveWriter(std::ostream& out) : out_(&out) {}
    explicit ArchiveWriter(const std::filesystem::path& path);

    void write(const VisitRecord& record);
    std::size_t count() const { return count_; }

private:
    std::ofstream owned_;
    std::ostream* out_;
    std::mutex mutex_;
    std::size_t count_ = 0;
};

/// Streams an archive line by line; corpora never need to fit in memory.
class ArchiveReader {
public:
    explicit ArchiveReader(std::istream& in) : in_(&in) {}
    explicit ArchiveReader(const std::filesystem::path& path);

    /// Next record, or nullopt at end of stream. Decode errors carry the
    /// line number.
    std::optional<VisitRecord> next();

private:
    std::ifstream owned_;
    std::istream* in_;
    std::size_t line_no_ = 0;
};

void for_each_record(const std::filesystem::path& path,
                     const std::function<void(const VisitRecord&)>& fn);

}  // namespace minerscope
