#include "minerscope/archive.hpp"

namespace minerscope {

ArchiveWriter::ArchiveWriter(const std::filesystem::path& path)
    : owned_(path), out_(&owned_) {
    if (!owned_) throw CodecError("cannot open archive for writing: " + path.string());
}

void ArchiveWriter::write(const VisitRecord& record) {
    std::string line = encode_visit(record);
    std::lock_guard lock(mutex_);
    *out_ << line << '\n';
    if (!*out_) throw CodecError("archive write failed");
    ++count_;
}

ArchiveReader::ArchiveReader(const std::filesystem::path& path)
    : owned_(path), in_(&owned_) {
    if (!owned_) throw CodecError("cannot open archive: " + path.string());
}

std::optional<VisitRecord> ArchiveReader::next() {
    std::string line;
    while (std::getline(*in_, line)) {
        ++line_no_;
        if (line.empty()) continue;
        try {
            return decode_visit(line);
        } catch (const std::runtime_error& e) {
            throw CodecError("line " + std::to_string(line_no_) + ": " + e.what());
        }
    }
    return std::nullopt;
}

void for_each_record(const std::filesystem::path& path,
                     const std::function<void(const VisitRecord&)>& fn) {
    ArchiveReader reader(path);
    while (auto record = reader.next()) fn(*record);
}

}  // namespace minerscope
