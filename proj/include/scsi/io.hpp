#pragma once

#include "scsi/common.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace scsi {

/// Git blob object id of `content`: SHA-1 over "blob <size>\0" followed by the bytes.
std::string git_blob_sha1(const std::string& content);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Shortest decimal form that reads back to the same double.
std::string format_double(double v);

/// CSV output: a "# config-hash: <sha>" comment line, then the header row, then data rows.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, std::vector<std::string> header,
              const std::string& config_hash);

    void row(const std::vector<std::string>& cells);
    void row(const std::vector<double>& values);
    void close();

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::size_t columns_;
};

struct CsvTable {
    std::string config_hash;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;
    std::vector<double> numbers(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

/// Points (one per column of `pts`) written as rows with columns prefix0, prefix1, ...;
/// latents, when present, follow as l0, l1, ...
void write_points_csv(const std::filesystem::path& path, const Batch& pts, const std::string& hash,
                      const std::string& prefix = "x", const Batch& latent = Batch());

struct PointsTable {
    Batch points;
    Batch latent;
};

/// Inverse of write_points_csv: columns named l<i> go to `latent`, all others to `points`.
PointsTable read_points_csv(const std::filesystem::path& path);

}  // namespace scsi
