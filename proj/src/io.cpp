#include "scsi/io.hpp"

#include <openssl/sha.h>

#include <charconv>
#include <cmath>
#include <sstream>

namespace scsi {

std::string git_blob_sha1(const std::string& content) {
    const std::string object = "blob " + std::to_string(content.size()) + std::string(1, '\0') + content;
    unsigned char digest[SHA_DIGEST_LENGTH];
    SHA1(reinterpret_cast<const unsigned char*>(object.data()), object.size(), digest);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned char c : digest) {
        out += hex[c >> 4];
        out += hex[c & 15];
    }
    return out;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write '" + path.string() + "'");
    f << text;
    if (!f) throw Error("write failed for '" + path.string() + "'");
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw Error("format_double failed");
    return std::string(buf, p);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> header,
                     const std::string& config_hash)
    : path_(path), columns_(header.size()) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary);
    if (!out_) throw Error("cannot write '" + path.string() + "'");
    out_ << "# config-hash: " << config_hash << "\n";
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << "\n";
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_)
        throw Error(path_.string() + ": row has " + std::to_string(cells.size()) + " cells, header has " +
                    std::to_string(columns_));
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
    if (!out_) throw Error("write failed for '" + path_.string() + "'");
}

void CsvWriter::row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_double(v));
    row(cells);
}

void CsvWriter::close() {
    out_.close();
    if (out_.fail()) throw Error("close failed for '" + path_.string() + "'");
}

int CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    throw Error("csv: no column '" + name + "'");
}

std::vector<double> CsvTable::numbers(const std::string& name) const {
    const int c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[c].empty() ? std::nan("") : std::stod(r[c]));
    return out;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open '" + path.string() + "'");
    CsvTable t;
    std::string line;
    bool have_header = false;
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!s.empty() && s.back() == ',') cells.emplace_back();
        return cells;
    };
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            const std::string key = "# config-hash: ";
            if (line.rfind(key, 0) == 0) t.config_hash = line.substr(key.size());
            continue;
        }
        if (!have_header) {
            t.header = split(line);
            have_header = true;
            continue;
        }
        auto cells = split(line);
        if (cells.size() != t.header.size())
            throw Error(path.string() + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(t.header.size()) + " cells");
        t.rows.push_back(std::move(cells));
    }
    if (!have_header) throw Error(path.string() + ": missing header row");
    return t;
}

void write_points_csv(const std::filesystem::path& path, const Batch& pts, const std::string& hash,
                      const std::string& prefix, const Batch& latent) {
    const bool has_lat = latent.rows() > 0;
    if (has_lat && latent.cols() != pts.cols()) throw Error("write_points_csv: latent size mismatch");
    std::vector<std::string> header;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) header.push_back(prefix + std::to_string(i));
    for (Eigen::Index i = 0; has_lat && i < latent.rows(); ++i) header.push_back("l" + std::to_string(i));
    CsvWriter w(path, header, hash);
    std::vector<double> v(header.size());
    for (Eigen::Index j = 0; j < pts.cols(); ++j) {
        for (Eigen::Index i = 0; i < pts.rows(); ++i) v[i] = pts(i, j);
        for (Eigen::Index i = 0; has_lat && i < latent.rows(); ++i) v[pts.rows() + i] = latent(i, j);
        w.row(v);
    }
    w.close();
}

PointsTable read_points_csv(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path);
    std::vector<int> pcols, lcols;
    for (std::size_t i = 0; i < t.header.size(); ++i) {
        const auto& h = t.header[i];
        const bool is_lat = h.size() > 1 && h[0] == 'l' &&
                            h.find_first_not_of("0123456789", 1) == std::string::npos;
        (is_lat ? lcols : pcols).push_back(static_cast<int>(i));
    }
    PointsTable out;
    const auto n = static_cast<Eigen::Index>(t.rows.size());
    out.points.resize(static_cast<Eigen::Index>(pcols.size()), n);
    out.latent.resize(static_cast<Eigen::Index>(lcols.size()), n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto& r = t.rows[j];
        for (std::size_t i = 0; i < pcols.size(); ++i) out.points(i, j) = std::stod(r[pcols[i]]);
        for (std::size_t i = 0; i < lcols.size(); ++i) out.latent(i, j) = std::stod(r[lcols[i]]);
    }
    return out;
}

}  // namespace scsi
