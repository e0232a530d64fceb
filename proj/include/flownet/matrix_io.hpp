#ifndef FLOWNET_MATRIX_IO_HPP
#define FLOWNET_MATRIX_IO_HPP

#include <Eigen/Dense>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flownet/common.hpp"

namespace flownet {

static_assert(std::endian::native == std::endian::little,
              "matrix payload format assumes a little-endian host");

// FNV-1a 64-bit over the raw payload bytes.
inline std::uint64_t matrix_checksum(const unsigned char* data, std::size_t len) {
    std::uint64_t h = 1469598103934665603ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= data[i];
        h *= 1099511628211ull;
    }
    return h;
}

// Dense matrix on disk: row-major IEEE-754 doubles (little-endian) plus a
// JSON sidecar `<path>.json` with dimensions and a content checksum.
inline void write_matrix(const std::string& path, const Eigen::MatrixXd& m) {
    using RowMajor =
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    RowMajor rm = m;
    const auto* bytes = reinterpret_cast<const unsigned char*>(rm.data());
    std::size_t len = static_cast<std::size_t>(rm.size()) * sizeof(double);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw validation_error("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes), static_cast<std::streamsize>(len));
    if (!out) throw validation_error("write failed for '" + path + "'");
    out.close();

    nlohmann::json side;
    side["n_rows"] = m.rows();
    side["n_cols"] = m.cols();
    side["checksum"] = matrix_checksum(bytes, len);
    std::ofstream sout(path + ".json", std::ios::trunc);
    if (!sout) throw validation_error("cannot open '" + path + ".json'");
    sout << side.dump(2) << "\n";
}

inline Eigen::MatrixXd read_matrix(const std::string& path) {
    nlohmann::json side;
    {
        std::ifstream sin(path + ".json");
        if (!sin) throw validation_error("missing sidecar '" + path + ".json'");
        try {
            sin >> side;
        } catch (const nlohmann::json::exception& e) {
            throw validation_error(std::string("invalid matrix sidecar: ") + e.what());
        }
    }
    Eigen::Index rows, cols;
    std::uint64_t checksum;
    try {
        rows = side.at("n_rows").get<Eigen::Index>();
        cols = side.at("n_cols").get<Eigen::Index>();
        checksum = side.at("checksum").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw validation_error(std::string("matrix sidecar schema: ") + e.what());
    }
    std::size_t expected = static_cast<std::size_t>(rows) * cols * sizeof(double);

    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("cannot open '" + path + "'");
    std::vector<unsigned char> buf(expected);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(expected));
    if (static_cast<std::size_t>(in.gcount()) != expected)
        throw validation_error("truncated matrix payload in '" + path + "'");
    char probe;
    if (in.read(&probe, 1))
        throw validation_error("trailing bytes in matrix payload '" + path + "'");
    if (matrix_checksum(buf.data(), expected) != checksum)
        throw validation_error("checksum mismatch for '" + path + "'");

    using RowMajor =
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    RowMajor rm(rows, cols);
    std::memcpy(rm.data(), buf.data(), expected);
    return rm;
}

}  // namespace flownet

#endif
