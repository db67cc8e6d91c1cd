#pragma once

// Binary container: [u64 little-endian header length][JSON header][float64 payload].

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "lattice_gaussian.hpp"

namespace wavechaos {

inline void write_binary(const std::string& path, const nlohmann::json& header, const std::vector<double>& payload)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    std::string h = header.dump();
    std::uint64_t n = h.size();
    unsigned char len[8];
    for (int i = 0; i < 8; ++i) len[i] = static_cast<unsigned char>(n >> (8 * i));
    f.write(reinterpret_cast<const char*>(len), 8);
    f.write(h.data(), static_cast<std::streamsize>(h.size()));
    f.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size() * sizeof(double)));
    if (!f) throw std::runtime_error("short write to " + path);
}

inline nlohmann::json read_binary(const std::string& path, std::vector<double>& payload)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path);
    unsigned char len[8];
    f.read(reinterpret_cast<char*>(len), 8);
    std::uint64_t n = 0;
    for (int i = 0; i < 8; ++i) n |= static_cast<std::uint64_t>(len[i]) << (8 * i);
    if (!f || n > (1u << 24)) throw std::runtime_error("bad header in " + path);
    std::string h(n, '\0');
    f.read(h.data(), static_cast<std::streamsize>(n));
    auto header = nlohmann::json::parse(h);
    std::uint64_t count = header.at("count").get<std::uint64_t>();
    payload.resize(count);
    f.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(count * sizeof(double)));
    if (!f) throw std::runtime_error("truncated payload in " + path);
    return header;
}

inline void export_covariance(const std::string& path, const CovarianceOperator& cov)
{
    Eigen::MatrixXd m = cov.dense();
    std::vector<double> data(m.size());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) data[i * m.cols() + j] = m(i, j);
    nlohmann::json h{{"format", "wavechaos.dense.f64"}, {"order", "row-major"},
                     {"rows", m.rows()}, {"cols", m.cols()}, {"count", data.size()},
                     {"spec_hash", cov.spec_hash()}};
    write_binary(path, h, data);
}

inline CovarianceOperator import_covariance(const std::string& path)
{
    std::vector<double> data;
    auto h = read_binary(path, data);
    if (h.value("format", "") != "wavechaos.dense.f64") throw std::runtime_error("not a covariance file: " + path);
    auto r = h.at("rows").get<Eigen::Index>(), c = h.at("cols").get<Eigen::Index>();
    if (r != c || static_cast<std::size_t>(r * c) != data.size()) throw std::runtime_error("bad dims in " + path);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = data[i * c + j];
    return CovarianceOperator::from_factors(Eigen::MatrixXd::Ones(1, 1), m, h.value("spec_hash", ""));
}

} // namespace wavechaos
