// Copyright (c) 2026, FGGM Lab contributors
// SPDX-License-Identifier: Apache-2.0

#include "fggm/tensor_file.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>

namespace fggm {

namespace {

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

}  // namespace

void write_tensor_file(const std::filesystem::path& path, const NamedTensors& tensors, const nlohmann::ordered_json& extra) {
    if (!extra.is_object()) fail(ErrorKind::Contract, "tensor file header extras must be a JSON object");
    nlohmann::ordered_json header;
    auto& list = header["tensors"] = nlohmann::ordered_json::array();
    for (const auto& e : tensors) list.push_back({{"name", e.name}, {"shape", e.tensor.shape()}});
    for (const auto& [k, v] : extra.items()) {
        if (k == "tensors") fail(ErrorKind::Contract, "header extras may not override \"tensors\"");
        header[k] = v;
    }
    const std::string hdr = header.dump();

    std::string buf(kTensorFileMagic);
    put_u64(buf, hdr.size());
    buf += hdr;
    buf.reserve(buf.size() + tensors.numel() * 8);
    for (const auto& e : tensors)
        for (double v : e.tensor.data()) put_u64(buf, std::bit_cast<std::uint64_t>(v));

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!os) fail(ErrorKind::Io, "write failed: " + path.string());
}

TensorFile read_tensor_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorKind::Io, "cannot open " + path.string());
    const std::string raw((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    const auto* bytes = reinterpret_cast<const unsigned char*>(raw.data());
    const std::string where = path.string() + ": ";

    if (raw.size() < kTensorFileMagic.size() || std::string_view(raw).substr(0, 8) != kTensorFileMagic)
        fail(ErrorKind::BadMagic, where + "missing FGGM0001 magic");
    if (raw.size() < 16) fail(ErrorKind::Length, where + "truncated before header length");
    const std::uint64_t hlen = get_u64(bytes + 8);
    if (hlen > raw.size() - 16) fail(ErrorKind::Length, where + "header length " + std::to_string(hlen) + " exceeds file size");

    TensorFile out;
    try {
        out.header = nlohmann::ordered_json::parse(raw.substr(16, hlen));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Length, where + "header is not valid JSON: " + e.what());
    }
    if (!out.header.is_object() || !out.header.contains("tensors") || !out.header["tensors"].is_array())
        fail(ErrorKind::Length, where + "header lacks a \"tensors\" array");

    std::size_t offset = 16 + hlen;
    for (const auto& desc : out.header["tensors"]) {
        if (!desc.is_object() || !desc.contains("name") || !desc["name"].is_string() || !desc.contains("shape") ||
            !desc["shape"].is_array())
            fail(ErrorKind::Length, where + "malformed tensor descriptor " + desc.dump());
        const std::string name = desc["name"].get<std::string>();
        Shape shape;
        for (const auto& d : desc["shape"]) {
            if (!d.is_number_unsigned() || d.get<std::size_t>() == 0)
                fail(ErrorKind::Length, where + "tensor '" + name + "' has an invalid shape " + desc["shape"].dump());
            shape.push_back(d.get<std::size_t>());
        }
        const std::size_t n = shape_numel(shape);
        if (raw.size() - offset < n * 8) {
            const std::size_t have = (raw.size() - offset) / 8;
            fail(ErrorKind::Length, where + "payload for tensor '" + name + "' is missing or truncated (" +
                                        std::to_string(have) + " of " + std::to_string(n) + " values)");
        }
        std::vector<double> data(n);
        for (std::size_t i = 0; i < n; ++i) data[i] = std::bit_cast<double>(get_u64(bytes + offset + 8 * i));
        offset += 8 * n;
        out.tensors.insert(name, Tensor(std::move(shape), std::move(data)));
    }
    if (offset != raw.size())
        fail(ErrorKind::Length, where + std::to_string(raw.size() - offset) + " trailing bytes after the last tensor");
    return out;
}

}  // namespace fggm
