// Copyright Contributors to the tubetopo Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// CVOL container, version 1:
//
//   "CVOL" | u8 version (=1) | u32 LE header length | UTF-8 JSON header | payload
//
// The header is {"dims":[z,y,x],"dtype":"u8"|"f32","order":"zyx-rowmajor",
// "spacing":[sz,sy,sx]} and the payload is raw little-endian voxels, x fastest.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "volume.hpp"

namespace tubetopo {

enum class ContainerFault {
    io,
    bad_magic,
    bad_version,
    bad_header,
    payload_length,
    unknown_dtype,
    invalid_spacing,
};

class ContainerError : public IoError {
public:
    ContainerError(ContainerFault fault, const std::string& msg) : IoError(msg), fault_(fault) {}
    ContainerFault fault() const { return fault_; }

private:
    ContainerFault fault_;
};

using AnyVolume = std::variant<LabelVolume, ProbVolume>;

struct VolumeFile {
    AnyVolume volume;
    Spacing spacing;

    const Shape& shape() const
    {
        return std::visit([](const auto& v) -> const Shape& { return v.shape(); }, volume);
    }
    bool is_u8() const { return std::holds_alternative<LabelVolume>(volume); }

    /// Voxel values as T regardless of on-disk dtype.
    template <typename T>
    Volume<T> as() const
    {
        return std::visit([](const auto& v) { return volume_cast<T>(v); }, volume);
    }
};

inline constexpr std::array<char, 4> kContainerMagic{'C', 'V', 'O', 'L'};
inline constexpr std::uint8_t kContainerVersion = 1;

namespace detail {

template <typename T>
constexpr const char* dtype_name();
template <>
constexpr const char* dtype_name<std::uint8_t>() { return "u8"; }
template <>
constexpr const char* dtype_name<float>() { return "f32"; }

inline void put_u32le(std::string& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline std::uint32_t get_u32le(const unsigned char* p)
{
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
           std::uint32_t(p[3]) << 24;
}

template <typename T>
void append_payload(std::string& out, const Volume<T>& v)
{
    if constexpr (std::is_same_v<T, std::uint8_t>) {
        out.append(reinterpret_cast<const char*>(v.values().data()), v.size());
    } else {
        out.reserve(out.size() + 4 * v.size());
        for (float f : v)
            put_u32le(out, std::bit_cast<std::uint32_t>(f));
    }
}

inline std::string header_json(const Shape& shape, const char* dtype, const Spacing& s)
{
    // nlohmann::json objects keep keys sorted, so the dump is deterministic.
    nlohmann::json h;
    h["dims"] = {shape.z, shape.y, shape.x};
    h["dtype"] = dtype;
    h["spacing"] = {s.z, s.y, s.x};
    h["order"] = "zyx-rowmajor";
    return h.dump();
}

} // namespace detail

template <typename T>
std::string encode_volume(const Volume<T>& v, const Spacing& s)
{
    if (!s.valid())
        throw ContainerError(ContainerFault::invalid_spacing, "spacing components must be positive");
    const std::string header = detail::header_json(v.shape(), detail::dtype_name<T>(), s);
    std::string out(kContainerMagic.begin(), kContainerMagic.end());
    out.push_back(static_cast<char>(kContainerVersion));
    detail::put_u32le(out, static_cast<std::uint32_t>(header.size()));
    out += header;
    detail::append_payload(out, v);
    return out;
}

inline std::string encode_volume(const VolumeFile& f)
{
    return std::visit([&](const auto& v) { return encode_volume(v, f.spacing); }, f.volume);
}

inline VolumeFile decode_volume(const std::string& bytes)
{
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if (bytes.size() < 4 || std::memcmp(p, kContainerMagic.data(), 4) != 0)
        throw ContainerError(ContainerFault::bad_magic, "not a CVOL container (bad magic)");
    if (bytes.size() < 9)
        throw ContainerError(ContainerFault::bad_header, "truncated container preamble");
    if (p[4] != kContainerVersion)
        throw ContainerError(ContainerFault::bad_version,
                             "unsupported container version " + std::to_string(int(p[4])));
    const std::size_t header_len = detail::get_u32le(p + 5);
    if (bytes.size() < 9 + header_len)
        throw ContainerError(ContainerFault::bad_header, "header length exceeds file size");

    nlohmann::json h;
    try {
        h = nlohmann::json::parse(bytes.begin() + 9, bytes.begin() + 9 + static_cast<std::ptrdiff_t>(header_len));
    } catch (const nlohmann::json::exception& e) {
        throw ContainerError(ContainerFault::bad_header, std::string("malformed header: ") + e.what());
    }

    Shape shape;
    Spacing spacing{};
    std::string dtype;
    try {
        const auto dims = h.at("dims").get<std::vector<std::size_t>>();
        const auto sp = h.at("spacing").get<std::vector<double>>();
        if (dims.size() != 3 || sp.size() != 3)
            throw ContainerError(ContainerFault::bad_header, "dims and spacing must have 3 entries");
        if (h.contains("order") && h["order"] != "zyx-rowmajor")
            throw ContainerError(ContainerFault::bad_header, "unsupported voxel order");
        shape = {dims[0], dims[1], dims[2]};
        spacing = {sp[0], sp[1], sp[2]};
        dtype = h.at("dtype").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ContainerError(ContainerFault::bad_header, std::string("malformed header: ") + e.what());
    }
    if (dtype != "u8" && dtype != "f32")
        throw ContainerError(ContainerFault::unknown_dtype, "unknown dtype '" + dtype + "'");
    if (!spacing.valid())
        throw ContainerError(ContainerFault::invalid_spacing, "spacing components must be positive");

    const std::size_t elem = dtype == "u8" ? 1 : 4;
    const std::size_t payload = bytes.size() - 9 - header_len;
    if (payload != shape.size() * elem)
        throw ContainerError(ContainerFault::payload_length,
                             "payload is " + std::to_string(payload) + " bytes, expected " +
                                 std::to_string(shape.size() * elem));
    const unsigned char* data = p + 9 + header_len;

    if (elem == 1) {
        std::vector<std::uint8_t> v(data, data + payload);
        return {LabelVolume(shape, std::move(v)), spacing};
    }
    std::vector<float> v(shape.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = std::bit_cast<float>(detail::get_u32le(data + 4 * i));
    return {ProbVolume(shape, std::move(v)), spacing};
}

inline VolumeFile read_volume(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ContainerError(ContainerFault::io, "cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_volume(bytes);
}

inline void write_bytes(const std::filesystem::path& path, const std::string& bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw IoError("write failed for " + path.string());
}

template <typename T>
void write_volume(const Volume<T>& v, const Spacing& s, const std::filesystem::path& path)
{
    write_bytes(path, encode_volume(v, s));
}

inline void write_volume(const VolumeFile& f, const std::filesystem::path& path)
{
    write_bytes(path, encode_volume(f));
}

} // namespace tubetopo
