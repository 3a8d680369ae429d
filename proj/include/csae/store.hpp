#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "csae/dataset.hpp"
#include "csae/errors.hpp"
#include "csae/losses.hpp"
#include "csae/sae.hpp"

namespace csae {

using json = nlohmann::json;

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr char kCheckpointMagic[4] = {'S', 'A', 'E', 'M'};
inline constexpr char kDatasetMagic[4] = {'S', 'A', 'E', 'A'};

// ---------------------------------------------------------------------------
// Little-endian primitives (explicit byte order; platform independent)
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u16(std::string& buf, std::uint16_t v) {
    buf.push_back(static_cast<char>(v & 0xFF));
    buf.push_back(static_cast<char>((v >> 8) & 0xFF));
}

inline void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_f32(std::string& buf, float v) { put_u32(buf, std::bit_cast<std::uint32_t>(v)); }

class ByteReader {
  public:
    ByteReader(const std::string& bytes, std::string name)
        : bytes_(bytes), name_(std::move(name)) {}

    std::size_t remaining() const { return bytes_.size() - off_; }

    void need(std::size_t n, const char* what) const {
        if (remaining() < n) {
            throw StoreError(StoreError::Kind::truncated,
                             name_ + ": truncated while reading " + what + " (need " +
                                 std::to_string(n) + " bytes, have " +
                                 std::to_string(remaining()) + ")");
        }
    }

    std::uint16_t u16(const char* what) {
        need(2, what);
        const auto* p = reinterpret_cast<const unsigned char*>(bytes_.data() + off_);
        off_ += 2;
        return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
    }

    std::uint32_t u32(const char* what) {
        need(4, what);
        const auto* p = reinterpret_cast<const unsigned char*>(bytes_.data() + off_);
        off_ += 4;
        return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
               (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
    }

    float f32(const char* what) { return std::bit_cast<float>(u32(what)); }

    std::string take(std::size_t n, const char* what) {
        need(n, what);
        std::string out = bytes_.substr(off_, n);
        off_ += n;
        return out;
    }

    const std::string& name() const { return name_; }

  private:
    const std::string& bytes_;
    std::string name_;
    std::size_t off_ = 0;
};

inline void check_magic(ByteReader& r, const char (&magic)[4], const char* kind) {
    const std::string got = r.take(4, "magic");
    if (!std::equal(got.begin(), got.end(), magic)) {
        throw StoreError(StoreError::Kind::bad_magic,
                         r.name() + ": bad magic, not a " + kind + " file");
    }
}

inline void check_version(ByteReader& r, std::uint32_t expected) {
    const std::uint32_t v = r.u32("version");
    if (v != expected) {
        throw StoreError(StoreError::Kind::bad_version,
                         r.name() + ": unsupported format version " + std::to_string(v) +
                             " (expected " + std::to_string(expected) + ")");
    }
}

inline void check_consumed(const ByteReader& r) {
    if (r.remaining() != 0) {
        throw StoreError(StoreError::Kind::corrupt,
                         r.name() + ": " + std::to_string(r.remaining()) +
                             " trailing bytes after payload");
    }
}

inline json parse_header(ByteReader& r) {
    const std::uint32_t len = r.u32("header length");
    const std::string text = r.take(len, "header");
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) {
        throw StoreError(StoreError::Kind::corrupt, r.name() + ": header is not valid JSON");
    }
    return j;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StoreError(StoreError::Kind::io, "cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw StoreError(StoreError::Kind::io, "read failed for " + path);
    return bytes;
}

// Write to a sibling temp file, then rename over the target.
inline void atomic_write_file(const std::string& path, const std::string& bytes) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw StoreError(StoreError::Kind::io, "cannot open " + tmp + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw StoreError(StoreError::Kind::io, "write failed for " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw StoreError(StoreError::Kind::io, "rename failed for " + path + ": " + ec.message());
}

inline json load_json_file(const std::string& path) {
    json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) {
        throw StoreError(StoreError::Kind::corrupt, path + ": not valid JSON");
    }
    return j;
}

inline void save_json_file(const std::string& path, const json& j) {
    atomic_write_file(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Checkpoint (.saem): magic, version, JSON header, raw f32 LE payload in the
// order w_enc, b_enc, w_dec, b_pre.
// ---------------------------------------------------------------------------

struct CheckpointMeta {
    LossWeights weights;
    std::uint64_t seed = 0;
    std::string phase = "unsupervised";  // provenance: unsupervised | supervised | pipeline
};

inline std::string checkpoint_bytes(const SaeParams& p, const CheckpointMeta& meta) {
    p.validate();
    json header = {
        {"d", p.d()},
        {"n", p.n()},
        {"k", p.k},
        {"k_aux", p.k_aux},
        {"weights",
         {{"alpha", meta.weights.alpha},
          {"beta", meta.weights.beta},
          {"gamma", meta.weights.gamma},
          {"lambda", meta.weights.lambda}}},
        {"seed", meta.seed},
        {"phase", meta.phase},
    };
    const std::string htext = header.dump();
    std::string buf;
    buf.reserve(12 + htext.size() + 4 * (p.n() * p.d() * 2 + p.n() + p.d()));
    buf.append(kCheckpointMagic, 4);
    detail::put_u32(buf, kCheckpointVersion);
    detail::put_u32(buf, static_cast<std::uint32_t>(htext.size()));
    buf.append(htext);
    for (float v : p.w_enc.data) detail::put_f32(buf, v);
    for (float v : p.b_enc) detail::put_f32(buf, v);
    for (float v : p.w_dec.data) detail::put_f32(buf, v);
    for (float v : p.b_pre) detail::put_f32(buf, v);
    return buf;
}

inline void save_checkpoint(const std::string& path, const SaeParams& p,
                            const CheckpointMeta& meta) {
    atomic_write_file(path, checkpoint_bytes(p, meta));
}

inline std::pair<SaeParams, CheckpointMeta> load_checkpoint_bytes(const std::string& bytes,
                                                                  const std::string& name) {
    detail::ByteReader r(bytes, name);
    detail::check_magic(r, kCheckpointMagic, "checkpoint");
    detail::check_version(r, kCheckpointVersion);
    const json header = detail::parse_header(r);

    SaeParams p;
    CheckpointMeta meta;
    try {
        const auto d = header.at("d").get<std::size_t>();
        const auto n = header.at("n").get<std::size_t>();
        p.k = header.at("k").get<std::size_t>();
        p.k_aux = header.at("k_aux").get<std::size_t>();
        const json& w = header.at("weights");
        meta.weights.alpha = w.at("alpha").get<double>();
        meta.weights.beta = w.at("beta").get<double>();
        meta.weights.gamma = w.at("gamma").get<double>();
        meta.weights.lambda = w.at("lambda").get<double>();
        meta.seed = header.at("seed").get<std::uint64_t>();
        meta.phase = header.at("phase").get<std::string>();
        p.w_enc = MatF(n, d);
        p.b_enc.resize(n);
        p.w_dec = MatF(d, n);
        p.b_pre.resize(d);
    } catch (const json::exception& e) {
        throw StoreError(StoreError::Kind::corrupt, name + ": bad header: " + e.what());
    }

    const std::size_t floats = p.w_enc.data.size() + p.b_enc.size() + p.w_dec.data.size() +
                               p.b_pre.size();
    r.need(floats * 4, "payload");
    for (float& v : p.w_enc.data) v = r.f32("w_enc");
    for (float& v : p.b_enc) v = r.f32("b_enc");
    for (float& v : p.w_dec.data) v = r.f32("w_dec");
    for (float& v : p.b_pre) v = r.f32("b_pre");
    detail::check_consumed(r);
    try {
        p.validate();
    } catch (const ValidationError& e) {
        throw StoreError(StoreError::Kind::corrupt, name + ": " + e.what());
    }
    return {std::move(p), std::move(meta)};
}

inline std::pair<SaeParams, CheckpointMeta> load_checkpoint(const std::string& path) {
    return load_checkpoint_bytes(read_file(path), path);
}

// ---------------------------------------------------------------------------
// Dataset (.saea): magic, version, JSON header with vocabularies, then fixed
// width records (u16 timestep, u16 object, u16 style, d x f32).
// ---------------------------------------------------------------------------

inline std::string dataset_bytes(const Dataset& data) {
    data.validate();
    json header = {
        {"d", data.d},
        {"timesteps", data.timesteps},
        {"objects", data.object_names},
        {"styles", data.style_names},
        {"count", data.size()},
    };
    const std::string htext = header.dump();
    std::string buf;
    buf.reserve(12 + htext.size() + data.size() * (6 + 4 * data.d));
    buf.append(kDatasetMagic, 4);
    detail::put_u32(buf, kDatasetVersion);
    detail::put_u32(buf, static_cast<std::uint32_t>(htext.size()));
    buf.append(htext);
    for (const auto& s : data.samples) {
        detail::put_u16(buf, s.timestep);
        detail::put_u16(buf, s.object);
        detail::put_u16(buf, s.style);
        for (float v : s.x) detail::put_f32(buf, v);
    }
    return buf;
}

inline void save_dataset(const std::string& path, const Dataset& data) {
    atomic_write_file(path, dataset_bytes(data));
}

inline Dataset load_dataset_bytes(const std::string& bytes, const std::string& name) {
    detail::ByteReader r(bytes, name);
    detail::check_magic(r, kDatasetMagic, "dataset");
    detail::check_version(r, kDatasetVersion);
    const json header = detail::parse_header(r);

    Dataset data;
    std::size_t count = 0;
    try {
        data.d = header.at("d").get<std::size_t>();
        data.timesteps = header.at("timesteps").get<std::size_t>();
        data.object_names = header.at("objects").get<std::vector<std::string>>();
        data.style_names = header.at("styles").get<std::vector<std::string>>();
        count = header.at("count").get<std::size_t>();
    } catch (const json::exception& e) {
        throw StoreError(StoreError::Kind::corrupt, name + ": bad header: " + e.what());
    }
    r.need(count * (6 + 4 * data.d), "records");
    data.samples.resize(count);
    for (auto& s : data.samples) {
        s.timestep = r.u16("timestep");
        s.object = r.u16("object id");
        s.style = r.u16("style id");
        s.x.resize(data.d);
        for (float& v : s.x) v = r.f32("sample values");
    }
    detail::check_consumed(r);
    try {
        data.validate();
    } catch (const ValidationError& e) {
        throw StoreError(StoreError::Kind::corrupt, name + ": " + e.what());
    }
    return data;
}

inline Dataset load_dataset(const std::string& path) {
    return load_dataset_bytes(read_file(path), path);
}

}  // namespace csae
