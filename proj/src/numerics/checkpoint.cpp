#include "asd/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "asd/error.hpp"

namespace asd {
namespace {

constexpr char kMagic[8] = {'A', 'S', 'D', 'C', 'K', 'P', 'T', '\0'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}
void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}
void put_str(std::string& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out += s;
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    std::uint64_t uint(int width) {
        need(width);
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += width;
        return v;
    }
    std::string str() {
        const auto n = uint(4);
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    void expect_magic() {
        need(sizeof(kMagic));
        if (std::memcmp(bytes_.data() + pos_, kMagic, sizeof(kMagic)) != 0) {
            throw ConfigError("not a checkpoint file (bad magic)");
        }
        pos_ += sizeof(kMagic);
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) throw ConfigError("truncated checkpoint");
    }
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
    ckpt.params.validate();
    std::string out(kMagic, sizeof(kMagic));
    put_u32(out, kCheckpointVersion);
    put_str(out, ckpt.role);
    put_u32(out, static_cast<std::uint32_t>(ckpt.meta.size()));
    for (const auto& [k, v] : ckpt.meta) {
        put_str(out, k);
        put_str(out, v);
    }
    const auto& layout = ckpt.params.layout();
    put_u32(out, static_cast<std::uint32_t>(layout.size()));
    for (const auto& seg : layout) {
        put_str(out, seg.name);
        put_u32(out, static_cast<std::uint32_t>(seg.shape.size()));
        for (std::size_t d : seg.shape) put_u64(out, d);
    }
    const auto values = ckpt.params.values();
    put_u64(out, values.size());
    for (double v : values) put_u64(out, std::bit_cast<std::uint64_t>(v));
    return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
    Reader in(bytes);
    in.expect_magic();
    const auto version = in.uint(4);
    if (version != kCheckpointVersion) {
        throw ConfigError("unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint ckpt;
    ckpt.role = in.str();
    const auto n_meta = in.uint(4);
    for (std::uint64_t i = 0; i < n_meta; ++i) {
        std::string k = in.str();
        ckpt.meta[k] = in.str();
    }
    const auto n_seg = in.uint(4);
    std::vector<Segment> layout;
    std::size_t offset = 0;
    for (std::uint64_t i = 0; i < n_seg; ++i) {
        Segment seg;
        seg.name = in.str();
        const auto rank = in.uint(4);
        for (std::uint64_t r = 0; r < rank; ++r) seg.shape.push_back(in.uint(8));
        seg.offset = offset;
        offset += seg.size();
        layout.push_back(std::move(seg));
    }
    const auto count = in.uint(8);
    if (count != offset) throw ConfigError("checkpoint payload does not match its layout table");
    std::vector<double> values(count);
    for (auto& v : values) v = std::bit_cast<double>(in.uint(8));
    if (!in.done()) throw ConfigError("trailing bytes after checkpoint payload");
    ckpt.params = ParamVector::from_parts(std::move(layout), std::move(values));
    return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    const std::string bytes = encode_checkpoint(ckpt);
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw ConfigError("cannot write checkpoint " + path.string());
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw ConfigError("cannot write checkpoint " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw MissingInput("checkpoint not found: " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return decode_checkpoint(ss.str());
}

}  // namespace asd
