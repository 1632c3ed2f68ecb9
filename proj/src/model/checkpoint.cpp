#include "tsicl/model/checkpoint.hpp"

#include "tsicl/errors.hpp"

#include <zlib.h>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace tsicl::model {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'G', 'T', 'T', 'D'};

class Writer {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        bytes.insert(bytes.end(), b, b + n);
    }
    std::vector<std::uint8_t> bytes;
};

class Reader {
public:
    Reader(std::span<const std::uint8_t> b) : bytes_(b) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    [[nodiscard]] std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (remaining() < n) throw CorruptionError("checkpoint: truncated file");
    }
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

std::uint32_t crc_of(std::span<const std::uint8_t> b) {
    return static_cast<std::uint32_t>(::crc32(0L, b.data(), static_cast<uInt>(b.size())));
}

std::vector<std::uint64_t> config_fields(const ModelConfig& c) {
    return {c.n_covariates, c.n_targets, c.context_steps, c.horizon_steps, c.patch_size,
            c.d_model,      c.n_heads,   c.n_blocks,      c.n_mixture,     c.seed};
}

} // namespace

std::vector<std::uint8_t> encode_checkpoint(const Parameters& params, const ModelConfig& config) {
    Writer w;
    w.raw(kMagic.data(), kMagic.size());
    w.u32(kCheckpointVersion);
    const auto fields = config_fields(config);
    w.u32(static_cast<std::uint32_t>(fields.size() * 8));
    for (auto f : fields) w.u64(f);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const std::string& name = params.names()[i];
        const ad::Tensor& t = params.tensors()[i];
        w.u32(static_cast<std::uint32_t>(name.size()));
        w.raw(name.data(), name.size());
        w.u32(static_cast<std::uint32_t>(t.rank()));
        for (auto d : t.shape()) w.u64(d);
        for (double v : t.data()) w.f64(v);
    }
    const std::uint32_t crc = crc_of(std::span(w.bytes).subspan(kMagic.size()));
    w.u32(crc);
    return std::move(w.bytes);
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
        throw FormatError("checkpoint: bad magic (expected \"GTTD\")");
    }
    Reader r(bytes.subspan(kMagic.size()));
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion) {
        throw FormatError("checkpoint: unsupported version " + std::to_string(version));
    }
    if (bytes.size() < kMagic.size() + 8) throw CorruptionError("checkpoint: truncated file");
    const auto body = bytes.subspan(kMagic.size(), bytes.size() - kMagic.size() - 4);
    const auto tail = bytes.subspan(bytes.size() - 4);
    const std::uint32_t stored = static_cast<std::uint32_t>(tail[0]) | static_cast<std::uint32_t>(tail[1]) << 8 |
                                 static_cast<std::uint32_t>(tail[2]) << 16 | static_cast<std::uint32_t>(tail[3]) << 24;
    if (crc_of(body) != stored) throw CorruptionError("checkpoint: checksum mismatch (truncated or damaged)");

    Checkpoint ck;
    const std::uint32_t config_bytes = r.u32();
    if (config_bytes != 10 * 8) throw FormatError("checkpoint: unexpected config record size " + std::to_string(config_bytes));
    ModelConfig& c = ck.config;
    c.n_covariates = r.u64();
    c.n_targets = r.u64();
    c.context_steps = r.u64();
    c.horizon_steps = r.u64();
    c.patch_size = r.u64();
    c.d_model = r.u64();
    c.n_heads = r.u64();
    c.n_blocks = r.u64();
    c.n_mixture = r.u64();
    c.seed = r.u64();
    try {
        c.validate();
    } catch (const ArgumentError& e) {
        throw FormatError(std::string("checkpoint: invalid stored config: ") + e.what());
    }
    while (r.remaining() > 4) {
        const std::string name = r.str(r.u32());
        const std::uint32_t rank = r.u32();
        ad::Shape shape(rank);
        for (auto& d : shape) d = r.u64();
        const std::size_t n = ad::numel_of(shape);
        if (n > r.remaining() / 8) throw CorruptionError("checkpoint: tensor " + name + " overruns file");
        std::vector<double> values(n);
        for (double& v : values) v = r.f64();
        ck.params.add(name, ad::Tensor::from(std::move(shape), std::move(values)));
    }
    if (r.remaining() != 4) throw CorruptionError("checkpoint: trailing bytes");
    try {
        ck.params.check_against(c);
    } catch (const DimensionError& e) {
        throw FormatError(std::string("checkpoint: ") + e.what());
    }
    return ck;
}

void save_checkpoint(const Parameters& params, const ModelConfig& config, const std::filesystem::path& path) {
    const auto bytes = encode_checkpoint(params, config);
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("checkpoint: cannot write " + tmp.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw DataError("checkpoint: write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

namespace {
std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("checkpoint: cannot read " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}
} // namespace

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_all(path)); }

std::uint32_t checkpoint_crc(const std::filesystem::path& path) {
    const auto bytes = read_all(path);
    if (bytes.size() < 4) throw CorruptionError("checkpoint: truncated file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[bytes.size() - 4 + static_cast<std::size_t>(i)]) << (8 * i);
    return v;
}

} // namespace tsicl::model
