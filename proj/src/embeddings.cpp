#include "aurl/embeddings.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include "aurl/errors.hpp"
#include "aurl/io.hpp"
#include "aurl/rng.hpp"

namespace aurl {

Mat init_xavier(std::size_t rows, std::size_t dim, std::uint64_t seed) {
    if (rows == 0 || dim == 0)
        throw ShapeError("init_xavier requires rows, dim >= 1");
    const double a = std::sqrt(3.0 / static_cast<double>(dim));
    Mat m(rows, dim);
    Rng rng(seed);
    for (double& v : m.storage())
        v = (2.0 * uniform_unit(rng) - 1.0) * a;
    return m;
}

EmbeddingState init_state(std::size_t num_users, std::size_t num_items,
                          std::size_t dim, std::uint64_t seed) {
    EmbeddingState state;
    state.user_emb = init_xavier(num_users, dim, sub_seed(seed, 1));
    state.item_emb = init_xavier(num_items, dim, sub_seed(seed, 2));
    return state;
}

Mat l2_normalize_rows(const Mat& m) {
    Mat out = m;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = out.row(r);
        const double norm = std::sqrt(sq_norm(row));
        if (norm > 0.0)
            for (double& v : row)
                v /= norm;
    }
    return out;
}

Mat l2_normalize_rows_backward(const Mat& original, const Mat& upstream) {
    if (original.rows() != upstream.rows() || original.cols() != upstream.cols())
        throw ShapeError("normalize backward: shape mismatch");
    Mat out(original.rows(), original.cols());
    for (std::size_t r = 0; r < original.rows(); ++r) {
        auto f = original.row(r);
        auto g = upstream.row(r);
        auto o = out.row(r);
        const double norm = std::sqrt(sq_norm(f));
        if (norm == 0.0)
            continue;
        double gdotfhat = 0.0;
        for (std::size_t c = 0; c < f.size(); ++c)
            gdotfhat += g[c] * f[c] / norm;
        for (std::size_t c = 0; c < f.size(); ++c)
            o[c] = (g[c] - gdotfhat * f[c] / norm) / norm;
    }
    return out;
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

constexpr char kMagic[8] = {'A', 'U', 'R', 'L', 'C', 'K', 'P', 'T'};

void append_u32(std::string& buf, std::uint32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    buf.append(b, 4);
}

void append_matrix_f32(std::string& buf, const Mat& m) {
    for (double v : m.storage()) {
        const float f = static_cast<float>(v);
        char b[4];
        std::memcpy(b, &f, 4);
        buf.append(b, 4);
    }
}

std::uint32_t read_u32(const std::string& buf, std::size_t& off) {
    std::uint32_t v;
    std::memcpy(&v, buf.data() + off, 4);
    off += 4;
    return v;
}

} // namespace

void save_checkpoint(const EmbeddingState& state, const std::filesystem::path& path,
                     const std::string& meta_json) {
    const auto m = state.num_users();
    const auto n = state.num_items();
    const auto d = state.dim();
    if (state.item_emb.cols() != d)
        throw ShapeError("checkpoint: user/item dim mismatch");
    std::string buf;
    buf.reserve(24 + 4 * (m + n) * d);
    buf.append(kMagic, 8);
    append_u32(buf, kCheckpointVersion);
    append_u32(buf, static_cast<std::uint32_t>(m));
    append_u32(buf, static_cast<std::uint32_t>(n));
    append_u32(buf, static_cast<std::uint32_t>(d));
    append_matrix_f32(buf, state.user_emb);
    append_matrix_f32(buf, state.item_emb);
    write_file_atomic(path, buf);
    auto meta_path = path;
    meta_path += ".meta.json";
    write_file_atomic(meta_path, meta_json);
}

EmbeddingState load_checkpoint(const std::filesystem::path& path) {
    const std::string buf = read_file(path);
    if (buf.size() < 24)
        throw CorruptionError("checkpoint truncated: " + path.string());
    if (std::memcmp(buf.data(), kMagic, 8) != 0)
        throw FormatError("bad checkpoint magic: " + path.string());
    std::size_t off = 8;
    const auto version = read_u32(buf, off);
    if (version != kCheckpointVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    const auto m = read_u32(buf, off);
    const auto n = read_u32(buf, off);
    const auto d = read_u32(buf, off);
    const std::size_t expect = 24 + 4ull * (static_cast<std::size_t>(m) + n) * d;
    if (buf.size() != expect)
        throw CorruptionError("checkpoint payload length mismatch: " + path.string());
    EmbeddingState state;
    state.user_emb = Mat(m, d);
    state.item_emb = Mat(n, d);
    auto read_matrix = [&](Mat& dst) {
        for (double& v : dst.storage()) {
            float f;
            std::memcpy(&f, buf.data() + off, 4);
            off += 4;
            v = static_cast<double>(f);
        }
    };
    read_matrix(state.user_emb);
    read_matrix(state.item_emb);
    if (!state.user_emb.all_finite() || !state.item_emb.all_finite())
        throw CorruptionError("checkpoint contains non-finite values: " + path.string());
    return state;
}

std::string load_checkpoint_meta(const std::filesystem::path& path) {
    auto meta_path = path;
    meta_path += ".meta.json";
    return read_file(meta_path);
}

} // namespace aurl
