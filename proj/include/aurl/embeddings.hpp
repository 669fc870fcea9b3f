#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "aurl/matrix.hpp"

namespace aurl {

// Trainable representation tables: Z is M x D (users), H is N x D (items).
struct EmbeddingState {
    Mat user_emb;
    Mat item_emb;

    std::size_t dim() const noexcept { return user_emb.cols(); }
    std::size_t num_users() const noexcept { return user_emb.rows(); }
    std::size_t num_items() const noexcept { return item_emb.rows(); }
};

// Entries i.i.d. uniform on [-a, a] with a = sqrt(3/dim).
Mat init_xavier(std::size_t rows, std::size_t dim, std::uint64_t seed);

EmbeddingState init_state(std::size_t num_users, std::size_t num_items,
                          std::size_t dim, std::uint64_t seed);

// Scales each nonzero row to unit Euclidean norm; zero rows stay zero.
Mat l2_normalize_rows(const Mat& m);

// Backward of row normalization: given upstream gradient g on the normalized
// rows and the original matrix, returns the gradient on the original rows,
//   df = (g - (g . fhat) fhat) / |f|,   zero rows -> zero gradient.
Mat l2_normalize_rows_backward(const Mat& original, const Mat& upstream);

// Binary layout: "AURLCKPT", version u32 LE, M/N/D u32 LE, then M*D followed
// by N*D f32 LE values row-major. A JSON sidecar lands at <path>.meta.json.
void save_checkpoint(const EmbeddingState& state, const std::filesystem::path& path,
                     const std::string& meta_json);
EmbeddingState load_checkpoint(const std::filesystem::path& path);

// Reads the sidecar written by save_checkpoint (raw JSON text).
std::string load_checkpoint_meta(const std::filesystem::path& path);

inline constexpr std::uint32_t kCheckpointVersion = 1;

} // namespace aurl
