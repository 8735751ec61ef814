#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include <unistd.h>

#include "mhl/mhl.hpp"

namespace mhl::testing {

inline Matrix<double> random_matrix(std::size_t r, std::size_t c, Rng& rng, double lo = -2.0, double hi = 2.0) {
    Matrix<double> m(r, c);
    for (auto& v : m.values()) v = rng.uniform(lo, hi);
    return m;
}

template <typename T>
Matrix<T> naive_matmul(const Matrix<T>& a, const Matrix<T>& b) {
    Matrix<T> out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            T acc{0};
            for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
            out(i, j) = acc;
        }
    return out;
}

inline double max_abs_diff(const Matrix<double>& a, const Matrix<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

/// Small model config used where the full-width network is unnecessary.
inline ModelConfig tiny_config(std::size_t in = 6) {
    ModelConfig c;
    c.hidden = 8;
    c.heads = 2;
    c.input_dims = {in, in, in};
    return c;
}

/// Random aligned sample with the given widths.
inline VideoSample random_sample(std::size_t frames, const std::array<std::size_t, 3>& dims, std::uint64_t seed,
                                 int label = 1) {
    Rng rng(seed);
    VideoSample s;
    s.id = "s" + std::to_string(seed);
    s.label = label;
    for (Modality m : kModalities) {
        Matrix<float> v(frames, dims[index_of(m)]);
        for (auto& x : v.values()) x = static_cast<float>(rng.normal());
        s.features[index_of(m)] = {m, std::move(v)};
    }
    std::vector<std::uint8_t> truth(frames, 0);
    if (label == 1) truth[frames / 2] = 1;
    s.frame_truth = truth;
    return s;
}

/// Fresh scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& name) {
        path_ = std::filesystem::temp_directory_path() / ("mhl_test_" + name + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace mhl::testing
