#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vickrey/core.hpp"

namespace vktest {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("vickrey-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline vickrey::AspectScores uniform_scores(double v) { return {v, v, v, v}; }

inline vickrey::CandidateResponse response(std::string model, std::string text, double score) {
  return vickrey::CandidateResponse{std::move(model), std::move(text), uniform_scores(score),
                                    std::nullopt};
}

// Pool whose entry i holds one response per score in scores[i].
inline vickrey::ResponsePool pool_with_scores(const std::vector<std::vector<double>>& scores) {
  vickrey::ResponsePool pool;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    vickrey::PoolEntry e{"q" + std::to_string(i), "instruction " + std::to_string(i), {}};
    for (std::size_t k = 0; k < scores[i].size(); ++k) {
      e.responses.push_back(response("m" + std::to_string(k),
                                     "answer " + std::to_string(i) + " " + std::to_string(k),
                                     scores[i][k]));
    }
    pool.entries.push_back(std::move(e));
  }
  return pool;
}

// Independent top-two oracle: stable sort of indices by descending value.
inline std::pair<std::size_t, std::size_t> sorted_top_two(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  return {idx[0], idx[1]};
}

}  // namespace vktest
