#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "portsim/portsim.hpp"

namespace portsim::testing {

// Genre vector over `genres` from the listed names.
inline std::vector<double> gvec(const std::vector<std::string>& genres, const std::vector<std::string>& on) {
  std::vector<double> v(genres.size(), 0.0);
  for (const auto& g : on) {
    for (std::size_t i = 0; i < genres.size(); ++i) {
      if (genres[i] == g) v[i] = 1.0;
    }
  }
  return v;
}

inline ItemRecord make_item(std::int64_t id, std::vector<double> genres, std::string provider) {
  ItemRecord r;
  r.id = ItemId{id};
  r.title = "item " + std::to_string(id);
  r.genres = std::move(genres);
  r.provider = std::move(provider);
  return r;
}

inline Interaction rating(std::int64_t user, std::int64_t item, double r, std::int64_t ts = 0) {
  return Interaction{ConsumerId{user}, ItemId{item}, r, ts};
}

// Small synthetic ecosystem that keeps engine tests fast.
inline SyntheticSpec small_spec(std::uint64_t seed = 3) {
  SyntheticSpec s;
  s.consumers = 60;
  s.items = 80;
  s.providers = 6;
  s.min_ratings = 10;
  s.max_ratings = 16;
  s.seed = seed;
  return s;
}

inline Dataset small_dataset(std::uint64_t seed = 3) {
  auto spec = small_spec(seed);
  auto synth = generate_synthetic(spec);
  return prepare_dataset(std::move(synth.log), std::move(synth.catalog), spec.niche_genre);
}

inline ScenarioConfig small_scenario(std::optional<PortabilityPolicy> policy, std::uint64_t seed = 3) {
  MfParams mf;
  mf.factors = 8;
  mf.epochs = 4;
  auto cfg = standard_scenario(policy, seed, "Horror", mf);
  cfg.cycles = 4;
  cfg.days_per_cycle = 4;
  cfg.warmup_cycles = 1;
  return cfg;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("portsim_" + tag + "_" + std::to_string(std::hash<std::string>{}(tag + std::to_string(counter()++))));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::filesystem::path path_;
};

}  // namespace portsim::testing
