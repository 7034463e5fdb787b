#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "adcorpus/audio.hpp"
#include "adcorpus/error.hpp"

namespace adtest {

inline std::vector<double> white_noise(std::size_t n, std::uint64_t seed, double rms = 0.1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, rms);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

struct Burst {
  double start_sec;
  double end_sec;
};

/// Ground truth shared by the end-to-end checks: a stereo movie of
/// center-panned plus side noise, and an AD mix that adds three narration
/// bursts in the center and starts `lead_sec` earlier than the movie.
struct SyntheticMovie {
  adcorpus::audio::AudioTrack movie;
  adcorpus::audio::AudioTrack ad_mix;
  std::vector<Burst> bursts;
  double lead_sec;
};

inline SyntheticMovie synthetic_movie(std::uint64_t seed = 7, double lead_sec = 0.5, int rate = 16000,
                                      double duration_sec = 30.0) {
  const auto n = static_cast<std::size_t>(duration_sec * rate);
  const auto center = white_noise(n, seed, 0.1);
  const auto side = white_noise(n, seed + 1, 0.05);
  const std::vector<Burst> bursts{{5.0, 8.0}, {12.0, 14.5}, {20.0, 23.0}};

  std::vector<double> narration(n, 0.0);
  const auto voice = white_noise(n, seed + 2, 0.1);
  const double ramp = 0.01 * rate;
  for (const auto& b : bursts) {
    const auto s = static_cast<std::size_t>(std::lround(b.start_sec * rate));
    const auto e = static_cast<std::size_t>(std::lround(b.end_sec * rate));
    for (std::size_t i = s; i < e; ++i) {
      const double k = static_cast<double>(std::min(i - s, e - 1 - i));
      const double g = k >= ramp ? 1.0 : 0.5 - 0.5 * std::cos(M_PI * k / ramp);
      // syllable-like 4 Hz modulation that never falls silent
      const double mod = 0.6 + 0.4 * std::abs(std::sin(2.0 * M_PI * 2.0 * (i - s) / rate));
      narration[i] = g * mod * voice[i];
    }
  }

  const auto lead = static_cast<std::size_t>(std::lround(lead_sec * rate));
  const auto intro = white_noise(lead, seed + 3, 0.1);
  std::vector<double> ml(n), mr(n), al(lead + n), ar(lead + n);
  for (std::size_t i = 0; i < lead; ++i) al[i] = ar[i] = intro[i];
  for (std::size_t i = 0; i < n; ++i) {
    ml[i] = center[i] + side[i];
    mr[i] = center[i] - side[i];
    al[lead + i] = ml[i] + narration[i];
    ar[lead + i] = mr[i] + narration[i];
  }
  return {adcorpus::audio::AudioTrack::stereo(std::move(ml), std::move(mr), rate),
          adcorpus::audio::AudioTrack::stereo(std::move(al), std::move(ar), rate), bursts, lead_sec};
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("adcorpus_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

/// Kind of the adcorpus::Error thrown by f, if any.
template <class F>
std::optional<adcorpus::ErrorKind> error_kind(F&& f) {
  try {
    f();
  } catch (const adcorpus::Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

}  // namespace adtest
