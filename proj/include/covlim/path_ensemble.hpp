// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace covlim {

enum class PathStatus : std::uint8_t { Ok = 0, Absorbed = 1, Diverged = 2 };

/// Ensemble kinds. Covariance kinds carry the packed upper triangle of V
/// (state_dim = m(m+1)/2); scalar kinds carry (q, r = log q).
namespace ensemble_kind {
inline constexpr const char* kMlp = "mlp";
inline constexpr const char* kResnet = "resnet";
inline constexpr const char* kCovChain = "cov_chain";
inline constexpr const char* kShapedChain = "shaped_chain";
inline constexpr const char* kCovSde = "cov_sde";
inline constexpr const char* kCovOde = "cov_ode";
inline constexpr const char* kQChain = "q_chain";
inline constexpr const char* kQSde = "q_sde";
}  // namespace ensemble_kind

bool is_covariance_kind(const std::string& kind);

struct EnsembleMeta {
  std::string kind;
  std::uint32_t m = 0;
  std::uint32_t n = 0;
  std::uint32_t d = 0;
  std::uint64_t master_seed = 0;
  std::uint64_t config_hash = 0;
};

/// Side-channel counts reported alongside an ensemble; not serialized in the
/// binary format.
struct EventCounters {
  std::uint64_t steps = 0;
  std::uint64_t clamp_events = 0;
  std::uint64_t psd_projections = 0;
  std::uint64_t reflections = 0;
};

/// Independent trajectories on a shared time grid, stored path-major:
/// value(path, step, component).
class PathEnsemble {
 public:
  PathEnsemble() = default;
  PathEnsemble(EnsembleMeta meta, std::vector<double> times, std::size_t state_dim, std::size_t paths);

  const EnsembleMeta& meta() const noexcept { return meta_; }
  EnsembleMeta& meta() noexcept { return meta_; }
  const std::vector<double>& times() const noexcept { return times_; }
  std::size_t steps() const noexcept { return times_.size(); }
  std::size_t paths() const noexcept { return status_.size(); }
  std::size_t state_dim() const noexcept { return state_dim_; }

  double value(std::size_t path, std::size_t step, std::size_t comp) const {
    return data_[offset(path, step) + comp];
  }
  std::span<double> state(std::size_t path, std::size_t step) {
    return {data_.data() + offset(path, step), state_dim_};
  }
  std::span<const double> state(std::size_t path, std::size_t step) const {
    return {data_.data() + offset(path, step), state_dim_};
  }

  PathStatus status(std::size_t path) const { return status_[path]; }
  void set_status(std::size_t path, PathStatus s) { status_[path] = s; }
  std::uint64_t stream(std::size_t path) const { return streams_[path]; }
  void set_stream(std::size_t path, std::uint64_t id) { streams_[path] = id; }

  /// Component `comp` at `step` across all paths (non-finite values kept).
  std::vector<double> slice(std::size_t step, std::size_t comp) const;
  /// Correlation of pair (a, b) at `step` across paths; covariance kinds only.
  std::vector<double> correlation_slice(std::size_t step, std::size_t a, std::size_t b) const;

  EventCounters counters;

  const std::vector<double>& raw() const noexcept { return data_; }
  friend bool operator==(const PathEnsemble& x, const PathEnsemble& y) {
    return x.meta_.kind == y.meta_.kind && x.meta_.m == y.meta_.m && x.meta_.n == y.meta_.n &&
           x.meta_.d == y.meta_.d && x.times_ == y.times_ && x.state_dim_ == y.state_dim_ &&
           x.data_ == y.data_ && x.status_ == y.status_ && x.streams_ == y.streams_;
  }

 private:
  std::size_t offset(std::size_t path, std::size_t step) const { return (path * times_.size() + step) * state_dim_; }

  EnsembleMeta meta_;
  std::vector<double> times_;
  std::size_t state_dim_ = 0;
  std::vector<double> data_;
  std::vector<PathStatus> status_;
  std::vector<std::uint64_t> streams_;
};

// Binary ensemble format, all integers and doubles little-endian:
//   char[4] magic "CVLE" | u32 version | u32 m | u32 n | u32 d | u32 state_dim
//   u64 paths | u64 steps | u64 master_seed | u64 config_hash
//   u32 kind_length | char[kind_length] kind
//   f64[steps] times | u64[paths] stream ids | u8[paths] status
//   f64[paths * steps * state_dim] values, path-major
inline constexpr std::uint32_t kEnsembleFormatVersion = 1;

void write_binary(const PathEnsemble& ensemble, std::ostream& out);
PathEnsemble read_binary(std::istream& in);
void write_binary(const PathEnsemble& ensemble, const std::filesystem::path& file);
PathEnsemble read_binary(const std::filesystem::path& file);

/// Covariance kinds: path,layer,t,pair,V,rho (pair is the flat upper-triangle
/// index, rho its correlation). Scalar kinds: path,layer,t,q,r.
void write_csv(const PathEnsemble& ensemble, std::ostream& out);

/// Shortest round-trip decimal representation, "nan"/"inf"/"-inf" otherwise.
std::string format_double(double x);

}  // namespace covlim
