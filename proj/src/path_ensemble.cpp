// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#include "covlim/path_ensemble.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "covlim/cov_matrix.hpp"
#include "covlim/error.hpp"

namespace covlim {

bool is_covariance_kind(const std::string& kind) {
  return kind == ensemble_kind::kMlp || kind == ensemble_kind::kResnet || kind == ensemble_kind::kCovChain ||
         kind == ensemble_kind::kShapedChain || kind == ensemble_kind::kCovSde || kind == ensemble_kind::kCovOde;
}

PathEnsemble::PathEnsemble(EnsembleMeta meta, std::vector<double> times, std::size_t state_dim, std::size_t paths)
    : meta_(std::move(meta)),
      times_(std::move(times)),
      state_dim_(state_dim),
      data_(paths * times_.size() * state_dim, 0.0),
      status_(paths, PathStatus::Ok),
      streams_(paths, 0) {}

std::vector<double> PathEnsemble::slice(std::size_t step, std::size_t comp) const {
  std::vector<double> out(paths());
  for (std::size_t p = 0; p < paths(); ++p) out[p] = value(p, step, comp);
  return out;
}

std::vector<double> PathEnsemble::correlation_slice(std::size_t step, std::size_t a, std::size_t b) const {
  if (!is_covariance_kind(meta_.kind)) {
    throw Error(ErrorKind::InvalidArgument, "path_ensemble", "correlation_slice", "not a covariance ensemble");
  }
  const std::size_t m = meta_.m;
  std::vector<double> out(paths());
  for (std::size_t p = 0; p < paths(); ++p) {
    const double vab = value(p, step, CovMatrix::flat_index(a, b, m));
    const double vaa = value(p, step, CovMatrix::flat_index(a, a, m));
    const double vbb = value(p, step, CovMatrix::flat_index(b, b, m));
    out[p] = vab / std::sqrt(vaa * vbb);
  }
  return out;
}

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(bytes.data(), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  std::array<char, sizeof(T)> bytes{};
  if (!in.read(bytes.data(), sizeof(T))) {
    throw Error(ErrorKind::Io, "path_ensemble", "read_binary", "truncated ensemble file");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

constexpr std::array<char, 4> kMagic{'C', 'V', 'L', 'E'};
// Guard against absurd headers before allocating.
constexpr std::uint64_t kMaxValues = std::uint64_t{1} << 34;

}  // namespace

void write_binary(const PathEnsemble& e, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kEnsembleFormatVersion);
  put<std::uint32_t>(out, e.meta().m);
  put<std::uint32_t>(out, e.meta().n);
  put<std::uint32_t>(out, e.meta().d);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(e.state_dim()));
  put<std::uint64_t>(out, e.paths());
  put<std::uint64_t>(out, e.steps());
  put<std::uint64_t>(out, e.meta().master_seed);
  put<std::uint64_t>(out, e.meta().config_hash);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(e.meta().kind.size()));
  out.write(e.meta().kind.data(), static_cast<std::streamsize>(e.meta().kind.size()));
  for (double t : e.times()) put<double>(out, t);
  for (std::size_t p = 0; p < e.paths(); ++p) put<std::uint64_t>(out, e.stream(p));
  for (std::size_t p = 0; p < e.paths(); ++p) put<std::uint8_t>(out, static_cast<std::uint8_t>(e.status(p)));
  for (double v : e.raw()) put<double>(out, v);
  if (!out) throw Error(ErrorKind::Io, "path_ensemble", "write_binary", "write failed");
}

PathEnsemble read_binary(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw Error(ErrorKind::Io, "path_ensemble", "read_binary", "bad magic; not a covlim ensemble");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kEnsembleFormatVersion) {
    throw Error(ErrorKind::Io, "path_ensemble", "read_binary", "unsupported format version " + std::to_string(version));
  }
  EnsembleMeta meta;
  meta.m = get<std::uint32_t>(in);
  meta.n = get<std::uint32_t>(in);
  meta.d = get<std::uint32_t>(in);
  const auto state_dim = get<std::uint32_t>(in);
  const auto paths = get<std::uint64_t>(in);
  const auto steps = get<std::uint64_t>(in);
  meta.master_seed = get<std::uint64_t>(in);
  meta.config_hash = get<std::uint64_t>(in);
  const auto kind_length = get<std::uint32_t>(in);
  if (kind_length > 64 || paths * steps * state_dim > kMaxValues) {
    throw Error(ErrorKind::Io, "path_ensemble", "read_binary", "implausible header");
  }
  meta.kind.resize(kind_length);
  if (!in.read(meta.kind.data(), kind_length)) {
    throw Error(ErrorKind::Io, "path_ensemble", "read_binary", "truncated ensemble file");
  }
  std::vector<double> times(steps);
  for (auto& t : times) t = get<double>(in);
  PathEnsemble e(std::move(meta), std::move(times), state_dim, paths);
  for (std::size_t p = 0; p < paths; ++p) e.set_stream(p, get<std::uint64_t>(in));
  for (std::size_t p = 0; p < paths; ++p) {
    const auto s = get<std::uint8_t>(in);
    if (s > 2) throw Error(ErrorKind::Io, "path_ensemble", "read_binary", "bad path status");
    e.set_status(p, static_cast<PathStatus>(s));
  }
  for (std::size_t p = 0; p < paths; ++p)
    for (std::size_t s = 0; s < steps; ++s)
      for (auto& v : e.state(p, s)) v = get<double>(in);
  return e;
}

void write_binary(const PathEnsemble& ensemble, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "path_ensemble", "write_binary", "cannot open " + file.string());
  write_binary(ensemble, out);
}

PathEnsemble read_binary(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "path_ensemble", "read_binary", "cannot open " + file.string());
  return read_binary(in);
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto result = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), result.ptr);
}

void write_csv(const PathEnsemble& e, std::ostream& out) {
  const auto& times = e.times();
  if (is_covariance_kind(e.meta().kind)) {
    const std::size_t m = e.meta().m;
    out << "path,layer,t,pair,V,rho\n";
    for (std::size_t p = 0; p < e.paths(); ++p)
      for (std::size_t s = 0; s < e.steps(); ++s)
        for (std::size_t a = 0; a < m; ++a)
          for (std::size_t b = a; b < m; ++b) {
            const std::size_t k = CovMatrix::flat_index(a, b, m);
            const double v = e.value(p, s, k);
            const double rho = v / std::sqrt(e.value(p, s, CovMatrix::flat_index(a, a, m)) *
                                             e.value(p, s, CovMatrix::flat_index(b, b, m)));
            out << p << ',' << s << ',' << format_double(times[s]) << ',' << k << ',' << format_double(v) << ','
                << format_double(rho) << '\n';
          }
  } else {
    out << "path,layer,t,q,r\n";
    for (std::size_t p = 0; p < e.paths(); ++p)
      for (std::size_t s = 0; s < e.steps(); ++s)
        out << p << ',' << s << ',' << format_double(times[s]) << ',' << format_double(e.value(p, s, 0)) << ','
            << format_double(e.value(p, s, 1)) << '\n';
  }
}

}  // namespace covlim
