#include "cycletrans/nn/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "cycletrans/error.hpp"

namespace cycletrans::nn {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O writes host byte order and assumes little-endian");

constexpr std::array<char, 8> kMagic{'C', 'Y', 'T', 'R', 'C', 'K', 'P', 'T'};
constexpr std::string_view kAccumulatorPrefix = "adagrad/";

template <class T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <class T>
T get(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw FormatError("truncated checkpoint");
  }
  return value;
}

std::string get_string(std::istream& in) {
  const auto n = get<std::uint32_t>(in);
  if (n > (1U << 30)) throw FormatError("checkpoint string length out of range");
  std::string s(n, '\0');
  if (n && !in.read(s.data(), n)) throw FormatError("truncated checkpoint");
  return s;
}

}  // namespace

void Checkpoint::add(std::string name, Matrix tensor) {
  names.push_back(std::move(name));
  tensors.push_back(std::move(tensor));
}

const Matrix* Checkpoint::find(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return &tensors[i];
  }
  return nullptr;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  // Write to a sibling temp file first so a crash never leaves a torn checkpoint.
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(out, kVersion);
    put<std::uint32_t>(out, kDtypeF64);
    put_string(out, kind);
    put<std::uint64_t>(out, vocab_fingerprint);
    put<std::uint64_t>(out, seed);
    put_string(out, metadata);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      put_string(out, names[i]);
      put<std::uint64_t>(out, static_cast<std::uint64_t>(tensors[i].rows()));
      put<std::uint64_t>(out, static_cast<std::uint64_t>(tensors[i].cols()));
      out.write(reinterpret_cast<const char*>(tensors[i].data()),
                static_cast<std::streamsize>(sizeof(double) * tensors[i].size()));
    }
    if (!out) throw FormatError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read checkpoint " + path.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw FormatError(path.string() + " is not a checkpoint");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  if (get<std::uint32_t>(in) != kDtypeF64) throw FormatError("unsupported checkpoint dtype");
  Checkpoint ckpt;
  ckpt.kind = get_string(in);
  ckpt.vocab_fingerprint = get<std::uint64_t>(in);
  ckpt.seed = get<std::uint64_t>(in);
  ckpt.metadata = get_string(in);
  const auto count = get<std::uint32_t>(in);
  for (std::uint32_t k = 0; k < count; ++k) {
    auto name = get_string(in);
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    if (rows > (1ULL << 32) || cols > (1ULL << 32)) throw FormatError("tensor shape out of range");
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    if (!in.read(reinterpret_cast<char*>(m.data()),
                 static_cast<std::streamsize>(sizeof(double) * m.size()))) {
      throw FormatError("truncated tensor " + name);
    }
    ckpt.add(std::move(name), std::move(m));
  }
  return ckpt;
}

void store_params(Checkpoint& ckpt, const ParamSet& params,
                  const std::vector<Matrix>& accumulators) {
  for (std::size_t i = 0; i < params.size(); ++i) ckpt.add(params.name(i), params.at(i));
  for (std::size_t i = 0; i < accumulators.size(); ++i) {
    ckpt.add(std::string(kAccumulatorPrefix) + params.name(i), accumulators[i]);
  }
}

void restore_params(const Checkpoint& ckpt, ParamSet& params, std::vector<Matrix>* accumulators) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto* t = ckpt.find(params.name(i));
    if (t == nullptr) throw FormatError("checkpoint lacks tensor " + params.name(i));
    if (t->rows() != params.at(i).rows() || t->cols() != params.at(i).cols()) {
      throw FormatError("tensor " + params.name(i) + " has the wrong shape");
    }
    params.at(i) = *t;
  }
  if (accumulators == nullptr) return;
  accumulators->clear();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto* t = ckpt.find(std::string(kAccumulatorPrefix) + params.name(i));
    if (t == nullptr) {
      accumulators->clear();
      return;
    }
    accumulators->push_back(*t);
  }
}

}  // namespace cycletrans::nn
