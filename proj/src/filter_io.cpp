#include "sslr/mixing.hpp"

#include <fstream>
#include <iomanip>
#include <limits>

namespace sslr {

namespace {
constexpr const char* kMagic = "sslr-filterbank";
constexpr int kVersion = 1;
}  // namespace

void write_filter_bank(const FilterBank& bank,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open filter bank for writing: " + path.string());
  out << kMagic << ' ' << kVersion << '\n'
      << bank.num_out() << ' ' << bank.num_in() << ' ' << bank.filter_len()
      << '\n'
      << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t m = 0; m < bank.num_out(); ++m) {
    for (std::size_t n = 0; n < bank.num_in(); ++n) {
      const auto f = bank.filter(m, n);
      for (std::size_t k = 0; k < f.size(); ++k)
        out << (k ? " " : "") << f[k];
      out << '\n';
    }
  }
  if (!out) throw IoError("failed writing filter bank: " + path.string());
}

FilterBank read_filter_bank(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open filter bank: " + path.string());
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kMagic || version != kVersion)
    throw IoError("not a filter bank file (bad header): " + path.string());
  std::size_t m = 0, n = 0, len = 0;
  if (!(in >> m >> n >> len) || m < 1 || n < 1 || len < 1)
    throw IoError("filter bank has invalid dimensions: " + path.string());
  std::vector<double> taps(m * n * len);
  for (double& t : taps)
    if (!(in >> t)) throw IoError("filter bank is truncated: " + path.string());
  std::string extra;
  if (in >> extra)
    throw IoError("filter bank has trailing data: " + path.string());
  try {
    FilterBank bank(m, n, len, std::move(taps));
    if (bank.is_zero())
      throw IoError("filter bank has no nonzero taps: " + path.string());
    return bank;
  } catch (const ConfigError& e) {
    throw IoError(std::string(e.what()) + ": " + path.string());
  }
}

}  // namespace sslr
