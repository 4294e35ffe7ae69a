#include "eqz/txchain.hpp"

#include <cmath>
#include <stdexcept>

#include "eqz/rng.hpp"

namespace eqz {

ChannelModel::ChannelModel(std::vector<double> taps_in, double noise_var)
    : taps(std::move(taps_in)), noise_variance(noise_var) {
  if (taps.empty()) throw std::invalid_argument("channel taps must be nonempty");
  if (taps.front() == 0.0) throw std::invalid_argument("leading channel tap must be nonzero");
  for (double t : taps)
    if (!std::isfinite(t)) throw std::invalid_argument("channel taps must be finite");
  if (!std::isfinite(noise_variance) || noise_variance < 0.0)
    throw std::invalid_argument("noise variance must be finite and >= 0");
}

namespace {

std::vector<double> unit_power(std::vector<double> t) {
  double p = 0.0;
  for (double v : t) p += v * v;
  const double s = std::sqrt(p);
  for (double& v : t) v /= s;
  return t;
}

}  // namespace

ChannelModel ChannelModel::preset(const std::string& name, double noise_var) {
  if (name == "h_A") return ChannelModel(unit_power({0.135, 0.450, 0.750, 0.450, 0.135}), noise_var);
  if (name == "h_B") return ChannelModel(unit_power({0.877, 0.438, 0.168, 0.084, 0.059}), noise_var);
  throw std::invalid_argument("unknown channel preset: " + name);
}

PamConstellation PamConstellation::make(int order) {
  if (order < 2 || (order & (order - 1)) != 0)
    throw std::invalid_argument("PAM order must be a power of two >= 2");
  PamConstellation c;
  c.order = order;
  c.bits_per_symbol = 0;
  for (int m = order; m > 1; m >>= 1) ++c.bits_per_symbol;
  const int q = c.bits_per_symbol;
  c.levels.resize(order);
  c.bit_labels.assign(order, std::vector<std::uint8_t>(q, 0));
  if (order == 2) {
    // Bit 0 maps to +1 so bit LLR sign and symbol estimate sign agree.
    c.levels = {+1.0, -1.0};
    c.bit_labels[0][0] = 0;
    c.bit_labels[1][0] = 1;
  } else {
    // Ascending odd levels scaled to unit average energy, binary-reflected
    // Gray labels along the amplitude axis.
    const double scale = std::sqrt((static_cast<double>(order) * order - 1.0) / 3.0);
    for (int i = 0; i < order; ++i) {
      c.levels[i] = (2.0 * i - (order - 1)) / scale;
      const int gray = i ^ (i >> 1);
      for (int j = 0; j < q; ++j)
        c.bit_labels[i][j] = static_cast<std::uint8_t>((gray >> (q - 1 - j)) & 1);
    }
  }
  c.label_to_level.assign(order, -1);
  for (int i = 0; i < order; ++i) {
    int packed = 0;
    for (int j = 0; j < q; ++j) packed = (packed << 1) | c.bit_labels[i][j];
    c.label_to_level[packed] = i;
  }
  return c;
}

int PamConstellation::level_index_from_bits(const std::uint8_t* bits) const {
  int packed = 0;
  for (int j = 0; j < bits_per_symbol; ++j) {
    if (bits[j] > 1) throw std::invalid_argument("bits must be 0 or 1");
    packed = (packed << 1) | bits[j];
  }
  return label_to_level[packed];
}

std::vector<std::uint8_t> random_bits(long count, std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("bit count must be >= 0");
  std::vector<std::uint8_t> bits(count);
  auto gen = make_engine(seed);
  for (auto& b : bits) b = static_cast<std::uint8_t>(gen() >> 63);
  return bits;
}

SymbolBlock gray_map(const std::vector<std::uint8_t>& bits, const PamConstellation& c) {
  const auto q = static_cast<std::size_t>(c.bits_per_symbol);
  if (bits.size() % q != 0)
    throw std::invalid_argument("bit count not divisible by bits per symbol");
  SymbolBlock out;
  out.source_bits = bits;
  out.symbols.reserve(bits.size() / q);
  for (std::size_t i = 0; i < bits.size(); i += q)
    out.symbols.push_back(c.levels[c.level_index_from_bits(&bits[i])]);
  return out;
}

std::vector<double> apply_channel(const SymbolBlock& block, const ChannelModel& ch, std::uint64_t seed) {
  if (block.symbols.empty()) throw std::invalid_argument("empty symbol block");
  const auto& x = block.symbols;
  const auto& h = ch.taps;
  std::vector<double> z(x.size(), 0.0);
  for (std::size_t n = 0; n < x.size(); ++n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < h.size() && i <= n; ++i) acc += h[i] * x[n - i];
    z[n] = acc;
  }
  if (ch.noise_variance > 0.0) {
    auto gen = make_engine(seed);
    std::normal_distribution<double> noise(0.0, std::sqrt(ch.noise_variance));
    for (double& v : z) v += noise(gen);
  }
  return z;
}

double ebn0_to_noise_variance(double ebn0_db, const PamConstellation& c, double code_rate) {
  if (!(code_rate > 0.0) || code_rate > 1.0)
    throw std::invalid_argument("code rate must lie in (0, 1]");
  if (!std::isfinite(ebn0_db)) throw std::invalid_argument("Eb/N0 must be finite");
  const double ebn0 = std::pow(10.0, ebn0_db / 10.0);
  return 1.0 / (2.0 * code_rate * c.bits_per_symbol * ebn0);
}

ObservationFrame extract_frame(const std::vector<double>& z, int n, int n1, int n2) {
  if (n1 < 0 || n2 < 0) throw std::invalid_argument("frame extents must be >= 0");
  if (n < 0 || static_cast<std::size_t>(n) >= z.size())
    throw std::invalid_argument("frame center outside block");
  ObservationFrame f;
  f.n1 = n1;
  f.n2 = n2;
  f.samples.assign(n1 + n2 + 1, 0.0);
  const long q = static_cast<long>(z.size());
  for (int j = 0; j < n1 + n2 + 1; ++j) {
    const long idx = n - n2 + j;
    if (idx >= 0 && idx < q) f.samples[j] = z[idx];
  }
  return f;
}

}  // namespace eqz
