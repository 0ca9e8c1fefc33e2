#include "bohmchsh/state_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "bohmchsh/errors.hpp"

namespace bohmchsh {
namespace {

static_assert(std::endian::native == std::endian::little, "state files are written in host (little-endian) order");

constexpr std::array<char, 8> kMagic{'B', 'C', 'H', 'S', 'H', 'W', 'F', '1'};

template <class T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) throw InvalidArgument("truncated state file");
  return value;
}

}  // namespace

void write_state(std::ostream& out, const WaveFunction2D& psi) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint64_t>(out, psi.nx());
  put<std::uint64_t>(out, psi.ny());
  put(out, psi.grid_x().x_min);
  put(out, psi.grid_y().x_min);
  put(out, psi.grid_x().dx);
  put(out, psi.grid_y().dx);
  for (const auto& a : psi.amplitudes()) {
    put(out, a.real());
    put(out, a.imag());
  }
  if (!out) throw Error("failed writing state file");
}

WaveFunction2D read_state(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw InvalidArgument("not a state file (bad magic)");
  Grid1D gx;
  Grid1D gy;
  gx.n = get<std::uint64_t>(in);
  gy.n = get<std::uint64_t>(in);
  gx.x_min = get<double>(in);
  gy.x_min = get<double>(in);
  gx.dx = get<double>(in);
  gy.dx = get<double>(in);
  gx.validate();
  gy.validate();
  std::vector<complex> amplitudes(gx.n * gy.n);
  for (auto& a : amplitudes) {
    const double re = get<double>(in);
    a = complex(re, get<double>(in));
  }
  return WaveFunction2D(gx, gy, std::move(amplitudes));
}

void save_state(const std::filesystem::path& path, const WaveFunction2D& psi) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open " + path.string() + " for writing");
  write_state(out, psi);
}

WaveFunction2D load_state(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open state file " + path.string());
  return read_state(in);
}

void write_density_csv(std::ostream& out, const WaveFunction2D& psi) {
  out << "x,y,density\n";
  const auto precision = out.precision(17);
  for (std::size_t ix = 0; ix < psi.nx(); ++ix) {
    for (std::size_t iy = 0; iy < psi.ny(); ++iy) {
      out << psi.grid_x().point(ix) << ',' << psi.grid_y().point(iy) << ',' << std::norm(psi(ix, iy)) << '\n';
    }
  }
  out.precision(precision);
}

}  // namespace bohmchsh
