#include "oqho/io.hpp"

#include <Eigen/Eigenvalues>
#include <array>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace oqho::io {

std::string format_double(double x) {
  std::array<char, 64> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

// ---------------------------------------------------------------------------
// SHA-256 (FIPS 180-4), enough for provenance hashes

namespace {

constexpr std::array<std::uint32_t, 64> k256 = {
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
    0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
    0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
    0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
    0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
    0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
    0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
    0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
    0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
    0xc67178f2};

inline std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  std::array<std::uint32_t, 8> h = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                                    0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
  std::string msg = bytes;
  const std::uint64_t bitlen = static_cast<std::uint64_t>(bytes.size()) * 8;
  msg.push_back(static_cast<char>(0x80));
  while (msg.size() % 64 != 56) msg.push_back('\0');
  for (int i = 7; i >= 0; --i) msg.push_back(static_cast<char>((bitlen >> (8 * i)) & 0xff));

  std::array<std::uint32_t, 64> w;
  for (std::size_t off = 0; off < msg.size(); off += 64) {
    for (int i = 0; i < 16; ++i)
      w[i] = (static_cast<std::uint32_t>(static_cast<unsigned char>(msg[off + 4 * i])) << 24) |
             (static_cast<std::uint32_t>(static_cast<unsigned char>(msg[off + 4 * i + 1])) << 16) |
             (static_cast<std::uint32_t>(static_cast<unsigned char>(msg[off + 4 * i + 2])) << 8) |
             static_cast<std::uint32_t>(static_cast<unsigned char>(msg[off + 4 * i + 3]));
    for (int i = 16; i < 64; ++i) {
      const std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
      const std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
      w[i] = w[i - 16] + s0 + w[i - 7] + s1;
    }
    auto [a, b, c, d, e, f, g, hh] = h;
    for (int i = 0; i < 64; ++i) {
      const std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
      const std::uint32_t ch = (e & f) ^ (~e & g);
      const std::uint32_t t1 = hh + s1 + ch + k256[i] + w[i];
      const std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
      const std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
      const std::uint32_t t2 = s0 + maj;
      hh = g; g = f; f = e; e = d + t1;
      d = c; c = b; b = a; a = t1 + t2;
    }
    h = {h[0] + a, h[1] + b, h[2] + c, h[3] + d, h[4] + e, h[5] + f, h[6] + g, h[7] + hh};
  }
  std::string out;
  out.reserve(64);
  for (std::uint32_t word : h) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", word);
    out += buf;
  }
  return out;
}

std::string provenance::line() const {
  return "config_sha256=" + config_hash + " seed=" + std::to_string(seed) +
         " version=" + version;
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw error("atomic_write: cannot open " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw error("atomic_write: short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string matrix_csv(const Mat& m, const provenance& prov, const std::string& label) {
  std::ostringstream out;
  out << "# oqho " << label << " | " << prov.line() << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
  return out.str();
}

std::string spectrum_csv(const Mat& a, const provenance& prov) {
  Eigen::EigenSolver<Mat> es(a, false);
  std::ostringstream out;
  out << "# oqho spectrum | " << prov.line() << "\n";
  out << "re,im\n";
  // sorted for stable output: by real part, then imaginary
  std::vector<cplx> eigs(es.eigenvalues().data(),
                         es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(eigs.begin(), eigs.end(), [](cplx x, cplx y) {
    return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
  });
  for (const cplx& ev : eigs)
    out << format_double(ev.real()) << ',' << format_double(ev.imag()) << '\n';
  return out.str();
}

std::string field_csv(const spectral::correction_field& field, const provenance& prov) {
  std::ostringstream out;
  const bool qcf = field.kind == spectral::correction_field::field_kind::qcf;
  out << "# oqho field kind=" << (qcf ? "qcf" : "qpdf") << " | " << prov.line() << "\n";
  out << "# axes:";
  for (const auto& ax : field.axes)
    out << " count=" << ax.count << " spacing=" << format_double(ax.spacing);
  out << "\n";
  for (int k = 0; k < field.dims(); ++k) out << (qcf ? "u" : "x") << k + 1 << ',';
  out << (qcf ? "re,im" : "value") << '\n';
  const std::size_t total = field.size();
  for (std::size_t f = 0; f < total; ++f) {
    const Vec x = field.coords(f);
    for (Eigen::Index k = 0; k < x.size(); ++k) out << format_double(x[k]) << ',';
    if (qcf)
      out << format_double(field.cvalues[f].real()) << ','
          << format_double(field.cvalues[f].imag()) << '\n';
    else
      out << format_double(field.rvalues[f]) << '\n';
  }
  return out.str();
}

namespace {

template <typename T>
void put_le(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));  // little-endian host
}

template <typename T>
T get_le(const std::string& in, std::size_t& off) {
  if (off + sizeof(T) > in.size()) throw error("field binary: truncated");
  T value;
  std::memcpy(&value, in.data() + off, sizeof(T));
  off += sizeof(T);
  return value;
}

}  // namespace

std::string field_binary(const spectral::correction_field& field, const provenance& prov) {
  std::string out;
  out += "OQHOFLD1";
  const bool qcf = field.kind == spectral::correction_field::field_kind::qcf;
  put_le<std::uint32_t>(out, qcf ? 0u : 1u);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(field.dims()));
  for (const auto& ax : field.axes) {
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(ax.count));
    put_le<double>(out, 0.0);  // center
    put_le<double>(out, ax.spacing);
  }
  const std::string prov_line = prov.line();
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(prov_line.size()));
  out += prov_line;
  if (qcf) {
    for (const cplx& v : field.cvalues) {
      put_le<double>(out, v.real());
      put_le<double>(out, v.imag());
    }
  } else {
    for (double v : field.rvalues) put_le<double>(out, v);
  }
  return out;
}

spectral::correction_field read_field_binary(const std::string& bytes) {
  if (bytes.size() < 8 || bytes.compare(0, 8, "OQHOFLD1") != 0)
    throw error("field binary: bad magic");
  std::size_t off = 8;
  spectral::correction_field field;
  const auto kind = get_le<std::uint32_t>(bytes, off);
  field.kind = kind == 0 ? spectral::correction_field::field_kind::qcf
                         : spectral::correction_field::field_kind::qpdf;
  const auto ndim = get_le<std::uint32_t>(bytes, off);
  field.axes.resize(ndim);
  for (auto& ax : field.axes) {
    ax.count = static_cast<int>(get_le<std::uint64_t>(bytes, off));
    (void)get_le<double>(bytes, off);  // center
    ax.spacing = get_le<double>(bytes, off);
  }
  const auto prov_len = get_le<std::uint32_t>(bytes, off);
  off += prov_len;
  const std::size_t total = field.size();
  if (kind == 0) {
    field.cvalues.resize(total);
    for (auto& v : field.cvalues) {
      const double re = get_le<double>(bytes, off);
      const double im = get_le<double>(bytes, off);
      v = cplx(re, im);
    }
  } else {
    field.rvalues.resize(total);
    for (auto& v : field.rvalues) v = get_le<double>(bytes, off);
  }
  return field;
}

std::string report_text(const bounds::sensitivity_report& rep, int n, const provenance& prov) {
  std::ostringstream out;
  out << "oqho_sensitivity_report:\n";
  out << "  provenance: " << prov.line() << "\n";
  out << "  lambda: " << format_double(rep.lambda) << "\n";
  out << "  tau: " << format_double(rep.tau) << "\n";
  out << "  seed: " << rep.seed << "\n";
  out << "  stream: " << rep.stream << "\n";
  out << "  sample_count: " << rep.sample_count << "\n";
  out << "  theta_entries:\n";
  for (const auto& e : rep.entries) {
    out << "    - theta: " << format_double(e.theta) << "\n";
    out << "      mean_sensitivity: " << format_double(e.mean_sensitivity) << "\n";
    out << "      mc_norm_F: " << format_double(e.mc_norm_f.value) << "\n";
    out << "      mc_norm_F_stderr: " << format_double(e.mc_norm_f.std_error) << "\n";
    out << "      mc_norm_G: " << format_double(e.mc_norm_g.value) << "\n";
    out << "      mc_norm_G_stderr: " << format_double(e.mc_norm_g.std_error) << "\n";
    out << "      divergence_warning: " << (e.divergence_warning ? "true" : "false") << "\n";
    out << "      psi_norm: " << format_double(e.psi_norm) << "\n";
    out << "      upsilon_norm: " << format_double(e.upsilon_norm) << "\n";
    out << "      strength_norm_divergent: " << (e.strength_norm_divergent ? "true" : "false")
        << "\n";
    out << "      hs_bound_qcf: " << format_double(e.hs_bound) << "\n";
    out << "      hs_bound_qpdf: " << format_double(e.hs_bound_qpdf) << "\n";
  }
  out << "  qpdf_scaling: (2*pi)^(-" << n << "/2)\n";
  return out.str();
}

std::string gaussian_state_json(const Vec& mu, const Mat& sigma, const provenance& prov) {
  nlohmann::json j;
  j["provenance"] = prov.line();
  j["mu"] = std::vector<double>(mu.data(), mu.data() + mu.size());
  std::vector<std::vector<double>> rows;
  for (Eigen::Index i = 0; i < sigma.rows(); ++i)
    rows.emplace_back(sigma.row(i).begin(), sigma.row(i).end());
  j["sigma"] = rows;
  return j.dump(2) + "\n";
}

}  // namespace oqho::io
