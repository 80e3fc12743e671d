#pragma once

// Deterministic text artifacts: %.17g numbers, atomic file replacement.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unistd.h>
#include <utility>
#include <variant>
#include <vector>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "errors.hpp"
#include "fem_assembly.hpp"
#include "resolvent.hpp"
#include "semianalytic.hpp"
#include "spectrum.hpp"
#include "timestepper.hpp"

namespace ebgevrey::io {

inline std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", x);
}

/// Writes `content` to a sibling temporary file and renames it over `path`.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  const std::filesystem::path tmp = path.string() + fmt::format(".tmp{}", static_cast<long>(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::io_error, "write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::io_error, "cannot move output into place: " + path.string());
  }
}

/// Hex SHA-256 of a byte string.
inline std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::io_error, "SHA-256 digest failed");
  std::string out;
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", md[i]);
  return out;
}

// ---------------------------------------------------------------------------
// CSV

inline const char* kSpectrumHeader = "re_lambda,im_lambda,residual,certified";
inline const char* kRootsHeader = "re_lambda,im_lambda,abs_det,iterations";
inline const char* kScanHeader = "lambda,norm,scaled_norm,mesh_n,converged";
inline const char* kTrajectoryHeader = "t,energy,balance_residual";

inline std::string spectrum_csv(const EigenResult& r, const std::vector<std::optional<double>>& discrepancy = {}) {
  std::string out = kSpectrumHeader;
  const bool extra = !discrepancy.empty();
  if (extra) out += ",discrepancy";
  out += '\n';
  for (std::size_t i = 0; i < r.size(); ++i) {
    out += fmt::format("{},{},{},{}", num(r.eigenvalues[i].real()), num(r.eigenvalues[i].imag()), num(r.residuals[i]),
                       r.certified[i] ? 1 : 0);
    if (extra) out += "," + (i < discrepancy.size() && discrepancy[i] ? num(*discrepancy[i]) : std::string());
    out += '\n';
  }
  return out;
}

inline std::string roots_csv(const std::vector<RefinedRoot>& roots) {
  std::string out = std::string(kRootsHeader) + '\n';
  for (const auto& r : roots)
    out += fmt::format("{},{},{},{}\n", num(r.lambda.real()), num(r.lambda.imag()), num(r.abs_det), r.iterations);
  return out;
}

inline std::string scan_csv(const ResolventScan& s) {
  std::string out = std::string(kScanHeader) + '\n';
  for (std::size_t i = 0; i < s.size(); ++i)
    out += fmt::format("{},{},{},{},{}\n", num(s.lambdas[i]), num(s.norms[i]), num(s.scaled[i]), s.mesh_n[i],
                       s.converged[i] ? 1 : 0);
  return out;
}

inline std::string trajectory_csv(const Trajectory& t, std::size_t stride = 1) {
  std::string out = std::string(kTrajectoryHeader) + '\n';
  stride = std::max<std::size_t>(stride, 1);
  for (std::size_t k = 0; k < t.size(); ++k)
    if (k % stride == 0 || k + 1 == t.size())
      out += fmt::format("{},{},{}\n", num(t.times[k]), num(t.energies[k]), num(t.balance[k]));
  return out;
}

/// Coordinate triplets "row col value", 0-based, one nonzero per line.
inline std::string triplets(const SparseMatrix& a) {
  std::string out;
  for (int j = 0; j < a.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(a, j); it; ++it)
      out += fmt::format("{} {} {}\n", it.row(), it.col(), num(it.value()));
  return out;
}

// ---------------------------------------------------------------------------
// JSON. Numbers are emitted with %.17g, which rules out the library
// serializers; the structures involved are shallow.

class Json {
 public:
  using Member = std::pair<std::string, Json>;

  Json() : text_("null") {}
  Json(double x) : text_(std::isfinite(x) ? num(x) : "null") {}
  Json(int x) : text_(std::to_string(x)) {}
  Json(long x) : text_(std::to_string(x)) {}
  Json(std::size_t x) : text_(std::to_string(x)) {}
  Json(bool b) : text_(b ? "true" : "false") {}
  Json(const char* s) : text_(quote(s)) {}
  Json(const std::string& s) : text_(quote(s)) {}

  static Json object(const std::vector<Member>& members) {
    Json j;
    j.text_ = "{";
    for (std::size_t i = 0; i < members.size(); ++i)
      j.text_ += (i ? ", " : "") + quote(members[i].first) + ": " + members[i].second.text_;
    j.text_ += "}";
    return j;
  }

  static Json array(const std::vector<Json>& items) {
    Json j;
    j.text_ = "[";
    for (std::size_t i = 0; i < items.size(); ++i) j.text_ += (i ? ",\n  " : "\n  ") + items[i].text_;
    j.text_ += items.empty() ? "]" : "\n]";
    return j;
  }

  const std::string& str() const { return text_; }

  static std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char ch : s) {
      switch (ch) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        default:
          if (static_cast<unsigned char>(ch) < 0x20) out += fmt::format("\\u{:04x}", static_cast<int>(ch));
          else out += ch;
      }
    }
    return out + "\"";
  }

 private:
  std::string text_;
};

inline Json classification_json(const GevreyReport& r) {
  return Json::object({{"gevrey4_consistent", r.gevrey4_consistent},
                       {"analytic_excluded", r.analytic_excluded},
                       {"gevrey2_excluded", r.gevrey2_excluded},
                       {"bound_constant", r.bound_constant},
                       {"fitted_slope", r.fitted_slope},
                       {"max_in_first_decade", r.max_in_first_decade},
                       {"bounded_ratio", r.bounded_ratio},
                       {"growth_analytic", r.growth_analytic},
                       {"growth_gevrey2", r.growth_gevrey2},
                       {"converged_decades", r.converged_decades}});
}

inline Json decay_json(double rate, double stderr_rate, double abscissa_ref) {
  return Json::object({{"rate", rate},
                       {"stderr", stderr_rate},
                       {"abscissa_ref", abscissa_ref},
                       {"ratio", rate / (2.0 * std::abs(abscissa_ref))}});
}

}  // namespace ebgevrey::io
