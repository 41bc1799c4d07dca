#include "baxq/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace baxq {

void ensure_dir(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw ModelError("cannot create directory " + path + ": " + ec.message());
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ModelError("cannot open for writing: " + path);
  f << text;
  if (!f) throw ModelError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ModelError("cannot open: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_matrix_text(const std::string& path, const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << " " << m.cols() << "\n";
  char buf[80];
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.16e %.16e\n", m(r, c).real(),
                    m(r, c).imag());
      os << buf;
    }
  }
  write_text_file(path, os.str());
}

Matrix read_matrix_text(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ModelError("cannot open: " + path);
  Eigen::Index rows = 0, cols = 0;
  if (!(f >> rows >> cols) || rows < 0 || cols < 0)
    throw ModelError("bad matrix header in " + path);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double re = 0.0, im = 0.0;
      if (!(f >> re >> im)) throw ModelError("truncated matrix data in " + path);
      m(r, c) = Complex(re, im);
    }
  return m;
}

std::string short_complex(Complex z) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g%+.6gi", z.real(), z.imag());
  return buf;
}

std::string sanitize_token(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '.' || c == '_' ||
                    c == '+' || c == '-';
    out += ok ? c : '_';
  }
  return out;
}

std::string curve_filename(const std::string& relation, const ModelParams& p) {
  char tail[96];
  std::snprintf(tail, sizeof tail, "_L%d_q%s_phi%.6g_N%d.csv", p.L,
                short_complex(p.q).c_str(), p.phi, p.trunc_N);
  return sanitize_token(relation + tail);
}

namespace {
std::string csv_num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}
}  // namespace

void write_residual_csv(const std::string& path, const RelationReport& rep) {
  std::ostringstream os;
  os << "lambda_re,lambda_im,resid,structure\n";
  for (const LambdaResult& pt : rep.points) {
    os << csv_num(pt.lambda.real()) << "," << csv_num(pt.lambda.imag()) << ","
       << csv_num(pt.resid) << "," << csv_num(pt.structure_err) << "\n";
  }
  write_text_file(path, os.str());
}

void write_limit_csv(const std::string& path, const std::vector<LimitRow>& rows,
                     bool with_zero) {
  std::ostringstream os;
  os << "j,err_plus,err_minus";
  if (with_zero) os << ",err_zero,zero_ratio";
  os << "\n";
  for (const LimitRow& r : rows) {
    os << csv_num(r.j) << "," << csv_num(r.err_plus) << ","
       << csv_num(r.err_minus);
    if (with_zero) os << "," << csv_num(r.err_zero) << "," << csv_num(r.zero_ratio);
    os << "\n";
  }
  write_text_file(path, os.str());
}

void write_spectrum_csv(const std::string& path, const JointSpectrum& js,
                        int member) {
  std::ostringstream os;
  os << "sector,index,re,im\n";
  for (const SectorSpectrum& sec : js.sectors) {
    const std::vector<Complex>& eigs =
        member < 0 ? sec.reference_eigs : sec.member_eigs.at(member);
    for (size_t i = 0; i < eigs.size(); ++i) {
      os << sec.S << "," << i << "," << csv_num(eigs[i].real()) << ","
         << csv_num(eigs[i].imag()) << "\n";
    }
  }
  write_text_file(path, os.str());
}

void write_bethe_csv(const std::string& path, const BetheResult& res) {
  std::ostringstream os;
  os << "sector,eigenindex,root_re,root_im,tq_resid\n";
  for (const BetheSector& e : res.entries) {
    for (size_t i = 0; i < e.roots.size(); ++i) {
      os << e.S << "," << e.eigenindex << "," << csv_num(e.roots[i].real())
         << "," << csv_num(e.roots[i].imag()) << ","
         << csv_num(i < e.tq_resid.size() ? e.tq_resid[i] : 0.0) << "\n";
    }
  }
  write_text_file(path, os.str());
}

}  // namespace baxq
