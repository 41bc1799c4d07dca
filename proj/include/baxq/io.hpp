#pragma once

#include <string>
#include <vector>

#include "baxq/algebra.hpp"
#include "baxq/relations.hpp"

namespace baxq {

void ensure_dir(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

// Plain-text matrix exchange format: a "rows cols" header line, then one
// "re im" pair per entry in row-major order, %.16e.
void write_matrix_text(const std::string& path, const Matrix& m);
Matrix read_matrix_text(const std::string& path);

// Short complex tag for filenames, %.6g parts.
std::string short_complex(Complex z);
// Keeps [A-Za-z0-9._+-], maps everything else to '_'.
std::string sanitize_token(const std::string& s);
// <relation>_L<L>_q<q>_phi<phi>_N<N>.csv
std::string curve_filename(const std::string& relation, const ModelParams& p);

// lambda_re,lambda_im,resid,structure rows, one per grid point.
void write_residual_csv(const std::string& path, const RelationReport& rep);
// j,err_plus,err_minus[,err_zero,zero_ratio] rows.
void write_limit_csv(const std::string& path, const std::vector<LimitRow>& rows,
                     bool with_zero);
// sector,index,re,im rows. member = -1 selects the reference operator,
// member >= 0 the corresponding member operator.
void write_spectrum_csv(const std::string& path, const JointSpectrum& js,
                        int member);
// sector,eigenindex,root_re,root_im,tq_resid rows, one per root.
void write_bethe_csv(const std::string& path, const BetheResult& res);

}  // namespace baxq
