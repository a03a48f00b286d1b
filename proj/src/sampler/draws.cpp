#include "svypost/sampler/draws.hpp"

#include <fstream>

#include "svypost/core/error.hpp"
#include "svypost/core/table.hpp"

namespace svypost {

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& values) {
  if (values.rows() < 2) {
    throw Error(ErrorKind::kInsufficientDraws, "covariance needs at least two draws");
  }
  const Eigen::MatrixXd centered = values.rowwise() - values.colwise().mean();
  return (centered.transpose() * centered) / static_cast<double>(values.rows() - 1);
}

Eigen::MatrixXd DrawsMatrix::covariance() const { return sample_covariance(values); }

void write_draws_csv(const std::string& path, const Eigen::MatrixXd& values,
                     const std::vector<std::string>& names, const std::vector<int>& chain_id) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kData, "cannot write '" + path + "'");
  out << "draw,chain";
  for (const auto& n : names) out << ',' << csv_escape(n);
  out << '\n';
  for (Eigen::Index m = 0; m < values.rows(); ++m) {
    out << (m + 1) << ',' << (static_cast<std::size_t>(m) < chain_id.size() ? chain_id[m] : 1);
    for (Eigen::Index j = 0; j < values.cols(); ++j) out << ',' << format_double(values(m, j));
    out << '\n';
  }
}

}  // namespace svypost
