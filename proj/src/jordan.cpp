// Transient-amplification constant zeta(D) of a stable matrix.
//
// The Jordan structure is recovered numerically: eigenvalues from a complex
// Schur form are clustered at relative tolerance 1e-7, the kernel dimensions
// of (D - mu I)^k give the block sizes of each cluster, and Jordan chains are
// built top-down from those kernels. Any rank decision that falls inside the
// ambiguity band, a failed reconstruction, or an ill-conditioned similarity
// switches to the fallback certificate
//
//   zeta_fb = sqrt(p) * sum_{k<p} ||N||_2^k / (1 - rho)^(k+1),
//
// where D = U (Lambda + N) U* is the Schur form, rho the spectral radius and
// N the strictly upper part. It bounds sum_t ||D^t||_{inf->2} because every
// term of (Lambda + N)^t containing p or more factors of N vanishes.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

#include <Eigen/Eigenvalues>

#include "ofulq/errors.hpp"
#include "ofulq/lqmodel.hpp"

namespace ofulq {

namespace {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using cplx = std::complex<double>;

constexpr double kClusterTolerance = 1e-7;
constexpr double kRankZero = 1e-9;      // singular value below this (relative) counts as zero
constexpr double kRankNonzero = 1e-4;   // and above this as nonzero; in between is ambiguous
constexpr double kMaxCondition = 1e10;
constexpr int kGridPoints = 200;
constexpr double kSeriesRelativeTolerance = 1e-12;
constexpr long kMaxSeriesTerms = 100'000'000;

struct Cluster {
  cplx value;
  int multiplicity = 0;
};

std::vector<Cluster> cluster_eigenvalues(const VectorXcd& eigenvalues, double scale) {
  const int n = static_cast<int>(eigenvalues.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) {
      i = parent[i] = parent[parent[i]];
    }
    return i;
  };
  const double tol = kClusterTolerance * std::max(scale, 1e-300);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (std::abs(eigenvalues(i) - eigenvalues(j)) <= tol) {
        parent[find(i)] = find(j);
      }
    }
  }
  std::vector<Cluster> clusters;
  std::vector<int> index_of(n, -1);
  for (int i = 0; i < n; ++i) {
    const int root = find(i);
    if (index_of[root] < 0) {
      index_of[root] = static_cast<int>(clusters.size());
      clusters.push_back({});
    }
    Cluster& c = clusters[index_of[root]];
    c.value += eigenvalues(i);
    c.multiplicity += 1;
  }
  for (auto& c : clusters) {
    c.value /= static_cast<double>(c.multiplicity);
  }
  return clusters;
}

// Orthonormal basis of ker(M), or nullopt when the rank decision is ambiguous.
std::optional<MatrixXcd> kernel_basis(const MatrixXcd& M) {
  const int n = static_cast<int>(M.cols());
  Eigen::JacobiSVD<MatrixXcd> svd(M, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double scale = std::max(1.0, s.size() > 0 ? s(0) : 0.0);
  int rank = 0;
  for (int i = 0; i < s.size(); ++i) {
    if (s(i) > kRankNonzero * scale) {
      ++rank;
    } else if (s(i) > kRankZero * scale) {
      return std::nullopt;
    }
  }
  return svd.matrixV().rightCols(n - rank);
}

// Columns of `candidates` projected off span(`against`), reduced to `count`
// well-separated directions.
std::optional<MatrixXcd> complement_directions(const MatrixXcd& candidates, const MatrixXcd& against,
                                               int count) {
  MatrixXcd projected = candidates;
  if (against.cols() > 0) {
    Eigen::JacobiSVD<MatrixXcd> svd(against, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    int rank = 0;
    for (int i = 0; i < s.size(); ++i) {
      if (s(i) > kRankNonzero * std::max(1.0, s(0))) {
        ++rank;
      }
    }
    const MatrixXcd basis = svd.matrixU().leftCols(rank);
    projected -= basis * (basis.adjoint() * projected);
  }
  Eigen::JacobiSVD<MatrixXcd> svd(projected, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  if (s.size() < count || (count > 0 && s(count - 1) <= kRankNonzero)) {
    return std::nullopt;
  }
  return svd.matrixU().leftCols(count);
}

struct Chain {
  VectorXcd generator;
  int length = 0;
};

struct JordanBasis {
  MatrixXcd vectors;  // D * vectors = vectors * J
  std::vector<JordanBlock> blocks;
};

// Jordan chains of one eigenvalue cluster of D.
std::optional<std::vector<Chain>> cluster_chains(const MatrixXd& D, const Cluster& cluster) {
  const int p = static_cast<int>(D.rows());
  const MatrixXcd N = D.cast<cplx>() - cluster.value * MatrixXcd::Identity(p, p);

  // kernels[k] = ker(N^k), k = 0..index
  std::vector<MatrixXcd> kernels{MatrixXcd(p, 0)};
  MatrixXcd power = MatrixXcd::Identity(p, p);
  while (true) {
    power = (N * power).eval();
    auto kernel = kernel_basis(power);
    if (!kernel) {
      return std::nullopt;
    }
    const auto dim = kernel->cols();
    if (dim <= kernels.back().cols() || dim > cluster.multiplicity) {
      return std::nullopt;
    }
    kernels.push_back(*kernel);
    if (dim == cluster.multiplicity) {
      break;
    }
  }
  const int index = static_cast<int>(kernels.size()) - 1;

  std::vector<Chain> chains;
  for (int k = index; k >= 1; --k) {
    const int longer = static_cast<int>(
        std::count_if(chains.begin(), chains.end(), [k](const Chain& c) { return c.length > k; }));
    const int fresh = static_cast<int>(kernels[k].cols() - kernels[k - 1].cols()) - longer;
    if (fresh < 0) {
      return std::nullopt;
    }
    if (fresh == 0) {
      continue;
    }
    // Level-k vectors already used by longer chains, together with ker(N^{k-1}).
    MatrixXcd against(p, kernels[k - 1].cols() + longer);
    against.leftCols(kernels[k - 1].cols()) = kernels[k - 1];
    int col = static_cast<int>(kernels[k - 1].cols());
    for (const auto& c : chains) {
      if (c.length > k) {
        VectorXcd v = c.generator;
        for (int j = 0; j < c.length - k; ++j) {
          v = N * v;
        }
        against.col(col++) = v;
      }
    }
    auto directions = complement_directions(kernels[k], against, fresh);
    if (!directions) {
      return std::nullopt;
    }
    for (int j = 0; j < fresh; ++j) {
      chains.push_back({directions->col(j), k});
    }
  }
  return chains;
}

std::optional<JordanBasis> jordan_basis(const MatrixXd& D, const std::vector<Cluster>& clusters) {
  const int p = static_cast<int>(D.rows());
  JordanBasis basis;
  basis.vectors.resize(p, p);
  int col = 0;
  for (const auto& cluster : clusters) {
    const MatrixXcd N = D.cast<cplx>() - cluster.value * MatrixXcd::Identity(p, p);
    auto chains = cluster_chains(D, cluster);
    if (!chains) {
      return std::nullopt;
    }
    for (const auto& chain : *chains) {
      if (col + chain.length > p) {
        return std::nullopt;
      }
      // v_1 = N^{m-1} g, ..., v_m = g, scaled so the chain's largest vector has unit norm.
      std::vector<VectorXcd> vs(chain.length);
      vs[chain.length - 1] = chain.generator;
      for (int j = chain.length - 2; j >= 0; --j) {
        vs[j] = N * vs[j + 1];
      }
      double largest = 0.0;
      for (const auto& v : vs) {
        largest = std::max(largest, v.norm());
      }
      for (int j = 0; j < chain.length; ++j) {
        basis.vectors.col(col++) = vs[j] / largest;
      }
      basis.blocks.push_back({cluster.value, chain.length});
    }
  }
  if (col != p) {
    return std::nullopt;
  }
  return basis;
}

double fallback_zeta(const MatrixXd& D, const MatrixXcd& upper, double rho) {
  const int p = static_cast<int>(D.rows());
  MatrixXcd strict = upper.triangularView<Eigen::StrictlyUpper>();
  const double departure = strict.size() > 0 ? Eigen::JacobiSVD<MatrixXcd>(strict).singularValues()(0) : 0.0;
  double total = 0.0;
  double power = 1.0;
  for (int k = 0; k < p; ++k) {
    total += power / std::pow(1.0 - rho, k + 1);
    power *= departure;
  }
  return std::sqrt(static_cast<double>(p)) * total;
}

// Upper bound on sum_{s > t} of the block summand, using the summand evaluated
// at rho = |lambda| (which dominates the inf) and a geometric ratio bound.
double block_tail_bound(double modulus, int size, long t) {
  if (modulus == 0.0) {
    return 0.0;  // all later terms vanish once t >= size - 1
  }
  const double ratio = std::pow(static_cast<double>(t + 2) / static_cast<double>(t + 1), size - 1) * modulus;
  if (ratio >= 1.0) {
    return std::numeric_limits<double>::infinity();
  }
  const double s = static_cast<double>(t + 1);
  double poly = 0.0;
  double factorial = 1.0;
  for (int j = 0; j < size; ++j) {
    if (j > 0) {
      factorial *= j;
    }
    poly += std::pow(modulus, -j) / factorial;
  }
  const double next = std::exp((size - 1) * std::log(s) + s * std::log(modulus)) * poly;
  return next / (1.0 - ratio);
}

struct SeriesResult {
  double sum = 0.0;
  int terms = 0;
};

SeriesResult jordan_series(const std::vector<JordanBlock>& blocks) {
  SeriesResult result{1.0, 1};  // zeta_0 = 1
  for (long t = 1; t < kMaxSeriesTerms; ++t) {
    double term = 0.0;
    for (const auto& b : blocks) {
      term = std::max(term, jordan_block_term(std::abs(b.eigenvalue), b.size, static_cast<int>(t)));
    }
    result.sum += term;
    result.terms = static_cast<int>(t + 1);
    bool past_transient = true;
    double tail = 0.0;
    for (const auto& b : blocks) {
      if (t < b.size - 1) {
        past_transient = false;
        break;
      }
      tail += block_tail_bound(std::abs(b.eigenvalue), b.size, t);
    }
    if (past_transient && tail <= kSeriesRelativeTolerance * result.sum) {
      result.sum += tail;
      return result;
    }
  }
  throw NumericalError("Jordan series did not reach its truncation tolerance");
}

}  // namespace

double jordan_block_term(double modulus, int size, int t) {
  if (t == 0) {
    return 1.0;
  }
  const double lead = std::pow(static_cast<double>(t), size - 1);
  auto objective = [&](double rho) {
    double sum = 0.0;
    double factorial = 1.0;
    for (int j = 0; j < size; ++j) {
      if (j > 0) {
        factorial *= j;
      }
      sum += std::pow(rho, t - j) / factorial;
    }
    return lead * sum;
  };
  if (t >= size - 1) {
    // Every exponent t - j is nonnegative, so the objective increases in rho.
    return objective(modulus);
  }
  const double lower = std::max(modulus, 1e-8);
  double best = modulus > 0.0 ? objective(modulus) : std::numeric_limits<double>::infinity();
  const double log_span = -std::log(lower);
  for (int k = 0; k < kGridPoints; ++k) {
    const double rho = lower * std::exp(log_span * k / kGridPoints);
    best = std::min(best, objective(rho));
  }
  return best;
}

JordanData jordan_constant(const MatrixXd& D) {
  if (D.rows() == 0 || D.rows() != D.cols()) {
    throw DimensionError("jordan_constant needs a non-empty square matrix");
  }
  require_finite(D, "D");
  const int p = static_cast<int>(D.rows());

  Eigen::ComplexSchur<MatrixXcd> schur(D.cast<cplx>());
  if (schur.info() != Eigen::Success) {
    throw NumericalError("Schur decomposition did not converge");
  }
  const VectorXcd eigenvalues = schur.matrixT().diagonal();
  const double rho = eigenvalues.cwiseAbs().maxCoeff();
  if (rho >= 1.0) {
    throw InstabilityError("jordan_constant requires spectral radius < 1 (got " + std::to_string(rho) + ")");
  }

  JordanData data;
  const auto clusters = cluster_eigenvalues(eigenvalues, std::max(1.0, operator_norm(D)));
  auto basis = jordan_basis(D, clusters);
  if (basis) {
    Eigen::FullPivLU<MatrixXcd> lu(basis->vectors);
    bool ok = lu.isInvertible();
    if (ok) {
      const MatrixXcd similarity = lu.inverse();
      MatrixXcd lambda = MatrixXcd::Zero(p, p);
      int offset = 0;
      for (const auto& b : basis->blocks) {
        for (int j = 0; j < b.size; ++j) {
          lambda(offset + j, offset + j) = b.eigenvalue;
          if (j + 1 < b.size) {
            lambda(offset + j, offset + j + 1) = 1.0;
          }
        }
        offset += b.size;
      }
      const double reconstruction = (basis->vectors * lambda * similarity - D.cast<cplx>()).norm();
      const double condition = inf_norm(basis->vectors) * inf_norm(similarity);
      ok = reconstruction <= 1e-6 * std::max(1.0, D.norm()) && condition <= kMaxCondition;
      if (ok) {
        data.similarity = similarity;
        data.blocks = basis->blocks;
        data.inverse_inf_to_two = inf_to_two_norm_bound(basis->vectors);
        data.similarity_inf = inf_norm(similarity);
        const auto series = jordan_series(data.blocks);
        data.series_sum = series.sum;
        data.series_terms = series.terms;
        data.zeta = data.inverse_inf_to_two * data.similarity_inf * data.series_sum;
        return data;
      }
    }
  }

  data.fallback = true;
  data.similarity = schur.matrixU().adjoint();
  data.blocks.clear();
  for (int i = 0; i < p; ++i) {
    data.blocks.push_back({eigenvalues(i), 1});
  }
  data.inverse_inf_to_two = std::sqrt(static_cast<double>(p));
  data.similarity_inf = inf_norm(data.similarity);
  data.series_sum = 0.0;
  data.series_terms = 0;
  data.zeta = fallback_zeta(D, schur.matrixT(), rho);
  return data;
}

}  // namespace ofulq
