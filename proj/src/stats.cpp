#include "ofulq/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "ofulq/errors.hpp"

namespace ofulq {

double mean(const std::vector<double>& xs) {
  if (xs.empty()) {
    throw ArgumentError("mean of an empty sample");
  }
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_variance(const std::vector<double>& xs) {
  if (xs.size() < 2) {
    throw ArgumentError("sample variance needs at least two values");
  }
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) {
    ss += (x - m) * (x - m);
  }
  return ss / static_cast<double>(xs.size() - 1);
}

double median(std::vector<double> xs) {
  if (xs.empty()) {
    throw ArgumentError("median of an empty sample");
  }
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) {
    return 1.0;
  }
  if (lambda < 0.2) {
    return 1.0;  // the series is numerically 1 here
  }
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 1.0 : -1.0) * term;
    if (term < 1e-17) {
      break;
    }
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test_normal(std::vector<double> xs, double mu, double sigma) {
  if (xs.empty() || !(sigma > 0.0)) {
    throw ArgumentError("KS test needs data and a positive sigma");
  }
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double F = normal_cdf((xs[i] - mu) / sigma);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - F, F - static_cast<double>(i) / n});
  }
  const double root = std::sqrt(n);
  return {d, kolmogorov_survival((root + 0.12 + 0.11 / root) * d)};
}

LineFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ArgumentError("line fit needs two or more paired points");
  }
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) {
    throw ArgumentError("line fit needs distinct abscissae");
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

void parallel_for(long count, int threads, const std::function<void(long)>& body) {
  if (count <= 0) {
    return;
  }
  const int workers = static_cast<int>(std::min<long>(std::max(threads, 1), count));
  if (workers == 1) {
    for (long k = 0; k < count; ++k) {
      body(k);
    }
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    while (true) {
      const long k = next.fetch_add(1);
      if (k >= count) {
        return;
      }
      try {
        body(k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) {
          failure = std::current_exception();
        }
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back(work);
  }
  for (auto& th : pool) {
    th.join();
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
}

}  // namespace ofulq
