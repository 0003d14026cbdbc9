#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <numbers>
#include <random>
#include <thread>
#include <vector>

#include "dtower/geometry.hpp"

namespace dtower {

struct MCSpec {
  std::uint64_t samples = 1'000'000;
  std::uint64_t seed = 20240917;
  double background_weight = 0.1;  // bubble components share the rest equally
  double bubble_dof = 0.0;         // Student-t degrees of freedom; 0 picks the target's default
  double background_dof = 1.0;
  double background_scale = 0.0;   // 0 picks the ring radius
  double rel_std_err_budget = 0.0; // 0 disables the warning
  std::uint64_t chunk_size = 1u << 14;
  unsigned threads = 0;            // 0 reads DTOWER_THREADS, then hardware concurrency

  void validate() const {
    if (samples < 1000) throw domain_error("mc samples must be at least 1000");
    if (!(background_weight > 0 && background_weight < 1))
      throw domain_error("mixture weights must be positive and sum to 1");
    if (bubble_dof < 0 || !(background_dof > 0)) throw domain_error("degrees of freedom must be positive");
    if (chunk_size < 1) throw domain_error("chunk_size must be positive");
  }
};

struct MCResult {
  double value = 0.0;
  double std_err = 0.0;
  std::uint64_t samples = 0;
  bool budget_exceeded = false;
};

inline unsigned default_threads() {
  if (const char* env = std::getenv("DTOWER_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return unsigned(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Mixture of isotropic multivariate Student-t laws: one per bubble center (scale 1/mu)
// plus a heavy-tailed background centered at the origin.
class MixtureProposal {
 public:
  MixtureProposal(const CenterSet& centers, double mu, double bubble_dof, double bg_weight, double bg_dof,
                  double bg_scale)
      : centers_(centers), N_(centers.N), nu_(bubble_dof), wb_(bg_weight), nub_(bg_dof), sb_(bg_scale) {
    // density (1 + |w|^2)^{-(nu+N)/2} in w = mu (y - x) matches a t-law of scale 1/(mu sqrt(nu))
    sigma_ = 1.0 / (mu * std::sqrt(nu_));
    logc_ = log_t_const(nu_, sigma_);
    logcb_ = log_t_const(nub_, sb_);
    comp_weight_ = (1.0 - wb_) / double(centers_.size()) * std::exp(logc_);
    bg_weight_ = wb_ * std::exp(logcb_);
    if (nu_ == std::floor(nu_) && nu_ + N_ < 64) twice_exp_ = int(nu_) + N_;
  }

  int dim() const { return N_; }
  const CenterSet& centers() const { return centers_; }

  template <class Rng>
  void sample(Rng& rng, double* y) const {
    std::uniform_real_distribution<double> unit;
    std::normal_distribution<double> gauss;
    const bool bg = unit(rng) < wb_;
    const double nu = bg ? nub_ : nu_;
    std::chi_squared_distribution<double> chi(nu);
    const double scale = (bg ? sb_ : sigma_) * std::sqrt(nu / chi(rng));
    if (bg) {
      for (int i = 0; i < N_; ++i) y[i] = scale * gauss(rng);
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, centers_.size() - 1);
      const auto x = centers_[pick(rng)];
      for (int i = 0; i < N_; ++i) y[i] = x[std::size_t(i)] + scale * gauss(rng);
    }
  }

  // Fills squared distances to every center and returns the mixture density at y.
  double density(const double* y, double* d2) const {
    double acc = 0.0;
    const double e = -0.5 * (nu_ + N_);
    const double inv = 1.0 / (nu_ * sigma_ * sigma_);
    for (std::size_t j = 0; j < centers_.size(); ++j) {
      const auto x = centers_[j];
      double s = 0.0;
      for (int i = 0; i < N_; ++i) {
        const double d = y[i] - x[std::size_t(i)];
        s += d * d;
      }
      d2[j] = s;
      acc += twice_exp_ > 0 ? half_integer_power(1.0 / (1.0 + s * inv), twice_exp_) : std::pow(1.0 + s * inv, e);
    }
    double r2 = 0.0;
    for (int i = 0; i < N_; ++i) r2 += y[i] * y[i];
    return comp_weight_ * acc + bg_weight_ * std::pow(1.0 + r2 / (nub_ * sb_ * sb_), -0.5 * (nub_ + N_));
  }

 private:
  double log_t_const(double nu, double sigma) const {
    return std::lgamma(0.5 * (nu + N_)) - std::lgamma(0.5 * nu) - 0.5 * N_ * std::log(nu * std::numbers::pi) -
           N_ * std::log(sigma);
  }

  const CenterSet& centers_;
  int N_;
  double nu_, wb_, nub_, sb_;
  double sigma_ = 1, logc_ = 0, logcb_ = 0, comp_weight_ = 0, bg_weight_ = 0;
  int twice_exp_ = 0;
};

// Unbiased estimate of int f over R^N by importance sampling from `prop`.
// f(y, d2) receives the point and its squared distances to all centers.
// Chunks use independent streams keyed by (seed, chunk index) and are reduced in index order.
template <class F>
MCResult mc_integrate(const MixtureProposal& prop, F&& f, const MCSpec& spec) {
  spec.validate();
  const std::uint64_t n_chunks = (spec.samples + spec.chunk_size - 1) / spec.chunk_size;
  struct Partial {
    double mean = 0, m2 = 0;
    std::uint64_t n = 0;
  };
  std::vector<Partial> parts(n_chunks);
  std::atomic<std::uint64_t> next{0};
  auto worker = [&] {
    const int N = prop.dim();
    std::vector<double> y(static_cast<std::size_t>(N)), d2(prop.centers().size());
    for (;;) {
      const std::uint64_t c = next.fetch_add(1);
      if (c >= n_chunks) break;
      std::mt19937_64 rng(splitmix64(spec.seed ^ splitmix64(c + 0x5bd1e995ull)));
      const std::uint64_t begin = c * spec.chunk_size;
      const std::uint64_t end = std::min(spec.samples, begin + spec.chunk_size);
      Partial p;
      for (std::uint64_t i = begin; i < end; ++i) {
        prop.sample(rng, y.data());
        const double q = prop.density(y.data(), d2.data());
        const double v = f(y.data(), d2.data()) / q;
        ++p.n;
        const double delta = v - p.mean;
        p.mean += delta / double(p.n);
        p.m2 += delta * (v - p.mean);
      }
      parts[c] = p;
    }
  };
  const unsigned nt = std::max(1u, std::min<unsigned>(spec.threads ? spec.threads : default_threads(),
                                                      unsigned(std::min<std::uint64_t>(n_chunks, 1024))));
  if (nt == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  // Chan et al. pairwise merge in chunk order
  Partial total;
  for (const auto& p : parts) {
    if (p.n == 0) continue;
    const double n = double(total.n + p.n);
    const double delta = p.mean - total.mean;
    total.m2 += p.m2 + delta * delta * double(total.n) * double(p.n) / n;
    total.mean += delta * double(p.n) / n;
    total.n += p.n;
  }
  MCResult out;
  out.samples = total.n;
  out.value = total.mean;
  out.std_err = std::sqrt(total.m2 / double(total.n - 1) / double(total.n));
  if (spec.rel_std_err_budget > 0) out.budget_exceeded = out.std_err > spec.rel_std_err_budget * std::abs(out.value);
  return out;
}

}  // namespace dtower
