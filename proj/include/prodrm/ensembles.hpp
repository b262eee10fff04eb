#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace prodrm {

enum class Model { A, B, C, D };

std::string to_string(Model m);
Model model_from_string(const std::string& s);

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

struct EnsembleSpec {
  Model model = Model::A;
  int N = 1;
  int M = 1;
  int L = 0;
  std::uint64_t seed = 0;
  std::uint64_t replica_index = 0;

  void validate() const;
};

// One independent Mersenne stream per (seed, replica); complex normals have
// E|x|^2 = 1.
class ReplicaStream {
 public:
  ReplicaStream(std::uint64_t seed, std::uint64_t replica_index);
  explicit ReplicaStream(const EnsembleSpec& spec)
      : ReplicaStream(spec.seed, spec.replica_index) {}
  cplx complex_normal();
  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
  std::normal_distribution<double> normal_;
};

struct ScaledProduct {
  ComplexMatrix matrix;
  double log_scale = 0.0;
};

struct SpectrumSample {
  std::vector<double> eigen_log_moduli;  // descending
  std::vector<double> eigen_phases;      // (-pi, pi]
  std::size_t size() const { return eigen_log_moduli.size(); }
};

// Factors in application order: X_1..X_M (signature +1), then
// Y_L^{-1}, ..., Y_1^{-1} (signature -1), so the product is
// F_{p-1} ... F_1 F_0.
struct FactorChain {
  std::vector<ComplexMatrix> factors;
  std::vector<int> signature;
  int n = 0;
  int resamples = 0;
};

ComplexMatrix sample_ginibre(int n, ReplicaStream& rng);
ComplexMatrix sample_haar_truncation(int n, int l, ReplicaStream& rng);

FactorChain sample_factors(const EnsembleSpec& spec, ReplicaStream& rng);
ScaledProduct scaled_product(const FactorChain& chain);
ScaledProduct sample_product(const EnsembleSpec& spec, ReplicaStream& rng);

enum class EigenMethod { Auto, Direct, Periodic };

SpectrumSample eigenvalues(const ScaledProduct& sp);
SpectrumSample eigenvalues(const FactorChain& chain, EigenMethod method = EigenMethod::Auto);
EigenMethod auto_method(const EnsembleSpec& spec);

// Draws the factors for spec from its own replica stream.
SpectrumSample sample_spectrum(const EnsembleSpec& spec, EigenMethod method = EigenMethod::Auto);

std::vector<double> lyapunov_spectrum_qr(const FactorChain& chain);
std::vector<double> lyapunov_spectrum_qr(const EnsembleSpec& spec, ReplicaStream& rng);

std::vector<double> stability_exponents(const SpectrumSample& sample, int M);

// Eigenvalues of F_{p-1}^{s_{p-1}} ... F_0^{s_0} without forming the product.
// Returns (log|lambda|, arg lambda) pairs, unsorted.
std::vector<std::pair<double, double>> periodic_eigenvalues(std::vector<ComplexMatrix> factors,
                                                            const std::vector<int>& signature);

}  // namespace prodrm
