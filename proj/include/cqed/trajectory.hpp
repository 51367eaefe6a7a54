#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cqed/atom.hpp"
#include "cqed/fock.hpp"
#include "cqed/lindblad.hpp"

namespace cqed {

// Counter-based stream: philox4x32-10.  (seed, stream) fully determines the
// sequence, so trajectories are independent and reproducible regardless of
// execution order.
class PhiloxStream {
  public:
    static constexpr const char* kId = "philox4x32-10";

    PhiloxStream(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next_u64();
    double uniform();                  // in [0, 1)
    double exponential(double rate);   // mean 1/rate

  private:
    void refill();

    std::array<std::uint32_t, 4> counter_;  // low two words: block; high two: stream
    std::array<std::uint32_t, 2> key_;
    std::array<std::uint64_t, 2> buffer_;
    int available_ = 0;
};

// Exact amplitude-damping flow over a finite interval, applied in place.
// Trace-preserving on the truncated space for every (kappa, dt).
class DecayChannel {
  public:
    explicit DecayChannel(FockTruncation t);
    void apply(Eigen::MatrixXcd& rho, double kappa, double dt) const;

  private:
    Eigen::MatrixXd sqrt_binom_;  // (k, n): sqrt of binomial(n + k, k)
    int dim_;
};

struct InitialStateSpec {
    enum class Kind { Vacuum, Steady, Fock, Thermal };
    Kind kind = Kind::Vacuum;
    int fock_n = 0;     // Kind::Fock
    double nbar = 0.0;  // Kind::Thermal
};

// Steady resolves to the Gaussian reconstruction of the closed-form moments.
CavityState make_initial_state(const InitialStateSpec& init, const SystemParams& p,
                               FockTruncation t);

struct TrajectoryConfig {
    SystemParams params;
    FockTruncation trunc{1};
    double t_final = 0.0;
    int n_trajectories = 0;
    std::uint64_t seed = 0;
    std::vector<double> sample_times;  // strictly increasing, within [0, t_final]
    InitialStateSpec initial;
    double leak_tol = 1e-8;

    void validate() const;
    // More than one atom is present at once often enough to distort the
    // model; surfaced as a warning, never an error.
    bool crowded() const { return params.r * params.tau > 0.1; }
};

struct TrajectorySamples {
    std::vector<cxd> field;         // <a> at each sample time
    std::vector<double> number;     // <n>
    std::vector<double> number_sq;  // <n^2>
    Eigen::MatrixXcd final_state;
};

// One realization: exponential inter-arrival gaps of mean 1/r, exact decay
// between arrivals, an instantaneous kick at each arrival.  Samples falling
// on an arrival are taken before the kick.
TrajectorySamples simulate_trajectory(const TrajectoryConfig& cfg, int trajectory_index);

struct SampleStats {
    cxd field_mean;
    double field_re_stderr = 0.0;
    double field_im_stderr = 0.0;
    double number_mean = 0.0;
    double number_stderr = 0.0;
    double number_sq_mean = 0.0;
    double number_sq_stderr = 0.0;
};

struct EnsembleResult {
    std::vector<double> times;
    std::vector<SampleStats> stats;
    CavityState mean_state;  // ensemble mean of the final states
    bool crowded = false;
    std::string rng;
};

// Bit-identical for a fixed (config, seed) regardless of thread count: the
// ensemble is reduced over fixed-size chunks merged in index order.
EnsembleResult ensemble_average(const TrajectoryConfig& cfg, int threads = 1);

}  // namespace cqed
