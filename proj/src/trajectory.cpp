#include "cqed/trajectory.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <thread>
#include <utility>

#include "cqed/errors.hpp"
#include "cqed/gaussian.hpp"
#include "cqed/moments.hpp"

namespace cqed {

namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace

PhiloxStream::PhiloxStream(std::uint64_t seed, std::uint64_t stream) {
    key_ = {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    counter_ = {0u, 0u, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    buffer_ = {0u, 0u};
}

void PhiloxStream::refill() {
    std::array<std::uint32_t, 4> x = counter_;
    std::array<std::uint32_t, 2> k = key_;
    for (int round = 0; round < 10; ++round) {
        if (round) {
            k[0] += 0x9E3779B9u;
            k[1] += 0xBB67AE85u;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(0xD2511F53u, x[0], hi0, lo0);
        mulhilo(0xCD9E8D57u, x[2], hi1, lo1);
        x = {hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0};
    }
    buffer_[0] = (static_cast<std::uint64_t>(x[0]) << 32) | x[1];
    buffer_[1] = (static_cast<std::uint64_t>(x[2]) << 32) | x[3];
    available_ = 2;
    if (++counter_[0] == 0) ++counter_[1];
}

std::uint64_t PhiloxStream::next_u64() {
    if (available_ == 0) refill();
    return buffer_[2 - available_--];
}

double PhiloxStream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double PhiloxStream::exponential(double rate) {
    if (!(rate > 0.0)) throw InvalidState("exponential gaps need a positive rate");
    return -std::log1p(-uniform()) / rate;
}

DecayChannel::DecayChannel(FockTruncation t) : dim_(t.dim()) {
    t.validate();
    sqrt_binom_ = Eigen::MatrixXd::Zero(dim_, dim_);
    for (int n = 0; n < dim_; ++n) {
        double b = 1.0;  // binomial(n + k, k), built up in k
        sqrt_binom_(0, n) = 1.0;
        for (int k = 1; n + k < dim_; ++k) {
            b *= static_cast<double>(n + k) / k;
            sqrt_binom_(k, n) = std::sqrt(b);
        }
    }
}

void DecayChannel::apply(Eigen::MatrixXcd& rho, double kappa, double dt) const {
    if (rho.rows() != dim_ || rho.cols() != dim_)
        throw DimensionMismatch("decay channel built for dimension " + std::to_string(dim_));
    if (!(kappa >= 0.0) || !(dt >= 0.0)) throw InvalidState("decay needs kappa >= 0 and dt >= 0");
    const double eta = std::exp(-kappa * dt);
    if (eta == 1.0) return;

    const double s = std::sqrt(eta);
    const double u = std::sqrt(1.0 - eta);
    Eigen::VectorXd spow(dim_), upow(dim_);
    spow(0) = 1.0;
    upow(0) = 1.0;
    for (int n = 1; n < dim_; ++n) {
        spow(n) = spow(n - 1) * s;
        upow(n) = upow(n - 1) * u;
    }

    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim_, dim_);
    for (int n = 0; n < dim_; ++n) {
        for (int m = 0; m <= n; ++m) {
            cxd acc = 0.0;
            for (int k = 0; n + k < dim_; ++k) {
                const double w = sqrt_binom_(k, n) * sqrt_binom_(k, m) * spow(n) * spow(m) * upow(k) * upow(k);
                acc += w * rho(n + k, m + k);
            }
            out(n, m) = acc;
            if (m != n) out(m, n) = std::conj(acc);
        }
    }
    rho = std::move(out);
}

CavityState make_initial_state(const InitialStateSpec& init, const SystemParams& p,
                               FockTruncation t) {
    switch (init.kind) {
        case InitialStateSpec::Kind::Vacuum:
            return vacuum_state(t);
        case InitialStateSpec::Kind::Fock:
            return fock_state(t, init.fock_n);
        case InitialStateSpec::Kind::Thermal: {
            CavityState st = thermal_state(t, init.nbar);
            const int d = t.dim();
            const double top = std::real(st.matrix()(d - 1, d - 1));
            if (top > 1e-8)
                throw TruncationTooSmall("thermal tail " + fmt(top) + " at level " +
                                         std::to_string(d - 1) + " exceeds 1e-08");
            return st;
        }
        case InitialStateSpec::Kind::Steady:
            p.require_stable();
            return build_state(t, reconstruct(steady_moments(p)));
    }
    throw InvalidState("unknown initial state kind");
}

void TrajectoryConfig::validate() const {
    params.validate();
    trunc.validate();
    if (!std::isfinite(t_final) || t_final < 0.0)
        throw InvalidState("t_final must be finite and non-negative");
    if (n_trajectories < 1) throw InvalidState("need at least one trajectory");
    if (!(leak_tol > 0.0)) throw InvalidState("leak tolerance must be positive");
    for (size_t k = 0; k < sample_times.size(); ++k) {
        const double ts = sample_times[k];
        if (!std::isfinite(ts) || ts < 0.0 || ts > t_final)
            throw InvalidState("sample times must lie in [0, t_final]");
        if (k > 0 && ts <= sample_times[k - 1])
            throw InvalidState("sample times must be strictly increasing");
    }
}

TrajectorySamples simulate_trajectory(const TrajectoryConfig& cfg, int trajectory_index) {
    cfg.validate();
    if (trajectory_index < 0) throw InvalidState("trajectory index must be non-negative");

    const int d = cfg.trunc.dim();
    const DecayChannel decay(cfg.trunc);
    const KickBlocks kb = kick_blocks(cfg.trunc, cfg.params.g_tau());
    Eigen::MatrixXcd rho = make_initial_state(cfg.initial, cfg.params, cfg.trunc).matrix();

    PhiloxStream rng(cfg.seed, static_cast<std::uint64_t>(trajectory_index));
    const double r = cfg.params.r;
    double next_arrival =
        (r > 0.0) ? rng.exponential(r) : std::numeric_limits<double>::infinity();

    TrajectorySamples out;
    const size_t n_samples = cfg.sample_times.size();
    out.field.reserve(n_samples);
    out.number.reserve(n_samples);
    out.number_sq.reserve(n_samples);

    auto record = [&](const Eigen::MatrixXcd& m) {
        cxd a = 0.0;
        double n1 = 0.0, n2 = 0.0;
        for (int n = 1; n < d; ++n) a += std::sqrt(static_cast<double>(n)) * m(n, n - 1);
        for (int n = 0; n < d; ++n) {
            const double pn = std::real(m(n, n));
            n1 += n * pn;
            n2 += static_cast<double>(n) * n * pn;
        }
        out.field.push_back(a);
        out.number.push_back(n1);
        out.number_sq.push_back(n2);
    };

    double t = 0.0;
    size_t s = 0;
    while (true) {
        const double t_event = std::min(next_arrival, cfg.t_final);
        while (s < n_samples && cfg.sample_times[s] <= t_event) {
            decay.apply(rho, cfg.params.kappa, cfg.sample_times[s] - t);
            t = cfg.sample_times[s];
            record(rho);
            ++s;
        }
        decay.apply(rho, cfg.params.kappa, t_event - t);
        t = t_event;
        if (next_arrival >= cfg.t_final) break;
        rho = interaction_map_raw(rho, kb, cfg.params.atom);
        const double top = std::real(rho(d - 1, d - 1));
        if (top > cfg.leak_tol)
            throw TruncationTooSmall("top level occupation " + fmt(top) + " exceeds " +
                                     fmt(cfg.leak_tol) + " after the kick at t = " + fmt(t));
        next_arrival += rng.exponential(r);
    }
    out.final_state = std::move(rho);
    return out;
}

namespace {

struct ChunkAcc {
    long count = 0;
    Eigen::ArrayXd mean;
    Eigen::ArrayXd m2;
    Eigen::MatrixXcd state_sum;
};

void merge(ChunkAcc& into, const ChunkAcc& other) {
    if (other.count == 0) return;
    if (into.count == 0) {
        into = other;
        return;
    }
    const double na = static_cast<double>(into.count);
    const double nb = static_cast<double>(other.count);
    const Eigen::ArrayXd delta = other.mean - into.mean;
    into.m2 += other.m2 + delta.square() * (na * nb / (na + nb));
    into.mean += delta * (nb / (na + nb));
    into.state_sum += other.state_sum;
    into.count += other.count;
}

}  // namespace

EnsembleResult ensemble_average(const TrajectoryConfig& cfg, int threads) {
    cfg.validate();
    if (cfg.n_trajectories < 2) throw InvalidState("ensemble statistics need at least two trajectories");
    if (threads < 1) throw InvalidState("thread count must be at least 1");

    const int d = cfg.trunc.dim();
    const size_t n_samples = cfg.sample_times.size();
    const Eigen::Index q = static_cast<Eigen::Index>(4 * n_samples);
    constexpr int kChunk = 64;
    const int n_chunks = (cfg.n_trajectories + kChunk - 1) / kChunk;

    std::vector<ChunkAcc> chunks(static_cast<size_t>(n_chunks));
    std::vector<std::exception_ptr> failures(static_cast<size_t>(n_chunks));
    std::atomic<int> cursor{0};

    auto run_chunks = [&]() {
        for (;;) {
            const int c = cursor.fetch_add(1);
            if (c >= n_chunks) return;
            try {
                ChunkAcc acc;
                acc.mean = Eigen::ArrayXd::Zero(q);
                acc.m2 = Eigen::ArrayXd::Zero(q);
                acc.state_sum = Eigen::MatrixXcd::Zero(d, d);
                const int lo = c * kChunk;
                const int hi = std::min(lo + kChunk, cfg.n_trajectories);
                Eigen::ArrayXd x(q);
                for (int idx = lo; idx < hi; ++idx) {
                    const TrajectorySamples tr = simulate_trajectory(cfg, idx);
                    for (size_t k = 0; k < n_samples; ++k) {
                        x(static_cast<Eigen::Index>(4 * k)) = std::real(tr.field[k]);
                        x(static_cast<Eigen::Index>(4 * k + 1)) = std::imag(tr.field[k]);
                        x(static_cast<Eigen::Index>(4 * k + 2)) = tr.number[k];
                        x(static_cast<Eigen::Index>(4 * k + 3)) = tr.number_sq[k];
                    }
                    acc.count += 1;
                    const Eigen::ArrayXd delta = x - acc.mean;
                    acc.mean += delta / static_cast<double>(acc.count);
                    acc.m2 += delta * (x - acc.mean);
                    acc.state_sum += tr.final_state;
                }
                chunks[static_cast<size_t>(c)] = std::move(acc);
            } catch (...) {
                failures[static_cast<size_t>(c)] = std::current_exception();
                return;
            }
        }
    };

    const int n_workers = std::min(threads, n_chunks);
    if (n_workers <= 1) {
        run_chunks();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(n_workers));
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(run_chunks);
        for (std::thread& th : pool) th.join();
    }
    for (const std::exception_ptr& e : failures)
        if (e) std::rethrow_exception(e);

    ChunkAcc total;
    for (const ChunkAcc& c : chunks) merge(total, c);

    std::vector<SampleStats> stats(n_samples);
    const double n = static_cast<double>(total.count);
    for (size_t k = 0; k < n_samples; ++k) {
        SampleStats& st = stats[k];
        const Eigen::Index base = static_cast<Eigen::Index>(4 * k);
        st.field_mean = cxd(total.mean(base), total.mean(base + 1));
        st.number_mean = total.mean(base + 2);
        st.number_sq_mean = total.mean(base + 3);
        st.field_re_stderr = std::sqrt(total.m2(base) / (n * (n - 1.0)));
        st.field_im_stderr = std::sqrt(total.m2(base + 1) / (n * (n - 1.0)));
        st.number_stderr = std::sqrt(total.m2(base + 2) / (n * (n - 1.0)));
        st.number_sq_stderr = std::sqrt(total.m2(base + 3) / (n * (n - 1.0)));
    }
    return EnsembleResult{cfg.sample_times, std::move(stats),
                          CavityState(cfg.trunc, total.state_sum / n,
                                      CavityState::Check::Validate, cfg.leak_tol),
                          cfg.crowded(), PhiloxStream::kId};
}

}  // namespace cqed
