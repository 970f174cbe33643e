#pragma once

// Independent reference computations. Nothing here calls into the library:
// chains are built by enumerating every per-user transmit pattern, and
// stationary vectors come from Eigen.

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Outcome of one frame given the attempt count and receiver.
// Returns true when every attempting packet is delivered.
inline bool delivered(int attempts, bool zigzag) { return attempts == 1 || (zigzag && attempts == 2); }

// Team chain over N = 0..M. Users 0..N-1 are backlogged.
inline Matrix team_chain(int m, double pa, double q, bool zigzag) {
    Matrix p = Matrix::Zero(m + 1, m + 1);
    for (int n = 0; n <= m; ++n) {
        for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
            double w = 1.0;
            int attempts = 0;
            int fresh = 0;
            for (int u = 0; u < m; ++u) {
                const bool tx = (mask >> u) & 1u;
                const double prob = u < n ? q : pa;
                w *= tx ? prob : 1.0 - prob;
                if (tx) {
                    ++attempts;
                    if (u >= n) ++fresh;
                }
            }
            if (w == 0.0) continue;
            int next = n;
            if (attempts > 0) next = delivered(attempts, zigzag) ? n - (attempts - fresh) : n + fresh;
            p(n, next) += w;
        }
    }
    return p;
}

// Game chain over (N, a) at index 2N + a; user m is the tagged one.
inline Matrix game_chain(int m, double pa, double q, double qt, bool zigzag) {
    const int states = 2 * (m + 1);
    Matrix p = Matrix::Zero(states, states);
    for (int n = 0; n <= m; ++n) {
        for (int a = 0; a <= 1; ++a) {
            for (std::uint32_t mask = 0; mask < (1u << (m + 1)); ++mask) {
                double w = 1.0;
                int attempts = 0;
                int fresh_others = 0;
                for (int u = 0; u < m; ++u) {
                    const bool tx = (mask >> u) & 1u;
                    const double prob = u < n ? q : pa;
                    w *= tx ? prob : 1.0 - prob;
                    if (tx) {
                        ++attempts;
                        if (u >= n) ++fresh_others;
                    }
                }
                const bool tagged_tx = (mask >> m) & 1u;
                const double tagged_prob = a == 1 ? qt : pa;
                w *= tagged_tx ? tagged_prob : 1.0 - tagged_prob;
                if (tagged_tx) ++attempts;
                if (w == 0.0) continue;

                const int retx_others = attempts - fresh_others - (tagged_tx ? 1 : 0);
                int next_n = n;
                int next_a = a;
                if (attempts > 0) {
                    if (delivered(attempts, zigzag)) {
                        next_n = n - retx_others;
                        if (tagged_tx) next_a = 0;
                    } else {
                        next_n = n + fresh_others;
                        if (tagged_tx) next_a = 1;
                    }
                }
                p(2 * n + a, 2 * next_n + next_a) += w;
            }
        }
    }
    return p;
}

// Stationary vector by least squares on [P^T - I; 1^T] pi = [0; 1] when the
// chain has a unique one, else the power-iteration limit from state 0.
inline Vector stationary(const Matrix& p) {
    const auto n = p.rows();
    Matrix a(n + 1, n);
    a.topRows(n) = p.transpose() - Matrix::Identity(n, n);
    a.row(n).setOnes();
    Vector b = Vector::Zero(n + 1);
    b(n) = 1.0;
    Eigen::ColPivHouseholderQR<Matrix> qr(a);
    if (qr.rank() == n) return qr.solve(b);

    Vector pi = Vector::Zero(n);
    pi(0) = 1.0;
    for (int it = 0; it < 2'000'000; ++it) {
        Vector next = p.transpose() * pi;
        const double change = (next - pi).cwiseAbs().maxCoeff();
        pi = next;
        if (change < 1e-15) break;
    }
    return pi;
}

inline double team_throughput(int m, double pa, double q, bool zigzag) {
    const Vector pi = stationary(team_chain(m, pa, q, zigzag));
    double backlog = 0.0;
    for (int n = 0; n <= m; ++n) backlog += n * pi(n);
    return pa * (m - backlog);
}

inline double tagged_throughput(int m, double pa, double q, double qt, bool zigzag) {
    const Vector pi = stationary(game_chain(m, pa, q, qt, zigzag));
    double idle = 0.0;
    for (int n = 0; n <= m; ++n) idle += pi(2 * n);
    return pa * idle;
}

// 0.001, 0.002, ..., 1.0
inline std::vector<double> dense_grid() {
    std::vector<double> g;
    for (int k = 1; k <= 1000; ++k) g.push_back(k / 1000.0);
    return g;
}

}  // namespace oracle
