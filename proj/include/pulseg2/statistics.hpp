// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pulseg2/rng.hpp"

namespace pulseg2 {

enum class SourceKind { coherent, thermal, fock, empirical };

/// Photon-number statistics of the field state: the stochastic factor of the
/// field, kept separate from the deterministic pulse envelope. Thermal means
/// the single-mode Bose-Einstein distribution pmf(n) = mean^n / (1+mean)^(n+1).
class PhotonSource {
  public:
    static PhotonSource coherent(double mean);
    static PhotonSource thermal(double mean);
    static PhotonSource fock(int m);
    /// Table of (photon count, probability); probabilities must be >= 0 and
    /// sum to 1 within 1e-9.
    static PhotonSource empirical(std::vector<std::pair<int, double>> pmf);

    SourceKind kind() const { return kind_; }
    double mean() const;

    /// P(photon number = n). Out-of-support n returns 0.
    double pmf(int n) const;

    /// Draw a photon count. Deterministic given the stream state.
    int sample(RngStream& rng) const;

    /// pmf values [0..k_max] where k_max is the smallest k with cumulative
    /// probability > 1 - tail_bound.
    std::vector<double> pmf_table(double tail_bound = 1e-12) const;

    int fock_m() const { return fock_m_; }
    const std::vector<std::pair<int, double>>& empirical_pmf() const { return table_; }

  private:
    PhotonSource() = default;

    SourceKind kind_ = SourceKind::coherent;
    double mean_ = 0.0;
    int fock_m_ = 0;
    std::vector<std::pair<int, double>> table_;  // empirical only, sorted by count
    std::vector<double> cdf_;                    // empirical only, inverse-CDF sampling
};

/// n-th factorial moment Σ_k pmf(k) · k(k-1)...(k-n+1) by direct summation.
/// This is the brute-force reference the closed forms are checked against.
double factorial_moment(const PhotonSource& source, int order);

/// Statistics-only coherence g^(n) = (n-th factorial moment) / mean^n, from
/// closed forms where the distribution has one (coherent 1, thermal n!,
/// Fock m falling-factorial) and from the stored table for empirical sources.
/// Throws undefined_estimate for zero-mean sources.
double analytic_gn(const PhotonSource& source, int order);

}  // namespace pulseg2
