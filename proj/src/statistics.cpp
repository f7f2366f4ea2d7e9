// SPDX-License-Identifier: Apache-2.0
#include "pulseg2/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pulseg2/errors.hpp"

namespace pulseg2 {

namespace {

void check_mean(double mean, const char* kind) {
    if (!std::isfinite(mean) || mean < 0.0)
        throw config_error(std::string(kind) + " mean must be finite and non-negative");
}

double poisson_pmf(double mean, int n) {
    if (mean == 0.0) return n == 0 ? 1.0 : 0.0;
    return std::exp(n * std::log(mean) - mean - std::lgamma(n + 1.0));
}

double bose_einstein_pmf(double mean, int n) {
    if (mean == 0.0) return n == 0 ? 1.0 : 0.0;
    // mean^n / (1+mean)^(n+1), in log space to survive large n
    return std::exp(n * std::log(mean) - (n + 1.0) * std::log1p(mean));
}

/// Knuth's product-of-uniforms method; exact for small means.
int poisson_knuth(double mean, RngStream& rng) {
    const double limit = std::exp(-mean);
    int k = 0;
    double p = 1.0;
    do {
        ++k;
        p *= 1.0 - rng.next_double();  // (0,1], avoids a stuck zero
    } while (p > limit);
    return k - 1;
}

int poisson_sample(double mean, RngStream& rng) {
    if (mean == 0.0) return 0;
    // Poisson is infinitely divisible: halve until the direct method applies.
    int total = 0;
    while (mean > 16.0) {
        mean *= 0.5;
        total += poisson_knuth(mean, rng);
    }
    return total + poisson_knuth(mean, rng);
}

int bose_einstein_sample(double mean, RngStream& rng) {
    if (mean == 0.0) return 0;
    // Geometric inversion: pmf(n) = r^n (1-r) with r = mean/(1+mean)
    const double log_r = std::log(mean) - std::log1p(mean);
    const double u = 1.0 - rng.next_double();  // (0,1]
    double n = std::floor(std::log(u) / log_r);
    if (n < 0.0) n = 0.0;
    if (n > 2.1e9) n = 2.1e9;  // clamp pathological draws to int range
    return static_cast<int>(n);
}

}  // namespace

PhotonSource PhotonSource::coherent(double mean) {
    check_mean(mean, "coherent");
    PhotonSource s;
    s.kind_ = SourceKind::coherent;
    s.mean_ = mean;
    return s;
}

PhotonSource PhotonSource::thermal(double mean) {
    check_mean(mean, "thermal");
    PhotonSource s;
    s.kind_ = SourceKind::thermal;
    s.mean_ = mean;
    return s;
}

PhotonSource PhotonSource::fock(int m) {
    if (m < 0) throw config_error("fock photon number must be >= 0");
    PhotonSource s;
    s.kind_ = SourceKind::fock;
    s.fock_m_ = m;
    s.mean_ = static_cast<double>(m);
    return s;
}

PhotonSource PhotonSource::empirical(std::vector<std::pair<int, double>> pmf) {
    if (pmf.empty()) throw config_error("empirical pmf table must not be empty");
    std::sort(pmf.begin(), pmf.end());
    double total = 0.0;
    double mean = 0.0;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
        auto [count, prob] = pmf[i];
        if (count < 0) throw config_error("empirical photon count must be >= 0");
        if (i > 0 && pmf[i - 1].first == count)
            throw config_error("empirical pmf table has duplicate photon count");
        if (!(prob >= 0.0) || !std::isfinite(prob))
            throw config_error("empirical pmf probabilities must be >= 0");
        total += prob;
        mean += count * prob;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw config_error("empirical pmf probabilities must sum to 1 within 1e-9");

    PhotonSource s;
    s.kind_ = SourceKind::empirical;
    s.mean_ = mean;
    s.table_ = std::move(pmf);
    s.cdf_.reserve(s.table_.size());
    double cum = 0.0;
    for (const auto& [count, prob] : s.table_) {
        cum += prob;
        s.cdf_.push_back(cum);
    }
    s.cdf_.back() = 1.0;  // absorb the 1e-9 slack so sampling always lands
    return s;
}

double PhotonSource::mean() const { return mean_; }

double PhotonSource::pmf(int n) const {
    if (n < 0) return 0.0;
    switch (kind_) {
        case SourceKind::coherent: return poisson_pmf(mean_, n);
        case SourceKind::thermal: return bose_einstein_pmf(mean_, n);
        case SourceKind::fock: return n == fock_m_ ? 1.0 : 0.0;
        case SourceKind::empirical: {
            auto it = std::lower_bound(table_.begin(), table_.end(),
                                       std::make_pair(n, -1.0));
            if (it != table_.end() && it->first == n) return it->second;
            return 0.0;
        }
    }
    return 0.0;
}

int PhotonSource::sample(RngStream& rng) const {
    switch (kind_) {
        case SourceKind::coherent: return poisson_sample(mean_, rng);
        case SourceKind::thermal: return bose_einstein_sample(mean_, rng);
        case SourceKind::fock: return fock_m_;
        case SourceKind::empirical: {
            const double u = rng.next_double();
            auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
            if (it == cdf_.end()) --it;
            return table_[static_cast<std::size_t>(it - cdf_.begin())].first;
        }
    }
    return 0;
}

std::vector<double> PhotonSource::pmf_table(double tail_bound) const {
    std::vector<double> out;
    if (kind_ == SourceKind::fock) {
        out.assign(static_cast<std::size_t>(fock_m_) + 1, 0.0);
        out.back() = 1.0;
        return out;
    }
    if (kind_ == SourceKind::empirical) {
        out.assign(static_cast<std::size_t>(table_.back().first) + 1, 0.0);
        for (const auto& [count, prob] : table_) out[static_cast<std::size_t>(count)] = prob;
        return out;
    }
    double cum = 0.0;
    for (int n = 0;; ++n) {
        const double p = pmf(n);
        out.push_back(p);
        cum += p;
        if (cum > 1.0 - tail_bound) break;
        if (n > 100000000) throw config_error("pmf table failed to converge");
    }
    return out;
}

double factorial_moment(const PhotonSource& source, int order) {
    if (order < 1) throw config_error("factorial moment order must be >= 1");

    if (source.kind() == SourceKind::empirical) {
        double sum = 0.0;
        for (const auto& [count, prob] : source.empirical_pmf()) {
            double ff = 1.0;
            for (int j = 0; j < order; ++j) ff *= count - j;
            if (count >= order) sum += prob * ff;
        }
        return sum;
    }
    if (source.kind() == SourceKind::fock) {
        const int m = source.fock_m();
        if (m < order) return 0.0;
        double ff = 1.0;
        for (int j = 0; j < order; ++j) ff *= m - j;
        return ff;
    }

    // Direct summation with a geometric tail cut: once past the bulk of the
    // distribution the terms decay with ratio < 1, so stopping when a term
    // drops below 1e-16 of the running sum leaves a tail << 1e-12 relative.
    const double mean = source.mean();
    if (mean == 0.0) return 0.0;
    double sum = 0.0;
    const int k_bulk = order + static_cast<int>(std::ceil(2.0 * mean + 10.0 * std::sqrt(mean) + 20.0));
    for (int k = order; k < 10000000; ++k) {
        double ff = 1.0;
        for (int j = 0; j < order; ++j) ff *= k - j;
        const double term = source.pmf(k) * ff;
        sum += term;
        if (k > k_bulk && term < 1e-16 * sum) break;
    }
    return sum;
}

double analytic_gn(const PhotonSource& source, int order) {
    if (order < 2) throw config_error("coherence order must be >= 2");
    const double mean = source.mean();
    if (mean <= 0.0)
        throw undefined_estimate("coherence undefined for zero-mean source");

    switch (source.kind()) {
        case SourceKind::coherent:
            return 1.0;
        case SourceKind::thermal: {
            double nf = 1.0;
            for (int j = 2; j <= order; ++j) nf *= j;
            return nf;
        }
        case SourceKind::fock: {
            const int m = source.fock_m();
            if (m < order) return 0.0;
            double ff = 1.0;
            for (int j = 0; j < order; ++j) ff *= m - j;
            return ff / std::pow(static_cast<double>(m), order);
        }
        case SourceKind::empirical:
            return factorial_moment(source, order) / std::pow(mean, order);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace pulseg2
