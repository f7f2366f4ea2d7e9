// SPDX-License-Identifier: Apache-2.0
#include "pulseg2/envelope.hpp"

#include <algorithm>
#include <cmath>

#include "pulseg2/errors.hpp"

namespace pulseg2 {

namespace {

constexpr double kOnThresholdRel = 1e-12;  // on iff weight > 1e-12 * photons_per_pulse
constexpr double kTruncationFwhm = 5.0;    // gaussian/sech2 integrated over +-5 FWHM

// Intensity shapes in units of FWHM, peak 1 at x = 0.
double gaussian_intensity(double x) {
    return std::exp(-4.0 * M_LN2 * x * x);
}

// sech^2(k x) has intensity FWHM 1 for k = 2 arccosh(sqrt(2)).
constexpr double kSechRate = 1.7627471740390861;

double sech2_intensity(double x) {
    const double c = std::cosh(kSechRate * x);
    return 1.0 / (c * c);
}

double shape_intensity(PulseShape shape, double x) {
    return shape == PulseShape::gaussian ? gaussian_intensity(x) : sech2_intensity(x);
}

double simpson(PulseShape shape, double a, double b) {
    const double m = 0.5 * (a + b);
    return (b - a) / 6.0 *
           (shape_intensity(shape, a) + 4.0 * shape_intensity(shape, m) + shape_intensity(shape, b));
}

double adaptive_simpson(PulseShape shape, double a, double b, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double left = simpson(shape, a, m);
    const double right = simpson(shape, m, b);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson(shape, a, m, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(shape, m, b, right, 0.5 * tol, depth - 1);
}

/// Integral of the unit-FWHM intensity shape over [a, b] (x in FWHM units).
double shape_integral(PulseShape shape, double a, double b) {
    if (b <= a) return 0.0;
    return adaptive_simpson(shape, a, b, simpson(shape, a, b), 1e-13, 48);
}

double shape_norm(PulseShape shape) {
    // Normalization over the truncated support, computed once per shape.
    static const double gauss_norm =
        shape_integral(PulseShape::gaussian, -kTruncationFwhm, kTruncationFwhm);
    static const double sech_norm =
        shape_integral(PulseShape::sech2, -kTruncationFwhm, kTruncationFwhm);
    return shape == PulseShape::gaussian ? gauss_norm : sech_norm;
}

}  // namespace

void validate(const PulseTrain& train) {
    if (!(train.pulse_width > 0.0) || !std::isfinite(train.pulse_width))
        throw config_error("pulse_width must be > 0");
    if (!(train.period > 0.0) || !std::isfinite(train.period))
        throw config_error("period must be > 0");
    if (!(train.photons_per_pulse >= 0.0) || !std::isfinite(train.photons_per_pulse))
        throw config_error("photons_per_pulse must be >= 0");
    if (!(train.offset >= 0.0) || !(train.offset < train.period))
        throw config_error("offset must lie in [0, period)");
}

void validate(const WindowGrid& grid) {
    if (!(grid.window_duration > 0.0) || !std::isfinite(grid.window_duration))
        throw config_error("window_duration must be > 0");
    if (grid.window_count < 1)
        throw config_error("window_count must be >= 1");
}

PulseTrainLayout::PulseTrainLayout(const PulseTrain& train, const WindowGrid& grid)
    : train_(train), window_duration_(grid.window_duration), window_count_(grid.window_count) {
    validate(train);
    validate(grid);

    const double span = window_duration_ * static_cast<double>(window_count_);
    if (span < train.period * (1.0 - 1e-12))
        throw config_error("grid must span at least one full pulse period");

    support_half_width_ = train.shape == PulseShape::rect
                              ? 0.5 * train.pulse_width
                              : kTruncationFwhm * train.pulse_width;

    // Whole pulses only: center p*period + offset with the truncated support
    // fully inside [0, span].
    const double eps = 1e-9 * window_duration_;
    const double lo = support_half_width_ - train.offset;
    const long long p_min = static_cast<long long>(std::ceil((lo - eps) / train.period));
    const double hi = span - support_half_width_ - train.offset;
    const long long p_max = static_cast<long long>(std::floor((hi + eps) / train.period));
    first_pulse_index_ = std::max<long long>(p_min, 0);
    pulse_count_ = p_max >= first_pulse_index_
                       ? static_cast<std::size_t>(p_max - first_pulse_index_ + 1)
                       : 0;

    const double period_windows = train.period / window_duration_;
    integer_aligned_ = std::abs(period_windows - std::round(period_windows)) <
                       1e-9 * std::max(1.0, period_windows);
    if (integer_aligned_) period_windows_ = static_cast<long long>(std::llround(period_windows));

    if (pulse_count_ > 0 && integer_aligned_) {
        const double center0 =
            train.offset + static_cast<double>(first_pulse_index_) * train.period;
        base_first_window_ = static_cast<std::size_t>(
            std::max(0.0, std::floor((center0 - support_half_width_) / window_duration_ + eps)));
        base_profile_ = integrate_pulse(center0, base_first_window_);
    }
}

PulseProfile PulseTrainLayout::integrate_pulse(double center, std::size_t base_window) const {
    const double tau = window_duration_;
    const double a = center - support_half_width_;
    const double b = center + support_half_width_;
    const std::size_t last_window = std::min<std::size_t>(
        window_count_ - 1, static_cast<std::size_t>(std::max(0.0, std::floor(b / tau))));

    PulseProfile profile;
    profile.first_window = base_window;
    profile.weights.reserve(last_window - base_window + 1);

    const double ppp = train_.photons_per_pulse;
    for (std::size_t w = base_window; w <= last_window; ++w) {
        const double win_lo = static_cast<double>(w) * tau;
        const double win_hi = win_lo + tau;
        double fraction = 0.0;
        if (train_.shape == PulseShape::rect) {
            const double overlap = std::min(b, win_hi) - std::max(a, win_lo);
            fraction = std::max(0.0, overlap) / train_.pulse_width;
        } else {
            const double x_lo = std::max((win_lo - center) / train_.pulse_width, -kTruncationFwhm);
            const double x_hi = std::min((win_hi - center) / train_.pulse_width, kTruncationFwhm);
            fraction = shape_integral(train_.shape, x_lo, x_hi) / shape_norm(train_.shape);
        }
        profile.weights.push_back(ppp * fraction);
    }

    // Drop sub-threshold tails and fold their mass back in.
    const double threshold = kOnThresholdRel * ppp;
    const double raw_total = profile.total();
    double kept = 0.0;
    for (double& w : profile.weights) {
        if (w <= threshold)
            w = 0.0;
        else
            kept += w;
    }
    if (kept > 0.0 && kept < raw_total) {
        const double scale = raw_total / kept;
        for (double& w : profile.weights) w *= scale;
    }

    // Trim zero edges.
    std::size_t lead = 0;
    while (lead < profile.weights.size() && profile.weights[lead] == 0.0) ++lead;
    std::size_t tail = profile.weights.size();
    while (tail > lead && profile.weights[tail - 1] == 0.0) --tail;
    profile.weights.assign(profile.weights.begin() + static_cast<std::ptrdiff_t>(lead),
                           profile.weights.begin() + static_cast<std::ptrdiff_t>(tail));
    profile.first_window += lead;
    return profile;
}

PulseProfile PulseTrainLayout::profile(std::size_t pulse) const {
    if (pulse >= pulse_count_) throw config_error("pulse index out of range");

    if (integer_aligned_) {
        PulseProfile p = base_profile_;  // first_window is pulse 0's, trim included
        p.first_window += pulse * static_cast<std::size_t>(period_windows_);
        return p;
    }

    const double center =
        train_.offset +
        static_cast<double>(first_pulse_index_ + static_cast<long long>(pulse)) * train_.period;
    const double eps = 1e-9 * window_duration_;
    const auto base_window = static_cast<std::size_t>(
        std::max(0.0, std::floor((center - support_half_width_) / window_duration_ + eps)));

    // Profiles depend only on the pulse center's position within its first
    // window; cache keyed on that alignment, quantized well above fp drift.
    // Cached entries hold first_window relative to the pulse's base window.
    const double rel = center - static_cast<double>(base_window) * window_duration_;
    const long long key = std::llround(rel / window_duration_ * 1e7);
    auto it = cache_.find(key);
    if (it == cache_.end()) {
        if (cache_.size() >= 65536) return integrate_pulse(center, base_window);
        PulseProfile fresh = integrate_pulse(center, base_window);
        fresh.first_window -= base_window;
        it = cache_.emplace(key, std::move(fresh)).first;
    }
    PulseProfile p = it->second;
    p.first_window += base_window;
    return p;
}

BitSeries PulseTrainLayout::build_mask(std::size_t* on_count) const {
    BitSeries mask(window_count_);
    std::size_t m = 0;
    for (std::size_t p = 0; p < pulse_count_; ++p) {
        const PulseProfile prof = profile(p);
        for (std::size_t i = 0; i < prof.weights.size(); ++i) {
            if (prof.weights[i] > 0.0) {
                const std::size_t w = prof.first_window + i;
                if (!mask.get(w)) {
                    mask.set(w);
                    ++m;
                }
            }
        }
    }
    if (on_count) *on_count = m;
    return mask;
}

bool PulseTrainLayout::single_window_pulses() const {
    const std::size_t probe = integer_aligned_ ? 1 : std::min<std::size_t>(pulse_count_, 256);
    for (std::size_t p = 0; p < probe; ++p) {
        std::size_t on = 0;
        for (double w : profile(p).weights)
            if (w > 0.0) ++on;
        if (on != 1) return false;
    }
    return pulse_count_ > 0;
}

bool PulseTrainLayout::supports_disjoint() const {
    // Supports are period apart and 2*T wide; one extra window absorbs the
    // boundary quantization.
    return 2.0 * support_half_width_ + window_duration_ <= train_.period;
}

WindowWeights window_weights(const PulseTrain& train, const WindowGrid& grid) {
    PulseTrainLayout layout(train, grid);

    WindowWeights result;
    result.weights.assign(grid.window_count, 0.0);
    result.mask = BitSeries(grid.window_count);
    result.pulse_count = layout.pulse_count();
    result.photons_per_pulse = train.photons_per_pulse;

    for (std::size_t p = 0; p < layout.pulse_count(); ++p) {
        const PulseProfile prof = layout.profile(p);
        for (std::size_t i = 0; i < prof.weights.size(); ++i)
            result.weights[prof.first_window + i] += prof.weights[i];
    }
    for (std::size_t w = 0; w < result.weights.size(); ++w) {
        if (result.weights[w] > 0.0) {
            result.mask.set(w);
            ++result.on_count;
        }
    }
    return result;
}

double intensity_ratio(const WindowWeights& weights) {
    return intensity_ratio(weights.on_count, weights.weights.size());
}

double intensity_ratio(std::size_t on_count, std::size_t window_count) {
    if (window_count == 0) throw config_error("intensity ratio needs at least one window");
    return static_cast<double>(on_count) / static_cast<double>(window_count);
}

}  // namespace pulseg2
