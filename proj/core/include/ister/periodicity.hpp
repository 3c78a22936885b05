#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ister/matrix.hpp"

namespace ister::periodicity {

/// Channel-averaged DFT magnitudes at integer frequencies 1..floor(T/2).
/// amplitudes[f - 1] holds frequency f; the DC bin is not stored.
struct Spectrum {
    std::vector<double> amplitudes;
    std::size_t length = 0; // T

    double at(std::size_t frequency) const { return amplitudes.at(frequency - 1); }
};

/// One periodic component: slot `slot` of period `periods[period_index]`.
struct Segment {
    std::size_t period_index = 0;
    std::size_t slot = 0;
    std::size_t start = 0;
    std::size_t length = 0;

    friend bool operator==(const Segment&, const Segment&) = default;
};

/// Top-k frequencies and the component layout they induce on a length-T window.
struct PeriodPlan {
    std::size_t length = 0;           // T
    std::vector<std::size_t> freqs;   // selected, in descending amplitude order
    std::vector<std::size_t> periods; // ceil(T / f), deduplicated
    std::vector<std::size_t> counts;  // ceil(T / p)
    std::vector<Segment> layout;      // period-major, slot-minor

    std::size_t components() const { return layout.size(); } // P

    /// Stable identity of the layout, e.g. "96:24,12".
    std::string signature() const;
    /// Fig.-style label "p(j)" with 1-based slot, e.g. "24(1)".
    std::string label(std::size_t component) const;

    friend bool operator==(const PeriodPlan&, const PeriodPlan&) = default;
};

/// Per-channel DFT (radix-2 FFT when T is a power of two, direct sum otherwise).
Spectrum amplitude_spectrum(const Matrix& x);

/// Selects the k strongest frequencies (ties go to the lower frequency) and
/// derives periods, deduplicating periods that coincide after the ceiling.
PeriodPlan topk_periods(const Spectrum& spectrum, std::size_t k, std::size_t length);

/// Builds the plan directly from selected frequencies (in the given order).
PeriodPlan plan_from_frequencies(const std::vector<std::size_t>& freqs, std::size_t length);

/// Zero-padded components stacked in layout order: result[p] is a [T x N] block,
/// returned as P matrices.
std::vector<Matrix> split_and_pad(const Matrix& x, const PeriodPlan& plan);

/// Convenience: spectrum + top-k in one call.
PeriodPlan discover_periods(const Matrix& x, std::size_t k);

} // namespace ister::periodicity
