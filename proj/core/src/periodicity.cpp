#include "ister/periodicity.hpp"

#include <algorithm>
#include <complex>
#include <numbers>
#include <numeric>
#include <sstream>

#include "ister/error.hpp"

namespace ister::periodicity {

namespace {

using cplx = std::complex<double>;

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 decimation-in-time FFT.
void fft_radix2(std::vector<cplx>& a)
{
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) {
            j ^= bit;
        }
        j ^= bit;
        if (i < j) {
            std::swap(a[i], a[j]);
        }
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t j = 0; j < len / 2; ++j) {
                const cplx w = std::polar(1.0, angle * static_cast<double>(j));
                const cplx u = a[i + j];
                const cplx v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
            }
        }
    }
}

// Direct DFT evaluated only at the requested bins 1..bins, with a shared twiddle table.
std::vector<cplx> dft_bins(const std::vector<double>& x, std::size_t bins, const std::vector<cplx>& twiddle)
{
    const std::size_t n = x.size();
    std::vector<cplx> out(bins + 1);
    for (std::size_t f = 1; f <= bins; ++f) {
        cplx acc{0.0, 0.0};
        std::size_t phase = 0;
        for (std::size_t t = 0; t < n; ++t) {
            acc += x[t] * twiddle[phase];
            phase += f;
            if (phase >= n) {
                phase -= n;
            }
        }
        out[f] = acc;
    }
    return out;
}

std::vector<cplx> twiddle_table(std::size_t n)
{
    std::vector<cplx> w(n);
    for (std::size_t t = 0; t < n; ++t) {
        w[t] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(n));
    }
    return w;
}

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

} // namespace

std::string PeriodPlan::signature() const
{
    std::ostringstream os;
    os << length << ":";
    for (std::size_t i = 0; i < periods.size(); ++i) {
        os << (i ? "," : "") << periods[i];
    }
    return os.str();
}

std::string PeriodPlan::label(std::size_t component) const
{
    const auto& seg = layout.at(component);
    return std::to_string(periods[seg.period_index]) + "(" + std::to_string(seg.slot + 1) + ")";
}

Spectrum amplitude_spectrum(const Matrix& x)
{
    if (x.rows < 4) {
        throw DimensionError("amplitude_spectrum needs T >= 4, got " + x.shape_string());
    }
    if (!all_finite(x.data)) {
        throw NumericError("amplitude_spectrum: non-finite input");
    }
    const std::size_t n = x.rows;
    const std::size_t bins = n / 2;
    Spectrum s;
    s.length = n;
    s.amplitudes.assign(bins, 0.0);
    const bool radix2 = is_power_of_two(n);
    const auto twiddle = radix2 ? std::vector<cplx>{} : twiddle_table(n);
    for (std::size_t c = 0; c < x.cols; ++c) {
        const auto column = x.column(c);
        if (radix2) {
            std::vector<cplx> a(column.begin(), column.end());
            fft_radix2(a);
            for (std::size_t f = 1; f <= bins; ++f) {
                s.amplitudes[f - 1] += std::abs(a[f]);
            }
        } else {
            const auto a = dft_bins(column, bins, twiddle);
            for (std::size_t f = 1; f <= bins; ++f) {
                s.amplitudes[f - 1] += std::abs(a[f]);
            }
        }
    }
    for (auto& a : s.amplitudes) {
        a /= static_cast<double>(x.cols);
    }
    return s;
}

PeriodPlan plan_from_frequencies(const std::vector<std::size_t>& freqs, std::size_t length)
{
    PeriodPlan plan;
    plan.length = length;
    for (auto f : freqs) {
        if (f == 0 || f > length) {
            throw ConfigError("frequency " + std::to_string(f) + " invalid for length " + std::to_string(length));
        }
        const std::size_t p = ceil_div(length, f);
        if (std::find(plan.periods.begin(), plan.periods.end(), p) != plan.periods.end()) {
            continue;
        }
        plan.freqs.push_back(f);
        plan.periods.push_back(p);
    }
    for (std::size_t i = 0; i < plan.periods.size(); ++i) {
        const std::size_t p = plan.periods[i];
        const std::size_t count = ceil_div(length, p);
        plan.counts.push_back(count);
        for (std::size_t j = 0; j < count; ++j) {
            const std::size_t start = j * p;
            plan.layout.push_back(Segment{i, j, start, std::min(p, length - start)});
        }
    }
    return plan;
}

PeriodPlan topk_periods(const Spectrum& spectrum, std::size_t k, std::size_t length)
{
    const std::size_t bins = spectrum.amplitudes.size();
    if (length / 2 != bins) {
        throw DimensionError("topk_periods: spectrum has " + std::to_string(bins) + " bins, expected " +
                             std::to_string(length / 2));
    }
    if (k < 1 || k > bins) {
        throw ConfigError("topk_periods: k must lie in [1, " + std::to_string(bins) + "], got " + std::to_string(k));
    }
    std::vector<std::size_t> order(bins);
    std::iota(order.begin(), order.end(), std::size_t{1});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return spectrum.at(a) > spectrum.at(b); });
    order.resize(k);
    return plan_from_frequencies(order, length);
}

std::vector<Matrix> split_and_pad(const Matrix& x, const PeriodPlan& plan)
{
    if (x.rows != plan.length) {
        throw DimensionError("split_and_pad: plan built for T=" + std::to_string(plan.length) + ", input is " +
                             x.shape_string());
    }
    std::vector<Matrix> out;
    out.reserve(plan.layout.size());
    for (const auto& seg : plan.layout) {
        Matrix m(x.rows, x.cols, 0.0);
        for (std::size_t t = 0; t < seg.length; ++t) {
            for (std::size_t c = 0; c < x.cols; ++c) {
                m(t, c) = x(seg.start + t, c);
            }
        }
        out.push_back(std::move(m));
    }
    return out;
}

PeriodPlan discover_periods(const Matrix& x, std::size_t k)
{
    return topk_periods(amplitude_spectrum(x), k, x.rows);
}

} // namespace ister::periodicity
