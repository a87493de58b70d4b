#include <cmath>
#include <limits>

#include "phishbench/errors.hpp"
#include "phishbench/metrics.hpp"

namespace phishbench {
namespace {

using u128 = unsigned __int128;

// round_half_up(num * 10^places / den) as an integer.
u128 scaled_round(std::uint64_t num, std::uint64_t den, int places) {
    u128 scale = 1;
    for (int i = 0; i < places; ++i) scale *= 10;
    const u128 scaled = static_cast<u128>(num) * scale;
    return (2 * scaled + den) / (2 * static_cast<u128>(den));
}

std::string u128_to_string(u128 v) {
    if (v == 0) return "0";
    std::string s;
    while (v) {
        s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
        v /= 10;
    }
    return s;
}

std::string fixed_point(u128 q, int places) {
    std::string digits = u128_to_string(q);
    if (places == 0) return digits;
    if (digits.size() <= static_cast<std::size_t>(places))
        digits.insert(0, static_cast<std::size_t>(places) + 1 - digits.size(), '0');
    digits.insert(digits.size() - static_cast<std::size_t>(places), ".");
    return digits;
}

std::vector<double> gaussian_window(int len) {
    std::vector<double> w(static_cast<std::size_t>(len));
    const double c = (len - 1) / 2.0;
    double sum = 0;
    for (int i = 0; i < len; ++i) sum += w[static_cast<std::size_t>(i)] = std::exp(-(i - c) * (i - c) / (2 * 1.5 * 1.5));
    for (auto& x : w) x /= sum;
    return w;
}

// Valid-mode separable weighted sum.
std::vector<double> filter_valid(const std::vector<double>& in, int w, int h, const std::vector<double>& kx,
                                 const std::vector<double>& ky) {
    const int lx = static_cast<int>(kx.size()), ly = static_cast<int>(ky.size());
    const int ow = w - lx + 1, oh = h - ly + 1;
    std::vector<double> tmp(static_cast<std::size_t>(ow) * h), out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0;
            for (int k = 0; k < lx; ++k) s += kx[static_cast<std::size_t>(k)] * in[static_cast<std::size_t>(y) * w + x + k];
            tmp[static_cast<std::size_t>(y) * ow + x] = s;
        }
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0;
            for (int k = 0; k < ly; ++k) s += ky[static_cast<std::size_t>(k)] * tmp[static_cast<std::size_t>(y + k) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = s;
        }
    return out;
}

}  // namespace

void RateCounts::validate() const {
    if (n_tp > n_p || i_tp > n_tp || n_fp > n_b || i_fp > n_fp)
        throw ValidationError("rate counts violate i_tp <= n_tp <= n_p or i_fp <= n_fp <= n_b");
}

RateCounts& RateCounts::operator+=(const RateCounts& o) {
    n_p += o.n_p;
    n_tp += o.n_tp;
    i_tp += o.i_tp;
    n_b += o.n_b;
    n_fp += o.n_fp;
    i_fp += o.i_fp;
    return *this;
}

std::optional<double> Ratio::value() const {
    if (!den) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

std::string Ratio::decimal(int places) const {
    if (!den) return "null";
    return fixed_point(scaled_round(num, den, places), places);
}

std::string Ratio::percent() const {
    if (!den) return "—";
    return fixed_point(scaled_round(num, den, 4), 2);
}

std::string Ratio::cell() const {
    return with_thousands(num) + "/" + with_thousands(den) + " (" + percent() + (den ? "%)" : ")");
}

bool same_value(const Ratio& a, const Ratio& b) {
    if (!a.den || !b.den) return !a.den && !b.den;
    return static_cast<u128>(a.num) * b.den == static_cast<u128>(b.num) * a.den;
}

MetricsReport compute_rates(const RateCounts& c, double mean_elapsed) {
    c.validate();
    MetricsReport r;
    r.tpr = {c.n_tp, c.n_p};
    r.ident_rate = {c.i_tp, c.n_p};
    r.ident_precision = {c.i_tp, c.n_tp};
    r.fpr = {c.n_fp, c.n_b};
    r.false_ident = {c.i_fp, c.n_fp};
    r.overall_false_brand = {c.i_fp, c.n_b};
    r.mean_elapsed = mean_elapsed;
    return r;
}

std::string with_thousands(std::uint64_t n) {
    std::string digits = std::to_string(n), out;
    for (std::size_t i = 0; i < digits.size(); ++i) {
        if (i && (digits.size() - i) % 3 == 0) out += ',';
        out += digits[i];
    }
    return out;
}

double ssim_gray(const std::vector<double>& a, const std::vector<double>& b, int width, int height) {
    const std::size_t n = static_cast<std::size_t>(width) * height;
    if (a.size() != n || b.size() != n || width <= 0 || height <= 0) throw ShapeError("ssim: size mismatch");
    const auto kx = gaussian_window(std::min(11, width)), ky = gaussian_window(std::min(11, height));
    std::vector<double> aa(n), bb(n), ab(n);
    for (std::size_t i = 0; i < n; ++i) {
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    const auto ma = filter_valid(a, width, height, kx, ky), mb = filter_valid(b, width, height, kx, ky);
    const auto saa = filter_valid(aa, width, height, kx, ky), sbb = filter_valid(bb, width, height, kx, ky),
               sab = filter_valid(ab, width, height, kx, ky);
    constexpr double c1 = (0.01 * 255) * (0.01 * 255), c2 = (0.03 * 255) * (0.03 * 255);
    double total = 0;
    for (std::size_t i = 0; i < ma.size(); ++i) {
        const double va = saa[i] - ma[i] * ma[i], vb = sbb[i] - mb[i] * mb[i], cov = sab[i] - ma[i] * mb[i];
        total += ((2 * ma[i] * mb[i] + c1) * (2 * cov + c2)) /
                 ((ma[i] * ma[i] + mb[i] * mb[i] + c1) * (va + vb + c2));
    }
    return total / static_cast<double>(ma.size());
}

double ssim(const RgbImage& a, const RgbImage& b) {
    if (a.width() != b.width() || a.height() != b.height()) throw ShapeError("ssim: image sizes differ");
    return ssim_gray(luma(a), luma(b), a.width(), a.height());
}

double psnr(const RgbImage& a, const RgbImage& b) {
    if (a.width() != b.width() || a.height() != b.height()) throw ShapeError("psnr: image sizes differ");
    const auto& x = a.bytes();
    const auto& y = b.bytes();
    std::uint64_t se = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const int d = static_cast<int>(x[i]) - static_cast<int>(y[i]);
        se += static_cast<std::uint64_t>(d * d);
    }
    if (se == 0) return std::numeric_limits<double>::infinity();
    const double mse = static_cast<double>(se) / static_cast<double>(x.size());
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

}  // namespace phishbench
