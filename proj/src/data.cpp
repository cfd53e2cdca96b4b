#include "ttb/data.hpp"

#include "ttb/errors.hpp"
#include "ttb/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ttb {

void SynthSpec::validate() const {
    if (dims.empty()) throw ShapeError("synthetic dims must be non-empty");
    for (std::size_t d : dims)
        if (d == 0) throw ShapeError("synthetic dims must be positive");
    if (true_ranks.size() != dims.size() + 1 || true_ranks.front() != 1 || true_ranks.back() != 1)
        throw ShapeError("synthetic ranks must have D+1 entries with unit ends");
    for (std::size_t r : true_ranks)
        if (r == 0) throw ShapeError("synthetic ranks must be positive");
}

Synthetic gen_synthetic(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    Synthetic out;
    for (std::size_t c = 0; c < spec.dims.size(); ++c) {
        CoreArray core(spec.true_ranks[c], spec.true_ranks[c + 1], spec.dims[c]);
        for (double& v : core.data()) v = rng.normal();
        out.cores.cores.push_back(std::move(core));
    }
    out.truth = tt_contract(out.cores);
    return out;
}

double snr_db(const DenseTensor& signal, const DenseTensor& noise) {
    const double n = noise.frobenius_norm();
    if (n == 0.0) return kNoiselessSnr;
    return 20.0 * std::log10(signal.frobenius_norm() / n);
}

NoisyTensor add_noise(const DenseTensor& t, double snr, std::uint64_t seed) {
    if (std::isnan(snr) || snr == -kNoiselessSnr) throw std::invalid_argument("snr must be finite or +inf");
    const double sig = t.frobenius_norm();
    if (sig == 0.0) throw std::invalid_argument("cannot set an SNR for a zero signal");
    NoisyTensor out{t, DenseTensor(t.dims()), kNoiselessSnr};
    if (snr == kNoiselessSnr) return out;

    Rng rng(seed);
    for (double& v : out.noise.data()) v = rng.normal();
    const double target = sig / std::pow(10.0, snr / 20.0);
    const double scale = target / out.noise.frobenius_norm();
    for (std::size_t i = 0; i < t.size(); ++i) {
        out.noise[i] *= scale;
        out.noisy[i] = t[i] + out.noise[i];
    }
    out.realized_snr_db = snr_db(t, out.noise);
    return out;
}

NoisyTensor add_noise_variance(const DenseTensor& t, double variance, std::uint64_t seed) {
    if (!(variance >= 0.0) || !std::isfinite(variance)) throw std::invalid_argument("noise variance must be >= 0");
    NoisyTensor out{t, DenseTensor(t.dims()), kNoiselessSnr};
    if (variance == 0.0) return out;
    Rng rng(seed);
    const double sd = std::sqrt(variance);
    for (std::size_t i = 0; i < t.size(); ++i) {
        out.noise[i] = sd * rng.normal();
        out.noisy[i] = t[i] + out.noise[i];
    }
    out.realized_snr_db = snr_db(t, out.noise);
    return out;
}

MaskTensor random_mask(const Dims& dims, double missing_rate, std::uint64_t seed) {
    if (!(missing_rate >= 0.0 && missing_rate < 1.0)) throw std::invalid_argument("missing rate must lie in [0, 1)");
    MaskTensor m(dims, true);
    Rng rng(seed);
    for (std::size_t i = 0; i < m.size(); ++i) m.set(i, rng.bernoulli(1.0 - missing_rate));
    if (m.observed_count() == 0) throw std::invalid_argument("mask has no observed entries");
    return m;
}

MaskTensor stripe_mask(const Dims& dims, const StripeSpec& spec, std::uint64_t seed) {
    if (dims.size() < 2) throw ShapeError("stripe masks need at least two modes");
    if (spec.period == 0 || spec.width == 0 || spec.width > spec.period)
        throw std::invalid_argument("stripe width must lie in [1, period]");
    const std::size_t offset = spec.offset.value_or(Rng(seed).next_u64() % spec.period);
    if (offset >= spec.period) throw std::invalid_argument("stripe offset must be below the period");

    MaskTensor m(dims, true);
    const std::size_t rows = dims[0], cols = dims[1];
    const std::size_t plane = rows * cols;
    auto hit = [&](std::size_t pos) { return pos >= offset && (pos - offset) % spec.period < spec.width; };
    for (std::size_t i = 0; i < m.size(); ++i) {
        const std::size_t r = i % rows, c = (i % plane) / rows;
        if (hit(spec.vertical ? c : r)) m.set(i, false);
    }
    if (m.observed_count() == 0) throw std::invalid_argument("mask has no observed entries");
    return m;
}

double rse(const DenseTensor& truth, const DenseTensor& estimate) {
    if (truth.dims() != estimate.dims()) throw ShapeError("rse: dims mismatch");
    const double den = truth.frobenius_norm();
    if (den == 0.0) throw std::invalid_argument("rse: zero reference tensor");
    double num = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) num += (truth[i] - estimate[i]) * (truth[i] - estimate[i]);
    return std::sqrt(num) / den;
}

double psnr(const DenseTensor& img, const DenseTensor& img_hat) {
    if (img.dims() != img_hat.dims()) throw ShapeError("psnr: dims mismatch");
    if (img.size() == 0) throw ShapeError("psnr: empty input");
    const double peak = *std::max_element(img.data().begin(), img.data().end());
    if (!(peak > 0.0)) throw std::invalid_argument("psnr: reference maximum must be positive");
    double err = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i) err += (img[i] - img_hat[i]) * (img[i] - img_hat[i]);
    if (err == 0.0) return kNoiselessSnr;
    return 20.0 * std::log10(peak * std::sqrt(static_cast<double>(img.size())) / std::sqrt(err));
}

namespace {

std::vector<double> gaussian_window(std::size_t n) {
    constexpr double sigma = 1.5;
    std::vector<double> w(n);
    const double mid = 0.5 * static_cast<double>(n - 1);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(i) - mid;
        w[i] = std::exp(-x * x / (2.0 * sigma * sigma));
        sum += w[i];
    }
    for (double& v : w) v /= sum;
    return w;
}

// Separable valid-region filter of a column-major rows x cols plane.
std::vector<double> filter_valid(const std::vector<double>& x, std::size_t rows, std::size_t cols,
                                 const std::vector<double>& w) {
    const std::size_t n = w.size(), orows = rows - n + 1, ocols = cols - n + 1;
    std::vector<double> tmp(orows * cols, 0.0);
    for (std::size_t c = 0; c < cols; ++c)
        for (std::size_t r = 0; r < orows; ++r) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += w[i] * x[r + i + rows * c];
            tmp[r + orows * c] = s;
        }
    std::vector<double> out(orows * ocols, 0.0);
    for (std::size_t c = 0; c < ocols; ++c)
        for (std::size_t r = 0; r < orows; ++r) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += w[i] * tmp[r + orows * (c + i)];
            out[r + orows * c] = s;
        }
    return out;
}

double ssim_plane(const double* x, const double* y, std::size_t rows, std::size_t cols, double range) {
    const std::size_t n = std::min<std::size_t>({11, rows, cols});
    const auto w = gaussian_window(n);
    const std::size_t sz = rows * cols;
    std::vector<double> xs(x, x + sz), ys(y, y + sz), xx(sz), yy(sz), xy(sz);
    for (std::size_t i = 0; i < sz; ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(xs, rows, cols, w), my = filter_valid(ys, rows, cols, w);
    const auto exx = filter_valid(xx, rows, cols, w), eyy = filter_valid(yy, rows, cols, w);
    const auto exy = filter_valid(xy, rows, cols, w);
    const double c1 = (0.01 * range) * (0.01 * range), c2 = (0.03 * range) * (0.03 * range);
    double total = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
        const double sxx = exx[i] - mx[i] * mx[i];
        const double syy = eyy[i] - my[i] * my[i];
        const double sxy = exy[i] - mx[i] * my[i];
        const double num = (2.0 * (mx[i] * my[i]) + c1) * (2.0 * sxy + c2);
        const double den = (mx[i] * mx[i] + my[i] * my[i] + c1) * (sxx + syy + c2);
        total += num / den;
    }
    return total / static_cast<double>(mx.size());
}

void check_image(const DenseTensor& t, const char* who) {
    if (t.order() != 2 && t.order() != 3) throw ShapeError(std::string(who) + ": expected a (rows, cols[, channels]) image");
}

}  // namespace

double ssim(const DenseTensor& img, const DenseTensor& img_hat) {
    check_image(img, "ssim");
    if (img.dims() != img_hat.dims()) throw ShapeError("ssim: dims mismatch");
    const std::size_t rows = img.dim(0), cols = img.dim(1);
    const std::size_t bands = img.order() == 3 ? img.dim(2) : 1;
    const double range = std::max(*std::max_element(img.data().begin(), img.data().end()),
                                  *std::max_element(img_hat.data().begin(), img_hat.data().end()));
    if (!(range > 0.0)) throw std::invalid_argument("ssim: dynamic range must be positive");
    double sum = 0.0;
    for (std::size_t b = 0; b < bands; ++b)
        sum += ssim_plane(img.data().data() + b * rows * cols, img_hat.data().data() + b * rows * cols, rows, cols,
                          range);
    return sum / static_cast<double>(bands);
}

DenseTensor band(const DenseTensor& t, std::size_t b) {
    if (t.order() != 3 || b >= t.dim(2)) throw ShapeError("band: index out of range");
    const std::size_t plane = t.dim(0) * t.dim(1);
    const auto src = t.data().subspan(b * plane, plane);
    return DenseTensor({t.dim(0), t.dim(1)}, std::vector<double>(src.begin(), src.end()));
}

MetricReport compute_metrics(const DenseTensor& truth, const DenseTensor& estimate) {
    if (truth.dims() != estimate.dims()) throw ShapeError("metrics: dims mismatch");
    MetricReport m;
    m.rse = rse(truth, estimate);
    m.psnr = psnr(truth, estimate);
    if (truth.order() == 2) {
        m.ssim = ssim(truth, estimate);
        m.band_psnr = {m.psnr};
        m.band_ssim = {*m.ssim};
    } else if (truth.order() == 3) {
        m.ssim = ssim(truth, estimate);
        for (std::size_t b = 0; b < truth.dim(2); ++b) {
            const DenseTensor tb = band(truth, b), eb = band(estimate, b);
            m.band_psnr.push_back(psnr(tb, eb));
            m.band_ssim.push_back(ssim(tb, eb));
        }
    } else {
        m.band_psnr = {m.psnr};
    }
    double ps = 0.0;
    for (double v : m.band_psnr) ps += v;
    m.mpsnr = ps / static_cast<double>(m.band_psnr.size());
    if (!m.band_ssim.empty()) {
        double ss = 0.0;
        for (double v : m.band_ssim) ss += v;
        m.mssim = ss / static_cast<double>(m.band_ssim.size());
    }
    return m;
}

std::string metrics_json(const MetricReport& m, int indent) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    nlohmann::json j;
    j["rse"] = m.rse;
    j["psnr"] = num(m.psnr);
    j["ssim"] = m.ssim ? nlohmann::json(*m.ssim) : nlohmann::json(nullptr);
    j["band_psnr"] = nlohmann::json::array();
    for (double v : m.band_psnr) j["band_psnr"].push_back(num(v));
    j["band_ssim"] = m.band_ssim;
    j["mpsnr"] = num(m.mpsnr);
    j["mssim"] = m.mssim ? nlohmann::json(*m.mssim) : nlohmann::json(nullptr);
    return j.dump(indent);
}

}  // namespace ttb
