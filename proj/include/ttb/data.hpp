#pragma once

#include "ttb/tensor.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace ttb {

struct SynthSpec {
    Dims dims;
    /// R_1..R_{D+1}, unit ends.
    std::vector<std::size_t> true_ranks;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Synthetic {
    DenseTensor truth;
    TTCores cores;
};

/// Cores drawn i.i.d. N(0, 1), contracted into the ground truth.
Synthetic gen_synthetic(const SynthSpec& spec);

inline constexpr double kNoiselessSnr = std::numeric_limits<double>::infinity();

struct NoisyTensor {
    DenseTensor noisy;
    DenseTensor noise;
    /// 20 log10(||signal|| / ||noise||), +inf for zero noise.
    double realized_snr_db = kNoiselessSnr;
};

/// Gaussian noise rescaled so that 20 log10(||t|| / ||noise||) equals snr_db
/// to rounding. snr_db = +inf adds nothing.
NoisyTensor add_noise(const DenseTensor& t, double snr_db, std::uint64_t seed);

/// i.i.d. N(0, variance) noise added to every entry.
NoisyTensor add_noise_variance(const DenseTensor& t, double variance, std::uint64_t seed);

/// 20 log10(||signal|| / ||noise||).
double snr_db(const DenseTensor& signal, const DenseTensor& noise);

/// Each entry observed independently with probability 1 - missing_rate.
MaskTensor random_mask(const Dims& dims, double missing_rate, std::uint64_t seed);

/// Stripes of `width` whole columns (vertical) or rows, repeating every
/// `period`, starting at `offset`. The same stripes are removed in every band
/// (modes beyond the first two). An unset offset is drawn from the seed.
struct StripeSpec {
    std::size_t period = 3;
    std::size_t width = 1;
    std::optional<std::size_t> offset;
    bool vertical = true;
};
MaskTensor stripe_mask(const Dims& dims, const StripeSpec& spec, std::uint64_t seed);

/// ||truth - estimate||_F / ||truth||_F.
double rse(const DenseTensor& truth, const DenseTensor& estimate);

/// 20 log10(max(A) sqrt(numel) / ||A - Ahat||_F); +inf for identical inputs.
double psnr(const DenseTensor& img, const DenseTensor& img_hat);

/// Mean SSIM over channels. Images are (rows, cols) or (rows, cols, channels).
/// 11x11 Gaussian window (sigma 1.5), shrunk to the image if smaller, valid
/// positions only; K1 = 0.01, K2 = 0.03 and dynamic range L = max of both
/// images.
double ssim(const DenseTensor& img, const DenseTensor& img_hat);

struct MetricReport {
    double rse = 0.0;
    double psnr = 0.0;
    std::optional<double> ssim;
    std::vector<double> band_psnr;
    std::vector<double> band_ssim;
    double mpsnr = 0.0;
    std::optional<double> mssim;
};

/// RSE and PSNR over the whole tensor; for order-2/3 inputs also SSIM and the
/// per-band (last mode of an order-3 input) PSNR/SSIM with their means.
MetricReport compute_metrics(const DenseTensor& truth, const DenseTensor& estimate);

/// JSON object; infinite PSNR values serialize as null.
std::string metrics_json(const MetricReport& m, int indent = 2);

/// Slice of an order-3 tensor along its last mode.
DenseTensor band(const DenseTensor& t, std::size_t b);

}  // namespace ttb
