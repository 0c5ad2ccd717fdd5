#pragma once

#include <bit>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "palmscat/fft.hpp"
#include "palmscat/grid.hpp"
#include "palmscat/image_io.hpp"

namespace palmscat {

/// Parameters of the directional wavelet bank. `scales` (J) and
/// `orientations` (p) set the bank layout; `sigma0`, `xi0` and `slant`
/// shape the mother wavelet (Gaussian width, center frequency in rad/pixel,
/// envelope anisotropy).
struct FilterBankConfig {
    int scales = 5;
    int orientations = 6;
    int size = 32;
    double sigma0 = 0.8;
    double xi0 = 3.0 * std::numbers::pi / 4.0;
    double slant = 0.5;
};

/// Frequency-domain filter bank: `psi_hat[j][l]` is the band-pass wavelet at
/// scale j and orientation l, `phi_hat` the Gaussian low-pass with unit DC
/// gain. Littlewood-Paley frame bounds are measured at build time.
struct FilterBank {
    FilterBankConfig config;
    std::vector<std::vector<CGrid>> psi_hat;
    Grid phi_hat;
    double lp_max = 0.0;
    double lp_min_annulus = 0.0;
};

struct LittlewoodPaleyStats {
    double lp_max = 0.0;
    double lp_min_annulus = 0.0;
};

namespace filterbank_detail {

// Signed frequency (rad/pixel) of DFT bin k on an n-point grid.
inline double bin_frequency(int k, int n) {
    const int s = (k <= n / 2) ? k : k - n;
    return 2.0 * std::numbers::pi * s / n;
}

// Periodized anisotropic Gaussian evaluated at frequency (wx, wy), centered
// at (cx, cy). The +-2 alias shifts account for the spectral wrap-around of
// a pixel-sampled envelope; beyond that the tails are negligible for the
// parameter ranges accepted here.
struct Envelope {
    double ux, uy;   // unit vector along the modulation direction
    double sigma;    // spatial Gaussian width
    double slant2;   // squared anisotropy ratio

    double periodized(double wx, double wy, double cx, double cy) const {
        constexpr int kAlias = 2;
        constexpr double two_pi = 2.0 * std::numbers::pi;
        double sum = 0.0;
        for (int ax = -kAlias; ax <= kAlias; ++ax) {
            for (int ay = -kAlias; ay <= kAlias; ++ay) {
                const double vx = wx + two_pi * ax - cx;
                const double vy = wy + two_pi * ay - cy;
                const double radial = vx * ux + vy * uy;
                const double tangential = -vx * uy + vy * ux;
                const double q =
                    sigma * sigma * (radial * radial + tangential * tangential / slant2);
                sum += std::exp(-0.5 * q);
            }
        }
        return sum;
    }
};

inline void validate(const FilterBankConfig& cfg) {
    if (cfg.scales < 1) throw std::invalid_argument("filter bank: scales must be >= 1");
    if (cfg.orientations < 1)
        throw std::invalid_argument("filter bank: orientations must be >= 1");
    if (cfg.size < 2 || !std::has_single_bit(static_cast<unsigned>(cfg.size)))
        throw std::invalid_argument("filter bank: size must be a power of two >= 2");
    if ((1 << cfg.scales) > cfg.size)
        throw std::invalid_argument("filter bank: 2^scales must not exceed the grid size");
    if (!(cfg.sigma0 > 0.0)) throw std::invalid_argument("filter bank: sigma0 must be > 0");
    if (!(cfg.xi0 > 0.0 && cfg.xi0 < std::numbers::pi))
        throw std::invalid_argument("filter bank: xi0 must lie in (0, pi)");
    if (!(cfg.slant > 0.0 && cfg.slant <= 1.0))
        throw std::invalid_argument("filter bank: slant must lie in (0, 1]");
}

// Symmetrized Littlewood-Paley sum of the band-pass part at every bin:
// 0.5 * sum_{j,l} (|psi(w)|^2 + |psi(-w)|^2).
inline Grid bandpass_lp_sum(const std::vector<std::vector<CGrid>>& psi, int n) {
    Grid sum(n, n, 0.0);
    for (const auto& row : psi) {
        for (const CGrid& f : row) {
            for (int r = 0; r < n; ++r) {
                for (int c = 0; c < n; ++c) {
                    const double a = std::norm(f(r, c));
                    const double b = std::norm(f((n - r) % n, (n - c) % n));
                    sum(r, c) += 0.5 * (a + b);
                }
            }
        }
    }
    return sum;
}

inline LittlewoodPaleyStats lp_stats(const std::vector<std::vector<CGrid>>& psi,
                                     const Grid& phi_hat, int scales) {
    const int n = phi_hat.rows();
    const Grid band = bandpass_lp_sum(psi, n);
    LittlewoodPaleyStats out;
    out.lp_max = 0.0;
    out.lp_min_annulus = std::numeric_limits<double>::infinity();
    const double lo = std::numbers::pi / (1 << scales);
    const double hi = std::numbers::pi * 0.75;
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            const double wx = bin_frequency(c, n);
            const double wy = bin_frequency(r, n);
            const double lp = band(r, c) + phi_hat(r, c) * phi_hat(r, c);
            out.lp_max = std::max(out.lp_max, lp);
            const double w = std::hypot(wx, wy);
            if (w >= lo && w <= hi) out.lp_min_annulus = std::min(out.lp_min_annulus, lp);
        }
    }
    if (!std::isfinite(out.lp_min_annulus)) out.lp_min_annulus = 0.0;
    return out;
}

}  // namespace filterbank_detail

/// Builds the Morlet bank directly on the discrete frequency grid.
///
/// Each band-pass filter is a periodized Gaussian bump centered at the
/// modulation frequency xi0/2^j along theta_l = pi*l/p, minus a scaled copy
/// of the DC-centered envelope so that the bin (0,0) response vanishes.
/// The low-pass is an isotropic Gaussian of width sigma0*2^(J-1) normalized
/// to unit DC gain. Finally all band-pass filters are rescaled by one global
/// scalar so the Littlewood-Paley sum stays within 1 everywhere (which makes
/// the wavelet layer non-expansive).
inline FilterBank build_filter_bank(const FilterBankConfig& cfg) {
    filterbank_detail::validate(cfg);
    const int n = cfg.size;
    const int J = cfg.scales;
    const int p = cfg.orientations;

    FilterBank bank;
    bank.config = cfg;
    bank.psi_hat.assign(J, std::vector<CGrid>(p));

    for (int j = 0; j < J; ++j) {
        const double sigma = cfg.sigma0 * (1 << j);
        const double xi = cfg.xi0 / (1 << j);
        for (int l = 0; l < p; ++l) {
            const double theta = std::numbers::pi * l / p;
            filterbank_detail::Envelope env{std::cos(theta), std::sin(theta), sigma,
                                            cfg.slant * cfg.slant};
            const double cx = xi * env.ux;
            const double cy = xi * env.uy;
            // DC correction constant: the grid's zero bin must vanish.
            const double k_dc =
                env.periodized(0.0, 0.0, cx, cy) / env.periodized(0.0, 0.0, 0.0, 0.0);
            CGrid f(n, n);
            for (int r = 0; r < n; ++r) {
                const double wy = filterbank_detail::bin_frequency(r, n);
                for (int c = 0; c < n; ++c) {
                    const double wx = filterbank_detail::bin_frequency(c, n);
                    f(r, c) = env.periodized(wx, wy, cx, cy) -
                              k_dc * env.periodized(wx, wy, 0.0, 0.0);
                }
            }
            bank.psi_hat[j][l] = std::move(f);
        }
    }

    const double sigma_phi = cfg.sigma0 * (1 << (J - 1));
    filterbank_detail::Envelope env_phi{1.0, 0.0, sigma_phi, 1.0};
    Grid phi(n, n);
    const double dc_gain = env_phi.periodized(0.0, 0.0, 0.0, 0.0);
    for (int r = 0; r < n; ++r) {
        const double wy = filterbank_detail::bin_frequency(r, n);
        for (int c = 0; c < n; ++c) {
            const double wx = filterbank_detail::bin_frequency(c, n);
            phi(r, c) = env_phi.periodized(wx, wy, 0.0, 0.0) / dc_gain;
        }
    }
    bank.phi_hat = std::move(phi);

    // Global rescale: the largest scalar c with
    //   c^2 * band(w) + phi(w)^2 <= 1  for every bin.
    const Grid band = filterbank_detail::bandpass_lp_sum(bank.psi_hat, n);
    double band_max = 0.0;
    for (double v : band) band_max = std::max(band_max, v);
    double c2 = std::numeric_limits<double>::infinity();
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            if (band(r, c) <= 1e-12 * band_max) continue;
            const double headroom = 1.0 - bank.phi_hat(r, c) * bank.phi_hat(r, c);
            c2 = std::min(c2, headroom / band(r, c));
        }
    }
    const double scale = std::isfinite(c2) ? std::sqrt(std::max(c2, 0.0)) * (1.0 - 1e-12) : 1.0;
    // Gaussian tails underflow into denormals, which cost 10-100x in the
    // convolution hot path; coefficients this small are flushed to zero.
    constexpr double kFlush = 1e-30;
    auto flushed = [](double v) { return std::abs(v) < kFlush ? 0.0 : v; };
    for (auto& row : bank.psi_hat)
        for (CGrid& f : row)
            for (auto& v : f)
                v = {flushed(v.real() * scale), flushed(v.imag() * scale)};
    for (auto& v : bank.phi_hat) v = flushed(v);

    const auto stats = filterbank_detail::lp_stats(bank.psi_hat, bank.phi_hat, J);
    bank.lp_max = stats.lp_max;
    bank.lp_min_annulus = stats.lp_min_annulus;
    return bank;
}

/// Recomputes the frame bounds from the stored grids. `lp_min_annulus` is
/// taken over bins with |w| in [pi/2^J, 3*pi/4], the band the wavelets are
/// expected to cover.
inline LittlewoodPaleyStats littlewood_paley_report(const FilterBank& bank) {
    return filterbank_detail::lp_stats(bank.psi_hat, bank.phi_hat, bank.config.scales);
}

/// Writes one min-max normalized grayscale image per filter part (spatial
/// real and imaginary parts of each wavelet, plus the low-pass) into `dir`.
/// Returns the number of files written.
inline int dump_filters(const FilterBank& bank, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("dump_filters: cannot create " + dir.string());
    int count = 0;
    for (int j = 0; j < bank.config.scales; ++j) {
        for (int l = 0; l < bank.config.orientations; ++l) {
            const CGrid spatial = fftshift(ifft2(bank.psi_hat[j][l]));
            const std::string stem =
                "psi_j" + std::to_string(j) + "_l" + std::to_string(l);
            write_pgm_normalized(dir / (stem + "_re.pgm"), real_part(spatial));
            ++count;
            Grid imag(spatial.rows(), spatial.cols());
            for (std::size_t i = 0; i < spatial.size(); ++i)
                imag.data()[i] = spatial.data()[i].imag();
            write_pgm_normalized(dir / (stem + "_im.pgm"), imag);
            ++count;
        }
    }
    const CGrid phi_spatial = fftshift(ifft2(to_complex(bank.phi_hat)));
    write_pgm_normalized(dir / "phi.pgm", real_part(phi_spatial));
    ++count;
    return count;
}

}  // namespace palmscat
