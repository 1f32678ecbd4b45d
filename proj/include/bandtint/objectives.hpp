#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bandtint/image.hpp"
#include "bandtint/spectral.hpp"
#include "bandtint/tensor.hpp"

namespace bandtint {

struct LossConfig {
  double alpha = 0.5;
  int window = 11;
  double sigma = 1.5;
  double c1 = 0.01 * 0.01;
  double c2 = 0.03 * 0.03;

  void validate() const;
};

/// Normalized Gaussian window, row-major window×window.
std::vector<double> gaussian_window(int size, double sigma);

template <class T>
Tensor<T> l1_loss(Graph<T>* g, const Tensor<T>& pred, const Tensor<T>& target);

/// Mean structural similarity over valid window positions and channels.
template <class T>
Tensor<T> ssim_loss_term(Graph<T>* g, const Tensor<T>& pred, const Tensor<T>& target,
                         const LossConfig& cfg);

/// alpha·L1 + (1 − alpha)·(1 − SSIM).
template <class T>
Tensor<T> hybrid_loss(Graph<T>* g, const Tensor<T>& pred, const Tensor<T>& target,
                      const LossConfig& cfg);

double ssim(const PlanarImage& pred, const PlanarImage& target, const LossConfig& cfg = {});

enum class ChannelSel { kR, kG, kB, kAll };

/// MSE at or below this is treated as zero (PSNR above 120 dB), which absorbs
/// float round-off from frequency splitting of otherwise identical images.
inline constexpr double kPsnrMseFloor = 1e-12;

/// 10·log10(1/MSE) on values clamped to [0,1]; +inf when MSE is (numerically)
/// zero.
double psnr(const PlanarImage& pred, const PlanarImage& target,
            ChannelSel channels = ChannelSel::kAll);

struct BandPsnr {
  double low = 0.0;
  double mid = 0.0;
  double high = 0.0;
};

struct MetricsReport {
  double psnr_r = 0.0;
  double psnr_g = 0.0;
  double psnr_b = 0.0;
  /// Joint-MSE PSNR over all channels.
  double psnr_avg = 0.0;
  double ssim = 0.0;
  std::optional<BandPsnr> bands;
};

MetricsReport channel_report(const PlanarImage& pred, const PlanarImage& target,
                             const LossConfig& cfg = {});

/// Channel report plus per-band PSNR. Both images are split with `spec` and
/// every band is compared after the display mapping v·0.5 + 0.5.
MetricsReport band_report(const PlanarImage& pred, const PlanarImage& target,
                          const BandSpec& spec, const LossConfig& cfg = {});

/// Formats a dB value; +inf becomes "inf".
std::string format_db(double value, int precision = 2);

/// JSON value for a dB figure: a number, or the string "inf".
nlohmann::json db_json(double value);
nlohmann::json report_json(const MetricsReport& report);

struct TableRow {
  std::string label;
  MetricsReport report;
};

/// "Model | Avg PSNR | Low-Freq | Mid-Freq | High-Freq | Δ" where Δ is the
/// Avg PSNR difference to the first row.
std::string band_table(const std::vector<TableRow>& rows);

/// "label | PSNR_R | PSNR_G | PSNR_B".
std::string channel_table(const std::vector<TableRow>& rows);

}  // namespace bandtint
