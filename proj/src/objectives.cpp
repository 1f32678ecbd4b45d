#include "bandtint/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "bandtint/ops.hpp"

namespace bandtint {
namespace {

void require_same_image(const PlanarImage& a, const PlanarImage& b, const char* what) {
  if (a.channels() != b.channels() || !a.same_extent(b))
    throw shape_error(std::string(what) + ": image shapes differ (" +
                      std::to_string(a.channels()) + "x" + std::to_string(a.height()) + "x" +
                      std::to_string(a.width()) + " vs " + std::to_string(b.channels()) +
                      "x" + std::to_string(b.height()) + "x" + std::to_string(b.width()) + ")");
}

double mse_to_psnr(double mse) {
  if (mse <= kPsnrMseFloor) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace

void LossConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw invalid_argument("alpha must lie in [0, 1], got " + std::to_string(alpha));
  if (window < 1 || window % 2 == 0) throw invalid_argument("SSIM window must be odd");
  if (!(sigma > 0.0)) throw invalid_argument("SSIM sigma must be positive");
}

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(size) * size);
  const double c = (size - 1) / 2.0;
  double total = 0.0;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double d2 = (y - c) * (y - c) + (x - c) * (x - c);
      const double v = std::exp(-d2 / (2.0 * sigma * sigma));
      w[static_cast<std::size_t>(y) * size + x] = v;
      total += v;
    }
  for (auto& v : w) v /= total;
  return w;
}

template <class T>
Tensor<T> l1_loss(Graph<T>* g, const Tensor<T>& pred, const Tensor<T>& target) {
  return ops::mean_abs_diff(g, pred, target);
}

template <class T>
Tensor<T> ssim_loss_term(Graph<T>* g, const Tensor<T>& pred, const Tensor<T>& target,
                         const LossConfig& cfg) {
  cfg.validate();
  if (pred.shape() != target.shape())
    throw shape_error("ssim: shape mismatch " + shape_string(pred.shape()) + " vs " +
                      shape_string(target.shape()));
  if (pred.rank() != 3) throw shape_error("ssim: inputs must be [C,H,W]");
  const auto k = static_cast<std::size_t>(cfg.window);
  if (pred.dim(1) < k || pred.dim(2) < k)
    throw shape_error("ssim: image " + std::to_string(pred.dim(1)) + "x" +
                      std::to_string(pred.dim(2)) + " smaller than the " +
                      std::to_string(cfg.window) + "x" + std::to_string(cfg.window) + " window");
  const auto wd = gaussian_window(cfg.window, cfg.sigma);
  const std::vector<T> win(wd.begin(), wd.end());
  const T c1 = static_cast<T>(cfg.c1), c2 = static_cast<T>(cfg.c2);
  auto filter = [&](const Tensor<T>& x) {
    return ops::depthwise_filter<T>(g, x, win, cfg.window);
  };
  const auto mu_p = filter(pred);
  const auto mu_t = filter(target);
  const auto mu_pp = ops::mul(g, mu_p, mu_p);
  const auto mu_tt = ops::mul(g, mu_t, mu_t);
  const auto mu_pt = ops::mul(g, mu_p, mu_t);
  const auto var_p = ops::sub(g, filter(ops::mul(g, pred, pred)), mu_pp);
  const auto var_t = ops::sub(g, filter(ops::mul(g, target, target)), mu_tt);
  const auto cov = ops::sub(g, filter(ops::mul(g, pred, target)), mu_pt);
  const auto num = ops::mul(g, ops::affine(g, mu_pt, T(2), c1), ops::affine(g, cov, T(2), c2));
  const auto den = ops::mul(g, ops::affine(g, ops::add(g, mu_pp, mu_tt), T(1), c1),
                            ops::affine(g, ops::add(g, var_p, var_t), T(1), c2));
  return ops::mean(g, ops::div(g, num, den));
}

template <class T>
Tensor<T> hybrid_loss(Graph<T>* g, const Tensor<T>& pred, const Tensor<T>& target,
                      const LossConfig& cfg) {
  cfg.validate();
  const T a = static_cast<T>(cfg.alpha);
  const auto l1 = l1_loss(g, pred, target);
  const auto s = ssim_loss_term(g, pred, target, cfg);
  return ops::add(g, ops::affine(g, l1, a, T(0)), ops::affine(g, s, -(T(1) - a), T(1) - a));
}

double ssim(const PlanarImage& pred, const PlanarImage& target, const LossConfig& cfg) {
  require_same_image(pred, target, "ssim");
  return ssim_loss_term<double>(nullptr, to_tensor<double>(pred), to_tensor<double>(target),
                                cfg)
      .item();
}

double psnr(const PlanarImage& pred, const PlanarImage& target, ChannelSel channels) {
  require_same_image(pred, target, "psnr");
  int c_begin = 0, c_end = pred.channels();
  if (channels != ChannelSel::kAll) {
    if (pred.channels() != 3) throw invalid_argument("psnr: channel selection needs RGB images");
    c_begin = static_cast<int>(channels);
    c_end = c_begin + 1;
  }
  const std::size_t n = pred.plane_size();
  double acc = 0.0;
  for (int c = c_begin; c < c_end; ++c)
    for (std::size_t i = 0; i < n; ++i) {
      const double p = std::clamp(pred.planes()[c * n + i], 0.0f, 1.0f);
      const double t = std::clamp(target.planes()[c * n + i], 0.0f, 1.0f);
      acc += (p - t) * (p - t);
    }
  return mse_to_psnr(acc / (static_cast<double>(n) * (c_end - c_begin)));
}

MetricsReport channel_report(const PlanarImage& pred, const PlanarImage& target,
                             const LossConfig& cfg) {
  require_same_image(pred, target, "channel_report");
  if (pred.channels() != 3) throw invalid_argument("channel_report needs RGB images");
  MetricsReport r;
  r.psnr_r = psnr(pred, target, ChannelSel::kR);
  r.psnr_g = psnr(pred, target, ChannelSel::kG);
  r.psnr_b = psnr(pred, target, ChannelSel::kB);
  r.psnr_avg = psnr(pred, target, ChannelSel::kAll);
  r.ssim = ssim(clamp01(pred), clamp01(target), cfg);
  return r;
}

MetricsReport band_report(const PlanarImage& pred, const PlanarImage& target,
                          const BandSpec& spec, const LossConfig& cfg) {
  auto r = channel_report(pred, target, cfg);
  const auto bp = split_bands(pred, spec);
  const auto bt = split_bands(target, spec);
  BandPsnr bands;
  bands.low = psnr(display_map(bp.low), display_map(bt.low));
  bands.mid = psnr(display_map(bp.mid), display_map(bt.mid));
  bands.high = psnr(display_map(bp.high), display_map(bt.high));
  r.bands = bands;
  return r;
}

std::string format_db(double value, int precision) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return fmt::format("{:.{}f}", value, precision);
}

nlohmann::json db_json(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return value;
}

nlohmann::json report_json(const MetricsReport& report) {
  nlohmann::json j = {
      {"psnr_r", db_json(report.psnr_r)},   {"psnr_g", db_json(report.psnr_g)},
      {"psnr_b", db_json(report.psnr_b)},   {"psnr_avg", db_json(report.psnr_avg)},
      {"ssim", report.ssim},
  };
  if (report.bands) {
    j["bands"] = {{"low", db_json(report.bands->low)},
                  {"mid", db_json(report.bands->mid)},
                  {"high", db_json(report.bands->high)}};
    j["band_psnr_mapping"] = "v*0.5+0.5";
  }
  return j;
}

std::string band_table(const std::vector<TableRow>& rows) {
  std::string out = fmt::format("{:<16}{:>10}{:>10}{:>10}{:>11}{:>8}\n", "Model", "Avg PSNR",
                                "Low-Freq", "Mid-Freq", "High-Freq", "Δ");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i].report;
    const auto band = [&](double BandPsnr::*field) {
      return r.bands ? format_db((*r.bands).*field) : std::string("-");
    };
    std::string delta = "-";
    if (i > 0) {
      const double d = r.psnr_avg - rows[0].report.psnr_avg;
      delta = std::isnan(d) ? "nan" : (d >= 0 ? "+" : "") + format_db(d);
    }
    out += fmt::format("{:<16}{:>10}{:>10}{:>10}{:>11}{:>8}\n", rows[i].label,
                       format_db(r.psnr_avg), band(&BandPsnr::low), band(&BandPsnr::mid),
                       band(&BandPsnr::high), delta);
  }
  return out;
}

std::string channel_table(const std::vector<TableRow>& rows) {
  std::string out = fmt::format("{:<16}{:>10}{:>10}{:>10}\n", "", "PSNR_R", "PSNR_G", "PSNR_B");
  for (const auto& row : rows)
    out += fmt::format("{:<16}{:>10}{:>10}{:>10}\n", row.label, format_db(row.report.psnr_r),
                       format_db(row.report.psnr_g), format_db(row.report.psnr_b));
  return out;
}

template Tensor<float> l1_loss(Graph<float>*, const Tensor<float>&, const Tensor<float>&);
template Tensor<double> l1_loss(Graph<double>*, const Tensor<double>&, const Tensor<double>&);
template Tensor<float> ssim_loss_term(Graph<float>*, const Tensor<float>&, const Tensor<float>&,
                                      const LossConfig&);
template Tensor<double> ssim_loss_term(Graph<double>*, const Tensor<double>&,
                                       const Tensor<double>&, const LossConfig&);
template Tensor<float> hybrid_loss(Graph<float>*, const Tensor<float>&, const Tensor<float>&,
                                   const LossConfig&);
template Tensor<double> hybrid_loss(Graph<double>*, const Tensor<double>&,
                                    const Tensor<double>&, const LossConfig&);

}  // namespace bandtint
