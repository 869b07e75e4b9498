#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "poseprep/detail/median.hpp"
#include "poseprep/error.hpp"
#include "poseprep/io.hpp"

namespace poseprep {

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) noexcept { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data[r * cols + c]; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

inline TensorFile matrix_to_tensor(const Matrix& m, TensorKind kind) {
  TensorFile t;
  t.kind = kind;
  t.dims = {static_cast<std::uint32_t>(m.rows), static_cast<std::uint32_t>(m.cols)};
  t.data.assign(m.data.begin(), m.data.end());
  return t;
}

inline TensorFile vector_to_tensor(const std::vector<double>& v, TensorKind kind) {
  TensorFile t;
  t.kind = kind;
  t.dims = {static_cast<std::uint32_t>(v.size())};
  t.data.assign(v.begin(), v.end());
  return t;
}

inline constexpr double kRowSumTolerance = 1e-4;

/// L x H x Q x K attention stack; rows over keys are softmax outputs.
class AttentionTensor {
 public:
  enum class Kind { EncoderSelf, Cross };

  AttentionTensor(Kind kind, std::size_t layers, std::size_t heads, std::size_t queries, std::size_t keys,
                  std::vector<float> data, Diagnostics* diag = nullptr)
      : kind_(kind), layers_(layers), heads_(heads), queries_(queries), keys_(keys), data_(std::move(data)) {
    if (layers_ == 0 || heads_ == 0 || queries_ == 0 || keys_ == 0)
      throw Error(Errc::InvalidArgument, "attention tensor dimensions must be positive");
    if (data_.size() != layers_ * heads_ * queries_ * keys_)
      throw Error(Errc::InvalidArgument, "attention data size does not match L*H*Q*K");
    if (kind_ == Kind::EncoderSelf && queries_ != keys_)
      throw Error(Errc::InvalidArgument, "encoder self-attention must be square (Q == K)");
    for (float v : data_)
      if (!(v >= 0.0f) || !std::isfinite(v)) throw Error(Errc::InvalidArgument, "attention values must be finite and >= 0");
    if (diag) check_rows(*diag);
  }

  static AttentionTensor from_file(const TensorFile& f, Diagnostics* diag = nullptr) {
    if (f.kind == TensorKind::Attribution) throw Error(Errc::WrongKind, "expected an attention tensor, got attribution");
    if (f.dims.size() != 4) throw Error(Errc::Format, "attention tensor must have 4 dims (L, H, Q, K)");
    return AttentionTensor(f.kind == TensorKind::EncoderSelf ? Kind::EncoderSelf : Kind::Cross, f.dims[0], f.dims[1],
                           f.dims[2], f.dims[3], f.data, diag);
  }

  TensorFile to_file() const {
    return {file_kind(),
            {static_cast<std::uint32_t>(layers_), static_cast<std::uint32_t>(heads_), static_cast<std::uint32_t>(queries_),
             static_cast<std::uint32_t>(keys_)},
            data_};
  }

  Kind kind() const noexcept { return kind_; }
  TensorKind file_kind() const noexcept { return kind_ == Kind::EncoderSelf ? TensorKind::EncoderSelf : TensorKind::Cross; }
  std::size_t layers() const noexcept { return layers_; }
  std::size_t heads() const noexcept { return heads_; }
  std::size_t queries() const noexcept { return queries_; }
  std::size_t keys() const noexcept { return keys_; }
  const std::vector<float>& data() const noexcept { return data_; }

  float at(std::size_t l, std::size_t h, std::size_t q, std::size_t k) const noexcept {
    return data_[((l * heads_ + h) * queries_ + q) * keys_ + k];
  }

  /// Reports every (layer, head, query) row whose sum is off by more than
  /// the tolerance. Returns the number of such rows.
  std::size_t check_rows(Diagnostics& diag) const {
    std::size_t bad = 0;
    const std::size_t rows = layers_ * heads_ * queries_;
    for (std::size_t r = 0; r < rows; ++r) {
      double s = 0.0;
      for (std::size_t k = 0; k < keys_; ++k) s += data_[r * keys_ + k];
      if (std::abs(s - 1.0) > kRowSumTolerance) ++bad;
    }
    if (bad) diag.warn("RowSum", std::to_string(bad) + " attention row(s) do not sum to 1");
    return bad;
  }

 private:
  Kind kind_;
  std::size_t layers_, heads_, queries_, keys_;
  std::vector<float> data_;
};

/// Q x K mean over the heads of one layer.
inline Matrix mean_over_heads(const AttentionTensor& t, std::size_t layer) {
  if (layer >= t.layers()) throw Error(Errc::IndexOutOfRange, "layer " + std::to_string(layer));
  Matrix m(t.queries(), t.keys());
  const std::size_t plane = t.queries() * t.keys();
  const float* base = t.data().data() + layer * t.heads() * plane;
  for (std::size_t h = 0; h < t.heads(); ++h)
    for (std::size_t i = 0; i < plane; ++i) m.data[i] += base[h * plane + i];
  const double inv = 1.0 / static_cast<double>(t.heads());
  for (auto& v : m.data) v *= inv;
  return m;
}

/// Q x K mean over the layers for one head.
inline Matrix mean_over_layers(const AttentionTensor& t, std::size_t head) {
  if (head >= t.heads()) throw Error(Errc::IndexOutOfRange, "head " + std::to_string(head));
  Matrix m(t.queries(), t.keys());
  const std::size_t plane = t.queries() * t.keys();
  for (std::size_t l = 0; l < t.layers(); ++l) {
    const float* p = t.data().data() + (l * t.heads() + head) * plane;
    for (std::size_t i = 0; i < plane; ++i) m.data[i] += p[i];
  }
  const double inv = 1.0 / static_cast<double>(t.layers());
  for (auto& v : m.data) v *= inv;
  return m;
}

/// Attention mass per frame, averaged over layers, heads and query tokens.
inline std::vector<double> frame_attention_histogram(const AttentionTensor& t) {
  if (t.kind() != AttentionTensor::Kind::Cross) throw Error(Errc::WrongKind, "histogram needs a cross-attention tensor");
  std::vector<double> h(t.keys(), 0.0);
  const std::size_t rows = t.layers() * t.heads() * t.queries();
  const float* p = t.data().data();
  for (std::size_t r = 0; r < rows; ++r, p += t.keys())
    for (std::size_t k = 0; k < t.keys(); ++k) h[k] += p[k];
  const double inv = 1.0 / static_cast<double>(rows);
  for (auto& v : h) v *= inv;
  return h;
}

// ---------------------------------------------------------------------------
// Spike detection

struct SpikeSpan {
  std::size_t start_frame = 0;
  std::size_t end_frame = 0;  // inclusive
  double mean_intensity = 0.0;
  double z_score = 0.0;       // mean robust z over the span
};

struct RobustScale {
  double center = 0.0;  // median
  double scale = 0.0;   // 0 when the distribution is degenerate
};

inline constexpr double kMadToSigma = 1.4826;
inline constexpr double kMeanAdToSigma = 1.2533;

/// Median and a robust spread: 1.4826 * MAD, falling back to
/// 1.2533 * mean absolute deviation from the median when more than half of
/// the values sit exactly on the median (MAD = 0).
inline RobustScale robust_scale(const std::vector<double>& h) {
  RobustScale rs;
  rs.center = detail::median(h);
  std::vector<double> dev(h.size());
  double mean_ad = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    dev[i] = std::abs(h[i] - rs.center);
    mean_ad += dev[i];
  }
  mean_ad /= static_cast<double>(h.size());
  const double mad = detail::median(std::move(dev));
  if (mad > 0.0) rs.scale = kMadToSigma * mad;
  else if (mean_ad > 0.0) rs.scale = kMeanAdToSigma * mean_ad;
  return rs;
}

/// Maximal runs of frames whose robust z-score reaches the threshold. A
/// constant histogram has no spread and yields no spans (reported as
/// DegenerateDistribution when a Diagnostics sink is given).
inline std::vector<SpikeSpan> detect_spikes(const std::vector<double>& h, double z_threshold = 2.0,
                                            std::size_t min_run = 1, Diagnostics* diag = nullptr) {
  if (h.size() < 2) throw Error(Errc::InvalidArgument, "spike detection needs at least two frames");
  if (min_run < 1) throw Error(Errc::InvalidArgument, "min_run must be at least 1");
  const auto rs = robust_scale(h);
  std::vector<SpikeSpan> spans;
  if (rs.scale == 0.0) {
    if (diag) diag->warn(std::string(to_string(Errc::DegenerateDistribution)), "histogram has zero spread");
    return spans;
  }
  std::size_t t = 0;
  while (t < h.size()) {
    if ((h[t] - rs.center) / rs.scale < z_threshold) {
      ++t;
      continue;
    }
    const std::size_t start = t;
    double sum = 0.0;
    while (t < h.size() && (h[t] - rs.center) / rs.scale >= z_threshold) sum += h[t++];
    const std::size_t len = t - start;
    if (len < min_run) continue;
    const double mean = sum / static_cast<double>(len);
    spans.push_back({start, t - 1, mean, (mean - rs.center) / rs.scale});
  }
  return spans;
}

// ---------------------------------------------------------------------------
// Attribution matrices

struct AttributionMatrix {
  std::vector<std::string> tokens;  // optional labels, one per row
  Matrix values;                    // tokens x frames
  std::optional<double> bleu1;
};

inline AttributionMatrix attribution_from_file(const TensorFile& f) {
  if (f.kind != TensorKind::Attribution) throw Error(Errc::WrongKind, "expected an attribution matrix");
  if (f.dims.size() != 2) throw Error(Errc::Format, "attribution matrix must have 2 dims");
  AttributionMatrix a;
  a.values = Matrix(f.dims[0], f.dims[1]);
  for (std::size_t i = 0; i < f.data.size(); ++i) {
    if (!std::isfinite(f.data[i])) throw Error(Errc::Format, "attribution values must be finite");
    a.values.data[i] = f.data[i];
  }
  return a;
}

/// Zeroes every value below `min_value`; the rest pass unchanged.
inline AttributionMatrix threshold_filter(AttributionMatrix a, double min_value = 0.3) {
  for (auto& v : a.values.data)
    if (v < min_value) v = 0.0;
  return a;
}

/// Bilinear resampling with aligned corners: output (0,0) and (R-1,C-1)
/// sample the source corners exactly. A single output row/column samples
/// the source midpoint.
inline Matrix resample_bilinear(const Matrix& src, std::size_t rows, std::size_t cols) {
  if (src.rows == 0 || src.cols == 0 || rows == 0 || cols == 0)
    throw Error(Errc::InvalidArgument, "resample needs non-empty shapes");
  auto coord = [](std::size_t i, std::size_t out, std::size_t in) {
    if (out == 1) return 0.5 * static_cast<double>(in - 1);
    return static_cast<double>(i) * static_cast<double>(in - 1) / static_cast<double>(out - 1);
  };
  Matrix dst(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const double y = coord(r, rows, src.rows);
    const auto y0 = static_cast<std::size_t>(std::floor(y));
    const auto y1 = std::min(y0 + 1, src.rows - 1);
    const double fy = y - static_cast<double>(y0);
    for (std::size_t c = 0; c < cols; ++c) {
      const double x = coord(c, cols, src.cols);
      const auto x0 = static_cast<std::size_t>(std::floor(x));
      const auto x1 = std::min(x0 + 1, src.cols - 1);
      const double fx = x - static_cast<double>(x0);
      const double top = src(y0, x0) + (src(y0, x1) - src(y0, x0)) * fx;
      const double bot = src(y1, x0) + (src(y1, x1) - src(y1, x0)) * fx;
      dst(r, c) = top + (bot - top) * fy;
    }
  }
  return dst;
}

/// Resamples each sample to rows x cols and takes the elementwise mean.
inline AttributionMatrix average_attributions(const std::vector<AttributionMatrix>& samples, std::size_t rows,
                                              std::size_t cols) {
  if (samples.empty()) throw Error(Errc::EmptyInput, "no attribution samples to average");
  AttributionMatrix out;
  out.values = Matrix(rows, cols);
  for (const auto& s : samples) {
    const Matrix r = (s.values.rows == rows && s.values.cols == cols) ? s.values : resample_bilinear(s.values, rows, cols);
    for (std::size_t i = 0; i < r.data.size(); ++i) out.values.data[i] += r.data[i];
  }
  const double inv = 1.0 / static_cast<double>(samples.size());
  for (auto& v : out.values.data) v *= inv;
  if (samples.size() == 1) out.tokens = samples.front().tokens;
  return out;
}

/// Keeps samples whose precomputed BLEU-1 reaches `min_bleu1`; samples
/// without a score are dropped.
inline std::vector<AttributionMatrix> select_by_bleu(std::vector<AttributionMatrix> samples, double min_bleu1) {
  std::erase_if(samples, [&](const AttributionMatrix& a) { return !a.bleu1 || *a.bleu1 < min_bleu1; });
  return samples;
}

}  // namespace poseprep
