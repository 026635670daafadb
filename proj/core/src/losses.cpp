#include "radocc/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace radocc {

namespace {

constexpr double kLogFloor = 1e-12;

// -log(max(x, floor)) and its derivative in x (zero where clamped).
double nlog(double x) { return -std::log(std::max(x, kLogFloor)); }
double nlog_grad(double x) { return x > kLogFloor ? -1.0 / x : 0.0; }

void check_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": size mismatch (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
  }
}

struct Softmaxed {
  std::size_t classes;
  std::size_t cells;
  std::vector<double> p;  // class-first
};

Softmaxed class_softmax(const Tensor& logits, std::span<const int> labels, const char* what) {
  if (logits.rank() < 2) throw std::invalid_argument(std::string(what) + ": logits rank < 2");
  Softmaxed s{logits.dim(0), logits.plane_size(), {}};
  check_same_size(labels.size(), s.cells, what);
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= s.classes) {
      throw std::invalid_argument(std::string(what) + ": label " + std::to_string(l) +
                                  " outside [0, " + std::to_string(s.classes) + ")");
    }
  }
  s.p.assign(logits.size(), 0.0);
  std::vector<double> col(s.classes);
  for (std::size_t i = 0; i < s.cells; ++i) {
    for (std::size_t k = 0; k < s.classes; ++k) col[k] = logits[k * s.cells + i];
    softmax_inplace(col);
    for (std::size_t k = 0; k < s.classes; ++k) s.p[k * s.cells + i] = col[k];
  }
  return s;
}

// dL/dz from dL/dp through the per-cell softmax.
std::vector<double> softmax_backward(const Softmaxed& s, const std::vector<double>& gp) {
  std::vector<double> gz(s.p.size());
  for (std::size_t i = 0; i < s.cells; ++i) {
    double dot = 0.0;
    for (std::size_t k = 0; k < s.classes; ++k) dot += s.p[k * s.cells + i] * gp[k * s.cells + i];
    for (std::size_t k = 0; k < s.classes; ++k) {
      const std::size_t idx = k * s.cells + i;
      gz[idx] = s.p[idx] * (gp[idx] - dot);
    }
  }
  return gz;
}

}  // namespace

LossValue focal_loss(std::span<const double> probs, std::span<const double> targets,
                     double alpha, double gamma) {
  check_same_size(probs.size(), targets.size(), "focal_loss");
  std::size_t positives = 0;
  for (double t : targets) positives += t >= 0.5 ? 1 : 0;
  const double norm = 1.0 / static_cast<double>(std::max<std::size_t>(1, positives));
  LossValue out{0.0, std::vector<double>(probs.size())};
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    if (targets[i] >= 0.5) {
      const double m = 1.0 - p;
      out.value += alpha * std::pow(m, gamma) * nlog(p);
      out.grad[i] = alpha * (-gamma * std::pow(m, gamma - 1.0) * nlog(p) +
                             std::pow(m, gamma) * nlog_grad(p));
    } else {
      const double m = 1.0 - p;
      out.value += (1.0 - alpha) * std::pow(p, gamma) * nlog(m);
      out.grad[i] = (1.0 - alpha) * (gamma * std::pow(p, gamma - 1.0) * nlog(m) -
                                     std::pow(p, gamma) * nlog_grad(m));
    }
    out.grad[i] *= norm;
  }
  out.value *= norm;
  return out;
}

LossValue l1_loss(std::span<const double> pred, std::span<const double> target,
                  std::size_t boxes) {
  check_same_size(pred.size(), target.size(), "l1_loss");
  const double norm = 1.0 / static_cast<double>(std::max<std::size_t>(1, boxes));
  LossValue out{0.0, std::vector<double>(pred.size())};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    out.value += std::abs(d);
    out.grad[i] = (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) * norm;
  }
  out.value *= norm;
  return out;
}

LossValue cross_entropy(const Tensor& logits, std::span<const int> labels) {
  const Softmaxed s = class_softmax(logits, labels, "cross_entropy");
  const double norm = 1.0 / static_cast<double>(s.cells);
  LossValue out{0.0, std::vector<double>(s.p.size())};
  for (std::size_t i = 0; i < s.cells; ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    // log-softmax directly from the logits keeps extreme logits exact.
    double mx = logits[i];
    for (std::size_t k = 1; k < s.classes; ++k) mx = std::max(mx, logits[k * s.cells + i]);
    double z = 0.0;
    for (std::size_t k = 0; k < s.classes; ++k) z += std::exp(logits[k * s.cells + i] - mx);
    out.value += -(logits[y * s.cells + i] - mx - std::log(z));
    for (std::size_t k = 0; k < s.classes; ++k) {
      const std::size_t idx = k * s.cells + i;
      out.grad[idx] = (s.p[idx] - (k == y ? 1.0 : 0.0)) * norm;
    }
  }
  out.value *= norm;
  return out;
}

LossValue scal_geo(const Tensor& logits, std::span<const int> labels) {
  const Softmaxed s = class_softmax(logits, labels, "scal_geo");
  const std::size_t n = s.cells;
  double inter = 0.0, sum_q = 0.0, sum_t = 0.0, spec_num = 0.0, sum_free = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double q = 1.0 - s.p[i];
    const double t = labels[i] != kOccFree ? 1.0 : 0.0;
    inter += q * t;
    sum_q += q;
    sum_t += t;
    spec_num += (1.0 - t) * s.p[i];
    sum_free += 1.0 - t;
  }
  LossValue out{0.0, std::vector<double>(s.p.size(), 0.0)};
  std::vector<double> gp(s.p.size(), 0.0);
  // Gradients accumulate with respect to q = 1 - p_empty, then p_empty.
  std::vector<double> gq(n, 0.0), g0(n, 0.0);
  if (sum_q > 0.0) {
    const double prec = inter / sum_q;
    out.value += nlog(prec);
    const double d = nlog_grad(prec);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = labels[i] != kOccFree ? 1.0 : 0.0;
      gq[i] += d * (t * sum_q - inter) / (sum_q * sum_q);
    }
  }
  if (sum_t > 0.0) {
    const double rec = inter / sum_t;
    out.value += nlog(rec);
    const double d = nlog_grad(rec);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = labels[i] != kOccFree ? 1.0 : 0.0;
      gq[i] += d * t / sum_t;
    }
  }
  if (sum_free > 0.0) {
    const double spec = spec_num / sum_free;
    out.value += nlog(spec);
    const double d = nlog_grad(spec);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = labels[i] != kOccFree ? 1.0 : 0.0;
      g0[i] += d * (1.0 - t) / sum_free;
    }
  }
  for (std::size_t i = 0; i < n; ++i) gp[i] = g0[i] - gq[i];
  out.grad = softmax_backward(s, gp);
  return out;
}

LossValue scal_sem(const Tensor& logits, std::span<const int> labels) {
  const Softmaxed s = class_softmax(logits, labels, "scal_sem");
  const std::size_t n = s.cells;
  LossValue out{0.0, {}};
  std::vector<double> gp(s.p.size(), 0.0);
  std::size_t count = 0;
  for (std::size_t c = 0; c < s.classes; ++c) {
    const double* p = s.p.data() + c * n;
    double* g = gp.data() + c * n;
    double inter = 0.0, sum_p = 0.0, sum_t = 0.0, spec_num = 0.0, sum_neg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<std::size_t>(labels[i]) == c ? 1.0 : 0.0;
      inter += p[i] * t;
      sum_p += p[i];
      sum_t += t;
      spec_num += (1.0 - p[i]) * (1.0 - t);
      sum_neg += 1.0 - t;
    }
    if (sum_t == 0.0) continue;
    ++count;
    if (sum_p > 0.0) {
      const double prec = inter / sum_p;
      out.value += nlog(prec);
      const double d = nlog_grad(prec);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<std::size_t>(labels[i]) == c ? 1.0 : 0.0;
        g[i] += d * (t * sum_p - inter) / (sum_p * sum_p);
      }
    }
    {
      const double rec = inter / sum_t;
      out.value += nlog(rec);
      const double d = nlog_grad(rec);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<std::size_t>(labels[i]) == c ? 1.0 : 0.0;
        g[i] += d * t / sum_t;
      }
    }
    if (sum_neg > 0.0) {
      const double spec = spec_num / sum_neg;
      out.value += nlog(spec);
      const double d = nlog_grad(spec);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<std::size_t>(labels[i]) == c ? 1.0 : 0.0;
        g[i] -= d * (1.0 - t) / sum_neg;
      }
    }
  }
  if (count > 0) {
    const double inv = 1.0 / static_cast<double>(count);
    out.value *= inv;
    for (auto& v : gp) v *= inv;
  }
  out.grad = softmax_backward(s, gp);
  return out;
}

OccLoss occupancy_loss(const Tensor& logits, std::span<const int> labels) {
  const LossValue ce = cross_entropy(logits, labels);
  const LossValue geo = scal_geo(logits, labels);
  const LossValue sem = scal_sem(logits, labels);
  OccLoss out;
  out.ce = ce.value;
  out.geo = geo.value;
  out.sem = sem.value;
  out.total = ce.value + geo.value + sem.value;
  out.grad.resize(ce.grad.size());
  for (std::size_t i = 0; i < out.grad.size(); ++i) {
    out.grad[i] = ce.grad[i] + geo.grad[i] + sem.grad[i];
  }
  return out;
}

LossValue bce_loss(std::span<const double> probs, std::span<const double> targets) {
  check_same_size(probs.size(), targets.size(), "bce_loss");
  if (probs.empty()) return {};
  const double norm = 1.0 / static_cast<double>(probs.size());
  LossValue out{0.0, std::vector<double>(probs.size())};
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i], t = targets[i];
    out.value += t * nlog(p) + (1.0 - t) * nlog(1.0 - p);
    out.grad[i] = (t * nlog_grad(p) - (1.0 - t) * nlog_grad(1.0 - p)) * norm;
  }
  out.value *= norm;
  return out;
}

LossValue dice_loss(std::span<const double> probs, std::span<const double> targets, double eps) {
  check_same_size(probs.size(), targets.size(), "dice_loss");
  double inter = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    inter += probs[i] * targets[i];
    sum += probs[i] + targets[i];
  }
  const double den = sum + eps;
  const double num = 2.0 * inter + eps;
  LossValue out{1.0 - num / den, std::vector<double>(probs.size())};
  for (std::size_t i = 0; i < probs.size(); ++i) {
    out.grad[i] = -(2.0 * targets[i] * den - num) / (den * den);
  }
  return out;
}

LossValue bce_dice(std::span<const double> probs, std::span<const double> targets) {
  LossValue a = bce_loss(probs, targets);
  const LossValue b = dice_loss(probs, targets);
  a.value += b.value;
  for (std::size_t i = 0; i < a.grad.size(); ++i) a.grad[i] += b.grad[i];
  return a;
}

DetLoss detection_loss(const BoxSet& preds, const BoxSet& gt, const LossWeights& w) {
  for (const auto& p : preds) {
    if (p.class_probs.size() != kNumDetClasses) {
      throw std::invalid_argument("detection_loss: predictions must carry class probabilities");
    }
  }
  DetLoss out;
  out.assignment = hungarian_match(preds, gt, w.lambda_cls, w.lambda_reg);
  std::vector<double> probs, targets(preds.size() * kNumDetClasses, 0.0);
  probs.reserve(targets.size());
  for (const auto& p : preds) probs.insert(probs.end(), p.class_probs.begin(), p.class_probs.end());
  std::vector<double> pred_params, gt_params;
  for (std::size_t g = 0; g < gt.size(); ++g) {
    const std::size_t q = out.assignment.row_to_col[g];
    targets[q * kNumDetClasses + static_cast<std::size_t>(gt[g].label)] = 1.0;
    const auto a = preds[q].params();
    const auto b = gt[g].params();
    pred_params.insert(pred_params.end(), a.begin(), a.end());
    gt_params.insert(gt_params.end(), b.begin(), b.end());
  }
  out.cls = focal_loss(probs, targets, w.focal_alpha, w.focal_gamma).value;
  out.reg = gt.empty() ? 0.0 : l1_loss(pred_params, gt_params, gt.size()).value;
  out.total = w.lambda_cls * out.cls + w.lambda_reg * out.reg;
  return out;
}

double total_loss(double det, double occ, double aux) { return det + occ + aux; }

}  // namespace radocc
