#include "meta_models.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "error.hpp"
#include "rng.hpp"

namespace segmeta {

using nlohmann::json;

const char* task_name(MetaTask t) { return t == MetaTask::classify_fp ? "fp" : "iou"; }

MetaTask task_from_name(const std::string& s) {
    if (s == "fp") return MetaTask::classify_fp;
    if (s == "iou") return MetaTask::regress_iou;
    fail("HeaderMalformed", "unknown meta task '" + s + "'");
}

const char* model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::linear: return "linear";
        case ModelKind::logistic: return "logistic";
        case ModelKind::gbt: return "gbt";
        case ModelKind::mlp: return "mlp";
    }
    return "";
}

ModelKind model_kind_from_name(const std::string& s) {
    if (s == "linear") return ModelKind::linear;
    if (s == "logistic") return ModelKind::logistic;
    if (s == "gbt") return ModelKind::gbt;
    if (s == "mlp") return ModelKind::mlp;
    fail("HeaderMalformed", "unknown model kind '" + s + "'");
}

const char* penalty_name(PenaltyKind p) {
    switch (p) {
        case PenaltyKind::none: return "none";
        case PenaltyKind::l1: return "l1";
        case PenaltyKind::l2: return "l2";
    }
    return "";
}

PenaltyKind penalty_from_name(const std::string& s) {
    if (s == "none") return PenaltyKind::none;
    if (s == "l1") return PenaltyKind::l1;
    if (s == "l2") return PenaltyKind::l2;
    fail("HeaderMalformed", "unknown penalty '" + s + "'");
}

double Tree::eval(const double* x) const {
    int i = 0;
    while (nodes[i].feature >= 0) i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left
                                                                                : nodes[i].right;
    return nodes[i].value;
}

namespace {

double sigmoid(double z) { return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

// log(1 + e^z), overflow-safe
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

struct DesignMatrix {
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<double> x;  // n x d, standardized

    const double* row(std::size_t i) const { return x.data() + i * d; }
};

std::vector<double> task_targets(const MetricsDataset& data, MetaTask task) {
    if (!data.has_targets) fail("InsufficientData", "training data has no targets");
    std::vector<double> t(data.rows());
    for (std::size_t i = 0; i < data.rows(); ++i)
        t[i] = task == MetaTask::classify_fp ? static_cast<double>(data.target_fp[i])
                                             : data.target_iou[i];
    return t;
}

// Selects the requested subset, drops constant columns and computes
// training-split standardization statistics.
void fit_standardization(const MetricsDataset& data, const std::vector<std::string>& subset,
                         MetaModel& m) {
    m.schema = data.feature_names;
    std::vector<int> candidates;
    if (subset.empty()) {
        candidates.resize(data.cols());
        std::iota(candidates.begin(), candidates.end(), 0);
    } else {
        for (const std::string& name : subset) {
            int idx = data.feature_index(name);
            if (idx < 0) fail("SchemaMismatch", "feature '" + name + "' not in the dataset");
            candidates.push_back(idx);
        }
    }
    const std::size_t n = data.rows();
    for (int col : candidates) {
        double lo = data.at(0, col), hi = lo;
        for (std::size_t i = 0; i < n; ++i) {
            double v = data.at(i, col);
            if (!std::isfinite(v)) fail("NonfiniteFeature", "feature '" + data.feature_names[col] +
                                                                "' contains NaN/Inf");
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (lo == hi) continue;  // constant column carries no information
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += data.at(i, col);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double dlt = data.at(i, col) - mean;
            var += dlt * dlt;
        }
        var /= static_cast<double>(n);
        m.active.push_back(col);
        m.mean.push_back(mean);
        m.stddev.push_back(std::sqrt(var));
    }
}

DesignMatrix standardize(const MetricsDataset& data, const MetaModel& m) {
    DesignMatrix dm;
    dm.n = data.rows();
    dm.d = m.active.size();
    dm.x.resize(dm.n * dm.d);
    for (std::size_t i = 0; i < dm.n; ++i)
        for (std::size_t j = 0; j < dm.d; ++j) {
            double v = data.at(i, m.active[j]);
            if (!std::isfinite(v)) fail("NonfiniteFeature", "row " + std::to_string(i) +
                                                                " contains NaN/Inf");
            dm.x[i * dm.d + j] = (v - m.mean[j]) / m.stddev[j];
        }
    return dm;
}

// Cholesky solve of a symmetric positive definite system; `a` is destroyed.
std::vector<double> solve_spd(std::vector<double> a, std::vector<double> b, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
        double diag = a[k * n + k];
        for (std::size_t j = 0; j < k; ++j) diag -= a[k * n + j] * a[k * n + j];
        if (diag <= 0.0) fail("NonfiniteFeature", "normal equations are not positive definite");
        diag = std::sqrt(diag);
        a[k * n + k] = diag;
        for (std::size_t i = k + 1; i < n; ++i) {
            double v = a[i * n + k];
            for (std::size_t j = 0; j < k; ++j) v -= a[i * n + j] * a[k * n + j];
            a[i * n + k] = v / diag;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {  // forward
        double v = b[i];
        for (std::size_t j = 0; j < i; ++j) v -= a[i * n + j] * b[j];
        b[i] = v / a[i * n + i];
    }
    for (std::size_t ii = n; ii-- > 0;) {  // backward
        double v = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j) v -= a[j * n + ii] * b[j];
        b[ii] = v / a[ii * n + ii];
    }
    return b;
}

void fit_linear_closed_form(const DesignMatrix& x, const std::vector<double>& y, double l2,
                            MetaModel& m) {
    const std::size_t d = x.d, n = x.n;
    const std::size_t dim = d + 1;  // bias last
    std::vector<double> a(dim * dim, 0.0), rhs(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x.row(i);
        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = 0; q <= p; ++q) a[p * dim + q] += xi[p] * xi[q];
            a[p * dim + d] += xi[p];
            rhs[p] += xi[p] * y[i];
        }
        rhs[d] += y[i];
    }
    a[d * dim + d] = static_cast<double>(n);
    for (std::size_t p = 0; p < dim; ++p)
        for (std::size_t q = p + 1; q < dim; ++q) a[p * dim + q] = a[q * dim + p];
    const double jitter = 1e-8;
    for (std::size_t p = 0; p < d; ++p) a[p * dim + p] += jitter + l2 * static_cast<double>(n);
    a[d * dim + d] += jitter;
    std::vector<double> w = solve_spd(std::move(a), std::move(rhs), dim);
    m.weights.assign(w.begin(), w.begin() + d);
    m.bias = w[d];
}

struct GdState {
    std::vector<double> w;
    double b = 0.0;
};

// Full-batch proximal gradient descent with backtracking. `smooth` returns
// the smooth part of the loss and fills the gradient; the l1 term is
// handled by soft-thresholding, l2 inside `smooth`.
template <typename SmoothFn>
GdState gradient_descent(std::size_t d, const SmoothFn& smooth, const Penalty& penalty,
                         int max_iterations, double tolerance) {
    GdState s;
    s.w.assign(d, 0.0);
    auto l1_term = [&](const std::vector<double>& w) {
        if (penalty.kind != PenaltyKind::l1) return 0.0;
        double sum = 0.0;
        for (double v : w) sum += std::abs(v);
        return penalty.lambda * sum;
    };
    std::vector<double> gw(d), trial_w(d);
    double gb = 0.0;
    double loss = smooth(s.w, s.b, &gw, &gb);
    double obj = loss + l1_term(s.w);
    double lr = 1.0;
    for (int iter = 0; iter < max_iterations; ++iter) {
        bool accepted = false;
        double trial_b = s.b, trial_obj = obj;
        for (int back = 0; back < 60; ++back) {
            for (std::size_t j = 0; j < d; ++j) {
                double v = s.w[j] - lr * gw[j];
                if (penalty.kind == PenaltyKind::l1) {
                    double shrink = lr * penalty.lambda;
                    v = v > shrink ? v - shrink : (v < -shrink ? v + shrink : 0.0);
                }
                trial_w[j] = v;
            }
            trial_b = s.b - lr * gb;
            trial_obj = smooth(trial_w, trial_b, nullptr, nullptr) + l1_term(trial_w);
            double step_sq = (trial_b - s.b) * (trial_b - s.b);
            for (std::size_t j = 0; j < d; ++j)
                step_sq += (trial_w[j] - s.w[j]) * (trial_w[j] - s.w[j]);
            if (trial_obj <= obj - 1e-4 * step_sq / lr || step_sq == 0.0) {
                accepted = true;
                break;
            }
            lr *= 0.5;
        }
        if (!accepted) break;
        double displacement = (trial_b - s.b) * (trial_b - s.b);
        for (std::size_t j = 0; j < d; ++j)
            displacement += (trial_w[j] - s.w[j]) * (trial_w[j] - s.w[j]);
        displacement = std::sqrt(displacement) / lr;  // generalized gradient norm
        s.w.swap(trial_w);
        s.b = trial_b;
        obj = trial_obj;
        if (displacement < tolerance) break;
        loss = smooth(s.w, s.b, &gw, &gb);
        obj = loss + l1_term(s.w);
        lr = std::min(lr * 2.0, 1e6);
    }
    return s;
}

void fit_logistic(const DesignMatrix& x, const std::vector<double>& t, const TrainConfig& cfg,
                  MetaModel& m) {
    const std::size_t n = x.n, d = x.d;
    const double l2 = cfg.penalty.kind == PenaltyKind::l2 ? cfg.penalty.lambda : 0.0;
    auto smooth = [&](const std::vector<double>& w, double b, std::vector<double>* gw,
                      double* gb) {
        if (gw) {
            std::fill(gw->begin(), gw->end(), 0.0);
            *gb = 0.0;
        }
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double* xi = x.row(i);
            double z = b;
            for (std::size_t j = 0; j < d; ++j) z += w[j] * xi[j];
            loss += softplus(z) - t[i] * z;
            if (gw) {
                double delta = sigmoid(z) - t[i];
                for (std::size_t j = 0; j < d; ++j) (*gw)[j] += delta * xi[j];
                *gb += delta;
            }
        }
        loss /= static_cast<double>(n);
        double reg = 0.0;
        for (double v : w) reg += v * v;
        loss += 0.5 * l2 * reg;
        if (gw) {
            for (std::size_t j = 0; j < d; ++j)
                (*gw)[j] = (*gw)[j] / static_cast<double>(n) + l2 * w[j];
            *gb /= static_cast<double>(n);
        }
        return loss;
    };
    GdState s = gradient_descent(d, smooth, cfg.penalty, cfg.max_iterations, cfg.tolerance);
    m.weights = std::move(s.w);
    m.bias = s.b;
}

void fit_linear_l1(const DesignMatrix& x, const std::vector<double>& y, const TrainConfig& cfg,
                   MetaModel& m) {
    const std::size_t n = x.n, d = x.d;
    auto smooth = [&](const std::vector<double>& w, double b, std::vector<double>* gw,
                      double* gb) {
        if (gw) {
            std::fill(gw->begin(), gw->end(), 0.0);
            *gb = 0.0;
        }
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double* xi = x.row(i);
            double z = b;
            for (std::size_t j = 0; j < d; ++j) z += w[j] * xi[j];
            double r = z - y[i];
            loss += 0.5 * r * r;
            if (gw) {
                for (std::size_t j = 0; j < d; ++j) (*gw)[j] += r * xi[j];
                *gb += r;
            }
        }
        loss /= static_cast<double>(n);
        if (gw) {
            for (std::size_t j = 0; j < d; ++j) (*gw)[j] /= static_cast<double>(n);
            *gb /= static_cast<double>(n);
        }
        return loss;
    };
    GdState s = gradient_descent(d, smooth, cfg.penalty, cfg.max_iterations, cfg.tolerance);
    m.weights = std::move(s.w);
    m.bias = s.b;
}

// ---- gradient boosted trees ----

struct TreeBuilder {
    const DesignMatrix& x;
    const std::vector<double>& residual;
    int max_depth;
    Tree tree;
    std::vector<std::vector<int>> leaf_samples;  // node index -> samples (leaves only)

    int build(std::vector<int> idx, int depth) {
        double sum = 0.0;
        for (int i : idx) sum += residual[i];
        const double mean = sum / static_cast<double>(idx.size());

        int best_feature = -1;
        double best_threshold = 0.0, best_gain = 1e-12;
        if (depth < max_depth && idx.size() >= 2) {
            std::vector<std::pair<double, int>> order(idx.size());
            for (std::size_t k = 0; k < idx.size(); ++k)
                order[k] = {0.0, idx[k]};
            for (std::size_t j = 0; j < x.d; ++j) {
                for (auto& [v, i] : order) v = x.row(i)[j];
                std::sort(order.begin(), order.end());
                double left_sum = 0.0;
                for (std::size_t k = 0; k + 1 < order.size(); ++k) {
                    left_sum += residual[order[k].second];
                    if (order[k].first == order[k + 1].first) continue;
                    double nl = static_cast<double>(k + 1);
                    double nr = static_cast<double>(order.size() - k - 1);
                    double right_sum = sum - left_sum;
                    double gain = left_sum * left_sum / nl + right_sum * right_sum / nr -
                                  sum * sum / static_cast<double>(order.size());
                    if (gain > best_gain) {
                        best_gain = gain;
                        best_feature = static_cast<int>(j);
                        best_threshold = 0.5 * (order[k].first + order[k + 1].first);
                    }
                }
            }
        }

        int node = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        leaf_samples.emplace_back();
        if (best_feature < 0) {
            tree.nodes[node].value = mean;
            leaf_samples[node] = std::move(idx);
            return node;
        }
        std::vector<int> left, right;
        for (int i : idx)
            (x.row(i)[best_feature] <= best_threshold ? left : right).push_back(i);
        int left_node = build(std::move(left), depth + 1);
        int right_node = build(std::move(right), depth + 1);
        tree.nodes[node].feature = best_feature;
        tree.nodes[node].threshold = best_threshold;
        tree.nodes[node].left = left_node;
        tree.nodes[node].right = right_node;
        return node;
    }
};

void fit_gbt(const DesignMatrix& x, const std::vector<double>& t, const TrainConfig& cfg,
             MetaModel& m) {
    const std::size_t n = x.n;
    const bool classify = cfg.task == MetaTask::classify_fp;
    m.gbt_learning_rate = cfg.gbt_learning_rate;

    double target_mean = 0.0;
    for (double v : t) target_mean += v;
    target_mean /= static_cast<double>(n);
    if (classify) {
        double p = std::clamp(target_mean, 1e-6, 1.0 - 1e-6);
        m.gbt_base = std::log(p / (1.0 - p));
    } else {
        m.gbt_base = target_mean;
    }

    std::vector<double> score(n, m.gbt_base);
    auto loss_of = [&](const std::vector<double>& f) {
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            loss += classify ? softplus(f[i]) - t[i] * f[i] : 0.5 * (f[i] - t[i]) * (f[i] - t[i]);
        return loss / static_cast<double>(n);
    };
    m.stage_losses.push_back(loss_of(score));

    std::vector<double> residual(n), contribution(n), trial(n);
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    for (int stage = 0; stage < cfg.gbt_stages; ++stage) {
        for (std::size_t i = 0; i < n; ++i)
            residual[i] = classify ? t[i] - sigmoid(score[i]) : t[i] - score[i];
        TreeBuilder builder{x, residual, cfg.gbt_depth, {}, {}};
        builder.build(all, 0);
        Tree tree = std::move(builder.tree);
        if (classify) {
            // Newton leaf updates for the logistic loss
            for (std::size_t node = 0; node < tree.nodes.size(); ++node) {
                if (tree.nodes[node].feature >= 0) continue;
                double num = 0.0, den = 0.0;
                for (int i : builder.leaf_samples[node]) {
                    double p = sigmoid(score[i]);
                    num += t[i] - p;
                    den += p * (1.0 - p);
                }
                tree.nodes[node].value = num / std::max(den, 1e-12);
            }
        }
        for (std::size_t i = 0; i < n; ++i)
            contribution[i] = cfg.gbt_learning_rate * tree.eval(x.row(i));
        // Halve the stage until the training loss does not increase; a
        // least-squares stage never triggers this.
        double scale = 1.0;
        double new_loss = 0.0;
        for (int attempt = 0;; ++attempt) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = score[i] + scale * contribution[i];
            new_loss = loss_of(trial);
            if (new_loss <= m.stage_losses.back() + 1e-12 || attempt >= 40) break;
            scale *= 0.5;
        }
        if (scale != 1.0)
            for (TreeNode& node : tree.nodes)
                if (node.feature < 0) node.value *= scale;
        score.swap(trial);
        m.stage_losses.push_back(new_loss);
        m.trees.push_back(std::move(tree));
    }
}

// ---- shallow network ----

struct MlpParams {
    std::vector<double> w_in, b_in, w_out;
    double b_out = 0.0;
};

void fit_mlp(const DesignMatrix& x, const std::vector<double>& t, const TrainConfig& cfg,
             MetaModel& m) {
    const std::size_t n = x.n, d = x.d;
    const int h = cfg.mlp_hidden;
    const bool classify = cfg.task == MetaTask::classify_fp;
    const double l2 = cfg.mlp_l2;

    MlpParams p;
    Rng rng(mix64(cfg.seed, 0x6d6c70));
    const double r_in = d > 0 ? 1.0 / std::sqrt(static_cast<double>(d)) : 1.0;
    const double r_out = 1.0 / std::sqrt(static_cast<double>(h));
    p.w_in.resize(static_cast<std::size_t>(h) * d);
    for (double& v : p.w_in) v = rng.uniform(-r_in, r_in);
    p.b_in.assign(h, 0.0);
    p.w_out.resize(h);
    for (double& v : p.w_out) v = rng.uniform(-r_out, r_out);

    std::vector<double> hidden(static_cast<std::size_t>(n) * h);
    auto objective = [&](const MlpParams& q, MlpParams* grad) {
        if (grad) {
            grad->w_in.assign(q.w_in.size(), 0.0);
            grad->b_in.assign(q.b_in.size(), 0.0);
            grad->w_out.assign(q.w_out.size(), 0.0);
            grad->b_out = 0.0;
        }
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double* xi = x.row(i);
            double* a = hidden.data() + i * h;
            double z2 = q.b_out;
            for (int u = 0; u < h; ++u) {
                const double* wu = q.w_in.data() + static_cast<std::size_t>(u) * d;
                double z1 = q.b_in[u];
                for (std::size_t j = 0; j < d; ++j) z1 += wu[j] * xi[j];
                a[u] = std::tanh(z1);
                z2 += q.w_out[u] * a[u];
            }
            if (classify) {
                loss += softplus(z2) - t[i] * z2;
            } else {
                loss += 0.5 * (z2 - t[i]) * (z2 - t[i]);
            }
            if (grad) {
                double delta = (classify ? sigmoid(z2) : z2) - t[i];
                grad->b_out += delta;
                for (int u = 0; u < h; ++u) {
                    grad->w_out[u] += delta * a[u];
                    double d1 = delta * q.w_out[u] * (1.0 - a[u] * a[u]);
                    grad->b_in[u] += d1;
                    double* gw = grad->w_in.data() + static_cast<std::size_t>(u) * d;
                    for (std::size_t j = 0; j < d; ++j) gw[j] += d1 * xi[j];
                }
            }
        }
        loss /= static_cast<double>(n);
        double reg = 0.0;
        for (double v : q.w_in) reg += v * v;
        for (double v : q.w_out) reg += v * v;
        loss += 0.5 * l2 * reg;
        if (grad) {
            const double inv_n = 1.0 / static_cast<double>(n);
            for (std::size_t k = 0; k < q.w_in.size(); ++k)
                grad->w_in[k] = grad->w_in[k] * inv_n + l2 * q.w_in[k];
            for (int u = 0; u < h; ++u) {
                grad->b_in[u] *= inv_n;
                grad->w_out[u] = grad->w_out[u] * inv_n + l2 * q.w_out[u];
            }
            grad->b_out *= inv_n;
        }
        return loss;
    };

    MlpParams grad, trial;
    double loss = objective(p, &grad);
    double lr = 0.5;
    for (int iter = 0; iter < cfg.mlp_iterations; ++iter) {
        double grad_sq = grad.b_out * grad.b_out;
        for (double v : grad.w_in) grad_sq += v * v;
        for (double v : grad.b_in) grad_sq += v * v;
        for (double v : grad.w_out) grad_sq += v * v;
        if (std::sqrt(grad_sq) < cfg.tolerance) break;
        bool accepted = false;
        for (int back = 0; back < 50; ++back) {
            trial = p;
            for (std::size_t k = 0; k < p.w_in.size(); ++k) trial.w_in[k] -= lr * grad.w_in[k];
            for (int u = 0; u < h; ++u) {
                trial.b_in[u] -= lr * grad.b_in[u];
                trial.w_out[u] -= lr * grad.w_out[u];
            }
            trial.b_out -= lr * grad.b_out;
            double trial_loss = objective(trial, nullptr);
            if (trial_loss <= loss - 1e-4 * lr * grad_sq) {
                p = std::move(trial);
                loss = trial_loss;
                accepted = true;
                break;
            }
            lr *= 0.5;
        }
        if (!accepted) break;
        loss = objective(p, &grad);
        lr = std::min(lr * 2.0, 64.0);
    }

    m.hidden = h;
    m.w_in = std::move(p.w_in);
    m.b_in = std::move(p.b_in);
    m.w_out = std::move(p.w_out);
    m.b_out = p.b_out;
}

}  // namespace

MetaModel train(const MetricsDataset& data, const TrainConfig& cfg) {
    if (data.rows() == 0) fail("InsufficientData", "training data is empty");
    std::vector<double> t = task_targets(data, cfg.task);
    if (cfg.task == MetaTask::classify_fp) {
        bool has_pos = false, has_neg = false;
        for (double v : t) (v != 0.0 ? has_pos : has_neg) = true;
        if (!has_pos || !has_neg)
            fail("DegenerateTargets", "classification needs both classes in training data");
    }

    MetaModel m;
    m.kind = cfg.kind;
    m.task = cfg.task;
    m.penalty = cfg.penalty;
    m.seed = cfg.seed;
    fit_standardization(data, cfg.feature_subset, m);
    DesignMatrix x = standardize(data, m);

    switch (cfg.kind) {
        case ModelKind::linear:
            if (cfg.task == MetaTask::classify_fp)
                fail("BadConfig", "linear model is the regression model; use logistic");
            if (cfg.penalty.kind == PenaltyKind::l1)
                fit_linear_l1(x, t, cfg, m);
            else
                fit_linear_closed_form(
                    x, t, cfg.penalty.kind == PenaltyKind::l2 ? cfg.penalty.lambda : 0.0, m);
            break;
        case ModelKind::logistic:
            if (cfg.task == MetaTask::regress_iou)
                fail("BadConfig", "logistic model is the classification model; use linear");
            fit_logistic(x, t, cfg, m);
            break;
        case ModelKind::gbt:
            fit_gbt(x, t, cfg, m);
            break;
        case ModelKind::mlp:
            fit_mlp(x, t, cfg, m);
            break;
    }
    return m;
}

std::vector<double> predict(const MetaModel& m, const MetricsDataset& rows) {
    if (rows.feature_names != m.schema)
        fail("SchemaMismatch", "prediction rows do not match the training schema");
    DesignMatrix x = standardize(rows, m);
    std::vector<double> out(x.n);
    switch (m.kind) {
        case ModelKind::linear:
        case ModelKind::logistic:
            for (std::size_t i = 0; i < x.n; ++i) {
                const double* xi = x.row(i);
                double z = m.bias;
                for (std::size_t j = 0; j < x.d; ++j) z += m.weights[j] * xi[j];
                out[i] = m.kind == ModelKind::logistic ? sigmoid(z) : std::clamp(z, 0.0, 1.0);
            }
            break;
        case ModelKind::gbt:
            for (std::size_t i = 0; i < x.n; ++i) {
                double z = m.gbt_base;
                for (const Tree& tree : m.trees) z += m.gbt_learning_rate * tree.eval(x.row(i));
                out[i] = m.task == MetaTask::classify_fp ? sigmoid(z) : std::clamp(z, 0.0, 1.0);
            }
            break;
        case ModelKind::mlp:
            for (std::size_t i = 0; i < x.n; ++i) {
                const double* xi = x.row(i);
                double z2 = m.b_out;
                for (int u = 0; u < m.hidden; ++u) {
                    const double* wu = m.w_in.data() + static_cast<std::size_t>(u) * x.d;
                    double z1 = m.b_in[u];
                    for (std::size_t j = 0; j < x.d; ++j) z1 += wu[j] * xi[j];
                    z2 += m.w_out[u] * std::tanh(z1);
                }
                out[i] = m.task == MetaTask::classify_fp ? sigmoid(z2) : std::clamp(z2, 0.0, 1.0);
            }
            break;
    }
    return out;
}

double auroc(std::span<const double> scores, std::span<const uint8_t> labels) {
    if (scores.size() != labels.size()) fail("ShapeMismatch", "scores and labels differ in length");
    std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double pos = 0.0, neg = 0.0, rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]]) {
                pos += 1.0;
                rank_sum_pos += avg_rank;
            } else {
                neg += 1.0;
            }
        }
        i = j;
    }
    if (pos == 0.0 || neg == 0.0) fail("SingleClass", "auroc needs both classes");
    return (rank_sum_pos - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

double accuracy(std::span<const double> scores, std::span<const uint8_t> labels,
                double threshold) {
    if (scores.empty()) fail("InsufficientData", "accuracy of an empty sample");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if ((scores[i] >= threshold) == (labels[i] != 0)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(scores.size());
}

double r_squared(std::span<const double> predicted, std::span<const double> actual) {
    if (predicted.size() != actual.size() || predicted.empty())
        fail("InsufficientData", "r2 needs matching non-empty samples");
    double mean = 0.0;
    for (double v : actual) mean += v;
    mean /= static_cast<double>(actual.size());
    double sse = 0.0, sst = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        sse += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
        sst += (actual[i] - mean) * (actual[i] - mean);
    }
    if (sst == 0.0) fail("DegenerateTargets", "r2 undefined for a constant target");
    return 1.0 - sse / sst;
}

double rmse(std::span<const double> predicted, std::span<const double> actual) {
    if (predicted.size() != actual.size() || predicted.empty())
        fail("InsufficientData", "rmse needs matching non-empty samples");
    double sse = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i)
        sse += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
    return std::sqrt(sse / static_cast<double>(actual.size()));
}

MetricSummary summarize(std::vector<double> values) {
    MetricSummary s;
    s.values = std::move(values);
    if (s.values.empty()) return s;
    for (double v : s.values) s.mean += v;
    s.mean /= static_cast<double>(s.values.size());
    if (s.values.size() > 1) {
        double var = 0.0;
        for (double v : s.values) var += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(var / static_cast<double>(s.values.size() - 1));
    }
    return s;
}

EvaluationReport evaluate(const MetricsDataset& data, const TrainConfig& cfg, int n_runs,
                          uint64_t base_seed, double train_fraction) {
    if (data.rows() < 2) fail("InsufficientData", "evaluation needs at least two rows");
    if (n_runs < 1) fail("InsufficientData", "evaluation needs at least one run");

    EvaluationReport report;
    report.task = cfg.task;
    report.runs = n_runs;
    report.base_seed = base_seed;
    std::vector<double> acc_tr, acc_te, auc_tr, auc_te, r2_tr, r2_te, sg_tr, sg_te;

    const std::size_t n = data.rows();
    for (int run = 0; run < n_runs; ++run) {
        Rng rng(base_seed + static_cast<uint64_t>(run));
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t i = n; i-- > 1;)
            std::swap(order[i], order[rng.uniform_int(i + 1)]);
        std::size_t n_train = static_cast<std::size_t>(
            std::floor(static_cast<double>(n) * train_fraction));
        n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
        std::vector<std::size_t> train_idx(order.begin(), order.begin() + n_train);
        std::vector<std::size_t> test_idx(order.begin() + n_train, order.end());
        MetricsDataset train_split = data.select_rows(train_idx);
        MetricsDataset test_split = data.select_rows(test_idx);

        TrainConfig run_cfg = cfg;
        run_cfg.seed = base_seed + static_cast<uint64_t>(run);
        MetaModel model = train(train_split, run_cfg);
        std::vector<double> score_tr = predict(model, train_split);
        std::vector<double> score_te = predict(model, test_split);

        if (cfg.task == MetaTask::classify_fp) {
            acc_tr.push_back(accuracy(score_tr, train_split.target_fp));
            acc_te.push_back(accuracy(score_te, test_split.target_fp));
            auc_tr.push_back(auroc(score_tr, train_split.target_fp));
            auc_te.push_back(auroc(score_te, test_split.target_fp));
        } else {
            r2_tr.push_back(r_squared(score_tr, train_split.target_iou));
            r2_te.push_back(r_squared(score_te, test_split.target_iou));
            sg_tr.push_back(rmse(score_tr, train_split.target_iou));
            sg_te.push_back(rmse(score_te, test_split.target_iou));
        }
    }
    report.acc_train = summarize(std::move(acc_tr));
    report.acc_test = summarize(std::move(acc_te));
    report.auroc_train = summarize(std::move(auc_tr));
    report.auroc_test = summarize(std::move(auc_te));
    report.r2_train = summarize(std::move(r2_tr));
    report.r2_test = summarize(std::move(r2_te));
    report.sigma_train = summarize(std::move(sg_tr));
    report.sigma_test = summarize(std::move(sg_te));
    return report;
}

std::vector<double> naive_random_scores(std::size_t n, uint64_t seed) {
    Rng rng(mix64(seed, 0xba5e));
    std::vector<double> scores(n);
    for (double& v : scores) v = rng.uniform();
    return scores;
}

namespace {

json summary_to_json(const MetricSummary& s) {
    return json{{"values", s.values}, {"mean", s.mean}, {"stddev", s.stddev}};
}

json tree_to_json(const Tree& t) {
    json nodes = json::array();
    for (const TreeNode& n : t.nodes)
        nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
    return nodes;
}

Tree tree_from_json(const json& j) {
    Tree t;
    for (const json& n : j) {
        TreeNode node;
        node.feature = n.at(0).get<int>();
        node.threshold = n.at(1).get<double>();
        node.left = n.at(2).get<int>();
        node.right = n.at(3).get<int>();
        node.value = n.at(4).get<double>();
        t.nodes.push_back(node);
    }
    return t;
}

}  // namespace

std::string EvaluationReport::to_json() const {
    json j{{"task", task_name(task)}, {"runs", runs}, {"base_seed", base_seed}};
    if (task == MetaTask::classify_fp) {
        j["acc"] = {{"train", summary_to_json(acc_train)}, {"test", summary_to_json(acc_test)}};
        j["auroc"] = {{"train", summary_to_json(auroc_train)},
                      {"test", summary_to_json(auroc_test)}};
    } else {
        j["r2"] = {{"train", summary_to_json(r2_train)}, {"test", summary_to_json(r2_test)}};
        j["sigma"] = {{"train", summary_to_json(sigma_train)},
                      {"test", summary_to_json(sigma_test)}};
    }
    return j.dump(2);
}

std::string MetaModel::to_json() const {
    json j;
    j["kind"] = model_kind_name(kind);
    j["task"] = task_name(task);
    j["penalty"] = {{"kind", penalty_name(penalty.kind)}, {"lambda", penalty.lambda}};
    j["seed"] = seed;
    j["schema"] = schema;
    j["active"] = active;
    j["mean"] = mean;
    j["stddev"] = stddev;
    switch (kind) {
        case ModelKind::linear:
        case ModelKind::logistic:
            j["weights"] = weights;
            j["bias"] = bias;
            break;
        case ModelKind::gbt: {
            j["base"] = gbt_base;
            j["learning_rate"] = gbt_learning_rate;
            json trees_json = json::array();
            for (const Tree& t : trees) trees_json.push_back(tree_to_json(t));
            j["trees"] = std::move(trees_json);
            j["stage_losses"] = stage_losses;
            break;
        }
        case ModelKind::mlp:
            j["hidden"] = hidden;
            j["w_in"] = w_in;
            j["b_in"] = b_in;
            j["w_out"] = w_out;
            j["b_out"] = b_out;
            break;
    }
    return j.dump(2);
}

MetaModel MetaModel::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail("HeaderMalformed", std::string("model json malformed: ") + e.what());
    }
    try {
        MetaModel m;
        m.kind = model_kind_from_name(j.at("kind").get<std::string>());
        m.task = task_from_name(j.at("task").get<std::string>());
        m.penalty.kind = penalty_from_name(j.at("penalty").at("kind").get<std::string>());
        m.penalty.lambda = j.at("penalty").at("lambda").get<double>();
        m.seed = j.at("seed").get<uint64_t>();
        m.schema = j.at("schema").get<std::vector<std::string>>();
        m.active = j.at("active").get<std::vector<int>>();
        m.mean = j.at("mean").get<std::vector<double>>();
        m.stddev = j.at("stddev").get<std::vector<double>>();
        switch (m.kind) {
            case ModelKind::linear:
            case ModelKind::logistic:
                m.weights = j.at("weights").get<std::vector<double>>();
                m.bias = j.at("bias").get<double>();
                break;
            case ModelKind::gbt:
                m.gbt_base = j.at("base").get<double>();
                m.gbt_learning_rate = j.at("learning_rate").get<double>();
                for (const json& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
                m.stage_losses = j.at("stage_losses").get<std::vector<double>>();
                break;
            case ModelKind::mlp:
                m.hidden = j.at("hidden").get<int>();
                m.w_in = j.at("w_in").get<std::vector<double>>();
                m.b_in = j.at("b_in").get<std::vector<double>>();
                m.w_out = j.at("w_out").get<std::vector<double>>();
                m.b_out = j.at("b_out").get<double>();
                break;
        }
        return m;
    } catch (const json::exception& e) {
        fail("HeaderMalformed", std::string("model json incomplete: ") + e.what());
    }
}

void MetaModel::save(const std::string& path) const {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) fail_io("IoFailure", "cannot open '" + tmp + "' for writing");
        out << to_json() << '\n';
        if (!out) fail_io("IoFailure", "write to '" + tmp + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) fail_io("IoFailure", "cannot move '" + tmp + "' to '" + path + "'");
}

MetaModel MetaModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail_io("IoFailure", "cannot open '" + path + "' for reading");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json(text);
}

}  // namespace segmeta
