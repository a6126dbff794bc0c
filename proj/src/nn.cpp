#include "pnclab/nn.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "pnclab/errors.hpp"
#include "pnclab/rng.hpp"

namespace pnclab {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

Matrix apply_activation(Activation kind, const Matrix& x) {
    Matrix y = x;
    switch (kind) {
        case Activation::Relu:
            for (double& v : y.data) v = v > 0.0 ? v : 0.0;
            break;
        case Activation::Tanh:
            for (double& v : y.data) v = std::tanh(v);
            break;
        case Activation::Sigmoid:
            for (double& v : y.data) v = sigmoid(v);
            break;
        case Activation::Linear:
            break;
    }
    return y;
}

// x = layer input, y = layer output, g = upstream gradient.
Matrix activation_backward(Activation kind, const Matrix& x, const Matrix& y,
                           const Matrix& g) {
    Matrix out = g;
    switch (kind) {
        case Activation::Relu:
            for (size_t i = 0; i < out.data.size(); ++i) {
                if (x.data[i] <= 0.0) out.data[i] = 0.0;
            }
            break;
        case Activation::Tanh:
            for (size_t i = 0; i < out.data.size(); ++i) {
                out.data[i] *= 1.0 - y.data[i] * y.data[i];
            }
            break;
        case Activation::Sigmoid:
            for (size_t i = 0; i < out.data.size(); ++i) {
                out.data[i] *= y.data[i] * (1.0 - y.data[i]);
            }
            break;
        case Activation::Linear:
            break;
    }
    return out;
}

Matrix dense_forward(const DenseLayer& layer, const Matrix& x) {
    if (x.cols != layer.in_dim()) {
        throw ConfigError("dense layer expects " + std::to_string(layer.in_dim()) +
                          " inputs, got " + std::to_string(x.cols));
    }
    Matrix y = matmul(x, layer.weights);
    for (int r = 0; r < y.rows; ++r) {
        for (int c = 0; c < y.cols; ++c) y.at(r, c) += layer.bias[c];
    }
    return y;
}

Matrix power_norm_forward(const PowerNorm& layer, const Matrix& x) {
    if (layer.mode == PowerNorm::Mode::Calibrated) {
        return scale(x, layer.calibrated_scale);
    }
    const double p = mean_row_power(x);
    if (p <= 0.0) {
        throw InputError("power normalization of an all-zero batch is undefined");
    }
    return scale(x, 1.0 / std::sqrt(p));
}

Matrix power_norm_backward(const PowerNorm& layer, const Matrix& x, const Matrix& g) {
    if (layer.mode == PowerNorm::Mode::Calibrated) {
        return scale(g, layer.calibrated_scale);
    }
    // y = x / sqrt(P), P = mean per-row power; the batch statistic couples
    // every entry: dL/dx = s*g - (s^3 / rows) * <g, x> * x.
    const double p = mean_row_power(x);
    const double s = 1.0 / std::sqrt(p);
    const double coupling = s * s * s * dot(g, x) / x.rows;
    Matrix out = scale(g, s);
    axpy_in_place(out, -coupling, x);
    return out;
}

}  // namespace

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Linear: return "linear";
    }
    return "?";
}

Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::Relu;
    if (name == "tanh") return Activation::Tanh;
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "linear") return Activation::Linear;
    throw ConfigError("unknown activation '" + name + "'");
}

void MlpGradients::accumulate(const MlpGradients& other) {
    if (dense.size() != other.dense.size()) {
        throw ConfigError("gradient accumulation across different topologies");
    }
    for (size_t i = 0; i < dense.size(); ++i) {
        if (!other.dense[i].present) continue;
        if (!dense[i].present) {
            dense[i] = other.dense[i];
            continue;
        }
        add_in_place(dense[i].d_weights, other.dense[i].d_weights);
        for (size_t j = 0; j < dense[i].d_bias.size(); ++j) {
            dense[i].d_bias[j] += other.dense[i].d_bias[j];
        }
    }
}

double MlpGradients::max_abs() const {
    double m = 0.0;
    for (const auto& g : dense) {
        if (!g.present) continue;
        for (double v : g.d_weights.data) m = std::max(m, std::fabs(v));
        for (double v : g.d_bias) m = std::max(m, std::fabs(v));
    }
    return m;
}

int MlpNetwork::input_dim() const {
    for (const Layer& layer : layers_) {
        if (const auto* d = std::get_if<DenseLayer>(&layer)) return d->in_dim();
    }
    return -1;
}

int MlpNetwork::output_dim() const {
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
        if (const auto* d = std::get_if<DenseLayer>(&*it)) return d->out_dim();
    }
    return -1;
}

size_t MlpNetwork::parameter_count() const {
    size_t n = 0;
    for (const Layer& layer : layers_) {
        if (const auto* d = std::get_if<DenseLayer>(&layer)) {
            n += d->weights.size() + d->bias.size();
        }
    }
    return n;
}

bool MlpNetwork::has_power_norm() const {
    for (const Layer& layer : layers_) {
        if (std::holds_alternative<PowerNorm>(layer)) return true;
    }
    return false;
}

bool MlpNetwork::fully_calibrated() const {
    for (const Layer& layer : layers_) {
        if (const auto* p = std::get_if<PowerNorm>(&layer)) {
            if (p->mode != PowerNorm::Mode::Calibrated) return false;
        }
    }
    return true;
}

Matrix MlpNetwork::run_forward(const Matrix& input, ForwardTrace& trace,
                               size_t n_layers) const {
    if (input.rows < 1 || input.cols < 1) {
        throw ConfigError("network input must be a non-empty batch");
    }
    const int declared = input_dim();
    if (declared >= 0 && input.cols != declared) {
        throw ConfigError("network expects " + std::to_string(declared) +
                          " input columns, got " + std::to_string(input.cols));
    }
    trace.acts.clear();
    trace.acts.reserve(n_layers + 1);
    trace.acts.push_back(input);
    for (size_t i = 0; i < n_layers; ++i) {
        const Matrix& x = trace.acts.back();
        Matrix y;
        if (const auto* d = std::get_if<DenseLayer>(&layers_[i])) {
            y = dense_forward(*d, x);
        } else if (const auto* a = std::get_if<Activation>(&layers_[i])) {
            y = apply_activation(*a, x);
        } else {
            y = power_norm_forward(std::get<PowerNorm>(layers_[i]), x);
        }
        trace.acts.push_back(std::move(y));
    }
    trace.valid = true;
    return trace.acts.back();
}

MlpGradients MlpNetwork::run_backward(const ForwardTrace& trace, const Matrix& upstream,
                                      Matrix* input_grad, size_t n_layers) const {
    if (!trace.valid || trace.acts.size() != n_layers + 1) {
        throw StateError("backward called without a matching forward");
    }
    if (!upstream.same_shape(trace.acts.back())) {
        throw ConfigError("upstream gradient shape does not match forward output");
    }
    MlpGradients grads;
    grads.dense.resize(layers_.size());
    Matrix g = upstream;
    for (size_t i = n_layers; i-- > 0;) {
        const Matrix& x = trace.acts[i];
        const Matrix& y = trace.acts[i + 1];
        if (const auto* d = std::get_if<DenseLayer>(&layers_[i])) {
            auto& slot = grads.dense[i];
            slot.present = true;
            slot.d_weights = matmul_tn(x, g);
            slot.d_bias.assign(d->out_dim(), 0.0);
            for (int r = 0; r < g.rows; ++r) {
                for (int c = 0; c < g.cols; ++c) slot.d_bias[c] += g.at(r, c);
            }
            g = matmul_nt(g, d->weights);
        } else if (const auto* a = std::get_if<Activation>(&layers_[i])) {
            g = activation_backward(*a, x, y, g);
        } else {
            g = power_norm_backward(std::get<PowerNorm>(layers_[i]), x, g);
        }
    }
    if (input_grad) *input_grad = std::move(g);
    return grads;
}

size_t MlpNetwork::logit_layer_count() const {
    if (!layers_.empty()) {
        if (const auto* a = std::get_if<Activation>(&layers_.back())) {
            if (*a == Activation::Sigmoid) return layers_.size() - 1;
        }
    }
    return layers_.size();
}

const Matrix& MlpNetwork::forward(const Matrix& input) {
    run_forward(input, cache_, layers_.size());
    return cache_.acts.back();
}

MlpGradients MlpNetwork::backward(const Matrix& upstream, Matrix* input_grad) {
    MlpGradients grads = run_backward(cache_, upstream, input_grad, layers_.size());
    cache_.valid = false;  // one backward per forward
    return grads;
}

Matrix MlpNetwork::forward(const Matrix& input, ForwardTrace& trace) const {
    return run_forward(input, trace, layers_.size());
}

MlpGradients MlpNetwork::backward(const ForwardTrace& trace, const Matrix& upstream,
                                  Matrix* input_grad) const {
    return run_backward(trace, upstream, input_grad, layers_.size());
}

Matrix MlpNetwork::forward_logits(const Matrix& input, ForwardTrace& trace) const {
    return run_forward(input, trace, logit_layer_count());
}

MlpGradients MlpNetwork::backward_logits(const ForwardTrace& trace,
                                         const Matrix& upstream,
                                         Matrix* input_grad) const {
    return run_backward(trace, upstream, input_grad, logit_layer_count());
}

MlpNetwork init_network(const std::vector<int>& dims, Activation hidden_activation,
                        Activation output_activation, bool power_norm,
                        std::uint64_t seed) {
    if (dims.size() < 2) {
        throw ConfigError("init_network needs at least input and output dims");
    }
    for (int d : dims) {
        if (d < 1) throw ConfigError("network layer dims must be positive");
    }
    Rng rng(seed);
    std::vector<Layer> layers;
    const size_t n_dense = dims.size() - 1;
    for (size_t i = 0; i < n_dense; ++i) {
        DenseLayer d;
        d.weights = Matrix(dims[i], dims[i + 1]);
        const double bound = std::sqrt(6.0 / (dims[i] + dims[i + 1]));
        for (double& w : d.weights.data) w = rng.uniform(-bound, bound);
        d.bias.assign(dims[i + 1], 0.0);
        layers.emplace_back(std::move(d));
        layers.emplace_back(i + 1 < n_dense ? hidden_activation : output_activation);
    }
    if (power_norm) layers.emplace_back(PowerNorm{});
    return MlpNetwork(std::move(layers));
}

AdamState make_adam_state(const MlpNetwork& net, double learning_rate) {
    AdamState state;
    state.learning_rate = learning_rate;
    state.slots.resize(net.layers().size());
    for (size_t i = 0; i < net.layers().size(); ++i) {
        if (const auto* d = std::get_if<DenseLayer>(&net.layers()[i])) {
            auto& slot = state.slots[i];
            slot.m_weights = Matrix(d->in_dim(), d->out_dim());
            slot.v_weights = Matrix(d->in_dim(), d->out_dim());
            slot.m_bias.assign(d->bias.size(), 0.0);
            slot.v_bias.assign(d->bias.size(), 0.0);
        }
    }
    return state;
}

void adam_step(MlpNetwork& net, const MlpGradients& grads, AdamState& state) {
    if (grads.dense.size() != net.layers().size() ||
        state.slots.size() != net.layers().size()) {
        throw ConfigError("adam_step: gradient/state topology mismatch");
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));

    auto update = [&](double& param, double g, double& m, double& v) {
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g * g;
        const double m_hat = m / bc1;
        const double v_hat = v / bc2;
        param -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    };

    for (size_t i = 0; i < net.layers().size(); ++i) {
        auto* d = std::get_if<DenseLayer>(&net.layers()[i]);
        if (!d) continue;
        if (!grads.dense[i].present) {
            throw ConfigError("adam_step: missing gradient for dense layer " +
                              std::to_string(i));
        }
        const auto& g = grads.dense[i];
        auto& slot = state.slots[i];
        for (size_t j = 0; j < d->weights.data.size(); ++j) {
            update(d->weights.data[j], g.d_weights.data[j], slot.m_weights.data[j],
                   slot.v_weights.data[j]);
        }
        for (size_t j = 0; j < d->bias.size(); ++j) {
            update(d->bias[j], g.d_bias[j], slot.m_bias[j], slot.v_bias[j]);
        }
    }
}

double grad_check(const MlpNetwork& net, const Matrix& input, const ScalarLoss& loss,
                  double step) {
    if (step <= 0.0) throw ConfigError("grad_check step must be positive");

    MlpNetwork work = net;  // perturb a private copy
    ForwardTrace trace;
    const Matrix out = work.forward(input, trace);
    const Matrix upstream = loss.grad(out);
    Matrix analytic_input;
    const MlpGradients analytic = work.backward(trace, upstream, &analytic_input);

    auto loss_at = [&](const Matrix& in) {
        ForwardTrace t;
        return loss.value(work.forward(in, t));
    };

    double worst = 0.0;
    auto compare = [&](double fd, double an) {
        const double denom = std::max(std::fabs(fd), std::fabs(an));
        const double err = denom < 1e-8 ? std::fabs(fd - an) : std::fabs(fd - an) / denom;
        worst = std::max(worst, err);
    };
    auto probe = [&](double& param, double an) {
        const double saved = param;
        param = saved + step;
        const double up = loss_at(input);
        param = saved - step;
        const double down = loss_at(input);
        param = saved;
        compare((up - down) / (2.0 * step), an);
    };

    for (size_t i = 0; i < work.layers().size(); ++i) {
        auto* d = std::get_if<DenseLayer>(&work.layers()[i]);
        if (!d) continue;
        const auto& g = analytic.dense[i];
        for (size_t j = 0; j < d->weights.data.size(); ++j) {
            probe(d->weights.data[j], g.d_weights.data[j]);
        }
        for (size_t j = 0; j < d->bias.size(); ++j) {
            probe(d->bias[j], g.d_bias[j]);
        }
    }

    Matrix in = input;
    for (size_t j = 0; j < in.data.size(); ++j) {
        const double saved = in.data[j];
        in.data[j] = saved + step;
        const double up = loss_at(in);
        in.data[j] = saved - step;
        const double down = loss_at(in);
        in.data[j] = saved;
        compare((up - down) / (2.0 * step), analytic_input.data[j]);
    }
    return worst;
}

double relu_kink_margin(const MlpNetwork& net, const Matrix& input) {
    ForwardTrace trace;
    net.forward(input, trace);
    double margin = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < net.layers().size(); ++i) {
        const auto* a = std::get_if<Activation>(&net.layers()[i]);
        if (!a || *a != Activation::Relu) continue;
        for (double v : trace.acts[i].data) margin = std::min(margin, std::fabs(v));
    }
    return margin;
}

namespace {

constexpr int kWeightFormatVersion = 1;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Line-oriented reader that remembers its position for error messages.
struct LineReader {
    std::istream& in;
    std::string path;
    int line_no = 0;

    std::string next() {
        std::string line;
        if (!std::getline(in, line)) {
            throw ArtifactError(path, line_no, "unexpected end of file");
        }
        ++line_no;
        return line;
    }

    std::vector<double> next_doubles(size_t expect) {
        std::istringstream ss(next());
        std::vector<double> out;
        double v;
        while (ss >> v) out.push_back(v);
        if (out.size() != expect) {
            throw ArtifactError(path, line_no,
                                "expected " + std::to_string(expect) + " values, got " +
                                    std::to_string(out.size()));
        }
        return out;
    }
};

}  // namespace

void save_weights(const MlpNetwork& net, const std::string& path) {
    std::ostringstream out;
    out << "pnclab-weights " << kWeightFormatVersion << "\n";
    out << "layers " << net.layers().size() << "\n";
    for (const Layer& layer : net.layers()) {
        if (const auto* d = std::get_if<DenseLayer>(&layer)) {
            out << "dense " << d->in_dim() << " " << d->out_dim() << "\n";
            for (int r = 0; r < d->in_dim(); ++r) {
                for (int c = 0; c < d->out_dim(); ++c) {
                    out << (c ? " " : "") << fmt17(d->weights.at(r, c));
                }
                out << "\n";
            }
            for (size_t j = 0; j < d->bias.size(); ++j) {
                out << (j ? " " : "") << fmt17(d->bias[j]);
            }
            out << "\n";
        } else if (const auto* a = std::get_if<Activation>(&layer)) {
            out << "activation " << activation_name(*a) << "\n";
        } else {
            const auto& p = std::get<PowerNorm>(layer);
            if (p.mode == PowerNorm::Mode::Calibrated) {
                out << "powernorm calibrated " << fmt17(p.calibrated_scale) << "\n";
            } else {
                out << "powernorm batch\n";
            }
        }
    }
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot open '" + path + "' for writing");
    file << out.str();
    if (!file.flush()) throw IoError("failed writing '" + path + "'");
}

MlpNetwork load_weights(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open weight file '" + path + "'");
    LineReader reader{file, path};

    {
        std::istringstream ss(reader.next());
        std::string magic;
        int version = -1;
        ss >> magic >> version;
        if (magic != "pnclab-weights") {
            throw ArtifactError(path, reader.line_no, "not a pnclab weight file");
        }
        if (version != kWeightFormatVersion) {
            throw ArtifactError(path, reader.line_no,
                                "unsupported format version " + std::to_string(version));
        }
    }

    int n_layers = -1;
    {
        std::istringstream ss(reader.next());
        std::string tag;
        ss >> tag >> n_layers;
        if (tag != "layers" || n_layers < 0) {
            throw ArtifactError(path, reader.line_no, "malformed layer count");
        }
    }

    std::vector<Layer> layers;
    for (int i = 0; i < n_layers; ++i) {
        std::istringstream ss(reader.next());
        std::string tag;
        ss >> tag;
        if (tag == "dense") {
            int in_dim = 0, out_dim = 0;
            ss >> in_dim >> out_dim;
            if (in_dim < 1 || out_dim < 1) {
                throw ArtifactError(path, reader.line_no, "malformed dense dims");
            }
            DenseLayer d;
            d.weights = Matrix(in_dim, out_dim);
            for (int r = 0; r < in_dim; ++r) {
                std::vector<double> row = reader.next_doubles(out_dim);
                for (int c = 0; c < out_dim; ++c) d.weights.at(r, c) = row[c];
            }
            d.bias = reader.next_doubles(out_dim);
            layers.emplace_back(std::move(d));
        } else if (tag == "activation") {
            std::string name;
            ss >> name;
            try {
                layers.emplace_back(activation_from_name(name));
            } catch (const ConfigError& e) {
                throw ArtifactError(path, reader.line_no, e.what());
            }
        } else if (tag == "powernorm") {
            std::string mode;
            ss >> mode;
            PowerNorm p;
            if (mode == "batch") {
                p.mode = PowerNorm::Mode::BatchStatistic;
            } else if (mode == "calibrated") {
                p.mode = PowerNorm::Mode::Calibrated;
                if (!(ss >> p.calibrated_scale) || !(p.calibrated_scale > 0.0)) {
                    throw ArtifactError(path, reader.line_no, "malformed calibrated scale");
                }
            } else {
                throw ArtifactError(path, reader.line_no,
                                    "unknown powernorm mode '" + mode + "'");
            }
            layers.emplace_back(p);
        } else {
            throw ArtifactError(path, reader.line_no, "unknown layer tag '" + tag + "'");
        }
    }
    return MlpNetwork(std::move(layers));
}

}  // namespace pnclab
