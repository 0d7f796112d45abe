#include "divs/nnkernels.hpp"

#include <cmath>
#include <stdexcept>

#include "divs/parallel.hpp"
#include "divs/rng.hpp"

namespace divs {

std::vector<double> matvec(const Matrix& m, std::span<const double> x) {
    if (static_cast<int>(x.size()) != m.cols) {
        throw std::invalid_argument("matvec: vector length " + std::to_string(x.size()) +
                                    " does not match matrix columns " + std::to_string(m.cols));
    }
    std::vector<double> y(static_cast<std::size_t>(m.rows), 0.0);
    for (int r = 0; r < m.rows; ++r) {
        double acc = 0.0;
        for (int c = 0; c < m.cols; ++c) acc += m.at(r, c) * x[static_cast<std::size_t>(c)];
        y[static_cast<std::size_t>(r)] = acc;
    }
    return y;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double apply_activation(Activation f, double z) {
    switch (f) {
        case Activation::Identity: return z;
        case Activation::Sigmoid: return sigmoid(z);
        case Activation::Relu: return z > 0.0 ? z : 0.0;
    }
    throw std::logic_error("unknown activation");
}

double activation_derivative(Activation f, double a) {
    switch (f) {
        case Activation::Identity: return 1.0;
        case Activation::Sigmoid: return a * (1.0 - a);
        case Activation::Relu: return a > 0.0 ? 1.0 : 0.0;
    }
    throw std::logic_error("unknown activation");
}

Activation activation_from_string(const std::string& name) {
    if (name == "identity") return Activation::Identity;
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "relu") return Activation::Relu;
    throw std::invalid_argument("unknown activation: " + name);
}

std::string to_string(Activation f) {
    switch (f) {
        case Activation::Identity: return "identity";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Relu: return "relu";
    }
    return "?";
}

// --- convolution -------------------------------------------------------------

TensorShape conv_output_shape(const TensorShape& x, const TensorShape& f, int padding,
                              int stride) {
    if (padding < 0) throw std::invalid_argument("conv: padding must be >= 0");
    if (stride < 1) throw std::invalid_argument("conv: stride must be >= 1");
    if (x.depth != f.depth) {
        throw std::invalid_argument("conv: input depth " + std::to_string(x.depth) +
                                    " does not match filter depth " + std::to_string(f.depth));
    }
    const int h_span = x.height - f.height + 2 * padding;
    const int w_span = x.width - f.width + 2 * padding;
    if (h_span < 0 || w_span < 0) {
        throw std::invalid_argument("conv: filter " + f.to_string() +
                                    " larger than padded input " + x.to_string() +
                                    " with padding " + std::to_string(padding));
    }
    if (h_span % stride != 0) {
        throw std::invalid_argument("conv: output height (" + std::to_string(x.height) + "-" +
                                    std::to_string(f.height) + "+2*" + std::to_string(padding) +
                                    ")/" + std::to_string(stride) + "+1 is not integral");
    }
    if (w_span % stride != 0) {
        throw std::invalid_argument("conv: output width (" + std::to_string(x.width) + "-" +
                                    std::to_string(f.width) + "+2*" + std::to_string(padding) +
                                    ")/" + std::to_string(stride) + "+1 is not integral");
    }
    return TensorShape{x.depth, h_span / stride + 1, w_span / stride + 1};
}

ConvRegion conv_area(int i, int j, int stride, const TensorShape& f) {
    ConvRegion r;
    r.r_s = i * stride;
    r.c_s = j * stride;
    r.r_e = r.r_s + f.height;
    r.c_e = r.c_s + f.width;
    return r;
}

ConvPlan build_conv_plan(const TensorShape& x, const TensorShape& f, int padding, int stride) {
    ConvPlan plan;
    plan.output = conv_output_shape(x, f, padding, stride);
    plan.task_count = plan.output.elements();
    plan.regions.reserve(plan.task_count);
    for (int d = 0; d < plan.output.depth; ++d) {
        for (int i = 0; i < plan.output.height; ++i) {
            for (int j = 0; j < plan.output.width; ++j) {
                plan.regions.push_back(conv_area(i, j, stride, f));
            }
        }
    }
    return plan;
}

Tensor3 conv_forward(const Tensor3& x, const ConvSpec& spec, int workers) {
    const TensorShape out_shape =
        conv_output_shape(x.shape(), spec.filter.shape(), spec.padding, spec.stride);
    Tensor3 out(out_shape);

    const int h_a = out_shape.height;
    const int w_a = out_shape.width;
    const int h_f = spec.filter.shape().height;
    const int w_f = spec.filter.shape().width;
    const int pad = spec.padding;
    const int stride = spec.stride;

    auto* result = out.data().data();
    parallel_for(out_shape.elements(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t task = begin; task < end; ++task) {
            const int j = static_cast<int>(task % static_cast<std::size_t>(w_a));
            const int i = static_cast<int>((task / static_cast<std::size_t>(w_a)) %
                                           static_cast<std::size_t>(h_a));
            const int d = static_cast<int>(task / (static_cast<std::size_t>(w_a) *
                                                   static_cast<std::size_t>(h_a)));
            double acc = 0.0;
            for (int u = 0; u < h_f; ++u) {
                for (int v = 0; v < w_f; ++v) {
                    acc += x.at_padded(d, i * stride + u - pad, j * stride + v - pad) *
                           spec.filter.at(d, u, v);
                }
            }
            result[task] = acc;
        }
    });
    return out;
}

// --- pooling ------------------------------------------------------------------

TensorShape pool_output_shape(const TensorShape& s, int window, int stride) {
    if (window < 1 || stride < 1) {
        throw std::invalid_argument("pool: window and stride must be >= 1");
    }
    const int h_span = s.height - window;
    const int w_span = s.width - window;
    if (h_span < 0 || w_span < 0 || h_span % stride != 0 || w_span % stride != 0) {
        throw std::invalid_argument("pool: dimensions " + s.to_string() +
                                    " not divisible by window " + std::to_string(window) +
                                    " stride " + std::to_string(stride));
    }
    return TensorShape{s.depth, h_span / stride + 1, w_span / stride + 1};
}

Tensor3 pool_forward(const Tensor3& a, int window, int stride) {
    const TensorShape out_shape = pool_output_shape(a.shape(), window, stride);
    Tensor3 out(out_shape);
    for (int d = 0; d < out_shape.depth; ++d) {
        for (int i = 0; i < out_shape.height; ++i) {
            for (int j = 0; j < out_shape.width; ++j) {
                double best = a.at(d, i * stride, j * stride);
                for (int u = 0; u < window; ++u) {
                    for (int v = 0; v < window; ++v) {
                        best = std::max(best, a.at(d, i * stride + u, j * stride + v));
                    }
                }
                out.at(d, i, j) = best;
            }
        }
    }
    return out;
}

// --- fully-connected ----------------------------------------------------------

double fc_neuron(std::span<const double> inputs, std::span<const double> weights, double bias,
                 Activation activation) {
    if (inputs.size() != weights.size()) {
        throw std::invalid_argument("fc_neuron: input length " + std::to_string(inputs.size()) +
                                    " does not match weight length " +
                                    std::to_string(weights.size()));
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < inputs.size(); ++j) acc += weights[j] * inputs[j];
    return apply_activation(activation, acc + bias);
}

std::vector<double> fc_layer_forward(const FcLayer& layer, std::span<const double> inputs,
                                     int workers) {
    if (layer.in_size() == 0 || layer.out_size() == 0) {
        throw std::invalid_argument("fc_layer_forward: zero-size layer");
    }
    if (static_cast<int>(inputs.size()) != layer.in_size()) {
        throw std::invalid_argument("fc_layer_forward: input length " +
                                    std::to_string(inputs.size()) + " does not match layer " +
                                    std::to_string(layer.in_size()));
    }
    std::vector<double> out(static_cast<std::size_t>(layer.out_size()), 0.0);
    parallel_for(out.size(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t n = begin; n < end; ++n) {
            const double* row = &layer.weights.a[n * static_cast<std::size_t>(layer.in_size())];
            out[n] = fc_neuron(inputs, std::span<const double>(row, inputs.size()), layer.bias,
                               layer.activation);
        }
    });
    return out;
}

int fc_max_parallelism(const std::vector<int>& layer_sizes) {
    if (layer_sizes.empty()) {
        throw std::invalid_argument("fc_max_parallelism: empty layer list");
    }
    int best = 0;
    for (int n : layer_sizes) {
        if (n < 1) throw std::invalid_argument("fc_max_parallelism: layer size must be >= 1");
        best = std::max(best, n);
    }
    return best;
}

std::vector<double> fc_stack_forward(const FcStack& stack, std::span<const double> input,
                                     int workers) {
    std::vector<double> cur(input.begin(), input.end());
    for (const auto& layer : stack) cur = fc_layer_forward(layer, cur, workers);
    return cur;
}

double fc_loss(const FcStack& stack, std::span<const double> input,
               std::span<const double> target) {
    const auto out = fc_stack_forward(stack, input);
    if (out.size() != target.size()) {
        throw std::invalid_argument("fc_loss: target length mismatch");
    }
    double loss = 0.0;
    for (std::size_t k = 0; k < out.size(); ++k) {
        const double e = out[k] - target[k];
        loss += 0.5 * e * e;
    }
    return loss;
}

FcGradients fc_gradients(const FcStack& stack, std::span<const double> input,
                         std::span<const double> target) {
    if (stack.empty()) throw std::invalid_argument("fc_gradients: empty stack");

    // Forward pass, keeping every layer's activation.
    std::vector<std::vector<double>> acts;
    acts.reserve(stack.size() + 1);
    acts.emplace_back(input.begin(), input.end());
    for (const auto& layer : stack) acts.push_back(fc_layer_forward(layer, acts.back()));

    const auto& out = acts.back();
    if (out.size() != target.size()) {
        throw std::invalid_argument("fc_gradients: target length mismatch");
    }

    FcGradients g;
    g.weight_grads.resize(stack.size());
    g.bias_grads.assign(stack.size(), 0.0);
    for (std::size_t k = 0; k < out.size(); ++k) {
        const double e = out[k] - target[k];
        g.loss += 0.5 * e * e;
    }

    // delta = dL/dz for the current layer.
    std::vector<double> delta(out.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        delta[k] = (out[k] - target[k]) *
                   activation_derivative(stack.back().activation, out[k]);
    }

    for (std::size_t li = stack.size(); li-- > 0;) {
        const auto& layer = stack[li];
        const auto& x = acts[li];
        Matrix& dw = g.weight_grads[li];
        dw = Matrix(layer.out_size(), layer.in_size());
        double db = 0.0;
        for (int n = 0; n < layer.out_size(); ++n) {
            const double d = delta[static_cast<std::size_t>(n)];
            db += d;
            for (int c = 0; c < layer.in_size(); ++c) {
                dw.at(n, c) = d * x[static_cast<std::size_t>(c)];
            }
        }
        g.bias_grads[li] = db;

        if (li > 0) {
            const auto& prev_layer = stack[li - 1];
            std::vector<double> prev_delta(x.size(), 0.0);
            for (std::size_t c = 0; c < x.size(); ++c) {
                double acc = 0.0;
                for (int n = 0; n < layer.out_size(); ++n) {
                    acc += layer.weights.at(n, static_cast<int>(c)) *
                           delta[static_cast<std::size_t>(n)];
                }
                prev_delta[c] =
                    acc * activation_derivative(prev_layer.activation, x[c]);
            }
            delta = std::move(prev_delta);
        }
    }
    return g;
}

double fc_backprop_step(FcStack& stack, std::span<const double> input,
                        std::span<const double> target, double learning_rate) {
    const FcGradients g = fc_gradients(stack, input, target);
    for (std::size_t li = 0; li < stack.size(); ++li) {
        auto& layer = stack[li];
        const auto& dw = g.weight_grads[li];
        for (std::size_t k = 0; k < layer.weights.a.size(); ++k) {
            layer.weights.a[k] -= learning_rate * dw.a[k];
        }
        layer.bias -= learning_rate * g.bias_grads[li];
    }
    return g.loss;
}

std::size_t fc_stack_param_count(const FcStack& stack) {
    std::size_t n = 0;
    for (const auto& layer : stack) n += layer.weights.a.size() + 1;
    return n;
}

std::vector<std::string> fc_stack_param_names(const FcStack& stack, const std::string& prefix) {
    std::vector<std::string> names;
    names.reserve(fc_stack_param_count(stack));
    for (std::size_t li = 0; li < stack.size(); ++li) {
        const auto& layer = stack[li];
        const std::string base = prefix + ".fc" + std::to_string(li);
        for (int r = 0; r < layer.out_size(); ++r) {
            for (int c = 0; c < layer.in_size(); ++c) {
                names.push_back(base + ".w." + std::to_string(r) + "." + std::to_string(c));
            }
        }
        names.push_back(base + ".b");
    }
    return names;
}

std::vector<double> fc_stack_get_params(const FcStack& stack) {
    std::vector<double> params;
    params.reserve(fc_stack_param_count(stack));
    for (const auto& layer : stack) {
        params.insert(params.end(), layer.weights.a.begin(), layer.weights.a.end());
        params.push_back(layer.bias);
    }
    return params;
}

void fc_stack_set_params(FcStack& stack, std::span<const double> params) {
    if (params.size() != fc_stack_param_count(stack)) {
        throw std::invalid_argument("fc_stack_set_params: expected " +
                                    std::to_string(fc_stack_param_count(stack)) +
                                    " params, got " + std::to_string(params.size()));
    }
    std::size_t pos = 0;
    for (auto& layer : stack) {
        for (auto& w : layer.weights.a) w = params[pos++];
        layer.bias = params[pos++];
    }
}

// --- LSTM ----------------------------------------------------------------------

namespace {

void check_lstm_dims(const LstmParams& p) {
    const int z = p.input_size + p.hidden_size;
    auto check = [&](const Matrix& m, int rows, int cols, const char* name) {
        if (m.rows != rows || m.cols != cols) {
            throw std::invalid_argument(std::string("lstm: ") + name + " must be " +
                                        std::to_string(rows) + "x" + std::to_string(cols) +
                                        ", got " + std::to_string(m.rows) + "x" +
                                        std::to_string(m.cols));
        }
    };
    check(p.w_i, p.hidden_size, z, "W_i");
    check(p.w_f, p.hidden_size, z, "W_f");
    check(p.w_c, p.hidden_size, z, "W_C");
    check(p.w_xo, p.hidden_size, p.input_size, "W_xo");
    check(p.w_ho, p.hidden_size, p.hidden_size, "W_ho");
    const std::size_t h = static_cast<std::size_t>(p.hidden_size);
    if (p.b_i.size() != h || p.b_f.size() != h || p.b_c.size() != h) {
        throw std::invalid_argument("lstm: bias length does not match hidden size");
    }
    if (p.output_gate_bias && p.b_o.size() != h) {
        throw std::invalid_argument("lstm: output-gate bias length does not match hidden size");
    }
}

}  // namespace

LstmStep lstm_cell(std::span<const double> x, std::span<const double> h_prev,
                   std::span<const double> c_prev, const LstmParams& p) {
    check_lstm_dims(p);
    if (static_cast<int>(x.size()) != p.input_size ||
        static_cast<int>(h_prev.size()) != p.hidden_size ||
        static_cast<int>(c_prev.size()) != p.hidden_size) {
        throw std::invalid_argument("lstm_cell: state dimensions do not match params");
    }

    std::vector<double> z;
    z.reserve(x.size() + h_prev.size());
    z.insert(z.end(), x.begin(), x.end());
    z.insert(z.end(), h_prev.begin(), h_prev.end());

    const std::size_t h = static_cast<std::size_t>(p.hidden_size);
    LstmStep step;
    step.gates.input = matvec(p.w_i, z);
    step.gates.forget = matvec(p.w_f, z);
    step.gates.candidate = matvec(p.w_c, z);
    const auto o_x = matvec(p.w_xo, x);
    const auto o_h = matvec(p.w_ho, h_prev);

    step.gates.output.resize(h);
    step.h.resize(h);
    step.c.resize(h);
    for (std::size_t k = 0; k < h; ++k) {
        step.gates.input[k] = sigmoid(step.gates.input[k] + p.b_i[k]);
        step.gates.forget[k] = sigmoid(step.gates.forget[k] + p.b_f[k]);
        const double o_pre = o_x[k] + o_h[k] + (p.output_gate_bias ? p.b_o[k] : 0.0);
        step.gates.output[k] = sigmoid(o_pre);
        step.gates.candidate[k] = std::tanh(step.gates.candidate[k] + p.b_c[k]);
        step.c[k] = step.gates.forget[k] * c_prev[k] + step.gates.input[k] * step.gates.candidate[k];
        step.h[k] = step.gates.output[k] * std::tanh(step.c[k]);
    }
    return step;
}

std::vector<double> lstm_forward(const LstmModel& model,
                                 const std::vector<std::vector<double>>& sequence) {
    if (sequence.empty()) throw std::invalid_argument("lstm_forward: empty sequence");
    const std::size_t h = static_cast<std::size_t>(model.params.hidden_size);
    std::vector<double> h_t(h, 0.0), c_t(h, 0.0);
    for (const auto& x : sequence) {
        LstmStep step = lstm_cell(x, h_t, c_t, model.params);
        h_t = std::move(step.h);
        c_t = std::move(step.c);
    }
    return fc_layer_forward(model.output, h_t);
}

// --- CNN model -----------------------------------------------------------------

TensorShape CnnModel::feature_shape() const {
    TensorShape s = conv_output_shape(input, conv1.filter.shape(), conv1.padding, conv1.stride);
    s = pool_output_shape(s, pool1.window, pool1.stride);
    s = conv_output_shape(s, conv2.filter.shape(), conv2.padding, conv2.stride);
    return pool_output_shape(s, pool2.window, pool2.stride);
}

std::vector<double> CnnModel::features(const Tensor3& frame, int workers) const {
    Tensor3 a = conv_forward(frame, conv1, workers);
    a = pool_forward(a, pool1.window, pool1.stride);
    a = conv_forward(a, conv2, workers);
    a = pool_forward(a, pool2.window, pool2.stride);
    return a.flatten();
}

std::vector<double> cnn_forward(const CnnModel& model, const Frame& frame, int workers) {
    if (!(frame.tensor.shape() == model.input)) {
        throw std::invalid_argument("cnn_forward: frame shape " +
                                    frame.tensor.shape().to_string() +
                                    " does not match model input " + model.input.to_string());
    }
    return fc_stack_forward(model.head, model.features(frame.tensor, workers), workers);
}

// --- seeded construction ---------------------------------------------------------

Matrix random_matrix(int rows, int cols, std::uint64_t seed, double lo, double hi) {
    Matrix m(rows, cols);
    CounterRng rng(seed);
    for (std::size_t k = 0; k < m.a.size(); ++k) m.a[k] = rng.uniform(k, lo, hi);
    return m;
}

namespace {

Tensor3 random_filter(const TensorShape& shape, std::uint64_t seed) {
    Tensor3 f(shape);
    CounterRng rng(seed);
    auto& data = f.data();
    for (std::size_t k = 0; k < data.size(); ++k) data[k] = rng.uniform(k, -0.5, 0.5);
    return f;
}

FcStack make_fc_stack(int input_size, const std::vector<int>& sizes, Activation hidden,
                      Activation final_act, std::uint64_t seed) {
    FcStack stack;
    int in = input_size;
    for (std::size_t li = 0; li < sizes.size(); ++li) {
        FcLayer layer;
        layer.weights = random_matrix(sizes[li], in, CounterRng::derive(seed, li));
        layer.bias = 0.0;
        layer.activation = (li + 1 == sizes.size()) ? final_act : hidden;
        in = sizes[li];
        stack.push_back(std::move(layer));
    }
    return stack;
}

}  // namespace

CnnModel make_cnn_model(const TensorShape& input, const TensorShape& filter1, int padding1,
                        int stride1, const TensorShape& filter2, int padding2, int stride2,
                        const PoolSpec& pool, const std::vector<int>& fc_sizes,
                        std::uint64_t seed) {
    if (fc_sizes.size() != 3) {
        throw std::invalid_argument("make_cnn_model: the head takes exactly 3 FC sizes");
    }
    CnnModel m;
    m.input = input;
    m.conv1 = ConvSpec{random_filter(filter1, CounterRng::derive(seed, 101)), padding1, stride1};
    m.conv2 = ConvSpec{random_filter(filter2, CounterRng::derive(seed, 102)), padding2, stride2};
    m.pool1 = pool;
    m.pool2 = pool;
    // Validates the conv/pool chain; throws on an inconsistent configuration.
    const TensorShape feat = m.feature_shape();
    m.head = make_fc_stack(static_cast<int>(feat.elements()), fc_sizes, Activation::Sigmoid,
                           Activation::Sigmoid, CounterRng::derive(seed, 103));
    return m;
}

LstmModel make_lstm_model(int input_size, int hidden_size, int output_size,
                          bool output_gate_bias, std::uint64_t seed) {
    if (input_size < 1 || hidden_size < 1 || output_size < 1) {
        throw std::invalid_argument("make_lstm_model: sizes must be >= 1");
    }
    LstmModel m;
    auto& p = m.params;
    p.input_size = input_size;
    p.hidden_size = hidden_size;
    const int z = input_size + hidden_size;
    p.w_i = random_matrix(hidden_size, z, CounterRng::derive(seed, 201));
    p.w_f = random_matrix(hidden_size, z, CounterRng::derive(seed, 202));
    p.w_c = random_matrix(hidden_size, z, CounterRng::derive(seed, 203));
    p.w_xo = random_matrix(hidden_size, input_size, CounterRng::derive(seed, 204));
    p.w_ho = random_matrix(hidden_size, hidden_size, CounterRng::derive(seed, 205));
    CounterRng bias_rng(CounterRng::derive(seed, 206));
    p.b_i.resize(static_cast<std::size_t>(hidden_size));
    p.b_f.resize(static_cast<std::size_t>(hidden_size));
    p.b_c.resize(static_cast<std::size_t>(hidden_size));
    for (int k = 0; k < hidden_size; ++k) {
        p.b_i[static_cast<std::size_t>(k)] = bias_rng.uniform(static_cast<std::uint64_t>(3 * k), -0.5, 0.5);
        p.b_f[static_cast<std::size_t>(k)] = bias_rng.uniform(static_cast<std::uint64_t>(3 * k + 1), -0.5, 0.5);
        p.b_c[static_cast<std::size_t>(k)] = bias_rng.uniform(static_cast<std::uint64_t>(3 * k + 2), -0.5, 0.5);
    }
    p.output_gate_bias = output_gate_bias;
    if (output_gate_bias) p.b_o.assign(static_cast<std::size_t>(hidden_size), 0.0);

    m.output.weights = random_matrix(output_size, hidden_size, CounterRng::derive(seed, 207));
    m.output.bias = 0.0;
    m.output.activation = Activation::Identity;
    return m;
}

}  // namespace divs
